//! Online UCT search for the CAIM session problem with community-factored
//! statistics at every tree node.

use super::belief::{MarkovNetBelief, PhiSource};
use super::stats::{factored_action_select, update_factored_stats, Communities, FactoredStats, SelectInput};
use super::{caim_generative, ActionKind, CaimAction, CaimConfig, CaimObservation, CaimPolicy, CaimState, SessionView};
use crate::error::Result;
use crate::influence::{greedy_extend, SpreadOracle};
use crate::rng::{self, Rng};
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

const WARMUP: usize = 32;

/// Policy used below the tree's frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rollout {
    /// Uniformly random legal actions.
    Random,
    /// Invite the greedy best invitable nodes, retrying after failures,
    /// and end the session once nothing is left to try.
    Greedy,
}

/// What a tree node reports to its parent after a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backup {
    /// The sampled return.
    Mean,
    /// The node's best current estimate.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaimsParams {
    pub nsim: usize,
    /// Exploration constant; `None` estimates it from a warm-up.
    pub c: Option<f64>,
    /// Mixture weight per community; `None` means 1/ℓ.
    pub alpha: Option<f64>,
    pub rollout: Rollout,
    pub backup: Backup,
    /// Progressive widening: a node visited `v` times may have tried at
    /// most `1 + w·√v` distinct actions. `None` tries every sub-action
    /// before exploiting any.
    pub widening: Option<f64>,
}

impl Default for CaimsParams {
    fn default() -> Self {
        Self { nsim: 1000, c: None, alpha: None, rollout: Rollout::Greedy, backup: Backup::Max, widening: Some(1.0) }
    }
}

#[derive(Default)]
struct Node {
    stats: FactoredStats,
    children: HashMap<(CaimAction, CaimObservation), usize>,
    tried: HashSet<CaimAction>,
}

/// The CAIMS planner. Holds the prior belief, the community structure and
/// the spread oracle used for terminal rewards.
pub struct CaimsPlanner<'a> {
    pub cfg: CaimConfig,
    pub prior: MarkovNetBelief,
    pub comms: Communities,
    pub oracle: &'a dyn SpreadOracle,
    pub params: CaimsParams,
}

struct Search<'s, 'a> {
    planner: &'s CaimsPlanner<'a>,
    resample: &'s dyn PhiSource,
    nodes: Vec<Node>,
    c: f64,
    alpha: f64,
}

fn select_input(view: &SessionView, cfg: &CaimConfig, comms: &Communities, c: f64, alpha: f64, explore: bool) -> SelectInput {
    let open = view.num_act < cfg.l;
    SelectInput {
        allowed_query: comms.mask_where(|v| view.queryable(v)),
        allowed_invite: comms.mask_where(|v| view.invitable(v)),
        budget_query: if open { cfg.q_max } else { 0 },
        budget_invite: if open { cfg.k.saturating_sub(view.locked.len()) } else { 0 },
        end_allowed: true,
        c,
        alpha,
        explore,
        untried: true,
    }
}

/// A uniformly random legal action: first a kind, then a non-empty node set
/// of random size within its budget.
pub fn random_action(view: &SessionView, cfg: &CaimConfig, n: usize, rng: &mut Rng) -> CaimAction {
    let mut kinds = vec![ActionKind::End];
    let mut pools: HashMap<ActionKind, (Vec<usize>, usize)> = HashMap::new();
    if view.num_act < cfg.l {
        let q: Vec<usize> = (0..n).filter(|&v| view.queryable(v)).collect();
        if cfg.q_max > 0 && !q.is_empty() {
            kinds.push(ActionKind::Query);
            pools.insert(ActionKind::Query, (q, cfg.q_max));
        }
        let i: Vec<usize> = (0..n).filter(|&v| view.invitable(v)).collect();
        let budget = cfg.k.saturating_sub(view.locked.len());
        if budget > 0 && !i.is_empty() {
            kinds.push(ActionKind::Invite);
            pools.insert(ActionKind::Invite, (i, budget));
        }
    }
    let kind = kinds[rng.gen_range(0..kinds.len())];
    match pools.get(&kind) {
        None => CaimAction::end(),
        Some((pool, budget)) => {
            let size = rng.gen_range(1..=(*budget).min(pool.len()));
            let nodes = sample(rng, pool.len(), size).into_iter().map(|i| pool[i]).collect();
            match kind {
                ActionKind::Query => CaimAction::query(nodes),
                _ => CaimAction::invite(nodes),
            }
        }
    }
}

/// Invites the greedy completion of the locked set among invitable nodes;
/// ends the session when no invite is possible.
pub fn greedy_action(view: &SessionView, cfg: &CaimConfig, n: usize, oracle: &dyn SpreadOracle) -> CaimAction {
    let budget = cfg.k.saturating_sub(view.locked.len());
    if view.num_act >= cfg.l || budget == 0 {
        return CaimAction::end();
    }
    let eligible: Vec<bool> = (0..n).map(|v| view.invitable(v)).collect();
    let picks = greedy_extend(oracle, n, &view.locked, budget, Some(&eligible));
    if picks.is_empty() {
        CaimAction::end()
    } else {
        CaimAction::invite(picks)
    }
}

impl Search<'_, '_> {
    /// A new action to try at `node`, if widening allows one: the greedy
    /// action first, then ending the session, then random untried actions.
    fn widen(&self, node: usize, view: &SessionView, state: &CaimState, rng: &mut Rng) -> Option<CaimAction> {
        let w = self.planner.params.widening?;
        let n = &self.nodes[node];
        if n.tried.len() as f64 >= 1.0 + w * (n.stats.visits as f64).sqrt() {
            return None;
        }
        let cfg = &self.planner.cfg;
        let greedy = greedy_action(view, cfg, state.phi.len(), self.planner.oracle);
        if !n.tried.contains(&greedy) {
            return Some(greedy);
        }
        if !n.tried.contains(&CaimAction::end()) {
            return Some(CaimAction::end());
        }
        (0..16).map(|_| random_action(view, cfg, state.phi.len(), rng)).find(|a| !n.tried.contains(a))
    }

    fn terminal_value(&self, state: &CaimState) -> Option<f64> {
        let cfg = &self.planner.cfg;
        if state.is_terminal(cfg) || state.locked.len() >= cfg.k {
            Some(self.planner.oracle.spread(&state.locked))
        } else {
            None
        }
    }

    fn rollout(&self, mut state: CaimState, mut view: SessionView, rng: &mut Rng) -> Result<f64> {
        let cfg = &self.planner.cfg;
        loop {
            if let Some(v) = self.terminal_value(&state) {
                return Ok(v);
            }
            let a = match self.planner.params.rollout {
                Rollout::Random => random_action(&view, cfg, state.phi.len(), rng),
                Rollout::Greedy => greedy_action(&view, cfg, state.phi.len(), self.planner.oracle),
            };
            let (next, obs, _) = caim_generative(&state, &a, cfg, self.resample, self.planner.oracle, rng)?;
            view.apply(&a, &obs, cfg);
            state = next;
        }
    }

    fn simulate(&mut self, node: usize, state: CaimState, mut view: SessionView, rng: &mut Rng) -> Result<f64> {
        if let Some(v) = self.terminal_value(&state) {
            return Ok(v);
        }
        let cfg = self.planner.cfg;
        let mut inp = select_input(&view, &cfg, &self.planner.comms, self.c, self.alpha, true);
        let action = match self.widen(node, &view, &state, rng) {
            Some(a) => a,
            None => {
                inp.untried = self.planner.params.widening.is_none();
                match factored_action_select(&self.nodes[node].stats, &self.planner.comms, &inp) {
                    Some((a, _)) => a,
                    None => greedy_action(&view, &cfg, state.phi.len(), self.planner.oracle),
                }
            }
        };
        self.nodes[node].tried.insert(action.clone());
        let (next, obs, _) = caim_generative(&state, &action, &cfg, self.resample, self.planner.oracle, rng)?;
        view.apply(&action, &obs, &cfg);
        let key = (action.clone(), obs);
        let value = match self.nodes[node].children.get(&key) {
            Some(&child) => self.simulate(child, next, view, rng)?,
            None => {
                let id = self.nodes.len();
                self.nodes.push(Node { stats: FactoredStats::new(self.planner.comms.len()), ..Default::default() });
                self.nodes[node].children.insert(key, id);
                self.rollout(next, view, rng)?
            }
        };
        update_factored_stats(&mut self.nodes[node].stats, &self.planner.comms, &action, value);
        if self.planner.params.backup == Backup::Mean {
            return Ok(value);
        }
        // Report the node's best current estimate instead of the sampled
        // return, so exploration below does not drag ancestors down.
        let greedy = SelectInput { explore: false, c: 0.0, ..inp };
        Ok(match factored_action_select(&self.nodes[node].stats, &self.planner.comms, &greedy) {
            Some((_, best)) if best.is_finite() => best,
            _ => value,
        })
    }
}

impl<'a> CaimsPlanner<'a> {
    pub fn new(
        cfg: CaimConfig,
        prior: MarkovNetBelief,
        comms: Communities,
        oracle: &'a dyn SpreadOracle,
        params: CaimsParams,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, prior, comms, oracle, params })
    }

    /// Best action for the observable situation `view`.
    pub fn plan(&self, view: &SessionView, seed: u64) -> Result<CaimAction> {
        let cfg = &self.cfg;
        if view.is_terminal(cfg) {
            return Err(crate::error::Error::Contract("episode already finished".into()));
        }
        let alpha = self.params.alpha.unwrap_or(1.0 / self.comms.len().max(1) as f64);
        let posterior = self.prior.condition(&view.evidence)?.sampler();
        let resample = self.prior.prior().sampler();
        let mut search = Search {
            planner: self,
            resample: &resample,
            nodes: vec![Node { stats: FactoredStats::new(self.comms.len()), ..Default::default() }],
            c: self.params.c.unwrap_or(0.0),
            alpha,
        };
        let mut rng = rng::rng(seed);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for sim in 0..self.params.nsim.max(1) {
            if self.params.c.is_none() && sim == WARMUP.min(self.params.nsim) {
                search.c = if hi > lo { hi - lo } else { 1.0 };
            }
            let state = CaimState {
                phi: posterior.sample_phi(&mut rng),
                locked: view.locked.clone(),
                num_act: view.num_act,
                sess_id: view.sess_id,
            };
            let v = search.simulate(0, state, view.clone(), &mut rng)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let inp = select_input(view, cfg, &self.comms, 0.0, alpha, false);
        Ok(match factored_action_select(&search.nodes[0].stats, &self.comms, &inp) {
            Some((a, _)) => a,
            None => CaimAction::end(),
        })
    }
}

impl CaimPolicy for CaimsPlanner<'_> {
    fn name(&self) -> String {
        "caims".into()
    }

    fn act(&mut self, view: &SessionView, seed: u64) -> Result<CaimAction> {
        self.plan(view, seed)
    }
}
