//! Contingency-aware influence maximization. Over `t` sessions of at most
//! `l` actions each, the planner may query node availability or invite
//! nodes; available invitees accept with probability ε and become locked.
//! The reward is the expected influence spread of the final locked set.

pub mod alternates;
pub mod belief;
pub mod planner;
pub mod policies;
pub mod stats;
pub mod ve;

pub use alternates::{compute_alternates, factored_gap, factorization_error_bound};
pub use belief::{FixedPhi, GibbsSource, MarkovNet, MarkovNetBelief, PhiSource};
pub use planner::{CaimsParams, CaimsPlanner};
pub use policies::{GreedyPlusPolicy, GreedySessionPolicy};
pub use stats::{factored_action_select, partition_communities, update_factored_stats, Communities, FactoredStats, SelectInput};
pub use ve::{constrained_ve, constrained_ve_general, FactorTable, VeResult};

use crate::error::{Error, Result};
use crate::influence::SpreadOracle;
use crate::rng::{self, Rng};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaimConfig {
    /// Nodes to lock.
    pub k: usize,
    /// Actions per session.
    pub l: usize,
    /// Sessions.
    pub t: usize,
    /// Largest query.
    pub q_max: usize,
    /// Acceptance probability of an available invitee.
    pub epsilon: f64,
    /// Diffusion steps used for the spread reward.
    #[serde(default = "one")]
    pub spread_steps: usize,
}

fn one() -> usize {
    1
}

impl CaimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k", "must be positive"));
        }
        if self.l == 0 || self.t == 0 {
            return Err(Error::param("l", "sessions and actions per session must be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::param("epsilon", "must be a probability"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Query,
    Invite,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CaimAction {
    pub kind: ActionKind,
    pub nodes: Vec<usize>,
}

impl CaimAction {
    pub fn query(mut nodes: Vec<usize>) -> Self {
        nodes.sort_unstable();
        Self { kind: ActionKind::Query, nodes }
    }

    pub fn invite(mut nodes: Vec<usize>) -> Self {
        nodes.sort_unstable();
        Self { kind: ActionKind::Invite, nodes }
    }

    pub fn end() -> Self {
        Self { kind: ActionKind::End, nodes: Vec::new() }
    }
}

/// Hidden state: availability realization, locked set, actions taken in
/// the current session and the 1-based session index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaimState {
    pub phi: Vec<bool>,
    pub locked: Vec<usize>,
    pub num_act: usize,
    pub sess_id: usize,
}

impl CaimState {
    pub fn initial(phi: Vec<bool>) -> Self {
        Self { phi, locked: Vec::new(), num_act: 0, sess_id: 1 }
    }

    pub fn is_terminal(&self, cfg: &CaimConfig) -> bool {
        self.sess_id == cfg.t && self.num_act == cfg.l
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaimObservation {
    /// Availability bits of queried or invited nodes.
    pub availability: Vec<(usize, bool)>,
    /// Acceptance bits of available invitees.
    pub accepted: Vec<(usize, bool)>,
}

/// What the planner knows: the observable parts of the state plus what has
/// been learned in the current session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionView {
    pub locked: Vec<usize>,
    pub num_act: usize,
    pub sess_id: usize,
    pub evidence: BTreeMap<usize, bool>,
    pub declined: BTreeSet<usize>,
}

impl SessionView {
    pub fn start() -> Self {
        Self { sess_id: 1, ..Default::default() }
    }

    pub fn is_terminal(&self, cfg: &CaimConfig) -> bool {
        self.sess_id == cfg.t && self.num_act == cfg.l
    }

    /// Records the outcome of an action. Session knowledge is dropped at
    /// the end of a session because availability is redrawn.
    pub fn apply(&mut self, action: &CaimAction, obs: &CaimObservation, cfg: &CaimConfig) {
        match action.kind {
            ActionKind::End => {
                self.evidence.clear();
                self.declined.clear();
                if self.sess_id == cfg.t {
                    self.num_act = cfg.l;
                } else {
                    self.sess_id += 1;
                    self.num_act = 0;
                }
            }
            _ => {
                self.num_act += 1;
                for &(v, a) in &obs.availability {
                    self.evidence.insert(v, a);
                }
                for &(v, acc) in &obs.accepted {
                    if acc {
                        self.locked.push(v);
                    } else {
                        self.declined.insert(v);
                    }
                }
            }
        }
    }

    pub fn queryable(&self, v: usize) -> bool {
        !self.locked.contains(&v) && !self.evidence.contains_key(&v)
    }

    pub fn invitable(&self, v: usize) -> bool {
        !self.locked.contains(&v) && self.evidence.get(&v) != Some(&false) && !self.declined.contains(&v)
    }
}

fn check_action(state: &CaimState, action: &CaimAction, cfg: &CaimConfig) -> Result<()> {
    let n = state.phi.len();
    if state.is_terminal(cfg) {
        return Err(Error::Contract("no action is legal in a terminal state".into()));
    }
    if action.nodes.windows(2).any(|w| w[0] >= w[1]) || action.nodes.iter().any(|&v| v >= n) {
        return Err(Error::Contract("action nodes must be distinct, sorted and in range".into()));
    }
    match action.kind {
        ActionKind::End if !action.nodes.is_empty() => Err(Error::Contract("end-session takes no nodes".into())),
        ActionKind::End => Ok(()),
        _ if state.num_act >= cfg.l => Err(Error::Contract("session action budget exhausted".into())),
        _ if action.nodes.is_empty() => Err(Error::Contract("query and invite need at least one node".into())),
        ActionKind::Query if action.nodes.len() > cfg.q_max => Err(Error::Contract("query larger than Q_max".into())),
        ActionKind::Invite if action.nodes.len() + state.locked.len() > cfg.k => {
            Err(Error::Contract("invite exceeds the remaining lock budget".into()))
        }
        ActionKind::Invite if action.nodes.iter().any(|v| state.locked.contains(v)) => {
            Err(Error::Contract("invite of a locked node".into()))
        }
        _ => Ok(()),
    }
}

/// Simulates one action. Rewards are only non-zero on reaching a terminal
/// state, where they equal the expected spread of the locked set.
pub fn caim_generative(
    state: &CaimState,
    action: &CaimAction,
    cfg: &CaimConfig,
    phi_source: &dyn PhiSource,
    oracle: &dyn SpreadOracle,
    rng: &mut Rng,
) -> Result<(CaimState, CaimObservation, f64)> {
    check_action(state, action, cfg)?;
    let mut next = state.clone();
    let mut obs = CaimObservation::default();
    match action.kind {
        ActionKind::Query => {
            next.num_act += 1;
            obs.availability = action.nodes.iter().map(|&v| (v, state.phi[v])).collect();
        }
        ActionKind::Invite => {
            next.num_act += 1;
            for &v in &action.nodes {
                obs.availability.push((v, state.phi[v]));
                if state.phi[v] {
                    let accept = rng.gen::<f64>() < cfg.epsilon;
                    obs.accepted.push((v, accept));
                    if accept {
                        next.locked.push(v);
                    }
                }
            }
        }
        ActionKind::End => {
            if state.sess_id == cfg.t {
                next.num_act = cfg.l;
            } else {
                next.sess_id += 1;
                next.num_act = 0;
                next.phi = phi_source.sample_phi(rng);
            }
        }
    }
    let reward = if next.is_terminal(cfg) { oracle.spread(&next.locked) } else { 0.0 };
    Ok((next, obs, reward))
}

/// A contingency-aware policy driven by observable information only.
pub trait CaimPolicy {
    fn name(&self) -> String;
    fn act(&mut self, view: &SessionView, seed: u64) -> Result<CaimAction>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaimEpisode {
    pub locked: Vec<usize>,
    pub trace: Vec<(CaimAction, CaimObservation)>,
}

/// Plays a policy against availability drawn from `env` until the terminal
/// state.
pub fn run_caim_episode(
    cfg: &CaimConfig,
    env: &dyn PhiSource,
    oracle: &dyn SpreadOracle,
    policy: &mut dyn CaimPolicy,
    seed: u64,
) -> Result<CaimEpisode> {
    cfg.validate()?;
    let mut world = rng::stream(seed, 0);
    let mut state = CaimState::initial(env.sample_phi(&mut world));
    let mut view = SessionView::start();
    let mut trace = Vec::new();
    let mut step = 0u64;
    while !state.is_terminal(cfg) {
        let action = policy.act(&view, rng::derive(seed, 1 + step))?;
        let (next, obs, _) = caim_generative(&state, &action, cfg, env, oracle, &mut world)?;
        view.apply(&action, &obs, cfg);
        debug_assert_eq!(view.locked.len(), next.locked.len());
        trace.push((action, obs));
        state = next;
        step += 1;
    }
    Ok(CaimEpisode { locked: state.locked, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::ExactSpread;
    use crate::netcore::{Edge, UncertainNetwork};

    fn setup() -> (UncertainNetwork, CaimConfig) {
        let net = UncertainNetwork::with_nodes(3, vec![Edge { src: 0, dst: 1, p: 1.0 }], vec![]).unwrap();
        (net, CaimConfig { k: 1, l: 2, t: 2, q_max: 1, epsilon: 1.0, spread_steps: 1 })
    }

    struct Fixed(Vec<bool>);
    impl PhiSource for Fixed {
        fn sample_phi(&self, _: &mut Rng) -> Vec<bool> {
            self.0.clone()
        }
    }

    #[test]
    fn query_reveals_without_locking() {
        let (net, cfg) = setup();
        let oracle = ExactSpread::new(&net, 1);
        let s = CaimState::initial(vec![true, false, true]);
        let (n, o, r) =
            caim_generative(&s, &CaimAction::query(vec![0]), &cfg, &Fixed(s.phi.clone()), &oracle, &mut rng::rng(0))
                .unwrap();
        assert_eq!(o.availability, vec![(0, true)]);
        assert!(n.locked.is_empty());
        assert_eq!(n.num_act, 1);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn invites_lock_only_available_nodes() {
        let (net, cfg) = setup();
        let oracle = ExactSpread::new(&net, 1);
        let s = CaimState::initial(vec![true, false, true]);
        let src = Fixed(s.phi.clone());
        let (n, o, _) = caim_generative(&s, &CaimAction::invite(vec![0]), &cfg, &src, &oracle, &mut rng::rng(0)).unwrap();
        assert_eq!(n.locked, vec![0]);
        assert_eq!(o.accepted, vec![(0, true)]);
        let (n, o, _) = caim_generative(&s, &CaimAction::invite(vec![1]), &cfg, &src, &oracle, &mut rng::rng(0)).unwrap();
        assert!(n.locked.is_empty());
        assert!(o.accepted.is_empty());
        assert_eq!(o.availability, vec![(1, false)]);
    }

    #[test]
    fn illegal_actions_rejected() {
        let (net, cfg) = setup();
        let oracle = ExactSpread::new(&net, 1);
        let s = CaimState::initial(vec![true; 3]);
        let src = Fixed(s.phi.clone());
        let mut r = rng::rng(0);
        assert!(caim_generative(&s, &CaimAction::query(vec![0, 1]), &cfg, &src, &oracle, &mut r).is_err());
        assert!(caim_generative(&s, &CaimAction::invite(vec![0, 1]), &cfg, &src, &oracle, &mut r).is_err());
        assert!(caim_generative(&s, &CaimAction::query(vec![]), &cfg, &src, &oracle, &mut r).is_err());
        let full = CaimState { num_act: 2, ..s.clone() };
        assert!(caim_generative(&full, &CaimAction::query(vec![0]), &cfg, &src, &oracle, &mut r).is_err());
        assert!(caim_generative(&full, &CaimAction::end(), &cfg, &src, &oracle, &mut r).is_ok());
    }

    #[test]
    fn end_resamples_and_final_end_terminates_with_reward() {
        let (net, cfg) = setup();
        let oracle = ExactSpread::new(&net, 1);
        let s = CaimState { locked: vec![0], ..CaimState::initial(vec![false; 3]) };
        let src = Fixed(vec![true; 3]);
        let (n, _, r) = caim_generative(&s, &CaimAction::end(), &cfg, &src, &oracle, &mut rng::rng(0)).unwrap();
        assert_eq!((n.sess_id, n.num_act, r), (2, 0, 0.0));
        assert_eq!(n.phi, vec![true; 3]);
        let (n, _, r) = caim_generative(&n, &CaimAction::end(), &cfg, &src, &oracle, &mut rng::rng(0)).unwrap();
        assert!(n.is_terminal(&cfg));
        assert_eq!(r, 2.0);
    }

    #[test]
    fn view_tracks_session_knowledge() {
        let (_, cfg) = setup();
        let mut v = SessionView::start();
        let obs = CaimObservation { availability: vec![(0, true), (2, false)], accepted: vec![(0, false)] };
        v.apply(&CaimAction::invite(vec![0, 2]), &obs, &cfg);
        assert!(!v.invitable(0) && !v.invitable(2) && v.invitable(1));
        assert!(!v.queryable(0) && v.queryable(1));
        v.apply(&CaimAction::end(), &CaimObservation::default(), &cfg);
        assert!(v.invitable(0) && v.evidence.is_empty());
        assert_eq!(v.sess_id, 2);
    }
}
