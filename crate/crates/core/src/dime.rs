//! The multi-round influence problem over an uncertain network as a POMDP.
//! The hidden state is the influenced set plus the existence bits of every
//! uncertain edge; acting on a node reveals its outgoing uncertain edges.

use crate::error::{Error, Result};
use crate::influence::{degree_centrality_select, greedy_extend, simulate_csr, SpreadSampler};
use crate::netcore::{sample_instantiation, ConcreteNetwork, Csr, UncertainNetwork};
use crate::rng::{self, Rng};
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    pub w: Vec<bool>,
    pub f: Vec<bool>,
}

impl WorldState {
    pub fn influenced(&self) -> usize {
        self.w.iter().filter(|&&b| b).count()
    }
}

/// A set of nodes to act on in one round, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DimeAction {
    pub nodes: Vec<usize>,
}

impl DimeAction {
    pub fn new(mut nodes: Vec<usize>) -> Self {
        nodes.sort_unstable();
        Self { nodes }
    }

    /// Checks for `k` distinct in-range nodes.
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        if self.nodes.len() != k {
            return Err(Error::Contract(format!("action has {} nodes, expected {k}", self.nodes.len())));
        }
        if self.nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("action nodes must be distinct".into()));
        }
        if self.nodes.iter().any(|&v| v >= n) {
            return Err(Error::Contract("action node out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RevealedEdge {
    pub src: usize,
    pub dst: usize,
    pub exists: bool,
}

/// Existence of the uncertain edges leaving the acted-on nodes. Edges are
/// named by their endpoints so an observation stays meaningful after the
/// network has been refined.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimeObservation {
    pub revealed: Vec<RevealedEdge>,
}

impl DimeObservation {
    pub fn as_map(&self) -> BTreeMap<(usize, usize), bool> {
        self.revealed.iter().map(|e| ((e.src, e.dst), e.exists)).collect()
    }

    pub fn from_map(map: &BTreeMap<(usize, usize), bool>) -> Self {
        Self { revealed: map.iter().map(|(&(src, dst), &exists)| RevealedEdge { src, dst, exists }).collect() }
    }
}

/// Acts on `action`, spreads for `steps` steps over the edges that exist in
/// `state.f`, and reveals the uncertain edges leaving the action nodes.
pub fn generative_step(
    state: &WorldState,
    action: &DimeAction,
    net: &UncertainNetwork,
    steps: usize,
    rng: &mut Rng,
) -> Result<(WorldState, DimeObservation, usize)> {
    if state.w.len() != net.n() {
        return Err(Error::Contract("state size differs from network".into()));
    }
    if action.nodes.iter().any(|&v| v >= net.n()) {
        return Err(Error::Contract("action node out of range".into()));
    }
    let inst = ConcreteNetwork::new(net, &state.f)?;
    let csr = Csr::from_concrete(&inst);
    let mut init = state.w.clone();
    for &v in &action.nodes {
        init[v] = true;
    }
    let w = simulate_csr(&csr, &init, steps, rng);
    let revealed = net
        .uncertain_out_of(&action.nodes)
        .into_iter()
        .map(|i| {
            let e = net.uncertain()[i];
            RevealedEdge { src: e.src, dst: e.dst, exists: state.f[i] }
        })
        .collect();
    let next = WorldState { w, f: state.f.clone() };
    let reward = next.influenced() - state.influenced();
    Ok((next, DimeObservation { revealed }, reward))
}

/// Refines the network with an observation.
pub fn apply_observation(net: &UncertainNetwork, obs: &DimeObservation) -> Result<UncertainNetwork> {
    net.refine(&obs.as_map())
}

/// Unweighted particles over the influenced set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief {
    pub particles: Vec<Vec<bool>>,
}

impl ParticleBelief {
    /// Everything uninfluenced.
    pub fn initial(n: usize, count: usize) -> Self {
        Self { particles: vec![vec![false; n]; count.max(1)] }
    }

    pub fn sample(&self, rng: &mut Rng) -> &[bool] {
        &self.particles[rng.gen_range(0..self.particles.len())]
    }

    /// Fraction of particles in which each node is influenced.
    pub fn marginals(&self) -> Vec<f64> {
        let n = self.particles[0].len();
        let mut m = vec![0.0; n];
        for p in &self.particles {
            for (x, &b) in m.iter_mut().zip(p) {
                if b {
                    *x += 1.0;
                }
            }
        }
        m.iter().map(|x| x / self.particles.len() as f64).collect()
    }

    /// Nodes influenced in every particle.
    pub fn certainly_influenced(&self) -> Vec<bool> {
        let n = self.particles[0].len();
        (0..n).map(|v| self.particles.iter().all(|p| p[v])).collect()
    }

    /// Pushes every particle through one round: the action nodes become
    /// influenced, then influence spreads on a fresh instantiation of the
    /// (refined) network.
    pub fn propagate(&self, net: &UncertainNetwork, action: &DimeAction, steps: usize, seed: u64) -> Self {
        let particles = self
            .particles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut r = rng::stream(seed, i as u64);
                let f = sample_instantiation(net, &mut r);
                let csr = Csr::from_concrete(&ConcreteNetwork { net, f: &f });
                let mut init = p.clone();
                for &v in &action.nodes {
                    init[v] = true;
                }
                simulate_csr(&csr, &init, steps, &mut r)
            })
            .collect();
        Self { particles }
    }
}

/// Everything a planner may look at when choosing a round's action.
pub struct PlanContext<'a> {
    /// Current network, refined by every observation so far.
    pub network: &'a UncertainNetwork,
    pub belief: &'a ParticleBelief,
    pub k: usize,
    pub round: usize,
    pub rounds_total: usize,
    pub steps: usize,
    /// Nodes acted on in earlier rounds.
    pub chosen: &'a [usize],
    /// Nodes the planner must not pick (acted on already or unavailable).
    pub excluded: &'a [bool],
}

impl PlanContext<'_> {
    pub fn rounds_remaining(&self) -> usize {
        self.rounds_total - self.round
    }

    /// Eligible nodes, or every node when fewer than `k` are eligible.
    pub fn eligible(&self) -> Vec<bool> {
        let e: Vec<bool> = self.excluded.iter().map(|&x| !x).collect();
        if e.iter().filter(|&&b| b).count() >= self.k {
            e
        } else {
            vec![true; self.network.n()]
        }
    }
}

pub trait Planner {
    fn name(&self) -> String;

    fn plan(&mut self, ctx: &PlanContext, seed: u64) -> Result<DimeAction>;

    /// Belief after acting on `action` and observing; `network` is already
    /// refined by the observation.
    fn update_belief(
        &mut self,
        belief: &ParticleBelief,
        action: &DimeAction,
        network: &UncertainNetwork,
        steps: usize,
        seed: u64,
    ) -> ParticleBelief {
        belief.propagate(network, action, steps, seed)
    }
}

/// Uniformly random eligible nodes.
pub struct RandomPlanner;

impl Planner for RandomPlanner {
    fn name(&self) -> String {
        "random".into()
    }

    fn plan(&mut self, ctx: &PlanContext, seed: u64) -> Result<DimeAction> {
        let pool: Vec<usize> = ctx.eligible().iter().enumerate().filter(|(_, &e)| e).map(|(v, _)| v).collect();
        if pool.len() < ctx.k {
            return Err(Error::param("k", "not enough nodes"));
        }
        let mut r = rng::rng(seed);
        Ok(DimeAction::new(sample(&mut r, pool.len(), ctx.k).into_iter().map(|i| pool[i]).collect()))
    }
}

/// Highest expected out-degree among eligible nodes.
pub struct DegreePlanner;

impl Planner for DegreePlanner {
    fn name(&self) -> String {
        "degree".into()
    }

    fn plan(&mut self, ctx: &PlanContext, _: u64) -> Result<DimeAction> {
        Ok(DimeAction::new(degree_centrality_select(ctx.network, ctx.k, Some(&ctx.eligible()))?))
    }
}

/// Greedy marginal-gain extension of the nodes chosen so far, on the
/// current network with uncertain edges collapsed.
pub struct GreedyPlanner {
    pub nsim: usize,
}

impl Planner for GreedyPlanner {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn plan(&mut self, ctx: &PlanContext, seed: u64) -> Result<DimeAction> {
        let sampler = SpreadSampler::new(&ctx.network.collapse(), ctx.steps, self.nsim, seed)?;
        let eligible = ctx.eligible();
        let picked = greedy_extend(&sampler, ctx.network.n(), ctx.chosen, ctx.k, Some(&eligible));
        if picked.len() < ctx.k {
            return Err(Error::param("k", "not enough nodes"));
        }
        Ok(DimeAction::new(picked))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub k: usize,
    pub rounds: usize,
    pub steps: usize,
    #[serde(default = "default_particles")]
    pub particles: usize,
}

fn default_particles() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub uncertain_before: usize,
    pub action: DimeAction,
    pub observation: DimeObservation,
    pub reward: usize,
    pub influenced_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHistory {
    pub planner: String,
    pub rounds: Vec<RoundRecord>,
    pub final_influenced: Vec<bool>,
    pub total_influenced: usize,
    pub indirect_influence: i64,
}

impl EpisodeHistory {
    /// One JSON object per round followed by a summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r).expect("round serializes"));
            out.push('\n');
        }
        let summary = serde_json::json!({
            "planner": self.planner,
            "total_influenced": self.total_influenced,
            "indirect_influence": self.indirect_influence,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

/// Influenced nodes beyond those that had to be acted on.
pub fn indirect_influence(total: usize, k: usize, rounds: usize) -> i64 {
    total as i64 - (k * rounds) as i64
}

/// Runs one episode against a ground truth sampled from the network with
/// `gt_seed`. The planner receives seeds derived from `planner_seed`.
pub fn run_episode(
    net: &UncertainNetwork,
    planner: &mut dyn Planner,
    cfg: &EpisodeConfig,
    gt_seed: u64,
    planner_seed: u64,
) -> Result<EpisodeHistory> {
    let truth = sample_instantiation(net, &mut rng::stream(gt_seed, 0));
    run_episode_with_truth(net, &truth, planner, cfg, gt_seed, planner_seed)
}

pub fn run_episode_with_truth(
    net: &UncertainNetwork,
    truth: &[bool],
    planner: &mut dyn Planner,
    cfg: &EpisodeConfig,
    gt_seed: u64,
    planner_seed: u64,
) -> Result<EpisodeHistory> {
    if cfg.k == 0 || cfg.k > net.n() {
        return Err(Error::param("k", format!("need 1..={}", net.n())));
    }
    let mut state = WorldState { w: vec![false; net.n()], f: truth.to_vec() };
    let mut world_rng = rng::stream(gt_seed, 1);
    let mut current = net.clone();
    let mut belief = ParticleBelief::initial(net.n(), cfg.particles);
    let mut chosen: Vec<usize> = Vec::new();
    let mut excluded = vec![false; net.n()];
    let mut rounds = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let ctx = PlanContext {
            network: &current,
            belief: &belief,
            k: cfg.k,
            round,
            rounds_total: cfg.rounds,
            steps: cfg.steps,
            chosen: &chosen,
            excluded: &excluded,
        };
        let action = planner.plan(&ctx, rng::derive(planner_seed, 2 * round as u64))?;
        action.validate(net.n(), cfg.k)?;
        let (next, obs, reward) = generative_step(&state, &action, net, cfg.steps, &mut world_rng)?;
        let uncertain_before = current.m();
        current = apply_observation(&current, &obs)?;
        belief =
            planner.update_belief(&belief, &action, &current, cfg.steps, rng::derive(planner_seed, 2 * round as u64 + 1));
        for &v in &action.nodes {
            if !excluded[v] {
                excluded[v] = true;
                chosen.push(v);
            }
        }
        state = next;
        rounds.push(RoundRecord {
            round,
            uncertain_before,
            action,
            observation: obs,
            reward,
            influenced_after: state.influenced(),
        });
    }
    let total = state.influenced();
    debug_assert_eq!(rounds.iter().map(|r| r.reward).sum::<usize>(), total);
    Ok(EpisodeHistory {
        planner: planner.name(),
        rounds,
        total_influenced: total,
        indirect_influence: indirect_influence(total, cfg.k, cfg.rounds),
        final_influenced: state.w,
    })
}
