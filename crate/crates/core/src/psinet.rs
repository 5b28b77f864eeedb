//! PSINET: Monte Carlo planning over sampled network instances with a
//! diffusion-vector transition heuristic, followed by a vote across
//! instances.

use crate::dime::{DimeAction, ParticleBelief, PlanContext, Planner};
use crate::error::{Error, Result};
use crate::netcore::{sample_instantiation, ConcreteNetwork, Csr, Edge, UncertainNetwork};
use crate::rng::{self, Rng};
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

const WARMUP: usize = 32;

/// Weighted adjacency keeping only edges that leave influenced or acted
/// nodes. Certain edges weigh 1, uncertain edges their existence probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl PrunedGraph {
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for &(i, j, w) in &self.edges {
            m[i][j] = w;
        }
        m
    }
}

pub fn build_pruned_graph(net: &UncertainNetwork, w: &[bool], action: &[usize]) -> PrunedGraph {
    let mut src = w.to_vec();
    for &a in action {
        src[a] = true;
    }
    let mut edges: Vec<(usize, usize, f64)> = net
        .certain()
        .iter()
        .filter(|e| src[e.src])
        .map(|e| (e.src, e.dst, 1.0))
        .chain(net.uncertain().iter().filter(|e| src[e.src]).map(|e| (e.src, e.dst, e.u)))
        .collect();
    edges.sort_by_key(|a| (a.0, a.1));
    PrunedGraph { n: net.n(), edges }
}

/// Sum over t = 1..t_hops of (p·Gᵀ)ᵗ·1, each entry clamped to [0, 1].
pub fn diffusion_vector(g: &PrunedGraph, p: f64, t_hops: usize) -> Vec<f64> {
    raw_diffusion(g, p, t_hops).into_iter().map(|x| x.min(1.0)).collect()
}

/// The unclamped matrix-power sum.
pub fn raw_diffusion(g: &PrunedGraph, p: f64, t_hops: usize) -> Vec<f64> {
    let mut x = vec![1.0; g.n];
    let mut d = vec![0.0; g.n];
    for _ in 0..t_hops {
        let mut next = vec![0.0; g.n];
        for &(i, j, w) in &g.edges {
            next[j] += p * w * x[i];
        }
        for (a, b) in d.iter_mut().zip(&next) {
            *a += b;
        }
        x = next;
    }
    d
}

/// Diffusion vector on an instance without materializing the pruned graph.
fn instance_diffusion(csr: &Csr, sources: &[bool], p: f64, t_hops: usize, x: &mut Vec<f64>, d: &mut Vec<f64>) {
    let n = csr.n();
    x.clear();
    x.resize(n, 1.0);
    d.clear();
    d.resize(n, 0.0);
    let mut next = vec![0.0; n];
    for _ in 0..t_hops {
        next.iter_mut().for_each(|v| *v = 0.0);
        for i in (0..n).filter(|&i| sources[i] && x[i] != 0.0) {
            for (j, _) in csr.out(i) {
                next[j] += p * x[i];
            }
        }
        for (a, b) in d.iter_mut().zip(&next) {
            *a += b;
        }
        std::mem::swap(x, &mut next);
    }
    d.iter_mut().for_each(|v| *v = v.min(1.0));
}

/// Probability of moving from `w` to `w_next` under the heuristic: newly
/// influenced nodes each contribute D_i, still uninfluenced ones 1 − D_j.
pub fn transition_prob(w: &[bool], action: &[usize], w_next: &[bool], d: &[f64]) -> f64 {
    let mut forced = w.to_vec();
    for &a in action {
        forced[a] = true;
    }
    let mut prob = 1.0;
    for v in 0..w.len() {
        match (forced[v], w_next[v]) {
            (true, false) => return 0.0,
            (true, true) => {}
            (false, true) => prob *= d[v],
            (false, false) => prob *= 1.0 - d[v],
        }
    }
    prob
}

fn sample_transition(w: &[bool], action: &[usize], d: &[f64], rng: &mut Rng) -> Vec<bool> {
    let mut next = w.to_vec();
    for &a in action {
        next[a] = true;
    }
    for v in 0..w.len() {
        if !next[v] && !w[v] && rng.gen::<f64>() < d[v] {
            next[v] = true;
        }
    }
    for &a in action {
        next[a] = true;
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    S,
    W,
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsinetParams {
    pub scheme: Scheme,
    /// Number of sampled instances; `None` picks 20 for S/W and 5 for C.
    pub delta_count: Option<usize>,
    pub nsim: usize,
    /// Exploration constant; `None` estimates it from a warm-up.
    pub c0: Option<f64>,
    /// Probability of proposing a fresh random action per simulation.
    pub eta: f64,
    /// Hop budget; `None` uses the episode's diffusion steps.
    pub t_hops: Option<usize>,
    /// Best-action draws per instance when building rankings for scheme C.
    pub draws: usize,
}

impl Default for PsinetParams {
    fn default() -> Self {
        Self { scheme: Scheme::W, delta_count: None, nsim: 256, c0: None, eta: 0.3, t_hops: None, draws: 5 }
    }
}

impl PsinetParams {
    pub fn deltas(&self) -> usize {
        self.delta_count.unwrap_or(if self.scheme == Scheme::C { 5 } else { 20 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmStats {
    pub action: DimeAction,
    pub mean: f64,
    pub count: usize,
}

/// Result of the bandit search on one instance.
#[derive(Debug, Clone)]
pub struct BestAction {
    pub action: DimeAction,
    /// Tried actions by decreasing mean reward.
    pub ranking: Vec<ArmStats>,
    /// Successor influence states reached by the best action's first step.
    pub successors: Vec<Vec<bool>>,
}

/// Inputs of a bandit search on a single instance.
pub struct SearchSpec<'a> {
    /// Network whose edges are all certain.
    pub instance: &'a Csr,
    pub belief: &'a ParticleBelief,
    pub k: usize,
    pub nsim: usize,
    pub c0: Option<f64>,
    pub horizon: usize,
    pub eta: f64,
    pub p: f64,
    pub t_hops: usize,
    pub eligible: &'a [bool],
    pub max_successors: usize,
}

struct Arm {
    action: DimeAction,
    sum: f64,
    count: usize,
    successors: Vec<Vec<bool>>,
}

fn random_subset(pool: &[usize], k: usize, rng: &mut Rng) -> DimeAction {
    DimeAction::new(sample(rng, pool.len(), k.min(pool.len())).into_iter().map(|i| pool[i]).collect())
}

/// UCB search over a lazily grown pool of actions. Each simulation samples
/// a particle, applies the chosen action and then random actions up to the
/// horizon under the transition heuristic, and credits the total reward.
pub fn find_best_action(spec: &SearchSpec, seed: u64) -> Result<BestAction> {
    if spec.nsim == 0 {
        return Err(Error::param("nsim", "must be positive"));
    }
    let n = spec.instance.n();
    let sure = spec.belief.certainly_influenced();
    let mut pool: Vec<usize> = (0..n).filter(|&v| spec.eligible[v] && !sure[v]).collect();
    if pool.len() < spec.k {
        pool = (0..n).filter(|&v| spec.eligible[v]).collect();
    }
    if pool.len() < spec.k {
        return Err(Error::param("k", "not enough eligible nodes"));
    }
    let mut rng = rng::rng(seed);
    let mut arms: Vec<Arm> = Vec::new();
    let mut index: HashMap<DimeAction, usize> = HashMap::new();
    let mut c0 = spec.c0.unwrap_or(0.0);
    let warmup = if spec.c0.is_none() { WARMUP.min(spec.nsim) } else { 0 };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut total = 0usize;
    let (mut x, mut d) = (Vec::new(), Vec::new());
    for sim in 0..spec.nsim {
        if sim == warmup && spec.c0.is_none() {
            c0 = if hi > lo { hi - lo } else { 1.0 };
        }
        let propose = arms.is_empty() || sim < warmup || rng.gen::<f64>() < spec.eta;
        let a = if propose {
            let cand = random_subset(&pool, spec.k, &mut rng);
            match index.get(&cand) {
                Some(&i) => i,
                None => {
                    index.insert(cand.clone(), arms.len());
                    arms.push(Arm { action: cand, sum: 0.0, count: 0, successors: Vec::new() });
                    arms.len() - 1
                }
            }
        } else {
            let ln = (total.max(1) as f64).ln();
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (i, arm) in arms.iter().enumerate() {
                let v = if arm.count == 0 {
                    f64::INFINITY
                } else {
                    arm.sum / arm.count as f64 + c0 * (ln / arm.count as f64).sqrt()
                };
                if v > best_v {
                    best_v = v;
                    best = i;
                }
            }
            best
        };
        let start = spec.belief.sample(&mut rng).to_vec();
        let mut state = start;
        let mut reward = 0.0;
        for step in 0..spec.horizon.max(1) {
            let action = if step == 0 {
                arms[a].action.nodes.clone()
            } else {
                let free: Vec<usize> = (0..n).filter(|&v| !state[v]).collect();
                if free.is_empty() {
                    break;
                }
                random_subset(&free, spec.k, &mut rng).nodes
            };
            let mut sources = state.clone();
            for &v in &action {
                sources[v] = true;
            }
            instance_diffusion(spec.instance, &sources, spec.p, spec.t_hops, &mut x, &mut d);
            let next = sample_transition(&state, &action, &d, &mut rng);
            reward += (next.iter().filter(|&&b| b).count() - state.iter().filter(|&&b| b).count()) as f64;
            if step == 0 && arms[a].successors.len() < spec.max_successors {
                arms[a].successors.push(next.clone());
            }
            state = next;
        }
        lo = lo.min(reward);
        hi = hi.max(reward);
        arms[a].sum += reward;
        arms[a].count += 1;
        total += 1;
    }
    let mut ranking: Vec<(usize, ArmStats)> = arms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.count > 0)
        .map(|(i, a)| (i, ArmStats { action: a.action.clone(), mean: a.sum / a.count as f64, count: a.count }))
        .collect();
    ranking.sort_by(|a, b| b.1.mean.total_cmp(&a.1.mean).then(a.1.action.cmp(&b.1.action)));
    let best = ranking[0].0;
    Ok(BestAction {
        action: arms[best].action.clone(),
        ranking: ranking.into_iter().map(|(_, s)| s).collect(),
        successors: std::mem::take(&mut arms[best].successors),
    })
}

/// One instance's contribution to the vote.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub action: DimeAction,
    /// Uncertain edges absent in the instance.
    pub removed: usize,
    /// Best-first ranking; required by scheme C.
    pub ranking: Option<Vec<DimeAction>>,
}

/// Vote weight of an instance that removed `x` of `m` uncertain edges.
pub fn w_weight(x: usize, m: usize) -> f64 {
    if (x as f64) <= m as f64 / 2.0 {
        x as f64
    } else {
        (m - x) as f64
    }
}

fn plurality(votes: &BTreeMap<&DimeAction, f64>) -> Option<DimeAction> {
    let mut best: Option<(&DimeAction, f64)> = None;
    for (&a, &w) in votes {
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((a, w));
        }
    }
    best.map(|(a, _)| a.clone())
}

pub fn vote(results: &[InstanceResult], scheme: Scheme, m: usize) -> Result<DimeAction> {
    if results.is_empty() {
        return Err(Error::Contract("vote needs at least one instance".into()));
    }
    match scheme {
        Scheme::S | Scheme::W => {
            let mut votes: BTreeMap<&DimeAction, f64> = BTreeMap::new();
            for r in results {
                let w = if scheme == Scheme::S { 1.0 } else { w_weight(r.removed, m) };
                *votes.entry(&r.action).or_default() += w;
            }
            // All-zero weights (for instance m = 0) fall back to unit votes.
            if votes.values().all(|&w| w == 0.0) {
                return vote(results, Scheme::S, m);
            }
            Ok(plurality(&votes).expect("non-empty"))
        }
        Scheme::C => {
            let ballots: Vec<&Vec<DimeAction>> = results
                .iter()
                .map(|r| r.ranking.as_ref().ok_or_else(|| Error::Contract("scheme C needs rankings".into())))
                .collect::<Result<_>>()?;
            copeland(&ballots)
        }
    }
}

/// Copeland winner: wins minus losses over pairwise majorities. Actions a
/// ballot does not rank tie below every ranked one.
pub fn copeland(ballots: &[&Vec<DimeAction>]) -> Result<DimeAction> {
    let mut cands: Vec<&DimeAction> = ballots.iter().flat_map(|b| b.iter()).collect();
    cands.sort();
    cands.dedup();
    if cands.is_empty() {
        return Err(Error::Contract("empty rankings".into()));
    }
    let pos: Vec<HashMap<&DimeAction, usize>> =
        ballots.iter().map(|b| b.iter().enumerate().map(|(i, a)| (a, i)).collect()).collect();
    let rank = |ballot: usize, a: &DimeAction| pos[ballot].get(a).copied().unwrap_or(usize::MAX);
    let mut best: Option<(&DimeAction, i64)> = None;
    for &a in &cands {
        let mut score = 0i64;
        for &b in &cands {
            if a == b {
                continue;
            }
            let (mut pa, mut pb) = (0, 0);
            for i in 0..ballots.len() {
                match rank(i, a).cmp(&rank(i, b)) {
                    std::cmp::Ordering::Less => pa += 1,
                    std::cmp::Ordering::Greater => pb += 1,
                    std::cmp::Ordering::Equal => {}
                }
            }
            score += (pa > pb) as i64 - (pb > pa) as i64;
        }
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((a, score));
        }
    }
    Ok(best.expect("candidates").0.clone())
}

/// Network with the sampled uncertain edges resolved.
pub fn instance_network(net: &UncertainNetwork, f: &[bool]) -> UncertainNetwork {
    let edges: Vec<Edge> = ConcreteNetwork { net, f }.edges().collect();
    UncertainNetwork::new(net.labels().to_vec(), edges, vec![]).expect("instance is valid")
}

/// Output of one planning call.
pub struct PsinetDecision {
    pub action: DimeAction,
    pub successors: Vec<Vec<bool>>,
}

pub fn psinet_plan(ctx: &PlanContext, params: &PsinetParams, seed: u64) -> Result<PsinetDecision> {
    let net = ctx.network;
    let deltas = params.deltas();
    if deltas == 0 {
        return Err(Error::param("delta_count", "must be positive"));
    }
    let eligible = ctx.eligible();
    let p = net.mean_p();
    let t_hops = params.t_hops.unwrap_or(ctx.steps).max(1);
    let draws = if params.scheme == Scheme::C { params.draws.max(1) } else { 1 };
    let horizon = ctx.rounds_remaining().max(1);
    let mut results = Vec::with_capacity(deltas);
    let mut successors: HashMap<DimeAction, Vec<Vec<bool>>> = HashMap::new();
    for i in 0..deltas {
        let mut r = rng::stream(seed, i as u64);
        let f = sample_instantiation(net, &mut r);
        let csr = Csr::from_concrete(&ConcreteNetwork { net, f: &f });
        let spec = SearchSpec {
            instance: &csr,
            belief: ctx.belief,
            k: ctx.k,
            nsim: params.nsim,
            c0: params.c0,
            horizon,
            eta: params.eta,
            p,
            t_hops,
            eligible: &eligible,
            max_successors: ctx.belief.particles.len(),
        };
        let mut wins: BTreeMap<DimeAction, usize> = BTreeMap::new();
        let mut first = None;
        for dr in 0..draws {
            let best = find_best_action(&spec, rng::derive(seed, (1000 + i * draws + dr) as u64))?;
            *wins.entry(best.action.clone()).or_default() += 1;
            successors.entry(best.action.clone()).or_default().extend(best.successors);
            first.get_or_insert(best.action);
        }
        let mut ranking: Vec<(DimeAction, usize)> = wins.into_iter().collect();
        ranking.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        results.push(InstanceResult {
            action: if draws == 1 { first.expect("one draw") } else { ranking[0].0.clone() },
            removed: f.iter().filter(|&&b| !b).count(),
            ranking: Some(ranking.into_iter().map(|(a, _)| a).collect()),
        });
    }
    let action = vote(&results, params.scheme, net.m())?;
    let successors = successors.remove(&action).unwrap_or_default();
    Ok(PsinetDecision { action, successors })
}

/// PSINET as an episode planner. The next belief is formed from the
/// successor particles stored for the chosen action.
pub struct PsinetPlanner {
    pub params: PsinetParams,
    pending: Option<(DimeAction, Vec<Vec<bool>>)>,
}

impl PsinetPlanner {
    pub fn new(params: PsinetParams) -> Self {
        Self { params, pending: None }
    }
}

impl Planner for PsinetPlanner {
    fn name(&self) -> String {
        format!("psinet-{:?}", self.params.scheme).to_lowercase()
    }

    fn plan(&mut self, ctx: &PlanContext, seed: u64) -> Result<DimeAction> {
        let d = psinet_plan(ctx, &self.params, seed)?;
        self.pending = Some((d.action.clone(), d.successors));
        Ok(d.action)
    }

    fn update_belief(
        &mut self,
        belief: &ParticleBelief,
        action: &DimeAction,
        network: &UncertainNetwork,
        steps: usize,
        seed: u64,
    ) -> ParticleBelief {
        match self.pending.take() {
            Some((a, succ)) if &a == action && !succ.is_empty() => {
                let mut r = rng::rng(seed);
                let count = belief.particles.len();
                let particles = (0..count).map(|_| succ[r.gen_range(0..succ.len())].clone()).collect();
                ParticleBelief { particles }
            }
            _ => belief.propagate(network, action, steps, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::UncertainEdge;

    fn chain4() -> UncertainNetwork {
        let e = (0..3).map(|i| Edge { src: i, dst: i + 1, p: 0.5 }).collect();
        UncertainNetwork::with_nodes(4, e, vec![]).unwrap()
    }

    #[test]
    fn pruned_graph_rows() {
        let net = UncertainNetwork::with_nodes(
            3,
            vec![Edge { src: 0, dst: 1, p: 0.5 }],
            vec![UncertainEdge { src: 0, dst: 2, p: 0.5, u: 0.5 }],
        )
        .unwrap();
        assert!(build_pruned_graph(&net, &[false; 3], &[]).edges.is_empty());
        let g = build_pruned_graph(&net, &[true, false, false], &[]);
        assert_eq!(g.to_dense()[0], vec![0.0, 1.0, 0.5]);
        assert_eq!(build_pruned_graph(&net, &[false; 3], &[0]), g);
    }

    #[test]
    fn chain_pruning_keeps_only_first_hop_from_uninfluenced() {
        // 0 influenced, 1 and 2 not: only 0 -> 1 survives.
        let g = build_pruned_graph(&chain4(), &[true, false, false, false], &[]);
        assert_eq!(g.edges, vec![(0, 1, 1.0)]);
        let all = build_pruned_graph(&chain4(), &[true, true, true, false], &[]);
        assert_eq!(all.edges.len(), 3);
    }

    #[test]
    fn chain_diffusion_value() {
        let g = build_pruned_graph(&chain4(), &[true, true, true, false], &[]);
        let d = raw_diffusion(&g, 0.5, 3);
        assert!((d[3] - 0.875).abs() < 1e-15);
        assert_eq!(diffusion_vector(&PrunedGraph { n: 3, edges: vec![] }, 0.5, 3), vec![0.0; 3]);
        let single = PrunedGraph { n: 2, edges: vec![(0, 1, 1.0)] };
        assert_eq!(diffusion_vector(&single, 0.5, 1), vec![0.0, 0.5]);
    }

    #[test]
    fn one_hop_equals_weighted_column_sums() {
        let g = PrunedGraph { n: 3, edges: vec![(0, 2, 1.0), (1, 2, 0.4), (0, 1, 0.5)] };
        let d = raw_diffusion(&g, 0.3, 1);
        assert!((d[2] - 0.3 * 1.4).abs() < 1e-15);
        assert!((d[1] - 0.15).abs() < 1e-15);
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn fast_diffusion_matches_reference() {
        let net = chain4();
        let w = [true, true, false, false];
        let mut x = Vec::new();
        let mut d = Vec::new();
        instance_diffusion(&Csr::all_edges(&net), &w, 0.5, 3, &mut x, &mut d);
        assert_eq!(d, diffusion_vector(&build_pruned_graph(&net, &w, &[]), 0.5, 3));
    }

    #[test]
    fn transition_examples() {
        assert_eq!(transition_prob(&[true], &[], &[true], &[0.3]), 1.0);
        let p = transition_prob(&[false, false], &[], &[true, false], &[0.8, 0.3]);
        assert!((p - 0.56).abs() < 1e-15);
        assert_eq!(transition_prob(&[false, false], &[1], &[true, false], &[0.8, 0.3]), 0.0);
    }

    #[test]
    fn scheme_w_weights() {
        assert_eq!([2, 3, 5].map(|x| w_weight(x, 7)), [2.0, 3.0, 2.0]);
        for x in 0..=8 {
            assert_eq!(w_weight(x, 8), w_weight(8 - x, 8));
        }
    }

    fn act(v: &[usize]) -> DimeAction {
        DimeAction::new(v.to_vec())
    }

    #[test]
    fn plurality_and_ties() {
        let r = |a: &[usize], x| InstanceResult { action: act(a), removed: x, ranking: None };
        assert_eq!(vote(&[r(&[1], 0), r(&[1], 0), r(&[2], 0)], Scheme::S, 4).unwrap(), act(&[1]));
        assert_eq!(vote(&[r(&[2], 0), r(&[1], 0)], Scheme::S, 4).unwrap(), act(&[1]));
        // W: the single heavy instance outweighs two light ones.
        assert_eq!(vote(&[r(&[1], 1), r(&[1], 0), r(&[2], 3)], Scheme::W, 6).unwrap(), act(&[2]));
        assert!(vote(&[r(&[1], 0)], Scheme::C, 4).is_err());
    }

    #[test]
    fn copeland_finds_condorcet_winner() {
        let (a, b, c) = (act(&[0]), act(&[1]), act(&[2]));
        let ballots = [vec![a.clone(), b.clone(), c.clone()],
            vec![b.clone(), c.clone(), a.clone()],
            vec![c.clone(), b.clone(), a.clone()],
            vec![b.clone(), a.clone(), c.clone()],
            vec![a.clone(), b.clone()]];
        let refs: Vec<&Vec<DimeAction>> = ballots.iter().collect();
        assert_eq!(copeland(&refs).unwrap(), b);
    }

    fn star_instance() -> Csr {
        let e = (1..4).map(|i| Edge { src: 0, dst: i, p: 1.0 }).collect();
        Csr::all_edges(&UncertainNetwork::with_nodes(6, e, vec![]).unwrap())
    }

    #[test]
    fn single_simulation_returns_the_tried_action() {
        let csr = star_instance();
        let belief = ParticleBelief::initial(6, 4);
        let spec = SearchSpec {
            instance: &csr,
            belief: &belief,
            k: 1,
            nsim: 1,
            c0: None,
            horizon: 1,
            eta: 0.3,
            p: 1.0,
            t_hops: 1,
            eligible: &[true; 6],
            max_successors: 4,
        };
        let b = find_best_action(&spec, 3).unwrap();
        assert_eq!(b.ranking.len(), 1);
        assert_eq!(b.ranking[0].action, b.action);
        assert_eq!(b.successors.len(), 1);
    }

    #[test]
    fn bandit_prefers_higher_heuristic_reward() {
        let csr = star_instance();
        let belief = ParticleBelief::initial(6, 4);
        let spec = SearchSpec {
            instance: &csr,
            belief: &belief,
            k: 1,
            nsim: 400,
            c0: None,
            horizon: 1,
            eta: 0.3,
            p: 1.0,
            t_hops: 1,
            eligible: &[true; 6],
            max_successors: 4,
        };
        let wins = (0..20).filter(|&s| find_best_action(&spec, s).unwrap().action == act(&[0])).count();
        assert!(wins >= 19, "{wins}");
    }
}
