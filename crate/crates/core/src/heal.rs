//! HEAL: split the network into parts, solve a small POMDP per part with an
//! ensemble of sampled instances and a K-level UCT tree, and combine the
//! per-part picks into one action.

use crate::dime::{DimeAction, PlanContext, Planner};
use crate::error::{Error, Result};
use crate::influence::simulate_csr;
use crate::netcore::{instantiation_log_probability, partition, sample_instantiation, ConcreteNetwork, Csr, UncertainNetwork};
use crate::rng::{self, Rng};
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const WARMUP: usize = 32;

#[derive(Debug, Clone)]
struct TreeNode {
    sum: f64,
    count: usize,
    children: Vec<(usize, usize)>,
}

impl TreeNode {
    fn new() -> Self {
        Self { sum: 0.0, count: 0, children: Vec::new() }
    }

    fn mean(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.sum / self.count as f64 }
    }
}

/// UCT tree whose root-to-leaf paths are ordered selections of `depth`
/// distinct candidate nodes.
#[derive(Debug, Clone)]
pub struct KLevelTree {
    nodes: Vec<TreeNode>,
    candidates: Vec<usize>,
    depth: usize,
    pub c: f64,
}

impl KLevelTree {
    pub fn new(candidates: Vec<usize>, depth: usize, c: f64) -> Result<Self> {
        if depth == 0 {
            return Err(Error::param("k_pick", "must be positive"));
        }
        if depth > candidates.len() {
            return Err(Error::param("k_pick", format!("{depth} exceeds {} candidates", candidates.len())));
        }
        Ok(Self { nodes: vec![TreeNode::new()], candidates, depth, c })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn child(&self, node: usize, v: usize) -> Option<usize> {
        self.nodes[node].children.iter().find(|(x, _)| *x == v).map(|(_, c)| *c)
    }

    /// Walks from the root choosing one branch per level by UCB1; untried
    /// branches are taken first, uniformly at random among them.
    pub fn find_step(&mut self, rng: &mut Rng) -> Vec<usize> {
        let mut path = Vec::with_capacity(self.depth);
        let mut node = 0;
        for _ in 0..self.depth {
            let open: Vec<usize> = self.candidates.iter().copied().filter(|v| !path.contains(v)).collect();
            let untried: Vec<usize> =
                open.iter().copied().filter(|&v| self.child(node, v).is_none_or(|c| self.nodes[c].count == 0)).collect();
            let pick = if !untried.is_empty() {
                untried[rng.gen_range(0..untried.len())]
            } else {
                let ln = (self.nodes[node].count.max(1) as f64).ln();
                let mut best = (f64::NEG_INFINITY, open[0]);
                for &v in &open {
                    let ch = &self.nodes[self.child(node, v).expect("tried")];
                    let score = ch.mean() + self.c * (ln / ch.count as f64).sqrt();
                    if score > best.0 {
                        best = (score, v);
                    }
                }
                best.1
            };
            node = match self.child(node, pick) {
                Some(c) => c,
                None => {
                    self.nodes.push(TreeNode::new());
                    let id = self.nodes.len() - 1;
                    self.nodes[node].children.push((pick, id));
                    id
                }
            };
            path.push(pick);
        }
        path
    }

    /// Adds `reward` to every node on the path, root included.
    pub fn update_step(&mut self, path: &[usize], reward: f64) -> Result<()> {
        if path.len() != self.depth {
            return Err(Error::Contract("path length differs from tree depth".into()));
        }
        let mut ids = vec![0];
        let mut node = 0;
        for &v in path {
            node = self.child(node, v).ok_or_else(|| Error::Contract(format!("no branch for node {v}")))?;
            ids.push(node);
        }
        for id in ids {
            self.nodes[id].sum += reward;
            self.nodes[id].count += 1;
        }
        Ok(())
    }

    /// Mean reward and visits of the node reached by `path` (root for empty).
    pub fn stats(&self, path: &[usize]) -> Option<(f64, usize)> {
        let mut node = 0;
        for &v in path {
            node = self.child(node, v)?;
        }
        Some((self.nodes[node].mean(), self.nodes[node].count))
    }

    /// Visited leaves keyed by their sorted node set; orderings of the same
    /// set are merged by visit-weighted mean.
    pub fn leaf_values(&self) -> AlphaList {
        let mut acc: BTreeMap<Vec<usize>, (f64, usize)> = BTreeMap::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((id, path)) = stack.pop() {
            if path.len() == self.depth {
                if self.nodes[id].count > 0 {
                    let mut key = path.clone();
                    key.sort_unstable();
                    let e = acc.entry(key).or_insert((0.0, 0));
                    e.0 += self.nodes[id].sum;
                    e.1 += self.nodes[id].count;
                }
                continue;
            }
            for &(v, c) in &self.nodes[id].children {
                let mut p = path.clone();
                p.push(v);
                stack.push((c, p));
            }
        }
        AlphaList { values: acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect() }
    }
}

/// Mean long-term reward per visited action of one instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlphaList {
    pub values: BTreeMap<Vec<usize>, f64>,
}

/// Reward of acting on `action` from `start` followed by random actions of
/// the same size over the remaining rounds.
pub fn simulate_step(
    inst: &Csr,
    start: &[bool],
    action: &[usize],
    pool: &[usize],
    horizon: usize,
    steps: usize,
    rng: &mut Rng,
) -> f64 {
    let k = action.len();
    let mut state = start.to_vec();
    let mut total = 0usize;
    for round in 0..horizon.max(1) {
        let act: Vec<usize> = if round == 0 {
            action.to_vec()
        } else {
            let free: Vec<usize> = pool.iter().copied().filter(|&v| !state[v]).collect();
            if free.is_empty() {
                break;
            }
            sample(rng, free.len(), k.min(free.len())).into_iter().map(|i| free[i]).collect()
        };
        let before = state.iter().filter(|&&b| b).count();
        for &v in &act {
            state[v] = true;
        }
        state = simulate_csr(inst, &state, steps, rng);
        total += state.iter().filter(|&&b| b).count() - before;
    }
    total as f64
}

/// Inputs shared by every instance evaluation of one TASP call.
pub struct TaspSpec<'a> {
    pub net: &'a UncertainNetwork,
    /// Start states to sample from (influence vectors over `net`).
    pub starts: &'a [Vec<bool>],
    /// Nodes that may be picked.
    pub pool: &'a [usize],
    pub k_pick: usize,
    pub horizon: usize,
    pub steps: usize,
    pub delta_count: usize,
    pub nsim: usize,
    pub c: Option<f64>,
}

/// Runs the K-level tree search on one instance.
pub fn evaluate_instance(spec: &TaspSpec, f: &[bool], seed: u64) -> Result<AlphaList> {
    if spec.nsim == 0 {
        return Err(Error::param("nsim", "must be positive"));
    }
    let csr = Csr::from_concrete(&ConcreteNetwork::new(spec.net, f)?);
    let mut rng = rng::rng(seed);
    let mut tree = KLevelTree::new(spec.pool.to_vec(), spec.k_pick, spec.c.unwrap_or(0.0))?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let n = spec.net.n();
    let empty = vec![false; n];
    for sim in 0..spec.nsim {
        if spec.c.is_none() && sim == WARMUP.min(spec.nsim) {
            tree.c = if hi > lo { hi - lo } else { 1.0 };
        }
        let path = tree.find_step(&mut rng);
        let start = if spec.starts.is_empty() { &empty } else { &spec.starts[rng.gen_range(0..spec.starts.len())] };
        let r = simulate_step(&csr, start, &path, spec.pool, spec.horizon, spec.steps, &mut rng);
        lo = lo.min(r);
        hi = hi.max(r);
        tree.update_step(&path, r)?;
    }
    Ok(tree.leaf_values())
}

/// Combines per-instance reward lists with weights `weights` (summing to
/// one). An action missing from any list scores −∞; if that leaves nothing,
/// each action is scored over the instances that visited it instead.
pub fn aggregate(lists: &[AlphaList], weights: &[f64]) -> BTreeMap<Vec<usize>, f64> {
    let keys: std::collections::BTreeSet<&Vec<usize>> = lists.iter().flat_map(|l| l.values.keys()).collect();
    let strict: BTreeMap<Vec<usize>, f64> = keys
        .iter()
        .map(|&k| {
            let mut r = 0.0;
            for (l, w) in lists.iter().zip(weights) {
                match l.values.get(k) {
                    Some(a) => r += w * a,
                    None => return (k.clone(), f64::NEG_INFINITY),
                }
            }
            (k.clone(), r)
        })
        .collect();
    if strict.values().any(|v| v.is_finite()) {
        return strict;
    }
    keys.iter()
        .map(|&k| {
            let (mut num, mut den) = (0.0, 0.0);
            for (l, w) in lists.iter().zip(weights) {
                if let Some(a) = l.values.get(k) {
                    num += w * a;
                    den += w;
                }
            }
            (k.clone(), if den > 0.0 { num / den } else { f64::NEG_INFINITY })
        })
        .collect()
}

/// Ensemble weights proportional to instantiation probability.
pub fn ensemble_weights(net: &UncertainNetwork, instances: &[Vec<bool>]) -> Vec<f64> {
    let logs: Vec<f64> = instances.iter().map(|f| instantiation_log_probability(net, f)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

/// Picks `k_pick` nodes for one part: samples instances, evaluates each with
/// the tree search and returns the argmax of the weighted rewards.
pub fn tasp_solve(spec: &TaspSpec, seed: u64) -> Result<DimeAction> {
    if spec.delta_count == 0 {
        return Err(Error::param("delta_count", "must be positive"));
    }
    if spec.k_pick > spec.pool.len() {
        return Err(Error::param("k_pick", format!("{} exceeds part size {}", spec.k_pick, spec.pool.len())));
    }
    let instances: Vec<Vec<bool>> =
        (0..spec.delta_count).map(|i| sample_instantiation(spec.net, &mut rng::stream(seed, i as u64))).collect();
    let lists = instances
        .iter()
        .enumerate()
        .map(|(i, f)| evaluate_instance(spec, f, rng::derive(seed, 10_000 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let r = aggregate(&lists, &ensemble_weights(spec.net, &instances));
    let mut best: Option<(&Vec<usize>, f64)> = None;
    for (k, &v) in &r {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    Ok(DimeAction::new(best.expect("at least one visited leaf").0.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealVariant {
    /// K parts, one node from each per round.
    Heal,
    /// T parts, all K nodes of round i from part i.
    HealT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HealParams {
    pub variant: HealVariant,
    pub delta_count: usize,
    pub nsim: usize,
    pub c: Option<f64>,
    pub balance_slack: f64,
}

impl Default for HealParams {
    fn default() -> Self {
        Self { variant: HealVariant::Heal, delta_count: 10, nsim: 1024, c: None, balance_slack: 0.2 }
    }
}

/// HEAL as an episode planner. Parts are fixed on the first call.
pub struct HealPlanner {
    pub params: HealParams,
    parts: Option<Vec<Vec<usize>>>,
}

impl HealPlanner {
    pub fn new(params: HealParams) -> Self {
        Self { params, parts: None }
    }

    pub fn parts(&self) -> Option<&[Vec<usize>]> {
        self.parts.as_deref()
    }

    fn solve_part(&self, ctx: &PlanContext, members: &[usize], k_pick: usize, seed: u64) -> Result<Vec<usize>> {
        let sub = ctx.network.induced(members);
        let eligible = ctx.eligible();
        let pool: Vec<usize> = (0..members.len()).filter(|&i| eligible[members[i]]).collect();
        let starts: Vec<Vec<bool>> =
            ctx.belief.particles.iter().map(|p| members.iter().map(|&v| p[v]).collect()).collect();
        let spec = TaspSpec {
            net: &sub,
            starts: &starts,
            pool: &pool,
            k_pick,
            horizon: ctx.rounds_remaining().max(1),
            steps: ctx.steps,
            delta_count: self.params.delta_count,
            nsim: self.params.nsim,
            c: self.params.c,
        };
        Ok(tasp_solve(&spec, seed)?.nodes.into_iter().map(|i| members[i]).collect())
    }
}

impl Planner for HealPlanner {
    fn name(&self) -> String {
        match self.params.variant {
            HealVariant::Heal => "heal".into(),
            HealVariant::HealT => "heal-t".into(),
        }
    }

    fn plan(&mut self, ctx: &PlanContext, seed: u64) -> Result<DimeAction> {
        let n = ctx.network.n();
        if self.parts.is_none() {
            let count = match self.params.variant {
                HealVariant::Heal => ctx.k,
                HealVariant::HealT => ctx.rounds_total,
            };
            let p = partition(ctx.network, count, self.params.balance_slack, rng::derive(seed, 1))?;
            if self.params.variant == HealVariant::HealT && p.parts.iter().any(|x| x.len() < ctx.k) {
                return Err(Error::param("k", "a partition is smaller than K"));
            }
            self.parts = Some(p.parts);
        }
        let parts = self.parts.clone().expect("parts set");
        let eligible = ctx.eligible();
        let whole: Vec<usize> = (0..n).collect();
        let mut picked: Vec<usize> = Vec::with_capacity(ctx.k);
        match self.params.variant {
            HealVariant::Heal => {
                for (i, members) in parts.iter().enumerate() {
                    let free = members.iter().filter(|&&v| eligible[v]).count();
                    let s = rng::derive(seed, 100 + i as u64);
                    let got = if free >= 1 { self.solve_part(ctx, members, 1, s)? } else { Vec::new() };
                    picked.extend(got);
                }
            }
            HealVariant::HealT => {
                let members = &parts[ctx.round.min(parts.len() - 1)];
                let free = members.iter().filter(|&&v| eligible[v]).count();
                if free >= ctx.k {
                    picked = self.solve_part(ctx, members, ctx.k, rng::derive(seed, 100))?;
                }
            }
        }
        // Exhausted parts are made up from the whole network.
        picked.sort_unstable();
        picked.dedup();
        if picked.len() < ctx.k {
            let mut extra_ctx_excl: Vec<bool> = ctx.excluded.to_vec();
            for &v in &picked {
                extra_ctx_excl[v] = true;
            }
            let sub_ctx = PlanContext { excluded: &extra_ctx_excl, ..*ctx };
            let more = self.solve_part(&sub_ctx, &whole, ctx.k - picked.len(), rng::derive(seed, 99))?;
            picked.extend(more);
        }
        Ok(DimeAction::new(picked))
    }
}
