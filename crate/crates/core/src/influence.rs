//! Multiple-chance independent cascade over a fixed number of steps: every
//! influenced node attempts each uninfluenced out-neighbour once per step
//! with the edge's propagation probability, and nodes influenced at step t
//! start attempting at step t + 1.

use crate::error::{Error, Result};
use crate::netcore::{sample_instantiation, ConcreteNetwork, Csr, EdgeRef, UncertainNetwork};
use crate::rng::{self, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;
use std::cell::RefCell;
use std::collections::HashMap;

/// Upper bound on enumerated outcomes in exact evaluation.
pub const EXACT_BUDGET: u64 = 1 << 24;

fn check_seeds(n: usize, seeds: &[usize]) -> Result<()> {
    match seeds.iter().find(|&&s| s >= n) {
        Some(s) => Err(Error::param("seeds", format!("node {s} out of range"))),
        None => Ok(()),
    }
}

/// One stochastic run of `steps` diffusion steps from `initial`.
pub fn simulate_csr(csr: &Csr, initial: &[bool], steps: usize, rng: &mut Rng) -> Vec<bool> {
    let mut on = initial.to_vec();
    let mut active: Vec<usize> = (0..on.len()).filter(|&v| on[v]).collect();
    let mut fresh = Vec::new();
    for _ in 0..steps {
        fresh.clear();
        for &u in &active {
            for (v, p) in csr.out(u) {
                if !on[v] && rng.gen::<f64>() < p {
                    fresh.push(v);
                }
            }
        }
        if fresh.is_empty() {
            continue;
        }
        for &v in &fresh {
            if !on[v] {
                on[v] = true;
                active.push(v);
            }
        }
    }
    on
}

/// Simulates diffusion on a concrete network and returns the influenced set.
pub fn simulate_spread(inst: &ConcreteNetwork, seeds: &[usize], steps: usize, rng: &mut Rng) -> Result<Vec<bool>> {
    check_seeds(inst.net.n(), seeds)?;
    let mut init = vec![false; inst.net.n()];
    for &s in seeds {
        init[s] = true;
    }
    Ok(simulate_csr(&Csr::from_concrete(inst), &init, steps, rng))
}

/// Exact expected number of influenced nodes, averaging over uncertain
/// edges and propagation coins.
pub fn exact_expected_spread(net: &UncertainNetwork, seeds: &[usize], steps: usize) -> Result<f64> {
    exact_conditional_spread(net, seeds, steps, &vec![None; net.m()])
}

/// Exact expected spread given partial knowledge of the uncertain edges:
/// `known[i]` fixes the existence of uncertain edge `i` when set.
pub fn exact_conditional_spread(
    net: &UncertainNetwork,
    seeds: &[usize],
    steps: usize,
    known: &[Option<bool>],
) -> Result<f64> {
    let n = net.n();
    check_seeds(n, seeds)?;
    if n > 64 {
        return Err(Error::Size(format!("exact evaluation supports at most 64 nodes, got {n}")));
    }
    if known.len() != net.m() {
        return Err(Error::Contract("knowledge vector length differs from uncertain edge count".into()));
    }
    let free: Vec<usize> = (0..net.m()).filter(|&i| known[i].is_none()).collect();
    if free.len() > 24 {
        return Err(Error::Size(format!("{} unknown uncertain edges", free.len())));
    }
    let start: u64 = seeds.iter().fold(0, |m, &s| m | 1 << s);
    let mut budget = EXACT_BUDGET;
    let mut total = 0.0;
    let mut f: Vec<bool> = known.iter().map(|k| k.unwrap_or(false)).collect();
    for mask in 0..1u64 << free.len() {
        let mut weight = 1.0;
        for (j, &i) in free.iter().enumerate() {
            let b = mask >> j & 1 == 1;
            f[i] = b;
            weight *= if b { net.uncertain()[i].u } else { 1.0 - net.uncertain()[i].u };
        }
        if weight == 0.0 {
            continue;
        }
        let csr = Csr::from_concrete(&ConcreteNetwork { net, f: &f });
        total += weight * exact_on_csr(&csr, start, steps, &mut budget)?;
    }
    Ok(total)
}

/// Exact expected influenced count on a fixed edge set by propagating the
/// distribution over influenced sets one step at a time.
fn exact_on_csr(csr: &Csr, start: u64, steps: usize, budget: &mut u64) -> Result<f64> {
    let n = csr.n();
    let mut dist: HashMap<u64, f64> = HashMap::from([(start, 1.0)]);
    for _ in 0..steps {
        let mut next: HashMap<u64, f64> = HashMap::with_capacity(dist.len());
        for (&set, &pr) in &dist {
            // Success probability for each uninfluenced node with an influenced in-neighbour.
            let mut fail = vec![1.0f64; n];
            for u in (0..n).filter(|&u| set >> u & 1 == 1) {
                for (v, p) in csr.out(u) {
                    if set >> v & 1 == 0 {
                        fail[v] *= 1.0 - p;
                    }
                }
            }
            let cand: Vec<(usize, f64)> =
                (0..n).filter(|&v| set >> v & 1 == 0 && fail[v] < 1.0).map(|v| (v, 1.0 - fail[v])).collect();
            let outcomes = 1u64 << cand.len();
            if outcomes > *budget {
                return Err(Error::Size("exact evaluation budget exceeded".into()));
            }
            *budget -= outcomes;
            for pattern in 0..outcomes {
                let mut q = pr;
                let mut s = set;
                for (j, &(v, p)) in cand.iter().enumerate() {
                    if pattern >> j & 1 == 1 {
                        q *= p;
                        s |= 1 << v;
                    } else {
                        q *= 1.0 - p;
                    }
                }
                if q > 0.0 {
                    *next.entry(s).or_default() += q;
                }
            }
        }
        dist = next;
    }
    Ok(dist.iter().map(|(&s, &p)| p * s.count_ones() as f64).sum())
}

/// Expected influenced count after a single step from `seeds` on a network
/// whose edges are all certain.
pub fn one_step_spread(csr: &Csr, seeds: &[bool]) -> f64 {
    let n = csr.n();
    let mut fail = vec![1.0f64; n];
    for u in (0..n).filter(|&u| seeds[u]) {
        for (v, p) in csr.out(u) {
            fail[v] *= 1.0 - p;
        }
    }
    (0..n).map(|v| if seeds[v] { 1.0 } else { 1.0 - fail[v] }).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Monte Carlo estimate of expected spread over random instantiations.
pub fn mc_expected_spread(
    net: &UncertainNetwork,
    seeds: &[usize],
    steps: usize,
    nsim: usize,
    seed: u64,
) -> Result<SpreadEstimate> {
    check_seeds(net.n(), seeds)?;
    if nsim == 0 {
        return Err(Error::param("nsim", "must be positive"));
    }
    let mut init = vec![false; net.n()];
    for &s in seeds {
        init[s] = true;
    }
    let (mut sum, mut sq) = (0.0, 0.0);
    for i in 0..nsim {
        let mut r = rng::stream(seed, i as u64);
        let f = sample_instantiation(net, &mut r);
        let csr = Csr::from_concrete(&ConcreteNetwork { net, f: &f });
        let x = simulate_csr(&csr, &init, steps, &mut r).iter().filter(|&&b| b).count() as f64;
        sum += x;
        sq += x * x;
    }
    let k = nsim as f64;
    let mean = sum / k;
    let var = if nsim > 1 { ((sq - k * mean * mean) / (k - 1.0)).max(0.0) } else { 0.0 };
    Ok(SpreadEstimate { mean, std_err: (var / k).sqrt() })
}

/// Pre-sampled live-edge worlds. Each world fixes edge existence and the
/// propagation coin of every edge at every step, so that spreads of
/// different seed sets are compared on common random numbers.
#[derive(Debug, Clone)]
pub struct SpreadSampler {
    csr: Csr,
    steps: usize,
    worlds: Vec<Vec<u32>>,
}

impl SpreadSampler {
    pub fn new(net: &UncertainNetwork, steps: usize, nsim: usize, seed: u64) -> Result<Self> {
        if steps > 32 {
            return Err(Error::param("steps", "at most 32 diffusion steps are supported"));
        }
        if nsim == 0 {
            return Err(Error::param("nsim", "must be positive"));
        }
        let csr = Csr::all_edges(net);
        let mut existence_u = vec![1.0; csr.edge_total()];
        for u in 0..net.n() {
            for (slot, (v, _)) in csr.edge_range(u).zip(csr.out(u)) {
                if let Some(EdgeRef::Uncertain(i)) = net.edge(u, v) {
                    existence_u[slot] = net.uncertain()[i].u;
                }
            }
        }
        let worlds = (0..nsim)
            .map(|i| {
                let mut r = rng::stream(seed, i as u64);
                (0..csr.edge_total())
                    .map(|e| {
                        if r.gen::<f64>() >= existence_u[e] {
                            return 0;
                        }
                        let p = csr.probs[e];
                        (0..steps).fold(0u32, |m, t| if r.gen::<f64>() < p { m | 1 << t } else { m })
                    })
                    .collect()
            })
            .collect();
        Ok(Self { csr, steps, worlds })
    }

    pub fn n(&self) -> usize {
        self.csr.n()
    }

    pub fn nsim(&self) -> usize {
        self.worlds.len()
    }

    /// Influenced count in one world, by earliest-arrival propagation.
    fn world_spread(&self, w: usize, seeds: &[usize], arrival: &mut [u32], buckets: &mut [Vec<usize>]) -> usize {
        let masks = &self.worlds[w];
        let l = self.steps as u32;
        arrival.fill(u32::MAX);
        for b in buckets.iter_mut() {
            b.clear();
        }
        for &s in seeds {
            arrival[s] = 0;
            buckets[0].push(s);
        }
        let mut count = 0;
        for t in 0..=self.steps {
            let mut i = 0;
            while i < buckets[t].len() {
                let u = buckets[t][i];
                i += 1;
                if arrival[u] != t as u32 {
                    continue;
                }
                arrival[u] = t as u32;
                count += 1;
                if t as u32 >= l {
                    continue;
                }
                for e in self.csr.edge_range(u) {
                    let m = masks[e] >> t;
                    if m == 0 {
                        continue;
                    }
                    let at = t as u32 + m.trailing_zeros() + 1;
                    let v = self.csr.targets[e];
                    if at <= l && at < arrival[v] {
                        arrival[v] = at;
                        buckets[at as usize].push(v);
                    }
                }
            }
        }
        count
    }

    /// Mean influenced count over all worlds.
    pub fn spread(&self, seeds: &[usize]) -> f64 {
        let mut arrival = vec![u32::MAX; self.n()];
        let mut buckets = vec![Vec::new(); self.steps + 1];
        let mut uniq = seeds.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        let total: usize = (0..self.worlds.len()).map(|w| self.world_spread(w, &uniq, &mut arrival, &mut buckets)).sum();
        total as f64 / self.worlds.len() as f64
    }
}

/// Expected-spread evaluator used by planners that need many evaluations.
pub trait SpreadOracle {
    fn spread(&self, seeds: &[usize]) -> f64;
}

/// Memoizing wrapper around a sampler.
pub struct CachedSpread {
    sampler: SpreadSampler,
    cache: RefCell<HashMap<Vec<usize>, f64>>,
}

impl CachedSpread {
    pub fn new(sampler: SpreadSampler) -> Self {
        Self { sampler, cache: RefCell::new(HashMap::new()) }
    }
}

impl SpreadOracle for CachedSpread {
    fn spread(&self, seeds: &[usize]) -> f64 {
        let mut key = seeds.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&v) = self.cache.borrow().get(&key) {
            return v;
        }
        let v = self.sampler.spread(&key);
        self.cache.borrow_mut().insert(key, v);
        v
    }
}

/// Exact evaluation on small networks.
pub struct ExactSpread<'a> {
    pub net: &'a UncertainNetwork,
    pub steps: usize,
    cache: RefCell<HashMap<Vec<usize>, f64>>,
}

impl<'a> ExactSpread<'a> {
    pub fn new(net: &'a UncertainNetwork, steps: usize) -> Self {
        Self { net, steps, cache: RefCell::new(HashMap::new()) }
    }
}

impl SpreadOracle for ExactSpread<'_> {
    fn spread(&self, seeds: &[usize]) -> f64 {
        let mut key = seeds.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&v) = self.cache.borrow().get(&key) {
            return v;
        }
        let v = exact_expected_spread(self.net, &key, self.steps).expect("network small enough for exact evaluation");
        self.cache.borrow_mut().insert(key, v);
        v
    }
}

/// Exact single-step spread with every edge present at its propagation
/// probability; uncertain edges should be collapsed beforehand.
pub struct OneStepSpread {
    pub csr: Csr,
}

impl OneStepSpread {
    pub fn new(net: &UncertainNetwork) -> Self {
        Self { csr: Csr::all_edges(net) }
    }
}

impl SpreadOracle for OneStepSpread {
    fn spread(&self, seeds: &[usize]) -> f64 {
        let mut mask = vec![false; self.csr.n()];
        for &s in seeds {
            mask[s] = true;
        }
        one_step_spread(&self.csr, &mask)
    }
}

impl SpreadOracle for SpreadSampler {
    fn spread(&self, seeds: &[usize]) -> f64 {
        SpreadSampler::spread(self, seeds)
    }
}

/// Greedily adds `k` nodes to `base`, each maximizing the marginal gain of
/// the oracle. Ties go to the lowest node id. `eligible` restricts the
/// candidates.
pub fn greedy_extend(oracle: &dyn SpreadOracle, n: usize, base: &[usize], k: usize, eligible: Option<&[bool]>) -> Vec<usize> {
    let mut chosen = base.to_vec();
    let mut picked = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    for &b in base {
        taken[b] = true;
    }
    let mut current = oracle.spread(&chosen);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for v in 0..n {
            if taken[v] || eligible.is_some_and(|e| !e[v]) {
                continue;
            }
            chosen.push(v);
            let gain = oracle.spread(&chosen) - current;
            chosen.pop();
            if best.is_none_or(|(_, g)| gain > g + 1e-12) {
                best = Some((v, gain));
            }
        }
        let Some((v, g)) = best else { break };
        taken[v] = true;
        chosen.push(v);
        picked.push(v);
        current += g;
    }
    picked
}

/// Greedy seed selection on the network with uncertain edges collapsed to
/// certain edges of probability `p·u`.
pub fn greedy_select(net: &UncertainNetwork, k: usize, steps: usize, nsim: usize, seed: u64) -> Result<Vec<usize>> {
    if k > net.n() {
        return Err(Error::param("k", format!("cannot pick {k} of {} nodes", net.n())));
    }
    let sampler = SpreadSampler::new(&net.collapse(), steps, nsim, seed)?;
    Ok(greedy_extend(&sampler, net.n(), &[], k, None))
}

/// Top-`k` nodes by expected out-degree (uncertain edges weighted by `u`).
/// Ties go to the lowest id.
pub fn degree_centrality_select(net: &UncertainNetwork, k: usize, eligible: Option<&[bool]>) -> Result<Vec<usize>> {
    let deg = net.expected_out_degree();
    let mut cand: Vec<usize> = (0..net.n()).filter(|&v| eligible.is_none_or(|e| e[v])).collect();
    if k > cand.len() {
        return Err(Error::param("k", format!("only {} eligible nodes", cand.len())));
    }
    cand.sort_by(|&a, &b| deg[b].total_cmp(&deg[a]).then(a.cmp(&b)));
    cand.truncate(k);
    Ok(cand)
}

/// Source of node availability realizations.
pub trait AvailabilityModel {
    fn sample(&self, rng: &mut Rng) -> Vec<bool>;
}

/// Every node independently available with a fixed probability.
pub struct IndependentAvailability {
    pub n: usize,
    pub q: f64,
}

impl AvailabilityModel for IndependentAvailability {
    fn sample(&self, rng: &mut Rng) -> Vec<bool> {
        (0..self.n).map(|_| rng.gen::<f64>() < self.q).collect()
    }
}

/// A single known realization.
pub struct FixedAvailability(pub Vec<bool>);

impl AvailabilityModel for FixedAvailability {
    fn sample(&self, _: &mut Rng) -> Vec<bool> {
        self.0.clone()
    }
}

/// Picks `m·k` nodes greedily, invites them one at a time in random order
/// and locks the first `k` that are available and accept (each available
/// node accepts with probability `accept`).
pub fn overprovisioned_run(
    oracle: &dyn SpreadOracle,
    n: usize,
    k: usize,
    m: usize,
    availability: &dyn AvailabilityModel,
    accept: f64,
    seed: u64,
) -> Vec<usize> {
    let mut rng = rng::stream(seed, 0);
    let mut list = greedy_extend(oracle, n, &[], (m * k).min(n), None);
    let avail = availability.sample(&mut rng);
    list.shuffle(&mut rng);
    let mut locked = Vec::new();
    for v in list {
        if locked.len() == k {
            break;
        }
        if avail[v] && rng.gen::<f64>() < accept {
            locked.push(v);
        }
    }
    locked
}
