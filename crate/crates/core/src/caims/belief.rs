//! Availability beliefs as a pairwise Markov network with exact inference
//! by enumeration over blocks of at most `cap` variables.

use crate::error::{Error, Result};
use crate::netcore::{partition, Edge, UncertainNetwork};
use crate::rng::Rng;
use rand::Rng as _;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Pairwise Markov network over binary availability variables. Unary
/// weights give the potential of "available"; each pairwise potential has
/// weight `theta` when both ends agree and `1 − theta` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovNet {
    pub unary: Vec<f64>,
    pub pairs: Vec<(usize, usize, f64)>,
}

impl MarkovNet {
    /// One attractive potential per social tie (either direction) and a
    /// uniform unary availability.
    pub fn attractive(net: &UncertainNetwork, theta: f64, availability: f64) -> Result<Self> {
        let adj = net.neighbours();
        let mut pairs = Vec::new();
        for (a, list) in adj.iter().enumerate() {
            for &b in list {
                if a < b {
                    pairs.push((a, b, theta));
                }
            }
        }
        Self::new(vec![availability; net.n()], pairs)
    }

    pub fn independent(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs, Vec::new())
    }

    pub fn new(unary: Vec<f64>, pairs: Vec<(usize, usize, f64)>) -> Result<Self> {
        if unary.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::param("availability", "unary weights must lie in [0,1]"));
        }
        for &(a, b, t) in &pairs {
            if a >= unary.len() || b >= unary.len() || a == b {
                return Err(Error::param("pairs", format!("bad pair ({a},{b})")));
            }
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::param("theta", "pairwise potentials must be strictly positive"));
            }
        }
        Ok(Self { unary, pairs })
    }

    pub fn n(&self) -> usize {
        self.unary.len()
    }

    /// Unnormalized weight of a full assignment.
    pub fn weight(&self, phi: &[bool]) -> f64 {
        let mut w = 1.0;
        for (v, &u) in self.unary.iter().enumerate() {
            w *= if phi[v] { u } else { 1.0 - u };
        }
        for &(a, b, t) in &self.pairs {
            w *= if phi[a] == phi[b] { t } else { 1.0 - t };
        }
        w
    }

    /// Draws an assignment by Gibbs sampling over the full network.
    pub fn gibbs(&self, sweeps: usize, rng: &mut Rng) -> Vec<bool> {
        let n = self.n();
        let mut nb: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, t) in &self.pairs {
            nb[a].push((b, t));
            nb[b].push((a, t));
        }
        let mut phi: Vec<bool> = self.unary.iter().map(|&u| rng.gen::<f64>() < u).collect();
        for _ in 0..sweeps {
            for v in 0..n {
                let (mut on, mut off) = (self.unary[v], 1.0 - self.unary[v]);
                for &(w, t) in &nb[v] {
                    if phi[w] {
                        on *= t;
                        off *= 1.0 - t;
                    } else {
                        on *= 1.0 - t;
                        off *= t;
                    }
                }
                phi[v] = on + off > 0.0 && rng.gen::<f64>() * (on + off) < on;
            }
        }
        phi
    }
}

#[derive(Debug)]
struct Block {
    vars: Vec<usize>,
    /// Unnormalized joint over the block's assignments (bit i = vars[i]).
    weights: Vec<f64>,
}

#[derive(Debug)]
struct Model {
    net: MarkovNet,
    blocks: Vec<Block>,
    /// (block, bit) of every variable.
    place: Vec<(usize, usize)>,
}

/// A Markov-network belief plus observed evidence.
#[derive(Debug, Clone)]
pub struct MarkovNetBelief {
    model: Arc<Model>,
    evidence: BTreeMap<usize, bool>,
}

pub const DEFAULT_CAP: usize = 20;

impl MarkovNetBelief {
    /// Builds exact block tables. Connected components larger than `cap`
    /// are split into balanced parts and potentials between parts dropped.
    pub fn new(net: MarkovNet, cap: usize) -> Result<Self> {
        if cap == 0 || cap > 24 {
            return Err(Error::param("belief_cap", "must lie in 1..=24"));
        }
        let n = net.n();
        let mut adj = vec![Vec::new(); n];
        for &(a, b, _) in &net.pairs {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut comp = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut members = vec![s];
            comp[s] = groups.len();
            let mut i = 0;
            while i < members.len() {
                for &w in &adj[members[i]] {
                    if comp[w] == usize::MAX {
                        comp[w] = groups.len();
                        members.push(w);
                    }
                }
                i += 1;
            }
            members.sort_unstable();
            if members.len() <= cap {
                groups.push(members);
            } else {
                let k = members.len().div_ceil(cap);
                let local = UncertainNetwork::with_nodes(
                    members.len(),
                    net.pairs
                        .iter()
                        .filter_map(|&(a, b, _)| {
                            let ia = members.binary_search(&a).ok()?;
                            let ib = members.binary_search(&b).ok()?;
                            Some([Edge { src: ia, dst: ib, p: 1.0 }, Edge { src: ib, dst: ia, p: 1.0 }])
                        })
                        .flatten()
                        .collect(),
                    vec![],
                )?;
                let p = partition(&local, k, 0.0, 0)?;
                for part in p.parts {
                    groups.push(part.into_iter().map(|i| members[i]).collect());
                }
            }
        }
        let mut place = vec![(0, 0); n];
        for (bi, g) in groups.iter().enumerate() {
            for (j, &v) in g.iter().enumerate() {
                place[v] = (bi, j);
            }
        }
        let mut inner: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); groups.len()];
        for &(a, b, t) in &net.pairs {
            if place[a].0 == place[b].0 {
                inner[place[a].0].push((place[a].1, place[b].1, t));
            }
        }
        let blocks = groups
            .into_iter()
            .zip(inner)
            .map(|(vars, pairs)| {
                let s = vars.len();
                let weights = (0..1u32 << s)
                    .map(|m| {
                        let mut w = 1.0;
                        for (j, &v) in vars.iter().enumerate() {
                            let u = net.unary[v];
                            w *= if m >> j & 1 == 1 { u } else { 1.0 - u };
                        }
                        for &(a, b, t) in &pairs {
                            w *= if (m >> a & 1) == (m >> b & 1) { t } else { 1.0 - t };
                        }
                        w
                    })
                    .collect();
                Block { vars, weights }
            })
            .collect();
        Ok(Self { model: Arc::new(Model { net, blocks, place }), evidence: BTreeMap::new() })
    }

    pub fn n(&self) -> usize {
        self.model.net.n()
    }

    pub fn net(&self) -> &MarkovNet {
        &self.model.net
    }

    pub fn evidence(&self) -> &BTreeMap<usize, bool> {
        &self.evidence
    }

    /// Largest block size; equal to the largest component when no
    /// component exceeded the cap.
    pub fn max_block(&self) -> usize {
        self.model.blocks.iter().map(|b| b.vars.len()).max().unwrap_or(0)
    }

    /// Same structure with no evidence.
    pub fn prior(&self) -> Self {
        Self { model: self.model.clone(), evidence: BTreeMap::new() }
    }

    fn block_evidence(&self, b: usize) -> (u32, u32) {
        let mut mask = 0;
        let mut val = 0;
        for (j, &v) in self.model.blocks[b].vars.iter().enumerate() {
            if let Some(&x) = self.evidence.get(&v) {
                mask |= 1 << j;
                if x {
                    val |= 1 << j;
                }
            }
        }
        (mask, val)
    }

    fn block_mass(&self, b: usize) -> f64 {
        let (mask, val) = self.block_evidence(b);
        let w = &self.model.blocks[b].weights;
        (0..w.len() as u32).filter(|m| m & mask == val).map(|m| w[m as usize]).sum()
    }

    /// Adds evidence. Conflicting or impossible evidence is an error.
    pub fn condition(&self, evidence: &BTreeMap<usize, bool>) -> Result<Self> {
        let mut next = self.clone();
        for (&v, &x) in evidence {
            if v >= self.n() {
                return Err(Error::param("evidence", format!("node {v} out of range")));
            }
            if let Some(&old) = next.evidence.get(&v) {
                if old != x {
                    return Err(Error::Contract(format!("conflicting evidence on node {v}")));
                }
            }
            next.evidence.insert(v, x);
        }
        let touched: std::collections::BTreeSet<usize> = evidence.keys().map(|&v| self.model.place[v].0).collect();
        for b in touched {
            if next.block_mass(b) <= 0.0 {
                return Err(Error::Contract("evidence has zero probability".into()));
            }
        }
        Ok(next)
    }

    /// Posterior probability that `v` is available.
    pub fn marginal(&self, v: usize) -> f64 {
        if let Some(&x) = self.evidence.get(&v) {
            return if x { 1.0 } else { 0.0 };
        }
        let (b, j) = self.model.place[v];
        let (mask, val) = self.block_evidence(b);
        let w = &self.model.blocks[b].weights;
        let (mut on, mut total) = (0.0, 0.0);
        for m in (0..w.len() as u32).filter(|m| m & mask == val) {
            total += w[m as usize];
            if m >> j & 1 == 1 {
                on += w[m as usize];
            }
        }
        on / total
    }

    /// Posterior probability of a full assignment.
    pub fn probability(&self, phi: &[bool]) -> f64 {
        let mut p = 1.0;
        for (b, block) in self.model.blocks.iter().enumerate() {
            let (mask, val) = self.block_evidence(b);
            let m: u32 = block.vars.iter().enumerate().fold(0, |m, (j, &v)| if phi[v] { m | 1 << j } else { m });
            if m & mask != val {
                return 0.0;
            }
            p *= block.weights[m as usize] / self.block_mass(b);
        }
        p
    }

    /// Precomputes per-block cumulative tables for repeated sampling.
    pub fn sampler(&self) -> BeliefSampler {
        let tables = (0..self.model.blocks.len())
            .map(|b| {
                let (mask, val) = self.block_evidence(b);
                let w = &self.model.blocks[b].weights;
                let mut masks = Vec::new();
                let mut cum = Vec::new();
                let mut acc = 0.0;
                for m in (0..w.len() as u32).filter(|m| m & mask == val) {
                    if w[m as usize] > 0.0 {
                        acc += w[m as usize];
                        masks.push(m);
                        cum.push(acc);
                    }
                }
                (masks, cum)
            })
            .collect();
        BeliefSampler { model: self.model.clone(), tables }
    }
}

/// Draws availability vectors from a fixed belief.
pub struct BeliefSampler {
    model: Arc<Model>,
    tables: Vec<(Vec<u32>, Vec<f64>)>,
}

/// Anything that can produce a fresh availability realization.
pub trait PhiSource {
    fn sample_phi(&self, rng: &mut Rng) -> Vec<bool>;
}

impl PhiSource for BeliefSampler {
    fn sample_phi(&self, rng: &mut Rng) -> Vec<bool> {
        let mut phi = vec![false; self.model.net.n()];
        for (block, (masks, cum)) in self.model.blocks.iter().zip(&self.tables) {
            let total = *cum.last().expect("block has mass");
            let x = rng.gen::<f64>() * total;
            let i = cum.partition_point(|&c| c <= x).min(masks.len() - 1);
            for (j, &v) in block.vars.iter().enumerate() {
                phi[v] = masks[i] >> j & 1 == 1;
            }
        }
        phi
    }
}

/// One known realization, returned every time.
pub struct FixedPhi(pub Vec<bool>);

impl PhiSource for FixedPhi {
    fn sample_phi(&self, _: &mut Rng) -> Vec<bool> {
        self.0.clone()
    }
}

/// Ground-truth availability drawn from the full network by Gibbs sampling.
pub struct GibbsSource {
    pub net: MarkovNet,
    pub sweeps: usize,
}

impl PhiSource for GibbsSource {
    fn sample_phi(&self, rng: &mut Rng) -> Vec<bool> {
        self.net.gibbs(self.sweeps, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn chain3() -> MarkovNet {
        MarkovNet::new(vec![0.5; 3], vec![(0, 1, 0.7), (1, 2, 0.7)]).unwrap()
    }

    #[test]
    fn observing_middle_raises_neighbour() {
        let b = MarkovNetBelief::new(chain3(), 20).unwrap();
        let prior = b.marginal(0);
        let post = b.condition(&[(1, true)].into_iter().collect()).unwrap().marginal(0);
        assert!(post > prior);
        assert!((post - 0.7).abs() < 1e-12);
    }

    #[test]
    fn empty_evidence_keeps_marginals() {
        let b = MarkovNetBelief::new(chain3(), 20).unwrap();
        let c = b.condition(&BTreeMap::new()).unwrap();
        for v in 0..3 {
            assert_eq!(b.marginal(v), c.marginal(v));
        }
    }

    #[test]
    fn full_evidence_is_point_mass() {
        let b = MarkovNetBelief::new(chain3(), 20).unwrap();
        let ev: BTreeMap<_, _> = [(0, true), (1, false), (2, true)].into_iter().collect();
        let c = b.condition(&ev).unwrap();
        assert!((c.probability(&[true, false, true]) - 1.0).abs() < 1e-12);
        assert_eq!(c.sampler().sample_phi(&mut rng::rng(0)), vec![true, false, true]);
    }

    #[test]
    fn conflicting_evidence_rejected() {
        let b = MarkovNetBelief::new(chain3(), 20).unwrap();
        let c = b.condition(&[(0, true)].into_iter().collect()).unwrap();
        assert!(c.condition(&[(0, false)].into_iter().collect()).is_err());
        let never = MarkovNetBelief::new(MarkovNet::independent(vec![0.0, 0.5]).unwrap(), 20).unwrap();
        assert!(never.condition(&[(0, true)].into_iter().collect()).is_err());
    }

    #[test]
    fn large_components_are_split_under_cap() {
        let pairs = (0..29).map(|i| (i, i + 1, 0.7)).collect();
        let b = MarkovNetBelief::new(MarkovNet::new(vec![0.5; 30], pairs).unwrap(), 10).unwrap();
        assert!(b.max_block() <= 10);
        let total: f64 = (0..30).map(|v| b.marginal(v)).sum();
        assert!((total - 15.0).abs() < 1e-9);
    }

    #[test]
    fn sampler_frequencies_match_marginals() {
        let b = MarkovNetBelief::new(chain3(), 20).unwrap().condition(&[(2, true)].into_iter().collect()).unwrap();
        let s = b.sampler();
        let mut r = rng::rng(4);
        let hits = (0..20_000).filter(|_| s.sample_phi(&mut r)[0]).count() as f64 / 20_000.0;
        assert!((hits - b.marginal(0)).abs() < 0.015);
    }

    #[test]
    fn gibbs_matches_exact_marginals() {
        let net = MarkovNet::new(vec![0.3, 0.5, 0.8], vec![(0, 1, 0.8), (1, 2, 0.6)]).unwrap();
        let b = MarkovNetBelief::new(net.clone(), 20).unwrap();
        let src = GibbsSource { net, sweeps: 10 };
        let mut r = rng::rng(9);
        let hits = (0..10_000).filter(|_| src.sample_phi(&mut r)[1]).count() as f64 / 10_000.0;
        assert!((hits - b.marginal(1)).abs() < 0.02);
    }
}
