//! Random graph generators. Every generator produces an undirected simple
//! graph whose edges are emitted in both directions.

use super::{Edge, UncertainEdge, UncertainNetwork};
use crate::error::{Error, Result};
use crate::rng;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphModel {
    /// Stochastic block model. With `heavy_tail` the block sizes follow a
    /// Zipf-like profile instead of being equal.
    Sbm {
        blocks: usize,
        p_in: f64,
        p_out: f64,
        #[serde(default)]
        heavy_tail: bool,
    },
    PreferentialAttachment { m: usize },
    WattsStrogatz { k: usize, rewire: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub model: GraphModel,
    pub n: usize,
    /// Fraction of directed edges marked uncertain (rounded down).
    #[serde(default)]
    pub uncertain_fraction: f64,
    /// Existence probability of uncertain edges.
    #[serde(default = "half")]
    pub u: f64,
    /// Propagation probability of every edge.
    #[serde(default = "half")]
    pub p: f64,
}

fn half() -> f64 {
    0.5
}

/// A generated network plus the planted block of each node (all zero for
/// models without blocks).
#[derive(Debug, Clone)]
pub struct Generated {
    pub network: UncertainNetwork,
    pub blocks: Vec<usize>,
}

fn prob(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{x} is not a probability")))
    }
}

pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Generated> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    prob("uncertain_fraction", spec.uncertain_fraction)?;
    prob("p", spec.p)?;
    if !(spec.u > 0.0 && spec.u < 1.0) {
        return Err(Error::param("u", "must lie strictly between 0 and 1"));
    }
    let mut rng = rng::stream(seed, 0);
    let mut blocks = vec![0; n];
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    match spec.model {
        GraphModel::Sbm { blocks: b, p_in, p_out, heavy_tail } => {
            prob("p_in", p_in)?;
            prob("p_out", p_out)?;
            if b == 0 || b > n {
                return Err(Error::param("blocks", format!("need 1..={n}")));
            }
            let sizes = if heavy_tail { zipf_sizes(n, b) } else { (0..b).map(|i| n / b + usize::from(i < n % b)).collect() };
            let mut v = 0;
            for (i, s) in sizes.iter().enumerate() {
                for _ in 0..*s {
                    blocks[v] = i;
                    v += 1;
                }
            }
            for a in 0..n {
                for c in a + 1..n {
                    let q = if blocks[a] == blocks[c] { p_in } else { p_out };
                    if rng.gen::<f64>() < q {
                        pairs.insert((a, c));
                    }
                }
            }
        }
        GraphModel::PreferentialAttachment { m } => {
            if m == 0 || m >= n {
                return Err(Error::param("m", format!("need 1..{n}")));
            }
            // Start from a star on m+1 nodes, then attach proportionally to degree.
            let mut urn: Vec<usize> = Vec::new();
            for t in 1..=m {
                pairs.insert((0, t));
                urn.extend([0, t]);
            }
            for v in m + 1..n {
                let mut targets = BTreeSet::new();
                while targets.len() < m {
                    targets.insert(urn[rng.gen_range(0..urn.len())]);
                }
                for t in targets {
                    pairs.insert((t, v));
                    urn.extend([t, v]);
                }
            }
        }
        GraphModel::WattsStrogatz { k, rewire } => {
            prob("rewire", rewire)?;
            if k < 2 || k >= n {
                return Err(Error::param("k", format!("need 2..{n}")));
            }
            let half = k / 2;
            for v in 0..n {
                for j in 1..=half {
                    let w = (v + j) % n;
                    pairs.insert((v.min(w), v.max(w)));
                }
            }
            for v in 0..n {
                for j in 1..=half {
                    let w = (v + j) % n;
                    let key = (v.min(w), v.max(w));
                    if rng.gen::<f64>() >= rewire || !pairs.contains(&key) {
                        continue;
                    }
                    let free: Vec<usize> =
                        (0..n).filter(|&x| x != v && !pairs.contains(&(v.min(x), v.max(x)))).collect();
                    // Keep the lattice edge if it is v's only one.
                    let degree = pairs.iter().filter(|(a, b)| *a == v || *b == v).count();
                    if free.is_empty() || degree <= 1 {
                        continue;
                    }
                    let x = free[rng.gen_range(0..free.len())];
                    pairs.remove(&key);
                    pairs.insert((v.min(x), v.max(x)));
                }
            }
        }
    }
    let directed: Vec<(usize, usize)> = pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    let count = (spec.uncertain_fraction * directed.len() as f64).floor() as usize;
    let mut is_uncertain = vec![false; directed.len()];
    for i in sample(&mut rng, directed.len(), count.min(directed.len())) {
        is_uncertain[i] = true;
    }
    let mut certain = Vec::new();
    let mut uncertain = Vec::new();
    for (&(src, dst), &unc) in directed.iter().zip(&is_uncertain) {
        if unc {
            uncertain.push(UncertainEdge { src, dst, p: spec.p, u: spec.u });
        } else {
            certain.push(Edge { src, dst, p: spec.p });
        }
    }
    Ok(Generated { network: UncertainNetwork::with_nodes(n, certain, uncertain)?, blocks })
}

fn zipf_sizes(n: usize, b: usize) -> Vec<usize> {
    let w: Vec<f64> = (0..b).map(|i| 1.0 / (i + 1) as f64).collect();
    let total: f64 = w.iter().sum();
    let mut sizes: Vec<usize> = w.iter().map(|x| ((x / total) * n as f64).floor().max(1.0) as usize).collect();
    while sizes.iter().sum::<usize>() > n {
        let i = (0..b).max_by_key(|&i| sizes[i]).unwrap();
        sizes[i] -= 1;
    }
    let mut i = 0;
    while sizes.iter().sum::<usize>() < n {
        sizes[i % b] += 1;
        i += 1;
    }
    sizes
}
