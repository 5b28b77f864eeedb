//! Balanced k-way partitioning: heavy-edge coarsening, greedy region
//! growing on the coarsest graph, and boundary refinement (single moves and
//! pairwise swaps) while projecting back.

use super::UncertainNetwork;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;
use std::collections::BTreeMap;

const TRIALS: u64 = 8;
const MAX_PASSES: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Part index of every node.
    pub assignment: Vec<usize>,
    /// Sorted member lists.
    pub parts: Vec<Vec<usize>>,
}

impl Partition {
    pub fn from_assignment(assignment: Vec<usize>, k: usize) -> Self {
        let mut parts = vec![Vec::new(); k];
        for (v, &p) in assignment.iter().enumerate() {
            parts[p].push(v);
        }
        Partition { assignment, parts }
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }
}

#[derive(Clone)]
struct Graph {
    vw: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    fn from_network(net: &UncertainNetwork) -> Self {
        let n = net.n();
        let mut w: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); n];
        let pairs = net.certain().iter().map(|e| (e.src, e.dst)).chain(net.uncertain().iter().map(|e| (e.src, e.dst)));
        for (a, b) in pairs {
            *w[a].entry(b).or_default() += 1;
            *w[b].entry(a).or_default() += 1;
        }
        Graph { vw: vec![1; n], adj: w.into_iter().map(|m| m.into_iter().collect()).collect() }
    }

    fn n(&self) -> usize {
        self.vw.len()
    }

    /// Heavy-edge matching. Returns the coarse graph and the fine-to-coarse map.
    fn coarsen(&self, cap: usize, rng: &mut Rng) -> (Graph, Vec<usize>) {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut mate = vec![usize::MAX; n];
        for &v in &order {
            if mate[v] != usize::MAX {
                continue;
            }
            let mut best: Option<(usize, usize)> = None;
            for &(u, w) in &self.adj[v] {
                if mate[u] == usize::MAX && u != v && self.vw[u] + self.vw[v] <= cap
                    && best.is_none_or(|(_, bw)| w > bw) {
                        best = Some((u, w));
                    }
            }
            match best {
                Some((u, _)) => {
                    mate[v] = u;
                    mate[u] = v;
                }
                None => mate[v] = v,
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut vw = Vec::new();
        for v in 0..n {
            if map[v] == usize::MAX {
                map[v] = vw.len();
                map[mate[v]] = vw.len();
                vw.push(self.vw[v] + if mate[v] != v { self.vw[mate[v]] } else { 0 });
            }
        }
        let mut w: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); vw.len()];
        for v in 0..n {
            for &(u, x) in &self.adj[v] {
                if map[u] != map[v] {
                    *w[map[v]].entry(map[u]).or_default() += x;
                }
            }
        }
        (Graph { vw, adj: w.into_iter().map(|m| m.into_iter().collect()).collect() }, map)
    }

    fn cut(&self, part: &[usize]) -> usize {
        let mut c = 0;
        for v in 0..self.n() {
            for &(u, w) in &self.adj[v] {
                if u > v && part[u] != part[v] {
                    c += w;
                }
            }
        }
        c
    }
}

/// Grows k regions from random seeds, each absorbing the frontier vertex
/// most strongly connected to it.
fn grow(g: &Graph, k: usize, max_w: usize, rng: &mut Rng) -> Vec<usize> {
    let n = g.n();
    let total: usize = g.vw.iter().sum();
    let target = total.div_ceil(k);
    let mut part = vec![usize::MAX; n];
    let mut weight = vec![0usize; k];
    for p in 0..k {
        let free: Vec<usize> = (0..n).filter(|&v| part[v] == usize::MAX).collect();
        if free.is_empty() {
            break;
        }
        let seed = free[rng.gen_range(0..free.len())];
        part[seed] = p;
        weight[p] += g.vw[seed];
        let mut conn = vec![0usize; n];
        for &(u, w) in &g.adj[seed] {
            conn[u] += w;
        }
        while weight[p] < target {
            let next = (0..n)
                .filter(|&v| part[v] == usize::MAX && conn[v] > 0 && weight[p] + g.vw[v] <= max_w)
                .max_by_key(|&v| (conn[v], usize::MAX - v));
            let Some(v) = next else { break };
            part[v] = p;
            weight[p] += g.vw[v];
            for &(u, w) in &g.adj[v] {
                conn[u] += w;
            }
        }
    }
    for v in 0..n {
        if part[v] == usize::MAX {
            let p = (0..k).min_by_key(|&p| weight[p]).unwrap();
            part[v] = p;
            weight[p] += g.vw[v];
        }
    }
    part
}

/// Moves and swaps boundary vertices while the cut strictly improves and
/// every part stays non-empty and within `max_w`.
fn refine(g: &Graph, part: &mut [usize], k: usize, max_w: usize, rng: &mut Rng) {
    let n = g.n();
    let mut weight = vec![0usize; k];
    let mut count = vec![0usize; k];
    for v in 0..n {
        weight[part[v]] += g.vw[v];
        count[part[v]] += 1;
    }
    let conn = |v: usize, part: &[usize]| -> Vec<i64> {
        let mut c = vec![0i64; k];
        for &(u, w) in &g.adj[v] {
            c[part[u]] += w as i64;
        }
        c
    };
    for _ in 0..MAX_PASSES {
        let mut improved = false;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for &v in &order {
            let from = part[v];
            if count[from] == 1 {
                continue;
            }
            let c = conn(v, part);
            let mut best = None;
            for to in 0..k {
                if to == from || weight[to] + g.vw[v] > max_w {
                    continue;
                }
                let gain = c[to] - c[from];
                let balances = gain == 0 && weight[to] + g.vw[v] < weight[from];
                if (gain > 0 || balances)
                    && best.is_none_or(|(_, bg)| gain > bg) {
                        best = Some((to, gain));
                    }
            }
            if let Some((to, _)) = best {
                part[v] = to;
                weight[from] -= g.vw[v];
                weight[to] += g.vw[v];
                count[from] -= 1;
                count[to] += 1;
                improved = true;
            }
        }
        for &a in &order {
            let pa = part[a];
            let ca = conn(a, part);
            let mut done = false;
            for &b in &order {
                let pb = part[b];
                if pb == pa || done {
                    continue;
                }
                if weight[pa] - g.vw[a] + g.vw[b] > max_w || weight[pb] - g.vw[b] + g.vw[a] > max_w {
                    continue;
                }
                let cb = conn(b, part);
                let wab = g.adj[a].iter().find(|(u, _)| *u == b).map_or(0, |(_, w)| *w as i64);
                let gain = (ca[pb] - ca[pa]) + (cb[pa] - cb[pb]) - 2 * wab;
                if gain > 0 {
                    part[a] = pb;
                    part[b] = pa;
                    weight[pa] = weight[pa] - g.vw[a] + g.vw[b];
                    weight[pb] = weight[pb] - g.vw[b] + g.vw[a];
                    improved = true;
                    done = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

fn multilevel(g: &Graph, k: usize, max_w: usize, rng: &mut Rng) -> Vec<usize> {
    let floor = (4 * k).max(16);
    let cap = (max_w / 2).max(1);
    let mut levels: Vec<(Graph, Vec<usize>)> = Vec::new();
    let mut cur = g.clone();
    while cur.n() > floor {
        let (coarse, map) = cur.coarsen(cap, rng);
        if coarse.n() * 10 > cur.n() * 9 {
            break;
        }
        levels.push((cur, map));
        cur = coarse;
    }
    let mut part = grow(&cur, k, max_w, rng);
    refine(&cur, &mut part, k, max_w, rng);
    while let Some((fine, map)) = levels.pop() {
        let mut fine_part: Vec<usize> = (0..fine.n()).map(|v| part[map[v]]).collect();
        refine(&fine, &mut fine_part, k, max_w, rng);
        part = fine_part;
    }
    part
}

/// Largest part size allowed by the balance constraint.
pub fn max_part_size(n: usize, k: usize, slack: f64) -> usize {
    let base = n.div_ceil(k);
    ((base as f64 * (1.0 + slack)).floor() as usize).max(base)
}

/// Splits the network into `k` non-empty parts of at most
/// `max_part_size(n, k, slack)` nodes, minimizing the number of cut edges.
pub fn partition(net: &UncertainNetwork, k: usize, slack: f64, seed: u64) -> Result<Partition> {
    let n = net.n();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("need 1..={n} parts")));
    }
    if !(slack >= 0.0) {
        return Err(Error::param("balance_slack", "must be non-negative"));
    }
    let g = Graph::from_network(net);
    let max_w = max_part_size(n, k, slack);
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    for t in 0..TRIALS {
        let mut rng = rng::stream(seed, t);
        let part = multilevel(&g, k, max_w, &mut rng);
        let mut sizes = vec![0; k];
        for &p in &part {
            sizes[p] += 1;
        }
        if sizes.iter().any(|&s| s == 0 || s > max_w) {
            continue;
        }
        let cut = g.cut(&part);
        let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        if best.as_ref().is_none_or(|(bc, bs, _)| (cut, spread) < (*bc, *bs)) {
            best = Some((cut, spread, part));
        }
    }
    let (_, _, part) = best.ok_or_else(|| Error::Size("no balanced partition found".into()))?;
    Ok(Partition::from_assignment(part, k))
}

/// Number of directed edges whose endpoints lie in different parts.
pub fn cut_size(net: &UncertainNetwork, p: &Partition) -> usize {
    let a = &p.assignment;
    net.certain().iter().filter(|e| a[e.src] != a[e.dst]).count()
        + net.uncertain().iter().filter(|e| a[e.src] != a[e.dst]).count()
}
