//! Uncertain social networks: nodes, certain and uncertain directed edges,
//! instantiations of the uncertain edges, and a compact adjacency form used
//! by the diffusion simulators.

mod generate;
mod partition;

pub use generate::{generate, Generated, GeneratorSpec, GraphModel};
pub use partition::{cut_size, partition, Partition};

use crate::error::{Error, Result};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

/// A directed edge with propagation probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub p: f64,
}

/// A directed edge that exists with probability `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainEdge {
    pub src: usize,
    pub dst: usize,
    pub p: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRef {
    Certain(usize),
    Uncertain(usize),
}

/// Network with certain edges and uncertain edges. Uncertain edges are
/// indexed by their position in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainNetwork {
    labels: Vec<String>,
    certain: Vec<Edge>,
    uncertain: Vec<UncertainEdge>,
    lookup: HashMap<(usize, usize), EdgeRef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(default = "default_directed")]
    directed: bool,
    nodes: Vec<String>,
    edges: Vec<RawEdge>,
}

fn default_directed() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    src: usize,
    dst: usize,
    p: f64,
    #[serde(default)]
    u: Option<f64>,
}

#[derive(Serialize)]
struct OutNetwork<'a> {
    directed: bool,
    nodes: &'a [String],
    edges: Vec<OutEdge>,
}

#[derive(Serialize)]
struct OutEdge {
    src: usize,
    dst: usize,
    p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
}

impl UncertainNetwork {
    pub fn new(labels: Vec<String>, certain: Vec<Edge>, uncertain: Vec<UncertainEdge>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Validation("network has no nodes".into()));
        }
        let mut lookup = HashMap::with_capacity(certain.len() + uncertain.len());
        let check = |src: usize, dst: usize, p: f64, what: &str, i: usize| -> Result<()> {
            let field = format!("{what}[{i}]");
            if src >= n || dst >= n {
                return Err(Error::parse(field, format!("endpoint out of range for {n} nodes")));
            }
            if src == dst {
                return Err(Error::parse(field, "self loop"));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::parse(format!("{field}.p"), format!("{p} is not a probability")));
            }
            Ok(())
        };
        for (i, e) in certain.iter().enumerate() {
            check(e.src, e.dst, e.p, "certain", i)?;
            if lookup.insert((e.src, e.dst), EdgeRef::Certain(i)).is_some() {
                return Err(Error::Validation(format!("duplicate edge {} -> {}", e.src, e.dst)));
            }
        }
        for (i, e) in uncertain.iter().enumerate() {
            check(e.src, e.dst, e.p, "uncertain", i)?;
            if !(e.u > 0.0 && e.u < 1.0) {
                return Err(Error::parse(format!("uncertain[{i}].u"), format!("{} not in (0,1)", e.u)));
            }
            if lookup.insert((e.src, e.dst), EdgeRef::Uncertain(i)).is_some() {
                return Err(Error::Validation(format!("duplicate edge {} -> {}", e.src, e.dst)));
            }
        }
        Ok(Self { labels, certain, uncertain, lookup })
    }

    /// Network with nodes labelled `0..n`.
    pub fn with_nodes(n: usize, certain: Vec<Edge>, uncertain: Vec<UncertainEdge>) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect(), certain, uncertain)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawNetwork = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::parse(if path.is_empty() { ".".into() } else { path }, e.inner().to_string())
        })?;
        let n = raw.nodes.len();
        if n == 0 {
            return Err(Error::parse("nodes", "at least one node is required"));
        }
        let mut certain = Vec::new();
        let mut uncertain = Vec::new();
        let mut seen = HashMap::new();
        for (i, e) in raw.edges.iter().enumerate() {
            let field = format!("edges[{i}]");
            if e.src >= n {
                return Err(Error::parse(format!("{field}.src"), format!("{} out of range", e.src)));
            }
            if e.dst >= n {
                return Err(Error::parse(format!("{field}.dst"), format!("{} out of range", e.dst)));
            }
            if e.src == e.dst {
                return Err(Error::parse(field, "self loop"));
            }
            if !(0.0..=1.0).contains(&e.p) || e.p.is_nan() {
                return Err(Error::parse(format!("{field}.p"), format!("{} is not a probability", e.p)));
            }
            if let Some(u) = e.u {
                if !(u > 0.0 && u <= 1.0) {
                    return Err(Error::parse(format!("{field}.u"), format!("{u} not in (0,1]")));
                }
            }
            let mut dirs = vec![(e.src, e.dst)];
            if !raw.directed {
                dirs.push((e.dst, e.src));
            }
            for (s, d) in dirs {
                if seen.insert((s, d), i).is_some() {
                    return Err(Error::parse(field.clone(), format!("duplicate edge {s} -> {d}")));
                }
                match e.u {
                    Some(u) if u < 1.0 => uncertain.push(UncertainEdge { src: s, dst: d, p: e.p, u }),
                    _ => certain.push(Edge { src: s, dst: d, p: e.p }),
                }
            }
        }
        Self::new(raw.nodes, certain, uncertain)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let mut edges: Vec<OutEdge> =
            self.certain.iter().map(|e| OutEdge { src: e.src, dst: e.dst, p: e.p, u: None }).collect();
        edges.extend(self.uncertain.iter().map(|e| OutEdge { src: e.src, dst: e.dst, p: e.p, u: Some(e.u) }));
        serde_json::to_string_pretty(&OutNetwork { directed: true, nodes: &self.labels, edges })
            .expect("network serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of uncertain edges.
    pub fn m(&self) -> usize {
        self.uncertain.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn certain(&self) -> &[Edge] {
        &self.certain
    }

    pub fn uncertain(&self) -> &[UncertainEdge] {
        &self.uncertain
    }

    pub fn edge(&self, src: usize, dst: usize) -> Option<EdgeRef> {
        self.lookup.get(&(src, dst)).copied()
    }

    pub fn edge_count(&self) -> usize {
        self.certain.len() + self.uncertain.len()
    }

    /// Mean propagation probability over all edges (0 for an edgeless network).
    pub fn mean_p(&self) -> f64 {
        let total: f64 = self.certain.iter().map(|e| e.p).chain(self.uncertain.iter().map(|e| e.p)).sum();
        let count = self.edge_count();
        if count == 0 { 0.0 } else { total / count as f64 }
    }

    /// Indices of uncertain edges leaving any of `nodes`.
    pub fn uncertain_out_of(&self, nodes: &[usize]) -> Vec<usize> {
        let mut mark = vec![false; self.n()];
        for &v in nodes {
            mark[v] = true;
        }
        (0..self.uncertain.len()).filter(|&i| mark[self.uncertain[i].src]).collect()
    }

    /// Weighted out-degree counting uncertain edges at weight `u`.
    pub fn expected_out_degree(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n()];
        for e in &self.certain {
            d[e.src] += 1.0;
        }
        for e in &self.uncertain {
            d[e.src] += e.u;
        }
        d
    }

    /// Undirected neighbour lists over every edge, certain or not.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        let pairs = self.certain.iter().map(|e| (e.src, e.dst)).chain(self.uncertain.iter().map(|e| (e.src, e.dst)));
        for (a, b) in pairs {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    /// All uncertain edges replaced by certain edges with probability `p·u`.
    pub fn collapse(&self) -> UncertainNetwork {
        let mut certain = self.certain.clone();
        certain.extend(self.uncertain.iter().map(|e| Edge { src: e.src, dst: e.dst, p: e.p * e.u }));
        Self::new(self.labels.clone(), certain, Vec::new()).expect("collapse keeps validity")
    }

    /// Refines the network with revealed edge existence. Revealed-present
    /// edges become certain, revealed-absent edges are removed. Entries about
    /// edges that are already resolved consistently are ignored; entries that
    /// contradict the network or name unknown edges are contract violations.
    pub fn refine(&self, revealed: &BTreeMap<(usize, usize), bool>) -> Result<UncertainNetwork> {
        let mut fate: Vec<Option<bool>> = vec![None; self.uncertain.len()];
        for (&(s, d), &exists) in revealed {
            match self.edge(s, d) {
                Some(EdgeRef::Uncertain(i)) => fate[i] = Some(exists),
                Some(EdgeRef::Certain(_)) if exists => {}
                None if !exists => {}
                _ => {
                    return Err(Error::Contract(format!(
                        "observation of edge {s} -> {d} = {exists} is inconsistent with the network"
                    )))
                }
            }
        }
        let mut certain = self.certain.clone();
        let mut uncertain = Vec::with_capacity(self.uncertain.len());
        for (e, f) in self.uncertain.iter().zip(&fate) {
            match f {
                Some(true) => certain.push(Edge { src: e.src, dst: e.dst, p: e.p }),
                Some(false) => {}
                None => uncertain.push(*e),
            }
        }
        Self::new(self.labels.clone(), certain, uncertain)
    }

    /// Subnetwork induced by `nodes`, relabelled `0..nodes.len()` in the
    /// given order. Uncertain edges keep their relative order.
    pub fn induced(&self, nodes: &[usize]) -> UncertainNetwork {
        let mut local = vec![usize::MAX; self.n()];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let certain = self
            .certain
            .iter()
            .filter(|e| local[e.src] != usize::MAX && local[e.dst] != usize::MAX)
            .map(|e| Edge { src: local[e.src], dst: local[e.dst], p: e.p })
            .collect();
        let uncertain = self
            .uncertain
            .iter()
            .filter(|e| local[e.src] != usize::MAX && local[e.dst] != usize::MAX)
            .map(|e| UncertainEdge { src: local[e.src], dst: local[e.dst], p: e.p, u: e.u })
            .collect();
        let labels = nodes.iter().map(|&v| self.labels[v].clone()).collect();
        Self::new(labels, certain, uncertain).expect("induced subnetwork is valid")
    }
}

/// An assignment of existence bits to the uncertain edges of a network.
#[derive(Debug, Clone, Copy)]
pub struct ConcreteNetwork<'a> {
    pub net: &'a UncertainNetwork,
    pub f: &'a [bool],
}

impl<'a> ConcreteNetwork<'a> {
    pub fn new(net: &'a UncertainNetwork, f: &'a [bool]) -> Result<Self> {
        if f.len() != net.m() {
            return Err(Error::Contract(format!("{} existence bits for {} uncertain edges", f.len(), net.m())));
        }
        Ok(Self { net, f })
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.net.certain.iter().copied().chain(
            self.net
                .uncertain
                .iter()
                .zip(self.f)
                .filter(|(_, &b)| b)
                .map(|(e, _)| Edge { src: e.src, dst: e.dst, p: e.p }),
        )
    }
}

/// Draws each uncertain edge independently with its existence probability.
pub fn sample_instantiation(net: &UncertainNetwork, rng: &mut Rng) -> Vec<bool> {
    net.uncertain.iter().map(|e| rng.gen::<f64>() < e.u).collect()
}

/// Probability of an instantiation under independent edge existence.
pub fn instantiation_probability(net: &UncertainNetwork, f: &[bool]) -> f64 {
    instantiation_log_probability(net, f).exp()
}

pub fn instantiation_log_probability(net: &UncertainNetwork, f: &[bool]) -> f64 {
    net.uncertain.iter().zip(f).map(|(e, &b)| if b { e.u.ln() } else { (1.0 - e.u).ln() }).sum()
}

/// Compressed out-adjacency with per-edge propagation probability.
#[derive(Debug, Clone)]
pub struct Csr {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub probs: Vec<f64>,
}

impl Csr {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut list: Vec<Edge> = edges.into_iter().collect();
        list.sort_by_key(|e| (e.src, e.dst));
        let mut offsets = vec![0; n + 1];
        for e in &list {
            offsets[e.src + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr { offsets, targets: list.iter().map(|e| e.dst).collect(), probs: list.iter().map(|e| e.p).collect() }
    }

    pub fn from_concrete(inst: &ConcreteNetwork) -> Self {
        Self::from_edges(inst.net.n(), inst.edges())
    }

    /// Every edge present, certain or uncertain, at its own `p`.
    pub fn all_edges(net: &UncertainNetwork) -> Self {
        let all = vec![true; net.m()];
        Self::from_concrete(&ConcreteNetwork { net, f: &all })
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn out(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()].iter().copied().zip(self.probs[r].iter().copied())
    }

    pub fn edge_range(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    pub fn edge_total(&self) -> usize {
        self.targets.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn small() -> UncertainNetwork {
        UncertainNetwork::with_nodes(
            3,
            vec![Edge { src: 0, dst: 1, p: 0.5 }],
            vec![UncertainEdge { src: 1, dst: 2, p: 0.5, u: 0.25 }, UncertainEdge { src: 2, dst: 0, p: 0.5, u: 0.5 }],
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_preserves_uncertain_order() {
        let net = small();
        let back = UncertainNetwork::from_json_str(&net.to_json_string()).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn undirected_edges_expand_both_ways() {
        let text = r#"{"directed": false, "nodes": ["a","b"], "edges": [{"src":0,"dst":1,"p":0.3,"u":0.5}]}"#;
        let net = UncertainNetwork::from_json_str(text).unwrap();
        assert_eq!(net.m(), 2);
        assert_eq!(net.edge(1, 0), Some(EdgeRef::Uncertain(1)));
    }

    #[test]
    fn u_of_one_is_certain() {
        let text = r#"{"nodes": ["a","b"], "edges": [{"src":0,"dst":1,"p":0.3,"u":1.0}]}"#;
        let net = UncertainNetwork::from_json_str(text).unwrap();
        assert_eq!(net.m(), 0);
        assert_eq!(net.certain().len(), 1);
    }

    #[test]
    fn invalid_probability_names_field() {
        let text = r#"{"nodes": ["a","b"], "edges": [{"src":0,"dst":1,"p":1.5}]}"#;
        match UncertainNetwork::from_json_str(text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "edges[0].p"),
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{"nodes": ["a","b"], "edges": [{"src":0,"dst":"x","p":0.5}]}"#;
        match UncertainNetwork::from_json_str(text) {
            Err(Error::Parse { field, .. }) => assert!(field.starts_with("edges[0].dst"), "{field}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_self_loops_rejected() {
        let dup = r#"{"nodes": ["a","b"], "edges": [{"src":0,"dst":1,"p":0.5},{"src":0,"dst":1,"p":0.2}]}"#;
        assert!(UncertainNetwork::from_json_str(dup).is_err());
        let lp = r#"{"nodes": ["a"], "edges": [{"src":0,"dst":0,"p":0.5}]}"#;
        assert!(UncertainNetwork::from_json_str(lp).is_err());
    }

    #[test]
    fn no_uncertain_edges_gives_empty_instantiation() {
        let net = UncertainNetwork::with_nodes(2, vec![Edge { src: 0, dst: 1, p: 1.0 }], vec![]).unwrap();
        let f = sample_instantiation(&net, &mut rng::rng(1));
        assert!(f.is_empty());
        assert_eq!(instantiation_probability(&net, &f), 1.0);
    }

    #[test]
    fn instantiation_probabilities_sum_to_one() {
        let net = small();
        let total: f64 = (0..4u32)
            .map(|mask| {
                let f: Vec<bool> = (0..2).map(|i| mask >> i & 1 == 1).collect();
                instantiation_probability(&net, &f)
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((instantiation_probability(&net, &[true, false]) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn refine_is_idempotent_and_rejects_contradictions() {
        let net = small();
        let obs: BTreeMap<_, _> = [((1, 2), true)].into_iter().collect();
        let once = net.refine(&obs).unwrap();
        assert_eq!(once.m(), 1);
        assert_eq!(once.refine(&obs).unwrap(), once);
        let bad: BTreeMap<_, _> = [((1, 2), false)].into_iter().collect();
        assert!(once.refine(&bad).is_err());
        let unknown: BTreeMap<_, _> = [((0, 2), true)].into_iter().collect();
        assert!(net.refine(&unknown).is_err());
    }

    #[test]
    fn csr_matches_edges() {
        let net = small();
        let f = [true, false];
        let csr = Csr::from_concrete(&ConcreteNetwork::new(&net, &f).unwrap());
        assert_eq!(csr.edge_total(), 2);
        assert_eq!(csr.out(1).collect::<Vec<_>>(), vec![(2, 0.5)]);
        assert_eq!(csr.out(2).count(), 0);
    }
}
