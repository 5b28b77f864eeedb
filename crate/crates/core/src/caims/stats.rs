//! Community-factored action statistics and UCB action selection.

use super::ve::{constrained_ve_general, FactorTable};
use super::{ActionKind, CaimAction};
use crate::error::{Error, Result};
use crate::netcore::{partition, UncertainNetwork};
use std::collections::HashMap;

/// Bonus standing in for an infinite exploration bonus; large enough to
/// dominate any spread value while keeping arithmetic finite.
pub const UNTRIED: f64 = 1e9;

/// Disjoint communities covering the node set, each at most 64 nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Communities {
    pub members: Vec<Vec<usize>>,
    place: Vec<(usize, usize)>,
}

impl Communities {
    pub fn new(members: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        super::ve::check_disjoint(&members, n)?;
        let mut place = vec![(usize::MAX, 0); n];
        for (c, list) in members.iter().enumerate() {
            if list.len() > 64 {
                return Err(Error::param("communities", "a community has more than 64 nodes"));
            }
            for (j, &v) in list.iter().enumerate() {
                place[v] = (c, j);
            }
        }
        if place.iter().any(|p| p.0 == usize::MAX) {
            return Err(Error::Contract("communities do not cover every node".into()));
        }
        Ok(Self { members, place })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Per-community bit masks of a node set.
    pub fn split(&self, nodes: &[usize]) -> Vec<u64> {
        let mut masks = vec![0u64; self.members.len()];
        for &v in nodes {
            let (c, j) = self.place[v];
            masks[c] |= 1 << j;
        }
        masks
    }

    /// Node set of per-community masks.
    pub fn join(&self, masks: &[u64]) -> Vec<usize> {
        let mut out = Vec::new();
        for (c, &m) in masks.iter().enumerate() {
            for (j, &v) in self.members[c].iter().enumerate() {
                if m >> j & 1 == 1 {
                    out.push(v);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Per-community masks of the nodes satisfying `pred`.
    pub fn mask_where(&self, pred: impl Fn(usize) -> bool) -> Vec<u64> {
        self.members
            .iter()
            .map(|list| list.iter().enumerate().filter(|(_, &v)| pred(v)).fold(0u64, |m, (j, _)| m | 1 << j))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Running {
    pub sum: f64,
    pub count: u64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.count += 1;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.sum / self.count as f64 }
    }
}

/// Communities from a balanced partition of `net` into `count` parts.
pub fn partition_communities(net: &UncertainNetwork, count: usize, seed: u64) -> Result<Communities> {
    let n = net.n();
    let p = partition(net, count.clamp(1, n), 0.2, seed)?;
    Communities::new(p.parts, n)
}

/// Running means of the joint return conditioned on each community's
/// sub-action, per action kind, plus end-session statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactoredStats {
    pub query: Vec<HashMap<u64, Running>>,
    pub invite: Vec<HashMap<u64, Running>>,
    pub end: Running,
    pub visits: u64,
}

impl FactoredStats {
    pub fn new(communities: usize) -> Self {
        Self {
            query: vec![HashMap::new(); communities],
            invite: vec![HashMap::new(); communities],
            end: Running::default(),
            visits: 0,
        }
    }

    fn tables(&self, kind: ActionKind) -> &[HashMap<u64, Running>] {
        match kind {
            ActionKind::Query => &self.query,
            _ => &self.invite,
        }
    }

    /// Mixture-of-experts estimate α·E[Q | sub-action] for one community.
    pub fn estimate(&self, kind: ActionKind, community: usize, mask: u64, alpha: f64) -> Option<f64> {
        self.tables(kind)[community].get(&mask).filter(|r| r.count > 0).map(|r| alpha * r.mean())
    }
}

/// Credits `reward` to every community's sub-action of `action`.
pub fn update_factored_stats(stats: &mut FactoredStats, comms: &Communities, action: &CaimAction, reward: f64) {
    stats.visits += 1;
    let tables = match action.kind {
        ActionKind::End => {
            stats.end.push(reward);
            return;
        }
        ActionKind::Query => &mut stats.query,
        ActionKind::Invite => &mut stats.invite,
    };
    for (c, m) in comms.split(&action.nodes).into_iter().enumerate() {
        tables[c].entry(m).or_default().push(reward);
    }
}

/// Legal sub-actions and budgets for one selection.
#[derive(Debug, Clone)]
pub struct SelectInput {
    pub allowed_query: Vec<u64>,
    pub allowed_invite: Vec<u64>,
    pub budget_query: usize,
    pub budget_invite: usize,
    pub end_allowed: bool,
    /// Exploration constant.
    pub c: f64,
    /// Mixture weight of every community.
    pub alpha: f64,
    /// With `false`, untried sub-actions are skipped and no bonus is added.
    pub explore: bool,
    /// With `false`, untried sub-actions are skipped even when exploring.
    pub untried: bool,
}

/// All sub-masks of `allowed` with at most `z` bits, in increasing order.
fn submasks(allowed: u64, z: usize) -> Vec<u64> {
    let bits: Vec<u32> = (0..64).filter(|b| allowed >> b & 1 == 1).collect();
    let mut out = vec![0u64];
    fn rec(bits: &[u32], start: usize, cur: u64, left: usize, out: &mut Vec<u64>) {
        if left == 0 {
            return;
        }
        for i in start..bits.len() {
            let m = cur | 1 << bits[i];
            out.push(m);
            rec(bits, i + 1, m, left - 1, out);
        }
    }
    rec(&bits, 0, 0, z, &mut out);
    out.sort_unstable();
    out
}

fn kind_value(
    stats: &FactoredStats,
    comms: &Communities,
    kind: ActionKind,
    allowed: &[u64],
    budget: usize,
    inp: &SelectInput,
) -> Option<(Vec<usize>, f64)> {
    if budget == 0 || allowed.iter().all(|&m| m == 0) {
        return None;
    }
    let ln = ((stats.visits + 1) as f64).ln();
    let tables: Vec<FactorTable> = (0..comms.len())
        .map(|c| {
            let entries = submasks(allowed[c], budget)
                .into_iter()
                .filter_map(|m| match stats.tables(kind)[c].get(&m).filter(|r| r.count > 0) {
                    Some(r) => {
                        let bonus = if inp.explore { inp.c * (ln / r.count as f64).sqrt() } else { 0.0 };
                        Some((m, inp.alpha * r.mean() + bonus))
                    }
                    None if inp.explore && inp.untried => Some((m, inp.alpha * UNTRIED)),
                    None if m == 0 => Some((0, 0.0)),
                    None => None,
                })
                .collect();
            FactorTable::Sparse { entries }
        })
        .collect();
    let mut norm = vec![0.0; budget + 1];
    norm[0] = f64::NEG_INFINITY;
    let res = constrained_ve_general(&tables, &norm)?;
    Some((comms.join(&res.assignment), res.value))
}

/// Chooses among the best query, the best invite (each found by
/// constrained elimination) and ending the session. Ties prefer ending,
/// then inviting.
pub fn factored_action_select(stats: &FactoredStats, comms: &Communities, inp: &SelectInput) -> Option<(CaimAction, f64)> {
    let mut best: Option<(CaimAction, f64)> = None;
    if inp.end_allowed {
        let ve = if stats.end.count > 0 {
            let ln = ((stats.visits + 1) as f64).ln();
            let bonus = if inp.explore { inp.c * (ln / stats.end.count as f64).sqrt() } else { 0.0 };
            Some(stats.end.mean() + bonus)
        } else if inp.explore && inp.untried {
            Some(UNTRIED)
        } else {
            None
        };
        if let Some(v) = ve {
            best = Some((CaimAction::end(), v));
        }
    }
    let cands = [
        (ActionKind::Invite, &inp.allowed_invite, inp.budget_invite),
        (ActionKind::Query, &inp.allowed_query, inp.budget_query),
    ];
    for (kind, allowed, budget) in cands {
        if let Some((nodes, v)) = kind_value(stats, comms, kind, allowed, budget, inp) {
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((CaimAction { kind, nodes }, v));
            }
        }
    }
    best
}
