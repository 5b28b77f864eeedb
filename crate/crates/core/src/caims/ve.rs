//! Max-sum variable elimination over per-community factors subject to a
//! bound on the total number of selected nodes. Because the coupling factor
//! depends only on the L1 norm, each eliminated block leaves a factor over
//! the remaining norm, a table of `z + 1` entries.

use crate::error::{Error, Result};

/// One community's values over its sub-action bit-vectors. Entries absent
/// from a sparse table are infeasible.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorTable {
    Dense { bits: usize, values: Vec<f64> },
    Sparse { entries: Vec<(u64, f64)> },
}

impl FactorTable {
    pub fn dense(bits: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1usize << bits {
            return Err(Error::Contract(format!("dense table over {bits} bits needs {} values", 1u64 << bits)));
        }
        Ok(FactorTable::Dense { bits, values })
    }

    fn entries(&self) -> Box<dyn Iterator<Item = (u64, f64)> + '_> {
        match self {
            FactorTable::Dense { values, .. } => Box::new(values.iter().enumerate().map(|(m, &v)| (m as u64, v))),
            FactorTable::Sparse { entries } => Box::new(entries.iter().copied()),
        }
    }
}

/// Counts of elementary operations, used to check the cost bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VeOps {
    /// Factor entries read.
    pub table_evals: u64,
    /// Derived-factor updates.
    pub psi_updates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VeResult {
    /// Chosen sub-action per community.
    pub assignment: Vec<u64>,
    pub value: f64,
    /// Derived factors: `psi[i][m]` is the best value of communities
    /// `0..=i` together with the norm factor when the remaining communities
    /// select `m` nodes.
    pub psi: Vec<Vec<f64>>,
    pub ops: VeOps,
}

fn add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

/// Maximizes Σ f_x(a_x) + g(‖a‖₁) where `norm_factor[m] = g(m)` for
/// m ≤ z = norm_factor.len() − 1 and g = −∞ beyond. Returns `None` when
/// no assignment has a finite value. Ties go to the first maximizer found
/// (smaller norm, then smaller mask).
pub fn constrained_ve_general(tables: &[FactorTable], norm_factor: &[f64]) -> Option<VeResult> {
    let z = norm_factor.len().checked_sub(1)?;
    let mut ops = VeOps::default();
    // Best value and mask per norm for every community.
    let best: Vec<Vec<(f64, u64)>> = tables
        .iter()
        .map(|t| {
            let mut b = vec![(f64::NEG_INFINITY, 0u64); z + 1];
            for (mask, v) in t.entries() {
                ops.table_evals += 1;
                let j = mask.count_ones() as usize;
                if j <= z && v > b[j].0 {
                    b[j] = (v, mask);
                }
            }
            b
        })
        .collect();
    let mut psi: Vec<Vec<f64>> = Vec::with_capacity(tables.len());
    let mut memo: Vec<Vec<usize>> = Vec::with_capacity(tables.len());
    let mut prev: Vec<f64> = norm_factor.to_vec();
    for b in &best {
        let mut cur = vec![f64::NEG_INFINITY; z + 1];
        let mut mu = vec![0usize; z + 1];
        for m in 0..=z {
            for j in 0..=z - m {
                ops.psi_updates += 1;
                let v = add(b[j].0, prev[m + j]);
                if v > cur[m] {
                    cur[m] = v;
                    mu[m] = j;
                }
            }
        }
        psi.push(cur.clone());
        memo.push(mu);
        prev = cur;
    }
    let value = if tables.is_empty() { norm_factor[0] } else { prev[0] };
    if value == f64::NEG_INFINITY {
        return None;
    }
    let mut assignment = vec![0u64; tables.len()];
    let mut m = 0;
    for x in (0..tables.len()).rev() {
        let j = memo[x][m];
        assignment[x] = best[x][j].1;
        m += j;
    }
    Some(VeResult { assignment, value, psi, ops })
}

/// Maximizes Σ f_x(a_x) subject to ‖a‖₁ ≤ z.
pub fn constrained_ve(tables: &[FactorTable], z: usize) -> Option<VeResult> {
    constrained_ve_general(tables, &vec![0.0; z + 1])
}

/// Checks that community member lists are pairwise disjoint.
pub fn check_disjoint(communities: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for c in communities {
        for &v in c {
            if v >= n {
                return Err(Error::Contract(format!("community member {v} out of range")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::Contract(format!("node {v} appears in two communities")));
            }
        }
    }
    Ok(())
}

/// Exhaustive constrained maximum over dense tables (at most 24 bits).
pub fn brute_force(tables: &[(usize, Vec<f64>)], norm_factor: &[f64]) -> f64 {
    let total: usize = tables.iter().map(|t| t.0).sum();
    assert!(total <= 24, "brute force limited to 24 bits");
    let mut best = f64::NEG_INFINITY;
    for full in 0..1u64 << total {
        let norm = full.count_ones() as usize;
        if norm >= norm_factor.len() {
            continue;
        }
        let mut v = norm_factor[norm];
        let mut shift = 0;
        for (bits, vals) in tables {
            v = add(v, vals[((full >> shift) & ((1 << bits) - 1)) as usize]);
            shift += bits;
        }
        best = best.max(v);
    }
    best
}

/// Materializes every derived factor over full assignments of the
/// not-yet-eliminated communities and checks it is a function of their L1
/// norm alone, equal to the stored table and −∞ above the budget.
pub fn shadow_check(tables: &[(usize, Vec<f64>)], norm_factor: &[f64]) -> std::result::Result<(), String> {
    let dense: Vec<FactorTable> = tables.iter().map(|(b, v)| FactorTable::Dense { bits: *b, values: v.clone() }).collect();
    let z = norm_factor.len() - 1;
    let Some(res) = constrained_ve_general(&dense, norm_factor) else {
        return Ok(());
    };
    let total: usize = tables.iter().map(|t| t.0).sum();
    if total > 16 {
        return Err("shadow check limited to 16 bits".into());
    }
    for i in 0..tables.len() {
        let head: usize = tables[..=i].iter().map(|t| t.0).sum();
        let tail = total - head;
        for rest in 0..1u64 << tail {
            let rest_norm = rest.count_ones() as usize;
            let mut best = f64::NEG_INFINITY;
            for a in 0..1u64 << head {
                let norm = rest_norm + a.count_ones() as usize;
                let mut v = if norm <= z { norm_factor[norm] } else { f64::NEG_INFINITY };
                let mut shift = 0;
                for (bits, vals) in &tables[..=i] {
                    v = add(v, vals[((a >> shift) & ((1 << bits) - 1)) as usize]);
                    shift += bits;
                }
                best = best.max(v);
            }
            let stored = if rest_norm <= z { res.psi[i][rest_norm] } else { f64::NEG_INFINITY };
            let same = (best == stored) || (best - stored).abs() <= 1e-9 * best.abs().max(1.0);
            if !same {
                return Err(format!("factor {i} at rest norm {rest_norm}: materialized {best}, table {stored}"));
            }
        }
    }
    Ok(())
}
