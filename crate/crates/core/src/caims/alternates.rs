//! Contingency alternates and the community-factorization error bound.

use crate::influence::{one_step_spread, SpreadOracle};
use crate::netcore::{Csr, Partition};
use crate::rng;
use rand::Rng as _;

/// Other invitees up to this count are enumerated exactly; beyond it the
/// show-up pattern is sampled.
const EXACT_OTHERS: usize = 10;
const SAMPLED_PATTERNS: usize = 256;

/// For each invitee `v`, ranks replacement nodes by expected spread gain
/// given that `v` does not show up while every other invitee `u` shows up
/// independently with probability `q[u]`. Returns up to `count` alternates
/// per invitee, best first, never proposing an invitee or an excluded node.
pub fn compute_alternates(
    oracle: &dyn SpreadOracle,
    n: usize,
    invited: &[usize],
    q: &[f64],
    count: usize,
    excluded: &[usize],
    seed: u64,
) -> Vec<(usize, Vec<usize>)> {
    let blocked = |u: usize| invited.contains(&u) || excluded.contains(&u);
    let candidates: Vec<usize> = (0..n).filter(|&u| !blocked(u)).collect();
    invited
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let others: Vec<usize> = invited.iter().copied().filter(|&u| u != v).collect();
            let patterns = show_up_patterns(&others, q, rng::derive(seed, i as u64));
            let mut gains: Vec<(f64, usize)> = candidates
                .iter()
                .map(|&c| {
                    let g: f64 = patterns
                        .iter()
                        .map(|(w, present)| {
                            let mut with = present.clone();
                            let base = oracle.spread(&with);
                            with.push(c);
                            w * (oracle.spread(&with) - base)
                        })
                        .sum();
                    (g, c)
                })
                .collect();
            gains.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            (v, gains.into_iter().take(count).map(|(_, c)| c).collect())
        })
        .collect()
}

/// Weighted subsets of `others` that show up.
fn show_up_patterns(others: &[usize], q: &[f64], seed: u64) -> Vec<(f64, Vec<usize>)> {
    if others.len() <= EXACT_OTHERS {
        (0u32..1 << others.len())
            .filter_map(|mask| {
                let mut w = 1.0;
                let mut present = Vec::new();
                for (j, &u) in others.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        w *= q[u];
                        present.push(u);
                    } else {
                        w *= 1.0 - q[u];
                    }
                }
                (w > 0.0).then_some((w, present))
            })
            .collect()
    } else {
        let mut r = rng::rng(seed);
        let w = 1.0 / SAMPLED_PATTERNS as f64;
        (0..SAMPLED_PATTERNS)
            .map(|_| (w, others.iter().copied().filter(|&u| r.gen::<f64>() < q[u]).collect()))
            .collect()
    }
}

/// Worst-case gap between one-step spread and its community-factored sum:
/// `q·n²·(1 − 1/ℓ)·p_m`, where `q` is the cross-community edge probability
/// and `p_m` the largest propagation probability.
pub fn factorization_error_bound(n: usize, q: f64, l: usize, p_m: f64) -> f64 {
    let l = l.max(1) as f64;
    q * (n * n) as f64 * (1.0 - 1.0 / l) * p_m
}

/// One-step spread of `seeds` and the sum of one-step spreads of its
/// restrictions to each part, over the whole graph.
pub fn factored_gap(csr: &Csr, parts: &Partition, seeds: &[bool]) -> (f64, f64) {
    let whole = one_step_spread(csr, seeds);
    let summed = (0..parts.k())
        .map(|x| {
            let local: Vec<bool> = (0..seeds.len()).map(|v| seeds[v] && parts.assignment[v] == x).collect();
            one_step_spread(csr, &local)
        })
        .sum();
    (whole, summed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::ExactSpread;
    use crate::netcore::{Edge, UncertainNetwork};

    fn two_stars() -> UncertainNetwork {
        // Hub 0 covers 1..=3, hub 4 covers 5..=7 and hub 8 covers 5..=6.
        let mut e = Vec::new();
        for d in 1..=3 {
            e.push(Edge { src: 0, dst: d, p: 1.0 });
        }
        for d in 5..=7 {
            e.push(Edge { src: 4, dst: d, p: 1.0 });
        }
        for d in 5..=6 {
            e.push(Edge { src: 8, dst: d, p: 1.0 });
        }
        e.push(Edge { src: 1, dst: 2, p: 1.0 });
        UncertainNetwork::with_nodes(9, e, vec![]).unwrap()
    }

    #[test]
    fn bound_arithmetic() {
        assert!((factorization_error_bound(30, 0.1, 3, 0.5) - 30.0).abs() < 1e-12);
        assert_eq!(factorization_error_bound(30, 0.1, 1, 0.5), 0.0);
    }

    #[test]
    fn empty_invites_have_no_alternates() {
        let net = two_stars();
        let o = ExactSpread::new(&net, 1);
        assert!(compute_alternates(&o, 9, &[], &[1.0; 9], 3, &[], 0).is_empty());
    }

    #[test]
    fn alternate_covers_uncovered_region() {
        let net = two_stars();
        let o = ExactSpread::new(&net, 1);
        let alts = compute_alternates(&o, 9, &[0, 4], &[1.0; 9], 2, &[], 0);
        // Losing hub 4 leaves 5..=7 uncovered; 8 recovers most of it. Losing
        // hub 0 is best patched by 1, which covers itself and 2.
        assert_eq!(alts[1], (4, vec![8, 5]));
        assert_eq!(alts[0].0, 0);
        assert_eq!(alts[0].1[0], 1);
        for (_, a) in &alts {
            assert!(!a.contains(&0) && !a.contains(&4));
        }
    }

    #[test]
    fn alternates_match_exhaustive_conditional_gain() {
        let net = two_stars();
        let o = ExactSpread::new(&net, 1);
        let q = [0.0, 0.6, 0.3, 0.5, 0.7, 0.2, 0.9, 0.4, 0.8];
        let invited = [0, 4, 8];
        let alts = compute_alternates(&o, 9, &invited, &q, 1, &[], 0);
        for (v, a) in alts {
            let others: Vec<usize> = invited.iter().copied().filter(|&u| u != v).collect();
            let mut best = (f64::NEG_INFINITY, 0);
            for c in (0..9).filter(|c| !invited.contains(c)) {
                let mut g = 0.0;
                for m in 0..4u32 {
                    let present: Vec<usize> = (0..2).filter(|j| m >> j & 1 == 1).map(|j| others[j]).collect();
                    let w: f64 = (0..2).map(|j| if m >> j & 1 == 1 { q[others[j]] } else { 1.0 - q[others[j]] }).product();
                    let mut with = present.clone();
                    with.push(c);
                    g += w * (o.spread(&with) - o.spread(&present));
                }
                if g > best.0 + 1e-12 {
                    best = (g, c);
                }
            }
            assert_eq!(a, vec![best.1]);
        }
    }

    #[test]
    fn factored_sum_dominates() {
        let net = two_stars();
        let csr = Csr::all_edges(&net.collapse());
        let parts = Partition::from_assignment(vec![0, 0, 0, 0, 1, 1, 1, 1, 1], 2);
        for mask in 0u32..512 {
            let s: Vec<bool> = (0..9).map(|v| mask >> v & 1 == 1).collect();
            let (w, f) = factored_gap(&csr, &parts, &s);
            assert!(f >= w - 1e-12);
        }
    }
}
