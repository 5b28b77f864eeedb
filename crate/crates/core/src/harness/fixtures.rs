//! Worked examples as executable checks. Each fixture returns a short
//! description of what it verified, or the mismatch.

use crate::caims::{
    factorization_error_bound, run_caim_episode, CaimConfig, CaimsParams, CaimsPlanner, Communities, FixedPhi,
    GreedyPlusPolicy, MarkovNet, MarkovNetBelief,
};
use crate::dime::indirect_influence;
use crate::heal::{aggregate, AlphaList};
use crate::influence::{
    exact_conditional_spread, greedy_extend, overprovisioned_run, FixedAvailability, OneStepSpread, SpreadOracle,
};
use crate::netcore::{Edge, UncertainEdge, UncertainNetwork};
use crate::psinet::{build_pruned_graph, raw_diffusion, w_weight};
use serde::Serialize;

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

type Check = std::result::Result<String, String>;

fn close(what: &str, got: f64, want: f64) -> std::result::Result<(), String> {
    if (got - want).abs() <= TOL {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want}"))
    }
}

/// Spread counting only nodes beyond the seeds.
pub struct NewlyInfluenced<O>(pub O);

impl<O: SpreadOracle> SpreadOracle for NewlyInfluenced<O> {
    fn spread(&self, seeds: &[usize]) -> f64 {
        let mut s = seeds.to_vec();
        s.sort_unstable();
        s.dedup();
        self.0.spread(&s) - s.len() as f64
    }
}

fn fan(edges: &mut Vec<Edge>, src: usize, dsts: impl IntoIterator<Item = usize>, p: f64) {
    edges.extend(dsts.into_iter().map(|dst| Edge { src, dst, p }));
}

/// Three hubs C1 = 0, C = 1, C2 = 2. C reaches six nodes, three shared with
/// C1 and three with C2; C1 and C2 each reach five.
pub fn overlapping_hubs() -> UncertainNetwork {
    let mut e = Vec::new();
    fan(&mut e, 0, [3, 4, 5, 6, 7], 0.5);
    fan(&mut e, 1, [5, 6, 7, 8, 9, 10], 0.5);
    fan(&mut e, 2, [8, 9, 10, 11, 12], 0.5);
    UncertainNetwork::with_nodes(13, e, vec![]).expect("valid fixture")
}

/// Hubs C1 = 0, C2 = 1, C3 = 2. C2's five targets are a subset of C1's six;
/// C3 reaches three nodes of its own.
pub fn nested_hubs() -> UncertainNetwork {
    let mut e = Vec::new();
    fan(&mut e, 0, 3..=8, 0.5);
    fan(&mut e, 1, 3..=7, 0.5);
    fan(&mut e, 2, 9..=11, 0.5);
    UncertainNetwork::with_nodes(12, e, vec![]).expect("valid fixture")
}

/// Complete network of uncertain edges (u = 0.5, p = 1) on `n` nodes and a
/// ground truth where only the edges out of node 0 exist.
pub fn star_truth_network(n: usize) -> (UncertainNetwork, Vec<bool>) {
    let mut unc = Vec::new();
    for s in 0..n {
        for d in (0..n).filter(|&d| d != s) {
            unc.push(UncertainEdge { src: s, dst: d, p: 1.0, u: 0.5 });
        }
    }
    let net = UncertainNetwork::with_nodes(n, vec![], unc).expect("valid fixture");
    let truth = net.uncertain().iter().map(|e| e.src == 0).collect();
    (net, truth)
}

/// Uniformly random single pick versus the full-information pick, both
/// evaluated exactly on the star ground truth.
pub fn star_pick_values(n: usize) -> crate::Result<(f64, f64)> {
    let (net, truth) = star_truth_network(n);
    let known: Vec<Option<bool>> = truth.iter().map(|&b| Some(b)).collect();
    let mut total = 0.0;
    let mut best: f64 = 0.0;
    for v in 0..n {
        let s = exact_conditional_spread(&net, &[v], 1, &known)?;
        total += s;
        best = best.max(s);
    }
    Ok((total / n as f64, best))
}

/// Path a→b→c→d with p = 1 and two diffusion steps.
pub fn fragile_path_network(eps: f64) -> UncertainNetwork {
    let unc = vec![
        UncertainEdge { src: 0, dst: 1, p: 1.0, u: 1.0 - eps },
        UncertainEdge { src: 1, dst: 2, p: 1.0, u: eps },
        UncertainEdge { src: 2, dst: 3, p: 1.0, u: eps },
    ];
    UncertainNetwork::with_nodes(4, vec![], unc).expect("valid fixture")
}

/// Marginal gain of `b` given `{a, c}` when e₃ is known to exist, and given
/// `{a}` when e₁ is known to exist.
pub fn fragile_path_gains(eps: f64) -> crate::Result<(f64, f64)> {
    let net = fragile_path_network(eps);
    let e3 = [None, None, Some(true)];
    let e1 = [Some(true), None, None];
    let with_b = exact_conditional_spread(&net, &[0, 1, 2], 2, &e3)? - exact_conditional_spread(&net, &[0, 2], 2, &e3)?;
    let no_b = exact_conditional_spread(&net, &[0, 1], 2, &e1)? - exact_conditional_spread(&net, &[0], 2, &e1)?;
    Ok((with_b, no_b))
}

fn star_random_pick() -> Check {
    for (n, want) in [(3, 5.0 / 3.0), (10, 1.9)] {
        let (random, full) = star_pick_values(n).map_err(|e| e.to_string())?;
        close(&format!("random pick, n={n}"), random, want)?;
        close(&format!("random pick, n={n}"), random, 2.0 - 1.0 / n as f64)?;
        close(&format!("full information, n={n}"), full, n as f64)?;
    }
    Ok("random 5/3 and 1.9, full information n".into())
}

fn fragile_path() -> Check {
    let (a, b) = fragile_path_gains(0.1).map_err(|e| e.to_string())?;
    close("gain with b", a, 0.1)?;
    close("gain without b", b, 0.01)?;
    Ok(format!("gains {a} and {b}"))
}

/// Adaptive play on the nested hubs: CAIMS against a
/// truth where C1 is absent, and 2K-overprovisioned greedy.
pub fn nested_hubs_outcomes(seed: u64) -> crate::Result<(Vec<usize>, Vec<usize>, f64, f64)> {
    let net = nested_hubs();
    let oracle = NewlyInfluenced(OneStepSpread::new(&net));
    let n = net.n();
    let mut truth = vec![true; n];
    truth[0] = false;
    let over = overprovisioned_run(&oracle, n, 1, 2, &FixedAvailability(truth.clone()), 1.0, seed);
    let cfg = CaimConfig { k: 1, l: 2, t: 1, q_max: 1, epsilon: 1.0, spread_steps: 1 };
    let mut prior = vec![1.0; n];
    prior[0] = 0.5;
    let belief = MarkovNetBelief::new(MarkovNet::independent(prior)?, 20)?;
    let comms = Communities::new(vec![(0..n).collect()], n)?;
    let mut planner = CaimsPlanner::new(cfg, belief, comms, &oracle, CaimsParams { nsim: 2000, ..Default::default() })?;
    let ep = run_caim_episode(&cfg, &FixedPhi(truth), &oracle, &mut planner, seed)?;
    let first = ep.trace.first().map(|(a, _)| a.nodes.clone()).unwrap_or_default();
    Ok((first, ep.locked.clone(), oracle.spread(&ep.locked), oracle.spread(&over)))
}

fn overprovisioning() -> Check {
    let net = overlapping_hubs();
    let o = NewlyInfluenced(OneStepSpread::new(&net));
    close("I(C1)", o.spread(&[0]), 2.5)?;
    close("I(C)", o.spread(&[1]), 3.0)?;
    close("I(C2)", o.spread(&[2]), 2.5)?;
    close("I({C1,C2})", o.spread(&[0, 2]), 5.0)?;
    close("I({C1,C})", o.spread(&[0, 1]), 4.75)?;
    close("I({C2,C})", o.spread(&[1, 2]), 4.75)?;
    if greedy_extend(&o, net.n(), &[], 1, None) != vec![1] {
        return Err("best single node is not C".into());
    }
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for a in 0..net.n() {
        for b in a + 1..net.n() {
            let v = o.spread(&[a, b]);
            if v > best.0 + TOL {
                best = (v, (a, b));
            }
        }
    }
    if best.1 != (0, 2) {
        return Err(format!("optimal pair is {:?}, not {{C1, C2}}", best.1));
    }
    let (first, locked, adaptive, over) = nested_hubs_outcomes(7).map_err(|e| e.to_string())?;
    close("overprovisioned spread", over, 1.5)?;
    close("adaptive spread", adaptive, 2.5)?;
    if first != vec![0] || locked != vec![1] {
        return Err(format!("adaptive play opened with {first:?} and locked {locked:?}"));
    }
    Ok("overlapping hubs exact; nested hubs adaptive 2.5 vs overprovisioned 1.5".into())
}

fn greedy_plus_nested_hubs() -> Check {
    let net = nested_hubs();
    let oracle = NewlyInfluenced(OneStepSpread::new(&net));
    let cfg = CaimConfig { k: 1, l: 2, t: 1, q_max: 1, epsilon: 1.0, spread_steps: 1 };
    let mut truth = vec![true; net.n()];
    truth[0] = false;
    for seed in 0..4 {
        let mut p = GreedyPlusPolicy::new(&oracle, net.n(), &cfg, seed);
        let ep = run_caim_episode(&cfg, &FixedPhi(truth.clone()), &oracle, &mut p, seed).map_err(|e| e.to_string())?;
        if ep.locked != vec![2] {
            return Err(format!("greedy-plus locked {:?}", ep.locked));
        }
    }
    Ok("session-protocol greedy-plus locks C3".into())
}

fn indirect_metric() -> Check {
    let v = indirect_influence(26, 2, 10);
    if v == 6 {
        Ok("26 influenced, K=2, T=10 gives 6".into())
    } else {
        Err(format!("got {v}"))
    }
}

fn chains() -> Check {
    // Chain 1: 0 influenced, 1..=3 not. Chain 2: 4..=6 influenced, 7 not.
    let e = [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)].map(|(s, d)| Edge { src: s, dst: d, p: 0.5 });
    let net = UncertainNetwork::with_nodes(8, e.to_vec(), vec![]).map_err(|e| e.to_string())?;
    let w = [true, false, false, false, true, true, true, false];
    let g = build_pruned_graph(&net, &w, &[]);
    let kept: Vec<(usize, usize)> = g.edges.iter().map(|&(s, d, _)| (s, d)).collect();
    if kept != vec![(0, 1), (4, 5), (5, 6), (6, 7)] {
        return Err(format!("pruned edges {kept:?}"));
    }
    let chain = UncertainNetwork::with_nodes(4, e[..3].to_vec(), vec![]).map_err(|e| e.to_string())?;
    let d = raw_diffusion(&build_pruned_graph(&chain, &[true; 4], &[]), 0.5, 3);
    close("chain tail", d[3], 0.875)?;
    Ok("chain 2 kept in full, tail entry 0.875".into())
}

fn tasp_aggregate() -> Check {
    let list = |v: f64| AlphaList { values: [(vec![1], v)].into_iter().collect() };
    let r = aggregate(&[list(10.0), list(20.0)], &[0.5, 0.5]);
    close("r1", r[&vec![1]], 15.0)?;
    Ok("r1 = 15".into())
}

fn vote_weights() -> Check {
    let m = 10;
    let got: Vec<f64> = (0..=m).map(|x| w_weight(x, m)).collect();
    let want = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.0];
    if got == want {
        Ok("W(x) rises to m/2 then falls".into())
    } else {
        Err(format!("weights {got:?}"))
    }
}

fn bound_arithmetic() -> Check {
    close("n=30 bound", factorization_error_bound(30, 0.1, 3, 0.5), 30.0)?;
    close("single community", factorization_error_bound(30, 0.1, 1, 0.5), 0.0)?;
    Ok("30.0 and 0".into())
}

/// Runs every fixture.
pub fn fixture_suite() -> Vec<FixtureResult> {
    let all: [(&str, fn() -> Check); 9] = [
        ("star_random_pick", star_random_pick),
        ("fragile_path", fragile_path),
        ("overprovisioning", overprovisioning),
        ("greedy_plus_nested_hubs", greedy_plus_nested_hubs),
        ("indirect_influence", indirect_metric),
        ("pruned_chains", chains),
        ("tasp_aggregate", tasp_aggregate),
        ("vote_weights", vote_weights),
        ("factorization_bound", bound_arithmetic),
    ];
    all.iter()
        .map(|(name, f)| {
            let r = f();
            FixtureResult { name: name.to_string(), passed: r.is_ok(), detail: r.unwrap_or_else(|e| e) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_pass() {
        for r in fixture_suite() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
