use infplan_core::caims::{
    constrained_ve_general, run_caim_episode, CaimConfig, CaimPolicy, FactorTable, FixedPhi, SessionView,
};
use infplan_core::caims::planner::random_action;
use infplan_core::dime::{DimeObservation, RevealedEdge};
use infplan_core::harness::paired_bootstrap_t;
use infplan_core::influence::{exact_expected_spread, OneStepSpread};
use infplan_core::netcore::{partition, Edge, UncertainEdge, UncertainNetwork};
use infplan_core::psinet::{build_pruned_graph, diffusion_vector, transition_prob, w_weight};
use infplan_core::rng;
use proptest::prelude::*;
use std::collections::BTreeMap;

/// Edge list over `n` nodes: (src, dst, p, Some(u) when uncertain).
fn network(max_n: usize) -> impl Strategy<Value = UncertainNetwork> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let edge = (0..n, 0..n, 0.05..0.95f64, prop::option::of(0.05..0.95f64));
            (Just(n), prop::collection::vec(edge, 0..3 * n))
        })
        .prop_map(|(n, raw)| {
            let mut seen = std::collections::BTreeSet::new();
            let (mut certain, mut uncertain) = (Vec::new(), Vec::new());
            for (src, dst, p, u) in raw {
                if src == dst || !seen.insert((src, dst)) {
                    continue;
                }
                match u {
                    Some(u) if uncertain.len() < 10 => uncertain.push(UncertainEdge { src, dst, p, u }),
                    _ => certain.push(Edge { src, dst, p }),
                }
            }
            UncertainNetwork::with_nodes(n, certain, uncertain).unwrap()
        })
}

/// A random observation about a subset of the uncertain edges.
fn observation(net: &UncertainNetwork, bits: &[bool]) -> BTreeMap<(usize, usize), bool> {
    net.uncertain()
        .iter()
        .zip(bits.chunks(2))
        .filter(|(_, b)| b[0])
        .map(|(e, b)| ((e.src, e.dst), b.get(1).copied().unwrap_or(false)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn document_round_trip(net in network(8)) {
        let back = UncertainNetwork::from_json_str(&net.to_json_string()).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn refinement_is_idempotent_monotone_and_commutes(
        net in network(8),
        a in prop::collection::vec(any::<bool>(), 20),
        b in prop::collection::vec(any::<bool>(), 20),
    ) {
        let oa = observation(&net, &a);
        let ob = observation(&net, &b);
        // Two observations of the same world agree wherever both speak.
        prop_assume!(oa.iter().all(|(k, v)| ob.get(k).is_none_or(|w| w == v)));
        let ra = net.refine(&oa).unwrap();
        prop_assert!(ra.m() <= net.m());
        prop_assert_eq!(ra.refine(&oa).unwrap(), ra.clone());
        let ab = ra.refine(&ob).unwrap();
        let ba = net.refine(&ob).unwrap().refine(&oa).unwrap();
        prop_assert_eq!(ab.m(), ba.m());
        let sorted = |n: &UncertainNetwork| {
            let mut c: Vec<(usize, usize)> = n.certain().iter().map(|e| (e.src, e.dst)).collect();
            let mut u: Vec<(usize, usize)> = n.uncertain().iter().map(|e| (e.src, e.dst)).collect();
            c.sort_unstable();
            u.sort_unstable();
            (c, u)
        };
        prop_assert_eq!(sorted(&ab), sorted(&ba));
        let obs = DimeObservation::from_map(&oa);
        let known = |e: &RevealedEdge| net.edge(e.src, e.dst).is_some();
        prop_assert!(obs.revealed.iter().all(known));
    }

    #[test]
    fn exact_spread_is_monotone_and_bounded(net in network(7), s in 0usize..7, t in 0usize..7, steps in 1usize..3) {
        let n = net.n();
        let (s, t) = (s % n, t % n);
        let one = exact_expected_spread(&net, &[s], steps).unwrap();
        let mut both = vec![s, t];
        both.dedup();
        let two = exact_expected_spread(&net, &both, steps).unwrap();
        prop_assert!(one >= 1.0 - 1e-12 && one <= n as f64 + 1e-12);
        prop_assert!(two >= one - 1e-12);
    }

    #[test]
    fn constrained_ve_matches_enumeration(
        tables in prop::collection::vec((1usize..=4).prop_flat_map(|b| (Just(b), prop::collection::vec(-10i32..10, 1 << b))), 1..=4),
        z in 0usize..=16,
    ) {
        let bits: Vec<usize> = tables.iter().map(|t| t.0).collect();
        let total: usize = bits.iter().sum();
        let z = z.min(total);
        let dense: Vec<FactorTable> =
            tables.iter().map(|(b, v)| FactorTable::dense(*b, v.iter().map(|&x| x as f64).collect()).unwrap()).collect();
        let got = constrained_ve_general(&dense, &vec![0.0; z + 1]).unwrap();
        let mut best = f64::NEG_INFINITY;
        for full in 0u64..1 << total {
            if full.count_ones() as usize > z {
                continue;
            }
            let mut v = 0.0;
            let mut shift = 0;
            for (b, vals) in &tables {
                v += vals[((full >> shift) & ((1 << b) - 1)) as usize] as f64;
                shift += b;
            }
            best = best.max(v);
        }
        prop_assert_eq!(got.value, best);
    }

    #[test]
    fn transition_distribution_sums_to_one(net in network(9), wbits in any::<u16>(), abits in any::<u16>()) {
        let n = net.n();
        let w: Vec<bool> = (0..n).map(|v| wbits >> v & 1 == 1).collect();
        let action: Vec<usize> = (0..n).filter(|v| abits >> v & 1 == 1 && !w[*v]).take(2).collect();
        let d = diffusion_vector(&build_pruned_graph(&net, &w, &action), 0.5, 2);
        let total: f64 = (0u32..1 << n)
            .map(|m| (0..n).map(|v| m >> v & 1 == 1).collect::<Vec<_>>())
            .map(|next| transition_prob(&w, &action, &next, &d))
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "sum {}", total);
    }

    #[test]
    fn vote_weight_is_symmetric(m in 0usize..60, x in 0usize..60) {
        let x = x.min(m);
        prop_assert_eq!(w_weight(x, m), w_weight(m - x, m));
        prop_assert!(w_weight(x, m) <= m as f64 / 2.0);
    }

    #[test]
    fn partition_covers_every_node(net in network(16), k in 1usize..4, seed in any::<u64>()) {
        let k = k.min(net.n());
        let p = partition(&net, k, 0.2, seed).unwrap();
        prop_assert_eq!(p.assignment.len(), net.n());
        prop_assert_eq!(p.parts.iter().map(Vec::len).sum::<usize>(), net.n());
        for (x, part) in p.parts.iter().enumerate() {
            prop_assert!(!part.is_empty());
            prop_assert!(part.iter().all(|&v| p.assignment[v] == x));
        }
    }

    #[test]
    fn bootstrap_p_value_is_a_probability(
        pairs in prop::collection::vec((0.0..20.0f64, 0.0..20.0f64), 2..40),
        seed in any::<u64>(),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let r = paired_bootstrap_t(&a, &b, 200, 0.05, seed);
        prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        prop_assert_eq!(r.significant, r.p_value < 0.05);
    }
}

struct RandomPolicy {
    cfg: CaimConfig,
    n: usize,
    locked_seen: usize,
}

impl CaimPolicy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&mut self, view: &SessionView, seed: u64) -> infplan_core::Result<infplan_core::caims::CaimAction> {
        assert!(view.locked.len() >= self.locked_seen, "locked set shrank");
        self.locked_seen = view.locked.len();
        Ok(random_action(view, &self.cfg, self.n, &mut rng::rng(seed)))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn locked_set_only_grows(net in network(10), phi in any::<u16>(), seed in any::<u64>(), k in 1usize..4) {
        let n = net.n();
        let cfg = CaimConfig { k: k.min(n), l: 3, t: 2, q_max: 2, epsilon: 0.5, spread_steps: 1 };
        let truth: Vec<bool> = (0..n).map(|v| phi >> v & 1 == 1).collect();
        let oracle = OneStepSpread::new(&net.collapse());
        let mut policy = RandomPolicy { cfg, n, locked_seen: 0 };
        let ep = run_caim_episode(&cfg, &FixedPhi(truth.clone()), &oracle, &mut policy, seed).unwrap();
        prop_assert!(ep.locked.len() <= cfg.k);
        prop_assert!(ep.locked.iter().all(|&v| truth[v]), "only available nodes lock");
    }
}
