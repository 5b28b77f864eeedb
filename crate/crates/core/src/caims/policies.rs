//! Non-adaptive baselines played under the same session protocol.

use super::{CaimAction, CaimConfig, CaimPolicy, SessionView};
use crate::error::Result;
use crate::influence::{greedy_extend, SpreadOracle};
use crate::rng;
use rand::seq::SliceRandom;

/// Invites its greedy top-K set once per session and then ends the
/// session.
pub struct GreedySessionPolicy {
    targets: Vec<usize>,
}

impl GreedySessionPolicy {
    pub fn new(oracle: &dyn SpreadOracle, n: usize, k: usize) -> Self {
        Self { targets: greedy_extend(oracle, n, &[], k, None) }
    }
}

impl CaimPolicy for GreedySessionPolicy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn act(&mut self, view: &SessionView, _: u64) -> Result<CaimAction> {
        if view.num_act == 0 {
            let open: Vec<usize> = self.targets.iter().copied().filter(|&v| view.invitable(v)).collect();
            if !open.is_empty() {
                return Ok(CaimAction::invite(open));
            }
        }
        Ok(CaimAction::end())
    }
}

/// Overprovisions: keeps a greedy list of `2K` nodes in random order and
/// invites them one at a time until `K` are locked.
pub struct GreedyPlusPolicy {
    order: Vec<usize>,
    k: usize,
    l: usize,
}

impl GreedyPlusPolicy {
    pub fn new(oracle: &dyn SpreadOracle, n: usize, cfg: &CaimConfig, seed: u64) -> Self {
        let mut order = greedy_extend(oracle, n, &[], (2 * cfg.k).min(n), None);
        order.shuffle(&mut rng::rng(seed));
        Self { order, k: cfg.k, l: cfg.l }
    }
}

impl CaimPolicy for GreedyPlusPolicy {
    fn name(&self) -> String {
        "greedy+".into()
    }

    fn act(&mut self, view: &SessionView, _: u64) -> Result<CaimAction> {
        if view.locked.len() < self.k && view.num_act < self.l {
            if let Some(&v) = self.order.iter().find(|&&v| view.invitable(v) && !view.evidence.contains_key(&v)) {
                return Ok(CaimAction::invite(vec![v]));
            }
        }
        Ok(CaimAction::end())
    }
}
