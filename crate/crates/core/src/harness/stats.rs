//! Paired one-sided bootstrap-t test.

use crate::rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub n: usize,
    pub mean_better: f64,
    pub mean_baseline: f64,
    pub mean_diff: f64,
    pub t: f64,
    /// Bootstrap p-value for H0: mean difference ≤ 0.
    pub p_value: f64,
    pub significant: bool,
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 { x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Tests whether `better` exceeds `baseline` on paired samples. The null
/// distribution of the studentized mean difference is estimated by
/// resampling the centred differences `resamples` times.
pub fn paired_bootstrap_t(better: &[f64], baseline: &[f64], resamples: usize, alpha: f64, seed: u64) -> BootstrapResult {
    assert_eq!(better.len(), baseline.len(), "paired samples must have equal length");
    let n = better.len();
    let diffs: Vec<f64> = better.iter().zip(baseline).map(|(a, b)| a - b).collect();
    let (mean_better, _) = mean_sd(better);
    let (mean_baseline, _) = mean_sd(baseline);
    let (m, sd) = mean_sd(&diffs);
    let se = sd / (n as f64).sqrt();
    let (t, p_value) = if n < 2 || se == 0.0 {
        // Constant differences: the sign decides.
        let t = if m > 0.0 { f64::INFINITY } else if m < 0.0 { f64::NEG_INFINITY } else { 0.0 };
        (t, if m > 0.0 { 0.0 } else { 1.0 })
    } else {
        let t = m / se;
        let centred: Vec<f64> = diffs.iter().map(|d| d - m).collect();
        let mut r = rng::rng(seed);
        let mut sample = vec![0.0; n];
        let mut exceed = 0usize;
        for _ in 0..resamples {
            for s in sample.iter_mut() {
                *s = centred[r.gen_range(0..n)];
            }
            let (bm, bsd) = mean_sd(&sample);
            let bse = bsd / (n as f64).sqrt();
            let tb = if bse > 0.0 { bm / bse } else { 0.0 };
            if tb >= t {
                exceed += 1;
            }
        }
        (t, (exceed + 1) as f64 / (resamples + 1) as f64)
    };
    BootstrapResult { n, mean_better, mean_baseline, mean_diff: m, t, p_value, significant: p_value < alpha }
}
