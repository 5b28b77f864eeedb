//! Config-driven benchmark runs. Every planner sees the same networks and
//! ground truths per episode, so results are paired across planners.

use super::config::{CaimSettings, ExperimentConfig, NetworkSource, PlannerSpec, Problem};
use super::stats::{paired_bootstrap_t, BootstrapResult};
use crate::caims::{
    partition_communities, run_caim_episode, CaimConfig, CaimPolicy, CaimsPlanner, GibbsSource, GreedyPlusPolicy,
    GreedySessionPolicy, MarkovNet, MarkovNetBelief,
};
use crate::dime::{run_episode, DegreePlanner, EpisodeConfig, GreedyPlanner, Planner, RandomPlanner};
use crate::error::{Error, Result};
use crate::heal::HealPlanner;
use crate::influence::{CachedSpread, OneStepSpread, SpreadOracle, SpreadSampler};
use crate::netcore::{generate, UncertainNetwork};
use crate::psinet::PsinetPlanner;
use crate::rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

const GIBBS_SWEEPS: usize = 50;
const SPREAD_NSIM: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub planner: String,
    pub network: String,
    pub episode: usize,
    pub seed: u64,
    /// DIME: nodes influenced at the end of the episode.
    pub total_influenced: Option<usize>,
    /// DIME: `total_influenced − K·T`.
    pub indirect_influence: Option<i64>,
    /// CAIM: expected spread of the final locked set.
    pub spread: Option<f64>,
    pub status: String,
}

impl ResultRow {
    pub fn metric(&self) -> Option<f64> {
        if self.status != "ok" {
            return None;
        }
        self.indirect_influence.map(|v| v as f64).or(self.spread)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub planner: String,
    pub episode: usize,
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub ok: usize,
    pub failed: usize,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub better: String,
    pub baseline: String,
    /// Absent when the two planners share no successful episodes.
    pub test: Option<BootstrapResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub name: String,
    pub problem: Problem,
    pub episodes: usize,
    pub metric: String,
    pub planners: Vec<PlannerSummary>,
    pub comparisons: Vec<ComparisonResult>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<ResultRow>,
    pub timings: Vec<TimingRow>,
    pub summary: BenchSummary,
}

impl BenchReport {
    pub fn results_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn timings_csv(&self) -> Result<String> {
        to_csv(&self.timings)
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    /// Writes `results.csv`, `timings.csv` and `summary.json` into `dir`.
    /// The first and last depend only on the config.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.results_csv()?)?;
        std::fs::write(dir.join("timings.csv"), self.timings_csv()?)?;
        std::fs::write(dir.join("summary.json"), self.summary_json() + "\n")?;
        Ok(())
    }

    pub fn comparison(&self, better: &str, baseline: &str) -> Option<&BootstrapResult> {
        self.summary.comparisons.iter().find(|c| c.better == better && c.baseline == baseline)?.test.as_ref()
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Contract(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Contract(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Network used by episode `episode` and its identifier.
pub fn episode_network(cfg: &ExperimentConfig, episode: usize) -> Result<(UncertainNetwork, String)> {
    match &cfg.network {
        NetworkSource::File(path) => {
            let net = UncertainNetwork::load(path)?;
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((net, id))
        }
        NetworkSource::Generator { spec, vary } => {
            let idx = if *vary { episode as u64 } else { 0 };
            let seed = rng::derive(cfg.seed, idx);
            Ok((generate(spec, seed)?.network, format!("gen-{seed:016x}")))
        }
    }
}

pub fn make_dime_planner(spec: &PlannerSpec) -> Result<Box<dyn Planner>> {
    Ok(match spec {
        PlannerSpec::Random => Box::new(RandomPlanner),
        PlannerSpec::Degree => Box::new(DegreePlanner),
        PlannerSpec::Greedy { nsim } => Box::new(GreedyPlanner { nsim: *nsim }),
        PlannerSpec::Psinet(p) => Box::new(PsinetPlanner::new(p.clone())),
        PlannerSpec::Heal(h) => Box::new(HealPlanner::new(h.clone())),
        other => return Err(Error::param("planners", format!("{} does not solve DIME", other.id()))),
    })
}

/// Everything a CAIM episode needs besides the policy.
pub struct CaimWorld {
    pub cfg: CaimConfig,
    pub prior: MarkovNet,
    pub oracle: Box<dyn SpreadOracle>,
    pub n: usize,
    pub network: UncertainNetwork,
}

impl CaimWorld {
    pub fn new(net: &UncertainNetwork, s: &CaimSettings, seed: u64) -> Result<Self> {
        let cfg = CaimConfig { k: s.k, l: s.l, t: s.t, q_max: s.q_max, epsilon: s.epsilon, spread_steps: s.spread_steps };
        cfg.validate()?;
        if s.k > net.n() {
            return Err(Error::param("k", format!("need 1..={}", net.n())));
        }
        let network = net.collapse();
        let oracle: Box<dyn SpreadOracle> = if s.spread_steps == 1 {
            Box::new(OneStepSpread::new(&network))
        } else {
            Box::new(CachedSpread::new(SpreadSampler::new(&network, s.spread_steps, SPREAD_NSIM, seed)?))
        };
        let prior = MarkovNet::attractive(net, s.theta, s.availability)?;
        Ok(Self { cfg, prior, oracle, n: net.n(), network })
    }

    pub fn policy<'a>(&'a self, spec: &PlannerSpec, s: &CaimSettings, seed: u64) -> Result<Box<dyn CaimPolicy + 'a>> {
        let oracle = self.oracle.as_ref();
        Ok(match spec {
            PlannerSpec::GreedySession => Box::new(GreedySessionPolicy::new(oracle, self.n, self.cfg.k)),
            PlannerSpec::GreedyPlus => Box::new(GreedyPlusPolicy::new(oracle, self.n, &self.cfg, seed)),
            PlannerSpec::Caims(p) => {
                let belief = MarkovNetBelief::new(self.prior.clone(), s.belief_cap)?;
                let comms = partition_communities(&self.network, s.communities, seed)?;
                Box::new(CaimsPlanner::new(self.cfg, belief, comms, oracle, p.clone())?)
            }
            other => return Err(Error::param("planners", format!("{} does not solve CAIM", other.id()))),
        })
    }
}

fn run_one(cfg: &ExperimentConfig, net: &UncertainNetwork, spec: &PlannerSpec, episode: usize) -> Result<ResultRow> {
    let gt_seed = rng::derive(cfg.seed, 10_000 + episode as u64);
    let planner_seed = rng::derive(cfg.seed, 20_000 + episode as u64);
    let mut row = ResultRow {
        planner: spec.id(),
        network: String::new(),
        episode,
        seed: gt_seed,
        total_influenced: None,
        indirect_influence: None,
        spread: None,
        status: "ok".into(),
    };
    match cfg.problem {
        Problem::Dime => {
            let ep: EpisodeConfig = cfg.dime.expect("validated");
            let mut planner = make_dime_planner(spec)?;
            let h = run_episode(net, planner.as_mut(), &ep, gt_seed, planner_seed)?;
            row.total_influenced = Some(h.total_influenced);
            row.indirect_influence = Some(h.indirect_influence);
        }
        Problem::Caim => {
            let s = cfg.caim.as_ref().expect("validated");
            let world = CaimWorld::new(net, s, planner_seed)?;
            let env = GibbsSource { net: world.prior.clone(), sweeps: GIBBS_SWEEPS };
            let mut policy = world.policy(spec, s, planner_seed)?;
            let ep = run_caim_episode(&world.cfg, &env, world.oracle.as_ref(), policy.as_mut(), gt_seed)?;
            row.spread = Some(world.oracle.spread(&ep.locked));
        }
    }
    Ok(row)
}

fn run_episode_all(cfg: &ExperimentConfig, episode: usize) -> Vec<(usize, ResultRow, TimingRow)> {
    let network = episode_network(cfg, episode);
    cfg.planners
        .iter()
        .enumerate()
        .map(|(pi, spec)| {
            let start = Instant::now();
            let mut row = match &network {
                Ok((net, _)) => run_one(cfg, net, spec, episode),
                Err(e) => Err(Error::Contract(e.to_string())),
            }
            .unwrap_or_else(|e| ResultRow {
                planner: spec.id(),
                network: String::new(),
                episode,
                seed: rng::derive(cfg.seed, 10_000 + episode as u64),
                total_influenced: None,
                indirect_influence: None,
                spread: None,
                status: format!("failed: {e}"),
            });
            if let Ok((_, id)) = &network {
                row.network = id.clone();
            }
            let timing = TimingRow { planner: spec.id(), episode, millis: start.elapsed().as_millis() };
            (pi, row, timing)
        })
        .collect()
}

fn summarize(cfg: &ExperimentConfig, rows: &[ResultRow]) -> BenchSummary {
    let planners = cfg
        .planners
        .iter()
        .map(|p| {
            let id = p.id();
            let vals: Vec<f64> = rows.iter().filter(|r| r.planner == id).filter_map(ResultRow::metric).collect();
            let failed = rows.iter().filter(|r| r.planner == id && r.status != "ok").count();
            let n = vals.len() as f64;
            let mean = if vals.is_empty() { 0.0 } else { vals.iter().sum::<f64>() / n };
            let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            PlannerSummary { planner: id, ok: vals.len(), failed, mean, std_err: (var / n.max(1.0)).sqrt() }
        })
        .collect();
    let comparisons = cfg
        .compare
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for e in 0..cfg.episodes {
                let get = |id: &str| rows.iter().find(|r| r.planner == id && r.episode == e).and_then(ResultRow::metric);
                if let (Some(x), Some(y)) = (get(&c.better), get(&c.baseline)) {
                    a.push(x);
                    b.push(y);
                }
            }
            let test = (!a.is_empty()).then(|| {
                paired_bootstrap_t(&a, &b, cfg.bootstrap_resamples, cfg.alpha, rng::derive(cfg.seed, 30_000 + i as u64))
            });
            ComparisonResult { better: c.better.clone(), baseline: c.baseline.clone(), test }
        })
        .collect();
    BenchSummary {
        name: cfg.name.clone(),
        problem: cfg.problem,
        episodes: cfg.episodes,
        metric: match cfg.problem {
            Problem::Dime => "indirect_influence".into(),
            Problem::Caim => "spread".into(),
        },
        planners,
        comparisons,
    }
}

/// Runs every planner on every episode. A failing planner yields a row
/// marked failed and the run continues.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let workers = match cfg.workers {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        w => w,
    }
    .min(cfg.episodes);
    let mut out: Vec<(usize, ResultRow, TimingRow)> = if workers <= 1 {
        (0..cfg.episodes).flat_map(|e| run_episode_all(cfg, e)).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    s.spawn(move || {
                        (w..cfg.episodes).step_by(workers).flat_map(|e| run_episode_all(cfg, e)).collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    out.sort_by_key(|(pi, row, _)| (*pi, row.episode));
    let rows: Vec<ResultRow> = out.iter().map(|(_, r, _)| r.clone()).collect();
    let timings = out.into_iter().map(|(_, _, t)| t).collect();
    let summary = summarize(cfg, &rows);
    Ok(BenchReport { rows, timings, summary })
}
