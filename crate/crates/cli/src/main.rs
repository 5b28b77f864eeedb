//! `infplan`: generate networks, plan, simulate episodes, run benchmarks and
//! fixtures, and serve campaigns. Exit status is 0 on success, 1 for invalid
//! input and 2 for runtime failures.

use clap::{Parser, Subcommand, ValueEnum};
use infplan_campaign::ServiceConfig;
use infplan_core::dime::{run_episode, EpisodeConfig, ParticleBelief, PlanContext};
use infplan_core::harness::bench::make_dime_planner;
use infplan_core::harness::{fixture_suite, run_benchmark, ExperimentConfig, PlannerSpec};
use infplan_core::netcore::{generate, GeneratorSpec, GraphModel, UncertainNetwork};
use serde_json::json;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "infplan", version, about = "Influence planning under uncertain networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Sbm,
    PreferentialAttachment,
    WattsStrogatz,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random network document.
    GenNetwork {
        #[arg(long, value_enum, default_value = "sbm")]
        model: Model,
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        blocks: usize,
        #[arg(long, default_value_t = 0.3)]
        p_in: f64,
        #[arg(long, default_value_t = 0.05)]
        p_out: f64,
        #[arg(long)]
        heavy_tail: bool,
        /// Edges added per node (preferential attachment).
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Ring neighbours per node (Watts-Strogatz).
        #[arg(long, default_value_t = 4)]
        ring: usize,
        #[arg(long, default_value_t = 0.1)]
        rewire: f64,
        #[arg(long, default_value_t = 0.0)]
        uncertain_fraction: f64,
        #[arg(long, default_value_t = 0.5)]
        u: f64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Recommend the first round's action for a network.
    Plan {
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Play a full episode against a sampled ground truth.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Seed of the ground-truth network and diffusion.
        #[arg(long, default_value_t = 1)]
        truth_seed: u64,
        /// Write the round-by-round history as JSON lines.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Run a benchmark described by a TOML config.
    Bench {
        config: PathBuf,
        /// Directory for results.csv, timings.csv and summary.json.
        #[arg(short, long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Run the built-in worked-example fixtures.
    Fixtures,
    /// Start the campaign service.
    Serve {
        #[arg(long, default_value = "campaigns")]
        data_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Require `Authorization: Bearer <token>` on every request.
        #[arg(long, env = "INFPLAN_TOKEN")]
        token: Option<String>,
        /// Seconds a recommendation request may spend planning.
        #[arg(long, default_value_t = 60)]
        plan_budget: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Planner kind (random, degree, greedy, psinet, heal) or a JSON spec
    /// such as '{"kind":"psinet","scheme":"W","nsim":256}'.
    #[arg(long, default_value = "degree")]
    planner: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    rounds: usize,
    /// Diffusion steps per round.
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value_t = 256)]
    particles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<infplan_core::Error> for Failure {
    fn from(e: infplan_core::Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::GenNetwork {
            model,
            n,
            blocks,
            p_in,
            p_out,
            heavy_tail,
            m,
            ring,
            rewire,
            uncertain_fraction,
            u,
            p,
            seed,
            out,
        } => {
            let model = match model {
                Model::Sbm => GraphModel::Sbm { blocks, p_in, p_out, heavy_tail },
                Model::PreferentialAttachment => GraphModel::PreferentialAttachment { m },
                Model::WattsStrogatz => GraphModel::WattsStrogatz { k: ring, rewire },
            };
            let spec = GeneratorSpec { model, n, uncertain_fraction, u, p };
            let doc = generate(&spec, seed)?.network.to_json_string();
            emit(out.as_deref(), &doc)
        }
        Command::Plan { network, run } => {
            let net = UncertainNetwork::load(&network)?;
            let spec = planner_spec(&run.planner)?;
            let mut planner = make_dime_planner(&spec)?;
            let belief = ParticleBelief::initial(net.n(), run.particles);
            let excluded = vec![false; net.n()];
            let ctx = PlanContext {
                network: &net,
                belief: &belief,
                k: run.k,
                round: 0,
                rounds_total: run.rounds,
                steps: run.steps,
                chosen: &[],
                excluded: &excluded,
            };
            if run.k == 0 || run.k > net.n() || run.rounds == 0 {
                return Err(Failure::Invalid(format!("need 1 <= k <= {} and rounds >= 1", net.n())));
            }
            let action = planner.plan(&ctx, run.seed)?;
            let labels: Vec<&str> = action.nodes.iter().map(|&v| net.labels()[v].as_str()).collect();
            println!("{}", json!({"planner": spec.id(), "nodes": action.nodes, "labels": labels}));
            Ok(())
        }
        Command::Simulate { network, run, truth_seed, history } => {
            let net = UncertainNetwork::load(&network)?;
            let spec = planner_spec(&run.planner)?;
            let mut planner = make_dime_planner(&spec)?;
            let cfg = EpisodeConfig { k: run.k, rounds: run.rounds, steps: run.steps, particles: run.particles };
            let h = run_episode(&net, planner.as_mut(), &cfg, truth_seed, run.seed)?;
            if let Some(path) = history {
                std::fs::write(path, h.to_jsonl())?;
            }
            let actions: Vec<&Vec<usize>> = h.rounds.iter().map(|r| &r.action.nodes).collect();
            println!(
                "{}",
                json!({
                    "planner": spec.id(),
                    "actions": actions,
                    "total_influenced": h.total_influenced,
                    "indirect_influence": h.indirect_influence,
                })
            );
            Ok(())
        }
        Command::Bench { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_benchmark(&cfg)?;
            report.write(&out)?;
            for p in &report.summary.planners {
                println!("{:<16} mean {:>8.3}  se {:>6.3}  ok {}  failed {}", p.planner, p.mean, p.std_err, p.ok, p.failed);
            }
            for c in &report.summary.comparisons {
                match &c.test {
                    Some(t) => println!(
                        "{} vs {}: diff {:+.3}, t {:.2}, p {:.4}{}",
                        c.better,
                        c.baseline,
                        t.mean_diff,
                        t.t,
                        t.p_value,
                        if t.significant { " (significant)" } else { "" }
                    ),
                    None => println!("{} vs {}: no paired episodes", c.better, c.baseline),
                }
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Fixtures => {
            let results = fixture_suite();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            match results.iter().filter(|r| !r.passed).count() {
                0 => Ok(()),
                n => Err(Failure::Runtime(format!("{n} fixture(s) failed"))),
            }
        }
        Command::Serve { data_dir, addr, token, plan_budget } => {
            let mut cfg = ServiceConfig::new(data_dir);
            cfg.token = token;
            cfg.plan_budget = Duration::from_secs(plan_budget);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(infplan_campaign::serve(addr, cfg))?;
            Ok(())
        }
    }
}

fn planner_spec(text: &str) -> Result<PlannerSpec, Failure> {
    let value = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Failure::Invalid(format!("planner spec: {e}")))?
    } else {
        json!({ "kind": text })
    };
    serde_json::from_value(value).map_err(|e| Failure::Invalid(format!("planner spec: {e}")))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}
