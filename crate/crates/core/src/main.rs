use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mgps::analysis::{analyze_cohort, load_logs, summarize_conditions, write_metrics_csv, AnalysisOptions};
use mgps::benchmark::{parse_policies, run_benchmark, BenchmarkOptions};
use mgps::env::{
    derive_seed, estimate_expert_reliability, sample_instance, DeviationWeighting, EpisodeRecord, ProblemConfig,
    RatingTable, ReliabilityOptions,
};
use mgps::mgps::{cost_weight_grid, run_mgps_episode, tune_cost_weight, CostWeight, DEFAULT_COST_WEIGHT};
use mgps::pouct::{run_pouct_episode, PouctConfig};
use mgps::stats::{ci95_half_width, mean};
use mgps::tutor::{run_agent, to_ndjson, AgentKind, Condition, Session, TutorConfig, TutorService};

#[derive(Parser)]
#[command(name = "mgps", version, about = "Strategy discovery, benchmarking and tutoring for multi-expert project selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Environment config (JSON). Defaults to the shipped financial environment.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> anyhow::Result<ProblemConfig> {
        match &self.config {
            Some(p) => ProblemConfig::load(p).with_context(|| format!("loading {}", p.display())),
            None => Ok(ProblemConfig::financial_default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Grid-search the MGPS cost weight.
    Tune {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, alias = "grid-step", default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run MGPS on seeded instances.
    Run(RunArgs),
    /// PO-UCT baseline.
    Pouct {
        #[command(subcommand)]
        command: PouctCommand,
    },
    /// Compare policies on shared instances.
    Bench {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 500)]
        episodes: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Comma-separated: mgps, mgps:<w>, random, pouct:<simulations>.
        #[arg(long, default_value = "mgps,random,pouct:10,pouct:100,pouct:1000")]
        policies: String,
        #[arg(long)]
        cost_weight: Option<f64>,
        /// Full report with per-instance scores (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary table (CSV).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Per-participant metrics from tutor event logs.
    Analyze {
        #[command(flatten)]
        config: ConfigArg,
        /// Directory of .ndjson logs.
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the tutor HTTP API.
    Serve {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[command(flatten)]
        tutor: TutorArgs,
    },
    /// Run scripted agents through tutor sessions and write their logs.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// mgps_tutor, no_tutor or dummy_tutor.
        #[arg(long, default_value = "mgps_tutor")]
        condition: String,
        /// mgps_follower or uniform_random.
        #[arg(long, default_value = "mgps_follower")]
        agent: String,
        #[arg(long, default_value_t = 20)]
        sessions: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tutor: TutorArgs,
    },
    /// Estimate expert noise from a rating table (CSV, one column per expert).
    EstimateReliability {
        #[arg(long)]
        ratings: PathBuf,
        /// Weight every item equally instead of by rating occurrence.
        #[arg(long)]
        unweighted: bool,
        #[arg(long, default_value_t = 0.1)]
        floor: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    cost_weight: Option<f64>,
    /// Write one EpisodeRecord per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PouctCommand {
    /// Run PO-UCT on seeded instances.
    Run {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1000)]
        simulations: usize,
        #[arg(long, default_value_t = 1.0)]
        exploration: f64,
    },
}

#[derive(Args)]
struct TutorArgs {
    #[arg(long, default_value_t = 0.001)]
    tolerance: f64,
    #[arg(long, default_value_t = 4000)]
    penalty_ms: u64,
    #[arg(long, default_value_t = 0.5)]
    dummy_rate: f64,
    #[arg(long)]
    cost_weight: Option<f64>,
}

impl TutorArgs {
    fn build(&self) -> anyhow::Result<TutorConfig> {
        let tutor = TutorConfig {
            tolerance: self.tolerance,
            penalty_ms: self.penalty_ms,
            dummy_correct_rate: self.dummy_rate,
            cost_weight: cost_weight(self.cost_weight)?,
        };
        tutor.validate()?;
        Ok(tutor)
    }
}

fn cost_weight(w: Option<f64>) -> anyhow::Result<CostWeight> {
    Ok(w.map(CostWeight::new).transpose()?.unwrap_or(DEFAULT_COST_WEIGHT))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn report_episodes(label: &str, records: &[EpisodeRecord], out: Option<&Path>) -> anyhow::Result<()> {
    let rr: Vec<f64> = records.iter().map(|r| r.rr_score).collect();
    let q: Vec<f64> = records.iter().map(|r| r.n_queries() as f64).collect();
    println!(
        "{label}: {} episodes, mean rr {:.4} ± {:.4}, mean queries {:.2}",
        records.len(),
        mean(&rr),
        ci95_half_width(&rr),
        mean(&q)
    );
    if let Some(path) = out {
        let mut w = create(path)?;
        for r in records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn run_policy(
    args: &RunArgs,
    label: &str,
    policy: impl Fn(&ProblemConfig, &mgps::env::TrialInstance, u64) -> mgps::Result<EpisodeRecord>,
) -> anyhow::Result<()> {
    let config = args.config.load()?;
    let records = (0..args.episodes as u64)
        .map(|i| {
            let inst = sample_instance(&config, derive_seed(args.seed, i));
            policy(&config, &inst, derive_seed(args.seed ^ 0x5EED, i))
        })
        .collect::<mgps::Result<Vec<_>>>()?;
    report_episodes(label, &records, args.out.as_deref())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Tune {
            config,
            episodes,
            step,
            seed,
            out,
        } => {
            let config = config.load()?;
            let report = tune_cost_weight(&config, &cost_weight_grid(step)?, episodes, seed)?;
            for c in &report.candidates {
                println!("w = {:.3}  mean rr = {:.6}", c.cost_weight, c.mean_rr);
            }
            println!("best w = {} (mean rr {:.6})", report.cost_weight.get(), report.mean_rr);
            if let Some(path) = out {
                serde_json::to_writer_pretty(create(&path)?, &report)?;
            }
        }
        Command::Run(args) => {
            let w = cost_weight(args.cost_weight)?;
            run_policy(&args, &format!("mgps:{}", w.get()), |cfg, inst, _| run_mgps_episode(inst, cfg, w))?;
        }
        Command::Pouct {
            command: PouctCommand::Run {
                run,
                simulations,
                exploration,
            },
        } => {
            let pc = PouctConfig {
                exploration_c: exploration,
                ..PouctConfig::with_simulations(simulations)
            };
            run_policy(&run, &format!("pouct:{simulations}"), |cfg, inst, seed| {
                run_pouct_episode(inst, cfg, &pc, seed)
            })?;
        }
        Command::Bench {
            config,
            episodes,
            seed,
            policies,
            cost_weight: w,
            out,
            csv,
        } => {
            let config = config.load()?;
            let options = BenchmarkOptions {
                mgps_cost_weight: cost_weight(w)?,
                ..BenchmarkOptions::default()
            };
            let report = run_benchmark(&config, &parse_policies(&policies)?, episodes, seed, &options)?;
            report.write_csv(std::io::stdout())?;
            if let Some(path) = out {
                serde_json::to_writer_pretty(create(&path)?, &report)?;
            }
            if let Some(path) = csv {
                report.write_csv(create(&path)?)?;
            }
        }
        Command::Analyze { config, logs, out } => {
            let config = config.load()?;
            let logs = load_logs(&logs)?;
            if logs.is_empty() {
                bail!("no .ndjson logs found");
            }
            let options = AnalysisOptions::default();
            let (baseline, rows) = analyze_cohort(&logs, &config, &options)?;
            write_metrics_csv(&rows, create(&out)?)?;
            println!(
                "{} participants, random baseline {:.4}, cohort std {:.4}",
                rows.len(),
                baseline.baseline_mean,
                baseline.population_std
            );
            for s in summarize_conditions(&rows) {
                println!(
                    "{:<12} n = {:<4} rr {:.4} ± {:.4}  click agreement {:.4} ± {:.4}",
                    s.condition.as_str(),
                    s.participants,
                    s.mean_normalized_rr,
                    s.rr_ci95,
                    s.mean_click_agreement,
                    s.agreement_ci95
                );
            }
        }
        Command::Serve { config, addr, tutor } => {
            let service = Arc::new(TutorService::new(config.load()?, tutor.build()?)?);
            let rt = tokio::runtime::Runtime::new()?;
            println!("tutor listening on http://{addr}");
            rt.block_on(mgps::tutor::serve(service, addr))?;
        }
        Command::Simulate {
            config,
            condition,
            agent,
            sessions,
            seed,
            out,
            tutor,
        } => {
            let config = config.load()?;
            let condition: Condition = condition.parse()?;
            let agent: AgentKind = serde_json::from_value(serde_json::Value::String(agent.clone()))
                .with_context(|| format!("unknown agent `{agent}`"))?;
            let tutor = tutor.build()?;
            std::fs::create_dir_all(&out)?;
            for i in 0..sessions {
                let id = format!("{condition}-{i:04}");
                let mut s = Session::new(id.clone(), condition, derive_seed(seed, i), config.clone(), tutor)?;
                run_agent(&mut s, agent, derive_seed(seed ^ 0xA6E7, i))?;
                std::fs::write(out.join(format!("{id}.ndjson")), to_ndjson(s.events())?)?;
            }
            println!("wrote {sessions} session logs to {}", out.display());
        }
        Command::EstimateReliability {
            ratings,
            unweighted,
            floor,
        } => {
            let table = RatingTable::from_csv(File::open(&ratings).with_context(|| ratings.display().to_string())?)?;
            let options = ReliabilityOptions {
                weighting: if unweighted {
                    DeviationWeighting::Unweighted
                } else {
                    DeviationWeighting::Occurrence
                },
                floor,
            };
            for (e, s) in estimate_expert_reliability(&table, options)?.iter().enumerate() {
                println!("expert {e}  sigma = {s:.4}");
            }
        }
    }
    Ok(())
}
