//! Seeded policy comparison on shared instance sets.
//!
//! Every policy in a run sees the same instances. Raw RR-scores are
//! normalized by subtracting the random baseline's mean and dividing by the
//! standard deviation of the evaluated policy's own scores.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{derive_seed, run_episode, sample_instance, EpisodeRecord, MetaAction, ProblemConfig, TrialInstance};
use crate::error::{Error, Result};
use crate::mgps::{run_mgps_episode, CostWeight};
use crate::pouct::{run_pouct_episode, PouctConfig};
use crate::stats::{ci95_half_width, mean, sample_std};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

// Stream tags separating the RNG streams of different policies.
const RANDOM_STREAM: u64 = 0x52414E44;
const POUCT_STREAM: u64 = 0x504F5543;

/// Queries uniformly at random among unobserved queries until the budget is
/// spent, then terminates.
pub fn run_random_baseline(instance: &TrialInstance, config: &ProblemConfig, seed: u64) -> Result<EpisodeRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_episode("random", instance, config, |b| {
        let qs = b.available_queries(config.budget);
        qs.choose(&mut rng).map_or(MetaAction::Terminate, |q| MetaAction::Query(*q))
    })
}

/// `(x − baseline_mean) / std(x)` with the scores' own sample std.
pub fn normalize_scores(raw: &[f64], baseline_mean: f64) -> Result<Vec<f64>> {
    normalize_with_std(raw, baseline_mean, sample_std(raw))
}

/// `(x − baseline_mean) / std` for an externally supplied std, e.g. the
/// spread of a participant cohort.
pub fn normalize_with_std(raw: &[f64], baseline_mean: f64, std: f64) -> Result<Vec<f64>> {
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::ZeroStd);
    }
    Ok(raw.iter().map(|x| (x - baseline_mean) / std).collect())
}

/// A policy to evaluate: `mgps`, `mgps:<w>`, `random` or `pouct:<simulations>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    Mgps { cost_weight: Option<CostWeight> },
    Random,
    Pouct { simulations: usize },
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let bad = || Error::UnknownPolicy(s.to_string());
        match (name, arg) {
            ("mgps", None) => Ok(PolicySpec::Mgps { cost_weight: None }),
            ("mgps", Some(a)) => {
                let w = a.parse::<f64>().map_err(|_| bad())?;
                Ok(PolicySpec::Mgps {
                    cost_weight: Some(CostWeight::new(w)?),
                })
            }
            ("random", None) => Ok(PolicySpec::Random),
            ("pouct", Some(a)) => match a.parse::<usize>() {
                Ok(n) if n > 0 => Ok(PolicySpec::Pouct { simulations: n }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Mgps { cost_weight: None } => f.write_str("mgps"),
            PolicySpec::Mgps { cost_weight: Some(w) } => write!(f, "mgps:{}", w.get()),
            PolicySpec::Random => f.write_str("random"),
            PolicySpec::Pouct { simulations } => write!(f, "pouct:{simulations}"),
        }
    }
}

/// Parses a comma-separated policy list.
pub fn parse_policies(list: &str) -> Result<Vec<PolicySpec>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkOptions {
    /// Cost weight for `mgps` specs that do not carry their own.
    pub mgps_cost_weight: CostWeight,
    /// Template for `pouct:<n>` specs; the simulation count is overridden.
    pub pouct: PouctConfig,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            mgps_cost_weight: crate::mgps::DEFAULT_COST_WEIGHT,
            pouct: PouctConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedEpisode {
    pub record: EpisodeRecord,
    pub runtime_s: f64,
}

/// The shared instance set of a run: instance `i` uses `derive_seed(seed, i)`.
pub fn benchmark_instances(config: &ProblemConfig, episodes: usize, seed: u64) -> Vec<TrialInstance> {
    (0..episodes as u64)
        .into_par_iter()
        .map(|i| sample_instance(config, derive_seed(seed, i)))
        .collect()
}

/// Hex SHA-256 over the instance seeds, in order.
pub fn instance_digest(instances: &[TrialInstance]) -> String {
    let mut h = Sha256::new();
    for inst in instances {
        h.update(inst.seed.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Runs one policy over every instance (in parallel), timing each episode.
/// Results are ordered by instance index.
pub fn evaluate_policy(
    policy: PolicySpec,
    instances: &[TrialInstance],
    config: &ProblemConfig,
    seed: u64,
    options: &BenchmarkOptions,
) -> Result<Vec<TimedEpisode>> {
    instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let start = Instant::now();
            let record = match policy {
                PolicySpec::Mgps { cost_weight } => {
                    run_mgps_episode(inst, config, cost_weight.unwrap_or(options.mgps_cost_weight))
                }
                PolicySpec::Random => {
                    run_random_baseline(inst, config, derive_seed(derive_seed(seed, RANDOM_STREAM), i as u64))
                }
                PolicySpec::Pouct { simulations } => {
                    let params = PouctConfig {
                        n_simulations: simulations,
                        ..options.pouct
                    };
                    let s = derive_seed(derive_seed(seed, POUCT_STREAM ^ simulations as u64), i as u64);
                    run_pouct_episode(inst, config, &params, s)
                }
            }?;
            Ok(TimedEpisode {
                record,
                runtime_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub policy: String,
    pub mean_normalized_rr: f64,
    /// 1.96 standard errors of the normalized scores.
    pub ci95: f64,
    pub mean_raw_rr: f64,
    pub std_raw_rr: f64,
    pub mean_runtime_s: f64,
    pub runtime_ci95: f64,
    pub mean_queries: f64,
    pub episodes: usize,
    pub instance_digest: String,
    /// Raw RR-score per instance, by instance index.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub seed: u64,
    pub episodes: usize,
    pub config_digest: String,
    pub mgps_cost_weight: f64,
    /// Mean raw RR-score of the random baseline on the shared instances.
    pub baseline_mean: f64,
    pub rows: Vec<PolicyRow>,
}

impl BenchmarkReport {
    pub fn row(&self, policy: &str) -> Option<&PolicyRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    /// Table with one line per policy: normalized RR ± CI and runtime ± CI.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "policy",
            "rr_score",
            "rr_ci95",
            "runtime_s",
            "runtime_ci95",
            "raw_rr",
            "mean_queries",
            "episodes",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.policy.clone(),
                format!("{:.4}", r.mean_normalized_rr),
                format!("{:.4}", r.ci95),
                format!("{:.6}", r.mean_runtime_s),
                format!("{:.6}", r.runtime_ci95),
                format!("{:.4}", r.mean_raw_rr),
                format!("{:.3}", r.mean_queries),
                r.episodes.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn summarize(policy: String, runs: &[TimedEpisode], baseline_mean: f64, digest: &str) -> Result<PolicyRow> {
    let scores: Vec<f64> = runs.iter().map(|r| r.record.rr_score).collect();
    let normalized = normalize_scores(&scores, baseline_mean)?;
    let runtimes: Vec<f64> = runs.iter().map(|r| r.runtime_s).collect();
    let queries: Vec<f64> = runs.iter().map(|r| r.record.n_queries() as f64).collect();
    Ok(PolicyRow {
        policy,
        mean_normalized_rr: mean(&normalized),
        ci95: ci95_half_width(&normalized),
        mean_raw_rr: mean(&scores),
        std_raw_rr: sample_std(&scores),
        mean_runtime_s: mean(&runtimes),
        runtime_ci95: ci95_half_width(&runtimes),
        mean_queries: mean(&queries),
        episodes: runs.len(),
        instance_digest: digest.to_string(),
        scores,
    })
}

/// Evaluates every policy on the same `episodes` seeded instances.
pub fn run_benchmark(
    config: &ProblemConfig,
    policies: &[PolicySpec],
    episodes: usize,
    seed: u64,
    options: &BenchmarkOptions,
) -> Result<BenchmarkReport> {
    run_benchmark_with_episodes(config, policies, episodes, seed, options).map(|(report, _)| report)
}

/// Episodes of each policy, in instance order.
pub type PolicyRuns = Vec<(PolicySpec, Vec<TimedEpisode>)>;

/// Like [`run_benchmark`], also returning every policy's episodes in
/// instance order.
pub fn run_benchmark_with_episodes(
    config: &ProblemConfig,
    policies: &[PolicySpec],
    episodes: usize,
    seed: u64,
    options: &BenchmarkOptions,
) -> Result<(BenchmarkReport, PolicyRuns)> {
    if episodes < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: episodes,
        });
    }
    let instances = benchmark_instances(config, episodes, seed);
    let digest = instance_digest(&instances);

    let mut runs = Vec::with_capacity(policies.len());
    for &p in policies {
        runs.push((p, evaluate_policy(p, &instances, config, seed, options)?));
    }
    let baseline_mean = match runs.iter().find(|(p, _)| *p == PolicySpec::Random) {
        Some((_, r)) => mean(&r.iter().map(|e| e.record.rr_score).collect::<Vec<_>>()),
        None => {
            let r = evaluate_policy(PolicySpec::Random, &instances, config, seed, options)?;
            mean(&r.iter().map(|e| e.record.rr_score).collect::<Vec<_>>())
        }
    };

    let rows = runs
        .iter()
        .map(|(p, r)| summarize(p.to_string(), r, baseline_mean, &digest))
        .collect::<Result<Vec<_>>>()?;
    let report = BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed,
        episodes,
        config_digest: config.digest(),
        mgps_cost_weight: options.mgps_cost_weight.get(),
        baseline_mean,
        rows,
    };
    Ok((report, runs))
}
