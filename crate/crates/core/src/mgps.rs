//! Meta-greedy policy for project selection.
//!
//! Every available query is scored by its myopic value of computation: the
//! expected improvement of the final project choice if a single expert rating
//! were observed and a project picked immediately afterwards. Ratings are
//! discrete, so the predictive distribution of the rating is integrated over
//! unit intervals around each rating, with open-ended intervals at the ends
//! of the scale. The policy repeatedly executes the query with the highest
//! cost-adjusted VOC and terminates once no query has positive VOC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{
    derive_seed, project_expected_reward, run_episode, sample_instance, BeliefState, EpisodeRecord, MetaAction,
    ProblemConfig, Query, TrialInstance,
};
use crate::error::{Error, Result};
use crate::stats::{normal_cdf, normal_sf};

/// Cost weight tuned on the shipped default environment.
pub const DEFAULT_COST_WEIGHT: CostWeight = CostWeight(0.1);

/// Weight `w_λ ∈ [0, 1]` trading the myopic gain against the expert fee.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CostWeight(f64);

impl CostWeight {
    pub const ZERO: CostWeight = CostWeight(0.0);

    pub fn new(w: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&w) {
            Ok(CostWeight(w))
        } else {
            Err(Error::InvalidCostWeight(w))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CostWeight {
    type Error = Error;

    fn try_from(w: f64) -> Result<Self> {
        CostWeight::new(w)
    }
}

impl From<CostWeight> for f64 {
    fn from(w: CostWeight) -> f64 {
        w.0
    }
}

/// Predictive distribution of one expert rating and the posterior mean each
/// rating would produce.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub min_obs: i32,
    pub probabilities: Vec<f64>,
    pub posterior_means: Vec<f64>,
}

impl OutcomeDistribution {
    /// `(rating, probability, posterior mean)` triples in rating order.
    pub fn outcomes(&self) -> impl Iterator<Item = (i32, f64, f64)> + '_ {
        self.probabilities
            .iter()
            .zip(&self.posterior_means)
            .enumerate()
            .map(move |(i, (p, m))| (self.min_obs + i as i32, *p, *m))
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Rating probabilities under the predictive `N(mu, sigma² + sigma_e²)`,
/// integrated over `(-∞, min + ½]`, `(obs − ½, obs + ½]` and `(max − ½, ∞)`.
pub fn outcome_probabilities(
    mu: f64,
    sigma: f64,
    sigma_e: f64,
    min_obs: i32,
    max_obs: i32,
) -> Result<OutcomeDistribution> {
    if !(sigma > 0.0) || !(sigma_e > 0.0) {
        return Err(Error::Domain(format!(
            "outcome distribution needs positive sigma and sigma_e, got {sigma} and {sigma_e}"
        )));
    }
    let sd = (sigma * sigma + sigma_e * sigma_e).sqrt();
    let z = |x: f64| (x - mu) / sd;
    let n = (max_obs - min_obs + 1) as usize;
    let mut probabilities = Vec::with_capacity(n);
    let mut posterior_means = Vec::with_capacity(n);
    for obs in min_obs..=max_obs {
        let o = obs as f64;
        let p = if obs == min_obs {
            normal_cdf(z(o + 0.5))
        } else if obs == max_obs {
            normal_sf(z(o - 0.5))
        } else {
            normal_cdf(z(o + 0.5)) - normal_cdf(z(o - 0.5))
        };
        probabilities.push(p.max(0.0));
        posterior_means.push(crate::env::posterior_update(mu, sigma, o, sigma_e)?.0);
    }
    Ok(OutcomeDistribution {
        min_obs,
        probabilities,
        posterior_means,
    })
}

/// Myopic value of one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocEstimate {
    pub action: MetaAction,
    /// Expected improvement of the final choice, before costs. Never negative.
    pub gain: f64,
    /// `(1 − w_λ)·gain − w_λ·λ_e`.
    pub voc: f64,
}

fn project_values(belief: &BeliefState, weights: &[f64]) -> Vec<f64> {
    (0..belief.n_projects())
        .map(|p| project_expected_reward(belief, weights, p))
        .collect()
}

fn voc_given_values(
    belief: &BeliefState,
    config: &ProblemConfig,
    values: &[f64],
    q: Query,
    cost_weight: CostWeight,
) -> Result<VocEstimate> {
    let expert = config.experts[q.expert];
    let r_p = values[q.project];
    let r_alt = values
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != q.project)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut gain = 0.0;
    if r_alt.is_finite() {
        let cell = belief.cell(q.project, q.criterion);
        let w_c = config.weights[q.criterion];
        let dist = outcome_probabilities(cell.mu, cell.sigma, expert.reliability, config.min_obs, config.max_obs)?;
        for (_, p, mu_hat) in dist.outcomes() {
            let updated = r_p + w_c * (mu_hat - cell.mu);
            if r_p > r_alt {
                if updated < r_alt {
                    gain += p * (r_alt - updated);
                }
            } else if updated > r_alt {
                gain += p * (updated - r_alt);
            }
        }
    }
    let w = cost_weight.get();
    Ok(VocEstimate {
        action: MetaAction::Query(q),
        gain,
        voc: (1.0 - w) * gain - w * expert.cost,
    })
}

/// Myopic VOC of `query` at `belief`.
pub fn myopic_voc(
    belief: &BeliefState,
    config: &ProblemConfig,
    query: Query,
    cost_weight: CostWeight,
) -> Result<VocEstimate> {
    belief.check_query(query, config.budget)?;
    let values = project_values(belief, &config.weights);
    voc_given_values(belief, config, &values, query, cost_weight)
}

/// VOC of every available query, in lexicographic order.
pub fn voc_table(belief: &BeliefState, config: &ProblemConfig, cost_weight: CostWeight) -> Vec<VocEstimate> {
    let values = project_values(belief, &config.weights);
    belief
        .available_queries(config.budget)
        .into_iter()
        .map(|q| {
            voc_given_values(belief, config, &values, q, cost_weight).expect("validated config and belief")
        })
        .collect()
}

/// The query with the highest VOC if that VOC is positive, otherwise
/// `Terminate`. Ties go to the lexicographically first query.
pub fn select_computation(belief: &BeliefState, config: &ProblemConfig, cost_weight: CostWeight) -> MetaAction {
    let mut best: Option<VocEstimate> = None;
    for est in voc_table(belief, config, cost_weight) {
        if best.is_none_or(|b| est.voc > b.voc) {
            best = Some(est);
        }
    }
    match best {
        Some(b) if b.voc > 0.0 => b.action,
        _ => MetaAction::Terminate,
    }
}

/// Every available action whose score is within `tolerance` of the best one.
/// `Terminate` takes part with score 0. Sorted, so `Terminate` comes last.
pub fn optimal_action_set(
    belief: &BeliefState,
    config: &ProblemConfig,
    cost_weight: CostWeight,
    tolerance: f64,
) -> Vec<MetaAction> {
    let mut scored: Vec<(MetaAction, f64)> = voc_table(belief, config, cost_weight)
        .into_iter()
        .map(|e| (e.action, e.voc))
        .collect();
    scored.push((MetaAction::Terminate, 0.0));
    let best = scored.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    scored
        .into_iter()
        .filter(|(_, v)| *v >= best - tolerance)
        .map(|(a, _)| a)
        .collect()
}

/// Runs the greedy policy on one instance until it terminates.
pub fn run_mgps_episode(
    instance: &TrialInstance,
    config: &ProblemConfig,
    cost_weight: CostWeight,
) -> Result<EpisodeRecord> {
    run_episode("mgps", instance, config, |b| select_computation(b, config, cost_weight))
}

/// `0, step, 2·step, …` strictly below 1, rounded to six decimals.
pub fn cost_weight_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Domain(format!("grid step must lie in (0, 1], got {step}")));
    }
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let w = (f64::from(i) * step * 1e6).round() / 1e6;
        if w >= 1.0 {
            break;
        }
        out.push(w);
        i += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCandidate {
    pub cost_weight: f64,
    pub mean_rr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub cost_weight: CostWeight,
    pub mean_rr: f64,
    pub episodes: usize,
    pub seed: u64,
    pub candidates: Vec<TuneCandidate>,
}

/// Mean raw RR-score of MGPS with `cost_weight` on the given instances.
pub fn mean_rr(instances: &[TrialInstance], config: &ProblemConfig, cost_weight: CostWeight) -> Result<f64> {
    let scores = instances
        .par_iter()
        .map(|inst| run_mgps_episode(inst, config, cost_weight).map(|r| r.rr_score))
        .collect::<Result<Vec<f64>>>()?;
    Ok(crate::stats::mean(&scores))
}

/// Grid search over `w_λ`: every candidate is scored on the same `episodes`
/// seeded instances; the best mean raw RR-score wins. Among exact ties the
/// median tied weight is returned.
pub fn tune_cost_weight(config: &ProblemConfig, grid: &[f64], episodes: usize, seed: u64) -> Result<TuneReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if episodes == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut grid: Vec<CostWeight> = grid.iter().map(|&w| CostWeight::new(w)).collect::<Result<_>>()?;
    grid.sort_by(|a, b| a.get().total_cmp(&b.get()));
    grid.dedup();

    let instances: Vec<TrialInstance> = (0..episodes as u64)
        .map(|i| sample_instance(config, derive_seed(seed, i)))
        .collect();
    let candidates = grid
        .iter()
        .map(|&w| {
            mean_rr(&instances, config, w).map(|m| TuneCandidate {
                cost_weight: w.get(),
                mean_rr: m,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let top = candidates.iter().map(|c| c.mean_rr).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].mean_rr == top).collect();
    let best = tied[(tied.len() - 1) / 2];
    Ok(TuneReport {
        cost_weight: grid[best],
        mean_rr: candidates[best].mean_rr,
        episodes,
        seed,
        candidates,
    })
}
