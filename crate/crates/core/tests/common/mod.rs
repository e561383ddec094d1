//! Reference implementations written independently of the crate's code
//! paths, plus small builders shared by the integration tests.

#![allow(dead_code)]

use mgps::env::{BeliefState, Cell, ProblemConfig, Query};
use serde_json::json;
use statrs::distribution::{ContinuousCDF, Normal};

/// Posterior of a Gaussian mean in precision form.
pub fn oracle_posterior(mu: f64, sigma: f64, obs: f64, sigma_e: f64) -> (f64, f64) {
    let prior_precision = 1.0 / (sigma * sigma);
    let obs_precision = 1.0 / (sigma_e * sigma_e);
    let precision = prior_precision + obs_precision;
    (
        (prior_precision * mu + obs_precision * obs) / precision,
        precision.recip().sqrt(),
    )
}

/// Probability of every rating `lo..=hi`: the predictive normal's mass on
/// the rating's rounding interval, open-ended at both ends of the scale.
pub fn oracle_rating_probs(mu: f64, sigma: f64, sigma_e: f64, lo: i32, hi: i32) -> Vec<f64> {
    let d = Normal::new(mu, (sigma * sigma + sigma_e * sigma_e).sqrt()).unwrap();
    (lo..=hi)
        .map(|r| {
            let upper = if r == hi { 1.0 } else { d.cdf(r as f64 + 0.5) };
            let lower = if r == lo { 0.0 } else { d.cdf(r as f64 - 0.5) };
            upper - lower
        })
        .collect()
}

/// Expected regret of the current decision after observing `q`, by full
/// enumeration of ratings and recomputation of every project's value.
///
/// The current decision is the queried project when it strictly leads,
/// otherwise the best other project.
pub fn oracle_gain(belief: &BeliefState, config: &ProblemConfig, q: Query) -> f64 {
    let n_p = belief.n_projects();
    let value = |cells: &dyn Fn(usize, usize) -> f64, p: usize| -> f64 {
        (0..belief.n_criteria()).map(|c| config.weights[c] * cells(p, c)).sum()
    };
    let prior_mu = |p: usize, c: usize| belief.cell(p, c).mu;
    let values: Vec<f64> = (0..n_p).map(|p| value(&prior_mu, p)).collect();
    let best_other = (0..n_p)
        .filter(|&j| j != q.project)
        .max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
        .unwrap();
    let current = if values[q.project] > values[best_other] {
        q.project
    } else {
        best_other
    };

    let cell = belief.cell(q.project, q.criterion);
    let sigma_e = config.experts[q.expert].reliability;
    let probs = oracle_rating_probs(cell.mu, cell.sigma, sigma_e, config.min_obs, config.max_obs);
    let mut gain = 0.0;
    for (i, p) in probs.iter().enumerate() {
        let rating = (config.min_obs + i as i32) as f64;
        let (mu_new, _) = oracle_posterior(cell.mu, cell.sigma, rating, sigma_e);
        let post = |pp: usize, c: usize| {
            if pp == q.project && c == q.criterion {
                mu_new
            } else {
                belief.cell(pp, c).mu
            }
        };
        let new_values: Vec<f64> = (0..n_p).map(|pp| value(&post, pp)).collect();
        let best = new_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        gain += p * (best - new_values[current]);
    }
    gain
}

/// A small environment for oracle boards.
pub fn board_config(n_projects: usize, weights: &[f64], sigmas: &[f64], reliabilities: &[f64], budget: usize) -> ProblemConfig {
    let experts: Vec<_> = reliabilities
        .iter()
        .map(|r| json!({"reliability": r, "cost": 0.002}))
        .collect();
    let raw = json!({
        "n_projects": n_projects,
        "n_criteria": weights.len(),
        "n_experts": reliabilities.len(),
        "min_obs": 1,
        "max_obs": 5,
        "budget": budget,
        "weights": weights,
        "priors": {"mu0": 3.0, "sigma0": sigmas},
        "experts": experts,
    });
    ProblemConfig::from_json(&raw.to_string()).unwrap()
}

/// Belief with the given row-major means and the config's prior sigmas.
pub fn board(config: &ProblemConfig, means: &[f64]) -> BeliefState {
    let cells = means
        .iter()
        .enumerate()
        .map(|(i, &mu)| Cell {
            mu,
            sigma: config.priors[i % config.n_criteria].sigma0,
        })
        .collect();
    BeliefState::from_cells(config, cells).unwrap()
}

/// Every vector of length `n` over `grid`.
pub fn grid_points(grid: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                grid.iter().map(move |&g| {
                    let mut v = prefix.clone();
                    v.push(g);
                    v
                })
            })
            .collect();
    }
    out
}

/// `1.0, 1.5, …, 5.0`.
pub fn half_grid() -> Vec<f64> {
    (0..9).map(|i| 1.0 + 0.5 * i as f64).collect()
}
