use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::belief::Query;
use super::config::ProblemConfig;

/// Ground truth for one decision problem: the true criterion scores and the
/// rating every expert would give for every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialInstance {
    pub n_projects: usize,
    pub n_criteria: usize,
    pub n_experts: usize,
    /// Row-major `n_projects × n_criteria`, clamped to the rating range.
    pub true_scores: Vec<f64>,
    /// Row-major `n_projects × n_criteria × n_experts`.
    pub ratings: Vec<i32>,
    pub seed: u64,
}

impl TrialInstance {
    pub fn true_score(&self, project: usize, criterion: usize) -> f64 {
        self.true_scores[project * self.n_criteria + criterion]
    }

    pub fn rating(&self, q: Query) -> i32 {
        self.ratings[(q.project * self.n_criteria + q.criterion) * self.n_experts + q.expert]
    }
}

/// Round to the nearest integer rating, then clamp to the scale.
pub fn round_and_clamp(x: f64, min_obs: i32, max_obs: i32) -> i32 {
    (x.round().clamp(min_obs as f64, max_obs as f64)) as i32
}

/// Draws true scores from the prior and each expert's rating around the true
/// score. The draw order is fixed (all scores row-major, then all ratings
/// row-major), so a seed fully determines the instance.
pub fn sample_instance(config: &ProblemConfig, seed: u64) -> TrialInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (config.min_obs as f64, config.max_obs as f64);

    let mut true_scores = Vec::with_capacity(config.n_projects * config.n_criteria);
    for _ in 0..config.n_projects {
        for prior in &config.priors {
            let d = Normal::new(prior.mu0, prior.sigma0).expect("validated prior");
            true_scores.push(d.sample(&mut rng).clamp(lo, hi));
        }
    }

    let mut ratings = Vec::with_capacity(config.n_queries());
    for &score in &true_scores {
        for expert in &config.experts {
            let noise: f64 = rand_distr::StandardNormal.sample(&mut rng);
            ratings.push(round_and_clamp(
                score + expert.reliability * noise,
                config.min_obs,
                config.max_obs,
            ));
        }
    }

    TrialInstance {
        n_projects: config.n_projects,
        n_criteria: config.n_criteria,
        n_experts: config.n_experts,
        true_scores,
        ratings,
        seed,
    }
}

/// `Σ_c w_c · true_score[project, c]`.
pub fn realized_reward(instance: &TrialInstance, weights: &[f64], project: usize) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(c, w)| w * instance.true_score(project, c))
        .sum()
}

/// SplitMix64 finalizer; maps (base seed, stream index) pairs to
/// well-separated child seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
