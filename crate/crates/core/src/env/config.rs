//! Environment configuration: problem dimensions, criterion weights, expert
//! profiles, priors, rating bounds and the query budget.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The reconstructed financial project-selection environment shipped with the crate.
pub const FINANCIAL_DEFAULT_JSON: &str = include_str!("../../../../configs/financial_default.json");

/// Reliability and consulting fee of one expert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertProfile {
    /// Standard deviation of the expert's rating noise, in rating units.
    pub reliability: f64,
    /// Cost of one consultation, in utility units.
    pub cost: f64,
}

/// Gaussian prior over one criterion's score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionPrior {
    pub mu0: f64,
    pub sigma0: f64,
}

/// A validated project-selection environment family.
///
/// Construct with [`ProblemConfig::from_raw`], [`ProblemConfig::from_json`] or
/// [`ProblemConfig::load`]; the fields are public for reading but the
/// invariants (normalized weights, positive reliabilities, ...) are only
/// guaranteed for values produced by those constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub n_projects: usize,
    pub n_criteria: usize,
    pub n_experts: usize,
    pub min_obs: i32,
    pub max_obs: i32,
    pub budget: usize,
    pub weights: Vec<f64>,
    pub priors: Vec<CriterionPrior>,
    pub experts: Vec<ExpertProfile>,
}

/// Either one value broadcast to every criterion or one value per criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerCriterion {
    Scalar(f64),
    Each(Vec<f64>),
}

impl PerCriterion {
    fn expand(&self, n: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            PerCriterion::Scalar(v) => Ok(vec![*v; n]),
            PerCriterion::Each(vs) if vs.len() == n => Ok(vs.clone()),
            PerCriterion::Each(vs) => Err(Error::config(
                field,
                format!("must have n_criteria = {n} entries, got {}", vs.len()),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPriors {
    pub mu0: PerCriterion,
    pub sigma0: PerCriterion,
}

/// On-disk JSON layout of an environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    pub n_projects: usize,
    pub n_criteria: usize,
    pub n_experts: usize,
    pub min_obs: i32,
    pub max_obs: i32,
    pub budget: usize,
    pub weights: Vec<f64>,
    pub priors: RawPriors,
    pub experts: Vec<ExpertProfile>,
}

impl ProblemConfig {
    /// Validates a raw configuration. Weights are normalized to sum to one.
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        if raw.n_projects == 0 {
            return Err(Error::config("n_projects", "must be at least 1"));
        }
        if raw.n_criteria == 0 {
            return Err(Error::config("n_criteria", "must be at least 1"));
        }
        if raw.n_experts == 0 {
            return Err(Error::config("n_experts", "must be at least 1"));
        }
        if raw.min_obs >= raw.max_obs {
            return Err(Error::config(
                "min_obs",
                format!("must be below max_obs ({} >= {})", raw.min_obs, raw.max_obs),
            ));
        }
        if raw.weights.len() != raw.n_criteria {
            return Err(Error::config(
                "weights",
                format!("must have n_criteria = {} entries, got {}", raw.n_criteria, raw.weights.len()),
            ));
        }
        if let Some(i) = raw.weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config(format!("weights[{i}]"), "must be non-negative"));
        }
        let total: f64 = raw.weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::config("weights", "must not all be zero"));
        }
        let weights = raw.weights.iter().map(|w| w / total).collect();

        let mu0 = raw.priors.mu0.expand(raw.n_criteria, "priors.mu0")?;
        let sigma0 = raw.priors.sigma0.expand(raw.n_criteria, "priors.sigma0")?;
        if mu0.iter().any(|m| !m.is_finite()) {
            return Err(Error::config("priors.mu0", "must be finite"));
        }
        if sigma0.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::config("priors.sigma0", "must be positive"));
        }
        let priors = mu0
            .into_iter()
            .zip(sigma0)
            .map(|(mu0, sigma0)| CriterionPrior { mu0, sigma0 })
            .collect();

        if raw.experts.len() != raw.n_experts {
            return Err(Error::config(
                "experts",
                format!("must have n_experts = {} entries, got {}", raw.n_experts, raw.experts.len()),
            ));
        }
        for (i, e) in raw.experts.iter().enumerate() {
            if !(e.reliability > 0.0) {
                return Err(Error::config(format!("experts[{i}].reliability"), "must be positive"));
            }
            if !(e.cost >= 0.0 && e.cost.is_finite()) {
                return Err(Error::config(format!("experts[{i}].cost"), "must be non-negative"));
            }
        }

        Ok(ProblemConfig {
            n_projects: raw.n_projects,
            n_criteria: raw.n_criteria,
            n_experts: raw.n_experts,
            min_obs: raw.min_obs,
            max_obs: raw.max_obs,
            budget: raw.budget,
            weights,
            priors,
            experts: raw.experts,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_raw(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The reconstructed financial-institution environment
    /// (`configs/financial_default.json`).
    pub fn financial_default() -> Self {
        Self::from_json(FINANCIAL_DEFAULT_JSON).expect("shipped default config is valid")
    }

    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            n_projects: self.n_projects,
            n_criteria: self.n_criteria,
            n_experts: self.n_experts,
            min_obs: self.min_obs,
            max_obs: self.max_obs,
            budget: self.budget,
            weights: self.weights.clone(),
            priors: RawPriors {
                mu0: PerCriterion::Each(self.priors.iter().map(|p| p.mu0).collect()),
                sigma0: PerCriterion::Each(self.priors.iter().map(|p| p.sigma0).collect()),
            },
            experts: self.experts.clone(),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(&self.to_raw()).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Same environment with a different number of candidate projects.
    pub fn with_projects(&self, n_projects: usize) -> Self {
        assert!(n_projects >= 1);
        ProblemConfig {
            n_projects,
            ..self.clone()
        }
    }

    pub fn with_budget(&self, budget: usize) -> Self {
        ProblemConfig {
            budget,
            ..self.clone()
        }
    }

    /// Overrides every expert's consulting cost.
    pub fn with_uniform_cost(&self, cost: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.experts {
            e.cost = cost;
        }
        out
    }

    pub fn n_queries(&self) -> usize {
        self.n_projects * self.n_criteria * self.n_experts
    }

    pub fn n_ratings(&self) -> usize {
        (self.max_obs - self.min_obs + 1) as usize
    }

    /// Index of the largest weight (lowest index on ties).
    pub fn top_criterion(&self) -> usize {
        argmax(&self.weights)
    }

    /// Expert indices ordered from most to least reliable (smallest σ first).
    pub fn experts_by_reliability(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n_experts).collect();
        idx.sort_by(|&a, &b| {
            self.experts[a]
                .reliability
                .total_cmp(&self.experts[b].reliability)
                .then(a.cmp(&b))
        });
        idx
    }

    /// Expected termination reward of the prior belief.
    pub fn prior_value(&self) -> f64 {
        self.weights.iter().zip(&self.priors).map(|(w, p)| w * p.mu0).sum()
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Consultation cost on the meta-level reward scale: `cost / stakes * r(⊥)`.
pub fn derive_cost_lambda(consulting_cost: f64, stakes: f64, termination_reward: f64) -> Result<f64> {
    if !(stakes > 0.0) {
        return Err(Error::Domain(format!("stakes must be positive, got {stakes}")));
    }
    Ok(consulting_cost / stakes * termination_reward)
}
