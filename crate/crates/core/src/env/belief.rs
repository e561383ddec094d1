use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ProblemConfig;
use crate::error::{Error, Result};

/// Asking `expert` to rate `criterion` of `project`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Query {
    pub project: usize,
    pub criterion: usize,
    pub expert: usize,
}

impl Query {
    pub fn new(project: usize, criterion: usize, expert: usize) -> Self {
        Query {
            project,
            criterion,
            expert,
        }
    }
}

/// A meta-level action. Queries order lexicographically by
/// `(project, criterion, expert)`; `Terminate` sorts after every query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetaAction {
    Query(Query),
    Terminate,
}

impl MetaAction {
    pub fn query(project: usize, criterion: usize, expert: usize) -> Self {
        MetaAction::Query(Query::new(project, criterion, expert))
    }

    pub fn as_query(&self) -> Option<Query> {
        match self {
            MetaAction::Query(q) => Some(*q),
            MetaAction::Terminate => None,
        }
    }
}

impl fmt::Display for MetaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaAction::Query(q) => write!(f, "q(p{},c{},e{})", q.project, q.criterion, q.expert),
            MetaAction::Terminate => f.write_str("terminate"),
        }
    }
}

/// Gaussian belief over one (project, criterion) score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mu: f64,
    pub sigma: f64,
}

/// Conjugate Gaussian update of a belief `N(mu, sigma²)` with one observation
/// of noise standard deviation `sigma_e`.
///
/// An infinitely unreliable expert leaves the belief unchanged.
pub fn posterior_update(mu: f64, sigma: f64, obs: f64, sigma_e: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("belief sigma must be positive, got {sigma}")));
    }
    if !(sigma_e > 0.0) {
        return Err(Error::Domain(format!("expert sigma_e must be positive, got {sigma_e}")));
    }
    if sigma_e.is_infinite() {
        return Ok((mu, sigma));
    }
    let var = sigma * sigma;
    let var_e = sigma_e * sigma_e;
    let total = var + var_e;
    let mu_hat = (mu * var_e + obs * var) / total;
    let sigma_hat = (var * var_e / total).sqrt();
    Ok((mu_hat, sigma_hat))
}

/// Per-(project, criterion) Gaussian beliefs plus the set of executed queries.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    n_projects: usize,
    n_criteria: usize,
    n_experts: usize,
    cells: Vec<Cell>,
    observed: Vec<bool>,
    queries_used: usize,
}

impl BeliefState {
    /// Every project starts from the per-criterion prior.
    pub fn prior(config: &ProblemConfig) -> Self {
        let mut cells = Vec::with_capacity(config.n_projects * config.n_criteria);
        for _ in 0..config.n_projects {
            cells.extend(config.priors.iter().map(|p| Cell {
                mu: p.mu0,
                sigma: p.sigma0,
            }));
        }
        BeliefState {
            n_projects: config.n_projects,
            n_criteria: config.n_criteria,
            n_experts: config.n_experts,
            cells,
            observed: vec![false; config.n_queries()],
            queries_used: 0,
        }
    }

    /// A belief with arbitrary row-major cells and no executed queries.
    pub fn from_cells(config: &ProblemConfig, cells: Vec<Cell>) -> Result<Self> {
        if cells.len() != config.n_projects * config.n_criteria {
            return Err(Error::Domain(format!(
                "expected {} cells, got {}",
                config.n_projects * config.n_criteria,
                cells.len()
            )));
        }
        if cells.iter().any(|c| !c.mu.is_finite() || !(c.sigma > 0.0)) {
            return Err(Error::Domain("cells need finite means and positive sigmas".into()));
        }
        Ok(BeliefState {
            cells,
            ..Self::prior(config)
        })
    }

    pub fn n_projects(&self) -> usize {
        self.n_projects
    }

    pub fn n_criteria(&self) -> usize {
        self.n_criteria
    }

    pub fn n_experts(&self) -> usize {
        self.n_experts
    }

    pub fn cell(&self, project: usize, criterion: usize) -> Cell {
        self.cells[project * self.n_criteria + criterion]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn queries_used(&self) -> usize {
        self.queries_used
    }

    fn slot(&self, q: Query) -> usize {
        (q.project * self.n_criteria + q.criterion) * self.n_experts + q.expert
    }

    pub fn in_bounds(&self, q: Query) -> bool {
        q.project < self.n_projects && q.criterion < self.n_criteria && q.expert < self.n_experts
    }

    pub fn is_observed(&self, q: Query) -> bool {
        self.observed[self.slot(q)]
    }

    /// Executed queries in lexicographic order.
    pub fn observed(&self) -> Vec<Query> {
        self.all_queries().filter(|q| self.is_observed(*q)).collect()
    }

    fn all_queries(&self) -> impl Iterator<Item = Query> + '_ {
        (0..self.n_projects).flat_map(move |p| {
            (0..self.n_criteria)
                .flat_map(move |c| (0..self.n_experts).map(move |e| Query::new(p, c, e)))
        })
    }

    /// Unobserved queries in lexicographic order, empty once the budget is spent.
    pub fn available_queries(&self, budget: usize) -> Vec<Query> {
        if self.queries_used >= budget {
            return Vec::new();
        }
        self.all_queries().filter(|q| !self.is_observed(*q)).collect()
    }

    /// Available queries followed by `Terminate`.
    pub fn available_actions(&self, budget: usize) -> Vec<MetaAction> {
        let mut out: Vec<MetaAction> = self
            .available_queries(budget)
            .into_iter()
            .map(MetaAction::Query)
            .collect();
        out.push(MetaAction::Terminate);
        out
    }

    /// Checks that `q` may be executed now.
    pub fn check_query(&self, q: Query, budget: usize) -> Result<()> {
        if !self.in_bounds(q) {
            return Err(Error::InvalidAction {
                action: MetaAction::Query(q),
                reason: format!(
                    "environment has {} projects, {} criteria, {} experts",
                    self.n_projects, self.n_criteria, self.n_experts
                ),
            });
        }
        if self.is_observed(q) {
            return Err(Error::DuplicateQuery(MetaAction::Query(q)));
        }
        if self.queries_used >= budget {
            return Err(Error::BudgetExceeded { budget });
        }
        Ok(())
    }

    /// Integrates `rating` from `q`'s expert into the queried cell.
    /// Callers are expected to have run [`check_query`](Self::check_query).
    pub fn observe(&mut self, q: Query, rating: f64, sigma_e: f64) -> Result<()> {
        let idx = q.project * self.n_criteria + q.criterion;
        let cell = self.cells[idx];
        let (mu, sigma) = posterior_update(cell.mu, cell.sigma, rating, sigma_e)?;
        self.cells[idx] = Cell { mu, sigma };
        let slot = self.slot(q);
        self.observed[slot] = true;
        self.queries_used += 1;
        Ok(())
    }

    /// Hex SHA-256 over the exact bit patterns of every cell plus the
    /// observed set; equal digests mean bit-identical beliefs.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in [self.n_projects, self.n_criteria, self.n_experts, self.queries_used] {
            h.update((v as u64).to_le_bytes());
        }
        for c in &self.cells {
            h.update(c.mu.to_bits().to_le_bytes());
            h.update(c.sigma.to_bits().to_le_bytes());
        }
        let bits: Vec<u8> = self.observed.iter().map(|&b| b as u8).collect();
        h.update(&bits);
        hex::encode(h.finalize())
    }
}

/// `Σ_c w_c · μ[project, c]`.
pub fn project_expected_reward(belief: &BeliefState, weights: &[f64], project: usize) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(c, w)| w * belief.cell(project, c).mu)
        .sum()
}

/// Project with the highest expected reward under `belief` (lowest index on
/// ties) and that reward.
pub fn termination_choice(belief: &BeliefState, weights: &[f64]) -> (usize, f64) {
    let mut best = (0, project_expected_reward(belief, weights, 0));
    for p in 1..belief.n_projects() {
        let v = project_expected_reward(belief, weights, p);
        if v > best.1 {
            best = (p, v);
        }
    }
    best
}
