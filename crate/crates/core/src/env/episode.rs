use serde::{Deserialize, Serialize};

use super::belief::{termination_choice, BeliefState, MetaAction};
use super::config::ProblemConfig;
use super::instance::{realized_reward, TrialInstance};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
    /// Rating revealed by a query.
    pub rating: Option<i32>,
    /// Project selected by `Terminate`.
    pub project: Option<usize>,
}

/// Applies one meta-level action to `belief` in place.
///
/// A query costs its expert's fee and reveals the instance's pre-sampled
/// rating; `Terminate` earns the true value of the belief-optimal project.
/// Forcing `Terminate` once the budget is spent is left to the caller.
pub fn step(
    belief: &mut BeliefState,
    instance: &TrialInstance,
    action: MetaAction,
    config: &ProblemConfig,
) -> Result<StepOutcome> {
    match action {
        MetaAction::Query(q) => {
            belief.check_query(q, config.budget)?;
            let rating = instance.rating(q);
            let expert = config.experts[q.expert];
            belief.observe(q, rating as f64, expert.reliability)?;
            Ok(StepOutcome {
                reward: -expert.cost,
                done: false,
                rating: Some(rating),
                project: None,
            })
        }
        MetaAction::Terminate => {
            let (project, _) = termination_choice(belief, &config.weights);
            Ok(StepOutcome {
                reward: realized_reward(instance, &config.weights, project),
                done: true,
                rating: None,
                project: Some(project),
            })
        }
    }
}

/// Machine log of one policy run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub policy: String,
    pub instance_seed: u64,
    /// Every action taken, ending with `Terminate`.
    pub actions: Vec<MetaAction>,
    /// Ratings revealed by the queries, in order.
    pub ratings: Vec<i32>,
    /// Fee paid for each query, in order.
    pub costs: Vec<f64>,
    pub chosen_project: usize,
    pub realized_reward: f64,
    pub rr_score: f64,
}

impl EpisodeRecord {
    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn n_queries(&self) -> usize {
        self.costs.len()
    }
}

/// Drives `policy` from the prior belief until it terminates (or the budget
/// runs out, which forces `Terminate`).
pub fn run_episode<F>(
    policy_name: &str,
    instance: &TrialInstance,
    config: &ProblemConfig,
    mut policy: F,
) -> Result<EpisodeRecord>
where
    F: FnMut(&BeliefState) -> MetaAction,
{
    let mut belief = BeliefState::prior(config);
    let mut actions = Vec::new();
    let mut ratings = Vec::new();
    let mut costs = Vec::new();
    loop {
        let action = if belief.queries_used() >= config.budget {
            MetaAction::Terminate
        } else {
            policy(&belief)
        };
        let out = step(&mut belief, instance, action, config)?;
        actions.push(action);
        if out.done {
            let realized = out.reward;
            let rr_score = realized - costs.iter().sum::<f64>();
            return Ok(EpisodeRecord {
                policy: policy_name.to_string(),
                instance_seed: instance.seed,
                actions,
                ratings,
                costs,
                chosen_project: out.project.expect("terminate selects a project"),
                realized_reward: realized,
                rr_score,
            });
        }
        ratings.push(out.rating.expect("query reveals a rating"));
        costs.push(-out.reward);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_instance, Query};
    use crate::error::Error;

    #[test]
    fn terminate_on_prior_picks_project_zero() {
        let cfg = ProblemConfig::financial_default();
        let inst = sample_instance(&cfg, 5);
        let mut b = BeliefState::prior(&cfg);
        let out = step(&mut b, &inst, MetaAction::Terminate, &cfg).unwrap();
        assert!(out.done);
        assert_eq!(out.project, Some(0));
        assert_eq!(out.reward, realized_reward(&inst, &cfg.weights, 0));
    }

    #[test]
    fn query_costs_lambda_and_budget_is_enforced() {
        let cfg = ProblemConfig::financial_default();
        let inst = sample_instance(&cfg, 5);
        let mut b = BeliefState::prior(&cfg);
        for e in 0..5 {
            let out = step(&mut b, &inst, MetaAction::query(0, 0, e), &cfg).unwrap();
            assert_eq!(out.reward, -0.002);
            assert!(!out.done);
        }
        let err = step(&mut b, &inst, MetaAction::query(1, 0, 0), &cfg).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 5 }));
        let err = step(&mut b, &inst, MetaAction::query(0, 0, 0), &cfg).unwrap_err();
        assert!(matches!(err, Error::DuplicateQuery(_)));
    }

    #[test]
    fn sigma_shrinks_per_update() {
        let cfg = ProblemConfig::financial_default();
        let inst = sample_instance(&cfg, 8);
        let mut b = BeliefState::prior(&cfg);
        let mut last = b.cell(2, 4).sigma;
        for e in 0..5 {
            step(&mut b, &inst, MetaAction::Query(Query::new(2, 4, e)), &cfg).unwrap();
            let s = b.cell(2, 4).sigma;
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn episode_forces_terminate_at_budget() {
        let cfg = ProblemConfig::financial_default();
        let inst = sample_instance(&cfg, 1);
        let mut next = 0;
        let rec = run_episode("greedy-first", &inst, &cfg, |b| {
            next += 1;
            MetaAction::Query(b.available_queries(cfg.budget)[0])
        })
        .unwrap();
        assert_eq!(next, 5);
        assert_eq!(rec.actions.len(), 6);
        assert_eq!(*rec.actions.last().unwrap(), MetaAction::Terminate);
        assert_eq!(rec.rr_score, rec.realized_reward - rec.costs.iter().sum::<f64>());
    }
}
