//! Object-level project-selection reward and the meta-level MDP built on it.

mod belief;
mod config;
mod episode;
mod instance;
mod reliability;

pub use belief::{
    posterior_update, project_expected_reward, termination_choice, BeliefState, Cell, MetaAction, Query,
};
pub use config::{
    derive_cost_lambda, CriterionPrior, ExpertProfile, PerCriterion, ProblemConfig, RawConfig, RawPriors,
    FINANCIAL_DEFAULT_JSON,
};
pub use episode::{run_episode, step, EpisodeRecord, StepOutcome};
pub use instance::{derive_seed, realized_reward, round_and_clamp, sample_instance, TrialInstance};
pub use reliability::{estimate_expert_reliability, DeviationWeighting, RatingTable, ReliabilityOptions};
