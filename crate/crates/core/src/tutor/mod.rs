//! Session-based tutor that teaches the greedy strategy.
//!
//! A session runs ten shaping trials followed by ten free-choice test trials.
//! During training the learner picks from a small set of offered queries that
//! always contains the greedy action. Under the greedy tutor a choice counts
//! as correct when its VOC is within a tolerance of the best; wrong choices
//! are not executed and earn a waiting penalty. A dummy tutor gives random
//! feedback and the no-tutor condition gives none. Every step is appended to
//! an event log from which [`crate::analysis`] recomputes all metrics.

mod agent;
mod events;
mod schedule;
mod service;
mod session;

pub use agent::{run_agent, AgentKind, AgentStats};
pub use events::{parse_ndjson, to_ndjson, Event, EventRecord, EVENT_SCHEMA_VERSION};
pub use schedule::{
    canonical_schedule, validate_schedule, Focus, Phase, TrialSpec, MAX_CHOICE_COUNT, N_TRAINING_TRIALS, N_TRIALS,
    TUTOR_SCHEDULE_JSON,
};
pub use service::{
    router, serve, ChoiceRequest, CreateSessionRequest, CreateSessionResponse, ErrorBody, TutorService, Versioned,
    API_SCHEMA_VERSION,
};
pub use session::{
    build_choice_set, trial_instance_seed, ChoiceFeedback, Condition, RevealedRating, Session, TerminationOutcome,
    TrialResult, TrialView, TutorConfig,
};
