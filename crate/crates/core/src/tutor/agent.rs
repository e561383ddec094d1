use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::session::Session;
use crate::env::MetaAction;
use crate::error::{Error, Result};
use crate::mgps::select_computation;

/// Scripted participants for closed-loop runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Always takes the greedy action at the tutor's cost weight.
    MgpsFollower,
    /// Picks uniformly among the offered actions, `Terminate` included when offered.
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AgentStats {
    pub submissions: usize,
    /// Submissions that received explicit feedback, and how many were correct.
    pub judged: usize,
    pub correct: usize,
}

const MAX_SUBMISSIONS: usize = 100_000;

/// Drives `session` to completion with a scripted agent.
pub fn run_agent(session: &mut Session, agent: AgentKind, seed: u64) -> Result<AgentStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = AgentStats::default();
    while !session.is_complete() {
        if stats.submissions >= MAX_SUBMISSIONS {
            return Err(Error::Protocol("agent did not finish the session".into()));
        }
        let action = match agent {
            AgentKind::MgpsFollower => {
                let belief = session.current_belief().expect("active trial");
                let config = session.current_config().expect("active trial");
                select_computation(belief, config, session.tutor_config().cost_weight)
            }
            AgentKind::UniformRandom => *session.offered().choose(&mut rng).expect("offered set is never empty"),
        };
        let correct = match action {
            MetaAction::Terminate => session.submit_termination()?.feedback.correct,
            a => session.submit_choice(a)?.correct,
        };
        stats.submissions += 1;
        if let Some(c) = correct {
            stats.judged += 1;
            stats.correct += c as usize;
        }
    }
    Ok(stats)
}
