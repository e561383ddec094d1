use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The shaping schedule every session follows, shipped as
/// `configs/tutor_schedule.json`.
pub const TUTOR_SCHEDULE_JSON: &str = include_str!("../../../../configs/tutor_schedule.json");

pub const N_TRAINING_TRIALS: usize = 10;
pub const N_TRIALS: usize = 20;
pub const MAX_CHOICE_COUNT: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Training,
    Test,
}

/// Which distractors accompany the greedy action in a training choice set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Focus {
    /// Only the greedy action.
    Single,
    /// Same project and expert, other criteria.
    CriteriaWithinProject,
    /// Same project and criterion, other experts.
    ExpertsWithinProject,
    /// Any other query on the same project.
    Mixed,
    /// Any other query on any project.
    MixedCrossProject,
    /// Every available action, as in the test phase.
    FullFreeChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub index: usize,
    pub phase: Phase,
    pub n_projects: usize,
    /// Size of the offered choice set; `None` means free choice.
    pub choice_count: Option<usize>,
    pub focus: Focus,
}

/// Parses and validates the shipped schedule.
pub fn canonical_schedule() -> Vec<TrialSpec> {
    let schedule: Vec<TrialSpec> = serde_json::from_str(TUTOR_SCHEDULE_JSON).expect("shipped schedule parses");
    validate_schedule(&schedule).expect("shipped schedule is valid");
    schedule
}

/// Checks the structural rules of a 20-trial schedule: ten training trials
/// (two projects up to trial 6, five afterwards) with non-decreasing choice
/// counts in `1..=9`, then ten free-choice test trials on five projects.
pub fn validate_schedule(schedule: &[TrialSpec]) -> Result<()> {
    if schedule.len() != N_TRIALS {
        return Err(Error::config(
            "schedule",
            format!("must have {N_TRIALS} trials, got {}", schedule.len()),
        ));
    }
    let mut last_count = 0;
    for (i, t) in schedule.iter().enumerate() {
        let field = |name: &str| format!("schedule[{i}].{name}");
        if t.index != i {
            return Err(Error::config(field("index"), format!("must be {i}")));
        }
        let training = i < N_TRAINING_TRIALS;
        let expected_phase = if training { Phase::Training } else { Phase::Test };
        if t.phase != expected_phase {
            return Err(Error::config(field("phase"), format!("must be {expected_phase:?}")));
        }
        let expected_projects = if i < 7 { 2 } else { 5 };
        if t.n_projects != expected_projects {
            return Err(Error::config(field("n_projects"), format!("must be {expected_projects}")));
        }
        if training {
            let count = t
                .choice_count
                .ok_or_else(|| Error::config(field("choice_count"), "is required in training"))?;
            if !(1..=MAX_CHOICE_COUNT).contains(&count) {
                return Err(Error::config(field("choice_count"), "must lie in 1..=9"));
            }
            if count < last_count {
                return Err(Error::config(field("choice_count"), "must not decrease"));
            }
            last_count = count;
            if t.focus == Focus::FullFreeChoice {
                return Err(Error::config(field("focus"), "free choice is reserved for test trials"));
            }
        } else if t.choice_count.is_some() || t.focus != Focus::FullFreeChoice {
            return Err(Error::config(field("focus"), "test trials are free choice"));
        }
    }
    Ok(())
}
