use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::events::{Event, EventLog, EventRecord};
use super::schedule::{canonical_schedule, validate_schedule, Focus, Phase, TrialSpec};
use crate::env::{
    derive_seed, sample_instance, step, BeliefState, Cell, ExpertProfile, MetaAction, ProblemConfig, Query,
    TrialInstance,
};
use crate::error::{Error, Result};
use crate::mgps::{optimal_action_set, select_computation, voc_table, CostWeight, DEFAULT_COST_WEIGHT};

const CHOICE_STREAM: u64 = 0x100;
const FEEDBACK_STREAM: u64 = 0x101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    MgpsTutor,
    NoTutor,
    DummyTutor,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::MgpsTutor, Condition::NoTutor, Condition::DummyTutor];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::MgpsTutor => "mgps_tutor",
            Condition::NoTutor => "no_tutor",
            Condition::DummyTutor => "dummy_tutor",
        }
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCondition(s.to_string()))
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Feedback parameters shared by every session of a service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TutorConfig {
    /// A choice counts as correct when its VOC is within this of the best.
    pub tolerance: f64,
    /// Wait imposed after an incorrect choice. Enforced by the client.
    pub penalty_ms: u64,
    /// Probability that the dummy tutor calls a choice correct.
    pub dummy_correct_rate: f64,
    pub cost_weight: CostWeight,
}

impl Default for TutorConfig {
    fn default() -> Self {
        TutorConfig {
            tolerance: 0.001,
            penalty_ms: 4000,
            dummy_correct_rate: 0.5,
            cost_weight: DEFAULT_COST_WEIGHT,
        }
    }
}

impl TutorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("tolerance", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.dummy_correct_rate) {
            return Err(Error::config("dummy_correct_rate", "must lie in [0, 1]"));
        }
        if self.penalty_ms == 0 {
            return Err(Error::config("penalty_ms", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceFeedback {
    /// `None` when the condition or phase gives no feedback.
    pub correct: Option<bool>,
    /// Whether the query was carried out and its rating revealed.
    pub executed: bool,
    pub rating: Option<i32>,
    /// Actions shown as correct after an incorrect choice.
    pub optimal_actions: Vec<MetaAction>,
    pub penalty_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub chosen_project: usize,
    pub realized_reward: f64,
    pub total_cost: f64,
    pub rr_score: f64,
    pub queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationOutcome {
    pub accepted: bool,
    pub feedback: ChoiceFeedback,
    pub result: Option<TrialResult>,
    pub session_complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevealedRating {
    pub query: Query,
    pub rating: i32,
}

/// Everything a client needs to render the current trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialView {
    pub session_id: String,
    pub condition: Condition,
    pub complete: bool,
    pub trial: Option<TrialSpec>,
    pub budget: usize,
    pub queries_used: usize,
    pub weights: Vec<f64>,
    pub experts: Vec<ExpertProfile>,
    /// `belief[project][criterion]`.
    pub belief: Vec<Vec<Cell>>,
    pub revealed: Vec<RevealedRating>,
    pub offered: Vec<MetaAction>,
    pub penalty_ms: u64,
}

/// Seed of the instance behind `trial` of a session seeded with `session_seed`.
pub fn trial_instance_seed(session_seed: u64, trial: usize) -> u64 {
    derive_seed(session_seed, trial as u64)
}

/// The actions offered at `belief`.
///
/// Test trials offer every available action. Training sets always contain
/// the greedy action plus up to `choice_count − 1` distractors sampled
/// without replacement from the trial's focus class; `seed` fixes the draw.
/// With the budget spent only `Terminate` is offered.
pub fn build_choice_set(
    spec: &TrialSpec,
    belief: &BeliefState,
    config: &ProblemConfig,
    cost_weight: CostWeight,
    seed: u64,
) -> Vec<MetaAction> {
    let available = belief.available_queries(config.budget);
    let count = match spec.choice_count {
        Some(c) if spec.phase == Phase::Training && spec.focus != Focus::FullFreeChoice => c,
        _ => return belief.available_actions(config.budget),
    };
    if available.is_empty() {
        return vec![MetaAction::Terminate];
    }
    let target = select_computation(belief, config, cost_weight);
    let pool: Vec<MetaAction> = available
        .into_iter()
        .filter(|&c| match target {
            MetaAction::Terminate => true,
            MetaAction::Query(t) if c == t => false,
            MetaAction::Query(t) => match spec.focus {
                Focus::Single => false,
                Focus::CriteriaWithinProject => c.project == t.project && c.expert == t.expert,
                Focus::ExpertsWithinProject => c.project == t.project && c.criterion == t.criterion,
                Focus::Mixed => c.project == t.project,
                Focus::MixedCrossProject | Focus::FullFreeChoice => true,
            },
        })
        .map(MetaAction::Query)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<MetaAction> = pool
        .choose_multiple(&mut rng, count.saturating_sub(1))
        .copied()
        .collect();
    out.push(target);
    out.sort();
    out
}

#[derive(Debug, Clone)]
struct ActiveTrial {
    spec: TrialSpec,
    config: ProblemConfig,
    instance: TrialInstance,
    belief: BeliefState,
    offered: Vec<MetaAction>,
    revealed: Vec<RevealedRating>,
    costs: Vec<f64>,
}

/// One participant's pass through the 20-trial schedule.
#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    condition: Condition,
    seed: u64,
    config: ProblemConfig,
    tutor: TutorConfig,
    schedule: Vec<TrialSpec>,
    cursor: usize,
    trial: Option<ActiveTrial>,
    results: Vec<TrialResult>,
    feedback_rng: ChaCha8Rng,
    log: EventLog,
}

impl Session {
    /// Starts a session on the canonical schedule. Trial instances and all
    /// randomness derive from `seed`.
    pub fn new(id: impl Into<String>, condition: Condition, seed: u64, config: ProblemConfig, tutor: TutorConfig) -> Result<Self> {
        Self::with_schedule(id, condition, seed, config, tutor, canonical_schedule())
    }

    pub fn with_schedule(
        id: impl Into<String>,
        condition: Condition,
        seed: u64,
        config: ProblemConfig,
        tutor: TutorConfig,
        schedule: Vec<TrialSpec>,
    ) -> Result<Self> {
        tutor.validate()?;
        validate_schedule(&schedule)?;
        let id = id.into();
        let mut log = EventLog::new(id.clone());
        log.push(
            None,
            Event::SessionCreated {
                condition,
                seed,
                config_digest: config.digest(),
                tutor,
                schedule: schedule.clone(),
            },
        );
        let mut session = Session {
            id,
            condition,
            seed,
            config,
            tutor,
            schedule,
            cursor: 0,
            trial: None,
            results: Vec::new(),
            feedback_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, FEEDBACK_STREAM)),
            log,
        };
        session.start_trial();
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tutor_config(&self) -> &TutorConfig {
        &self.tutor
    }

    pub fn schedule(&self) -> &[TrialSpec] {
        &self.schedule
    }

    /// Index of the active trial; equals the schedule length once complete.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn is_complete(&self) -> bool {
        self.trial.is_none()
    }

    pub fn current_spec(&self) -> Option<&TrialSpec> {
        self.trial.as_ref().map(|t| &t.spec)
    }

    pub fn current_belief(&self) -> Option<&BeliefState> {
        self.trial.as_ref().map(|t| &t.belief)
    }

    /// Environment of the active trial (the base config resized to the
    /// trial's number of projects).
    pub fn current_config(&self) -> Option<&ProblemConfig> {
        self.trial.as_ref().map(|t| &t.config)
    }

    pub fn offered(&self) -> &[MetaAction] {
        self.trial.as_ref().map(|t| t.offered.as_slice()).unwrap_or(&[])
    }

    pub fn results(&self) -> &[TrialResult] {
        &self.results
    }

    pub fn events(&self) -> &[EventRecord] {
        self.log.records()
    }

    pub fn view(&self) -> TrialView {
        let (trial, budget, used, weights, experts, belief, revealed, offered) = match &self.trial {
            Some(t) => (
                Some(t.spec),
                t.config.budget,
                t.belief.queries_used(),
                t.config.weights.clone(),
                t.config.experts.clone(),
                (0..t.belief.n_projects())
                    .map(|p| (0..t.belief.n_criteria()).map(|c| t.belief.cell(p, c)).collect())
                    .collect(),
                t.revealed.clone(),
                t.offered.clone(),
            ),
            None => (
                None,
                self.config.budget,
                0,
                self.config.weights.clone(),
                self.config.experts.clone(),
                Vec::new(),
                Vec::new(),
                Vec::new(),
            ),
        };
        TrialView {
            session_id: self.id.clone(),
            condition: self.condition,
            complete: self.trial.is_none(),
            trial,
            budget,
            queries_used: used,
            weights,
            experts,
            belief,
            revealed,
            offered,
            penalty_ms: self.tutor.penalty_ms,
        }
    }

    fn start_trial(&mut self) {
        let Some(spec) = self.schedule.get(self.cursor).copied() else {
            self.trial = None;
            return;
        };
        let config = self.config.with_projects(spec.n_projects);
        let instance = sample_instance(&config, trial_instance_seed(self.seed, spec.index));
        let belief = BeliefState::prior(&config);
        self.trial = Some(ActiveTrial {
            spec,
            config,
            instance,
            belief,
            offered: Vec::new(),
            revealed: Vec::new(),
            costs: Vec::new(),
        });
        self.offer();
    }

    fn offer(&mut self) {
        let t = self.trial.as_mut().expect("active trial");
        let seed = derive_seed(
            derive_seed(self.seed, CHOICE_STREAM),
            (t.spec.index * 64 + t.belief.queries_used()) as u64,
        );
        t.offered = build_choice_set(&t.spec, &t.belief, &t.config, self.tutor.cost_weight, seed);
        let mgps_action = select_computation(&t.belief, &t.config, self.tutor.cost_weight);
        self.log.push(
            Some(t.spec.index),
            Event::ChoiceOffered {
                phase: t.spec.phase,
                actions: t.offered.clone(),
                mgps_action,
                queries_used: t.belief.queries_used(),
                belief_digest: t.belief.digest(),
            },
        );
    }

    /// Correctness for the current condition and phase; `in_optimal_set`
    /// is only consulted by the greedy tutor.
    fn judge(&mut self, phase: Phase, in_optimal_set: bool) -> Option<bool> {
        match (phase, self.condition) {
            (Phase::Test, _) | (_, Condition::NoTutor) => None,
            (Phase::Training, Condition::MgpsTutor) => Some(in_optimal_set),
            (Phase::Training, Condition::DummyTutor) => {
                Some(self.feedback_rng.random_bool(self.tutor.dummy_correct_rate))
            }
        }
    }

    /// What an incorrect choice reveals: the real optimal set for the greedy
    /// tutor, a random offered action for the dummy tutor.
    fn reveal(&mut self, optimal: Vec<MetaAction>) -> Vec<MetaAction> {
        match self.condition {
            Condition::DummyTutor => {
                let offered = self.offered().to_vec();
                offered.choose(&mut self.feedback_rng).copied().into_iter().collect()
            }
            _ => optimal,
        }
    }

    fn scores(&self) -> (Vec<MetaAction>, f64, Vec<(MetaAction, f64)>) {
        let t = self.trial.as_ref().expect("active trial");
        let table: Vec<(MetaAction, f64)> = voc_table(&t.belief, &t.config, self.tutor.cost_weight)
            .into_iter()
            .map(|e| (e.action, e.voc))
            .collect();
        let max_voc = table.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        let optimal = optimal_action_set(&t.belief, &t.config, self.tutor.cost_weight, self.tutor.tolerance);
        (optimal, max_voc, table)
    }

    /// Submits a query from the offered set (any available query in the
    /// test phase).
    ///
    /// In training with the greedy tutor the choice is correct iff it lies in
    /// the tolerance-optimal set; an incorrect choice is not executed and
    /// carries the penalty and the optimal set. The dummy tutor draws
    /// correctness at random and always executes; without a tutor there is no
    /// feedback.
    pub fn submit_choice(&mut self, action: MetaAction) -> Result<ChoiceFeedback> {
        let t = self
            .trial
            .as_ref()
            .ok_or_else(|| Error::Protocol("session is complete".into()))?;
        let query = match action {
            MetaAction::Query(q) => q,
            MetaAction::Terminate => {
                return Err(Error::Protocol("terminate through the termination request".into()));
            }
        };
        if !t.offered.contains(&action) {
            return Err(Error::Protocol(format!("{action} was not offered")));
        }
        let (phase, index) = (t.spec.phase, t.spec.index);

        let (optimal, max_voc, table) = self.scores();
        let voc = table
            .iter()
            .find(|(a, _)| *a == action)
            .map(|(_, v)| *v)
            .expect("offered query is available");
        let in_optimal_set = optimal.contains(&action);
        let correct = self.judge(phase, in_optimal_set);
        let executed = !(self.condition == Condition::MgpsTutor && correct == Some(false));

        let t = self.trial.as_mut().expect("active trial");
        let belief_before = t.belief.digest();
        let rating = if executed {
            let out = step(&mut t.belief, &t.instance, action, &t.config)?;
            let rating = out.rating.expect("query reveals a rating");
            t.costs.push(-out.reward);
            t.revealed.push(RevealedRating { query, rating });
            Some(rating)
        } else {
            None
        };
        let belief_after = t.belief.digest();

        self.log.push(
            Some(index),
            Event::ChoiceMade {
                action,
                executed,
                rating,
                voc,
                max_voc,
                in_optimal_set,
                belief_before,
                belief_after,
            },
        );
        let feedback = self.feedback(index, correct, optimal, executed, rating);
        if executed {
            self.offer();
        }
        Ok(feedback)
    }

    fn feedback(
        &mut self,
        index: usize,
        correct: Option<bool>,
        optimal: Vec<MetaAction>,
        executed: bool,
        rating: Option<i32>,
    ) -> ChoiceFeedback {
        let wrong = correct == Some(false);
        let optimal_actions = if wrong { self.reveal(optimal) } else { Vec::new() };
        let penalty_ms = if wrong { self.tutor.penalty_ms } else { 0 };
        if let Some(correct) = correct {
            self.log.push(
                Some(index),
                Event::Feedback {
                    correct,
                    optimal_actions: optimal_actions.clone(),
                    penalty_ms,
                },
            );
        }
        ChoiceFeedback {
            correct,
            executed,
            rating,
            optimal_actions,
            penalty_ms,
        }
    }

    /// Ends the current trial by selecting the belief-optimal project.
    ///
    /// The greedy tutor rejects termination during training unless
    /// `Terminate` is in the tolerance-optimal set; every other case is
    /// accepted. An accepted termination advances to the next trial.
    pub fn submit_termination(&mut self) -> Result<TerminationOutcome> {
        let t = self
            .trial
            .as_ref()
            .ok_or_else(|| Error::Protocol("session is complete".into()))?;
        let (phase, index) = (t.spec.phase, t.spec.index);
        let (optimal, max_voc, _) = self.scores();
        let in_optimal_set = optimal.contains(&MetaAction::Terminate);
        let correct = self.judge(phase, in_optimal_set);
        let accepted = !(self.condition == Condition::MgpsTutor && correct == Some(false));

        let belief_digest = self.trial.as_ref().expect("active trial").belief.digest();
        self.log.push(
            Some(index),
            Event::Terminated {
                accepted,
                in_optimal_set,
                max_voc,
                belief_digest,
            },
        );
        let feedback = self.feedback(index, correct, optimal, accepted, None);
        if !accepted {
            return Ok(TerminationOutcome {
                accepted,
                feedback,
                result: None,
                session_complete: false,
            });
        }

        let mut t = self.trial.take().expect("active trial");
        let out = step(&mut t.belief, &t.instance, MetaAction::Terminate, &t.config)?;
        let total_cost: f64 = t.costs.iter().sum();
        let result = TrialResult {
            trial: index,
            chosen_project: out.project.expect("terminate selects a project"),
            realized_reward: out.reward,
            total_cost,
            rr_score: out.reward - total_cost,
            queries: t.belief.queries_used(),
        };
        self.log.push(
            Some(index),
            Event::ProjectSelected {
                project: result.chosen_project,
                realized_reward: result.realized_reward,
                total_cost: result.total_cost,
                rr_score: result.rr_score,
                queries: result.queries,
            },
        );
        self.results.push(result);
        self.cursor += 1;
        self.start_trial();
        Ok(TerminationOutcome {
            accepted,
            feedback,
            result: Some(result),
            session_complete: self.trial.is_none(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(condition: Condition, seed: u64) -> Session {
        Session::new("s", condition, seed, ProblemConfig::financial_default(), TutorConfig::default()).unwrap()
    }

    #[test]
    fn fresh_log_has_creation_and_first_offer() {
        let s = session(Condition::MgpsTutor, 1);
        let kinds: Vec<_> = s.events().iter().map(|e| e.event.kind()).collect();
        assert_eq!(kinds, ["session_created", "choice_offered"]);
        assert_eq!(s.offered().len(), 1);
    }

    #[test]
    fn same_seed_same_instances() {
        let a = session(Condition::NoTutor, 9);
        let b = session(Condition::NoTutor, 9);
        assert_eq!(a.trial.as_ref().unwrap().instance, b.trial.as_ref().unwrap().instance);
        assert_eq!(a.offered(), b.offered());
    }

    #[test]
    fn unknown_condition() {
        let err = "tutor".parse::<Condition>().unwrap_err();
        assert!(matches!(err, Error::UnknownCondition(_)));
        assert_eq!("dummy_tutor".parse::<Condition>().unwrap(), Condition::DummyTutor);
    }

    #[test]
    fn unoffered_choice_is_protocol_error() {
        let mut s = session(Condition::MgpsTutor, 2);
        let offered = s.offered()[0];
        let other = MetaAction::query(1, 0, 0);
        assert_ne!(offered, other);
        assert!(matches!(s.submit_choice(other), Err(Error::Protocol(_))));
        assert!(matches!(s.submit_choice(MetaAction::Terminate), Err(Error::Protocol(_))));
    }

    #[test]
    fn criteria_focus_varies_only_criterion() {
        let cfg = ProblemConfig::financial_default().with_projects(2);
        let spec = canonical_schedule()[1];
        let b = BeliefState::prior(&cfg);
        let set = build_choice_set(&spec, &b, &cfg, DEFAULT_COST_WEIGHT, 5);
        assert_eq!(set.len(), 3);
        let qs: Vec<Query> = set.iter().map(|a| a.as_query().unwrap()).collect();
        assert!(qs.iter().all(|q| q.project == qs[0].project && q.expert == qs[0].expert));
        let mut crit: Vec<_> = qs.iter().map(|q| q.criterion).collect();
        crit.dedup();
        assert_eq!(crit.len(), 3);
    }

    #[test]
    fn wrong_training_choice_executes_nothing() {
        let mut s = session(Condition::MgpsTutor, 3);
        // advance to a trial that offers distractors
        while s.current_spec().unwrap().choice_count == Some(1) {
            loop {
                let b = s.current_belief().unwrap().clone();
                let cfg = s.current_config().unwrap().clone();
                match select_computation(&b, &cfg, DEFAULT_COST_WEIGHT) {
                    MetaAction::Terminate => {
                        s.submit_termination().unwrap();
                        break;
                    }
                    a => {
                        s.submit_choice(a).unwrap();
                    }
                }
            }
        }
        let b = s.current_belief().unwrap().clone();
        let cfg = s.current_config().unwrap().clone();
        let optimal = optimal_action_set(&b, &cfg, DEFAULT_COST_WEIGHT, 0.001);
        let wrong = *s.offered().iter().find(|a| !optimal.contains(a)).unwrap();
        let fb = s.submit_choice(wrong).unwrap();
        assert_eq!(fb.correct, Some(false));
        assert!(!fb.executed);
        assert_eq!(fb.penalty_ms, 4000);
        assert_eq!(fb.optimal_actions, optimal);
        assert_eq!(s.current_belief().unwrap(), &b);
    }
}
