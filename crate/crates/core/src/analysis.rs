//! Metrics recomputed offline from tutor event logs.
//!
//! A log is first replayed against the environment: every recorded belief
//! digest, rating and selected project must match what the environment
//! reproduces from the session seed, otherwise the log is rejected as
//! corrupt. All metrics are computed from the replay and look at test trials
//! only.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmark::run_random_baseline;
use crate::env::{
    derive_seed, realized_reward, sample_instance, termination_choice, BeliefState, MetaAction, ProblemConfig,
    Query, TrialInstance,
};
use crate::error::{Error, Result};
use crate::mgps::{optimal_action_set, select_computation, CostWeight};
use crate::stats::{ci95_half_width, mean, sample_std};
use crate::tutor::{parse_ndjson, trial_instance_seed, Condition, Event, EventRecord, Phase, TrialResult, TrialSpec, TutorConfig};

pub use crate::stats::cohen_d;

const BASELINE_STREAM: u64 = 0x42415345;
const FLOAT_SLACK: f64 = 1e-9;

/// How a query is matched against the greedy strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementMode {
    /// Member of the tolerance-optimal action set.
    #[default]
    Set,
    /// Equal to the single action the greedy policy would take.
    Strict,
}

/// How stay/switch correctness is judged after the first query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdherenceMode {
    /// Stay on the project after a top rating, switch after anything lower.
    #[default]
    MaxRatingTrigger,
    /// The second action must be in the tolerance-optimal set.
    VocExact,
}

/// One executed query together with the belief it was made from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayStep {
    pub belief: BeliefState,
    pub query: Query,
    pub rating: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReplay {
    pub spec: TrialSpec,
    pub config: ProblemConfig,
    pub instance: TrialInstance,
    pub steps: Vec<ReplayStep>,
    /// Belief at termination.
    pub final_belief: BeliefState,
    pub result: Option<TrialResult>,
}

impl TrialReplay {
    /// First action taken: the first query, or `Terminate` if none was made.
    pub fn first_action(&self) -> Option<(MetaAction, &BeliefState)> {
        match self.steps.first() {
            Some(s) => Some((MetaAction::Query(s.query), &s.belief)),
            None => self.result.map(|_| (MetaAction::Terminate, &self.final_belief)),
        }
    }

    /// Action following the first query and the belief it was taken from.
    pub fn second_action(&self) -> Option<(MetaAction, &BeliefState)> {
        match self.steps.get(1) {
            Some(s) => Some((MetaAction::Query(s.query), &s.belief)),
            None if self.steps.len() == 1 && self.result.is_some() => {
                Some((MetaAction::Terminate, &self.final_belief))
            }
            None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionReplay {
    pub session_id: String,
    pub condition: Condition,
    pub seed: u64,
    pub tutor: TutorConfig,
    pub trials: Vec<TrialReplay>,
}

impl SessionReplay {
    pub fn test_trials(&self) -> impl Iterator<Item = &TrialReplay> {
        self.trials.iter().filter(|t| t.spec.phase == Phase::Test)
    }

    /// Raw RR-scores of the completed test trials.
    pub fn test_rr_scores(&self) -> Vec<f64> {
        self.test_trials().filter_map(|t| t.result.map(|r| r.rr_score)).collect()
    }
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptLog(msg.into())
}

fn check_digest(expected: &str, belief: &BeliefState, seq: u64) -> Result<()> {
    if belief.digest() != expected {
        return Err(corrupt(format!("event {seq}: belief digest does not match the replay")));
    }
    Ok(())
}

/// Splits records by session and orders each session by sequence number.
/// Sessions come back ordered by id.
pub fn group_sessions(records: Vec<EventRecord>) -> Vec<Vec<EventRecord>> {
    let mut by_id: BTreeMap<String, Vec<EventRecord>> = BTreeMap::new();
    for r in records {
        by_id.entry(r.session_id.clone()).or_default().push(r);
    }
    by_id
        .into_values()
        .map(|mut v| {
            v.sort_by_key(|r| r.seq);
            v
        })
        .collect()
}

/// Reads every `.ndjson` or `.jsonl` file in `dir` and groups the records
/// by session.
pub fn load_logs(dir: impl AsRef<Path>) -> Result<Vec<Vec<EventRecord>>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|x| x.to_str()), Some("ndjson" | "jsonl")))
        .collect();
    paths.sort();
    let mut records = Vec::new();
    for p in paths {
        records.extend(parse_ndjson(&std::fs::read_to_string(&p)?)?);
    }
    Ok(group_sessions(records))
}

struct OpenTrial {
    spec: TrialSpec,
    config: ProblemConfig,
    instance: TrialInstance,
    belief: BeliefState,
    steps: Vec<ReplayStep>,
}

/// Rebuilds every trial of one session from its events.
///
/// `config` must be the environment the session ran on (its digest is
/// checked). Events may arrive in any order; they are sorted by `seq`, which
/// must then run contiguously from 0.
pub fn replay_session(events: &[EventRecord], config: &ProblemConfig) -> Result<SessionReplay> {
    let mut events: Vec<&EventRecord> = events.iter().collect();
    events.sort_by_key(|r| r.seq);
    let first = events.first().ok_or_else(|| corrupt("empty log"))?;
    let (condition, seed, tutor, schedule) = match &first.event {
        Event::SessionCreated {
            condition,
            seed,
            config_digest,
            tutor,
            schedule,
        } => {
            if *config_digest != config.digest() {
                return Err(corrupt("session was run on a different environment config"));
            }
            (*condition, *seed, *tutor, schedule.clone())
        }
        _ => return Err(corrupt("log does not start with session_created")),
    };

    let mut last_ms = 0;
    let mut trials = Vec::new();
    let mut open: Option<OpenTrial> = None;
    for (i, rec) in events.iter().enumerate() {
        if rec.seq != i as u64 {
            return Err(corrupt(format!("missing or duplicate event at seq {i}")));
        }
        if rec.session_id != first.session_id {
            return Err(corrupt(format!("event {i} belongs to another session")));
        }
        if rec.timestamp_ms < last_ms {
            return Err(corrupt(format!("event {i}: timestamp goes backwards")));
        }
        last_ms = rec.timestamp_ms;
        if i == 0 {
            continue;
        }

        let index = rec.trial.ok_or_else(|| corrupt(format!("event {i} has no trial index")))?;
        if open.as_ref().map(|t| t.spec.index) != Some(index) {
            if open.is_some() || index != trials.len() {
                return Err(corrupt(format!("event {i}: trial {index} out of order")));
            }
            let spec = *schedule
                .get(index)
                .ok_or_else(|| corrupt(format!("event {i}: trial {index} not in schedule")))?;
            let trial_config = config.with_projects(spec.n_projects);
            let instance = sample_instance(&trial_config, trial_instance_seed(seed, index));
            open = Some(OpenTrial {
                spec,
                belief: BeliefState::prior(&trial_config),
                config: trial_config,
                instance,
                steps: Vec::new(),
            });
        }
        let t = open.as_mut().expect("open trial");

        match &rec.event {
            Event::SessionCreated { .. } => return Err(corrupt(format!("event {i}: repeated session_created"))),
            Event::ChoiceOffered { belief_digest, .. } | Event::Terminated { belief_digest, .. } => {
                check_digest(belief_digest, &t.belief, rec.seq)?;
            }
            Event::Feedback { .. } => {}
            Event::ChoiceMade {
                action,
                executed,
                rating,
                belief_before,
                belief_after,
                ..
            } => {
                check_digest(belief_before, &t.belief, rec.seq)?;
                let q = action
                    .as_query()
                    .ok_or_else(|| corrupt(format!("event {i}: choice_made with terminate")))?;
                if *executed {
                    let rating = rating.ok_or_else(|| corrupt(format!("event {i}: executed query without rating")))?;
                    if rating != t.instance.rating(q) {
                        return Err(corrupt(format!("event {i}: rating differs from the seeded instance")));
                    }
                    t.belief.check_query(q, t.config.budget).map_err(|e| corrupt(format!("event {i}: {e}")))?;
                    let before = t.belief.clone();
                    t.belief.observe(q, rating as f64, t.config.experts[q.expert].reliability)?;
                    t.steps.push(ReplayStep {
                        belief: before,
                        query: q,
                        rating,
                    });
                }
                check_digest(belief_after, &t.belief, rec.seq)?;
            }
            Event::ProjectSelected {
                project,
                realized_reward: realized,
                total_cost,
                rr_score,
                queries,
            } => {
                let (best, _) = termination_choice(&t.belief, &t.config.weights);
                let reward = realized_reward(&t.instance, &t.config.weights, best);
                let cost: f64 = t.steps.iter().map(|s| t.config.experts[s.query.expert].cost).sum();
                if *project != best
                    || *queries != t.steps.len()
                    || (reward - realized).abs() > FLOAT_SLACK
                    || (cost - total_cost).abs() > FLOAT_SLACK
                    || (reward - cost - rr_score).abs() > FLOAT_SLACK
                {
                    return Err(corrupt(format!("event {i}: trial result differs from the replay")));
                }
                let t = open.take().expect("open trial");
                trials.push(TrialReplay {
                    spec: t.spec,
                    config: t.config,
                    instance: t.instance,
                    steps: t.steps,
                    final_belief: t.belief,
                    result: Some(TrialResult {
                        trial: index,
                        chosen_project: best,
                        realized_reward: reward,
                        total_cost: cost,
                        rr_score: reward - cost,
                        queries: *queries,
                    }),
                });
            }
        }
    }
    if let Some(t) = open {
        trials.push(TrialReplay {
            spec: t.spec,
            config: t.config,
            instance: t.instance,
            steps: t.steps,
            final_belief: t.belief,
            result: None,
        });
    }
    Ok(SessionReplay {
        session_id: first.session_id.clone(),
        condition,
        seed,
        tutor,
        trials,
    })
}

fn agrees(
    action: MetaAction,
    belief: &BeliefState,
    config: &ProblemConfig,
    cost_weight: CostWeight,
    tolerance: f64,
    mode: AgreementMode,
) -> bool {
    match mode {
        AgreementMode::Set => optimal_action_set(belief, config, cost_weight, tolerance).contains(&action),
        AgreementMode::Strict => select_computation(belief, config, cost_weight) == action,
    }
}

/// `(agreeing, total)` test-trial queries.
pub fn agreement_counts(
    replay: &SessionReplay,
    cost_weight: CostWeight,
    tolerance: f64,
    mode: AgreementMode,
) -> (usize, usize) {
    let mut hits = 0;
    let mut total = 0;
    for t in replay.test_trials() {
        for s in &t.steps {
            total += 1;
            if agrees(MetaAction::Query(s.query), &s.belief, &t.config, cost_weight, tolerance, mode) {
                hits += 1;
            }
        }
    }
    (hits, total)
}

/// Fraction of test-trial queries that match the greedy strategy.
pub fn click_agreement(
    events: &[EventRecord],
    config: &ProblemConfig,
    cost_weight: CostWeight,
    tolerance: f64,
    mode: AgreementMode,
) -> Result<f64> {
    let replay = replay_session(events, config)?;
    match agreement_counts(&replay, cost_weight, tolerance, mode) {
        (_, 0) => Err(Error::Domain("log has no test-trial queries".into())),
        (hits, total) => Ok(hits as f64 / total as f64),
    }
}

/// Mean over completed test trials of `(rr − baseline_mean) / population_std`.
pub fn participant_rr(
    events: &[EventRecord],
    config: &ProblemConfig,
    baseline_mean: f64,
    population_std: f64,
) -> Result<f64> {
    normalized_rr(&replay_session(events, config)?, baseline_mean, population_std)
}

fn normalized_rr(replay: &SessionReplay, baseline_mean: f64, population_std: f64) -> Result<f64> {
    if !(population_std > 0.0) || !population_std.is_finite() {
        return Err(Error::ZeroStd);
    }
    let scores = replay.test_rr_scores();
    if scores.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(scores.iter().map(|x| (x - baseline_mean) / population_std).sum::<f64>() / scores.len() as f64)
}

/// Strategy adherence rates over test trials. A rate is `None` when the
/// participant never had the opportunity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adherence {
    pub first_action_optimal_rate: Option<f64>,
    pub stay_correct_rate: Option<f64>,
    pub switch_correct_rate: Option<f64>,
}

fn rate(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

/// First-action optimality, and on trials that started optimally, whether
/// the learner stayed on the project after a top rating and switched after a
/// lower one.
pub fn adherence(replay: &SessionReplay, cost_weight: CostWeight, tolerance: f64, mode: AdherenceMode) -> Adherence {
    let (mut first_hits, mut first_total) = (0, 0);
    let (mut stay_hits, mut stay_total) = (0, 0);
    let (mut switch_hits, mut switch_total) = (0, 0);
    for t in replay.test_trials() {
        let Some((first, prior)) = t.first_action() else { continue };
        first_total += 1;
        if !optimal_action_set(prior, &t.config, cost_weight, tolerance).contains(&first) {
            continue;
        }
        first_hits += 1;
        let (Some(step), Some((second, belief))) = (t.steps.first(), t.second_action()) else {
            continue;
        };
        let top = step.rating == t.config.max_obs;
        let correct = match mode {
            AdherenceMode::MaxRatingTrigger => {
                let same = second.as_query().is_some_and(|q| q.project == step.query.project);
                let other = second.as_query().is_some_and(|q| q.project != step.query.project);
                if top {
                    same
                } else {
                    other
                }
            }
            AdherenceMode::VocExact => {
                optimal_action_set(belief, &t.config, cost_weight, tolerance).contains(&second)
            }
        };
        if top {
            stay_total += 1;
            stay_hits += correct as usize;
        } else {
            switch_total += 1;
            switch_hits += correct as usize;
        }
    }
    Adherence {
        first_action_optimal_rate: rate(first_hits, first_total),
        stay_correct_rate: rate(stay_hits, stay_total),
        switch_correct_rate: rate(switch_hits, switch_total),
    }
}

pub fn strategy_adherence(
    events: &[EventRecord],
    config: &ProblemConfig,
    cost_weight: CostWeight,
    tolerance: f64,
    mode: AdherenceMode,
) -> Result<Adherence> {
    Ok(adherence(&replay_session(events, config)?, cost_weight, tolerance, mode))
}

/// Normalization constants for a cohort: the random baseline's mean raw
/// RR-score on the cohort's own test instances, and the spread of the
/// participants' raw test scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortBaseline {
    pub baseline_mean: f64,
    pub population_std: f64,
}

pub fn cohort_baseline(replays: &[SessionReplay]) -> Result<CohortBaseline> {
    let mut baseline = Vec::new();
    let mut scores = Vec::new();
    for r in replays {
        scores.extend(r.test_rr_scores());
        for t in r.test_trials() {
            let seed = derive_seed(derive_seed(r.seed, BASELINE_STREAM), t.spec.index as u64);
            baseline.push(run_random_baseline(&t.instance, &t.config, seed)?.rr_score);
        }
    }
    if scores.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: scores.len(),
        });
    }
    let population_std = sample_std(&scores);
    if !(population_std > 0.0) {
        return Err(Error::ZeroStd);
    }
    Ok(CohortBaseline {
        baseline_mean: mean(&baseline),
        population_std,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub cost_weight: CostWeight,
    pub tolerance: f64,
    pub agreement: AgreementMode,
    pub adherence: AdherenceMode,
}

impl AnalysisOptions {
    /// Matches the tutor's own notion of a correct choice.
    pub fn from_tutor(tutor: &TutorConfig) -> Self {
        AnalysisOptions {
            cost_weight: tutor.cost_weight,
            tolerance: tutor.tolerance,
            agreement: AgreementMode::Set,
            adherence: AdherenceMode::MaxRatingTrigger,
        }
    }
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self::from_tutor(&TutorConfig::default())
    }
}

/// One CSV row per participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantMetrics {
    pub session_id: String,
    pub condition: Condition,
    pub test_trials: usize,
    pub mean_raw_rr: f64,
    pub mean_normalized_rr: f64,
    pub click_agreement: Option<f64>,
    pub first_action_optimal_rate: Option<f64>,
    pub stay_correct_rate: Option<f64>,
    pub switch_correct_rate: Option<f64>,
}

pub fn participant_metrics(
    replay: &SessionReplay,
    baseline: &CohortBaseline,
    options: &AnalysisOptions,
) -> Result<ParticipantMetrics> {
    let scores = replay.test_rr_scores();
    let (hits, total) = agreement_counts(replay, options.cost_weight, options.tolerance, options.agreement);
    let adh = adherence(replay, options.cost_weight, options.tolerance, options.adherence);
    Ok(ParticipantMetrics {
        session_id: replay.session_id.clone(),
        condition: replay.condition,
        test_trials: scores.len(),
        mean_raw_rr: mean(&scores),
        mean_normalized_rr: normalized_rr(replay, baseline.baseline_mean, baseline.population_std)?,
        click_agreement: rate(hits, total),
        first_action_optimal_rate: adh.first_action_optimal_rate,
        stay_correct_rate: adh.stay_correct_rate,
        switch_correct_rate: adh.switch_correct_rate,
    })
}

/// Replays every session, normalizes against the cohort and computes the
/// per-participant metrics.
pub fn analyze_cohort(
    logs: &[Vec<EventRecord>],
    config: &ProblemConfig,
    options: &AnalysisOptions,
) -> Result<(CohortBaseline, Vec<ParticipantMetrics>)> {
    let replays = logs
        .iter()
        .map(|l| replay_session(l, config))
        .collect::<Result<Vec<_>>>()?;
    let baseline = cohort_baseline(&replays)?;
    let rows = replays
        .iter()
        .map(|r| participant_metrics(r, &baseline, options))
        .collect::<Result<Vec<_>>>()?;
    Ok((baseline, rows))
}

pub fn write_metrics_csv<W: Write>(rows: &[ParticipantMetrics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-condition means with 95% confidence half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub participants: usize,
    pub mean_normalized_rr: f64,
    pub rr_ci95: f64,
    pub mean_click_agreement: f64,
    pub agreement_ci95: f64,
}

pub fn summarize_conditions(rows: &[ParticipantMetrics]) -> Vec<ConditionSummary> {
    Condition::ALL
        .into_iter()
        .filter_map(|c| {
            let group: Vec<&ParticipantMetrics> = rows.iter().filter(|r| r.condition == c).collect();
            if group.is_empty() {
                return None;
            }
            let rr: Vec<f64> = group.iter().map(|r| r.mean_normalized_rr).collect();
            let ca: Vec<f64> = group.iter().filter_map(|r| r.click_agreement).collect();
            Some(ConditionSummary {
                condition: c,
                participants: group.len(),
                mean_normalized_rr: mean(&rr),
                rr_ci95: ci95_half_width(&rr),
                mean_click_agreement: mean(&ca),
                agreement_ci95: ci95_half_width(&ca),
            })
        })
        .collect()
}
