use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::schedule::{Phase, TrialSpec};
use super::session::{Condition, TutorConfig};
use crate::env::MetaAction;
use crate::error::{Error, Result};

pub const EVENT_SCHEMA_VERSION: u32 = 1;

/// One line of a session's event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub schema_version: u32,
    pub session_id: String,
    /// Position in the session's log, starting at 0.
    pub seq: u64,
    /// Milliseconds since the Unix epoch, non-decreasing within a session.
    pub timestamp_ms: u64,
    pub trial: Option<usize>,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        condition: Condition,
        seed: u64,
        config_digest: String,
        tutor: TutorConfig,
        schedule: Vec<TrialSpec>,
    },
    ChoiceOffered {
        phase: Phase,
        actions: Vec<MetaAction>,
        mgps_action: MetaAction,
        queries_used: usize,
        belief_digest: String,
    },
    ChoiceMade {
        action: MetaAction,
        executed: bool,
        rating: Option<i32>,
        voc: f64,
        max_voc: f64,
        in_optimal_set: bool,
        belief_before: String,
        belief_after: String,
    },
    Feedback {
        correct: bool,
        optimal_actions: Vec<MetaAction>,
        penalty_ms: u64,
    },
    Terminated {
        accepted: bool,
        in_optimal_set: bool,
        max_voc: f64,
        belief_digest: String,
    },
    ProjectSelected {
        project: usize,
        realized_reward: f64,
        total_cost: f64,
        rr_score: f64,
        queries: usize,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::SessionCreated { .. } => "session_created",
            Event::ChoiceOffered { .. } => "choice_offered",
            Event::ChoiceMade { .. } => "choice_made",
            Event::Feedback { .. } => "feedback",
            Event::Terminated { .. } => "terminated",
            Event::ProjectSelected { .. } => "project_selected",
        }
    }
}

/// Append-only per-session log with monotone timestamps.
#[derive(Debug, Clone)]
pub(crate) struct EventLog {
    session_id: String,
    records: Vec<EventRecord>,
    last_ms: u64,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl EventLog {
    pub(crate) fn new(session_id: String) -> Self {
        EventLog {
            session_id,
            records: Vec::new(),
            last_ms: 0,
        }
    }

    pub(crate) fn push(&mut self, trial: Option<usize>, event: Event) {
        self.last_ms = self.last_ms.max(now_ms());
        self.records.push(EventRecord {
            schema_version: EVENT_SCHEMA_VERSION,
            session_id: self.session_id.clone(),
            seq: self.records.len() as u64,
            timestamp_ms: self.last_ms,
            trial,
            event,
        });
    }

    pub(crate) fn records(&self) -> &[EventRecord] {
        &self.records
    }
}

/// One JSON object per line.
pub fn to_ndjson(records: &[EventRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses line-delimited records, skipping blank lines. Records with an
/// unknown schema version are rejected.
pub fn parse_ndjson(text: &str) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord = serde_json::from_str(line)
            .map_err(|e| Error::CorruptLog(format!("line {}: {e}", i + 1)))?;
        if rec.schema_version != EVENT_SCHEMA_VERSION {
            return Err(Error::CorruptLog(format!(
                "line {}: schema version {} (expected {EVENT_SCHEMA_VERSION})",
                i + 1,
                rec.schema_version
            )));
        }
        out.push(rec);
    }
    Ok(out)
}
