//! Simulated cohort through all three tutor conditions, analyzed from the
//! exported logs alone.
//!
//! `cargo run --release --example analyze_cohort [sessions per condition]`

use mgps::analysis::{analyze_cohort, cohen_d, summarize_conditions, AnalysisOptions};
use mgps::env::{derive_seed, ProblemConfig};
use mgps::tutor::{parse_ndjson, run_agent, to_ndjson, AgentKind, Condition, Session, TutorConfig};

fn main() -> mgps::Result<()> {
    let per_condition: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let config = ProblemConfig::financial_default();

    // learners under the greedy tutor follow it; the control groups click at random
    let mut logs = Vec::new();
    for (k, condition) in Condition::ALL.into_iter().enumerate() {
        let agent = match condition {
            Condition::MgpsTutor => AgentKind::MgpsFollower,
            _ => AgentKind::UniformRandom,
        };
        for i in 0..per_condition {
            let seed = derive_seed(k as u64, i);
            let mut s = Session::new(format!("{condition}-{i:03}"), condition, seed, config.clone(), TutorConfig::default())?;
            run_agent(&mut s, agent, seed)?;
            // round-trip through the wire format, as a log file would
            logs.push(parse_ndjson(&to_ndjson(s.events())?)?);
        }
    }

    let (baseline, rows) = analyze_cohort(&logs, &config, &AnalysisOptions::default())?;
    println!(
        "random baseline rr {:.4}, cohort std {:.4}\n",
        baseline.baseline_mean, baseline.population_std
    );
    for s in summarize_conditions(&rows) {
        println!(
            "{:<12} n={:<3} rr {:>7.4} ± {:.4}   click agreement {:.4} ± {:.4}",
            s.condition.as_str(),
            s.participants,
            s.mean_normalized_rr,
            s.rr_ci95,
            s.mean_click_agreement,
            s.agreement_ci95
        );
    }

    let rr = |c: Condition| -> Vec<f64> {
        rows.iter().filter(|r| r.condition == c).map(|r| r.mean_normalized_rr).collect()
    };
    println!(
        "\nCohen's d (rr), greedy tutor vs no tutor: {:.3}",
        cohen_d(&rr(Condition::MgpsTutor), &rr(Condition::NoTutor))?
    );
    let first = &rows[0];
    println!(
        "{}: first action optimal {:?}, stay {:?}, switch {:?}",
        first.session_id, first.first_action_optimal_rate, first.stay_correct_rate, first.switch_correct_rate
    );
    Ok(())
}
