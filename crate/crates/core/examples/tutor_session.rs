//! Walking through a tutor session in-process: the shaping schedule, the
//! offered choice sets, feedback on a wrong choice, and the event log.
//!
//! `cargo run --release --example tutor_session`

use mgps::env::ProblemConfig;
use mgps::mgps::optimal_action_set;
use mgps::tutor::{run_agent, AgentKind, Condition, Session, TutorConfig};

fn main() -> mgps::Result<()> {
    let config = ProblemConfig::financial_default();
    let tutor = TutorConfig::default();
    let mut session = Session::new("demo", Condition::MgpsTutor, 2024, config.clone(), tutor)?;

    println!("schedule:");
    for t in session.schedule() {
        println!(
            "  trial {:>2}  {:?}  {} projects  choices {:<4} {:?}",
            t.index,
            t.phase,
            t.n_projects,
            t.choice_count.map_or("all".to_string(), |c| c.to_string()),
            t.focus
        );
    }

    // play the greedy action through trial 0
    while session.cursor() == 0 {
        let action = session.offered()[0];
        let fb = match action {
            mgps::env::MetaAction::Terminate => session.submit_termination()?.feedback,
            a => session.submit_choice(a)?,
        };
        println!("trial 0: offered only {action} -> correct {:?}, rating {:?}", fb.correct, fb.rating);
    }

    // deliberately choose a distractor in trial 1
    let belief = session.current_belief().unwrap().clone();
    let cfg = session.current_config().unwrap().clone();
    let optimal = optimal_action_set(&belief, &cfg, tutor.cost_weight, tutor.tolerance);
    let offered: Vec<String> = session.offered().iter().map(ToString::to_string).collect();
    println!("\ntrial 1 offers {}", offered.join(", "));
    if let Some(wrong) = session.offered().iter().copied().find(|a| !optimal.contains(a)) {
        let fb = session.submit_choice(wrong)?;
        let shown: Vec<String> = fb.optimal_actions.iter().map(ToString::to_string).collect();
        println!(
            "chose {wrong}: correct {:?}, executed {}, wait {} ms, correct choices {}",
            fb.correct,
            fb.executed,
            fb.penalty_ms,
            shown.join(", ")
        );
    }

    let stats = run_agent(&mut session, AgentKind::MgpsFollower, 1)?;
    println!("\nfinished by the greedy agent: {} submissions, {}/{} correct", stats.submissions, stats.correct, stats.judged);
    let test_rr: Vec<f64> = session.results()[10..].iter().map(|r| r.rr_score).collect();
    println!("test-trial rr scores: {test_rr:.3?}");
    println!("{} events logged; last: {}", session.events().len(), serde_json::to_string(session.events().last().unwrap())?);
    Ok(())
}
