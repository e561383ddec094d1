use mgps::env::{BeliefState, MetaAction, ProblemConfig};
use mgps::mgps::{optimal_action_set, select_computation};
use mgps::tutor::{
    canonical_schedule, run_agent, AgentKind, Condition, Event, Focus, Phase, Session, TutorConfig, N_TRAINING_TRIALS,
    N_TRIALS,
};

fn session(condition: Condition, seed: u64) -> Session {
    Session::new(format!("s{seed}"), condition, seed, ProblemConfig::financial_default(), TutorConfig::default())
        .unwrap()
}

fn greedy(s: &Session) -> MetaAction {
    select_computation(s.current_belief().unwrap(), s.current_config().unwrap(), s.tutor_config().cost_weight)
}

fn optimal_now(s: &Session) -> Vec<MetaAction> {
    let t = s.tutor_config();
    optimal_action_set(s.current_belief().unwrap(), s.current_config().unwrap(), t.cost_weight, t.tolerance)
}

/// Follows the greedy action until the session reaches `trial`.
fn follow_until(s: &mut Session, trial: usize) {
    while s.cursor() < trial {
        match greedy(s) {
            MetaAction::Terminate => {
                assert!(s.submit_termination().unwrap().accepted);
            }
            a => {
                s.submit_choice(a).unwrap();
            }
        }
    }
}

#[test]
fn schedule_shape() {
    let s = canonical_schedule();
    assert_eq!(s.len(), N_TRIALS);
    assert_eq!(s[0].choice_count, Some(1));
    for t in &s[..7] {
        assert_eq!(t.n_projects, 2);
    }
    for t in &s[7..10] {
        assert_eq!((t.n_projects, t.choice_count), (5, Some(9)));
    }
    for t in &s[N_TRAINING_TRIALS..] {
        assert_eq!((t.phase, t.n_projects, t.focus), (Phase::Test, 5, Focus::FullFreeChoice));
    }
    let counts: Vec<usize> = s[..N_TRAINING_TRIALS].iter().map(|t| t.choice_count.unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn first_trial_offers_only_the_greedy_action() {
    for seed in 0..20 {
        let s = session(Condition::MgpsTutor, seed);
        assert_eq!(s.offered(), &[greedy(&s)]);
    }
}

#[test]
fn same_seed_same_session() {
    let mut a = session(Condition::DummyTutor, 5);
    let mut b = session(Condition::DummyTutor, 5);
    run_agent(&mut a, AgentKind::UniformRandom, 1).unwrap();
    run_agent(&mut b, AgentKind::UniformRandom, 1).unwrap();
    assert_eq!(a.results(), b.results());
    let strip = |s: &Session| s.events().iter().map(|e| (e.seq, e.trial, e.event.clone())).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn greedy_action_is_always_offered() {
    let mut checked = 0;
    for seed in 0..100 {
        let mut s = session(Condition::NoTutor, seed);
        run_agent(&mut s, AgentKind::UniformRandom, seed).unwrap();
        for e in s.events() {
            if let Event::ChoiceOffered { phase: Phase::Training, actions, mgps_action, .. } = &e.event {
                assert!(actions.contains(mgps_action));
                checked += 1;
            }
        }
    }
    assert!(checked >= 1000);
}

#[test]
fn fresh_log_starts_with_creation() {
    let s = session(Condition::NoTutor, 3);
    let kinds: Vec<&str> = s.events().iter().map(|e| e.event.kind()).collect();
    assert_eq!(kinds[0], "session_created");
    assert!(kinds.iter().all(|k| *k == "session_created" || *k == "choice_offered"));
}

#[test]
fn full_session_selects_twenty_projects() {
    for condition in Condition::ALL {
        let mut s = session(condition, 17);
        run_agent(&mut s, AgentKind::MgpsFollower, 0).unwrap();
        assert!(s.is_complete());
        let selected = s.events().iter().filter(|e| e.event.kind() == "project_selected").count();
        assert_eq!(selected, N_TRIALS);
        assert!(s.results().iter().all(|r| r.queries <= 5));
    }
}

#[test]
fn trial_rr_is_reward_minus_fees() {
    let mut s = session(Condition::NoTutor, 8);
    run_agent(&mut s, AgentKind::UniformRandom, 8).unwrap();
    for e in s.events() {
        if let Event::ProjectSelected { realized_reward, rr_score, queries, .. } = e.event {
            assert!((rr_score - (realized_reward - 0.002 * queries as f64)).abs() < 1e-12);
        }
    }
}

#[test]
fn greedy_follower_is_always_correct() {
    for seed in 0..20 {
        let mut s = session(Condition::MgpsTutor, seed);
        let stats = run_agent(&mut s, AgentKind::MgpsFollower, seed).unwrap();
        assert!(stats.judged > 0);
        assert_eq!(stats.correct, stats.judged);
    }
}

#[test]
fn feedback_is_optimal_set_membership() {
    for seed in 0..10 {
        let mut s = session(Condition::MgpsTutor, seed);
        let mut n = 0;
        while s.cursor() < N_TRAINING_TRIALS {
            let optimal = optimal_now(&s);
            let offered = s.offered().to_vec();
            let pick = offered[n % offered.len()];
            n += 1;
            let fb = match pick {
                MetaAction::Terminate => s.submit_termination().unwrap().feedback,
                a => s.submit_choice(a).unwrap(),
            };
            assert_eq!(fb.correct, Some(optimal.contains(&pick)));
            assert_eq!(fb.penalty_ms > 0, fb.correct == Some(false));
            // A wrong pick is retried with the greedy action.
            if fb.correct == Some(false) {
                match greedy(&s) {
                    MetaAction::Terminate => {
                        s.submit_termination().unwrap();
                    }
                    a => {
                        s.submit_choice(a).unwrap();
                    }
                }
            }
        }
    }
}

#[test]
fn dominated_choice_is_rejected_with_the_optimal_set() {
    let mut found = false;
    for seed in 0..20 {
        let mut s = session(Condition::MgpsTutor, seed);
        follow_until(&mut s, 7);
        let optimal = optimal_now(&s);
        let Some(&bad) = s.offered().iter().find(|a| !optimal.contains(a)) else {
            continue;
        };
        let before = s.current_belief().unwrap().digest();
        let fb = s.submit_choice(bad).unwrap();
        assert_eq!(fb.correct, Some(false));
        assert!(!fb.executed);
        assert_eq!(fb.penalty_ms, 4000);
        assert_eq!(fb.optimal_actions, optimal);
        assert_eq!(s.current_belief().unwrap().digest(), before);

        let good = greedy(&s);
        let fb = s.submit_choice(good).unwrap();
        assert_eq!((fb.correct, fb.penalty_ms), (Some(true), 0));
        found = true;
        break;
    }
    assert!(found, "no session offered a suboptimal action");
}

#[test]
fn termination_when_nothing_is_worth_asking() {
    let config = ProblemConfig::financial_default().with_uniform_cost(10.0);
    let mut s = Session::new("t", Condition::MgpsTutor, 1, config, TutorConfig::default()).unwrap();
    assert_eq!(s.offered(), &[MetaAction::Terminate]);
    let out = s.submit_termination().unwrap();
    assert!(out.accepted);
    assert_eq!(out.feedback.correct, Some(true));
    assert_eq!(out.feedback.penalty_ms, 0);
    assert_eq!(s.cursor(), 1);
}

#[test]
fn early_termination_is_rejected_in_training() {
    let mut s = session(Condition::MgpsTutor, 4);
    follow_until(&mut s, 7);
    assert_ne!(greedy(&s), MetaAction::Terminate);
    let out = s.submit_termination().unwrap();
    assert!(!out.accepted && out.result.is_none());
    assert_eq!(out.feedback.correct, Some(false));
    assert_eq!(s.cursor(), 7);
}

#[test]
fn test_trial_accepts_termination_after_budget() {
    let mut s = session(Condition::MgpsTutor, 6);
    follow_until(&mut s, N_TRAINING_TRIALS);
    for _ in 0..5 {
        let q = *s.offered().iter().find(|a| a.as_query().is_some()).unwrap();
        let fb = s.submit_choice(q).unwrap();
        assert_eq!(fb.correct, None);
    }
    assert_eq!(s.offered(), &[MetaAction::Terminate]);
    let out = s.submit_termination().unwrap();
    assert!(out.accepted);
    assert_eq!(out.result.unwrap().queries, 5);
}

#[test]
fn dummy_tutor_executes_everything() {
    let mut s = session(Condition::DummyTutor, 2);
    let mut wrong = 0;
    while s.cursor() < N_TRAINING_TRIALS {
        let a = *s.offered().last().unwrap();
        let used = s.current_belief().unwrap().queries_used();
        match a {
            MetaAction::Terminate => {
                let out = s.submit_termination().unwrap();
                assert!(out.accepted);
            }
            q => {
                let fb = s.submit_choice(q).unwrap();
                assert!(fb.executed);
                assert!(fb.correct.is_some());
                if fb.correct == Some(false) {
                    wrong += 1;
                    assert_eq!(fb.penalty_ms, 4000);
                }
                assert_eq!(s.current_belief().map(BeliefState::queries_used), Some(used + 1));
            }
        }
    }
    assert!(wrong > 0);
}

#[test]
fn no_tutor_gives_no_feedback() {
    let mut s = session(Condition::NoTutor, 2);
    let stats = run_agent(&mut s, AgentKind::UniformRandom, 2).unwrap();
    assert_eq!(stats.judged, 0);
    assert!(s.events().iter().all(|e| e.event.kind() != "feedback"));
}

#[test]
fn terminate_is_not_a_choice() {
    let config = ProblemConfig::financial_default().with_uniform_cost(10.0);
    let mut s = Session::new("t", Condition::NoTutor, 1, config, TutorConfig::default()).unwrap();
    assert!(matches!(s.submit_choice(MetaAction::Terminate), Err(mgps::Error::Protocol(_))));
}

#[test]
fn completed_session_rejects_requests() {
    let mut s = session(Condition::NoTutor, 1);
    run_agent(&mut s, AgentKind::MgpsFollower, 0).unwrap();
    assert!(matches!(s.submit_termination(), Err(mgps::Error::Protocol(_))));
}

#[test]
fn timestamps_and_sequence_are_monotone() {
    let mut s = session(Condition::MgpsTutor, 12);
    run_agent(&mut s, AgentKind::UniformRandom, 12).unwrap();
    for (i, w) in s.events().windows(2).enumerate() {
        assert_eq!(w[0].seq, i as u64);
        assert_eq!(w[1].seq, w[0].seq + 1);
        assert!(w[0].timestamp_ms <= w[1].timestamp_ms);
    }
}
