//! Conjugate Gaussian belief updates from expert ratings.
//!
//! `cargo run --example belief_update`

use mgps::env::{posterior_update, sample_instance, step, BeliefState, MetaAction, ProblemConfig};

fn main() -> mgps::Result<()> {
    // a single update by hand: prior N(3.4, 1.5²), rating 5 from an expert with σ_e = 0.9
    let (mu, sigma) = posterior_update(3.4, 1.5, 5.0, 0.9)?;
    println!("prior N(3.40, 1.50) + rating 5 (σ_e 0.9) -> N({mu:.3}, {sigma:.3})");

    let config = ProblemConfig::financial_default();
    let instance = sample_instance(&config, 42);
    let mut belief = BeliefState::prior(&config);
    let c5 = config.top_criterion();
    println!(
        "\nproject 0, criterion {}: true score {:.2}",
        c5,
        instance.true_score(0, c5)
    );
    for expert in config.experts_by_reliability() {
        let out = step(&mut belief, &instance, MetaAction::query(0, c5, expert), &config)?;
        let cell = belief.cell(0, c5);
        println!(
            "  expert {} (σ_e {:.1}) rates {} -> belief N({:.3}, {:.3})",
            expert,
            config.experts[expert].reliability,
            out.rating.unwrap(),
            cell.mu,
            cell.sigma
        );
        if belief.queries_used() == config.budget {
            break;
        }
    }
    Ok(())
}
