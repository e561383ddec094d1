//! One MGPS episode, step by step, and the discovered strategy's branching.
//!
//! `cargo run --release --example mgps_episode [seed]`

use mgps::env::{sample_instance, BeliefState, ProblemConfig};
use mgps::mgps::{run_mgps_episode, select_computation, DEFAULT_COST_WEIGHT};

fn main() -> mgps::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let config = ProblemConfig::financial_default();
    let instance = sample_instance(&config, seed);

    let rec = run_mgps_episode(&instance, &config, DEFAULT_COST_WEIGHT)?;
    println!("instance {seed}:");
    for (i, a) in rec.actions.iter().enumerate() {
        match rec.ratings.get(i) {
            Some(r) => println!("  {a:<14} -> rating {r}"),
            None => println!("  {a}"),
        }
    }
    println!(
        "chose project {} | reward {:.4} - cost {:.4} = rr {:.4}",
        rec.chosen_project,
        rec.realized_reward,
        rec.total_cost(),
        rec.rr_score
    );

    // what the policy does next after each possible first rating
    println!("\nstrategy after the first query:");
    let prior = BeliefState::prior(&config);
    let first = select_computation(&prior, &config, DEFAULT_COST_WEIGHT);
    let q = first.as_query().expect("informative prior");
    for rating in config.min_obs..=config.max_obs {
        let mut b = prior.clone();
        b.observe(q, rating as f64, config.experts[q.expert].reliability)?;
        println!(
            "  {first} = {rating} -> {}",
            select_computation(&b, &config, DEFAULT_COST_WEIGHT)
        );
    }
    Ok(())
}
