//! PO-UCT planning: one search tree at the prior, then full episodes at
//! several simulation budgets.
//!
//! `cargo run --release --example pouct_episode`

use std::time::Instant;

use mgps::env::{derive_seed, sample_instance, BeliefState, ProblemConfig};
use mgps::pouct::{pouct_search, run_pouct_episode, PouctConfig};
use mgps::stats::mean;

fn main() -> mgps::Result<()> {
    let config = ProblemConfig::financial_default();
    let params = PouctConfig::with_simulations(1000);

    let tree = pouct_search(&BeliefState::prior(&config), &config, &params, 11);
    let root = tree.root();
    let mut children: Vec<_> = root.actions.iter().collect();
    children.sort_by_key(|a| std::cmp::Reverse(a.visits));
    println!("root after 1000 simulations ({} nodes):", tree.nodes.len());
    for stats in children.iter().take(5) {
        println!(
            "  {:<14} visits {:>4}  mean {:.4}",
            stats.action.to_string(),
            stats.visits,
            stats.mean()
        );
    }
    println!("best action: {}", tree.best_action());

    println!("\nepisodes on 20 instances:");
    for sims in [10, 100, 1000] {
        let params = PouctConfig::with_simulations(sims);
        let start = Instant::now();
        let mut rr = Vec::new();
        for i in 0..20 {
            let inst = sample_instance(&config, derive_seed(5, i));
            rr.push(run_pouct_episode(&inst, &config, &params, derive_seed(6, i))?.rr_score);
        }
        println!(
            "  pouct:{sims:<5} mean rr {:.4}  ({:.3} s/episode)",
            mean(&rr),
            start.elapsed().as_secs_f64() / 20.0
        );
    }
    Ok(())
}
