//! Myopic VOC of every query at the prior, and the tolerance-optimal set.
//!
//! `cargo run --example voc_table`

use mgps::env::{BeliefState, ProblemConfig};
use mgps::mgps::{optimal_action_set, select_computation, voc_table, DEFAULT_COST_WEIGHT};

fn main() {
    let config = ProblemConfig::financial_default();
    let belief = BeliefState::prior(&config);
    let mut table = voc_table(&belief, &config, DEFAULT_COST_WEIGHT);
    table.sort_by(|a, b| b.voc.total_cmp(&a.voc).then(a.action.cmp(&b.action)));

    println!("top queries at the prior (w = {}):", DEFAULT_COST_WEIGHT.get());
    for est in table.iter().take(8) {
        println!("  {:<14} gain {:.5}  voc {:.5}", est.action.to_string(), est.gain, est.voc);
    }
    println!("  ... {} queries in total", table.len());

    println!("\ngreedy action: {}", select_computation(&belief, &config, DEFAULT_COST_WEIGHT));
    let set = optimal_action_set(&belief, &config, DEFAULT_COST_WEIGHT, 0.001);
    let names: Vec<String> = set.iter().map(ToString::to_string).collect();
    println!("optimal set (t = 0.001): {}", names.join(", "));
}
