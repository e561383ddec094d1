//! Grid search for the MGPS cost weight.
//!
//! `cargo run --release --example tune_cost_weight`

use mgps::env::ProblemConfig;
use mgps::mgps::{cost_weight_grid, tune_cost_weight, DEFAULT_COST_WEIGHT};

fn main() -> mgps::Result<()> {
    let config = ProblemConfig::financial_default();
    let report = tune_cost_weight(&config, &cost_weight_grid(0.1)?, 1000, 7)?;
    for c in &report.candidates {
        let mark = if c.cost_weight == report.cost_weight.get() { " <-" } else { "" };
        println!("w = {:.1}  mean rr {:.6}{mark}", c.cost_weight, c.mean_rr);
    }
    println!(
        "\ntuned w = {} (shipped default {})",
        report.cost_weight.get(),
        DEFAULT_COST_WEIGHT.get()
    );
    Ok(())
}
