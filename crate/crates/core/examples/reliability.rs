//! Building an environment from a raw rating table: expert noise, per
//! criterion priors, and the consultation cost on the reward scale.
//!
//! `cargo run --example reliability [ratings.csv]`
//!
//! The CSV has one column per expert and one row per (project, criterion)
//! item, rows grouped by project. The shipped table has 5 projects × 6 criteria.

use std::fs::File;

use mgps::env::{
    derive_cost_lambda, estimate_expert_reliability, DeviationWeighting, RatingTable, ReliabilityOptions,
};
use mgps::stats::{mean, sample_std};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example_ratings.csv").into());
    let table = RatingTable::from_csv(File::open(&path)?)?;
    println!("{} items rated by {} experts", table.n_items(), table.n_experts());

    let weighted = estimate_expert_reliability(&table, ReliabilityOptions::default())?;
    let unweighted = estimate_expert_reliability(
        &table,
        ReliabilityOptions {
            weighting: DeviationWeighting::Unweighted,
            ..ReliabilityOptions::default()
        },
    )?;
    println!("\nexpert  σ_e (occurrence-weighted)  σ_e (unweighted)");
    for e in 0..table.n_experts() {
        println!("  {e}     {:>10.3}              {:>8.3}", weighted[e], unweighted[e]);
    }

    // priors: mean and spread of all ratings per criterion
    let rows: Vec<Vec<i32>> = csv::Reader::from_path(&path)?
        .records()
        .map(|r| r.map(|r| r.iter().map(|x| x.trim().parse().unwrap_or(0)).collect()))
        .collect::<Result<_, _>>()?;
    let n_criteria = 6;
    println!("\ncriterion  mu0    sigma0");
    for c in 0..n_criteria {
        let vals: Vec<f64> = rows
            .iter()
            .skip(c)
            .step_by(n_criteria)
            .flatten()
            .map(|&r| r as f64)
            .collect();
        println!("  {c}          {:.2}   {:.2}", mean(&vals), sample_std(&vals));
    }

    // $5,000 per consultation, $10M at stake, expected termination reward 3.4
    let lambda = derive_cost_lambda(5_000.0, 10_000_000.0, 3.4)?;
    println!("\nλ = {lambda:.4} (the shipped config uses 0.002)");
    Ok(())
}
