//! Normalized RR-score comparison of MGPS, random and PO-UCT on shared
//! instances.
//!
//! `cargo run --release --example benchmark [episodes] [policies]`
//!
//! The default (100 episodes, PO-UCT up to 100 simulations) takes seconds;
//! pass `500 mgps,random,pouct:10,pouct:100,pouct:1000` for the full table.

use mgps::benchmark::{parse_policies, run_benchmark, BenchmarkOptions};
use mgps::env::ProblemConfig;

fn main() -> mgps::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let policies = args.next().unwrap_or_else(|| "mgps,random,pouct:10,pouct:100".into());

    let config = ProblemConfig::financial_default();
    let report = run_benchmark(&config, &parse_policies(&policies)?, episodes, 7, &BenchmarkOptions::default())?;
    println!("{episodes} instances, random baseline mean rr {:.4}\n", report.baseline_mean);
    println!("{:<12} {:>18} {:>10} {:>14}", "policy", "normalized rr", "raw rr", "s/episode");
    for r in &report.rows {
        println!(
            "{:<12} {:>9.4} ± {:<6.4} {:>10.4} {:>14.6}",
            r.policy, r.mean_normalized_rr, r.ci95, r.mean_raw_rr, r.mean_runtime_s
        );
    }
    Ok(())
}
