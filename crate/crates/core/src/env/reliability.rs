//! Expert reliability from a raw rating table, by comparing every expert
//! with the consensus of the other experts.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer ratings: one row per rated item (project × criterion), one column
/// per expert.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable {
    rows: Vec<Vec<i32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeviationWeighting {
    /// Each item is weighted by how often the expert gave that same rating.
    #[default]
    Occurrence,
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityOptions {
    pub weighting: DeviationWeighting,
    /// Lower bound on the estimated σ_e.
    pub floor: f64,
}

impl Default for ReliabilityOptions {
    fn default() -> Self {
        ReliabilityOptions {
            weighting: DeviationWeighting::Occurrence,
            floor: 0.1,
        }
    }
}

impl RatingTable {
    pub fn new(rows: Vec<Vec<i32>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Reliability("rows have differing numbers of experts".into()));
        }
        Ok(RatingTable { rows })
    }

    /// Reads a headerless or single-header CSV of integer cells.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<i32>, _> = rec.iter().map(str::parse).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(Error::Reliability(format!("row {}: {e}", i + 1)));
                }
            }
        }
        Self::new(rows)
    }

    pub fn n_items(&self) -> usize {
        self.rows.len()
    }

    pub fn n_experts(&self) -> usize {
        self.rows.first().map(Vec::len).unwrap_or(0)
    }
}

/// One σ_e per expert: the (optionally occurrence-weighted) root mean square
/// distance between the expert's rating and the mean rating of all other
/// experts on the same item, floored at `options.floor`.
pub fn estimate_expert_reliability(table: &RatingTable, options: ReliabilityOptions) -> Result<Vec<f64>> {
    let n_experts = table.n_experts();
    if n_experts < 2 {
        return Err(Error::Reliability(format!(
            "need at least 2 experts to compare against others, got {n_experts}"
        )));
    }
    if table.n_items() == 0 {
        return Err(Error::Reliability("rating table has no items".into()));
    }

    let mut out = Vec::with_capacity(n_experts);
    for e in 0..n_experts {
        let mut counts: HashMap<i32, usize> = HashMap::new();
        for row in &table.rows {
            *counts.entry(row[e]).or_default() += 1;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for row in &table.rows {
            let others: f64 = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != e)
                .map(|(_, r)| *r as f64)
                .sum::<f64>()
                / (n_experts - 1) as f64;
            let weight = match options.weighting {
                DeviationWeighting::Occurrence => counts[&row[e]] as f64,
                DeviationWeighting::Unweighted => 1.0,
            };
            let d = row[e] as f64 - others;
            num += weight * d * d;
            den += weight;
        }
        out.push((num / den).sqrt().max(options.floor));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let t = RatingTable::new(vec![vec![2, 4]]).unwrap();
        let s = estimate_expert_reliability(&t, ReliabilityOptions::default()).unwrap();
        assert_eq!(s, vec![2.0, 2.0]);
    }

    #[test]
    fn consensus_expert_hits_floor() {
        // expert 2 always equals the mean of experts 0 and 1
        let t = RatingTable::new(vec![vec![1, 3, 2], vec![4, 4, 4], vec![5, 3, 4]]).unwrap();
        let s = estimate_expert_reliability(&t, ReliabilityOptions::default()).unwrap();
        assert_eq!(s[2], 0.1);
        assert!(s[0] > 0.1);
    }

    #[test]
    fn single_expert_rejected() {
        let t = RatingTable::new(vec![vec![3], vec![4]]).unwrap();
        assert!(estimate_expert_reliability(&t, ReliabilityOptions::default()).is_err());
    }

    #[test]
    fn occurrence_weighting_differs_from_unweighted() {
        let t = RatingTable::new(vec![vec![1, 3, 3], vec![1, 4, 4], vec![5, 3, 2]]).unwrap();
        let w = estimate_expert_reliability(&t, ReliabilityOptions::default()).unwrap();
        let u = estimate_expert_reliability(
            &t,
            ReliabilityOptions {
                weighting: DeviationWeighting::Unweighted,
                floor: 0.1,
            },
        )
        .unwrap();
        // expert 0: deviations -2, -3, +2.5 with rating counts 2, 2, 1
        let expect_w = ((2.0 * 4.0 + 2.0 * 9.0 + 6.25) / 5.0f64).sqrt();
        let expect_u = ((4.0 + 9.0 + 6.25) / 3.0f64).sqrt();
        assert!((w[0] - expect_w).abs() < 1e-12);
        assert!((u[0] - expect_u).abs() < 1e-12);
    }

    #[test]
    fn csv_with_header() {
        let text = "e1,e2,e3\n1,2,3\n4, 4 ,5\n";
        let t = RatingTable::from_csv(text.as_bytes()).unwrap();
        assert_eq!(t.n_items(), 2);
        assert_eq!(t.n_experts(), 3);
        assert!(RatingTable::from_csv("1,2\n3,x\n".as_bytes()).is_err());
    }
}
