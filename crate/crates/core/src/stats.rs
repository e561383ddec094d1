//! Small numeric helpers shared by the benchmark and analysis code.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 − Φ(z)`, accurate in the upper tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn standard_error(xs: &[f64]) -> f64 {
    sample_std(xs) / (xs.len() as f64).sqrt()
}

/// Half-width of the Gaussian 95% confidence interval of the mean.
pub fn ci95_half_width(xs: &[f64]) -> f64 {
    1.96 * standard_error(xs)
}

/// Effect size `(mean_a − mean_b) / pooled std` with (n − 1)-weighted pooling.
pub fn cohen_d(a: &[f64], b: &[f64]) -> Result<f64> {
    for g in [a, b] {
        if g.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: g.len() });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (sample_std(a), sample_std(b));
    let pooled = (((na - 1.0) * sa * sa + (nb - 1.0) * sb * sb) / (na + nb - 2.0)).sqrt();
    if !(pooled > 0.0) {
        return Err(Error::ZeroStd);
    }
    Ok((mean(a) - mean(b)) / pooled)
}

/// Pearson chi-square independence test on an r × c contingency table.
/// Rows or columns with zero total are dropped. Returns `(statistic, dof, p)`.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<(f64, usize, f64)> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    let n_cols = table.first().map(Vec::len).unwrap_or(0);
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    let cols: Vec<usize> = (0..n_cols)
        .filter(|&j| rows.iter().map(|r| r[j]).sum::<u64>() > 0)
        .collect();
    if rows.len() < 2 || cols.len() < 2 {
        return Err(Error::Domain("contingency table needs two non-empty rows and columns".into()));
    }
    let total: f64 = rows.iter().flat_map(|r| cols.iter().map(|&j| r[j] as f64)).sum();
    let row_sums: Vec<f64> = rows.iter().map(|r| cols.iter().map(|&j| r[j] as f64).sum()).collect();
    let col_sums: Vec<f64> = cols
        .iter()
        .map(|&j| rows.iter().map(|r| r[j] as f64).sum())
        .collect();
    let mut stat = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (k, &j) in cols.iter().enumerate() {
            let expected = row_sums[i] * col_sums[k] / total;
            stat += (r[j] as f64 - expected).powi(2) / expected;
        }
    }
    let dof = (rows.len() - 1) * (cols.len() - 1);
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok((stat, dof, 1.0 - dist.cdf(stat)))
}
