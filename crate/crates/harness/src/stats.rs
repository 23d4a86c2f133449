//! Chi-square tests.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Significance level used by every Monte Carlo check.
pub const SIGNIFICANCE: f64 = 0.001;

/// Categories whose expected count is below this go to a shared bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub bins: usize,
    pub total: u64,
}

impl ChiSquare {
    /// A test with no degrees of freedom says nothing.
    pub fn is_degenerate(&self) -> bool {
        self.df == 0
    }
}

fn p_value(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    (1.0 - dist.cdf(statistic)).max(0.0)
}

/// Goodness of fit of `observed` counts to the law `expected`. Any observed
/// outcome of probability zero rejects outright.
pub fn goodness_of_fit<K: Ord>(
    observed: &BTreeMap<K, u64>,
    expected: &BTreeMap<K, f64>,
) -> ChiSquare {
    let total: u64 = observed.values().sum();
    let n = total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut other_obs, mut other_exp) = (0.0, 0.0);
    for (k, &p) in expected {
        let o = observed.get(k).copied().unwrap_or(0) as f64;
        let e = p * n;
        if e < MIN_EXPECTED {
            other_obs += o;
            other_exp += e;
        } else {
            bins.push((o, e));
        }
    }
    let impossible = observed
        .iter()
        .any(|(k, &o)| o > 0 && expected.get(k).is_none_or(|&p| p <= 0.0));
    if other_obs > 0.0 || other_exp > 0.0 {
        bins.push((other_obs, other_exp));
    }
    let mut statistic = 0.0;
    for &(o, e) in &bins {
        if e > 0.0 {
            statistic += (o - e) * (o - e) / e;
        } else if o > 0.0 {
            statistic = f64::INFINITY;
        }
    }
    if impossible {
        statistic = f64::INFINITY;
    }
    let df = bins.len().saturating_sub(1);
    ChiSquare {
        statistic,
        df,
        p_value: if statistic.is_infinite() {
            0.0
        } else {
            p_value(statistic, df)
        },
        bins: bins.len(),
        total,
    }
}

/// Pearson independence test on paired observations. Rare values of either
/// variable are merged before the table is formed.
pub fn independence<A: Ord + Clone, B: Ord + Clone>(pairs: &[(A, B)]) -> ChiSquare {
    let rows = categories(pairs.iter().map(|(a, _)| a.clone()));
    let cols = categories(pairs.iter().map(|(_, b)| b.clone()));
    let nr = rows.values().max().map_or(0, |&i| i + 1);
    let nc = cols.values().max().map_or(0, |&i| i + 1);
    let mut table = vec![vec![0.0; nc]; nr];
    for (a, b) in pairs {
        table[rows[a]][cols[b]] += 1.0;
    }
    let total = pairs.len() as f64;
    let row_sum: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sum: Vec<f64> = (0..nc).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut statistic = 0.0;
    for i in 0..nr {
        for j in 0..nc {
            let e = row_sum[i] * col_sum[j] / total;
            if e > 0.0 {
                statistic += (table[i][j] - e) * (table[i][j] - e) / e;
            }
        }
    }
    let df = nr.saturating_sub(1) * nc.saturating_sub(1);
    ChiSquare {
        statistic,
        df,
        p_value: p_value(statistic, df),
        bins: nr * nc,
        total: pairs.len() as u64,
    }
}

/// Index per value; values seen fewer than `4 · MIN_EXPECTED` times share
/// the last index.
fn categories<T: Ord>(values: impl Iterator<Item = T>) -> BTreeMap<T, usize> {
    let mut counts: BTreeMap<T, u64> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    let threshold = (4.0 * MIN_EXPECTED) as u64;
    let frequent = counts.values().filter(|&&c| c >= threshold).count();
    let rare_total: u64 = counts.values().filter(|&&c| c < threshold).sum();
    let rare_index = frequent;
    let mut next = 0;
    let mut out = BTreeMap::new();
    for (v, c) in counts {
        if c >= threshold {
            out.insert(v, next);
            next += 1;
        } else {
            out.insert(v, rare_index);
        }
    }
    if rare_total > 0 && rare_total < threshold && frequent > 0 {
        // too thin to stand alone: join the last frequent category
        for i in out.values_mut() {
            if *i == rare_index {
                *i = frequent - 1;
            }
        }
    }
    out
}
