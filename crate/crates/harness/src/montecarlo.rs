//! Parallel sampling and the Monte Carlo checks.
//!
//! Sample `i` always uses `sample_stream(seed, i)`, so results are identical
//! for every worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;
use spinal_core::partition::Caps;
use spinal_core::pd::{crp_sample_partition, eprf_pdstar, poisson_stable_oracle, OracleOptions};
use spinal_core::rng::sample_stream;
use spinal_core::spinal::spinal_decompose;
use spinal_core::split::{sample_first_split, sample_tree, shape_distribution};
use spinal_core::{Composition, FragTree, Label, MassPartition, PdParams, SetPartition, SplitLaw};

use crate::checks::law_parameters;
use crate::report::{timed, CheckReport, Status};
use crate::stats::{goodness_of_fit, independence, ChiSquare, SIGNIFICANCE};
use crate::Result;

/// Runs `f(i)` for `i < samples` on `workers` threads (0: one per core) and
/// returns the results in index order.
pub fn run_indexed<T, F>(samples: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..samples as u64).into_par_iter().map(&f).collect())
}

pub fn sample_trees(
    sl: &SplitLaw,
    n: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<FragTree>> {
    run_indexed(samples, workers, |i| {
        Ok(sample_tree(sl, n, &mut sample_stream(seed, i))?)
    })
}

/// `PD(α, θ)` partitions of `[n]` by the restaurant process.
pub fn sample_pd_partitions(
    params: &PdParams,
    n: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<SetPartition>> {
    run_indexed(samples, workers, |i| {
        Ok(crp_sample_partition(
            params,
            n,
            &mut sample_stream(seed, i),
        )?)
    })
}

/// First splits of `[n]` under a split law.
pub fn sample_splits(
    sl: &SplitLaw,
    n: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<SetPartition>> {
    let labels: Vec<Label> = (1..=n as Label).collect();
    run_indexed(samples, workers, |i| {
        Ok(sample_first_split(
            sl,
            &labels,
            &mut sample_stream(seed, i),
        )?)
    })
}

fn counts<K: Ord>(items: impl IntoIterator<Item = K>) -> BTreeMap<K, u64> {
    let mut out = BTreeMap::new();
    for k in items {
        *out.entry(k).or_insert(0) += 1;
    }
    out
}

fn gof_status(t: &ChiSquare) -> Status {
    if t.is_degenerate() {
        Status::Inconclusive
    } else if t.p_value > SIGNIFICANCE {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Sampled tree shapes against the exact law.
pub fn shape_fit_check(
    sl: &SplitLaw,
    n: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<CheckReport> {
    let params = json!({"law": law_parameters(sl), "n": n, "samples": samples, "seed": seed});
    timed("shape-fit", params, SIGNIFICANCE, || {
        let exact = shape_distribution(sl, n, &Caps::default())?;
        let trees = sample_trees(sl, n, samples, seed, workers)?;
        let t = goodness_of_fit(&counts(trees), &exact);
        Ok((serde_json::to_value(&t).unwrap(), gof_status(&t)))
    })
}

/// Trees sampled on `[n]` and restricted to `[m]` against the exact law on `[m]`.
pub fn restriction_check(
    sl: &SplitLaw,
    n: usize,
    m: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<CheckReport> {
    let params =
        json!({"law": law_parameters(sl), "n": n, "m": m, "samples": samples, "seed": seed});
    timed("restriction", params, SIGNIFICANCE, || {
        let exact = shape_distribution(sl, m, &Caps::default())?;
        let subset: Vec<Label> = (1..=m as Label).collect();
        let trees = sample_trees(sl, n, samples, seed, workers)?;
        let reduced = trees
            .iter()
            .map(|t| t.reduce(&subset))
            .collect::<spinal_core::Result<Vec<_>>>()?;
        let t = goodness_of_fit(&counts(reduced), &exact);
        Ok((serde_json::to_value(&t).unwrap(), gof_status(&t)))
    })
}

/// First subtree, second subtree if it has three or more leaves, composition.
type Conditioned = (FragTree, Option<FragTree>, Composition);

/// Fewest conditioned samples for a conclusive independence check.
pub const MIN_CONDITIONED: usize = 200;

/// Given the spinal partition, the subtrees hanging off the spine are
/// independent copies of the tree law on their label sets.
///
/// Samples are conditioned on the most frequent fine-block size profile that
/// has a subtree with at least three leaves, preferring profiles with two such
/// subtrees when one has [`MIN_CONDITIONED`] samples. The largest such subtree (ties:
/// smallest label) has its shape standardised to `[k]` and is tested
/// * against the exact law on `[k]`,
/// * for independence from the second largest subtree when that one has
///   three or more leaves too, and otherwise from the spinal composition.
pub fn subtree_independence_check(
    sl: &SplitLaw,
    n: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<CheckReport> {
    if n > 8 {
        return Err(spinal_core::Error::Capacity {
            what: "independence n",
            requested: n,
            cap: 8,
        }
        .into());
    }
    let params = json!({"law": law_parameters(sl), "n": n, "samples": samples, "seed": seed});
    timed("independence", params, SIGNIFICANCE, || {
        let trees = sample_trees(sl, n, samples, seed, workers)?;
        let mut by_profile: BTreeMap<Vec<usize>, Vec<Conditioned>> = BTreeMap::new();
        for t in &trees {
            let d = spinal_decompose(t)?;
            let mut subs: Vec<&FragTree> = d.subtrees[..d.subtrees.len() - 1]
                .iter()
                .flatten()
                .collect();
            subs.sort_by(|a, b| b.n().cmp(&a.n()).then(a.block()[0].cmp(&b.block()[0])));
            if subs.is_empty() || subs[0].n() < 3 {
                continue;
            }
            let profile: Vec<usize> = subs.iter().map(|s| s.n()).collect();
            let second = subs.get(1).filter(|s| s.n() >= 3).map(|s| s.standardize());
            by_profile.entry(profile).or_default().push((
                subs[0].standardize(),
                second,
                d.composition(),
            ));
        }
        // prefer a profile with two testable subtrees when it has enough samples
        let paired = |p: &Vec<usize>| p.len() > 1 && p[1] >= 3;
        let best = |ok: &dyn Fn(&Vec<usize>, usize) -> bool| {
            by_profile
                .iter()
                .filter(|(p, r)| ok(p, r.len()))
                .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
                .map(|(p, _)| p.clone())
        };
        let chosen =
            best(&|p, len| paired(p) && len >= MIN_CONDITIONED).or_else(|| best(&|_, _| true));
        let Some((profile, rows)) = chosen.and_then(|p| by_profile.remove_entry(&p)) else {
            return Ok((
                json!({"vacuous": true, "reason": "no subtree with three or more leaves"}),
                Status::Inconclusive,
            ));
        };
        let caps = Caps::default();
        let first_law = shape_distribution(sl, profile[0], &caps)?;
        let marginal = goodness_of_fit(&counts(rows.iter().map(|r| r.0.clone())), &first_law);
        let mut tests = vec![("marginal-first", marginal)];
        let paired_with;
        if rows[0].1.is_some() {
            paired_with = "second-subtree";
            let second_law = shape_distribution(sl, profile[1], &caps)?;
            tests.push((
                "marginal-second",
                goodness_of_fit(
                    &counts(rows.iter().map(|r| r.1.clone().unwrap())),
                    &second_law,
                ),
            ));
            let pairs: Vec<_> = rows
                .iter()
                .map(|r| (r.0.clone(), r.1.clone().unwrap()))
                .collect();
            tests.push(("independence", independence(&pairs)));
        } else {
            paired_with = "spinal-composition";
            let pairs: Vec<_> = rows.iter().map(|r| (r.0.clone(), r.2.clone())).collect();
            tests.push(("independence", independence(&pairs)));
        }
        let min_p = tests.iter().map(|t| t.1.p_value).fold(1.0, f64::min);
        let status = if rows.len() < MIN_CONDITIONED || tests.iter().any(|t| t.1.is_degenerate()) {
            Status::Inconclusive
        } else if min_p > SIGNIFICANCE {
            Status::Pass
        } else {
            Status::Fail
        };
        let detail: serde_json::Map<String, serde_json::Value> = tests
            .iter()
            .map(|(k, t)| (k.to_string(), serde_json::to_value(t).unwrap()))
            .collect();
        Ok((
            json!({"min_p_value": min_p, "profile": profile, "conditioned": rows.len(), "paired_with": paired_with, "tests": detail}),
            status,
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OracleSummary {
    pub estimate: f64,
    pub std_error: f64,
    pub exact: f64,
    pub z: f64,
    pub draws: usize,
    pub truncation: f64,
    pub mean_jumps: f64,
}

/// Number of independent streams an oracle run is split into.
pub const ORACLE_CHUNKS: usize = 64;

/// Estimates `p(c)` for `c = (1,1)` or `(2,1)` from Poisson–Kingman jumps of
/// the stable subordinator and compares it with the closed form.
pub fn oracle_estimate(
    alpha: f64,
    theta: f64,
    c: &[usize],
    draws: usize,
    seed: u64,
    workers: usize,
    opts: OracleOptions,
) -> Result<OracleSummary> {
    let f: fn(&MassPartition) -> f64 = match c {
        [1, 1] => |s| 1.0 - s.freqs().iter().map(|x| x * x).sum::<f64>(),
        [2, 1] | [1, 2] => |s| s.freqs().iter().map(|x| x * x * (1.0 - x)).sum(),
        _ => {
            return Err(crate::Error::Usage(format!(
                "the oracle covers (1,1) and (2,1), not {c:?}"
            )))
        }
    };
    let exact = eprf_pdstar(
        &PdParams::new(alpha, theta)?,
        &Composition::new(c.to_vec())?,
    )?;
    let per = draws.div_ceil(ORACLE_CHUNKS);
    let parts = run_indexed(ORACLE_CHUNKS, workers, |i| {
        let d = per.min(draws.saturating_sub(i as usize * per));
        if d == 0 {
            return Ok(None);
        }
        Ok(Some(poisson_stable_oracle(
            alpha,
            theta,
            f,
            &mut sample_stream(seed, i),
            d,
            opts,
        )?))
    })?;
    // pooled mean and variance
    let (mut n, mut mean, mut m2, mut jumps) = (0.0, 0.0, 0.0, 0.0);
    for e in parts.into_iter().flatten() {
        let nb = e.draws as f64;
        let m2b = e.std_error * e.std_error * nb * (nb - 1.0);
        let delta = e.mean - mean;
        let tot = n + nb;
        mean += delta * nb / tot;
        m2 += m2b + delta * delta * n * nb / tot;
        jumps += e.mean_jumps * nb;
        n = tot;
    }
    let std_error = (m2 / (n - 1.0) / n).sqrt();
    Ok(OracleSummary {
        estimate: mean,
        std_error,
        exact,
        z: (mean - exact) / std_error,
        draws,
        truncation: opts.truncation,
        mean_jumps: jumps / n,
    })
}

pub fn oracle_check(
    alpha: f64,
    theta: f64,
    c: &[usize],
    draws: usize,
    seed: u64,
    workers: usize,
) -> Result<CheckReport> {
    let params =
        json!({"alpha": alpha, "theta": theta, "composition": c, "draws": draws, "seed": seed});
    timed("oracle", params, 3.0, || {
        let s = oracle_estimate(
            alpha,
            theta,
            c,
            draws,
            seed,
            workers,
            OracleOptions::default(),
        )?;
        let status = if s.z.abs() <= 3.0 {
            Status::Pass
        } else {
            Status::Fail
        };
        Ok((serde_json::to_value(s).unwrap(), status))
    })
}
