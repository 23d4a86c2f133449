//! Rebuilding split probabilities from the Lévy measure of the tagged
//! fragment, and exact re-rooting tests.
//!
//! The re-rooting identity
//!
//! ```text
//! p_n(n1, …, nk) p_{n1}(1, n1−1) = p_n(n−n1+1, n1−1) p_{n−n1+1}(1, n2, …, nk)
//! ```
//!
//! holds for every law invariant under re-rooting at leaf 1. Together with
//! the seeds `p_n(1, n−1)`, which depend on `Λ` only, it determines every
//! `p_n` except `p_n(1, …, 1)`, which normalisation supplies.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, check_cap, Error, Result};
use crate::kernel::LevyKernel;
use crate::partition::{integer_partitions, set_partition_count, Caps, Composition};
use crate::split::{shape_distribution, SplitLaw};

/// Allowed `|Σ count · p − 1|` per level of a table.
pub const TABLE_TOLERANCE: f64 = 1e-9;

/// Largest `n_max` accepted by [`reconstruct_pn`].
pub const RECONSTRUCT_CAP: usize = 10;

/// Split probabilities `p_n(c)` for `2 ≤ n ≤ n_max`, keyed by the
/// nonincreasing block sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct PnTable {
    n_max: usize,
    values: BTreeMap<(usize, Vec<usize>), f64>,
}

impl PnTable {
    /// Builds a table from `(n, parts, p)` entries. Every split of every
    /// `n ≤ n_max` must be present and each level must sum to one.
    pub fn from_entries<I>(n_max: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Vec<usize>, f64)>,
    {
        let mut values = BTreeMap::new();
        for (n, mut parts, p) in entries {
            parts.sort_unstable_by(|a, b| b.cmp(a));
            if parts.len() < 2
                || parts.contains(&0)
                || parts.iter().sum::<usize>() != n
                || n > n_max
            {
                bail!(
                    Validation,
                    "table entry for n = {n} has bad parts {parts:?}"
                );
            }
            if !(0.0..=1.0 + TABLE_TOLERANCE).contains(&p) {
                bail!(
                    Validation,
                    "table entry p_{n}{parts:?} = {p} is not a probability"
                );
            }
            if values.insert((n, parts.clone()), p).is_some() {
                bail!(Validation, "duplicate table entry p_{n}{parts:?}");
            }
        }
        let table = PnTable { n_max, values };
        table.validate()?;
        Ok(table)
    }

    /// Tabulates a split law.
    pub fn from_law(sl: &SplitLaw, n_max: usize) -> Result<Self> {
        let mut values = BTreeMap::new();
        for n in 2..=n_max {
            for parts in splits_of(n) {
                let p = sl.conditioned_split(&Composition::new(parts.clone())?)?;
                values.insert((n, parts), p);
            }
        }
        Ok(PnTable { n_max, values })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `p_n(parts)` in any order of the parts.
    pub fn get(&self, n: usize, parts: &[usize]) -> Result<f64> {
        if n > self.n_max {
            return Err(Error::Capacity {
                what: "split table n",
                requested: n,
                cap: self.n_max,
            });
        }
        let mut key = parts.to_vec();
        key.sort_unstable_by(|a, b| b.cmp(a));
        match self.values.get(&(n, key)) {
            Some(&p) => Ok(p),
            None => bail!(Validation, "split table has no entry p_{n}{parts:?}"),
        }
    }

    /// Entries as `((n, parts), p)` in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&(usize, Vec<usize>), &f64)> {
        self.values.iter()
    }

    /// `Σ count(c) p_n(c) − 1` over the splits of `[n]`.
    pub fn normalization_residual(&self, n: usize) -> Result<f64> {
        let mut s = 0.0;
        for parts in splits_of(n) {
            s += set_partition_count(&parts) * self.get(n, &parts)?;
        }
        Ok(s - 1.0)
    }

    /// Checks completeness and normalisation of every level.
    pub fn validate(&self) -> Result<()> {
        for n in 2..=self.n_max {
            let r = self.normalization_residual(n)?;
            if libm::fabs(r) > TABLE_TOLERANCE {
                bail!(Validation, "split table level n = {n} sums to 1 + {r:e}");
            }
        }
        Ok(())
    }

    /// Multiplies each entry by `weight(n, parts)` and renormalises each level.
    pub fn reweighted(&self, weight: impl Fn(usize, &[usize]) -> f64) -> Result<Self> {
        let mut values = BTreeMap::new();
        for n in 2..=self.n_max {
            let mut level = Vec::new();
            let mut z = 0.0;
            for parts in splits_of(n) {
                let p = self.get(n, &parts)? * weight(n, &parts);
                z += set_partition_count(&parts) * p;
                level.push((parts, p));
            }
            if !(z > 0.0) || !z.is_finite() {
                bail!(Numeric, "reweighted level n = {n} has total mass {z}");
            }
            for (parts, p) in level {
                values.insert((n, parts), p / z);
            }
        }
        Ok(PnTable {
            n_max: self.n_max,
            values,
        })
    }

    /// Largest relative difference to another table over shared keys.
    pub fn max_relative_error(&self, other: &PnTable) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for ((n, parts), &p) in &self.values {
            let q = other.get(*n, parts)?;
            let scale = libm::fabs(q).max(f64::MIN_POSITIVE);
            let e = if p == q {
                0.0
            } else {
                libm::fabs(p - q) / scale
            };
            worst = worst.max(e);
        }
        Ok(worst)
    }
}

/// Nonincreasing block-size lists of `[n]` with at least two blocks.
fn splits_of(n: usize) -> Vec<Vec<usize>> {
    integer_partitions(n)
        .into_iter()
        .filter(|p| p.len() >= 2)
        .collect()
}

/// `p_n(1, n−1) = Φ(n−1:1) / ((n−1) Φ(n−1))`: the first bush off the spine
/// is exactly `{2}`.
pub fn seed_two_block(kernel: &LevyKernel, n: usize) -> Result<f64> {
    if n < 2 {
        bail!(Validation, "seed needs n >= 2");
    }
    if n == 2 {
        return Ok(1.0);
    }
    let p = kernel.first_bush_prob(n - 1, 1)? / (n - 1) as f64;
    if !p.is_finite() {
        bail!(Numeric, "non-finite seed p_{n}(1, {})", n - 1);
    }
    Ok(p)
}

/// `(p_3(1,2), p_3(1,1,1))`.
pub fn seed_three(kernel: &LevyKernel) -> Result<(f64, f64)> {
    let p12 = seed_two_block(kernel, 3)?;
    let p111 = 1.0 - 3.0 * p12;
    if !(-1e-9..=1.0).contains(&p111) {
        bail!(
            KernelInconsistency,
            "p_3(1,1,1) = {p111} is not a probability"
        );
    }
    Ok((p12, p111.max(0.0)))
}

/// Largest violation of the re-rooting identity over all `n ≤ n_max` and
/// every choice of the distinguished block `n1 ≥ 2`.
pub fn lemma15_residual(table: &PnTable) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 3..=table.n_max() {
        for parts in splits_of(n) {
            for (i, &n1) in parts.iter().enumerate() {
                if n1 < 2 || (i > 0 && parts[i - 1] == n1) {
                    continue;
                }
                let d = identity_gap(table, n, &parts, i)?;
                worst = worst.max(libm::fabs(d));
            }
        }
    }
    Ok(worst)
}

fn identity_gap(table: &PnTable, n: usize, parts: &[usize], i: usize) -> Result<f64> {
    let n1 = parts[i];
    let lhs = table.get(n, parts)? * seed_of(table, n1)?;
    let mut rest = vec![1];
    rest.extend(
        parts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &p)| p),
    );
    let rhs = table.get(n, &[n - n1 + 1, n1 - 1])? * table.get(n - n1 + 1, &rest)?;
    Ok(lhs - rhs)
}

/// `p_m(1, m−1)`, equal to 1 when `m = 1`.
fn seed_of(table: &PnTable, m: usize) -> Result<f64> {
    if m == 1 {
        Ok(1.0)
    } else {
        table.get(m, &[m - 1, 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionDiagnostics {
    /// Largest spread between the values that different choices of the
    /// distinguished block give for one entry.
    pub fill_order_discrepancy: f64,
    /// `max_n |Σ count · p − 1|` before `p_n(1, …, 1)` was filled in.
    pub largest_normalization_gap: f64,
    /// Smallest value of `p_n(1, …, 1)` before clamping at zero.
    pub min_all_singletons: f64,
}

/// Rebuilds `p_n` for `n ≤ n_max` from the kernel alone.
pub fn reconstruct_pn(kernel: &LevyKernel, n_max: usize) -> Result<PnTable> {
    Ok(reconstruct_pn_with_diagnostics(kernel, n_max)?.0)
}

pub fn reconstruct_pn_with_diagnostics(
    kernel: &LevyKernel,
    n_max: usize,
) -> Result<(PnTable, ReconstructionDiagnostics)> {
    check_cap("reconstruction n_max", n_max, RECONSTRUCT_CAP)?;
    let mut table = PnTable {
        n_max,
        values: BTreeMap::new(),
    };
    let mut diag = ReconstructionDiagnostics {
        fill_order_discrepancy: 0.0,
        largest_normalization_gap: 0.0,
        min_all_singletons: 1.0,
    };
    for n in 2..=n_max {
        // let `get` see level n while it is being filled
        table.n_max = n;
        let seed = seed_two_block(kernel, n)?;
        table.values.insert((n, vec![n - 1, 1]), seed);

        // two-block entries by increasing smaller part, then the rest
        let mut todo: Vec<Vec<usize>> = splits_of(n)
            .into_iter()
            .filter(|p| !(p.len() == 2 && p[1] == 1) && p[0] >= 2)
            .collect();
        todo.sort_by_key(|p| (p.len() > 2, smallest_big_part(p)));
        for parts in &todo {
            let i = parts
                .iter()
                .rposition(|&p| p == smallest_big_part(parts))
                .expect("a part >= 2");
            let p = fill_value(&table, n, parts, i)?;
            table.values.insert((n, parts.clone()), p);
        }

        let ones = vec![1; n];
        let mut rest = 0.0;
        for parts in splits_of(n) {
            if parts != ones {
                rest += set_partition_count(&parts) * table.get(n, &parts)?;
            }
        }
        let last = 1.0 - rest;
        diag.min_all_singletons = diag.min_all_singletons.min(last);
        if last < -1e-6 {
            bail!(
                KernelInconsistency,
                "p_{n}(1, …, 1) = {last} from normalisation; the kernel does not give a split law"
            );
        }
        table.values.insert((n, ones), last.max(0.0));

        for parts in &todo {
            let stored = table.get(n, parts)?;
            for (i, &n1) in parts.iter().enumerate() {
                if n1 >= 2 {
                    let alt = fill_value(&table, n, parts, i)?;
                    diag.fill_order_discrepancy =
                        diag.fill_order_discrepancy.max(libm::fabs(alt - stored));
                }
            }
        }
    }
    table.n_max = n_max;
    for n in 2..=n_max {
        diag.largest_normalization_gap = diag
            .largest_normalization_gap
            .max(libm::fabs(table.normalization_residual(n)?));
    }
    Ok((table, diag))
}

fn smallest_big_part(parts: &[usize]) -> usize {
    parts.iter().copied().filter(|&p| p >= 2).min().unwrap_or(0)
}

/// `p_n(n−n1+1, n1−1) p_{n−n1+1}(1, rest) / p_{n1}(1, n1−1)` with `n1 = parts[i]`.
fn fill_value(table: &PnTable, n: usize, parts: &[usize], i: usize) -> Result<f64> {
    let n1 = parts[i];
    let denom = seed_of(table, n1)?;
    if !(denom > 0.0) {
        bail!(KernelInconsistency, "p_{n1}(1, {}) vanishes", n1 - 1);
    }
    let mut rest = vec![1];
    rest.extend(
        parts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &p)| p),
    );
    let two = table.get(n, &[n - n1 + 1, n1 - 1])?;
    let lower = table.get(n - n1 + 1, &rest)?;
    Ok(two * lower / denom)
}

/// Total-variation distance between the tree law on `[n]` and its image
/// under re-rooting at leaf 1.
pub fn reroot_invariance_distance(sl: &SplitLaw, n: usize, caps: &Caps) -> Result<f64> {
    let law = shape_distribution(sl, n, caps)?;
    let mut tv = 0.0;
    for (t, p) in &law {
        let q = law.get(&t.reroot()?).copied().ok_or_else(|| {
            Error::Numeric(alloc::format!(
                "re-rooted tree of {t} is not a hierarchy of [n]"
            ))
        })?;
        tv += libm::fabs(p - q);
    }
    Ok(0.5 * tv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pd::{eprf_pdstar, total_rate, PdParams};

    fn comp(p: &[usize]) -> Composition {
        Composition::new(p.to_vec()).unwrap()
    }

    #[test]
    fn seeds() {
        let k = LevyKernel::PdStar(PdParams::stable(0.75).unwrap());
        assert_eq!(seed_two_block(&k, 2).unwrap(), 1.0);
        assert!((seed_two_block(&k, 3).unwrap() - 0.2).abs() < 1e-12);
        let (a, b) = seed_three(&k).unwrap();
        assert!((a - 0.2).abs() < 1e-12 && (b - 0.4).abs() < 1e-12);
        let (_, b) = seed_three(&LevyKernel::Brownian).unwrap();
        assert!(b.abs() < 1e-9);
        let a = 0.51;
        let (_, b) = seed_three(&LevyKernel::PdStar(PdParams::stable(a).unwrap())).unwrap();
        assert!((b - (2.0 * a - 1.0) / (2.0 - a)).abs() < 1e-12);
        assert!(b < 0.015);
    }

    #[test]
    fn seed_matches_closed_form_on_grid() {
        for a in [0.3, 0.6, 0.75, 0.9] {
            for th in [-1.5 * a, -a, -0.8 * a, 0.0, 1.0] {
                let p = PdParams::new(a, th).unwrap();
                let k = LevyKernel::PdStar(p);
                let mut prev = 1.0;
                for n in 2..=8 {
                    let s = seed_two_block(&k, n).unwrap();
                    let want =
                        eprf_pdstar(&p, &comp(&[1, n - 1])).unwrap() / total_rate(&p, n).unwrap();
                    assert!((s - want).abs() < 1e-9, "a={a} th={th} n={n}");
                    assert!(s > 0.0 && s <= prev + 1e-15);
                    prev = s;
                }
            }
        }
    }

    #[test]
    fn seed_from_density_quadrature() {
        let p = PdParams::stable(0.75).unwrap();
        let k = LevyKernel::PdStar(p).as_density();
        for n in 3..=6 {
            let want = seed_two_block(&LevyKernel::PdStar(p), n).unwrap();
            assert!((seed_two_block(&k, n).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn stable_reconstruction_matches_closed_form() {
        for a in [0.6, 0.75, 0.9] {
            let sl = SplitLaw::stable(a).unwrap();
            let direct = PnTable::from_law(&sl, 7).unwrap();
            let (rec, diag) = reconstruct_pn_with_diagnostics(&sl.kernel().unwrap(), 7).unwrap();
            assert!(rec.max_relative_error(&direct).unwrap() < 1e-8);
            assert!(diag.fill_order_discrepancy < 1e-9, "{diag:?}");
            assert!(lemma15_residual(&rec).unwrap() < 1e-10);
            rec.validate().unwrap();
        }
    }

    #[test]
    fn reconstruction_base_case() {
        let k = LevyKernel::PdStar(PdParams::stable(0.6).unwrap());
        let t = reconstruct_pn(&k, 3).unwrap();
        let (a, b) = seed_three(&k).unwrap();
        assert_eq!(t.get(3, &[1, 2]).unwrap(), a);
        assert_eq!(t.get(3, &[1, 1, 1]).unwrap(), b);
        assert!(reconstruct_pn(&k, 11).is_err());
    }

    #[test]
    fn brownian_reconstruction_is_binary() {
        let t = reconstruct_pn(&LevyKernel::Brownian, 8).unwrap();
        let direct = PnTable::from_law(&SplitLaw::Brownian, 8).unwrap();
        for ((n, parts), p) in t.entries() {
            let q = direct.get(*n, parts).unwrap();
            assert!((p - q).abs() < 1e-9, "{n} {parts:?}");
        }
    }

    #[test]
    fn rerooting_identity() {
        let stable = PnTable::from_law(&SplitLaw::stable(0.75).unwrap(), 6).unwrap();
        assert!(lemma15_residual(&stable).unwrap() <= 1e-10);
        let other = PnTable::from_law(&SplitLaw::pdstar(0.75, -0.8).unwrap(), 5).unwrap();
        assert!(lemma15_residual(&other).unwrap() > 1e-6);
    }

    #[test]
    fn table_validation() {
        assert!(PnTable::from_entries(2, [(2, vec![1, 1], 1.0)]).is_ok());
        assert!(PnTable::from_entries(2, [(2, vec![1, 1], 0.5)]).is_err());
        assert!(PnTable::from_entries(3, [(2, vec![1, 1], 1.0)]).is_err());
        assert!(PnTable::from_entries(2, [(2, vec![2], 1.0)]).is_err());
        let t = PnTable::from_law(&SplitLaw::stable(0.75).unwrap(), 5).unwrap();
        t.validate().unwrap();
        assert_eq!(t.get(3, &[1, 2]).unwrap(), t.get(3, &[2, 1]).unwrap());
        assert!(matches!(t.get(6, &[3, 3]), Err(Error::Capacity { .. })));
        let rebuilt =
            PnTable::from_entries(5, t.entries().map(|((n, c), p)| (*n, c.clone(), *p))).unwrap();
        assert_eq!(rebuilt, t);
    }

    #[test]
    fn reroot() {
        let caps = Caps::default();
        for sl in [
            SplitLaw::stable(0.6).unwrap(),
            SplitLaw::stable(0.75).unwrap(),
            SplitLaw::stable(0.9).unwrap(),
            SplitLaw::Brownian,
        ] {
            for n in 2..=5 {
                assert!(reroot_invariance_distance(&sl, n, &caps).unwrap() < 1e-10);
            }
        }
        let sl = SplitLaw::pdstar(0.75, -0.8).unwrap();
        assert!(reroot_invariance_distance(&sl, 3, &caps).unwrap() < 1e-12);
        assert!(reroot_invariance_distance(&sl, 4, &caps).unwrap() > 1e-6);
    }
}
