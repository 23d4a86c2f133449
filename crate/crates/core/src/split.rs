//! Markov branching split laws and the exact/sampled laws of the trees they
//! generate.
//!
//! `p_n(c)` is the probability that the first split of an `n`-block produces
//! a particular partition with block sizes `c` (`k ≥ 2`). A tree's
//! probability is the product of `p_{#B}` over its internal vertices `B`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Error, Result};
use crate::kernel::{brownian_split_rate, LevyKernel};
use crate::partition::{integer_partitions, set_partition_count, Caps, Composition, SetPartition};
use crate::pd::{self, crp_sample_on, PdParams};
use crate::reconstruct::PnTable;
use crate::special::binomial;
use crate::tree::{enumerate_hierarchies, FragTree};
use crate::Label;

#[derive(Debug, Clone)]
pub enum SplitLaw {
    /// Dislocation measure `PD*(α, θ)`.
    PdStar(PdParams),
    /// Binary Brownian dislocation measure.
    Brownian,
    /// Explicit table of `p_n` values.
    Table(PnTable),
}

/// The common law `ν̂` by which a split measure shatters the labels left
/// after removing the block of the tagged label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    /// `PD(α, θ)` partition.
    Pd(PdParams),
    /// Point mass on a single block (every binary measure).
    SingleBlock,
}

impl Factor {
    /// EPPF of the factor at block sizes `c`.
    pub fn eppf(&self, c: &Composition) -> Result<f64> {
        match self {
            Factor::Pd(p) => pd::eppf_pd(p, c),
            Factor::SingleBlock => Ok(if c.k() == 1 { 1.0 } else { 0.0 }),
        }
    }
}

impl core::fmt::Display for Factor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Factor::Pd(p) => write!(f, "PD({}, {})", p.alpha(), p.theta()),
            Factor::SingleBlock => write!(f, "single-block"),
        }
    }
}

impl SplitLaw {
    pub fn pdstar(alpha: f64, theta: f64) -> Result<Self> {
        Ok(SplitLaw::PdStar(PdParams::new(alpha, theta)?))
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Ok(SplitLaw::PdStar(PdParams::stable(alpha)?))
    }

    /// Lévy measure of the tagged fragment, when the law comes from one in
    /// closed form.
    pub fn kernel(&self) -> Option<LevyKernel> {
        match self {
            SplitLaw::PdStar(p) => Some(LevyKernel::PdStar(*p)),
            SplitLaw::Brownian => Some(LevyKernel::Brownian),
            SplitLaw::Table(_) => None,
        }
    }

    /// Known factor of the dislocation measure.
    pub fn factor(&self) -> Option<Factor> {
        match self {
            SplitLaw::PdStar(p) => Some(Factor::Pd(p.factor())),
            SplitLaw::Brownian => Some(Factor::SingleBlock),
            SplitLaw::Table(_) => None,
        }
    }

    /// Largest block size the law is defined for.
    pub fn max_n(&self) -> Option<usize> {
        match self {
            SplitLaw::Table(t) => Some(t.n_max()),
            _ => None,
        }
    }

    fn check_range(&self, n: usize) -> Result<()> {
        match self.max_n() {
            Some(cap) if n > cap => Err(Error::Capacity {
                what: "split table n",
                requested: n,
                cap,
            }),
            _ => Ok(()),
        }
    }

    /// Unnormalised split rate `p_ν(c)` for `k ≥ 2`. Tables measure rates in
    /// units of the total rate at each `n`, so there it equals `p_n(c)`.
    pub fn split_rate(&self, c: &Composition) -> Result<f64> {
        if c.k() < 2 {
            bail!(Validation, "a split needs at least two blocks, got {c}");
        }
        match self {
            SplitLaw::PdStar(p) => pd::eprf_pdstar(p, c),
            SplitLaw::Brownian => Ok(if c.k() == 2 {
                brownian_split_rate(c.parts()[0], c.parts()[1])
            } else {
                0.0
            }),
            SplitLaw::Table(t) => t.get(c.n(), c.parts()),
        }
    }

    /// Total rate of splits visible on an `n`-block, `Φ(n − 1)`, in the same
    /// units as [`SplitLaw::split_rate`].
    pub fn total_split_rate(&self, n: usize) -> Result<f64> {
        if n < 2 {
            bail!(Validation, "total split rate needs n >= 2");
        }
        match self {
            SplitLaw::PdStar(p) => pd::total_rate(p, n),
            SplitLaw::Brownian => LevyKernel::Brownian.total_rate(n - 1),
            SplitLaw::Table(t) => {
                self.check_range(n)?;
                let _ = t;
                Ok(1.0)
            }
        }
    }

    /// `p_n(c)`: probability of one particular partition of an `n`-block with
    /// block sizes `c` at its first split.
    pub fn conditioned_split(&self, c: &Composition) -> Result<f64> {
        if c.k() < 2 {
            bail!(Validation, "a split needs at least two blocks, got {c}");
        }
        self.check_range(c.n())?;
        match self {
            SplitLaw::Table(t) => t.get(c.n(), c.parts()),
            _ => Ok(self.split_rate(c)? / self.total_split_rate(c.n())?),
        }
    }

    /// `Φ(r:m)/Φ(r)`: on `r + 1` labels, the probability that the first split
    /// leaves the tagged label in a block of size `r + 1 − m`.
    pub fn first_bush_prob(&self, r: usize, m: usize) -> Result<f64> {
        if r == 0 || m == 0 || m > r {
            bail!(
                Validation,
                "first bush needs 1 <= m <= r, got r = {r}, m = {m}"
            );
        }
        match self {
            SplitLaw::Table(_) => self.first_bush_prob_by_sum(r, m),
            _ => self
                .kernel()
                .expect("closed-form law")
                .first_bush_prob(r, m),
        }
    }

    /// `Φ(r:m)/Φ(r)` summed from `p_{r+1}`: choose the `m` labels leaving the
    /// tagged block, then partition them in every possible way.
    pub fn first_bush_prob_by_sum(&self, r: usize, m: usize) -> Result<f64> {
        let n = r + 1;
        let mut acc = 0.0;
        for lambda in integer_partitions(m) {
            let mut parts = Vec::with_capacity(lambda.len() + 1);
            parts.push(n - m);
            parts.extend_from_slice(&lambda);
            let c = Composition::new(parts)?;
            acc += set_partition_count(&lambda) * self.conditioned_split(&c)?;
        }
        Ok(binomial(r, m) * acc)
    }
}

/// Free-function form of [`SplitLaw::conditioned_split`].
pub fn conditioned_split(sl: &SplitLaw, c: &Composition) -> Result<f64> {
    sl.conditioned_split(c)
}

/// Product of `p_{#B}(child sizes)` over the internal vertices.
pub fn tree_probability(sl: &SplitLaw, t: &FragTree) -> Result<f64> {
    let mut p = 1.0;
    let mut err = None;
    t.for_each_internal(&mut |v| {
        if err.is_some() {
            return;
        }
        match sl.conditioned_split(&v.split_sizes()) {
            Ok(q) => p *= q,
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(p),
    }
}

/// Exact law on all hierarchies of `[n]`.
pub fn shape_distribution(sl: &SplitLaw, n: usize, caps: &Caps) -> Result<BTreeMap<FragTree, f64>> {
    enumerate_hierarchies(n, caps)?
        .into_iter()
        .map(|t| {
            let p = tree_probability(sl, &t)?;
            Ok((t, p))
        })
        .collect()
}

/// Samples a tree on `[n]` from the Markov branching law.
pub fn sample_tree<R: Rng + ?Sized>(sl: &SplitLaw, n: usize, rng: &mut R) -> Result<FragTree> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    sl.check_range(n)?;
    let labels: Vec<Label> = (1..=n as Label).collect();
    sample_tree_on(sl, &labels, rng)
}

/// Samples a tree on a sorted label set.
pub fn sample_tree_on<R: Rng + ?Sized>(
    sl: &SplitLaw,
    labels: &[Label],
    rng: &mut R,
) -> Result<FragTree> {
    if labels.len() == 1 {
        return Ok(FragTree::leaf(labels[0]));
    }
    let split = sample_first_split(sl, labels, rng)?;
    let children = split
        .blocks()
        .iter()
        .map(|b| sample_tree_on(sl, b, rng))
        .collect::<Result<Vec<_>>>()?;
    FragTree::node(children)
}

/// Draws the first split of `labels` (at least two blocks).
///
/// Laws with a factor go through the tagged block: its size `n1` has
/// probability proportional to `Φ(n−1 : n−n1)`, its other members are
/// uniform, and the remaining labels are partitioned by the factor. Tables
/// draw a block-size multiset and then a uniform partition with those sizes.
pub fn sample_first_split<R: Rng + ?Sized>(
    sl: &SplitLaw,
    labels: &[Label],
    rng: &mut R,
) -> Result<SetPartition> {
    let n = labels.len();
    if n < 2 {
        bail!(Validation, "a split needs at least two labels");
    }
    sl.check_range(n)?;
    match (sl.kernel(), sl.factor()) {
        (Some(kernel), Some(factor)) => {
            let weights = (1..n)
                .map(|n1| kernel.block_rate(n - 1, n - n1))
                .collect::<Result<Vec<_>>>()?;
            let n1 = 1 + pick(&weights, rng)?;
            let mut others: Vec<Label> = labels[1..].to_vec();
            partial_shuffle(&mut others, n1 - 1, rng);
            let mut tagged: Vec<Label> = others[..n1 - 1].to_vec();
            tagged.push(labels[0]);
            let mut rest: Vec<Label> = others[n1 - 1..].to_vec();
            rest.sort_unstable();
            let mut blocks = match factor {
                Factor::Pd(p) => crp_sample_on(&p, &rest, rng)?.into_blocks(),
                Factor::SingleBlock => alloc::vec![rest],
            };
            blocks.push(tagged);
            SetPartition::canonicalize(blocks)
        }
        _ => {
            let shapes: Vec<Vec<usize>> = integer_partitions(n)
                .into_iter()
                .filter(|p| p.len() >= 2)
                .collect();
            let weights = shapes
                .iter()
                .map(|p| {
                    let c = Composition::new(p.clone())?;
                    Ok(set_partition_count(p) * sl.conditioned_split(&c)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let shape = &shapes[pick(&weights, rng)?];
            let mut perm = labels.to_vec();
            partial_shuffle(&mut perm, n, rng);
            let mut blocks = Vec::with_capacity(shape.len());
            let mut start = 0;
            for &size in shape {
                blocks.push(perm[start..start + size].to_vec());
                start += size;
            }
            SetPartition::canonicalize(blocks)
        }
    }
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() || weights.iter().any(|w| *w < 0.0) {
        bail!(Numeric, "invalid sampling weights (total {total})");
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Ok(i);
        }
    }
    // rounding at the top end
    Ok(weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
}

/// Fisher–Yates on the first `k` positions.
fn partial_shuffle<T, R: Rng + ?Sized>(v: &mut [T], k: usize, rng: &mut R) {
    let len = v.len();
    for i in 0..k.min(len) {
        let j = rng.random_range(i..len);
        v.swap(i, j);
    }
}
