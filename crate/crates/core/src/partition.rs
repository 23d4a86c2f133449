//! Compositions, set partitions and their exhaustive enumeration.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{bail, check_cap, Result};
use crate::Label;

/// Enumeration limits. Exceeding one is a [`crate::Error::Capacity`], never a
/// silent truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest `n` for set-partition enumeration of `[n]`.
    pub partitions: usize,
    /// Largest `n` for hierarchy (fragmentation tree) enumeration.
    pub hierarchies: usize,
    /// Largest `n` for composition enumeration.
    pub compositions: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            partitions: 10,
            hierarchies: 6,
            compositions: 24,
        }
    }
}

/// Absolute slack allowed on `Σ freqs + dust ≤ 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// An ordered sequence of positive part sizes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Composition(Vec<usize>);

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            bail!(Validation, "composition parts must be positive: {parts:?}");
        }
        Ok(Composition(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn into_parts(self) -> Vec<usize> {
        self.0
    }

    /// Sum of the parts.
    pub fn n(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of parts.
    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn reversed(&self) -> Composition {
        let mut p = self.0.clone();
        p.reverse();
        Composition(p)
    }

    /// Parts sorted nonincreasing: the symmetric-function key.
    pub fn sorted_key(&self) -> Vec<usize> {
        let mut p = self.0.clone();
        p.sort_unstable_by(|a, b| b.cmp(a));
        p
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// A partition of a finite label set, blocks in least-element order and
/// labels sorted within each block.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SetPartition {
    blocks: Vec<Vec<Label>>,
}

impl SetPartition {
    /// Validates and sorts `blocks` into canonical order.
    pub fn canonicalize<I>(blocks: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<Label>>,
    {
        let mut blocks: Vec<Vec<Label>> = blocks.into_iter().collect();
        if blocks.is_empty() {
            bail!(Validation, "a partition needs at least one block");
        }
        for b in blocks.iter_mut() {
            if b.is_empty() {
                bail!(Validation, "empty block");
            }
            b.sort_unstable();
            if b.windows(2).any(|w| w[0] == w[1]) {
                bail!(Validation, "repeated label inside block {b:?}");
            }
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let mut all: Vec<Label> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            bail!(Validation, "blocks are not pairwise disjoint");
        }
        Ok(SetPartition { blocks })
    }

    /// Builds from blocks already known to be canonical.
    pub(crate) fn from_canonical(blocks: Vec<Vec<Label>>) -> Self {
        debug_assert!(blocks.windows(2).all(|w| w[0][0] < w[1][0]));
        SetPartition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<Label>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Vec<Label>> {
        self.blocks
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Size of the ground set.
    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Sorted ground set.
    pub fn ground(&self) -> Vec<Label> {
        let mut g: Vec<Label> = self.blocks.iter().flatten().copied().collect();
        g.sort_unstable();
        g
    }

    /// Block sizes in canonical block order.
    pub fn sizes(&self) -> Composition {
        Composition(self.blocks.iter().map(Vec::len).collect())
    }

    pub fn block_of(&self, label: Label) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&label).is_ok())
    }

    /// Nonempty intersections of the blocks with `subset`.
    pub fn restrict(&self, subset: &[Label]) -> Result<SetPartition> {
        let ground = self.ground();
        let mut a: Vec<Label> = subset.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.is_empty() {
            bail!(Validation, "restriction to the empty set");
        }
        if let Some(x) = a.iter().find(|x| ground.binary_search(x).is_err()) {
            bail!(Validation, "label {x} is not in the ground set");
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                b.iter()
                    .copied()
                    .filter(|x| a.binary_search(x).is_ok())
                    .collect::<Vec<_>>()
            })
            .filter(|b| !b.is_empty())
            .collect();
        Ok(SetPartition::from_canonical(blocks))
    }

    /// `true` iff every block of `self` lies inside a block of `coarse`.
    pub fn refines(&self, coarse: &SetPartition) -> Result<bool> {
        if self.ground() != coarse.ground() {
            bail!(Validation, "refines: ground sets differ");
        }
        Ok(self.blocks.iter().all(|b| {
            let i = coarse.block_of(b[0]);
            i.is_some_and(|i| b.iter().all(|x| coarse.blocks[i].binary_search(x).is_ok()))
        }))
    }

    /// Applies an injective relabeling and re-canonicalizes.
    pub fn relabel(&self, mut map: impl FnMut(Label) -> Label) -> Result<SetPartition> {
        SetPartition::canonicalize(
            self.blocks
                .iter()
                .map(|b| b.iter().map(|&x| map(x)).collect::<Vec<_>>()),
        )
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, x) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Disjoint nonempty blocks whose order carries meaning (spinal order).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderedPartition {
    blocks: Vec<Vec<Label>>,
}

impl OrderedPartition {
    pub fn new(blocks: Vec<Vec<Label>>) -> Result<Self> {
        // validation only; the canonical form is discarded
        SetPartition::canonicalize(blocks.clone())?;
        let blocks = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        Ok(OrderedPartition { blocks })
    }

    pub fn blocks(&self) -> &[Vec<Label>] {
        &self.blocks
    }

    pub fn sizes(&self) -> Composition {
        Composition(self.blocks.iter().map(Vec::len).collect())
    }

    /// Forgets the order.
    pub fn to_set_partition(&self) -> SetPartition {
        let mut blocks = self.blocks.clone();
        blocks.sort_unstable_by_key(|b| b[0]);
        SetPartition::from_canonical(blocks)
    }
}

/// A ranked finite sequence of frequencies plus unassigned dust.
#[derive(Debug, Clone, PartialEq)]
pub struct MassPartition {
    freqs: Vec<f64>,
    dust: f64,
}

impl MassPartition {
    /// Validates a nonincreasing sequence in `(0, 1]`; dust is `1 - Σ freqs`
    /// clamped at zero.
    pub fn new(freqs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(freqs, MASS_TOLERANCE)
    }

    pub fn with_tolerance(freqs: Vec<f64>, tolerance: f64) -> Result<Self> {
        if freqs.iter().any(|&s| !(s > 0.0 && s <= 1.0 + tolerance)) {
            bail!(Validation, "frequencies must lie in (0, 1]");
        }
        if freqs.windows(2).any(|w| w[0] < w[1]) {
            bail!(Validation, "frequencies must be nonincreasing");
        }
        let total: f64 = freqs.iter().sum();
        if total > 1.0 + tolerance {
            bail!(Validation, "frequencies sum to {total} > 1");
        }
        Ok(MassPartition {
            freqs,
            dust: (1.0 - total).max(0.0),
        })
    }

    /// Sorts, drops non-positive entries and validates.
    pub fn from_unsorted(mut freqs: Vec<f64>) -> Result<Self> {
        freqs.retain(|&s| s > 0.0);
        freqs.sort_unstable_by(|a, b| b.total_cmp(a));
        Self::new(freqs)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn dust(&self) -> f64 {
        self.dust
    }
}

fn sorted_labels(labels: &[Label]) -> Result<Vec<Label>> {
    let mut v = labels.to_vec();
    v.sort_unstable();
    if v.windows(2).any(|w| w[0] == w[1]) {
        bail!(Validation, "repeated labels");
    }
    Ok(v)
}

/// All set partitions of `labels` in canonical order (restricted growth
/// strings). No cap is applied; callers bound the size.
pub fn partitions_of(labels: &[Label]) -> Result<Vec<SetPartition>> {
    let labels = sorted_labels(labels)?;
    if labels.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<Label>> = Vec::new();
    fn rec(i: usize, labels: &[Label], blocks: &mut Vec<Vec<Label>>, out: &mut Vec<SetPartition>) {
        if i == labels.len() {
            out.push(SetPartition::from_canonical(blocks.clone()));
            return;
        }
        for j in 0..blocks.len() {
            blocks[j].push(labels[i]);
            rec(i + 1, labels, blocks, out);
            blocks[j].pop();
        }
        blocks.push(alloc::vec![labels[i]]);
        rec(i + 1, labels, blocks, out);
        blocks.pop();
    }
    rec(0, &labels, &mut blocks, &mut out);
    Ok(out)
}

/// All set partitions of `[n] = {1, …, n}`; `Bell(n)` of them.
pub fn enumerate_partitions(n: usize, caps: &Caps) -> Result<Vec<SetPartition>> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    check_cap("partition enumeration n", n, caps.partitions)?;
    let labels: Vec<Label> = (1..=n as Label).collect();
    partitions_of(&labels)
}

/// All `2^(n-1)` compositions of `n`, largest first part first.
pub fn enumerate_compositions(n: usize, caps: &Caps) -> Result<Vec<Composition>> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    check_cap("composition enumeration n", n, caps.compositions)?;
    Ok(compositions_unchecked(n))
}

pub(crate) fn compositions_unchecked(n: usize) -> Vec<Composition> {
    let mut out = Vec::with_capacity(1 << (n.saturating_sub(1)));
    let mut cur = Vec::new();
    fn rec(rest: usize, cur: &mut Vec<usize>, out: &mut Vec<Composition>) {
        if rest == 0 {
            out.push(Composition(cur.clone()));
            return;
        }
        for first in (1..=rest).rev() {
            cur.push(first);
            rec(rest - first, cur, out);
            cur.pop();
        }
    }
    rec(n, &mut cur, &mut out);
    out
}

/// Integer partitions of `n` as nonincreasing part lists.
pub fn integer_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    rec(n, n, &mut cur, &mut out);
    out
}

/// Number of set partitions of an `n`-set whose block sizes are the multiset
/// `parts`: `n! / (∏ n_i! ∏ m_j!)` with `m_j` the multiplicities.
pub fn set_partition_count(parts: &[usize]) -> f64 {
    use crate::special::ln_factorial;
    let n: usize = parts.iter().sum();
    let mut sorted = parts.to_vec();
    sorted.sort_unstable();
    let mut ln = ln_factorial(n);
    for &p in &sorted {
        ln -= ln_factorial(p);
    }
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        ln -= ln_factorial(j - i);
        i = j;
    }
    libm::round(libm::exp(ln))
}
