//! Spinal decompositions and their exact laws.
//!
//! Index convention: laws indexed by `n` live on trees with `n + 1` leaves,
//! the tagged leaf `1` plus the `n` labels `{2, …, n+1}`. Rates `Φ(r:m)` are
//! always called with `r` = the number of untagged labels still on the spine.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, check_cap, Result};
use crate::partition::{
    compositions_unchecked, integer_partitions, partitions_of, Caps, Composition, OrderedPartition,
    SetPartition,
};
use crate::special::binomial;
use crate::split::{Factor, SplitLaw};
use crate::tree::FragTree;
use crate::Label;

/// Tolerance under which two conditional laws count as one factor.
pub const FACTOR_TOLERANCE: f64 = 1e-9;

/// The bushes hanging off the path from the root to leaf `1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinalDecomposition {
    /// Bushes from the root downwards, ending with `{1}`.
    pub coarse_ordered: OrderedPartition,
    pub coarse: SetPartition,
    pub fine: SetPartition,
    /// For each block of `coarse_ordered`, the subtrees whose leaf sets are
    /// its fine blocks.
    pub subtrees: Vec<Vec<FragTree>>,
}

impl SpinalDecomposition {
    /// Sizes of the bushes other than `{1}`, in spinal order.
    pub fn composition(&self) -> Composition {
        let sizes = self.coarse_ordered.sizes().into_parts();
        Composition::new(sizes[..sizes.len() - 1].to_vec()).expect("bushes are nonempty")
    }
}

pub fn spinal_decompose(t: &FragTree) -> Result<SpinalDecomposition> {
    if t.block().binary_search(&1).is_err() {
        bail!(Validation, "tree has no leaf labelled 1");
    }
    let mut ordered = Vec::new();
    let mut fine = Vec::new();
    let mut subtrees = Vec::new();
    let mut v = t;
    while !v.is_leaf() {
        let mut bush = Vec::new();
        let mut hanging = Vec::new();
        let mut next = None;
        for c in v.children() {
            if c.block().binary_search(&1).is_ok() {
                next = Some(c);
            } else {
                bush.extend_from_slice(c.block());
                fine.push(c.block().to_vec());
                hanging.push(c.clone());
            }
        }
        ordered.push(bush);
        subtrees.push(hanging);
        v = next.expect("label 1 lies in one child");
    }
    ordered.push(vec![1]);
    fine.push(vec![1]);
    subtrees.push(vec![FragTree::leaf(1)]);
    let coarse_ordered = OrderedPartition::new(ordered)?;
    Ok(SpinalDecomposition {
        coarse: coarse_ordered.to_set_partition(),
        coarse_ordered,
        fine: SetPartition::canonicalize(fine)?,
        subtrees,
    })
}

/// `C_n`: bush sizes in spinal order, excluding `{1}`.
pub fn coarse_composition(t: &FragTree) -> Result<Composition> {
    Ok(spinal_decompose(t)?.composition())
}

/// `Φ(r:m) / (C(r,m) Φ(r))`: probability that the next bush is one given
/// `m`-subset of the `r` untagged labels left.
fn bush_prob(sl: &SplitLaw, r: usize, m: usize) -> Result<f64> {
    Ok(sl.first_bush_prob(r, m)? / binomial(r, m))
}

/// Law of `C_n`: `∏_j Φ(r_{j−1}:m_j)/Φ(r_{j−1})` with `r_0 = n`.
pub fn composition_law(sl: &SplitLaw, n: usize, caps: &Caps) -> Result<BTreeMap<Composition, f64>> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    check_cap("composition n", n, caps.compositions)?;
    let mut first = BTreeMap::new();
    for r in 1..=n {
        for m in 1..=r {
            first.insert((r, m), sl.first_bush_prob(r, m)?);
        }
    }
    Ok(compositions_unchecked(n)
        .into_iter()
        .map(|c| {
            let mut r = n;
            let mut p = 1.0;
            for &m in c.parts() {
                p *= first[&(r, m)];
                r -= m;
            }
            (c, p)
        })
        .collect())
}

/// Probability of one particular sequence of bushes.
pub fn ordered_coarse_prob(sl: &SplitLaw, sizes: &[usize]) -> Result<f64> {
    let mut r: usize = sizes.iter().sum();
    let mut p = 1.0;
    for &m in sizes {
        p *= bush_prob(sl, r, m)?;
        r -= m;
    }
    Ok(p)
}

/// Law of the coarse spinal partition restricted to `{2, …, n+1}`.
pub fn coarse_partition_law(
    sl: &SplitLaw,
    n: usize,
    caps: &Caps,
) -> Result<BTreeMap<SetPartition, f64>> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    check_cap("partition n", n, caps.partitions)?;
    let mut memo = BTreeMap::new();
    partitions_of(&untagged(n))?
        .into_iter()
        .map(|pi| {
            let key = pi.sizes().sorted_key();
            let p = match memo.get(&key) {
                Some(&p) => p,
                None => {
                    let p = unordered_prob(sl, &key)?;
                    memo.insert(key, p);
                    p
                }
            };
            Ok((pi, p))
        })
        .collect()
}

/// Sum over all orders of distinct blocks with the given size multiset.
fn unordered_prob(sl: &SplitLaw, sizes: &[usize]) -> Result<f64> {
    if sizes.is_empty() {
        return Ok(1.0);
    }
    let r: usize = sizes.iter().sum();
    let mut acc = 0.0;
    let mut i = 0;
    while i < sizes.len() {
        let m = sizes[i];
        let mult = sizes.iter().filter(|&&s| s == m).count();
        let mut rest = sizes.to_vec();
        rest.remove(i);
        acc += mult as f64 * bush_prob(sl, r, m)? * unordered_prob(sl, &rest)?;
        while i < sizes.len() && sizes[i] == m {
            i += 1;
        }
    }
    Ok(acc)
}

/// `g(n, n1) = Φ(n−1 : n−n1) / C(n−1, n1−1)`, in the units of
/// [`SplitLaw::split_rate`].
pub fn factor_g(sl: &SplitLaw, n: usize, n1: usize) -> Result<f64> {
    if n < 2 || n1 == 0 || n1 >= n {
        bail!(
            Validation,
            "factor_g needs 1 <= n1 <= n - 1, got n = {n}, n1 = {n1}"
        );
    }
    let phi = sl.first_bush_prob(n - 1, n - n1)? * sl.total_split_rate(n)?;
    Ok(phi / binomial(n - 1, n1 - 1))
}

/// `p_ν(n1, c) / g(n, n1)`: the law by which the labels outside the tagged
/// block of size `n1` are partitioned, evaluated at sizes `c`.
pub fn nu_hat_eppf(sl: &SplitLaw, n: usize, n1: usize, c: &Composition) -> Result<f64> {
    if c.n() + n1 != n || c.k() == 0 {
        bail!(
            Validation,
            "composition {c} does not partition the {} labels outside the tagged block",
            n - n1.min(n)
        );
    }
    let g = factor_g(sl, n, n1)?;
    if !(g > 0.0) {
        bail!(Numeric, "g({n}, {n1}) vanishes");
    }
    let mut parts = vec![n1];
    parts.extend_from_slice(c.parts());
    Ok(sl.split_rate(&Composition::new(parts)?)? / g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    pub n_max: usize,
    /// Largest `|ν̂(n, n1)(c) − ν̂(m+1, 1)(c)|` over the tested cases.
    pub max_deviation: f64,
    /// `(n, n1, c)` attaining `max_deviation`.
    pub worst: Option<(usize, usize, Vec<usize>)>,
    pub threshold: f64,
    pub passed: bool,
    /// The law's known factor, when it matches every conditional law.
    pub factor: Option<Factor>,
}

/// Compares every conditional law `ν̂(n, n1)`, `n ≤ n_max`, with the common
/// candidate `ν̂(m+1, 1)` on partitions of the same `m` labels.
pub fn factorization_report(sl: &SplitLaw, n_max: usize) -> Result<FactorizationReport> {
    check_cap("factorization n_max", n_max, 8)?;
    let mut max_deviation: f64 = 0.0;
    let mut worst = None;
    let mut known_ok = sl.factor().is_some();
    for n in 2..=n_max {
        for n1 in 1..n {
            for parts in integer_partitions(n - n1) {
                let c = Composition::new(parts.clone())?;
                let v = nu_hat_eppf(sl, n, n1, &c)?;
                let reference = nu_hat_eppf(sl, c.n() + 1, 1, &c)?;
                let d = libm::fabs(v - reference);
                if d > max_deviation || worst.is_none() {
                    max_deviation = max_deviation.max(d);
                    worst = Some((n, n1, parts));
                }
                if let Some(f) = sl.factor() {
                    let e = f.eppf(&c)?;
                    if libm::fabs(v - e) > FACTOR_TOLERANCE * e.max(1.0) {
                        known_ok = false;
                    }
                }
            }
        }
    }
    let passed = max_deviation <= FACTOR_TOLERANCE;
    Ok(FactorizationReport {
        n_max,
        max_deviation,
        worst,
        threshold: FACTOR_TOLERANCE,
        passed,
        factor: if passed && known_ok {
            sl.factor()
        } else {
            None
        },
    })
}

/// Law of the fine spinal partition restricted to `{2, …, n+1}`, summed over
/// every ordered coarsening with the split probabilities `p_{r+1}` directly.
pub fn fine_partition_law(
    sl: &SplitLaw,
    n: usize,
    caps: &Caps,
) -> Result<BTreeMap<SetPartition, f64>> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    check_cap("partition n", n, caps.partitions)?;
    partitions_of(&untagged(n))?
        .into_iter()
        .map(|pi| {
            let sizes = pi.sizes().into_parts();
            let full = (1usize << sizes.len()) - 1;
            let mut memo = BTreeMap::new();
            let p = fine_given_remaining(sl, &sizes, full, &mut memo)?;
            Ok((pi, p))
        })
        .collect()
}

/// Probability that the blocks in `mask` are emitted as the fine blocks of
/// the remaining bushes.
fn fine_given_remaining(
    sl: &SplitLaw,
    sizes: &[usize],
    mask: usize,
    memo: &mut BTreeMap<usize, f64>,
) -> Result<f64> {
    if mask == 0 {
        return Ok(1.0);
    }
    if let Some(&p) = memo.get(&mask) {
        return Ok(p);
    }
    let r: usize = (0..sizes.len())
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| sizes[i])
        .sum();
    let mut acc = 0.0;
    // nonempty submasks: the next bush
    let mut sub = mask;
    while sub != 0 {
        let mut parts = Vec::new();
        let mut m = 0;
        for (i, &s) in sizes.iter().enumerate() {
            if sub >> i & 1 == 1 {
                parts.push(s);
                m += s;
            }
        }
        let mut split = vec![r + 1 - m];
        split.extend_from_slice(&parts);
        let p = sl.conditioned_split(&Composition::new(split)?)?;
        if p != 0.0 {
            acc += p * fine_given_remaining(sl, sizes, mask & !sub, memo)?;
        }
        sub = (sub - 1) & mask;
    }
    memo.insert(mask, acc);
    Ok(acc)
}

/// Joint law of (coarse, fine) restricted to `{2, …, n+1}` built by first
/// drawing the ordered coarse partition and then shattering every bush
/// independently by `factor`.
pub fn compose_then_shatter_law(
    sl: &SplitLaw,
    factor: &Factor,
    n: usize,
    caps: &Caps,
) -> Result<BTreeMap<(SetPartition, SetPartition), f64>> {
    let coarse = coarse_partition_law(sl, n, caps)?;
    let mut out = BTreeMap::new();
    for (gamma, pg) in coarse {
        let per_block = gamma
            .blocks()
            .iter()
            .map(|b| {
                partitions_of(b)?
                    .into_iter()
                    .map(|q| Ok((factor.eppf(&q.sizes())?, q)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut idx = vec![0usize; per_block.len()];
        loop {
            let mut p = pg;
            let mut blocks = Vec::new();
            for (j, &i) in idx.iter().enumerate() {
                let (q, part) = &per_block[j][i];
                p *= q;
                blocks.extend(part.blocks().iter().cloned());
            }
            let fine = SetPartition::canonicalize(blocks)?;
            *out.entry((gamma.clone(), fine)).or_insert(0.0) += p;
            let mut j = 0;
            while j < idx.len() {
                idx[j] += 1;
                if idx[j] < per_block[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == idx.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// Joint law of (coarse, fine) restricted to `{2, …, n+1}` from the split
/// probabilities directly.
pub fn joint_spinal_law(
    sl: &SplitLaw,
    n: usize,
    caps: &Caps,
) -> Result<BTreeMap<(SetPartition, SetPartition), f64>> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    check_cap("partition n", n, caps.partitions)?;
    let mut out = BTreeMap::new();
    for fine in partitions_of(&untagged(n))? {
        let k = fine.len();
        let sizes = fine.sizes().into_parts();
        // every ordered coarsening: an ordered set partition of the fine blocks
        let idx: Vec<Label> = (0..k as Label).collect();
        for grouping in partitions_of(&idx)? {
            let mut p_sum = 0.0;
            for order in permutations(grouping.len()) {
                let mut r: usize = sizes.iter().sum();
                let mut p = 1.0;
                for &g in &order {
                    let members = &grouping.blocks()[g];
                    let m: usize = members.iter().map(|&i| sizes[i as usize]).sum();
                    let mut split = vec![r + 1 - m];
                    split.extend(members.iter().map(|&i| sizes[i as usize]));
                    p *= sl.conditioned_split(&Composition::new(split)?)?;
                    r -= m;
                }
                p_sum += p;
            }
            let coarse = SetPartition::canonicalize(grouping.blocks().iter().map(|g| {
                g.iter()
                    .flat_map(|&i| fine.blocks()[i as usize].iter().copied())
                    .collect::<Vec<_>>()
            }))?;
            *out.entry((coarse, fine.clone())).or_insert(0.0) += p_sum;
        }
    }
    Ok(out)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    fn rec(i: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for j in i..cur.len() {
            cur.swap(i, j);
            rec(i + 1, cur, out);
            cur.swap(i, j);
        }
    }
    rec(0, &mut cur, &mut out);
    out
}

/// Total-variation distance between the law of `C_n` and the law of its
/// reversal.
pub fn reversal_distance(sl: &SplitLaw, n: usize, caps: &Caps) -> Result<f64> {
    check_cap("reversal n", n, 20)?;
    let law = composition_law(sl, n, caps)?;
    Ok(0.5
        * law
            .iter()
            .map(|(c, p)| libm::fabs(p - law[&c.reversed()]))
            .sum::<f64>())
}

fn untagged(n: usize) -> Vec<Label> {
    (2..=n as Label + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pd::{eppf_pd, PdParams};
    use crate::reconstruct::PnTable;
    use crate::split::shape_distribution;
    use crate::tree::{enumerate_hierarchies, example_tree};

    fn sp(blocks: &[&[Label]]) -> SetPartition {
        SetPartition::canonicalize(blocks.iter().map(|b| b.to_vec())).unwrap()
    }

    fn laws() -> Vec<SplitLaw> {
        vec![
            SplitLaw::stable(0.75).unwrap(),
            SplitLaw::pdstar(0.75, -0.8).unwrap(),
            SplitLaw::pdstar(0.6, -0.3).unwrap(),
            SplitLaw::Brownian,
        ]
    }

    #[test]
    fn example_tree_decomposition() {
        let d = spinal_decompose(&example_tree()).unwrap();
        assert_eq!(
            d.coarse_ordered.blocks(),
            &[vec![2, 4, 5, 6, 9], vec![3, 7, 8], vec![1]]
        );
        assert_eq!(d.coarse, sp(&[&[1], &[2, 4, 5, 6, 9], &[3, 7, 8]]));
        assert_eq!(d.fine, sp(&[&[1], &[2], &[3, 7, 8], &[4], &[5, 6, 9]]));
        assert_eq!(d.composition().parts(), &[5, 3]);
        assert_eq!(d.subtrees[0].len(), 3);
        assert_eq!(d.subtrees[1].len(), 1);
    }

    #[test]
    fn small_decompositions() {
        let cherry = FragTree::node(vec![FragTree::leaf(1), FragTree::leaf(2)]).unwrap();
        let d = spinal_decompose(&cherry).unwrap();
        assert_eq!(d.coarse_ordered.blocks(), &[vec![2], vec![1]]);
        let star = FragTree::node((1..=5).map(FragTree::leaf).collect()).unwrap();
        let d = spinal_decompose(&star).unwrap();
        assert_eq!(d.coarse_ordered.blocks(), &[vec![2, 3, 4, 5], vec![1]]);
        assert_eq!(d.fine.len(), 5);
        // caterpillar: n splits off at each step
        let mut t = FragTree::leaf(1);
        for i in 2..=6 {
            t = FragTree::node(vec![t, FragTree::leaf(i)]).unwrap();
        }
        assert_eq!(coarse_composition(&t).unwrap().parts(), &[1, 1, 1, 1, 1]);
        let no_one = FragTree::node(vec![FragTree::leaf(2), FragTree::leaf(3)]).unwrap();
        assert!(spinal_decompose(&no_one).is_err());
    }

    #[test]
    fn decomposition_invariants_exhaustive() {
        let caps = Caps::default();
        for n in 1..=5 {
            for t in enumerate_hierarchies(n, &caps).unwrap() {
                let d = spinal_decompose(&t).unwrap();
                assert!(d.fine.refines(&d.coarse).unwrap());
                assert_eq!(d.coarse_ordered.blocks().last().unwrap(), &vec![1]);
                assert_eq!(d.coarse.n(), n);
                for (b, subs) in d.coarse_ordered.blocks().iter().zip(&d.subtrees) {
                    let mut leaves: Vec<Label> = subs
                        .iter()
                        .flat_map(|s| s.block().iter().copied())
                        .collect();
                    leaves.sort_unstable();
                    assert_eq!(&leaves, b);
                }
            }
        }
    }

    fn push_forward<K: Ord + Clone>(
        sl: &SplitLaw,
        n: usize,
        key: impl Fn(&SpinalDecomposition) -> K,
    ) -> BTreeMap<K, f64> {
        let mut out = BTreeMap::new();
        for (t, p) in shape_distribution(sl, n + 1, &Caps::default()).unwrap() {
            *out.entry(key(&spinal_decompose(&t).unwrap()))
                .or_insert(0.0) += p;
        }
        out
    }

    fn without_one(p: &SetPartition) -> SetPartition {
        SetPartition::canonicalize(p.blocks().iter().filter(|b| b != &&vec![1]).cloned()).unwrap()
    }

    fn assert_same<K: Ord + core::fmt::Debug>(
        a: &BTreeMap<K, f64>,
        b: &BTreeMap<K, f64>,
        tol: f64,
    ) {
        for (k, p) in a {
            let q = b.get(k).copied().unwrap_or(0.0);
            assert!((p - q).abs() <= tol, "{k:?}: {p} vs {q}");
        }
        for (k, q) in b {
            assert!(a.contains_key(k) || q.abs() <= tol, "{k:?} missing");
        }
    }

    #[test]
    fn laws_match_tree_enumeration() {
        let caps = Caps::default();
        for sl in laws() {
            for n in 1..=4 {
                let comp = composition_law(&sl, n, &caps).unwrap();
                assert!((comp.values().sum::<f64>() - 1.0).abs() < 1e-10);
                assert_same(&comp, &push_forward(&sl, n, |d| d.composition()), 1e-9);
                let coarse = coarse_partition_law(&sl, n, &caps).unwrap();
                assert_same(
                    &coarse,
                    &push_forward(&sl, n, |d| without_one(&d.coarse)),
                    1e-9,
                );
                let fine = fine_partition_law(&sl, n, &caps).unwrap();
                assert_same(&fine, &push_forward(&sl, n, |d| without_one(&d.fine)), 1e-9);
                let joint = joint_spinal_law(&sl, n, &caps).unwrap();
                assert_same(
                    &joint,
                    &push_forward(&sl, n, |d| (without_one(&d.coarse), without_one(&d.fine))),
                    1e-9,
                );
            }
        }
    }

    #[test]
    fn composition_law_two() {
        let sl = SplitLaw::stable(0.75).unwrap();
        let k = sl.kernel().unwrap();
        let law = composition_law(&sl, 2, &Caps::default()).unwrap();
        let phi2 = k.total_rate(2).unwrap();
        let two = Composition::new(vec![2]).unwrap();
        let ones = Composition::new(vec![1, 1]).unwrap();
        assert!((law[&two] - k.block_rate(2, 2).unwrap() / phi2).abs() < 1e-14);
        assert!((law[&ones] - k.block_rate(2, 1).unwrap() / phi2).abs() < 1e-14);
    }

    #[test]
    fn stable_coarse_and_fine_are_pd() {
        let caps = Caps::default();
        for a in [0.6, 0.75, 0.9] {
            let sl = SplitLaw::stable(a).unwrap();
            let coarse_pd = PdParams::new(1.0 - a, 1.0 - a).unwrap();
            for n in 1..=5 {
                for (pi, p) in coarse_partition_law(&sl, n, &caps).unwrap() {
                    let e = eppf_pd(&coarse_pd, &pi.sizes()).unwrap();
                    assert!((p - e).abs() <= 1e-8 * e, "coarse a={a} {pi}: {p} vs {e}");
                }
            }
            let fine_pd = PdParams::new(a, 1.0 - a).unwrap();
            for n in 1..=4 {
                for (pi, p) in fine_partition_law(&sl, n, &caps).unwrap() {
                    let e = eppf_pd(&fine_pd, &pi.sizes()).unwrap();
                    assert!((p - e).abs() <= 1e-8 * e, "fine a={a} {pi}: {p} vs {e}");
                }
            }
        }
    }

    #[test]
    fn coarse_law_is_exchangeable() {
        let caps = Caps::default();
        for sl in laws() {
            let law = coarse_partition_law(&sl, 5, &caps).unwrap();
            let mut by_shape: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
            for (pi, p) in &law {
                let q = *by_shape.entry(pi.sizes().sorted_key()).or_insert(*p);
                assert!((p - q).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn g_sums_to_total_rate() {
        for sl in laws() {
            for n in 2..=8 {
                let s: f64 = (1..n)
                    .map(|n1| binomial(n - 1, n1 - 1) * factor_g(&sl, n, n1).unwrap())
                    .sum();
                let t = sl.total_split_rate(n).unwrap();
                assert!((s - t).abs() <= 1e-10 * t);
            }
        }
        let sl = SplitLaw::Brownian;
        assert!(factor_g(&sl, 3, 3).is_err());
        assert!(factor_g(&sl, 3, 0).is_err());
    }

    #[test]
    fn pdstar_factor_is_pd() {
        let p = PdParams::new(0.75, -0.8).unwrap();
        let sl = SplitLaw::PdStar(p);
        let f = PdParams::new(0.75, -0.05).unwrap();
        for n in 2..=7 {
            for n1 in 1..n {
                let mut total = 0.0;
                for parts in integer_partitions(n - n1) {
                    let c = Composition::new(parts.clone()).unwrap();
                    let v = nu_hat_eppf(&sl, n, n1, &c).unwrap();
                    let e = eppf_pd(&f, &c).unwrap();
                    assert!((v - e).abs() <= 1e-10 * e);
                    total += crate::partition::set_partition_count(&parts) * v;
                }
                assert!((total - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn factorization_reports() {
        let r = factorization_report(&SplitLaw::pdstar(0.75, -0.8).unwrap(), 8).unwrap();
        assert!(r.passed, "{r:?}");
        match r.factor {
            Some(Factor::Pd(f)) => {
                assert!((f.alpha() - 0.75).abs() < 1e-15 && (f.theta() + 0.05).abs() < 1e-12)
            }
            other => panic!("unexpected factor {other:?}"),
        }
        let r = factorization_report(&SplitLaw::Brownian, 8).unwrap();
        assert!(r.passed);
        assert_eq!(r.factor, Some(Factor::SingleBlock));
        assert!(factorization_report(&SplitLaw::Brownian, 9).is_err());

        let base = PnTable::from_law(&SplitLaw::stable(0.75).unwrap(), 7).unwrap();
        let bent = base
            .reweighted(|n, parts| {
                if n % 2 == 0 && parts.len() == 2 {
                    1.01
                } else {
                    1.0
                }
            })
            .unwrap();
        let r = factorization_report(&SplitLaw::Table(bent), 7).unwrap();
        assert!(!r.passed);
        assert!(r.max_deviation > 1e-3, "{r:?}");
        assert_eq!(r.factor, None);
    }

    #[test]
    fn compose_then_shatter_matches_direct() {
        let caps = Caps::default();
        for sl in laws() {
            let f = sl.factor().unwrap();
            for n in 1..=5 {
                let a = compose_then_shatter_law(&sl, &f, n, &caps).unwrap();
                let b = joint_spinal_law(&sl, n, &caps).unwrap();
                assert_same(&a, &b, 1e-9);
                // summing out the fine partition leaves the coarse law
                let coarse = coarse_partition_law(&sl, n, &caps).unwrap();
                let mut marg = BTreeMap::new();
                for ((g, _), p) in &b {
                    *marg.entry(g.clone()).or_insert(0.0) += p;
                }
                assert_same(&coarse, &marg, 1e-12);
            }
        }
    }

    #[test]
    fn reversal() {
        let caps = Caps::default();
        for sl in [
            SplitLaw::stable(0.6).unwrap(),
            SplitLaw::stable(0.75).unwrap(),
            SplitLaw::stable(0.9).unwrap(),
            SplitLaw::Brownian,
        ] {
            for n in 1..=8 {
                assert!(reversal_distance(&sl, n, &caps).unwrap() < 1e-10);
            }
        }
        let d = reversal_distance(&SplitLaw::pdstar(0.75, -0.8).unwrap(), 5, &caps).unwrap();
        assert!(d > 1e-6);
    }

    #[test]
    fn scaling_rates_changes_nothing() {
        let k = crate::kernel::LevyKernel::PdStar(PdParams::stable(0.75).unwrap());
        let scaled = k.clone().scaled(3.5).unwrap();
        for r in 1..=6 {
            for m in 1..=r {
                let a = k.first_bush_prob(r, m).unwrap();
                let b = scaled.first_bush_prob(r, m).unwrap();
                assert!((a - b).abs() < 1e-14);
            }
        }
    }
}
