//! Fragmentation trees (hierarchies) on finite label sets.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{bail, check_cap, Result};
use crate::partition::{partitions_of, Caps, Composition};
use crate::Label;

/// A nested family of blocks from `block` down to singletons. Every
/// non-singleton vertex has at least two children, stored in least-element
/// order, so structural equality is equality of hierarchies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FragTree {
    block: Vec<Label>,
    children: Vec<FragTree>,
}

impl FragTree {
    pub fn leaf(label: Label) -> Self {
        FragTree {
            block: vec![label],
            children: Vec::new(),
        }
    }

    /// Joins subtrees with disjoint blocks under a new root.
    pub fn node(mut children: Vec<FragTree>) -> Result<Self> {
        if children.len() < 2 {
            bail!(Validation, "an internal vertex needs at least two children");
        }
        children.sort_unstable_by_key(|c| c.block[0]);
        let mut block: Vec<Label> = children
            .iter()
            .flat_map(|c| c.block.iter().copied())
            .collect();
        block.sort_unstable();
        if block.windows(2).any(|w| w[0] == w[1]) {
            bail!(Validation, "children blocks overlap");
        }
        Ok(FragTree { block, children })
    }

    /// Checks every invariant of a hierarchy, for trees built by hand or
    /// decoded from external input.
    pub fn from_parts(block: Vec<Label>, children: Vec<FragTree>) -> Result<Self> {
        let t = if children.is_empty() {
            if block.len() != 1 {
                bail!(Validation, "a leaf must be a singleton, got {block:?}");
            }
            FragTree::leaf(block[0])
        } else {
            let t = FragTree::node(children)?;
            let mut b = block;
            b.sort_unstable();
            if b != t.block {
                bail!(Validation, "block {b:?} is not the union of its children");
            }
            t
        };
        t.validate()?;
        Ok(t)
    }

    pub fn block(&self) -> &[Label] {
        &self.block
    }

    pub fn children(&self) -> &[FragTree] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Number of leaves.
    pub fn n(&self) -> usize {
        self.block.len()
    }

    /// Child block sizes in canonical order.
    pub fn split_sizes(&self) -> Composition {
        Composition::new(self.children.iter().map(|c| c.n()).collect())
            .expect("child blocks are nonempty")
    }

    pub fn validate(&self) -> Result<()> {
        if self.block.is_empty() {
            bail!(Validation, "empty block");
        }
        if self.block.windows(2).any(|w| w[0] >= w[1]) {
            bail!(Validation, "block {:?} is not strictly sorted", self.block);
        }
        if self.children.is_empty() {
            if self.block.len() != 1 {
                bail!(Validation, "leaf {:?} is not a singleton", self.block);
            }
            return Ok(());
        }
        if self.children.len() < 2 {
            bail!(Validation, "vertex {:?} has a single child", self.block);
        }
        if self
            .children
            .windows(2)
            .any(|w| w[0].block[0] >= w[1].block[0])
        {
            bail!(
                Validation,
                "children of {:?} are not in least-element order",
                self.block
            );
        }
        let mut union: Vec<Label> = self
            .children
            .iter()
            .flat_map(|c| c.block.iter().copied())
            .collect();
        union.sort_unstable();
        if union != self.block {
            bail!(Validation, "children do not partition {:?}", self.block);
        }
        self.children.iter().try_for_each(FragTree::validate)
    }

    /// Visits every internal vertex, parents before children.
    pub fn for_each_internal<'a>(&'a self, f: &mut impl FnMut(&'a FragTree)) {
        if !self.is_leaf() {
            f(self);
            for c in &self.children {
                c.for_each_internal(f);
            }
        }
    }

    /// The child whose block contains `label`.
    pub fn child_containing(&self, label: Label) -> Option<&FragTree> {
        self.children
            .iter()
            .find(|c| c.block.binary_search(&label).is_ok())
    }

    /// Applies an injective relabeling and restores canonical order.
    pub fn relabel(&self, map: &impl Fn(Label) -> Label) -> FragTree {
        if self.is_leaf() {
            return FragTree::leaf(map(self.block[0]));
        }
        FragTree::node(self.children.iter().map(|c| c.relabel(map)).collect())
            .expect("relabeling must be injective")
    }

    /// Order-preserving relabeling onto `1..=n`.
    pub fn standardize(&self) -> FragTree {
        let block = self.block.clone();
        self.relabel(&|x| block.binary_search(&x).map(|i| i as Label + 1).unwrap_or(0))
    }

    /// The reduced tree spanned by the leaves in `subset`: every block is
    /// intersected with `subset` and vertices left with one child are
    /// suppressed.
    pub fn reduce(&self, subset: &[Label]) -> Result<FragTree> {
        let mut a = subset.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.is_empty() {
            bail!(Validation, "reduction to the empty set");
        }
        if let Some(x) = a.iter().find(|x| self.block.binary_search(x).is_err()) {
            bail!(Validation, "label {x} is not a leaf of the tree");
        }
        Ok(self.reduce_sorted(&a))
    }

    fn reduce_sorted(&self, a: &[Label]) -> FragTree {
        if self.is_leaf() {
            return self.clone();
        }
        let mut kept: Vec<FragTree> = self
            .children
            .iter()
            .filter(|c| c.block.iter().any(|x| a.binary_search(x).is_ok()))
            .map(|c| c.reduce_sorted(a))
            .collect();
        if kept.len() == 1 {
            kept.pop().unwrap()
        } else {
            FragTree::node(kept).expect("disjoint reduced children")
        }
    }

    /// Re-roots at leaf `1` and gives the old root the label `1`.
    ///
    /// The tree planted on an extra root leaf `0` is read as an unrooted
    /// leaf-labeled tree on `{0} ∪ [n]`; labels `0` and `1` are swapped and
    /// the tree is planted again at `0`. The map is an involution.
    pub fn reroot(&self) -> Result<FragTree> {
        if self.n() < 2 {
            bail!(Validation, "re-rooting needs at least two leaves");
        }
        if self.block[0] != 1 {
            bail!(Validation, "re-rooting needs leaf 1 in the tree");
        }
        let mut g = Graph::default();
        let root = g.build(self);
        let planted = g.add(Some(0));
        g.link(root, planted);
        let one = g
            .labels
            .iter()
            .position(|&l| l == Some(1))
            .expect("leaf 1 present");
        let new_root = g.adj[one][0];
        g.labels[one] = Some(0);
        g.labels[planted] = Some(1);
        Ok(g.read(new_root, one))
    }
}

#[derive(Default)]
struct Graph {
    adj: Vec<Vec<usize>>,
    labels: Vec<Option<Label>>,
}

impl Graph {
    fn add(&mut self, label: Option<Label>) -> usize {
        self.adj.push(Vec::new());
        self.labels.push(label);
        self.adj.len() - 1
    }

    fn link(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    fn build(&mut self, t: &FragTree) -> usize {
        if t.is_leaf() {
            return self.add(Some(t.block[0]));
        }
        let v = self.add(None);
        for c in &t.children {
            let u = self.build(c);
            self.link(v, u);
        }
        v
    }

    fn read(&self, v: usize, parent: usize) -> FragTree {
        if let Some(l) = self.labels[v] {
            return FragTree::leaf(l);
        }
        let children = self.adj[v]
            .iter()
            .filter(|&&u| u != parent)
            .map(|&u| self.read(u, v))
            .collect();
        FragTree::node(children).expect("internal vertices keep degree >= 3")
    }
}

impl fmt::Display for FragTree {
    /// Nested-parenthesis form, e.g. `((1,2),3)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_leaf() {
            return write!(f, "{}", self.block[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Every fragmentation tree on `[n]` exactly once.
pub fn enumerate_hierarchies(n: usize, caps: &Caps) -> Result<Vec<FragTree>> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    check_cap("hierarchy enumeration n", n, caps.hierarchies)?;
    let labels: Vec<Label> = (1..=n as Label).collect();
    hierarchies_on(&labels)
}

/// Every fragmentation tree on the given label set, without a cap.
pub fn hierarchies_on(labels: &[Label]) -> Result<Vec<FragTree>> {
    if labels.len() == 1 {
        return Ok(vec![FragTree::leaf(labels[0])]);
    }
    let mut out = Vec::new();
    for split in partitions_of(labels)? {
        if split.len() < 2 {
            continue;
        }
        let options: Vec<Vec<FragTree>> = split
            .blocks()
            .iter()
            .map(|b| hierarchies_on(b))
            .collect::<Result<_>>()?;
        let mut idx = vec![0usize; options.len()];
        loop {
            let children = idx
                .iter()
                .zip(&options)
                .map(|(&i, o)| o[i].clone())
                .collect();
            out.push(FragTree::node(children)?);
            // odometer over the cartesian product
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < options[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// The nine-leaf example tree with coarse spinal composition
/// `({2,4,5,6,9}, {3,7,8}, {1})`.
#[cfg(test)]
pub(crate) fn example_tree() -> FragTree {
    let leaf = FragTree::leaf;
    let node = |c: Vec<FragTree>| FragTree::node(c).unwrap();
    node(vec![
        leaf(2),
        leaf(4),
        node(vec![leaf(5), node(vec![leaf(6), leaf(9)])]),
        node(vec![
            node(vec![leaf(3), node(vec![leaf(7), leaf(8)])]),
            leaf(1),
        ]),
    ])
}
