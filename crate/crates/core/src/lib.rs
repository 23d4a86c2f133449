//! Exact combinatorics of spinal decompositions of fragmentation trees.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure computations:
//!
//! * [`partition`]: set partitions, compositions and enumeration oracles.
//! * [`pd`]: two-parameter Poisson–Dirichlet partition laws, their sigma-finite
//!   continuation `PD*(α, θ)`, tagged-fragment rates and samplers.
//! * [`kernel`]: Lévy measures of the tagged-fragment subordinator.
//! * [`tree`]: fragmentation trees (hierarchies), restriction and re-rooting.
//! * [`split`]: Markov branching split laws, exact tree laws and sampling.
//! * [`spinal`]: coarse/fine spinal partitions and their exact laws.
//! * [`reconstruct`]: rebuilding split probabilities from a Lévy measure and
//!   exact re-rooting invariance tests.
//!
//! Randomised routines take a caller-owned generator; [`rng::sample_stream`]
//! derives independent per-sample streams from one master seed.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod kernel;
pub mod partition;
pub mod pd;
pub mod quad;
pub mod reconstruct;
pub mod rng;
pub mod special;
pub mod spinal;
pub mod split;
pub mod tree;

pub use error::{Error, Result};
pub use kernel::LevyKernel;
pub use partition::{Caps, Composition, MassPartition, OrderedPartition, SetPartition};
pub use pd::{PdParams, Regime};
pub use reconstruct::PnTable;
pub use spinal::SpinalDecomposition;
pub use split::SplitLaw;
pub use tree::FragTree;

/// Integer leaf label. Labels are positive; `0` is reserved for the planting
/// root during re-rooting.
pub type Label = u32;
