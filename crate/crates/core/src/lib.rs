//! Subtree-weight dissimilarity maps of weighted trees.
//!
//! For a tree `T` and an integer `m`, the m-map assigns to every set `V` of
//! `m` leaves the total weight of the smallest subtree spanning `V`. When the
//! tree has at least `2m - 1` leaves and no degree-2 vertices, the m-map
//! determines the tree; [`reconstruct::reconstruct`] recovers it.

pub mod counterexample;
pub mod error;
pub mod mdissim;
pub mod mmap_io;
pub mod newick;
pub mod reconstruct;
pub mod robust;
pub mod scalar;
pub mod subsets;
pub mod tree;
pub mod tropical;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
pub use mdissim::{check_necessary_conditions, compute_mmap, trop_membership, ConditionReport, MMap};
pub use newick::{parse_newick, write_newick};
pub use reconstruct::{reconstruct, ReconstructOptions, ReconstructionResult};
pub use scalar::{Rational, Scalar, ScalarMode};
pub use tree::{random_tree, Split, WeightedTree};
