//! Finite, checkable models of the combinatorics behind off-branch maximal
//! antichain families in the ω-tree: nodes and hairs, family operations and
//! the binary embedding, dyadic measure on clopen sets, Cohen genericity and
//! the Sacks fusion construction.

pub mod cohen;
pub mod error;
pub mod families;
pub mod measure;
pub mod sacks;
pub mod treecore;

pub use error::{CohenError, FamilyError, MeasureError, OracleError, SacksError, TreeError};
pub use treecore::{BinNode, EpBranch, Node, NodeSet, TreeNode};
