//! Exact enumeration, counting and verification for intersecting families
//! of permutations and their diversity.

pub mod counting;
pub mod error;
pub mod extremal;
pub mod family;
pub mod hitting;
pub mod perm;
pub mod spread;

pub use counting::{BinaryMatrix, EstimateReport, ExactCount};
pub use error::{Error, Result};
pub use extremal::{ExtremalReport, FrontierEntry, IntersectionGraph};
pub use family::{FamilyStats, PermFamily, SigmaFilter};
pub use hitting::HittingSetReport;
pub use perm::{PartialPermutation, Permutation, Point};
pub use spread::{AmbientSpace, SetFamily, SpreadDecomposition};
