//! Meshes, finite-element operators, and the sparse linear algebra they need.

pub mod mesh;
pub mod operators;
pub mod sparse;

pub use mesh::{build_mesh, Cells, Mesh, NodeTag};
pub use operators::{assemble, dual_norm_sq, smallest_generalized_eigenvalue, FemOperators};
pub use sparse::{solve_spd, solve_spd_from, SparseOperator};
