//! Second-kind boundary integral solves.

mod formulation;
mod gmres;
mod solve;

pub use formulation::{
    apply_operator, eigenvalues, materialize_operator, ApplyMode, BoundaryOperator, CornerHandling, Formulation,
    Representation, DENSE_LIMIT,
};
pub use gmres::{gmres, GmresOptions, SolveReport};
pub use solve::{
    boundary_values, build_mesh, corner_solve, solve_dirichlet, solve_on_mesh, BoundaryData, CornerOptions, MeshMode,
    Solution,
};
