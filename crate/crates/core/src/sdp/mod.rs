//! Semidefinite programming: problem data, an interior-point solver and the
//! moment / gradient-variety relaxations.

pub mod arrow;
mod cones;
pub mod problem;
pub mod relax;
pub mod solver;

pub use arrow::{arrow_constraint, ArrowConstraint, ArrowError};
pub use problem::{
    arrow_matrix, ArrowBlock, Block, Equality, NonnegBlock, ProblemError, PsdBlock, SdpProblem,
};
pub use relax::{
    assemble_moment_relaxation, assemble_nds_relaxation, assemble_relaxation, gradient_equalities,
    moment_psd_block, relaxation_order, Mode, MomentRelaxation, RelaxError,
};
pub use solver::{solve, KktResiduals, SdpSolution, SdpStatus, SolverConfig};
