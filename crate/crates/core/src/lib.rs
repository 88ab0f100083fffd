//! Moment relaxations, flatness steering and minimizer extraction for
//! unconstrained polynomial minimization.
//!
//! The pipeline: parse a [`Polynomial`], index its moments, solve the moment
//! (or gradient-variety) relaxation with the built-in interior point
//! [`sdp::solve`] for a lower bound, then steer a feasible moment matrix
//! toward flatness with [`run_algorithm`] to obtain an upper bound and
//! candidate minimizers via [`extract_atoms`].
//!
//! Everything numeric is generic over [`Real`] (`f32` and `f64`); polynomial
//! arithmetic also works over exact coefficients such as rationals. The
//! aliases below fix the scalar to `f64`.
//!
//! ```
//! use flatsteer::{parse_polynomial, relax_and_certify, Mode, SteerConfig};
//!
//! let f = parse_polynomial::<f64>("x1^2 - 2*x1 + 1 + x2^2 + 4*x2 + 4", None).unwrap();
//! let out = relax_and_certify(&f, Mode::Moment, &SteerConfig::default()).unwrap();
//! assert!(out.certified_optimal);
//! assert!(out.lower_bound.finite().unwrap().abs() < 1e-5);
//! ```

pub mod extract;
pub mod flatsteer;
pub mod linalg;
pub mod moment;
pub mod poly;
pub mod scalar;
pub mod sdp;

pub use extract::{
    extract_atoms, on_gradient_variety, validate_atoms, AtomicMeasure, ExtractConfig, ExtractError,
    ValidateConfig, Verdict,
};
pub use flatsteer::{
    flatness_report, modified_moment_matrix, project_columns, relax_and_certify, run_algorithm,
    steer_once, Flatness, InitialPoint, LowerBound, RelaxOutcome, RunOutcome, SteerConfig,
    SteerError, SteerState, StopReason,
};
pub use moment::{
    atomic_moment_vector, HankelStructure, MomentError, MomentMatrix, MomentVector, MonomialIndexer,
};
pub use poly::{parse_polynomial, MultiIndex, ParseError, Polynomial};
pub use scalar::{Coefficient, Real};
pub use sdp::{solve, Mode, SdpProblem, SdpSolution, SdpStatus, SolverConfig};

pub type Poly = Polynomial<f64>;
pub type Moments = MomentVector<f64>;
pub type MomentMat = MomentMatrix<f64>;
pub type Measure = AtomicMeasure<f64>;
pub type Sdp = SdpProblem<f64>;
pub type SdpResult = SdpSolution<f64>;
pub type Run = RunOutcome<f64>;
pub type Relaxed = RelaxOutcome<f64>;
