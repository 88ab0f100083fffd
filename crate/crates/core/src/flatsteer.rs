//! Flatness steering: drive a feasible moment vector towards a flat moment
//! matrix by repeatedly solving
//!
//! ```text
//! minimize   λ·E + (1 − λ)·Σ f_α y_α
//! subject to M_d(y) ⪰ 0,  y_0 = 1,
//!            ‖M_d(y) − B_M‖²_F ≤ E·‖M − B_M‖²_F
//! ```
//!
//! where `B_M` is the least-squares projection of the trailing columns of the
//! current matrix `M` onto the span of its leading columns. The quadratic
//! constraint enters the SDP as an arrow block. In gradient-variety mode the
//! localizing equalities of `∂f/∂X_i` are added.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::extract::{
    extract_atoms, on_gradient_variety, validate_atoms, AtomicMeasure, ExtractConfig,
    ValidateConfig, Verdict,
};
use crate::linalg::{column_threshold, lstsq, project_onto, rank_above, sym_eigen, PivotedQr};
use crate::moment::{
    atomic_moment_vector, linear_form, HankelStructure, MomentError, MomentMatrix, MomentVector,
    MonomialIndexer,
};
use crate::poly::Polynomial;
use crate::scalar::Real;
use crate::sdp::{
    arrow_constraint, assemble_relaxation, gradient_equalities, moment_psd_block, relaxation_order,
    solve, KktResiduals, Mode, RelaxError, SdpProblem, SdpSolution, SdpStatus, SolverConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteerError {
    #[error("polynomial is constant")]
    Constant,
    #[error("relaxation degree {k} is below the polynomial degree {deg}")]
    Degree { k: usize, deg: usize },
    #[error("lambda = {0} is outside [0, 1]")]
    Lambda(f64),
    #[error("SDP solver stopped with status {status}")]
    Solver { status: SdpStatus },
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Moment(#[from] MomentError),
}

/// How the starting moment vector of the plain-relaxation steering is built.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialPoint {
    /// Equal-weight atoms drawn uniformly from `[−rho, rho]ⁿ` (`s_d` of them),
    /// mixed with a `1e−3` share of the standard Gaussian moments.
    RandomAtoms { rho: f64 },
    /// Moments of a centred Gaussian with diagonal covariance `σ_i²`, where
    /// `σ_i = sigma·(1 + jitter·u_i)` and `u_i` is drawn uniformly from `[−1, 1]`.
    Gaussian { sigma: f64, jitter: f64 },
}

#[derive(Clone, Debug)]
pub struct SteerConfig {
    /// Relative eigenvalue cutoff for numerical rank, also the pivot threshold of `B_M`.
    pub tau_rank: f64,
    /// Approximate flatness: `‖A_M − B_M‖_F ≤ tau_flat·(1 + ‖A_M‖_F)`.
    pub tau_flat: f64,
    /// Generalized Hankel test of `M̃`: spread `≤ tau_hankel·(1 + max |entry|)`.
    pub tau_hankel: f64,
    pub max_outer_iters: usize,
    pub budget: Duration,
    /// Relaxation degree; defaults to `deg f` rounded up to even.
    pub degree: Option<usize>,
    pub init: InitialPoint,
    pub seed: u64,
    /// Trace cap used when the gradient-variety relaxation is unbounded.
    pub trace_cap: f64,
    /// Moment vectors whose matrix has an entry above this are rescaled.
    pub rescale_limit: f64,
    /// Residual level at which a stalled SDP solve is still accepted.
    pub accept_tol: f64,
    pub solver: SolverConfig,
    pub extract: ExtractConfig,
    pub validate: ValidateConfig,
}

impl Default for SteerConfig {
    fn default() -> Self {
        SteerConfig {
            tau_rank: 1e-4,
            tau_flat: 1e-2,
            tau_hankel: 1e-6,
            max_outer_iters: 100,
            budget: Duration::from_secs(300),
            degree: None,
            init: InitialPoint::Gaussian {
                sigma: 0.7,
                jitter: 0.1,
            },
            seed: 0,
            trace_cap: 1e7,
            rescale_limit: 1e6,
            accept_tol: 1e-4,
            solver: SolverConfig::default(),
            extract: ExtractConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

/// `deg f` rounded up to an even number, so that `M_{k/2}` carries every monomial of `f`.
pub fn default_degree<T: Real>(f: &Polynomial<T>) -> usize {
    let deg = f.degree() as usize;
    deg + deg % 2
}

#[derive(Clone, Debug)]
pub struct ProjectionResult<T: Real> {
    /// `B_M`: leading columns of `M`, trailing columns projected onto their span.
    pub b: DMatrix<T>,
    /// Maximal independent subset of the first `s_{d−1}` columns.
    pub basis_cols: Vec<usize>,
    /// `‖M − B_M‖_F`.
    pub distance: T,
}

/// Builds `B_M` by projecting every trailing column of `M` onto the span of a
/// maximal independent subset of its first `s_{d−1}` columns.
pub fn project_columns<T: Real>(m: &MomentMatrix<T>, tau_rank: f64) -> ProjectionResult<T> {
    let mm = m.entries();
    let (s, s1) = (m.size(), m.sub_size());
    let lead = mm.columns(0, s1).into_owned();
    let qr = PivotedQr::new(&lead, column_threshold(&lead, T::lit(tau_rank)));
    let trailing = mm.columns(s1, s - s1).into_owned();
    let mut b = mm.clone();
    b.columns_mut(s1, s - s1)
        .copy_from(&project_onto(&qr.q(), &trailing));
    let distance = (mm - &b).norm();
    let mut basis_cols = qr.selected().to_vec();
    basis_cols.sort_unstable();
    ProjectionResult {
        b,
        basis_cols,
        distance,
    }
}

#[derive(Clone, Debug)]
pub struct ModifiedMoment<T: Real> {
    /// `[[A, A W], [Wᵀ A, Wᵀ A W]]`.
    pub matrix: DMatrix<T>,
    /// Minimum-norm least-squares solution of `A W = B` (top-right block).
    pub w: DMatrix<T>,
    /// `‖A W − B‖_F`.
    pub residual: T,
}

/// The modified moment matrix `M̃`: the bottom-right block of `M` replaced by `Wᵀ A W`.
pub fn modified_moment_matrix<T: Real>(m: &MomentMatrix<T>, rcond: f64) -> ModifiedMoment<T> {
    let mm = m.entries();
    let (s, s1) = (m.size(), m.sub_size());
    let a = mm.view((0, 0), (s1, s1)).into_owned();
    let top_right = mm.view((0, s1), (s1, s - s1)).into_owned();
    let w = lstsq(&a, &top_right, T::lit(rcond));
    let aw = &a * &w;
    let residual = (&aw - &top_right).norm();
    let mut matrix = mm.clone();
    matrix.view_mut((0, s1), (s1, s - s1)).copy_from(&aw);
    matrix.view_mut((s1, 0), (s - s1, s1)).copy_from(&aw.transpose());
    let br = w.transpose() * &aw;
    matrix
        .view_mut((s1, s1), (s - s1, s - s1))
        .copy_from(&((&br + br.transpose()) * T::lit(0.5)));
    ModifiedMoment {
        matrix,
        w,
        residual,
    }
}

#[derive(Clone, Debug)]
pub struct FlatnessReport<T: Real> {
    pub rank_full: usize,
    pub rank_sub: usize,
    /// Smallest kept eigenvalue over the largest dropped one (infinite if none is dropped).
    pub eigen_gap: T,
    pub is_flat: bool,
    /// Generalized Hankel spread of `M̃`.
    pub hankel_residual_of_modified: T,
    /// Eigenvalues of `M`, decreasing.
    pub eigenvalues: DVector<T>,
}

/// Ranks of `M_d` and `M_{d−1}` with the cutoff `tau_rank·max(λ_max, 1)`.
pub fn flatness_report<T: Real>(m: &MomentMatrix<T>, tau_rank: f64) -> FlatnessReport<T> {
    let eig = sym_eigen(m.entries());
    let lmax = eig.values.iter().fold(T::zero(), |a, &v| a.max(v));
    let cutoff = T::lit(tau_rank) * lmax.max(T::one());
    let rank_full = rank_above(&eig.values, cutoff);
    let sub = sym_eigen(&m.leading_block());
    let rank_sub = rank_above(&sub.values, cutoff);
    let eigen_gap = if rank_full < eig.values.len() && rank_full > 0 {
        let dropped = eig.values[rank_full].max(T::eps() * lmax.max(T::one()));
        eig.values[rank_full - 1] / dropped
    } else {
        T::max_value().unwrap()
    };
    let modified = modified_moment_matrix(m, tau_rank * 1e-4);
    let hankel_residual_of_modified = m
        .hankel()
        .residual(&modified.matrix)
        .expect("same size");
    FlatnessReport {
        rank_full,
        rank_sub,
        eigen_gap,
        is_flat: rank_full == rank_sub,
        hankel_residual_of_modified,
        eigenvalues: eig.values,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flatness {
    Exact,
    Approximate,
    No,
}

impl Flatness {
    pub fn as_str(self) -> &'static str {
        match self {
            Flatness::Exact => "yes",
            Flatness::Approximate => "approx",
            Flatness::No => "no",
        }
    }
}

impl std::fmt::Display for Flatness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct SteerState<T: Real> {
    pub y: MomentVector<T>,
    /// `A_M = M_d(y)`.
    pub m: MomentMatrix<T>,
    pub e_value: T,
    /// `Σ f_α y_α`.
    pub objective_value: T,
    pub iteration: usize,
    pub flat: Flatness,
    /// `‖A_M − B_M‖_F` with `B_M` the projection of the previous matrix.
    pub flat_residual: T,
    pub report: FlatnessReport<T>,
}

/// The data of one steering problem that does not change between iterations.
#[derive(Clone, Debug)]
pub struct Steering<T: Real> {
    f: Polynomial<T>,
    mode: Mode,
    degree: usize,
    indexer: Arc<MonomialIndexer>,
    hankel: Arc<HankelStructure>,
    objective: DVector<T>,
    equalities: Vec<(DVector<T>, T)>,
}

impl<T: Real> Steering<T> {
    pub fn new(f: &Polynomial<T>, k: usize, mode: Mode) -> Result<Self, SteerError> {
        let deg = f.degree() as usize;
        if deg == 0 {
            return Err(SteerError::Constant);
        }
        if k < deg {
            return Err(SteerError::Degree { k, deg });
        }
        let indexer = Arc::new(MonomialIndexer::new(f.nvars(), k)?);
        let hankel = Arc::new(HankelStructure::new(&indexer, relaxation_order(k))?);
        let objective = linear_form(f, &indexer)?;
        let equalities = match mode {
            Mode::Moment => Vec::new(),
            Mode::Nds => gradient_equalities(f, &indexer, k)?,
        };
        Ok(Steering {
            f: f.clone(),
            mode,
            degree: k,
            indexer,
            hankel,
            objective,
            equalities,
        })
    }

    pub fn polynomial(&self) -> &Polynomial<T> {
        &self.f
    }

    pub fn indexer(&self) -> &Arc<MonomialIndexer> {
        &self.indexer
    }

    pub fn hankel(&self) -> &Arc<HankelStructure> {
        &self.hankel
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn objective_of(&self, y: &MomentVector<T>) -> T {
        self.objective.dot(y.values())
    }

    /// `M_d(y)` on this problem's index table.
    pub fn moment_matrix(&self, y: &MomentVector<T>) -> MomentMatrix<T> {
        y.moment_matrix_with(&self.hankel)
    }

    fn classify(&self, a: &MomentMatrix<T>, flat_residual: T, report: &FlatnessReport<T>, cfg: &SteerConfig) -> Flatness {
        if report.is_flat {
            return Flatness::Exact;
        }
        let tol = T::lit(cfg.tau_flat) * (T::one() + a.entries().norm());
        let own = project_columns(a, cfg.tau_rank).distance;
        if flat_residual <= tol && own <= tol {
            Flatness::Approximate
        } else {
            Flatness::No
        }
    }

    /// The steering SDP for the current matrix `m` (decision vector
    /// `(y_1, …, y_{s_k − 1}, E)`, without `E` when `λ = 0`).
    pub fn program(&self, m: &MomentMatrix<T>, lambda: T, cfg: &SteerConfig) -> Option<SdpProblem<T>> {
        self.program_for(&project_columns(m, cfg.tau_rank), lambda)
    }

    fn program_for(&self, proj: &ProjectionResult<T>, lambda: T) -> Option<SdpProblem<T>> {
        let scale2 = proj.distance * proj.distance;
        if !(scale2 > T::zero()) {
            return None;
        }
        let nm = self.indexer.len() - 1;
        let with_e = lambda > T::zero();
        let nvars = nm + usize::from(with_e);
        let mut p = SdpProblem::new(nvars);

        // with E fixed at 1 the E term is a constant and is dropped
        let weight = if with_e { T::one() - lambda } else { T::one() };
        let mut coef = DVector::zeros(nvars);
        for i in 0..nm {
            coef[i] = weight * self.objective[i + 1];
        }
        if with_e {
            coef[nm] = lambda;
        }
        p.set_objective(coef, weight * self.objective[0]).expect("length");

        let mut block = moment_psd_block::<T>(&self.hankel, 0);
        block.terms.retain(|(j, _)| *j < nm);
        p.add_psd(block).expect("moment block is symmetric");

        // v(y) = vec(M_d(y) − B_M) / ‖M − B_M‖_F, so that the constraint reads ‖v‖² ≤ E
        let s = self.hankel.size();
        let inv = T::one() / scale2.sqrt();
        let mut v_const = DVector::zeros(s * s);
        let mut v_coef = DMatrix::zeros(s * s, nvars);
        for j in 0..s {
            for i in 0..s {
                let cell = i + j * s;
                let pos = self.hankel.position(i, j);
                if pos == 0 {
                    v_const[cell] += inv;
                } else {
                    v_coef[(cell, pos - 1)] += inv;
                }
                v_const[cell] -= proj.b[(i, j)] * inv;
            }
        }
        let arrow = arrow_constraint(T::one(), s * s).expect("unit scale");
        let block = if with_e {
            arrow.instantiate(v_const, v_coef, nm)
        } else {
            arrow.instantiate_fixed(v_const, v_coef, T::one())
        };
        p.add_arrow(block).expect("dimensions");

        for (row, c) in &self.equalities {
            let mut full = DVector::zeros(nvars);
            full.rows_mut(0, nm).copy_from(row);
            p.add_equality(full, *c).expect("length");
        }
        Some(p)
    }

    /// One steering step from `m`, returning `y₀` and its matrix `A_M`.
    pub fn steer_once(
        &self,
        m: &MomentMatrix<T>,
        lambda: T,
        iteration: usize,
        cfg: &SteerConfig,
    ) -> Result<SteerState<T>, SteerError> {
        check_lambda(lambda)?;
        let proj = project_columns(m, cfg.tau_rank);
        let scale = T::one() + m.entries().norm();
        let Some(problem) = self
            .program_for(&proj, lambda)
            .filter(|_| proj.distance > T::lit(1e-10) * scale)
        else {
            // already rank-consistent: the current point is optimal at E = 0
            let values = self.hankel.moments_of(m.entries());
            let y = MomentVector::new(Arc::clone(&self.indexer), DVector::from_vec(values))?;
            let report = flatness_report(m, cfg.tau_rank);
            let flat = self.classify(m, proj.distance, &report, cfg);
            return Ok(SteerState {
                objective_value: self.objective_of(&y),
                y,
                m: m.clone(),
                e_value: T::zero(),
                iteration,
                flat,
                flat_residual: proj.distance,
                report,
            });
        };
        let sol = solve(&problem, &cfg.solver);
        if !sol.near_optimal(cfg.accept_tol) {
            return Err(SteerError::Solver { status: sol.status });
        }
        let nm = self.indexer.len() - 1;
        let y = self.moment_vector(&sol.x);
        let e_value = if lambda > T::zero() { sol.x[nm] } else { T::one() };
        let a = self.moment_matrix(&y);
        let flat_residual = (a.entries() - &proj.b).norm();
        let report = flatness_report(&a, cfg.tau_rank);
        let flat = self.classify(&a, flat_residual, &report, cfg);
        Ok(SteerState {
            objective_value: self.objective_of(&y),
            y,
            m: a,
            e_value,
            iteration,
            flat,
            flat_residual,
            report,
        })
    }

    fn moment_vector(&self, x: &DVector<T>) -> MomentVector<T> {
        let s = self.indexer.len();
        let values = DVector::from_fn(s, |i, _| if i == 0 { T::one() } else { x[i - 1] });
        MomentVector::new(Arc::clone(&self.indexer), values).expect("length matches")
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<(), SteerError> {
    if lambda >= T::zero() && lambda <= T::one() {
        Ok(())
    } else {
        Err(SteerError::Lambda(lambda.to_f64_lossy()))
    }
}

/// One steering step for `f` from the moment matrix `m`.
pub fn steer_once<T: Real>(
    m: &MomentMatrix<T>,
    f: &Polynomial<T>,
    lambda: T,
    mode: Mode,
    cfg: &SteerConfig,
) -> Result<SteerState<T>, SteerError> {
    let k = cfg.degree.unwrap_or_else(|| default_degree(f));
    let steering = Steering::new(f, k, mode)?;
    steering.steer_once(m, lambda, 1, cfg)
}

/// Lower bound from a plain relaxation solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LowerBound<T> {
    Finite(T),
    /// The relaxation is unbounded below; `trend` is the last objective value seen.
    Unbounded { trend: T },
    /// The solver did not reach a usable answer.
    Unavailable { status: SdpStatus },
}

impl<T: Real> LowerBound<T> {
    pub fn finite(&self) -> Option<T> {
        match self {
            LowerBound::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, LowerBound::Unbounded { .. })
    }
}

fn lower_bound_of<T: Real>(sol: &SdpSolution<T>, accept_tol: f64) -> LowerBound<T> {
    if sol.status == SdpStatus::UnboundedBelow {
        LowerBound::Unbounded {
            trend: sol.objective_value,
        }
    } else if sol.near_optimal(accept_tol) {
        LowerBound::Finite(sol.objective_value)
    } else {
        LowerBound::Unavailable { status: sol.status }
    }
}

/// A relaxation solve together with its optimality certificate, if any.
#[derive(Clone, Debug)]
pub struct RelaxOutcome<T: Real> {
    pub degree: usize,
    pub mode: Mode,
    pub lower_bound: LowerBound<T>,
    pub status: SdpStatus,
    pub residuals: KktResiduals<T>,
    pub iterations: usize,
    /// Optimal moments (absent when the solve was not usable).
    pub y: Option<MomentVector<T>>,
    pub report: Option<FlatnessReport<T>>,
    /// Whether `deg f ≤ k − 1`, the hypothesis of the Hankel certificate.
    pub hankel_applicable: bool,
    /// `M̃` is generalized Hankel within `tau_hankel`.
    pub hankel_modified: bool,
    pub measure: Option<AtomicMeasure<T>>,
    pub verdict: Option<Verdict>,
    /// The lower bound is the global minimum, attained at the extracted atoms.
    pub certified_optimal: bool,
}

/// Solves the plain (or gradient-variety) relaxation of degree `k` and tries
/// to certify the bound: a flat optimum, or (when `deg f < k`) an optimum
/// whose `M̃` is generalized Hankel, yields atoms that must all attain the bound.
pub fn relax_and_certify<T: Real>(
    f: &Polynomial<T>,
    mode: Mode,
    cfg: &SteerConfig,
) -> Result<RelaxOutcome<T>, SteerError> {
    let deg = f.degree() as usize;
    let k = cfg.degree.unwrap_or_else(|| default_degree(f));
    if k < deg {
        return Err(SteerError::Degree { k, deg });
    }
    let relax = assemble_relaxation(f, k, mode)?;
    let sol = solve(&relax.problem, &cfg.solver);
    let lower_bound = lower_bound_of(&sol, cfg.accept_tol);
    let mut out = RelaxOutcome {
        degree: k,
        mode,
        lower_bound,
        status: sol.status,
        residuals: sol.residuals,
        iterations: sol.iterations,
        y: None,
        report: None,
        hankel_applicable: deg < k,
        hankel_modified: false,
        measure: None,
        verdict: None,
        certified_optimal: false,
    };
    let Some(bound) = lower_bound.finite() else {
        return Ok(out);
    };
    let y = relax.moment_vector(&sol.x);
    let m = y.moment_matrix_with(&relax.hankel);
    let report = flatness_report(&m, cfg.tau_rank);
    let max_entry = m.entries().amax();
    out.hankel_modified = report.hankel_residual_of_modified
        <= T::lit(cfg.tau_hankel) * (T::one() + max_entry);
    let source = if report.is_flat {
        Some(m.clone())
    } else if out.hankel_applicable && out.hankel_modified {
        let modified = modified_moment_matrix(&m, cfg.tau_rank * 1e-4);
        Some(MomentMatrix::from_entries(modified.matrix, Arc::clone(m.hankel()))?)
    } else {
        None
    };
    if let Some(src) = source {
        if let Ok(mut measure) = extract_atoms(&src, report.rank_sub, &cfg.extract) {
            measure.evaluate(f);
            let verdict = validate_atoms(&measure, f, mode, bound, &cfg.validate);
            out.certified_optimal = verdict == Verdict::CertifiedInterval;
            out.verdict = Some(verdict);
            out.measure = Some(measure);
        }
    }
    out.y = Some(y);
    out.report = Some(report);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StopReason {
    Flat,
    ApproximateFlat,
    MaxOuterIters,
    Budget,
    SolverFailure(SdpStatus),
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Flat => "flat",
            StopReason::ApproximateFlat => "approximate_flat",
            StopReason::MaxOuterIters => "max_outer_iters",
            StopReason::Budget => "budget",
            StopReason::SolverFailure(_) => "solver_failure",
        }
    }
}

/// One outer iteration, for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub objective: T,
    pub e_value: T,
    pub flat_residual: T,
    pub rank_full: usize,
    pub rank_sub: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutcome<T: Real> {
    pub degree: usize,
    pub mode: Mode,
    pub lambda: T,
    /// `P*_k` or `P*_{k,NDS}`.
    pub lower_bound: LowerBound<T>,
    /// Last accepted state, in the original coordinates.
    pub state: SteerState<T>,
    pub stop: StopReason,
    /// `U = Σ f_α y_α` at a flat (or approximately flat) exit.
    pub upper_bound: Option<T>,
    pub measure: Option<AtomicMeasure<T>>,
    pub verdict: Option<Verdict>,
    /// `(lower, U)` with `None` for an unbounded lower end.
    pub certified_interval: Option<(Option<T>, T)>,
    pub outer_iterations: usize,
    /// Variable substitution `X → c·X` applied before steering (`1` if none).
    pub scale: T,
    pub history: Vec<IterationRecord<T>>,
}

fn gaussian_moments<T: Real>(indexer: &Arc<MonomialIndexer>, sigma: &[f64]) -> MomentVector<T> {
    let values = DVector::from_fn(indexer.len(), |i, _| {
        let alpha = indexer.monomial(i);
        let mut v = 1.0;
        for (&e, &s) in alpha.exponents().iter().zip(sigma) {
            if e % 2 == 1 {
                return T::zero();
            }
            v *= s.powi(e as i32);
            // (e − 1)!!
            let mut t = e as i64 - 1;
            while t > 1 {
                v *= t as f64;
                t -= 2;
            }
        }
        T::lit(v)
    });
    MomentVector::new(Arc::clone(indexer), values).expect("length matches")
}

/// Strictly feasible starting moments for the plain-relaxation steering.
pub fn initial_moments<T: Real>(
    indexer: &Arc<MonomialIndexer>,
    init: InitialPoint,
    seed: u64,
) -> Result<MomentVector<T>, SteerError> {
    let n = indexer.nvars();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match init {
        InitialPoint::Gaussian { sigma, jitter } => {
            let sigmas: Vec<f64> = (0..n)
                .map(|_| sigma * (1.0 + jitter * rng.random_range(-1.0..=1.0)))
                .collect();
            Ok(gaussian_moments(indexer, &sigmas))
        }
        InitialPoint::RandomAtoms { rho } => {
            let d = indexer.max_degree() / 2;
            let count = MonomialIndexer::new(n, d)?.len();
            let w = T::one() / T::from_usize_lossy(count);
            let atoms: Vec<(T, Vec<T>)> = (0..count)
                .map(|_| (w, (0..n).map(|_| T::lit(rng.random_range(-rho..=rho))).collect()))
                .collect();
            let y = atomic_moment_vector(&atoms, Arc::clone(indexer))?;
            let eps = T::lit(1e-3);
            let g = gaussian_moments::<T>(indexer, &vec![1.0; n]);
            let values = y.values() * (T::one() - eps) + g.values() * eps;
            Ok(MomentVector::new(Arc::clone(indexer), values)?)
        }
    }
}

/// `c = max_{|α| ≥ 1} |y_α|^{1/|α|}`.
pub fn moment_scale<T: Real>(y: &MomentVector<T>) -> T {
    let ix = y.indexer();
    let mut c = T::zero();
    for (i, &v) in y.values().iter().enumerate().skip(1) {
        let deg = ix.monomial(i).degree();
        c = c.max(v.abs().powf(T::one() / T::from_usize_lossy(deg as usize)));
    }
    c
}

/// Starting data for the steering loop, in the rescaled coordinates.
pub struct StartingPoint<T: Real> {
    pub degree: usize,
    pub lower_bound: LowerBound<T>,
    /// Variable scale `c`: the steering works with `f(c·x)`.
    pub scale: T,
    pub polynomial: Polynomial<T>,
    pub steering: Steering<T>,
    pub y: MomentVector<T>,
}

/// Solves the plain relaxation for the lower bound and builds the first
/// iterate: synthetic strictly feasible moments for [`Mode::Moment`], the
/// relaxation optimum for [`Mode::Nds`] (trace-capped when unbounded).
pub fn starting_point<T: Real>(
    f: &Polynomial<T>,
    mode: Mode,
    cfg: &SteerConfig,
) -> Result<StartingPoint<T>, SteerError> {
    let deg = f.degree() as usize;
    if deg == 0 {
        return Err(SteerError::Constant);
    }
    let k = cfg.degree.unwrap_or_else(|| default_degree(f));
    if k < deg {
        return Err(SteerError::Degree { k, deg });
    }

    let mut relax = assemble_relaxation(f, k, mode)?;
    let sol = solve(&relax.problem, &cfg.solver);
    let lower_bound = lower_bound_of(&sol, cfg.accept_tol);

    let y0 = match mode {
        Mode::Moment => initial_moments(&relax.indexer, cfg.init, cfg.seed)?,
        Mode::Nds => {
            if lower_bound.finite().is_some() {
                relax.moment_vector(&sol.x)
            } else {
                relax.add_trace_bound(T::lit(cfg.trace_cap));
                let capped = solve(&relax.problem, &cfg.solver);
                if !capped.near_optimal(cfg.accept_tol) {
                    return Err(SteerError::Solver {
                        status: capped.status,
                    });
                }
                relax.moment_vector(&capped.x)
            }
        }
    };

    let max_entry = y0.moment_matrix_with(&relax.hankel).entries().amax();
    let scale = if max_entry > T::lit(cfg.rescale_limit) {
        moment_scale(&y0)
    } else {
        T::one()
    };
    let (polynomial, y) = if scale != T::one() {
        (f.rescaled(scale), y0.rescaled(scale))
    } else {
        (f.clone(), y0)
    };
    let steering = Steering::new(&polynomial, k, mode)?;
    Ok(StartingPoint {
        degree: k,
        lower_bound,
        scale,
        polynomial,
        steering,
        y,
    })
}

/// Runs the steering loop from [`starting_point`].
pub fn run_algorithm<T: Real>(
    f: &Polynomial<T>,
    lambda: T,
    mode: Mode,
    cfg: &SteerConfig,
) -> Result<RunOutcome<T>, SteerError> {
    check_lambda(lambda)?;
    let start = Instant::now();
    let StartingPoint {
        degree: k,
        lower_bound,
        scale,
        polynomial: fs,
        steering,
        y: ys,
    } = starting_point(f, mode, cfg)?;
    let m0 = steering.moment_matrix(&ys);
    let report = flatness_report(&m0, cfg.tau_rank);
    let mut state = SteerState {
        objective_value: steering.objective_of(&ys),
        y: ys,
        flat: if report.is_flat { Flatness::Exact } else { Flatness::No },
        m: m0,
        e_value: T::one(),
        iteration: 0,
        flat_residual: T::zero(),
        report,
    };

    let mut history = Vec::new();
    let mut stop = StopReason::MaxOuterIters;
    let mut measure = None;
    for it in 1..=cfg.max_outer_iters {
        if start.elapsed() > cfg.budget {
            stop = StopReason::Budget;
            break;
        }
        let next = match steering.steer_once(&state.m, lambda, it, cfg) {
            Ok(s) => s,
            Err(SteerError::Solver { status }) => {
                stop = StopReason::SolverFailure(status);
                break;
            }
            Err(e) => return Err(e),
        };
        state = next;
        history.push(IterationRecord {
            iteration: it,
            objective: state.objective_value,
            e_value: state.e_value,
            flat_residual: state.flat_residual,
            rank_full: state.report.rank_full,
            rank_sub: state.report.rank_sub,
        });
        match state.flat {
            Flatness::Exact => {
                if let Some(mu) = exact_measure(&state, &fs, mode, cfg) {
                    measure = Some(mu);
                    stop = StopReason::Flat;
                    break;
                }
            }
            Flatness::Approximate => {
                if let Some(mu) = approximate_measure(&state, &fs, mode, cfg) {
                    measure = Some(mu);
                    stop = StopReason::ApproximateFlat;
                    break;
                }
            }
            Flatness::No => {}
        }
    }

    let mut measure = measure.map(|mu| mu.scaled(scale));
    if let Some(mu) = measure.as_mut() {
        mu.evaluate(f);
    }
    let exit_flat = matches!(stop, StopReason::Flat | StopReason::ApproximateFlat);
    let upper_bound = exit_flat.then_some(state.objective_value);
    let verdict = match (&measure, upper_bound) {
        (Some(mu), Some(u)) => Some(validate_atoms(mu, f, mode, u, &cfg.validate)),
        _ => None,
    };
    let lower = match lower_bound {
        LowerBound::Finite(v) => Some(Some(v)),
        LowerBound::Unbounded { .. } => Some(None),
        LowerBound::Unavailable { .. } => None,
    };
    let certified_interval = match (upper_bound, lower) {
        (Some(u), Some(lo)) => {
            // an extracted measure must agree with U; without one only exact flatness counts
            let consistent = match verdict {
                Some(v) => v != Verdict::Invalid,
                None => stop == StopReason::Flat,
            };
            let ok = match mode {
                Mode::Moment => consistent,
                Mode::Nds => {
                    consistent
                        && measure.as_ref().is_some_and(|mu| {
                            mu.atoms
                                .iter()
                                .all(|a| on_gradient_variety(f, a, cfg.validate.tau_grad))
                        })
                }
            };
            ok.then_some((lo, u))
        }
        _ => None,
    };

    // back to the original coordinates
    if scale != T::one() {
        let y = state.y.rescaled(T::one() / scale);
        let hankel = Arc::clone(state.m.hankel());
        state.m = y.moment_matrix_with(&hankel);
        state.y = y;
    }

    Ok(RunOutcome {
        degree: k,
        mode,
        lambda,
        lower_bound,
        outer_iterations: history.len(),
        state,
        stop,
        upper_bound,
        measure,
        verdict,
        certified_interval,
        scale,
        history,
    })
}

/// Extraction on `A_M` for a flat state. A rank drop that the atoms do not
/// reproduce to `tau_flat`, or whose value contradicts `U`, is not a stop.
fn exact_measure<T: Real>(
    state: &SteerState<T>,
    f: &Polynomial<T>,
    mode: Mode,
    cfg: &SteerConfig,
) -> Option<AtomicMeasure<T>> {
    let mu = extract_atoms(&state.m, state.report.rank_sub, &cfg.extract).ok()?;
    let consistent = mu.reconstruction_residual <= T::lit(cfg.tau_flat)
        && validate_atoms(&mu, f, mode, state.objective_value, &cfg.validate) != Verdict::Invalid;
    consistent.then_some(mu)
}

/// Extraction on `M̃` for an approximately flat state: keeps atoms that are
/// critical points in gradient-variety mode, and accepts the measure only if
/// it reproduces `A_M` to `tau_flat` and its value agrees with `U`.
fn approximate_measure<T: Real>(
    state: &SteerState<T>,
    f: &Polynomial<T>,
    mode: Mode,
    cfg: &SteerConfig,
) -> Option<AtomicMeasure<T>> {
    let modified = modified_moment_matrix(&state.m, cfg.tau_rank * 1e-4);
    let mt = MomentMatrix::from_entries(modified.matrix, Arc::clone(state.m.hankel())).ok()?;
    let mut mu = extract_atoms(&mt, state.report.rank_sub, &cfg.extract).ok()?;
    if mode == Mode::Nds {
        mu.retain(|a, _| on_gradient_variety(f, a, cfg.validate.tau_grad));
    }
    if mu.is_empty() {
        return None;
    }
    let recon = mu.moment_matrix(state.m.order()).ok()?;
    let a = state.m.entries();
    let residual = (a - &recon).norm() / a.norm();
    if residual > T::lit(cfg.tau_flat)
        || validate_atoms(&mu, f, mode, state.objective_value, &cfg.validate) == Verdict::Invalid
    {
        return None;
    }
    mu.reconstruction_residual = residual;
    Some(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::atomic_moment_vector;
    use crate::poly::parse_polynomial;

    fn hankel(n: usize, d: usize) -> Arc<HankelStructure> {
        let ix = MonomialIndexer::new(n, 2 * d).unwrap();
        Arc::new(HankelStructure::new(&ix, d).unwrap())
    }

    fn atomic(atoms: &[(f64, Vec<f64>)], n: usize, d: usize) -> MomentMatrix<f64> {
        let ix = Arc::new(MonomialIndexer::new(n, 2 * d).unwrap());
        atomic_moment_vector(atoms, ix).unwrap().moment_matrix(d).unwrap()
    }

    fn motzkin_atoms() -> Vec<(f64, Vec<f64>)> {
        let a = 1.0109;
        [(-a, -a), (-a, a), (a, -a), (a, a)]
            .iter()
            .map(|&(x, y)| (0.25, vec![x, y]))
            .collect()
    }

    #[test]
    fn projection_of_point_evaluation_is_exact() {
        let m = atomic(&[(1.0, vec![0.3, -1.2])], 2, 2);
        let p = project_columns(&m, 1e-4);
        assert_eq!(p.basis_cols.len(), 1);
        assert!(p.distance < 1e-12);
        assert!((&p.b - m.entries()).norm() < 1e-12);
    }

    #[test]
    fn projection_of_identity() {
        let m = MomentMatrix::from_entries(DMatrix::<f64>::identity(3, 3), hankel(2, 1)).unwrap();
        let p = project_columns(&m, 1e-4);
        assert_eq!(p.basis_cols, vec![0]);
        assert!((p.distance - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(p.b.column(0), m.entries().column(0));
        assert!(p.b.columns(1, 2).norm() < 1e-15);
    }

    #[test]
    fn projection_keeps_leading_columns_and_is_idempotent() {
        let m = MomentMatrix::from_entries(
            DMatrix::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + j as f64)),
            hankel(2, 2),
        )
        .unwrap();
        let p = project_columns(&m, 1e-4);
        assert_eq!(p.b.columns(0, 3), m.entries().columns(0, 3));
        let again = MomentMatrix::from_entries(p.b.clone(), hankel(2, 2)).unwrap();
        let q = project_columns(&again, 1e-4);
        assert!(q.distance <= 1e-9 * p.b.norm());
    }

    #[test]
    fn flat_matrix_is_its_own_modification() {
        let m = atomic(&motzkin_atoms(), 2, 3);
        let mt = modified_moment_matrix(&m, 1e-12);
        assert!((&mt.matrix - m.entries()).norm() <= 1e-8 * m.entries().norm());
        assert!(mt.residual <= 1e-8 * m.entries().norm());
    }

    #[test]
    fn modification_ignores_null_space_of_leading_block() {
        // three atoms: the 6×6 leading block of M_3 is singular
        let atoms = vec![(0.2, vec![0.5, 1.0]), (0.3, vec![-1.0, 0.2]), (0.5, vec![0.1, -0.7])];
        let m = atomic(&atoms, 2, 3);
        let mt = modified_moment_matrix(&m, 1e-10);
        let s1 = m.sub_size();
        let a = m.leading_block();
        let eig = crate::linalg::sym_eigen(&a);
        let kernel = eig.vectors.column(s1 - 1).into_owned();
        assert!((&a * &kernel).norm() < 1e-8);
        let shift = DMatrix::from_fn(s1, m.size() - s1, |i, j| kernel[i] * (1.0 + j as f64));
        let w2 = &mt.w + shift;
        let br1 = mt.w.transpose() * &a * &mt.w;
        let br2 = w2.transpose() * &a * &w2;
        assert!((br1 - br2).norm() <= 1e-8 * m.entries().norm());
    }

    #[test]
    fn flatness_of_atomic_and_identity_matrices() {
        let r = flatness_report(&atomic(&motzkin_atoms(), 2, 3), 1e-4);
        assert!(r.is_flat);
        assert_eq!((r.rank_full, r.rank_sub), (4, 4));
        assert!(r.hankel_residual_of_modified < 1e-8);

        let id = MomentMatrix::from_entries(DMatrix::<f64>::identity(10, 10), hankel(2, 3)).unwrap();
        let r = flatness_report(&id, 1e-4);
        assert_eq!((r.rank_full, r.rank_sub), (10, 6));
        assert!(!r.is_flat);
    }

    #[test]
    fn steering_a_flat_matrix_short_circuits() {
        let f = parse_polynomial::<f64>("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1", None).unwrap();
        let m = atomic(&motzkin_atoms(), 2, 3);
        let s = steer_once(&m, &f, 0.5, Mode::Moment, &SteerConfig::default()).unwrap();
        assert_eq!(s.e_value, 0.0);
        assert_eq!(s.flat, Flatness::Exact);
        assert!((s.m.entries() - m.entries()).norm() < 1e-12);
        let expected: f64 = motzkin_atoms().iter().map(|(w, a)| w * f.evaluate(a).unwrap()).sum();
        assert!((s.objective_value - expected).abs() < 1e-10);
    }

    #[test]
    fn steering_reduces_distance_to_projection() {
        let f = parse_polynomial::<f64>("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1", None).unwrap();
        let ix = Arc::new(MonomialIndexer::new(2, 6).unwrap());
        let y = gaussian_moments::<f64>(&ix, &[0.7, 0.8]);
        let m = y.moment_matrix(3).unwrap();
        let before = project_columns(&m, 1e-4).distance;
        let s = steer_once(&m, &f, 1.0, Mode::Moment, &SteerConfig::default()).unwrap();
        assert!(s.e_value >= 0.0 && s.e_value <= 1.0 + 1e-6);
        assert!(s.flat_residual <= before * (1.0 + 1e-6));
        assert!(crate::linalg::min_eigenvalue(s.m.entries()) > -1e-6);
        assert_eq!(s.y.values()[0], 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = parse_polynomial::<f64>("x1^2 + 1", None).unwrap();
        let m = atomic(&[(1.0, vec![0.0])], 1, 1);
        assert!(matches!(
            steer_once(&m, &f, 1.5, Mode::Moment, &SteerConfig::default()),
            Err(SteerError::Lambda(_))
        ));
        let c = parse_polynomial::<f64>("3", None).unwrap();
        assert!(matches!(
            run_algorithm(&c, 0.5, Mode::Moment, &SteerConfig::default()),
            Err(SteerError::Constant)
        ));
        let cfg = SteerConfig {
            degree: Some(1),
            ..SteerConfig::default()
        };
        assert!(matches!(
            run_algorithm(&f, 0.5, Mode::Moment, &cfg),
            Err(SteerError::Degree { k: 1, deg: 2 })
        ));
    }

    #[test]
    fn odd_degree_is_lifted() {
        let f = parse_polynomial::<f64>("x1^3 + x2", None).unwrap();
        assert_eq!(default_degree(&f), 4);
        let g = parse_polynomial::<f64>("x1^2", None).unwrap();
        assert_eq!(default_degree(&g), 2);
    }

    #[test]
    fn convex_quadratic_run() {
        let f = parse_polynomial::<f64>("x1^2 - 2*x1 + 1", None).unwrap();
        let out = run_algorithm(&f, 0.5, Mode::Moment, &SteerConfig::default()).unwrap();
        assert!(out.outer_iterations <= 2);
        assert_eq!(out.stop, StopReason::Flat);
        let u = out.upper_bound.unwrap();
        let mu = out.measure.as_ref().unwrap();
        assert_eq!(mu.len(), 1);
        // U is attained at the extracted point and bounds the minimum from above
        assert!((f.evaluate(&mu.atoms[0]).unwrap() - u).abs() < 1e-6);
        assert!(u >= -1e-8);
        let lo = out.lower_bound.finite().unwrap();
        assert!(lo.abs() < 1e-5);
        assert_eq!(out.certified_interval.map(|(l, _)| l.is_some()), Some(true));
    }

    #[test]
    fn gaussian_moments_of_standard_normal() {
        let ix = Arc::new(MonomialIndexer::new(1, 6).unwrap());
        let y = gaussian_moments::<f64>(&ix, &[1.0]);
        assert_eq!(y.values().as_slice(), &[1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0]);
    }

    #[test]
    fn moment_scale_of_point() {
        let ix = Arc::new(MonomialIndexer::new(2, 4).unwrap());
        let y = MomentVector::<f64>::point_evaluation(ix, &[3.0, -0.5]);
        assert!((moment_scale(&y) - 3.0).abs() < 1e-12);
        let z = y.rescaled(3.0);
        assert!((moment_scale(&z) - 1.0).abs() < 1e-12);
    }
}
