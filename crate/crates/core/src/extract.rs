//! Recovery of an atomic measure `Σ λ_i δ_{a_i}` from a flat moment matrix
//! through truncated multiplication operators, and validation of the atoms
//! against the objective.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{column_threshold, nnls, sym_eigen, symmetrize, PivotedQr};
use crate::moment::{MomentError, MomentMatrix, MonomialIndexer};
use crate::poly::{MultiIndex, Polynomial};
use crate::scalar::Real;
use crate::sdp::Mode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("matrix of order 0 carries no multiplication operators")]
    ZeroOrder,
    #[error("rank {rank} outside 1..={max}")]
    Rank { rank: usize, max: usize },
    #[error("leading columns have numerical rank {found}, fewer than the requested {rank}")]
    DeficientBasis { rank: usize, found: usize },
    #[error("multiplication operators are inconsistent (relative asymmetry {0:e})")]
    Inconsistent(f64),
    #[error("no atom kept a positive weight")]
    NoWeight,
    #[error(transparent)]
    Moment(#[from] MomentError),
}

#[derive(Clone, Debug)]
pub struct ExtractConfig {
    /// Seed of the random combination of multiplication operators.
    pub seed: u64,
    /// Atoms with a smaller weight are dropped.
    pub tau_weight: f64,
    /// Largest accepted relative asymmetry of a multiplication operator.
    pub max_asymmetry: f64,
    /// Relative pivot threshold when choosing the basis monomials.
    pub rcond: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            seed: 0,
            tau_weight: 1e-6,
            max_asymmetry: 1e-1,
            rcond: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomInfo<T> {
    /// `f(a_i)`, once [`AtomicMeasure::evaluate`] has been called.
    pub f_value: Option<T>,
    /// `‖∇f(a_i)‖`, once [`AtomicMeasure::evaluate`] has been called.
    pub grad_norm: Option<T>,
    /// `λ_i ‖v_d(a_i)‖² / Σ_j λ_j ‖v_d(a_j)‖²`: the atom's share of the trace.
    pub reconstruction_share: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure<T: Real> {
    pub atoms: Vec<Vec<T>>,
    pub weights: Vec<T>,
    pub per_atom: Vec<AtomInfo<T>>,
    /// `‖M − Σ λ_i v_d v_dᵀ(a_i)‖_F / ‖M‖_F` against the input matrix.
    pub reconstruction_residual: T,
    /// `max_{l,m} ‖N_l N_m − N_m N_l‖_F` of the symmetrized operators.
    pub commutation_residual: T,
    /// `max_l ‖N_l − N_lᵀ‖_F / max(‖N_l‖_F, 1)` before symmetrization.
    pub asymmetry: T,
    /// Number of candidate atoms dropped for a small weight.
    pub pruned: usize,
}

impl<T: Real> AtomicMeasure<T> {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Fills `f_value` and `grad_norm` of every atom.
    pub fn evaluate(&mut self, f: &Polynomial<T>) {
        let grad = f.gradient();
        for (a, info) in self.atoms.iter().zip(&mut self.per_atom) {
            info.f_value = f.evaluate(a).ok();
            info.grad_norm = grad_norm(&grad, a);
        }
    }

    /// `Σ λ_i f(a_i)`.
    pub fn weighted_value(&self, f: &Polynomial<T>) -> Option<T> {
        self.atoms
            .iter()
            .zip(&self.weights)
            .try_fold(T::zero(), |acc, (a, &w)| f.evaluate(a).ok().map(|v| acc + w * v))
    }

    /// `Σ λ_i v_d v_dᵀ(a_i)` with `v_d` the monomial vector of degree `≤ d`.
    pub fn moment_matrix(&self, d: usize) -> Result<DMatrix<T>, MomentError> {
        let n = self.atoms.first().map_or(0, |a| a.len());
        let ix = MonomialIndexer::new(n, d)?;
        let s = ix.len();
        let mut m = DMatrix::zeros(s, s);
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            let v = ix.evaluate_basis(a, d);
            m.ger(w, &v, &v, T::one());
        }
        Ok(m)
    }

    /// The measure pushed forward by `x ↦ c·x`.
    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            for v in a.iter_mut() {
                *v *= c;
            }
        }
        for info in &mut out.per_atom {
            info.f_value = None;
            info.grad_norm = None;
        }
        out
    }

    /// Keeps the atoms for which `keep` holds and renormalizes the weights.
    pub fn retain(&mut self, mut keep: impl FnMut(&[T], &AtomInfo<T>) -> bool) {
        let flags: Vec<bool> = self
            .atoms
            .iter()
            .zip(&self.per_atom)
            .map(|(a, i)| keep(a, i))
            .collect();
        let mut it = flags.iter();
        self.atoms.retain(|_| *it.next().unwrap());
        let mut it = flags.iter();
        self.weights.retain(|_| *it.next().unwrap());
        let mut it = flags.iter();
        self.per_atom.retain(|_| *it.next().unwrap());
        let sum = self.weights.iter().fold(T::zero(), |a, &w| a + w);
        if sum > T::zero() {
            for w in &mut self.weights {
                *w /= sum;
            }
        }
    }
}

fn grad_norm<T: Real>(grad: &[Polynomial<T>], a: &[T]) -> Option<T> {
    let mut sq = T::zero();
    for g in grad {
        let v = g.evaluate(a).ok()?;
        sq += v * v;
    }
    Some(sq.sqrt())
}

/// Extracts `rank` atoms from `m`, which should be flat (or the modified
/// matrix of an approximately flat one).
///
/// With `M ≈ V Vᵀ` from the leading `rank` eigenpairs, pivoted QR picks basis
/// monomials of degree `≤ d−1` among the rows of `V`. The multiplication
/// operator of `X_l` is `N_l = V_B⁻¹ V_{B+e_l}`; for an atomic `M` it equals
/// `Oᵀ diag(a_{·l}) O` with `O` orthogonal, so the `N_l` are symmetric and
/// commute. The eigenvectors of a random convex combination of them give the
/// atoms through Rayleigh quotients, and the weights come from non-negative
/// least squares on the moments of degree `≤ d`.
pub fn extract_atoms<T: Real>(
    m: &MomentMatrix<T>,
    rank: usize,
    cfg: &ExtractConfig,
) -> Result<AtomicMeasure<T>, ExtractError> {
    let d = m.order();
    if d == 0 {
        return Err(ExtractError::ZeroOrder);
    }
    let s1 = m.sub_size();
    if rank == 0 || rank > s1 {
        return Err(ExtractError::Rank { rank, max: s1 });
    }
    let n = m.hankel().nvars();
    let ix = MonomialIndexer::new(n, d)?;
    let mm = m.entries();

    let eig = sym_eigen(mm);
    let mut v = DMatrix::zeros(mm.nrows(), rank);
    for c in 0..rank {
        let lam = eig.values[c].max(T::zero()).sqrt();
        v.set_column(c, &(eig.vectors.column(c) * lam));
    }
    let lead_t = v.rows(0, s1).transpose();
    let qr = PivotedQr::new(&lead_t, column_threshold(&lead_t, T::lit(cfg.rcond)));
    if qr.rank < rank {
        return Err(ExtractError::DeficientBasis {
            rank,
            found: qr.rank,
        });
    }
    let basis: Vec<usize> = qr.perm[..rank].to_vec();
    let vb = v.select_rows(basis.iter());
    let Some(lu) = Some(vb.lu()).filter(|lu| lu.is_invertible()) else {
        return Err(ExtractError::DeficientBasis { rank, found: 0 });
    };

    let mut ops = Vec::with_capacity(n);
    let mut asymmetry = T::zero();
    for l in 0..n {
        let unit = MultiIndex::unit(n, l);
        let shifted: Vec<usize> = basis
            .iter()
            .map(|&b| {
                ix.position(&ix.monomial(b).add(&unit))
                    .expect("degree at most d")
            })
            .collect();
        let op = lu
            .solve(&v.select_rows(shifted.iter()))
            .expect("invertible basis block");
        let scale = op.norm().max(T::one());
        asymmetry = asymmetry.max((&op - op.transpose()).norm() / scale);
        ops.push(symmetrize(&op));
    }
    if asymmetry > T::lit(cfg.max_asymmetry) {
        return Err(ExtractError::Inconsistent(asymmetry.to_f64_lossy()));
    }

    let mut commutation_residual = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            let c = (&ops[i] * &ops[j] - &ops[j] * &ops[i]).norm();
            commutation_residual = commutation_residual.max(c);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut coef: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(0.1..1.0))).collect();
    let total = coef.iter().fold(T::zero(), |a, &c| a + c);
    for c in &mut coef {
        *c /= total;
    }
    let mut comb = DMatrix::zeros(rank, rank);
    for (c, op) in coef.iter().zip(&ops) {
        comb += op * *c;
    }
    let q = sym_eigen(&comb).vectors;

    let mut candidates: Vec<Vec<T>> = (0..rank)
        .map(|i| {
            let qi = q.column(i);
            ops.iter().map(|op| qi.dot(&(op * qi))).collect()
        })
        .collect();
    candidates.sort_by(|a, b| lex_cmp(a, b));

    // moments of degree ≤ d sit on the first row
    let s = ix.len();
    let y = DVector::from_fn(s, |j, _| mm[(0, j)]);
    let mut vand = DMatrix::zeros(s, rank);
    for (i, a) in candidates.iter().enumerate() {
        vand.set_column(i, &ix.evaluate_basis(a, d));
    }
    let w = nnls(&vand, &y);

    let tau_weight = T::lit(cfg.tau_weight);
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (a, &wi) in candidates.into_iter().zip(w.iter()) {
        if wi >= tau_weight {
            atoms.push(a);
            weights.push(wi);
        }
    }
    if atoms.is_empty() {
        return Err(ExtractError::NoWeight);
    }
    let pruned = rank - atoms.len();
    let sum = weights.iter().fold(T::zero(), |a, &w| a + w);
    for w in &mut weights {
        *w /= sum;
    }

    let mut measure = AtomicMeasure {
        per_atom: Vec::new(),
        atoms,
        weights,
        reconstruction_residual: T::zero(),
        commutation_residual,
        asymmetry,
        pruned,
    };
    let recon = measure.moment_matrix(d)?;
    measure.reconstruction_residual = (mm - &recon).norm() / mm.norm().max(T::eps());
    let shares: Vec<T> = measure
        .atoms
        .iter()
        .zip(&measure.weights)
        .map(|(a, &w)| w * ix.evaluate_basis(a, d).norm_squared())
        .collect();
    let trace = shares.iter().fold(T::zero(), |a, &v| a + v).max(T::eps());
    measure.per_atom = shares
        .into_iter()
        .map(|v| AtomInfo {
            f_value: None,
            grad_norm: None,
            reconstruction_share: v / trace,
        })
        .collect();
    Ok(measure)
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Every atom attains `U`: `P* ∈ [lower bound, U]` with the atoms as minimizer candidates.
    CertifiedInterval,
    /// The measure reproduces `U`, so `U ≥ P*`, but the atoms disagree on the value
    /// (or, for the gradient variety, are not critical points).
    UpperBoundOnly,
    /// The measure does not reproduce `U`.
    Invalid,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::CertifiedInterval => "certified_interval",
            Verdict::UpperBoundOnly => "upper_bound_only",
            Verdict::Invalid => "invalid",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct ValidateConfig {
    /// `|f(a_i) − U| ≤ tau_val·(1 + |U|)`.
    pub tau_val: f64,
    /// `‖∇f(a)‖ ≤ tau_grad·(1 + ‖a‖)^{deg f − 1}`.
    pub tau_grad: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            tau_val: 1e-2,
            tau_grad: 1e-4,
        }
    }
}

/// Whether `a` is numerically a critical point of `f`.
pub fn on_gradient_variety<T: Real>(f: &Polynomial<T>, a: &[T], tau_grad: f64) -> bool {
    let grad = f.gradient();
    let Some(g) = grad_norm(&grad, a) else {
        return false;
    };
    let norm = a.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
    let deg = f.degree().max(1) as i32;
    g <= T::lit(tau_grad) * (T::one() + norm).powi(deg - 1)
}

pub fn validate_atoms<T: Real>(
    measure: &AtomicMeasure<T>,
    f: &Polynomial<T>,
    mode: Mode,
    upper: T,
    cfg: &ValidateConfig,
) -> Verdict {
    let tol = T::lit(cfg.tau_val) * (T::one() + upper.abs());
    let Some(mean) = measure.weighted_value(f) else {
        return Verdict::Invalid;
    };
    if measure.is_empty() || (mean - upper).abs() > tol {
        return Verdict::Invalid;
    }
    let all_at_u = measure
        .atoms
        .iter()
        .all(|a| f.evaluate(a).is_ok_and(|v| (v - upper).abs() <= tol));
    let critical = mode == Mode::Moment
        || measure
            .atoms
            .iter()
            .all(|a| on_gradient_variety(f, a, cfg.tau_grad));
    if all_at_u && critical {
        Verdict::CertifiedInterval
    } else {
        Verdict::UpperBoundOnly
    }
}
