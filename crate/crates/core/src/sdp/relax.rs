//! Moment (Lasserre) relaxations and their gradient-variety strengthening.
//!
//! Decision variables are the moments `y_α` for `0 < |α| ≤ k` in basis order;
//! the constant moment `y_0 = 1` is substituted into the data.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::problem::{NonnegBlock, PsdBlock, SdpProblem};
use crate::moment::{
    linear_form, localizing_rows, HankelStructure, MomentError, MomentVector, MonomialIndexer,
};
use crate::poly::Polynomial;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("polynomial degree {poly} exceeds relaxation degree {k}")]
    Degree { poly: usize, k: usize },
    #[error(transparent)]
    Moment(#[from] MomentError),
}

/// Which relaxation (and which steering program) to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Plain moment relaxation.
    Moment,
    /// Moment relaxation restricted to the gradient variety.
    Nds,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Moment => "moment",
            Mode::Nds => "nds",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "moment" => Ok(Mode::Moment),
            "nds" => Ok(Mode::Nds),
            other => Err(format!("unknown mode {other:?} (expected moment or nds)")),
        }
    }
}

/// An assembled relaxation together with the indexing needed to read its solution.
#[derive(Clone, Debug)]
pub struct MomentRelaxation<T: Real> {
    pub problem: SdpProblem<T>,
    pub indexer: Arc<MonomialIndexer>,
    pub hankel: Arc<HankelStructure>,
    /// Relaxation degree `k`.
    pub degree: usize,
}

impl<T: Real> MomentRelaxation<T> {
    /// Matrix order `d = ⌊k/2⌋`.
    pub fn order(&self) -> usize {
        self.hankel.order()
    }

    /// Moment vector `(1, x)` for a decision vector `x`.
    pub fn moment_vector(&self, x: &DVector<T>) -> MomentVector<T> {
        let s = self.indexer.len();
        let values = DVector::from_fn(s, |i, _| if i == 0 { T::one() } else { x[i - 1] });
        MomentVector::new(Arc::clone(&self.indexer), values).expect("length matches the indexer")
    }

    /// Decision vector of a moment vector (drops `y_0`).
    pub fn decision_vector(y: &MomentVector<T>) -> DVector<T> {
        y.values().rows(1, y.values().len() - 1).into_owned()
    }

    /// Adds `trace M_d(y) ≤ bound`.
    pub fn add_trace_bound(&mut self, bound: T) {
        let m = self.problem.nvars();
        let mut coef = DMatrix::zeros(1, m);
        let mut constant = bound;
        for i in 0..self.hankel.size() {
            let p = self.hankel.position(i, i);
            if p == 0 {
                constant -= T::one();
            } else {
                coef[(0, p - 1)] -= T::one();
            }
        }
        self.problem
            .add_nonneg(NonnegBlock {
                constant: DVector::from_element(1, constant),
                coef,
            })
            .expect("dimensions built from the same problem");
    }
}

/// `M_d(y) ⪰ 0` as an affine block over `nvars` decision variables, where the
/// moment at position `p > 0` is variable `first_var + p − 1`.
pub fn moment_psd_block<T: Real>(
    hankel: &HankelStructure,
    first_var: usize,
) -> PsdBlock<T> {
    let n = hankel.size();
    let mut constant = DMatrix::zeros(n, n);
    let mut terms = Vec::new();
    for (p, class) in hankel.classes().iter().enumerate() {
        let mut f = DMatrix::zeros(n, n);
        for &(i, j) in class {
            f[(i, j)] = T::one();
            f[(j, i)] = T::one();
        }
        if p == 0 {
            constant = f;
        } else {
            terms.push((first_var + p - 1, f));
        }
    }
    PsdBlock {
        size: n,
        constant,
        terms,
    }
}

/// Relaxation order used for degree `k`.
pub fn relaxation_order(k: usize) -> usize {
    k / 2
}

pub fn assemble_moment_relaxation<T: Real>(
    f: &Polynomial<T>,
    k: usize,
) -> Result<MomentRelaxation<T>, RelaxError> {
    let deg = f.degree() as usize;
    if deg > k {
        return Err(RelaxError::Degree { poly: deg, k });
    }
    let indexer = Arc::new(MonomialIndexer::new(f.nvars(), k)?);
    let hankel = Arc::new(HankelStructure::new(&indexer, relaxation_order(k))?);
    let m = indexer.len() - 1;
    let mut problem = SdpProblem::new(m);
    let row = linear_form(f, &indexer)?;
    problem
        .set_objective(row.rows(1, m).into_owned(), row[0])
        .expect("objective length");
    problem
        .add_psd(moment_psd_block(&hankel, 0))
        .expect("moment block is symmetric");
    Ok(MomentRelaxation {
        problem,
        indexer,
        hankel,
        degree: k,
    })
}

/// Localizing rows `L_y(∂f/∂X_i · X^β) = 0` for every `i` and `|β| ≤ k − deg ∂f/∂X_i`,
/// with exact duplicates removed; each entry is `(coefficients on y_1.., constant)`.
pub fn gradient_equalities<T: Real>(
    f: &Polynomial<T>,
    indexer: &MonomialIndexer,
    k: usize,
) -> Result<Vec<(DVector<T>, T)>, RelaxError> {
    let m = indexer.len() - 1;
    let mut rows: Vec<(DVector<T>, T)> = Vec::new();
    for g in f.gradient() {
        if g.is_zero() {
            continue;
        }
        let loc = localizing_rows(&g, k, indexer)?;
        for r in 0..loc.rows.nrows() {
            let full = loc.rows.row(r);
            let coef = DVector::from_fn(m, |i, _| full[i + 1]);
            let constant = full[0];
            if rows.iter().any(|(c, k0)| *k0 == constant && *c == coef) {
                continue;
            }
            rows.push((coef, constant));
        }
    }
    Ok(rows)
}

pub fn assemble_nds_relaxation<T: Real>(
    f: &Polynomial<T>,
    k: usize,
) -> Result<MomentRelaxation<T>, RelaxError> {
    let mut relax = assemble_moment_relaxation(f, k)?;
    for (coef, constant) in gradient_equalities(f, &relax.indexer, k)? {
        relax
            .problem
            .add_equality(coef, constant)
            .expect("row length matches the decision vector");
    }
    Ok(relax)
}

pub fn assemble_relaxation<T: Real>(
    f: &Polynomial<T>,
    k: usize,
    mode: Mode,
) -> Result<MomentRelaxation<T>, RelaxError> {
    match mode {
        Mode::Moment => assemble_moment_relaxation(f, k),
        Mode::Nds => assemble_nds_relaxation(f, k),
    }
}
