//! Monomial indexing, moment vectors, generalized Hankel (moment) matrices
//! and localizing rows.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::poly::{MultiIndex, PolySpace, Polynomial};
use crate::scalar::Real;

/// Default upper bound on the number of indexed monomials.
pub const DEFAULT_INDEX_CAP: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("number of variables must be at least 1")]
    NoVariables,
    #[error("basis of {nvars} variables up to degree {degree} exceeds the cap of {cap} monomials")]
    TooLarge { nvars: usize, degree: usize, cap: usize },
    #[error("moment vector of degree {have} cannot build a matrix needing degree {need}")]
    DegreeTooSmall { have: usize, need: usize },
    #[error("polynomial of degree {poly} exceeds relaxation degree {k}")]
    PolyDegree { poly: usize, k: usize },
    #[error("variable count mismatch: {expected} expected, got {got}")]
    NvarsMismatch { expected: usize, got: usize },
    #[error("expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("atom list is empty")]
    NoAtoms,
    #[error("atom weights must be positive and sum to 1 (sum = {sum})")]
    BadWeights { sum: f64 },
}

/// Bijection between monomials of degree at most `k` and positions in the
/// graded, `X1`-major basis `1, X1, …, Xn, X1², X1X2, …`.
///
/// Positions of a monomial do not depend on `k`: the basis of degree `k`
/// is a prefix of the basis of degree `k + 1`.
#[derive(Clone, Debug)]
pub struct MonomialIndexer {
    nvars: usize,
    max_degree: usize,
    forward: Vec<MultiIndex>,
    inverse: HashMap<MultiIndex, usize>,
    /// `block_start[t]` is the position of the first monomial of degree `t`;
    /// the last entry equals `len()`.
    block_start: Vec<usize>,
}

impl MonomialIndexer {
    pub fn new(nvars: usize, max_degree: usize) -> Result<Self, MomentError> {
        Self::with_cap(nvars, max_degree, DEFAULT_INDEX_CAP)
    }

    pub fn with_cap(nvars: usize, max_degree: usize, cap: usize) -> Result<Self, MomentError> {
        if nvars == 0 {
            return Err(MomentError::NoVariables);
        }
        let too_large = MomentError::TooLarge {
            nvars,
            degree: max_degree,
            cap,
        };
        match PolySpace::new(nvars, max_degree).s() {
            Some(s) if s <= cap => {}
            _ => return Err(too_large),
        }
        let mut forward = Vec::new();
        let mut block_start = Vec::with_capacity(max_degree + 2);
        let mut scratch = vec![0u32; nvars];
        for t in 0..=max_degree {
            block_start.push(forward.len());
            push_degree_block(&mut scratch, 0, t as u32, &mut forward);
        }
        block_start.push(forward.len());
        let inverse = forward
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Ok(MonomialIndexer {
            nvars,
            max_degree,
            forward,
            inverse,
            block_start,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// `s_t`, the number of monomials of degree at most `t ≤ max_degree`.
    pub fn s(&self, t: usize) -> usize {
        self.block_start[t + 1]
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.forward
    }

    pub fn monomial(&self, pos: usize) -> &MultiIndex {
        &self.forward[pos]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.inverse.get(alpha).copied()
    }

    /// Position of `α(i) + α(j)`, if within the indexed degree.
    pub fn sum_position(&self, i: usize, j: usize) -> Option<usize> {
        self.position(&self.forward[i].add(&self.forward[j]))
    }

    /// `V_t(x)`: every basis monomial of degree at most `t` evaluated at `x`.
    pub fn evaluate_basis<T: Real>(&self, x: &[T], t: usize) -> DVector<T> {
        assert_eq!(x.len(), self.nvars);
        let s = self.s(t);
        DVector::from_iterator(
            s,
            self.forward[..s].iter().map(|alpha| {
                alpha
                    .exponents()
                    .iter()
                    .zip(x)
                    .fold(T::one(), |acc, (&e, &xi)| acc * xi.powi(e as i32))
            }),
        )
    }
}

/// Appends every exponent vector with `Σ α[var..] = rem` in `X1`-major order.
fn push_degree_block(scratch: &mut [u32], var: usize, rem: u32, out: &mut Vec<MultiIndex>) {
    if var + 1 == scratch.len() {
        scratch[var] = rem;
        out.push(MultiIndex::new(scratch.to_vec()));
        return;
    }
    for e in (0..=rem).rev() {
        scratch[var] = e;
        push_degree_block(scratch, var + 1, rem - e, out);
    }
    scratch[var] = 0;
}

/// Index-sum table of a moment matrix of order `d`: entry `(i, j)` reads the
/// moment at `position(α(i) + α(j))`.
#[derive(Clone, Debug)]
pub struct HankelStructure {
    nvars: usize,
    order: usize,
    size: usize,
    sub_size: usize,
    /// Column-major `size × size` table of moment positions.
    table: Vec<usize>,
    /// For each moment position `< s_{2d}`, the `(i, j)` cells with `i ≤ j` reading it.
    classes: Vec<Vec<(usize, usize)>>,
}

impl HankelStructure {
    pub fn new(indexer: &MonomialIndexer, d: usize) -> Result<Self, MomentError> {
        if indexer.max_degree() < 2 * d {
            return Err(MomentError::DegreeTooSmall {
                have: indexer.max_degree(),
                need: 2 * d,
            });
        }
        let size = indexer.s(d);
        let sub_size = if d == 0 { 0 } else { indexer.s(d - 1) };
        let mut table = vec![0; size * size];
        let mut classes = vec![Vec::new(); indexer.s(2 * d)];
        for j in 0..size {
            for i in 0..size {
                let p = indexer
                    .sum_position(i, j)
                    .expect("sum of two degree-d monomials is indexed");
                table[i + j * size] = p;
                if i <= j {
                    classes[p].push((i, j));
                }
            }
        }
        Ok(HankelStructure {
            nvars: indexer.nvars(),
            order: d,
            size,
            sub_size,
            table,
            classes,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `s_d`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// `s_{d-1}`, the size of the leading block `M_{d-1}`.
    pub fn sub_size(&self) -> usize {
        self.sub_size
    }

    /// Number of distinct moments appearing in the matrix, `s_{2d}`.
    pub fn num_moments(&self) -> usize {
        self.classes.len()
    }

    pub fn position(&self, i: usize, j: usize) -> usize {
        self.table[i + j * self.size]
    }

    /// Upper-triangular cells sharing the moment at position `p`.
    pub fn class(&self, p: usize) -> &[(usize, usize)] {
        &self.classes[p]
    }

    pub fn classes(&self) -> &[Vec<(usize, usize)>] {
        &self.classes
    }

    /// Fills the matrix from a slice of moments (at least `s_{2d}` long).
    pub fn assemble<T: Real>(&self, values: &[T]) -> DMatrix<T> {
        DMatrix::from_fn(self.size, self.size, |i, j| values[self.position(i, j)])
    }

    /// Largest spread `max − min` over cells sharing an index sum; `0` iff the
    /// matrix is exactly generalized Hankel (given symmetry).
    pub fn residual<T: Real>(&self, mat: &DMatrix<T>) -> Result<T, MomentError> {
        if mat.nrows() != self.size || mat.ncols() != self.size {
            return Err(MomentError::LengthMismatch {
                expected: self.size,
                got: mat.nrows().max(mat.ncols()),
            });
        }
        let mut worst = T::zero();
        for class in &self.classes {
            let mut lo = T::max_value().unwrap();
            let mut hi = T::min_value().unwrap();
            for &(i, j) in class {
                for v in [mat[(i, j)], mat[(j, i)]] {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if !class.is_empty() {
                worst = worst.max(hi - lo);
            }
        }
        Ok(worst)
    }

    /// Reads the moments back from a (Hankel) matrix by averaging each class.
    pub fn moments_of<T: Real>(&self, mat: &DMatrix<T>) -> Vec<T> {
        self.classes
            .iter()
            .map(|class| {
                let sum = class
                    .iter()
                    .fold(T::zero(), |acc, &(i, j)| acc + mat[(i, j)]);
                sum / T::from_usize_lossy(class.len())
            })
            .collect()
    }
}

/// Truncated moment sequence `y = (y_α)_{|α| ≤ k}` in basis order.
#[derive(Clone, Debug)]
pub struct MomentVector<T: Real> {
    indexer: Arc<MonomialIndexer>,
    values: DVector<T>,
}

impl<T: Real> MomentVector<T> {
    pub fn new(indexer: Arc<MonomialIndexer>, values: DVector<T>) -> Result<Self, MomentError> {
        if values.len() != indexer.len() {
            return Err(MomentError::LengthMismatch {
                expected: indexer.len(),
                got: values.len(),
            });
        }
        Ok(MomentVector { indexer, values })
    }

    /// `y_0 = 1`, all other moments zero: the moments of the Dirac mass at the origin.
    pub fn unit(indexer: Arc<MonomialIndexer>) -> Self {
        let mut values = DVector::zeros(indexer.len());
        values[0] = T::one();
        MomentVector { indexer, values }
    }

    /// Moments of the Dirac mass at `x`: `y_α = x^α`.
    pub fn point_evaluation(indexer: Arc<MonomialIndexer>, x: &[T]) -> Self {
        let values = indexer.evaluate_basis(x, indexer.max_degree());
        MomentVector { indexer, values }
    }

    pub fn indexer(&self) -> &Arc<MonomialIndexer> {
        &self.indexer
    }

    pub fn degree(&self) -> usize {
        self.indexer.max_degree()
    }

    pub fn values(&self) -> &DVector<T> {
        &self.values
    }

    pub fn into_values(self) -> DVector<T> {
        self.values
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<T> {
        self.indexer.position(alpha).map(|p| self.values[p])
    }

    /// `Σ_α p_α y_α`.
    pub fn apply(&self, p: &Polynomial<T>) -> Result<T, MomentError> {
        linear_form(p, &self.indexer).map(|row| row.dot(&self.values))
    }

    /// Moments of the measure pushed forward by `x ↦ x / c`: `y_α / c^{|α|}`.
    pub fn rescaled(&self, c: T) -> Self {
        let inv = T::one() / c;
        let values = DVector::from_fn(self.values.len(), |i, _| {
            self.values[i] * inv.powi(self.indexer.monomial(i).degree() as i32)
        });
        MomentVector {
            indexer: Arc::clone(&self.indexer),
            values,
        }
    }

    /// `M_d(y)`.
    pub fn moment_matrix(&self, d: usize) -> Result<MomentMatrix<T>, MomentError> {
        let hankel = Arc::new(HankelStructure::new(&self.indexer, d)?);
        Ok(self.moment_matrix_with(&hankel))
    }

    /// `M_d(y)` using a precomputed index-sum table.
    pub fn moment_matrix_with(&self, hankel: &Arc<HankelStructure>) -> MomentMatrix<T> {
        MomentMatrix {
            entries: hankel.assemble(self.values.as_slice()),
            hankel: Arc::clone(hankel),
        }
    }
}

/// Coefficients of `p` laid out on the moment positions of `indexer`.
pub fn linear_form<T: Real>(
    p: &Polynomial<T>,
    indexer: &MonomialIndexer,
) -> Result<DVector<T>, MomentError> {
    if p.nvars() != indexer.nvars() {
        return Err(MomentError::NvarsMismatch {
            expected: indexer.nvars(),
            got: p.nvars(),
        });
    }
    let mut row = DVector::zeros(indexer.len());
    for (alpha, &c) in p.terms() {
        let pos = indexer.position(alpha).ok_or(MomentError::PolyDegree {
            poly: p.degree() as usize,
            k: indexer.max_degree(),
        })?;
        row[pos] += c;
    }
    Ok(row)
}

/// Symmetric generalized Hankel matrix `M_d(y)` together with its index table.
#[derive(Clone, Debug)]
pub struct MomentMatrix<T: Real> {
    entries: DMatrix<T>,
    hankel: Arc<HankelStructure>,
}

impl<T: Real> MomentMatrix<T> {
    /// Wraps an arbitrary square matrix of the right size (not checked for Hankel structure).
    pub fn from_entries(
        entries: DMatrix<T>,
        hankel: Arc<HankelStructure>,
    ) -> Result<Self, MomentError> {
        if entries.nrows() != hankel.size() || entries.ncols() != hankel.size() {
            return Err(MomentError::LengthMismatch {
                expected: hankel.size(),
                got: entries.nrows(),
            });
        }
        Ok(MomentMatrix { entries, hankel })
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn hankel(&self) -> &Arc<HankelStructure> {
        &self.hankel
    }

    pub fn order(&self) -> usize {
        self.hankel.order()
    }

    pub fn size(&self) -> usize {
        self.hankel.size()
    }

    /// `s_{d-1}`.
    pub fn sub_size(&self) -> usize {
        self.hankel.sub_size()
    }

    /// Leading `s_{d-1} × s_{d-1}` block `A = M_{d-1}`.
    pub fn leading_block(&self) -> DMatrix<T> {
        let s = self.sub_size();
        self.entries.view((0, 0), (s, s)).into_owned()
    }

    pub fn hankel_residual(&self) -> T {
        self.hankel
            .residual(&self.entries)
            .expect("matrix size matches its table")
    }
}

/// Spread of `mat` over the index-sum classes of an order-`d` moment matrix.
pub fn hankel_residual<T: Real>(
    mat: &DMatrix<T>,
    d: usize,
    indexer: &MonomialIndexer,
) -> Result<T, MomentError> {
    HankelStructure::new(indexer, d)?.residual(mat)
}

/// Moments `y_α = Σ λ_i a_i^α` of the atomic measure `Σ λ_i δ_{a_i}`.
pub fn atomic_moment_vector<T: Real>(
    atoms: &[(T, Vec<T>)],
    indexer: Arc<MonomialIndexer>,
) -> Result<MomentVector<T>, MomentError> {
    if atoms.is_empty() {
        return Err(MomentError::NoAtoms);
    }
    let sum = atoms.iter().fold(T::zero(), |acc, (w, _)| acc + *w);
    let weights_ok = atoms.iter().all(|(w, _)| *w > T::zero())
        && (sum - T::one()).abs() <= T::lit(1e-10).max(T::eps() * T::lit(16.0));
    if !weights_ok {
        return Err(MomentError::BadWeights {
            sum: sum.to_f64_lossy(),
        });
    }
    let k = indexer.max_degree();
    let mut values = DVector::zeros(indexer.len());
    for (w, a) in atoms {
        if a.len() != indexer.nvars() {
            return Err(MomentError::NvarsMismatch {
                expected: indexer.nvars(),
                got: a.len(),
            });
        }
        values.axpy(*w, &indexer.evaluate_basis(a, k), T::one());
    }
    Ok(MomentVector { indexer, values })
}

/// Linear forms `y ↦ L_y(p · X^β)` for every `|β| ≤ k − deg p`.
#[derive(Clone, Debug)]
pub struct LocalizingRows<T: Real> {
    /// `d_p = k − deg p`.
    pub d_p: usize,
    /// `s_{d_p} × s_k` coefficient matrix acting on moment vectors.
    pub rows: DMatrix<T>,
}

pub fn localizing_rows<T: Real>(
    p: &Polynomial<T>,
    k: usize,
    indexer: &MonomialIndexer,
) -> Result<LocalizingRows<T>, MomentError> {
    let deg = p.degree() as usize;
    if deg > k || k > indexer.max_degree() {
        return Err(MomentError::PolyDegree { poly: deg, k });
    }
    if p.nvars() != indexer.nvars() {
        return Err(MomentError::NvarsMismatch {
            expected: indexer.nvars(),
            got: p.nvars(),
        });
    }
    let d_p = k - deg;
    let nrows = indexer.s(d_p);
    let ncols = indexer.s(k);
    let mut rows = DMatrix::zeros(nrows, ncols);
    for r in 0..nrows {
        let beta = indexer.monomial(r);
        for (gamma, &c) in p.terms() {
            let pos = indexer
                .position(&beta.add(gamma))
                .expect("degree bounded by k");
            rows[(r, pos)] += c;
        }
    }
    Ok(LocalizingRows { d_p, rows })
}
