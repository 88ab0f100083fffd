//! Dense linear algebra helpers: rank-revealing QR, least squares,
//! non-negative least squares and symmetric eigenvalue utilities.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::scalar::Real;

/// Householder QR with column pivoting, stopped at the numerical rank.
///
/// `A[:, perm] ≈ Q R` where `Q` has `rank` orthonormal columns.
#[derive(Clone, Debug)]
pub struct PivotedQr<T: Real> {
    /// Householder vectors (column `k` acts on rows `k..m`).
    reflectors: Vec<DVector<T>>,
    nrows: usize,
    /// Upper trapezoidal `rank × ncols`, columns in pivoted order.
    pub r: DMatrix<T>,
    /// `perm[k]` is the original index of the `k`-th pivot column.
    pub perm: Vec<usize>,
    pub rank: usize,
}

impl<T: Real> PivotedQr<T> {
    /// Factorizes `a`, accepting a pivot while its remaining column norm exceeds `threshold`.
    pub fn new(a: &DMatrix<T>, threshold: T) -> Self {
        let (m, n) = a.shape();
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::new();
        let steps = m.min(n);
        let mut rank = 0;
        for k in 0..steps {
            // Remaining column norms are recomputed: the matrices here are small.
            let (mut best, mut best_norm) = (k, -T::one());
            for j in k..n {
                let nrm = work.view((k, j), (m - k, 1)).norm();
                if nrm > best_norm {
                    best = j;
                    best_norm = nrm;
                }
            }
            if !(best_norm > threshold) {
                break;
            }
            work.swap_columns(k, best);
            perm.swap(k, best);

            let mut v: DVector<T> = work.column(k).rows_range(k..).into_owned();
            let alpha = if v[0] >= T::zero() { -best_norm } else { best_norm };
            v[0] -= alpha;
            let vnorm = v.norm();
            if vnorm > T::zero() {
                v /= vnorm;
                for j in k..n {
                    let mut col = work.column_mut(j);
                    let mut col = col.rows_range_mut(k..);
                    let dot = v.dot(&col);
                    col.axpy(-(dot + dot), &v, T::one());
                }
            }
            for i in k + 1..m {
                work[(i, k)] = T::zero();
            }
            reflectors.push(v);
            rank = k + 1;
        }
        let r = work.rows(0, rank).into_owned();
        PivotedQr {
            reflectors,
            nrows: m,
            r,
            perm,
            rank,
        }
    }

    /// Original indices of the `rank` selected columns, in pivot order.
    pub fn selected(&self) -> &[usize] {
        &self.perm[..self.rank]
    }

    /// The full `m × m` orthogonal factor; columns `rank..m` span the
    /// orthogonal complement of the selected columns.
    pub fn q_full(&self) -> DMatrix<T> {
        self.apply_q(DMatrix::identity(self.nrows, self.nrows))
    }

    fn apply_q(&self, mut q: DMatrix<T>) -> DMatrix<T> {
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            for j in 0..q.ncols() {
                let mut col = q.column_mut(j);
                let mut col = col.rows_range_mut(k..);
                let dot = v.dot(&col);
                col.axpy(-(dot + dot), v, T::one());
            }
        }
        q
    }

    /// The `m × rank` matrix `Q` with orthonormal columns spanning the selected columns.
    pub fn q(&self) -> DMatrix<T> {
        let mut q = DMatrix::zeros(self.nrows, self.rank);
        for c in 0..self.rank {
            q[(c, c)] = T::one();
        }
        self.apply_q(q)
    }
}

/// Relative pivot threshold for [`PivotedQr::new`]: `rel · max column norm`.
pub fn column_threshold<T: Real>(a: &DMatrix<T>, rel: T) -> T {
    let max = a
        .column_iter()
        .map(|c| c.norm())
        .fold(T::zero(), |acc, v| acc.max(v));
    rel * max
}

/// Orthogonal projection of the columns of `b` onto the span of the columns of `q`
/// (which must be orthonormal).
pub fn project_onto<T: Real>(q: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    if q.ncols() == 0 {
        return DMatrix::zeros(b.nrows(), b.ncols());
    }
    q * (q.transpose() * b)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// decreasing order.
#[derive(Clone, Debug)]
pub struct SortedEigen<T: Real> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
}

pub fn sym_eigen<T: Real>(a: &DMatrix<T>) -> SortedEigen<T> {
    let sym = symmetrize(a);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    SortedEigen { values, vectors }
}

pub fn symmetrize<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::lit(0.5)
}

pub fn min_eigenvalue<T: Real>(a: &DMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    SymmetricEigen::new(symmetrize(a))
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap(), |acc, &v| acc.min(v))
}

/// Number of eigenvalues `≥ cutoff`.
pub fn rank_above<T: Real>(values: &DVector<T>, cutoff: T) -> usize {
    values.iter().filter(|&&v| v >= cutoff).count()
}

/// Minimum-norm least-squares solution of `a x = b` with singular values
/// below `rcond · σ_max` treated as zero.
pub fn lstsq<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, rcond: T) -> DMatrix<T> {
    if a.is_empty() {
        return DMatrix::zeros(a.ncols(), b.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd
        .singular_values
        .iter()
        .fold(T::zero(), |acc, &v| acc.max(v));
    let eps = (rcond * smax).max(T::eps() * T::eps() * T::eps());
    svd.solve(b, eps).expect("both factors were computed")
}

/// Minimum-norm least-squares solution for a vector right-hand side.
pub fn lstsq_vec<T: Real>(a: &DMatrix<T>, b: &DVector<T>, rcond: T) -> DVector<T> {
    let bm = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    lstsq(a, &bm, rcond).column(0).into_owned()
}

/// Lawson–Hanson active set method for `min ‖a x − b‖ s.t. x ≥ 0`.
pub fn nnls<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> DVector<T> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = a.norm().max(T::one()) * b.norm().max(T::one());
    let tol = T::lit(10.0) * T::eps() * scale * T::from_usize_lossy(n.max(1));
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap_or(std::cmp::Ordering::Equal));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _ in 0..max_outer {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = lstsq_vec(&a.select_columns(&idx), b, T::eps() * T::lit(100.0));
            if z.iter().all(|&v| v > T::zero()) {
                x.fill(T::zero());
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            // largest step from x toward z that keeps x non-negative
            let mut alpha = T::one();
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= T::zero() {
                    let denom = x[j] - z[k];
                    let ratio = if denom > T::zero() { x[j] / denom } else { T::zero() };
                    alpha = alpha.min(ratio);
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                let xj = x[j];
                x[j] = xj + alpha * (z[k] - xj);
                if x[j] <= T::zero() || (z[k] <= T::zero() && x[j] <= T::eps() * scale) {
                    x[j] = T::zero();
                    passive[j] = false;
                }
            }
        }
    }
    x
}
