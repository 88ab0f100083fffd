//! Cone arithmetic on flat vectors: non-negative orthant, second-order cones
//! and PSD cones (full `n × n` column-major storage, so the trace inner
//! product is the plain dot product).

use nalgebra::{DMatrix, DVector, DVectorView, DVectorViewMut};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ConeKind {
    Nonneg,
    Soc,
    Psd(usize),
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Cone {
    pub kind: ConeKind,
    pub offset: usize,
    pub len: usize,
}

/// Concatenation of cones laid out on one flat vector.
#[derive(Clone, Debug, Default)]
pub(crate) struct ConeLayout {
    pub cones: Vec<Cone>,
    pub total: usize,
    /// Barrier degree `ν`.
    pub degree: usize,
}

impl ConeLayout {
    pub fn push(&mut self, kind: ConeKind, len: usize) -> usize {
        let offset = self.total;
        self.cones.push(Cone { kind, offset, len });
        self.total += len;
        self.degree += match kind {
            ConeKind::Nonneg => len,
            ConeKind::Soc => 1,
            ConeKind::Psd(n) => n,
        };
        offset
    }

    pub fn identity<T: Real>(&self) -> DVector<T> {
        let mut e = DVector::zeros(self.total);
        for c in &self.cones {
            match c.kind {
                ConeKind::Nonneg => e.rows_mut(c.offset, c.len).fill(T::one()),
                ConeKind::Soc => e[c.offset] = T::one(),
                ConeKind::Psd(n) => {
                    for i in 0..n {
                        e[c.offset + i + i * n] = T::one();
                    }
                }
            }
        }
        e
    }

    /// Largest `t` with `x − t e` in the cone, i.e. the smallest "eigenvalue" of `x`.
    pub fn min_eig<T: Real>(&self, x: &DVector<T>) -> T {
        let mut worst = T::max_value().unwrap();
        for c in &self.cones {
            let v = x.rows(c.offset, c.len);
            let m = match c.kind {
                ConeKind::Nonneg => v.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b)),
                ConeKind::Soc => v[0] - v.rows(1, c.len - 1).norm(),
                ConeKind::Psd(n) => {
                    let mat = to_matrix(v, n);
                    crate::linalg::min_eigenvalue(&mat)
                }
            };
            worst = worst.min(m);
        }
        worst
    }

    /// Largest `α ≥ 0` with `x + α d` in the cone (`x` interior); infinite if unbounded.
    pub fn max_step<T: Real>(&self, x: &DVector<T>, d: &DVector<T>) -> T {
        let inf = T::max_value().unwrap();
        let mut alpha = inf;
        for c in &self.cones {
            let xv = x.rows(c.offset, c.len);
            let dv = d.rows(c.offset, c.len);
            let a = match c.kind {
                ConeKind::Nonneg => {
                    let mut a = inf;
                    for i in 0..c.len {
                        if dv[i] < T::zero() {
                            a = a.min(-xv[i] / dv[i]);
                        }
                    }
                    a
                }
                ConeKind::Soc => soc_max_step(xv, dv),
                ConeKind::Psd(n) => psd_max_step(&to_matrix(xv, n), &to_matrix(dv, n)),
            };
            alpha = alpha.min(a);
        }
        alpha
    }

    /// Symmetrizes the PSD blocks of `x` in place.
    pub fn symmetrize<T: Real>(&self, x: &mut DVector<T>) {
        let half = T::lit(0.5);
        for c in &self.cones {
            if let ConeKind::Psd(n) = c.kind {
                for j in 0..n {
                    for i in 0..j {
                        let a = c.offset + i + j * n;
                        let b = c.offset + j + i * n;
                        let v = (x[a] + x[b]) * half;
                        x[a] = v;
                        x[b] = v;
                    }
                }
            }
        }
    }

    /// Jordan product `u ∘ v`.
    pub fn product<T: Real>(&self, u: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.total);
        for c in &self.cones {
            let uv = u.rows(c.offset, c.len);
            let vv = v.rows(c.offset, c.len);
            let mut o = out.rows_mut(c.offset, c.len);
            match c.kind {
                ConeKind::Nonneg => o.copy_from(&uv.component_mul(&vv)),
                ConeKind::Soc => {
                    o[0] = uv.dot(&vv);
                    for i in 1..c.len {
                        o[i] = uv[0] * vv[i] + vv[0] * uv[i];
                    }
                }
                ConeKind::Psd(n) => {
                    let a = to_matrix(uv, n);
                    let b = to_matrix(vv, n);
                    let p = (&a * &b + &b * &a) * T::lit(0.5);
                    o.copy_from_slice(p.as_slice());
                }
            }
        }
        out
    }

    /// Solves `λ ∘ x = d` for a scaled point `λ` (diagonal in the PSD blocks).
    pub fn lambda_div<T: Real>(&self, lambda: &DVector<T>, d: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.total);
        for c in &self.cones {
            let l = lambda.rows(c.offset, c.len);
            let dv = d.rows(c.offset, c.len);
            let mut o = out.rows_mut(c.offset, c.len);
            match c.kind {
                ConeKind::Nonneg => o.copy_from(&dv.component_div(&l)),
                ConeKind::Soc => soc_div(l, dv, &mut o),
                ConeKind::Psd(n) => {
                    for j in 0..n {
                        for i in 0..n {
                            let li = l[i + i * n];
                            let lj = l[j + j * n];
                            o[i + j * n] = (dv[i + j * n] + dv[i + j * n]) / (li + lj);
                        }
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn to_matrix<T: Real>(v: DVectorView<'_, T>, n: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

fn soc_jdot<T: Real>(u: &DVectorView<'_, T>, v: &DVectorView<'_, T>) -> T {
    let tail = u.rows(1, u.len() - 1).dot(&v.rows(1, v.len() - 1));
    u[0] * v[0] - tail
}

fn soc_max_step<T: Real>(x: DVectorView<'_, T>, d: DVectorView<'_, T>) -> T {
    let inf = T::max_value().unwrap();
    // q(α) = a α² + 2 b α + c, boundary at the first positive root
    let a = soc_jdot(&d, &d);
    let b = soc_jdot(&x, &d);
    let c = soc_jdot(&x, &x);
    if c <= T::zero() || x[0] <= T::zero() {
        return T::zero();
    }
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= T::eps() * scale {
        if b < T::zero() {
            return -c / (b + b);
        }
        return inf;
    }
    let disc = b * b - a * c;
    if disc < T::zero() {
        // q stays positive, so the ray never reaches the boundary
        return inf;
    }
    let sq = disc.sqrt();
    // stable roots of a α² + 2 b α + c
    let qv = if b >= T::zero() { -(b + sq) } else { -b + sq };
    let r1 = qv / a;
    let r2 = if qv != T::zero() { c / qv } else { r1 };
    let mut best = inf;
    for r in [r1, r2] {
        if r > T::zero() {
            best = best.min(r);
        }
    }
    best
}

fn psd_max_step<T: Real>(x: &DMatrix<T>, d: &DMatrix<T>) -> T {
    let inf = T::max_value().unwrap();
    let Some(chol) = x.clone().cholesky() else {
        return T::zero();
    };
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return T::zero();
    };
    let m = &linv * d * linv.transpose();
    let lam = crate::linalg::min_eigenvalue(&m);
    if lam < T::zero() {
        -T::one() / lam
    } else {
        inf
    }
}

/// Solves `λ ∘ x = d` in a second-order cone.
fn soc_div<T: Real>(l: DVectorView<'_, T>, d: DVectorView<'_, T>, out: &mut DVectorViewMut<'_, T>) {
    let n = l.len();
    let l1 = l.rows(1, n - 1);
    let d1 = d.rows(1, n - 1);
    let det = l[0] * l[0] - l1.norm_squared();
    let x0 = (l[0] * d[0] - l1.dot(&d1)) / det;
    out[0] = x0;
    for i in 1..n {
        out[i] = (d[i] - x0 * l[i]) / l[0];
    }
}

/// Per-cone Nesterov–Todd scaling `W` with `W z = W^{-T} s = λ`.
#[derive(Clone, Debug)]
enum ConeScaling<T: Real> {
    /// `W = diag(sqrt(s / z))`.
    Nonneg(DVector<T>),
    Soc { beta: T, v: DVector<T> },
    Psd { r: DMatrix<T>, rinv: DMatrix<T> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Apply {
    W,
    Wt,
    Winv,
    WinvT,
}

#[derive(Clone, Debug)]
pub(crate) struct Scaling<T: Real> {
    parts: Vec<ConeScaling<T>>,
    pub lambda: DVector<T>,
}

impl<T: Real> Scaling<T> {
    /// Returns `None` when `s` or `z` is not strictly interior.
    pub fn new(layout: &ConeLayout, s: &DVector<T>, z: &DVector<T>) -> Option<Self> {
        let mut parts = Vec::with_capacity(layout.cones.len());
        let mut lambda = DVector::zeros(layout.total);
        for c in &layout.cones {
            let sv = s.rows(c.offset, c.len);
            let zv = z.rows(c.offset, c.len);
            match c.kind {
                ConeKind::Nonneg => {
                    if sv.iter().chain(zv.iter()).any(|&v| !(v > T::zero())) {
                        return None;
                    }
                    let d = DVector::from_iterator(
                        c.len,
                        sv.iter().zip(zv.iter()).map(|(&a, &b)| (a / b).sqrt()),
                    );
                    for i in 0..c.len {
                        lambda[c.offset + i] = (sv[i] * zv[i]).sqrt();
                    }
                    parts.push(ConeScaling::Nonneg(d));
                }
                ConeKind::Soc => {
                    let sn = soc_jdot(&sv, &sv);
                    let zn = soc_jdot(&zv, &zv);
                    if !(sn > T::zero() && zn > T::zero() && sv[0] > T::zero() && zv[0] > T::zero())
                    {
                        return None;
                    }
                    let sb = sv.into_owned() / sn.sqrt();
                    let zb = zv.into_owned() / zn.sqrt();
                    let gamma = ((T::one() + sb.dot(&zb)) * T::lit(0.5)).sqrt();
                    // w̄ = (s̄ + J z̄) / (2γ)
                    let mut w = sb.clone();
                    w[0] += zb[0];
                    for i in 1..c.len {
                        w[i] -= zb[i];
                    }
                    w /= gamma + gamma;
                    let beta = (sn / zn).sqrt().sqrt();
                    let mut v = w.clone();
                    v[0] += T::one();
                    v /= ((w[0] + T::one()) * T::lit(2.0)).sqrt();
                    // λ = W z, written via the normalized points for accuracy
                    let lam = soc_apply(beta, &v, zv.into_owned(), Apply::W);
                    lambda.rows_mut(c.offset, c.len).copy_from(&lam);
                    parts.push(ConeScaling::Soc { beta, v });
                }
                ConeKind::Psd(n) => {
                    let sm = crate::linalg::symmetrize(&to_matrix(sv, n));
                    let zm = crate::linalg::symmetrize(&to_matrix(zv, n));
                    let ls = sm.cholesky()?.l();
                    let lz = zm.cholesky()?.l();
                    let svd = (lz.transpose() * &ls).svd(true, true);
                    let u = svd.u?;
                    let vt = svd.v_t?;
                    let sig = svd.singular_values;
                    if sig.iter().any(|&x| !(x > T::zero())) {
                        return None;
                    }
                    let isq = sig.map(|x| T::one() / x.sqrt());
                    // R = L_s V Σ^{-1/2},  R^{-1} = Σ^{-1/2} Uᵀ L_zᵀ
                    let mut r = ls * vt.transpose();
                    for (j, mut col) in r.column_iter_mut().enumerate() {
                        col *= isq[j];
                    }
                    let mut rinv = u.transpose() * lz.transpose();
                    for (i, mut row) in rinv.row_iter_mut().enumerate() {
                        row *= isq[i];
                    }
                    for i in 0..n {
                        lambda[c.offset + i + i * n] = sig[i];
                    }
                    parts.push(ConeScaling::Psd { r, rinv });
                }
            }
        }
        Some(Scaling { parts, lambda })
    }

    pub fn apply(&self, layout: &ConeLayout, x: &DVector<T>, op: Apply) -> DVector<T> {
        let mut out = DVector::zeros(layout.total);
        for (c, part) in layout.cones.iter().zip(&self.parts) {
            let xv = x.rows(c.offset, c.len);
            let res = match part {
                ConeScaling::Nonneg(d) => match op {
                    Apply::W | Apply::Wt => xv.component_mul(d),
                    Apply::Winv | Apply::WinvT => xv.component_div(d),
                },
                ConeScaling::Soc { beta, v } => soc_apply(*beta, v, xv.into_owned(), op),
                ConeScaling::Psd { r, rinv } => {
                    let n = r.nrows();
                    let m = to_matrix(xv, n);
                    let y = match op {
                        Apply::W => r.transpose() * m * r,
                        Apply::Wt => r * m * r.transpose(),
                        Apply::Winv => rinv.transpose() * m * rinv,
                        Apply::WinvT => rinv * m * rinv.transpose(),
                    };
                    DVector::from_column_slice(y.as_slice())
                }
            };
            out.rows_mut(c.offset, c.len).copy_from(&res);
        }
        out
    }
}

/// `W x`, `W^{-1} x` for `W = β (2 v vᵀ − J)` (symmetric, so `Wᵀ = W`).
fn soc_apply<T: Real>(beta: T, v: &DVector<T>, mut x: DVector<T>, op: Apply) -> DVector<T> {
    let n = x.len();
    let two = T::lit(2.0);
    match op {
        Apply::W | Apply::Wt => {
            let vx = v.dot(&x);
            // (2 v vᵀ − J) x
            x[0] = -x[0];
            x.axpy(two * vx, v, T::one());
            x *= beta;
        }
        Apply::Winv | Apply::WinvT => {
            // (2 J v vᵀ J − J) x / β
            let mut jv = v.clone();
            for i in 1..n {
                jv[i] = -jv[i];
            }
            let jvx = jv.dot(&x);
            x[0] = -x[0];
            x.axpy(two * jvx, &jv, T::one());
            x /= beta;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(layout: &ConeLayout, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let mut x = DVector::zeros(layout.total);
        for c in &layout.cones {
            match c.kind {
                ConeKind::Nonneg => {
                    for i in 0..c.len {
                        x[c.offset + i] = rng.random_range(0.1..3.0);
                    }
                }
                ConeKind::Soc => {
                    let mut t = 0.0;
                    for i in 1..c.len {
                        let v: f64 = rng.random_range(-1.0..1.0);
                        x[c.offset + i] = v;
                        t += v * v;
                    }
                    x[c.offset] = t.sqrt() + rng.random_range(0.1..1.0);
                }
                ConeKind::Psd(n) => {
                    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                    let m = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
                    x.rows_mut(c.offset, c.len).copy_from_slice(m.as_slice());
                }
            }
        }
        x
    }

    fn layout() -> ConeLayout {
        let mut l = ConeLayout::default();
        l.push(ConeKind::Nonneg, 3);
        l.push(ConeKind::Soc, 4);
        l.push(ConeKind::Psd(3), 9);
        l
    }

    #[test]
    fn nt_scaling_maps_both_points_to_lambda() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s = random_interior(&l, &mut rng);
            let z = random_interior(&l, &mut rng);
            let w = Scaling::new(&l, &s, &z).unwrap();
            let wz = w.apply(&l, &z, Apply::W);
            let wts = w.apply(&l, &s, Apply::WinvT);
            assert!((&wz - &w.lambda).norm() < 1e-9 * (1.0 + w.lambda.norm()));
            assert!((&wts - &w.lambda).norm() < 1e-9 * (1.0 + w.lambda.norm()));
            let x = random_interior(&l, &mut rng);
            let back = w.apply(&l, &w.apply(&l, &x, Apply::W), Apply::Winv);
            assert!((back - &x).norm() < 1e-9 * (1.0 + x.norm()));
            let back = w.apply(&l, &w.apply(&l, &x, Apply::Wt), Apply::WinvT);
            assert!((back - &x).norm() < 1e-9 * (1.0 + x.norm()));
            // adjoint: <W x, y> = <x, Wᵀ y>
            let y = random_interior(&l, &mut rng);
            let lhs = w.apply(&l, &x, Apply::W).dot(&y);
            let rhs = x.dot(&w.apply(&l, &y, Apply::Wt));
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn lambda_div_inverts_product() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_interior(&l, &mut rng);
        let z = random_interior(&l, &mut rng);
        let w = Scaling::new(&l, &s, &z).unwrap();
        let mut d = random_interior(&l, &mut rng);
        l.symmetrize(&mut d);
        let x = l.lambda_div(&w.lambda, &d);
        let back = l.product(&w.lambda, &x);
        assert!((back - d).norm() < 1e-9);
    }

    #[test]
    fn max_step_lands_on_boundary() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = random_interior(&l, &mut rng);
            let mut d = DVector::from_fn(l.total, |_, _| rng.random_range(-1.0..1.0));
            l.symmetrize(&mut d);
            let a = l.max_step(&x, &d);
            assert!(a > 0.0);
            if a < 1e6 {
                let edge = &x + &d * a;
                assert!(l.min_eig(&edge).abs() < 1e-7 * (1.0 + edge.norm()));
                assert!(l.min_eig(&(&x + &d * (0.99 * a))) > 0.0);
            }
        }
    }
}
