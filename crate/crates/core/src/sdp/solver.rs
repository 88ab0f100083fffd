//! Primal-dual interior-point solver on the homogeneous self-dual embedding
//! with Nesterov–Todd scaling and Mehrotra's predictor-corrector.
//!
//! Internally the problem is written as
//!
//! ```text
//! minimize cᵀx  subject to  G x + s = h,  s ∈ K
//! ```
//!
//! after the equality constraints have been eliminated through a null-space
//! basis.

use nalgebra::{DMatrix, DVector};

use super::cones::{Apply, ConeKind, ConeLayout, Scaling};
use super::problem::{Block, SdpProblem};
use crate::linalg::{lstsq_vec, PivotedQr};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Optimal,
    UnboundedBelow,
    Infeasible,
    MaxIters,
    NumericalFailure,
}

impl SdpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::UnboundedBelow => "unbounded_below",
            SdpStatus::Infeasible => "infeasible",
            SdpStatus::MaxIters => "max_iters",
            SdpStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Objective values below `-unbounded_threshold · (1 + |initial objective|)`
    /// with a primal-feasible iterate are reported as unbounded.
    pub unbounded_threshold: f64,
    /// Recorded for reproducibility; the current initialization is deterministic
    /// and does not draw random numbers.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-7,
            max_iters: 200,
            unbounded_threshold: 1e9,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktResiduals<T> {
    pub primal: T,
    pub dual: T,
    /// Relative duality gap (absolute gap when the objectives are near zero).
    pub gap: T,
}

#[derive(Clone, Debug)]
pub struct SdpSolution<T: Real> {
    pub status: SdpStatus,
    pub x: DVector<T>,
    pub objective_value: T,
    pub dual_objective: T,
    /// Dual variable of every block: a matrix for PSD blocks, the cone vector
    /// `((t+1)/2, (t-1)/2, v)` multiplier for arrow blocks, a column for
    /// non-negative blocks.
    pub duals: Vec<DMatrix<T>>,
    pub residuals: KktResiduals<T>,
    pub iterations: usize,
}

impl<T: Real> SdpSolution<T> {
    /// Optimal, or stopped early at an iterate whose primal and dual
    /// residuals are both within `tol`.
    pub fn near_optimal(&self, tol: f64) -> bool {
        match self.status {
            SdpStatus::Optimal => true,
            SdpStatus::MaxIters | SdpStatus::NumericalFailure => {
                let tol = T::lit(tol);
                self.residuals.primal <= tol && self.residuals.dual <= tol
            }
            _ => false,
        }
    }
}

/// Flattened conic data after equality elimination.
struct ConicForm<T: Real> {
    layout: ConeLayout,
    g: DMatrix<T>,
    h: DVector<T>,
    c: DVector<T>,
    /// `x = x_p + N w`.
    x_p: DVector<T>,
    null: DMatrix<T>,
    offsets: Vec<usize>,
}

fn conic_form<T: Real>(prob: &SdpProblem<T>) -> Result<ConicForm<T>, ()> {
    let m = prob.nvars();
    let mut layout = ConeLayout::default();
    let mut offsets = Vec::new();
    for b in &prob.blocks {
        let off = match b {
            Block::Psd(p) => layout.push(ConeKind::Psd(p.size), p.size * p.size),
            Block::Arrow(a) => layout.push(ConeKind::Soc, a.dim() + 2),
            Block::Nonneg(n) => layout.push(ConeKind::Nonneg, n.constant.len()),
        };
        offsets.push(off);
    }
    // slack = g0 + Gp x
    let rows = layout.total;
    let mut g0 = DVector::zeros(rows);
    let mut gp = DMatrix::zeros(rows, m);
    let half = T::lit(0.5);
    for (b, &off) in prob.blocks.iter().zip(&offsets) {
        match b {
            Block::Psd(p) => {
                let len = p.size * p.size;
                g0.rows_mut(off, len).copy_from_slice(p.constant.as_slice());
                for (j, f) in &p.terms {
                    let mut col = gp.column_mut(*j);
                    let mut col = col.rows_mut(off, len);
                    for (dst, &src) in col.iter_mut().zip(f.as_slice()) {
                        *dst += src;
                    }
                }
            }
            Block::Arrow(a) => {
                let q = a.dim();
                g0[off] = (a.t_constant + T::one()) * half;
                g0[off + 1] = (a.t_constant - T::one()) * half;
                g0.rows_mut(off + 2, q).copy_from(&a.v_constant);
                for j in 0..m {
                    gp[(off, j)] = a.t_coef[j] * half;
                    gp[(off + 1, j)] = a.t_coef[j] * half;
                    for i in 0..q {
                        gp[(off + 2 + i, j)] = a.v_coef[(i, j)];
                    }
                }
            }
            Block::Nonneg(n) => {
                let r = n.constant.len();
                g0.rows_mut(off, r).copy_from(&n.constant);
                gp.view_mut((off, 0), (r, m)).copy_from(&n.coef);
            }
        }
    }

    let (x_p, null) = if prob.equalities.is_empty() {
        (DVector::zeros(m), DMatrix::identity(m, m))
    } else {
        let p = prob.equalities.len();
        let a = DMatrix::from_fn(p, m, |i, j| prob.equalities[i].coef[j]);
        let b = DVector::from_fn(p, |i, _| -prob.equalities[i].constant);
        let x_p = lstsq_vec(&a, &b, T::lit(1e-12));
        let scale = T::one() + b.amax() + a.amax();
        if (&a * &x_p - &b).amax() > T::lit(1e-8) * scale {
            return Err(());
        }
        let at = a.transpose();
        let thr = crate::linalg::column_threshold(&at, T::lit(1e-10));
        let qr = PivotedQr::new(&at, thr);
        let q = qr.q_full();
        let null = q.columns(qr.rank, m - qr.rank).into_owned();
        (x_p, null)
    };

    let h = &g0 + &gp * &x_p;
    let g = -(&gp * &null);
    let c = null.transpose() * &prob.objective;
    Ok(ConicForm {
        layout,
        g,
        h,
        c,
        x_p,
        null,
        offsets,
    })
}

/// Solves `prob`; never panics on numerical trouble, which is reported through the status.
pub fn solve<T: Real>(prob: &SdpProblem<T>, cfg: &SolverConfig) -> SdpSolution<T> {
    let m = prob.nvars();
    let Ok(form) = conic_form(prob) else {
        return SdpSolution {
            status: SdpStatus::Infeasible,
            x: DVector::zeros(m),
            objective_value: T::max_value().unwrap(),
            dual_objective: T::max_value().unwrap(),
            duals: Vec::new(),
            residuals: KktResiduals {
                primal: T::max_value().unwrap(),
                dual: T::zero(),
                gap: T::zero(),
            },
            iterations: 0,
        };
    };
    let core = if form.g.ncols() == 0 {
        fixed_point(&form, cfg)
    } else {
        hsd(&form, cfg)
    };
    let x = &form.x_p + &form.null * &core.w;
    let offset_const = prob.objective.dot(&form.x_p) + prob.objective_constant;
    let mut duals = Vec::with_capacity(prob.blocks.len());
    for (b, &off) in prob.blocks.iter().zip(&form.offsets) {
        let d = match b {
            Block::Psd(p) => {
                DMatrix::from_column_slice(p.size, p.size, core.z.rows(off, p.size * p.size).as_slice())
            }
            Block::Arrow(a) => {
                let len = a.dim() + 2;
                DMatrix::from_column_slice(len, 1, core.z.rows(off, len).as_slice())
            }
            Block::Nonneg(n) => {
                let len = n.constant.len();
                DMatrix::from_column_slice(len, 1, core.z.rows(off, len).as_slice())
            }
        };
        duals.push(d);
    }
    SdpSolution {
        status: core.status,
        objective_value: prob.objective_value(&x),
        x,
        dual_objective: core.dual_objective + offset_const,
        duals,
        residuals: core.residuals,
        iterations: core.iterations,
    }
}

struct CoreResult<T: Real> {
    status: SdpStatus,
    w: DVector<T>,
    z: DVector<T>,
    dual_objective: T,
    residuals: KktResiduals<T>,
    iterations: usize,
}

/// No free variables remain: the slack is fixed at `h`.
fn fixed_point<T: Real>(form: &ConicForm<T>, cfg: &SolverConfig) -> CoreResult<T> {
    let tol = T::lit(cfg.tol);
    let feasible = form.layout.total == 0 || form.layout.min_eig(&form.h) >= -tol * (T::one() + form.h.amax());
    CoreResult {
        status: if feasible {
            SdpStatus::Optimal
        } else {
            SdpStatus::Infeasible
        },
        w: DVector::zeros(0),
        z: DVector::zeros(form.layout.total),
        dual_objective: T::zero(),
        residuals: KktResiduals {
            primal: T::zero(),
            dual: T::zero(),
            gap: T::zero(),
        },
        iterations: 0,
    }
}

fn finish<T: Real>(
    status: SdpStatus,
    x: &DVector<T>,
    z: &DVector<T>,
    tau: T,
    dcost: T,
    residuals: KktResiduals<T>,
    iterations: usize,
) -> CoreResult<T> {
    // an infeasibility certificate is a ray, so z is not normalized by τ
    let z = match status {
        SdpStatus::Infeasible => z.clone(),
        _ => z / tau,
    };
    CoreResult {
        status,
        w: x / tau,
        z,
        dual_objective: dcost,
        residuals,
        iterations,
    }
}

/// Cholesky factor of `h`, regularized when `h` is numerically singular.
fn factor<T: Real>(h: &DMatrix<T>) -> Option<nalgebra::Cholesky<T, nalgebra::Dyn>> {
    if let Some(c) = h.clone().cholesky() {
        return Some(c);
    }
    let scale = h.diagonal().amax().max(T::eps());
    let mut delta = scale * T::eps() * T::lit(1e2);
    for _ in 0..12 {
        let mut reg = h.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += delta;
        }
        if let Some(c) = reg.cholesky() {
            return Some(c);
        }
        delta *= T::lit(100.0);
    }
    None
}

/// Solver for `ĜᵀĜ x = r`, through the triangular factor of a QR
/// decomposition of `Ĝ` when it is well conditioned.
enum NormalSolver<T: Real> {
    Qr(DMatrix<T>),
    Chol(nalgebra::Cholesky<T, nalgebra::Dyn>, DMatrix<T>),
}

impl<T: Real> NormalSolver<T> {
    fn new(gh: &DMatrix<T>) -> Option<Self> {
        if gh.nrows() >= gh.ncols() {
            let r = gh.clone().qr().r();
            let diag = r.diagonal().map(|v| v.abs());
            let (lo, hi) = (diag.min(), diag.max());
            if lo > hi * T::eps() * T::lit(1e3) {
                return Some(NormalSolver::Qr(r));
            }
        }
        let hm = gh.transpose() * gh;
        factor(&hm).map(|c| NormalSolver::Chol(c, hm))
    }

    fn solve(&self, rhs: &DVector<T>) -> DVector<T> {
        match self {
            NormalSolver::Qr(r) => {
                let u = r.tr_solve_upper_triangular(rhs).expect("nonzero diagonal");
                r.solve_upper_triangular(&u).expect("nonzero diagonal")
            }
            NormalSolver::Chol(c, hm) => solve_refined(c, hm, rhs),
        }
    }
}

fn solve_refined<T: Real>(
    chol: &nalgebra::Cholesky<T, nalgebra::Dyn>,
    h: &DMatrix<T>,
    rhs: &DVector<T>,
) -> DVector<T> {
    let mut x = chol.solve(rhs);
    let r = rhs - h * &x;
    x += chol.solve(&r);
    x
}

fn hsd<T: Real>(form: &ConicForm<T>, cfg: &SolverConfig) -> CoreResult<T> {
    let layout = &form.layout;
    let (g, h, c) = (&form.g, &form.h, &form.c);
    let n = g.ncols();
    let tol = T::lit(cfg.tol);
    let nu = T::from_usize_lossy(layout.degree);
    let e = layout.identity::<T>();
    let resx0 = c.norm().max(T::one());
    let resz0 = h.norm().max(T::one());

    let fail = |w: DVector<T>, z: DVector<T>, it: usize, status: SdpStatus| CoreResult {
        status,
        w,
        z,
        dual_objective: T::zero(),
        residuals: KktResiduals {
            primal: T::max_value().unwrap(),
            dual: T::max_value().unwrap(),
            gap: T::max_value().unwrap(),
        },
        iterations: it,
    };

    // Initial point: least-squares primal, least-norm dual, shifted into the cone.
    let h0 = g.transpose() * g;
    let Some(chol0) = factor(&h0) else {
        return fail(DVector::zeros(n), DVector::zeros(layout.total), 0, SdpStatus::NumericalFailure);
    };
    let mut x = solve_refined(&chol0, &h0, &(g.transpose() * h));
    let mut s = h - g * &x;
    let xz = solve_refined(&chol0, &h0, &(-c));
    let mut z = g * xz;
    for v in [&mut s, &mut z] {
        layout.symmetrize(v);
        let t = -layout.min_eig(v);
        let nrm = v.norm().max(T::one());
        if t >= -T::lit(1e-8) * nrm {
            v.axpy(T::one() + t.max(T::zero()), &e, T::one());
        }
    }
    let mut tau = T::one();
    let mut kappa = T::one();

    let mut first_pcost: Option<T> = None;
    let mut pcost_hist: Vec<T> = Vec::new();
    let mut small_steps = 0;
    let (mut pinf_streak, mut dinf_streak) = (0, 0);
    // iterate with the smallest KKT error, returned when the loop stalls
    let mut best: Option<(T, CoreResult<T>)> = None;

    for it in 0..=cfg.max_iters {
        let rx = g.transpose() * &z + c * tau;
        let rz = g * &x + &s - h * tau;
        let cx = c.dot(&x);
        let hz = h.dot(&z);
        let rt = kappa + cx + hz;
        let gap = s.dot(&z);
        let mu = (gap + tau * kappa) / (nu + T::one());
        let pcost = cx / tau;
        let dcost = -hz / tau;
        let pres = rz.norm() / tau / resz0;
        let dres = rx.norm() / tau / resx0;
        let gap_abs = gap / (tau * tau);
        let relgap = if pcost < T::zero() {
            gap_abs / -pcost
        } else if dcost > T::zero() {
            gap_abs / dcost
        } else {
            T::max_value().unwrap()
        };
        let last = KktResiduals {
            primal: pres,
            dual: dres,
            gap: gap_abs.min(relgap),
        };
        let pinf = if hz < T::zero() {
            (g.transpose() * &z).norm() / resx0 / -hz
        } else {
            T::max_value().unwrap()
        };
        let dinf = if cx < T::zero() {
            (g * &x + &s).norm() / resz0 / -cx
        } else {
            T::max_value().unwrap()
        };
        let p0 = *first_pcost.get_or_insert(pcost);
        pcost_hist.push(pcost);

        let done = move |status: SdpStatus, x: &DVector<T>, z: &DVector<T>, last: KktResiduals<T>| {
            finish(status, x, z, tau, dcost, last, it)
        };
        let score = pres.max(dres).max(last.gap);
        if score.is_finite() && best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, done(SdpStatus::Optimal, &x, &z, last)));
        }
        let stalled = |status: SdpStatus, best: Option<(T, CoreResult<T>)>| -> CoreResult<T> {
            match best {
                Some((b, mut r)) => {
                    r.status = if b <= tol { SdpStatus::Optimal } else { status };
                    r.iterations = it;
                    r
                }
                None => fail(DVector::zeros(n), DVector::zeros(layout.total), it, status),
            }
        };

        if pres <= tol && dres <= tol && (gap_abs <= tol || relgap <= tol) {
            return done(SdpStatus::Optimal, &x, &z, last);
        }
        // certificates must hold on consecutive iterations once the embedding
        // has tipped towards kappa; a single long step can look like a ray
        let ray = kappa > T::lit(1e3) * tau;
        pinf_streak = if ray && pinf <= tol { pinf_streak + 1 } else { 0 };
        dinf_streak = if ray && dinf <= tol { dinf_streak + 1 } else { 0 };
        if pinf_streak >= 3 {
            return done(SdpStatus::Infeasible, &x, &z, last);
        }
        if dinf_streak >= 3 {
            return done(SdpStatus::UnboundedBelow, &x, &z, last);
        }
        let threshold = T::lit(cfg.unbounded_threshold) * (T::one() + p0.abs());
        if pcost < -threshold && pres <= tol.sqrt() {
            return done(SdpStatus::UnboundedBelow, &x, &z, last);
        }
        // weak unboundedness: primal feasible iterates whose cost keeps
        // doubling while the iterate norm diverges
        if it >= 5 {
            let before = pcost_hist[it - 5];
            if x.norm() / tau > T::lit(1e8)
                && pres <= T::lit(1e-4)
                && pcost < -T::lit(10.0) * (T::one() + p0.abs())
                && pcost < before * T::lit(2.0)
            {
                return done(SdpStatus::UnboundedBelow, &x, &z, last);
            }
        }
        if it == cfg.max_iters {
            return stalled(SdpStatus::MaxIters, best);
        }

        let Some(w) = Scaling::new(layout, &s, &z) else {
            return stalled(SdpStatus::NumericalFailure, best);
        };
        let lambda = &w.lambda;

        // Ĝ = W^{-T} G, H = ĜᵀĜ
        let mut gh = DMatrix::zeros(layout.total, n);
        for j in 0..n {
            let col = w.apply(layout, &g.column(j).into_owned(), Apply::WinvT);
            gh.set_column(j, &col);
        }
        let Some(normal) = NormalSolver::new(&gh) else {
            return stalled(SdpStatus::NumericalFailure, best);
        };
        // (x, z) with Gᵀz = a, G x − WᵀW z = b
        let sol = |a: &DVector<T>, b: &DVector<T>| -> (DVector<T>, DVector<T>) {
            let wb = w.apply(layout, b, Apply::WinvT);
            let dx = normal.solve(&(a + gh.transpose() * &wb));
            let mut dz = w.apply(layout, &(&gh * &dx - wb), Apply::Winv);
            layout.symmetrize(&mut dz);
            (dx, dz)
        };
        let (x2, z2) = sol(&-c, h);
        let denom2 = c.dot(&x2) + h.dot(&z2) - kappa / tau;

        let newton = |eta: T, ds_rhs: &DVector<T>, dk_rhs: T| {
            let ld = layout.lambda_div(lambda, ds_rhs);
            let wtld = w.apply(layout, &ld, Apply::Wt);
            let bx = &rx * -eta;
            let bz = &rz * -eta - &wtld;
            let bt = -eta * rt - dk_rhs / tau;
            let (x1, z1) = sol(&bx, &bz);
            let dtau = (bt - c.dot(&x1) - h.dot(&z1)) / denom2;
            let dx = x1 + &x2 * dtau;
            let dz = z1 + &z2 * dtau;
            let wdz = w.apply(layout, &dz, Apply::W);
            let mut ds = w.apply(layout, &(ld - wdz), Apply::Wt);
            layout.symmetrize(&mut ds);
            let dk = (dk_rhs - kappa * dtau) / tau;
            (dx, dz, ds, dtau, dk)
        };
        let step = |ds: &DVector<T>, dz: &DVector<T>, dtau: T, dk: T| {
            let mut a = layout.max_step(&s, ds).min(layout.max_step(&z, dz));
            if dtau < T::zero() {
                a = a.min(-tau / dtau);
            }
            if dk < T::zero() {
                a = a.min(-kappa / dk);
            }
            a
        };

        // predictor
        let ll = layout.product(lambda, lambda);
        let (_, dza, dsa, dtaua, dka) = newton(T::one(), &-&ll, -tau * kappa);
        let alpha_a = step(&dsa, &dza, dtaua, dka).min(T::one());
        let sigma = (T::one() - alpha_a).powi(3);

        // corrector
        let dsat = w.apply(layout, &dsa, Apply::WinvT);
        let dzat = w.apply(layout, &dza, Apply::W);
        let corr = layout.product(&dsat, &dzat);
        let ds_rhs = -&ll - corr + &e * (sigma * mu);
        let dk_rhs = -tau * kappa - dtaua * dka + sigma * mu;
        let (dx, dz, ds, dtau, dk) = newton(T::one() - sigma, &ds_rhs, dk_rhs);
        let alpha = (step(&ds, &dz, dtau, dk) * T::lit(0.99)).min(T::one());
        if !alpha.is_finite() || dx.iter().any(|v| !v.is_finite()) {
            return stalled(SdpStatus::NumericalFailure, best);
        }

        x.axpy(alpha, &dx, T::one());
        s.axpy(alpha, &ds, T::one());
        z.axpy(alpha, &dz, T::one());
        tau += alpha * dtau;
        kappa += alpha * dk;
        layout.symmetrize(&mut s);
        layout.symmetrize(&mut z);

        if alpha < T::lit(1e-9) {
            small_steps += 1;
            if small_steps >= 5 {
                return stalled(SdpStatus::NumericalFailure, best);
            }
        } else {
            small_steps = 0;
        }
    }
    unreachable!("loop returns at max_iters")
}
