//! Property checks shared by the proptest suites and the acceptance target.
//! Each check returns `Err` with a description of the first violation.

#![allow(dead_code)]

use std::sync::Arc;

use flatsteer::moment::localizing_rows;
use flatsteer::sdp::{arrow_constraint, NonnegBlock, PsdBlock};
use flatsteer::{
    atomic_moment_vector, extract_atoms, modified_moment_matrix, solve, steer_once,
    ExtractConfig, Mode, MomentMatrix, MomentVector, MonomialIndexer, MultiIndex, Polynomial,
    SdpProblem, SdpStatus, SolverConfig, SteerConfig,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Atoms = Vec<(f64, Vec<f64>)>;

fn moment_matrix_of(atoms: &Atoms, n: usize, d: usize) -> MomentMatrix<f64> {
    let ix = Arc::new(MonomialIndexer::new(n, 2 * d).unwrap());
    atomic_moment_vector(atoms, ix).unwrap().moment_matrix(d).unwrap()
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `r` atoms in `[−1, 1]ⁿ`, pairwise at least `sep` apart in the ∞-norm,
/// with weights bounded below by `0.3 / r` and summing to 1.
pub fn random_atoms(rng: &mut ChaCha8Rng, n: usize, r: usize, sep: f64) -> Atoms {
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(r);
    while points.len() < r {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if points.iter().all(|q| dist_inf(q, &p) >= sep) {
            points.push(p);
        }
    }
    let raw: Vec<f64> = (0..r).map(|_| rng.random_range(0.3..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter()
        .map(|w| w / total)
        .zip(points)
        .collect()
}

/// Extraction from the exact moment matrix of `atoms` recovers them.
pub fn check_roundtrip(atoms: &Atoms, n: usize, d: usize) -> Result<(), String> {
    let m = moment_matrix_of(atoms, n, d);
    let mu = extract_atoms(&m, atoms.len(), &ExtractConfig::default())
        .map_err(|e| format!("extraction failed: {e}"))?;
    if mu.len() != atoms.len() {
        return Err(format!("{} atoms recovered, expected {}", mu.len(), atoms.len()));
    }
    for (w, a) in atoms {
        let (i, dist) = mu
            .atoms
            .iter()
            .enumerate()
            .map(|(i, b)| (i, dist_inf(a, b)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if dist > 1e-6 {
            return Err(format!("atom {a:?} missed by {dist:e}"));
        }
        if (mu.weights[i] - w).abs() > 1e-6 {
            return Err(format!("weight of {a:?}: {} vs {w}", mu.weights[i]));
        }
    }
    Ok(())
}

/// The arrow matrix is PSD exactly when `‖v‖² ≤ E·c`, away from the boundary.
pub fn check_arrow(v: &[f64], e: f64, c: f64) -> Result<(), String> {
    let arrow = arrow_constraint(c, v.len()).map_err(|e| e.to_string())?;
    let v = DVector::from_column_slice(v);
    let margin = e * c - v.norm_squared();
    let scale = 1.0 + (e * c).abs() + v.norm_squared();
    if margin.abs() <= 1e-9 * scale {
        return Ok(());
    }
    let psd = min_eig(&arrow.matrix(&v, e)) >= 0.0;
    if psd != (margin > 0.0) || arrow.holds(&v, e) != (margin > 0.0) {
        return Err(format!("margin {margin:e} but psd = {psd}"));
    }
    Ok(())
}

/// A PSD Hankel matrix whose leading block is singular: fewer atoms than
/// monomials of degree `≤ d − 1`.
pub fn check_modified(atoms: &Atoms, n: usize, d: usize) -> Result<(), String> {
    let m = moment_matrix_of(atoms, n, d);
    let scale = 1.0 + m.entries().norm();
    let lead = m.leading_block();
    let eig = SymmetricEigen::new(lead.clone()).eigenvalues;
    if eig.min() > 1e-10 * scale {
        return Err("leading block is not singular".into());
    }
    let mm = modified_moment_matrix(&m, 1e-10);
    if !(mm.residual <= 1e-8 * scale) {
        return Err(format!("residual {:e}", mm.residual));
    }
    let s1 = m.sub_size();
    if (mm.matrix.view((0, 0), (s1, s1)) - &lead).norm() != 0.0 {
        return Err("leading block changed".into());
    }
    if (&mm.matrix - mm.matrix.transpose()).norm() > 1e-12 * scale {
        return Err("not symmetric".into());
    }
    if min_eig(&mm.matrix) < -1e-8 * scale {
        return Err(format!("not PSD: {:e}", min_eig(&mm.matrix)));
    }
    // a flat atomic matrix is its own modification
    if (&mm.matrix - m.entries()).norm() > 1e-6 * scale {
        return Err(format!("‖M̃ − M‖ = {:e}", (&mm.matrix - m.entries()).norm()));
    }
    Ok(())
}

/// `steer_once` on a flat matrix stays put at `E = 0`.
pub fn check_short_circuit(
    atoms: &Atoms,
    f: &Polynomial<f64>,
    lambda: f64,
) -> Result<(), String> {
    let d = (f.degree() as usize).div_ceil(2);
    let n = f.nvars();
    let m = moment_matrix_of(atoms, n, d);
    let cfg = SteerConfig::default();
    let tol = cfg.solver.tol;
    let scale = 1.0 + m.entries().norm();
    let state = steer_once(&m, f, lambda, Mode::Moment, &cfg).map_err(|e| e.to_string())?;
    if state.e_value > 10.0 * tol {
        return Err(format!("E = {:e}", state.e_value));
    }
    let moved = (state.m.entries() - m.entries()).norm();
    if moved > 10.0 * tol * scale {
        return Err(format!("‖A_M − M‖ = {moved:e}"));
    }
    let fy: f64 = atoms
        .iter()
        .map(|(w, a)| w * f.evaluate(a).unwrap())
        .sum();
    let value = lambda * state.e_value + (1.0 - lambda) * state.objective_value;
    let bound = lambda * 10.0 * tol + (1.0 - lambda) * (fy + 10.0 * tol * scale);
    if value > bound {
        return Err(format!("objective {value:e} above {bound:e}"));
    }
    Ok(())
}

/// A two-variable LMI `F₀ + x₁F₁ + x₂F₂ ⪰ 0` with `F₀ ≻ 0`, intersected
/// with the box `|x_i| ≤ 1`, minimizing `cᵀx`.
#[derive(Clone, Debug)]
pub struct TinySdp {
    pub f: [DMatrix<f64>; 3],
    pub c: [f64; 2],
}

impl TinySdp {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let size = rng.random_range(2..=3);
        let sym = |rng: &mut ChaCha8Rng| {
            let a = DMatrix::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));
            (&a + a.transpose()) * 0.5
        };
        let g = DMatrix::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));
        let f0 = &g * g.transpose() + DMatrix::identity(size, size) * 0.2;
        let f = [f0, sym(rng), sym(rng)];
        let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        TinySdp { f, c }
    }

    fn feasible(&self, x: [f64; 2]) -> bool {
        x[0].abs() <= 1.0
            && x[1].abs() <= 1.0
            && min_eig(&(&self.f[0] + &self.f[1] * x[0] + &self.f[2] * x[1])) >= 0.0
    }

    fn problem(&self) -> SdpProblem<f64> {
        let mut p = SdpProblem::new(2);
        p.set_objective(DVector::from_column_slice(&self.c), 0.0)
            .unwrap();
        p.add_psd(
            PsdBlock::new(self.f[0].clone())
                .with_term(0, self.f[1].clone())
                .with_term(1, self.f[2].clone()),
        )
        .unwrap();
        p.add_nonneg(NonnegBlock {
            constant: DVector::from_element(4, 1.0),
            coef: DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
        })
        .unwrap();
        p
    }

    /// Largest feasible step from the origin along angle `theta`.
    fn radius(&self, theta: f64) -> f64 {
        let u = [theta.cos(), theta.sin()];
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.feasible([mid * u[0], mid * u[1]]) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn value_along(&self, theta: f64) -> f64 {
        let r = self.radius(theta);
        r * (self.c[0] * theta.cos() + self.c[1] * theta.sin())
    }

    /// Brute force over boundary directions, refined around the best one.
    pub fn oracle(&self) -> f64 {
        let n = 720;
        let step = std::f64::consts::TAU / n as f64;
        let (best, _) = (0..n)
            .map(|i| (i, self.value_along(i as f64 * step)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
        for _ in 0..80 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if self.value_along(a) <= self.value_along(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        self.value_along(0.5 * (lo + hi)).min(0.0)
    }
}

/// The interior-point value matches the brute-force value to `1e−4`.
pub fn check_tiny_sdp(sdp: &TinySdp) -> Result<(), String> {
    let sol = solve(&sdp.problem(), &SolverConfig::default());
    if sol.status != SdpStatus::Optimal {
        return Err(format!("status {}", sol.status));
    }
    let oracle = sdp.oracle();
    if (sol.objective_value - oracle).abs() > 1e-4 {
        return Err(format!("solver {} vs oracle {oracle}", sol.objective_value));
    }
    Ok(())
}

/// A polynomial in `n` variables of degree `≤ deg` with coefficients in `[−3, 3]`.
pub fn random_polynomial(rng: &mut ChaCha8Rng, n: usize, deg: usize) -> Polynomial<f64> {
    let ix = MonomialIndexer::new(n, deg).unwrap();
    let terms: Vec<(MultiIndex, f64)> = ix
        .monomials()
        .iter()
        .filter_map(|a| {
            let keep = rng.random_bool(0.6);
            let c = rng.random_range(-3.0..3.0);
            keep.then(|| (a.clone(), c))
        })
        .collect();
    Polynomial::from_terms(n, terms)
}

/// Gradient components agree with central differences.
pub fn check_gradient(p: &Polynomial<f64>, x: &[f64]) -> Result<(), String> {
    let h = 1e-5;
    for (i, g) in p.gradient().iter().enumerate() {
        let exact = g.evaluate(x).unwrap();
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let fd = (p.evaluate(&xp).unwrap() - p.evaluate(&xm).unwrap()) / (2.0 * h);
        if (fd - exact).abs() > 1e-6 * exact.abs().max(1.0) {
            return Err(format!("∂{i}: {exact} vs difference {fd}"));
        }
    }
    Ok(())
}

/// `row_β · y(x) = p(x)·x^β` for the point-evaluation moments of `x`.
pub fn check_localizing(p: &Polynomial<f64>, k: usize, x: &[f64], row: usize) -> Result<(), String> {
    let ix = Arc::new(MonomialIndexer::new(p.nvars(), k).unwrap());
    let loc = localizing_rows(p, k, &ix).map_err(|e| e.to_string())?;
    let row = row % loc.rows.nrows();
    let y = MomentVector::point_evaluation(Arc::clone(&ix), x);
    let lhs = loc.rows.row(row).transpose().dot(y.values());
    let beta = ix.monomial(row);
    let xb: f64 = beta
        .exponents()
        .iter()
        .zip(x)
        .map(|(&e, &xi)| xi.powi(e as i32))
        .product();
    let rhs = p.evaluate(x).unwrap() * xb;
    let scale: f64 = 1.0 + p.terms().map(|(_, c)| c.abs()).sum::<f64>();
    if (lhs - rhs).abs() > 1e-10 * scale.max(rhs.abs()) {
        return Err(format!("row {row}: {lhs} vs {rhs}"));
    }
    Ok(())
}
