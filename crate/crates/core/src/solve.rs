//! Solvers for `(DᵀD + λL)·x = Dᵀy`.
//!
//! [`solve_cg`] is the production path: Jacobi-preconditioned conjugate
//! gradients on the matrix-free operator. [`solve_dense`] assembles the
//! system and factorizes it with Cholesky; it exists as a reference for small
//! problems.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::graph::{laplacian_quadratic, Laplacian};
use crate::sparse::SparseOperator;

pub const DEFAULT_TOL: f64 = 1e-8;

/// Largest system `solve_dense` accepts.
pub const DENSE_LIMIT: usize = 4096;

/// Restarts allowed when the recurrence residual and the true residual drift apart.
const MAX_RESTARTS: usize = 3;

/// One reconstruction problem. Borrowed parts are never modified.
#[derive(Debug, Clone, Copy)]
pub struct SystemSpec<'a> {
    pub down: &'a SparseOperator,
    pub lap: &'a Laplacian,
    pub lambda: f64,
    pub y: &'a [f64],
}

impl<'a> SystemSpec<'a> {
    pub fn new(down: &'a SparseOperator, lap: &'a Laplacian, lambda: f64, y: &'a [f64]) -> Result<Self> {
        check_len(lap.n(), down.cols())?;
        check_len(down.rows(), y.len())?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be non-negative and finite"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { down, lap, lambda, y })
    }

    pub fn n(&self) -> usize {
        self.lap.n()
    }

    /// Right-hand side `Dᵀy`.
    pub fn rhs(&self) -> Vec<f64> {
        self.down.apply_transpose(self.y).expect("lengths validated at construction")
    }

    /// Diagonal of `DᵀD + λL`.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = self.down.column_square_sums();
        for (d, deg) in diag.iter_mut().zip(self.lap.degree()) {
            *d += self.lambda * deg;
        }
        diag
    }
}

/// Reusable buffers for repeated operator applications.
struct Workspace {
    low: Vec<f64>,
    lv: Vec<f64>,
}

impl Workspace {
    fn new(spec: &SystemSpec<'_>) -> Self {
        Self { low: vec![0.0; spec.down.rows()], lv: vec![0.0; spec.n()] }
    }

    fn apply(&mut self, spec: &SystemSpec<'_>, v: &[f64], out: &mut [f64]) {
        spec.down.apply_into(v, &mut self.low).expect("validated lengths");
        spec.down.apply_transpose_into(&self.low, out).expect("validated lengths");
        spec.lap.apply_into(v, &mut self.lv).expect("validated lengths");
        for (o, l) in out.iter_mut().zip(&self.lv) {
            *o += spec.lambda * l;
        }
    }
}

/// `Dᵀ(Dv) + λ·Lv` without forming the matrix.
pub fn system_apply(spec: &SystemSpec<'_>, v: &[f64]) -> Result<Vec<f64>> {
    check_len(spec.n(), v.len())?;
    let mut out = vec![0.0; spec.n()];
    Workspace::new(spec).apply(spec, v, &mut out);
    Ok(out)
}

/// `‖Dx − y‖² + λ·xᵀLx`.
pub fn objective(spec: &SystemSpec<'_>, x: &[f64]) -> Result<f64> {
    check_len(spec.n(), x.len())?;
    let dx = spec.down.apply(x)?;
    let data: f64 = dx.iter().zip(spec.y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(data + spec.lambda * laplacian_quadratic(spec.lap, x)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖Ax − b‖ / ‖b‖`, recomputed from the returned `x`.
    pub relative_residual: f64,
    pub objective: f64,
    /// False when `max_iter` ran out before the tolerance was met.
    pub converged: bool,
}

/// Knobs for [`solve_cg_with`].
pub struct CgOptions<'o> {
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point; zero when absent.
    pub x0: Option<&'o [f64]>,
    /// Called once per iteration with the iteration number and relative residual.
    pub observer: Option<&'o mut dyn FnMut(usize, f64)>,
}

impl CgOptions<'_> {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, x0: None, observer: None }
    }
}

/// Output of a raw conjugate-gradient run on an arbitrary right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Default iteration budget, `10·n`.
pub fn default_max_iter(n: usize) -> usize {
    10 * n.max(1)
}

/// Preconditioned CG for `A·x = b` with `A = DᵀD + λL`.
pub fn cg_solve(spec: &SystemSpec<'_>, b: &[f64], mut opts: CgOptions<'_>) -> Result<CgOutcome> {
    let n = spec.n();
    check_len(n, b.len())?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive"));
    }
    let mut x = match opts.x0 {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iterations: 0, relative_residual: 0.0, converged: true });
    }
    let inv_diag: Vec<f64> = spec.diagonal().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut ws = Workspace::new(spec);
    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    let mut restarts = 0;
    loop {
        ws.apply(spec, &x, &mut ax);
        for i in 0..n {
            r[i] = b[i] - ax[i];
            z[i] = r[i] * inv_diag[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut rel = norm(&r) / b_norm;

        while rel > opts.tol && iterations < opts.max_iter {
            ws.apply(spec, &p, &mut ap);
            let curvature = dot(&p, &ap);
            if curvature.is_nan() {
                return Err(Error::SolverDiverged { iteration: iterations });
            }
            if curvature <= 0.0 {
                return Err(Error::SolverBreakdown { iteration: iterations, curvature });
            }
            let alpha = rz / curvature;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] * inv_diag[i];
            }
            iterations += 1;
            rel = norm(&r) / b_norm;
            if !rel.is_finite() || !alpha.is_finite() {
                return Err(Error::SolverDiverged { iteration: iterations });
            }
            if let Some(obs) = opts.observer.as_mut() {
                obs(iterations, rel);
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }

        ws.apply(spec, &x, &mut ax);
        let true_rel = libm::sqrt(b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>()) / b_norm;
        if !true_rel.is_finite() {
            return Err(Error::SolverDiverged { iteration: iterations });
        }
        let converged = true_rel <= opts.tol;
        if converged || iterations >= opts.max_iter || restarts == MAX_RESTARTS {
            return Ok(CgOutcome { x, iterations, relative_residual: true_rel, converged });
        }
        restarts += 1;
    }
}

/// Solves the reconstruction system from a zero start.
pub fn solve_cg(spec: &SystemSpec<'_>, tol: f64, max_iter: usize) -> Result<SolveResult> {
    solve_cg_with(spec, CgOptions::new(tol, max_iter))
}

pub fn solve_cg_with(spec: &SystemSpec<'_>, opts: CgOptions<'_>) -> Result<SolveResult> {
    let out = cg_solve(spec, &spec.rhs(), opts)?;
    let objective = objective(spec, &out.x)?;
    Ok(SolveResult {
        x: out.x,
        iterations: out.iterations,
        relative_residual: out.relative_residual,
        objective,
        converged: out.converged,
    })
}

/// Dense row-major `DᵀD + λL`.
pub fn dense_system_matrix(spec: &SystemSpec<'_>) -> Vec<f64> {
    let n = spec.n();
    let mut a = vec![0.0; n * n];
    for l in 0..spec.down.rows() {
        let (cols, vals) = spec.down.row(l);
        for (&i, &wi) in cols.iter().zip(vals) {
            for (&j, &wj) in cols.iter().zip(vals) {
                a[i * n + j] += wi * wj;
            }
        }
    }
    let lap = spec.lap.matrix();
    for i in 0..n {
        let (cols, vals) = lap.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            a[i * n + j] += spec.lambda * w;
        }
    }
    a
}

/// In-place lower Cholesky factor of a dense SPD matrix.
pub fn cholesky(a: &mut [f64], n: usize) -> Result<()> {
    check_len(n * n, a.len())?;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Solves `L·Lᵀ·x = b` given the lower factor.
pub fn cholesky_solve(factor: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= factor[i * n + k] * y[k];
        }
        y[i] = s / factor[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= factor[k * n + i] * y[k];
        }
        y[i] = s / factor[i * n + i];
    }
    y
}

/// Dense factorization of `A`, reused for several right-hand sides.
pub struct DenseFactor {
    n: usize,
    factor: Vec<f64>,
}

impl DenseFactor {
    pub fn new(spec: &SystemSpec<'_>) -> Result<Self> {
        let n = spec.n();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
        }
        let mut factor = dense_system_matrix(spec);
        cholesky(&mut factor, n)?;
        Ok(Self { n, factor })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        Ok(cholesky_solve(&self.factor, self.n, b))
    }
}

/// Direct solve of the reconstruction system.
pub fn solve_dense(spec: &SystemSpec<'_>) -> Result<SolveResult> {
    let b = spec.rhs();
    let x = DenseFactor::new(spec)?.solve(&b)?;
    let ax = system_apply(spec, &x)?;
    let b_norm = norm(&b);
    let res = libm::sqrt(b.iter().zip(&ax).map(|(p, q)| (p - q) * (p - q)).sum::<f64>());
    let relative_residual = if b_norm == 0.0 { res } else { res / b_norm };
    let objective = objective(spec, &x)?;
    Ok(SolveResult { x, iterations: 0, relative_residual, objective, converged: true })
}
