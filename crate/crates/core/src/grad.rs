//! Reverse-mode gradients through the reconstruction argmin.
//!
//! The solution satisfies `A(θ)·x = Dᵀy` with `A = DᵀD + λL`. For a training
//! loss `ℓ(x)` with `g = ∂ℓ/∂x`, differentiating the system gives
//! `dx = −A⁻¹(dA)x`, hence `dℓ = −zᵀ(dA)x` where `z` solves `A·z = g`
//! (`A` is symmetric). One adjoint solve therefore yields every parameter
//! gradient:
//!
//! * `λ`: `dA = L`, so `∂ℓ/∂λ = −zᵀLx`.
//! * edge `(i, j)` of `W`: raising `W_ij = W_ji` by `δ` adds
//!   `δ·(e_i − e_j)(e_i − e_j)ᵀ` to `L`, so `∂ℓ/∂W_ij = −λ(z_i − z_j)(x_i − x_j)`.
//! * `η` and features: chain rule through `W_ij = exp(−d_o(f_i, f_j)/η)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::graph::{build_affinity_graph, distance_unchecked, AffinityParams, DistanceOrder, Laplacian};
use crate::image::FeatureMap;
use crate::resample::{build_downsample, Normalization, ScalePair};
use crate::rng;
use crate::solve::{cg_solve, default_max_iter, CgOptions, DenseFactor, SystemSpec};

/// Solution of `A·z = g`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub z: Vec<f64>,
    pub g: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Gradients of a scalar loss with respect to every learnable input of the
/// reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub d_lambda: f64,
    pub d_eta: f64,
    pub d_features: FeatureMap,
    /// One entry per edge of [`Laplacian::edges`].
    pub d_edges: Vec<f64>,
}

pub fn solve_adjoint(spec: &SystemSpec<'_>, g: &[f64], tol: f64) -> Result<AdjointState> {
    solve_adjoint_with(spec, g, CgOptions::new(tol, default_max_iter(spec.n())))
}

pub fn solve_adjoint_with(spec: &SystemSpec<'_>, g: &[f64], opts: CgOptions<'_>) -> Result<AdjointState> {
    check_len(spec.n(), g.len())?;
    let out = cg_solve(spec, g, opts)?;
    Ok(AdjointState { z: out.x, g: g.to_vec(), iterations: out.iterations, relative_residual: out.relative_residual })
}

/// `∂ℓ/∂λ = −zᵀ(Lx)`.
pub fn vjp_lambda(spec: &SystemSpec<'_>, x: &[f64], adj: &AdjointState) -> Result<f64> {
    check_len(spec.n(), x.len())?;
    check_len(spec.n(), adj.z.len())?;
    let lx = spec.lap.apply(x)?;
    Ok(-adj.z.iter().zip(&lx).map(|(a, b)| a * b).sum::<f64>())
}

/// `∂ℓ/∂W_ij = −λ(z_i − z_j)(x_i − x_j)` for every undirected edge.
pub fn vjp_affinity_edges(spec: &SystemSpec<'_>, x: &[f64], adj: &AdjointState) -> Result<Vec<f64>> {
    check_len(spec.n(), x.len())?;
    check_len(spec.n(), adj.z.len())?;
    let z = &adj.z;
    Ok(spec
        .lap
        .edges()
        .iter()
        .map(|&(i, j)| -spec.lambda * (z[i] - z[j]) * (x[i] - x[j]))
        .collect())
}

fn check_graph_inputs(edge_grads: &[f64], lap: &Laplacian, features: &FeatureMap) -> Result<()> {
    check_len(lap.edges().len(), edge_grads.len())?;
    if features.height() != lap.height() || features.width() != lap.width() {
        return Err(Error::DimensionMismatch("feature map and graph grid differ"));
    }
    Ok(())
}

/// `Σ_edges ∂ℓ/∂W_ij · W_ij · d_ij / η²`.
pub fn vjp_eta(edge_grads: &[f64], lap: &Laplacian, features: &FeatureMap, params: AffinityParams) -> Result<f64> {
    check_graph_inputs(edge_grads, lap, features)?;
    let eta2 = params.eta * params.eta;
    Ok(lap
        .edges()
        .iter()
        .zip(lap.edge_weights())
        .zip(edge_grads)
        .map(|((&(i, j), &w), &ge)| {
            let d = distance_unchecked(features.pixel(i), features.pixel(j), params.order);
            ge * w * d / eta2
        })
        .sum())
}

/// Gradient with respect to every feature entry, accumulated over both
/// endpoints of each edge.
pub fn vjp_features(
    edge_grads: &[f64],
    lap: &Laplacian,
    features: &FeatureMap,
    params: AffinityParams,
) -> Result<FeatureMap> {
    check_graph_inputs(edge_grads, lap, features)?;
    let channels = features.channels();
    let mut out = FeatureMap::zeros(features.height(), features.width(), channels)?;
    let scale = 1.0 / (channels as f64 * params.eta);
    for ((&(i, j), &w), &ge) in lap.edges().iter().zip(lap.edge_weights()).zip(edge_grads) {
        // ∂W/∂f_i,m = −(W/η)·(1/F)·∂|Δ|^o/∂Δ with Δ = f_i,m − f_j,m.
        let coeff = -ge * w * scale;
        if coeff == 0.0 {
            continue;
        }
        for m in 0..channels {
            let delta = features.pixel(i)[m] - features.pixel(j)[m];
            let t = coeff * params.order.power_derivative(delta);
            out.pixel_mut(i)[m] += t;
            out.pixel_mut(j)[m] -= t;
        }
    }
    Ok(out)
}

/// Full backward pass for a solved system.
pub fn backward(
    spec: &SystemSpec<'_>,
    x: &[f64],
    g: &[f64],
    features: &FeatureMap,
    params: AffinityParams,
    tol: f64,
) -> Result<ParamGrads> {
    let adj = solve_adjoint(spec, g, tol)?;
    grads_from_adjoint(spec, x, &adj, features, params)
}

pub fn grads_from_adjoint(
    spec: &SystemSpec<'_>,
    x: &[f64],
    adj: &AdjointState,
    features: &FeatureMap,
    params: AffinityParams,
) -> Result<ParamGrads> {
    let d_lambda = vjp_lambda(spec, x, adj)?;
    let d_edges = vjp_affinity_edges(spec, x, adj)?;
    let d_eta = vjp_eta(&d_edges, spec.lap, features, params)?;
    let d_features = vjp_features(&d_edges, spec.lap, features, params)?;
    Ok(ParamGrads { d_lambda, d_eta, d_features, d_edges })
}

/// Mean squared error and its gradient with respect to `x`.
pub fn mse_with_grad(x: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(x.len(), target.len())?;
    let n = x.len() as f64;
    let mut loss = 0.0;
    let grad = x
        .iter()
        .zip(target)
        .map(|(a, b)| {
            let e = a - b;
            loss += e * e;
            2.0 * e / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// Relative error used by the gradient checks: `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let denom = libm::fabs(analytic).max(libm::fabs(numeric)).max(floor);
    if denom == 0.0 {
        0.0
    } else {
        libm::fabs(analytic - numeric) / denom
    }
}

/// Acceptance bound on the relative error between analytic and numeric gradients.
pub const GRADCHECK_TOL: f64 = 1e-4;

/// Entries smaller than this fraction of their group's largest magnitude are
/// compared on an absolute scale.
pub const GRADCHECK_FLOOR_RATIO: f64 = 1e-6;

/// Absolute floor of the comparison scale, well above finite-difference
/// round-off of an `O(1)` loss.
pub const GRADCHECK_ABS_FLOOR: f64 = 1e-9;

/// Feature entries touching an edge with a channel difference at or below
/// this are skipped (the distance is not smooth there for `o < 2`).
pub const NEAR_TIE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub seed: u64,
    pub hi_height: usize,
    pub hi_width: usize,
    pub lo_height: usize,
    pub lo_width: usize,
    pub channels: usize,
    pub order: DistanceOrder,
    /// CG tolerance for the analytic forward and adjoint solves.
    pub tol: f64,
    /// Use the solution itself as target, making the incoming gradient zero.
    pub zero_gradient: bool,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            hi_height: 8,
            hi_width: 8,
            lo_height: 4,
            lo_width: 4,
            channels: 3,
            order: DistanceOrder::default(),
            tol: 1e-10,
            zero_gradient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub name: &'static str,
    pub max_rel_err: f64,
    pub max_abs_analytic: f64,
    pub checked: usize,
    pub skipped: usize,
}

impl GroupReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= GRADCHECK_TOL
    }

    /// `param_group max_rel_err pass|fail`.
    pub fn line(&self) -> String {
        format!("{} {:.3e} {}", self.name, self.max_rel_err, if self.passed() { "pass" } else { "fail" })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub groups: Vec<GroupReport>,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(GroupReport::passed)
    }

    pub fn group(&self, name: &str) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.name == name)
    }
}

struct Instance {
    scale: ScalePair,
    features: FeatureMap,
    params: AffinityParams,
    lambda: f64,
    y: Vec<f64>,
    target: Vec<f64>,
}

impl Instance {
    fn random(cfg: &GradCheckConfig) -> Result<Self> {
        let scale = ScalePair::new(cfg.hi_height, cfg.hi_width, cfg.lo_height, cfg.lo_width)?;
        let mut rng = rng::seeded(cfg.seed);
        let n = scale.hi_len();
        let features = FeatureMap::new(
            cfg.hi_height,
            cfg.hi_width,
            cfg.channels,
            (0..n * cfg.channels).map(|_| rng.gen::<f64>()).collect(),
        )?;
        let eta = rng::uniform(&mut rng, 0.05, 0.5);
        let lambda = rng::uniform(&mut rng, 0.05, 1.0);
        let y = (0..scale.lo_len()).map(|_| rng.gen::<f64>()).collect();
        let target = (0..n).map(|_| rng.gen::<f64>()).collect();
        Ok(Self { scale, features, params: AffinityParams::new(eta, cfg.order)?, lambda, y, target })
    }

    /// `ℓ(plus) − ℓ(minus)` through dense solves.
    ///
    /// With `A₊x₊ = A₋x₋ = b` the solution shift is `δ = −A₊⁻¹(A₊ − A₋)x₋`, and
    /// `(A₊ − A₋)x₋` is assembled edge by edge, so the difference keeps its
    /// relative precision instead of cancelling two nearly equal losses.
    fn loss_delta(&self, plus: (&Laplacian, f64), minus: (&Laplacian, f64)) -> Result<f64> {
        let ((lap_p, lam_p), (lap_m, lam_m)) = (plus, minus);
        let d = build_downsample(self.scale, Normalization::Averaging)?;
        let spec_m = SystemSpec::new(&d, lap_m, lam_m, &self.y)?;
        let x = DenseFactor::new(&spec_m)?.solve(&spec_m.rhs())?;
        let mut r = lap_m.apply(&x)?;
        r.iter_mut().for_each(|v| *v *= lam_p - lam_m);
        for (&(i, j), (&wp, &wm)) in lap_p.edges().iter().zip(lap_p.edge_weights().iter().zip(lap_m.edge_weights())) {
            let flow = lam_p * (wp - wm) * (x[i] - x[j]);
            r[i] += flow;
            r[j] -= flow;
        }
        let spec_p = SystemSpec::new(&d, lap_p, lam_p, &self.y)?;
        let delta = DenseFactor::new(&spec_p)?.solve(&r)?;
        let n = x.len() as f64;
        Ok(-delta
            .iter()
            .zip(x.iter().zip(&self.target))
            .map(|(&dk, (&xk, &tk))| dk * (2.0 * (xk - tk) - dk))
            .sum::<f64>()
            / n)
    }

    fn loss_delta_features(&self, plus: (&FeatureMap, AffinityParams), minus: (&FeatureMap, AffinityParams)) -> Result<f64> {
        let lp = build_affinity_graph(plus.0, plus.1)?;
        let lm = build_affinity_graph(minus.0, minus.1)?;
        self.loss_delta((&lp, self.lambda), (&lm, self.lambda))
    }
}

fn summarize(name: &'static str, pairs: &[(f64, f64)], skipped: usize) -> GroupReport {
    let scale = pairs.iter().map(|&(_, n)| libm::fabs(n)).fold(0.0, f64::max);
    let floor = (GRADCHECK_FLOOR_RATIO * scale).max(GRADCHECK_ABS_FLOOR);
    GroupReport {
        name,
        max_rel_err: pairs.iter().map(|&(a, n)| relative_error(a, n, floor)).fold(0.0, f64::max),
        max_abs_analytic: pairs.iter().map(|&(a, _)| libm::fabs(a)).fold(0.0, f64::max),
        checked: pairs.len(),
        skipped,
    }
}

/// Builds a random instance and compares every analytic gradient with
/// central finite differences of the loss computed through dense solves.
pub fn check_gradients(cfg: &GradCheckConfig) -> Result<GradReport> {
    let mut inst = Instance::random(cfg)?;
    let d = build_downsample(inst.scale, Normalization::Averaging)?;
    let lap = build_affinity_graph(&inst.features, inst.params)?;

    let max_iter = default_max_iter(lap.n()) * 10;
    let x = {
        let spec = SystemSpec::new(&d, &lap, inst.lambda, &inst.y)?;
        cg_solve(&spec, &spec.rhs(), CgOptions::new(cfg.tol, max_iter))?.x
    };
    if cfg.zero_gradient {
        inst.target = x.clone();
    }
    let spec = SystemSpec::new(&d, &lap, inst.lambda, &inst.y)?;
    let (_, g) = mse_with_grad(&x, &inst.target)?;
    let adj = solve_adjoint_with(&spec, &g, CgOptions::new(cfg.tol, max_iter))?;
    let grads = grads_from_adjoint(&spec, &x, &adj, &inst.features, inst.params)?;

    let mut groups = Vec::with_capacity(4);

    let h = 1e-5 * inst.lambda;
    let fd = inst.loss_delta((&lap, inst.lambda + h), (&lap, inst.lambda - h))? / (2.0 * h);
    groups.push(summarize("lambda", &[(grads.d_lambda, fd)], 0));

    let eta = inst.params.eta;
    let h = 1e-5 * eta;
    let with_eta = |e: f64| AffinityParams::new(e, inst.params.order);
    let fd = inst.loss_delta_features((&inst.features, with_eta(eta + h)?), (&inst.features, with_eta(eta - h)?))?
        / (2.0 * h);
    groups.push(summarize("eta", &[(grads.d_eta, fd)], 0));

    let h = 1e-6;
    let mut pairs = Vec::with_capacity(lap.edges().len());
    for (k, &a) in grads.d_edges.iter().enumerate() {
        let mut plus = lap.edge_weights().to_vec();
        let mut minus = plus.clone();
        plus[k] += h;
        minus[k] -= h;
        let lp = Laplacian::from_edge_weights(lap.height(), lap.width(), plus)?;
        let lm = Laplacian::from_edge_weights(lap.height(), lap.width(), minus)?;
        pairs.push((a, inst.loss_delta((&lp, inst.lambda), (&lm, inst.lambda))? / (2.0 * h)));
    }
    groups.push(summarize("edges", &pairs, 0));

    let near_tie = near_tie_mask(&inst.features, &lap);
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for idx in 0..inst.features.data().len() {
        if near_tie[idx] {
            skipped += 1;
            continue;
        }
        let mut plus = inst.features.clone();
        let mut minus = inst.features.clone();
        plus.data_mut()[idx] += h;
        minus.data_mut()[idx] -= h;
        let fd = inst.loss_delta_features((&plus, inst.params), (&minus, inst.params))? / (2.0 * h);
        pairs.push((grads.d_features.data()[idx], fd));
    }
    groups.push(summarize("features", &pairs, skipped));

    Ok(GradReport { groups })
}

/// Marks feature entries that sit on an edge whose channel difference is a
/// near tie.
pub fn near_tie_mask(features: &FeatureMap, lap: &Laplacian) -> Vec<bool> {
    let f = features.channels();
    let mut mask = vec![false; features.data().len()];
    for &(i, j) in lap.edges() {
        for m in 0..f {
            if libm::fabs(features.pixel(i)[m] - features.pixel(j)[m]) <= NEAR_TIE {
                mask[i * f + m] = true;
                mask[j * f + m] = true;
            }
        }
    }
    mask
}
