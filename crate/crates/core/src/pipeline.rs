//! End-to-end forward pass: guide features → affinity graph → solve.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::{make_features, provider_features, FeatureSource};
use crate::graph::{build_affinity_graph, AffinityParams, DistanceOrder, Laplacian};
use crate::image::{FeatureMap, Image};
use crate::resample::{bicubic_upsample, build_downsample, Normalization, ScalePair};
use crate::solve::{default_max_iter, objective, CgOptions, SystemSpec, DEFAULT_TOL};
use crate::sparse::SparseOperator;
use crate::train::ModelParams;

/// Solver settings for a forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpsampleOptions {
    pub order: DistanceOrder,
    pub tol: f64,
    /// Defaults to `10·n` when absent.
    pub max_iter: Option<usize>,
}

impl Default for UpsampleOptions {
    fn default() -> Self {
        Self { order: DistanceOrder::default(), tol: DEFAULT_TOL, max_iter: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpsampleResult {
    pub image: Image,
    pub iterations: usize,
    pub relative_residual: f64,
    pub objective: f64,
    pub converged: bool,
}

/// Everything the backward pass needs from a forward solve.
#[derive(Debug, Clone)]
pub struct Forward {
    pub scale: ScalePair,
    pub down: SparseOperator,
    /// Provider output before the learnable transform.
    pub raw_features: FeatureMap,
    pub features: FeatureMap,
    pub affinity: AffinityParams,
    pub lap: Laplacian,
    pub lambda: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

impl Forward {
    pub fn spec(&self) -> SystemSpec<'_> {
        SystemSpec { down: &self.down, lap: &self.lap, lambda: self.lambda, y: &self.y }
    }
}

/// Runs the reconstruction, warm-starting CG from the bicubic upsample of
/// `lowres`.
pub fn forward(
    lowres: &Image,
    guide: &Image,
    model: &ModelParams,
    source: FeatureSource<'_>,
    opts: &UpsampleOptions,
    observer: Option<&mut dyn FnMut(usize, f64)>,
) -> Result<Forward> {
    let scale = ScalePair::new(guide.height(), guide.width(), lowres.height(), lowres.width())?;
    let down = build_downsample(scale, Normalization::Averaging)?;
    let raw_features = provider_features(guide, source)?;
    let features = match &model.transform {
        Some(t) => t.apply(&raw_features)?,
        None => raw_features.clone(),
    };
    let affinity = AffinityParams::new(model.eta(), opts.order)?;
    let lap = build_affinity_graph(&features, affinity)?;
    let lambda = model.lambda();
    if !lambda.is_finite() {
        return Err(Error::NonFinite);
    }
    let y = lowres.data().to_vec();
    let spec = SystemSpec::new(&down, &lap, lambda, &y)?;
    let x0 = bicubic_upsample(lowres, guide.height(), guide.width())?;
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(spec.n()));
    let observer = observer.map(|o| o as &mut dyn FnMut(usize, f64));
    let cg = crate::solve::cg_solve(
        &spec,
        &spec.rhs(),
        CgOptions { tol: opts.tol, max_iter, x0: Some(x0.data()), observer },
    )?;
    Ok(Forward {
        scale,
        down,
        raw_features,
        features,
        affinity,
        lap,
        lambda,
        y,
        x: cg.x,
        iterations: cg.iterations,
        relative_residual: cg.relative_residual,
        converged: cg.converged,
    })
}

/// Upsamples `lowres` onto the grid of `guide`.
pub fn upsample(
    lowres: &Image,
    guide: &Image,
    model: &ModelParams,
    source: FeatureSource<'_>,
    opts: &UpsampleOptions,
    observer: Option<&mut dyn FnMut(usize, f64)>,
) -> Result<UpsampleResult> {
    let fwd = forward(lowres, guide, model, source, opts, observer)?;
    let objective = objective(&fwd.spec(), &fwd.x)?;
    Ok(UpsampleResult {
        image: Image::new(guide.height(), guide.width(), fwd.x)?,
        iterations: fwd.iterations,
        relative_residual: fwd.relative_residual,
        objective,
        converged: fwd.converged,
    })
}

/// Features for `guide` as the model sees them (provider plus transform).
pub fn model_features(guide: &Image, model: &ModelParams, source: FeatureSource<'_>) -> Result<FeatureMap> {
    make_features(guide, source, model.transform.as_ref())
}
