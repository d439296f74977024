//! Desk-scale end-to-end training of `λ`, `η` and the feature transform.
//!
//! The training set is one patch per dataset image: a seeded crop rendered
//! into a cross-spectral (guide, target) pair. Steps cycle through the pairs
//! in order; the target is downsampled to form the low-resolution input, the
//! reconstruction is solved, and the MSE to the target is backpropagated
//! through the argmin with one adjoint solve. Parameters are updated with
//! Adam. Because the pair sequence repeats with period `pairs.len()`, the
//! loss averaged over one period is comparable between the start and the end
//! of a run.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::adam::Adam;
use crate::augment::{augment_cross_spectral, AugmentSpec};
use crate::error::{Error, Result};
use crate::features::{FeatureProvider, FeatureSource, LinearTransform};
use crate::grad::{grads_from_adjoint, mse_with_grad, solve_adjoint_with};
use crate::graph::DistanceOrder;
use crate::image::{Image, RgbImage};
use crate::pipeline::{forward, UpsampleOptions};
use crate::resample::{downsample, ScalePair};
use crate::rng;
use crate::solve::{default_max_iter, CgOptions};

pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_ETA: f64 = 0.1;

/// Consecutive failed steps that abort a run.
pub const MAX_CONSECUTIVE_FAILURES: usize = 3;

/// Learnable state. `λ = exp(theta_lambda)` and `η = exp(theta_eta)` stay
/// positive for every parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta_lambda: f64,
    pub theta_eta: f64,
    pub provider: FeatureProvider,
    pub transform: Option<LinearTransform>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::new(DEFAULT_LAMBDA, DEFAULT_ETA, FeatureProvider::default())
    }
}

impl ModelParams {
    pub fn new(lambda: f64, eta: f64, provider: FeatureProvider) -> Self {
        Self { theta_lambda: libm::log(lambda), theta_eta: libm::log(eta), provider, transform: None }
    }

    /// Adds an identity-like `channels × outputs` transform.
    pub fn with_transform(mut self, outputs: usize) -> Result<Self> {
        let inputs = self
            .provider
            .channels()
            .ok_or(Error::InvalidParameter("transform needs a provider with a known channel count"))?;
        self.transform = Some(LinearTransform::identity_like(inputs, outputs)?);
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        libm::exp(self.theta_lambda)
    }

    pub fn eta(&self) -> f64 {
        libm::exp(self.theta_eta)
    }

    /// `[theta_lambda, theta_eta, transform…]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = vec![self.theta_lambda, self.theta_eta];
        if let Some(t) = &self.transform {
            v.extend_from_slice(t.data());
        }
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = 2 + self.transform.as_ref().map_or(0, |t| t.data().len());
        crate::error::check_len(expected, flat.len())?;
        self.theta_lambda = flat[0];
        self.theta_eta = flat[1];
        if let Some(t) = &mut self.transform {
            t.data_mut().copy_from_slice(&flat[2..]);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub patch_size: usize,
    pub scale_factor: f64,
    pub seed: u64,
    pub order: DistanceOrder,
    pub anchor_count: usize,
    /// CG tolerance for forward and adjoint solves.
    pub tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 200,
            patch_size: 64,
            scale_factor: 8.0,
            seed: 0,
            order: DistanceOrder::default(),
            anchor_count: 6,
            tol: 1e-8,
        }
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair {
    pub guide: Image,
    pub target: Image,
    pub lowres: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters with the lowest loss averaged over one pass of the pairs.
    pub best: ModelParams,
    /// Parameters after the last step.
    pub last: ModelParams,
    /// Loss of every completed step, evaluated before that step's update.
    pub trace: Vec<f64>,
    /// Number of pairs, i.e. the smoothing window.
    pub window: usize,
    pub best_step: usize,
    pub failed_steps: usize,
}

impl TrainOutcome {
    fn window_mean(&self, range: core::ops::Range<usize>) -> f64 {
        let len = range.len() as f64;
        self.trace[range].iter().sum::<f64>() / len
    }

    /// Mean loss over the first window of steps.
    pub fn initial_smoothed(&self) -> f64 {
        self.window_mean(0..self.window.min(self.trace.len()))
    }

    /// Mean loss over the last window of steps.
    pub fn final_smoothed(&self) -> f64 {
        let n = self.trace.len();
        self.window_mean(n.saturating_sub(self.window)..n)
    }
}

/// Crops one seeded patch per image and renders it into a cross-spectral pair.
pub fn prepare_pairs(dataset: &[RgbImage], config: &TrainConfig) -> Result<Vec<TrainPair>> {
    if dataset.is_empty() {
        return Err(Error::InvalidParameter("training needs at least one image"));
    }
    let mut rng = rng::derived(config.seed, 1);
    dataset
        .iter()
        .map(|img| {
            let ph = config.patch_size.min(img.height());
            let pw = config.patch_size.min(img.width());
            let top = rng.gen_range(0..=img.height() - ph);
            let left = rng.gen_range(0..=img.width() - pw);
            let patch = img.crop(top, left, ph, pw)?;
            let spec = AugmentSpec { anchor_count: config.anchor_count, seed: rng.gen() };
            let (guide, target) = augment_cross_spectral(&patch, &spec)?;
            let scale = ScalePair::from_factor(ph, pw, config.scale_factor)?;
            let lowres = downsample(&target, scale.lo_height, scale.lo_width)?;
            Ok(TrainPair { guide, target, lowres })
        })
        .collect()
}

/// Loss and flat parameter gradient for one pair.
pub fn loss_and_grad(pair: &TrainPair, model: &ModelParams, config: &TrainConfig) -> Result<(f64, Vec<f64>)> {
    let source = FeatureSource::builtin(&model.provider)
        .ok_or(Error::InvalidParameter("training requires a built-in feature provider"))?;
    let opts = UpsampleOptions { order: config.order, tol: config.tol, max_iter: None };
    let fwd = forward(&pair.lowres, &pair.guide, model, source, &opts, None)?;
    if !fwd.converged {
        return Err(Error::SolverDiverged { iteration: fwd.iterations });
    }
    let (loss, g) = mse_with_grad(&fwd.x, pair.target.data())?;
    let spec = fwd.spec();
    let adj = solve_adjoint_with(&spec, &g, CgOptions::new(config.tol, default_max_iter(spec.n())))?;
    let grads = grads_from_adjoint(&spec, &fwd.x, &adj, &fwd.features, fwd.affinity)?;

    let mut flat = vec![fwd.lambda * grads.d_lambda, fwd.affinity.eta * grads.d_eta];
    if let Some(t) = &model.transform {
        flat.extend(t.backward(&fwd.raw_features, &grads.d_features)?);
    }
    Ok((loss, flat))
}

/// Trains from the default initialization for `provider`, with an optional
/// learnable transform of `transform_outputs` channels.
pub fn train(
    dataset: &[RgbImage],
    config: &TrainConfig,
    provider: FeatureProvider,
    transform_outputs: Option<usize>,
) -> Result<TrainOutcome> {
    let mut init = ModelParams::new(DEFAULT_LAMBDA, DEFAULT_ETA, provider);
    if let Some(k) = transform_outputs {
        init = init.with_transform(k)?;
    }
    train_from(dataset, config, init)
}

pub fn train_from(dataset: &[RgbImage], config: &TrainConfig, init: ModelParams) -> Result<TrainOutcome> {
    if FeatureSource::builtin(&init.provider).is_none() {
        return Err(Error::InvalidParameter("training requires a built-in feature provider"));
    }
    let pairs = prepare_pairs(dataset, config)?;
    let window = pairs.len();
    let mut model = init;
    let mut flat = model.to_flat();
    let mut adam = Adam::new(flat.len(), config.learning_rate, config.beta1, config.beta2, config.epsilon)?;

    let mut trace = Vec::with_capacity(config.steps);
    let mut snapshots: Vec<ModelParams> = Vec::with_capacity(window);
    let mut best = (f64::INFINITY, model.clone(), 0);
    let mut consecutive = 0;
    let mut failed_steps = 0;

    for step in 0..config.steps {
        let pair = &pairs[step % window];
        match loss_and_grad(pair, &model, config) {
            Ok((loss, grad)) => {
                consecutive = 0;
                trace.push(loss);
                if snapshots.len() == window {
                    snapshots.remove(0);
                }
                snapshots.push(model.clone());
                if trace.len() >= window {
                    let running = trace[trace.len() - window..].iter().sum::<f64>() / window as f64;
                    if running < best.0 {
                        // The window mixes parameters from its steps; keep the middle one.
                        best = (running, snapshots[snapshots.len() / 2].clone(), step);
                    }
                }
                adam.step(&mut flat, &grad)?;
                model.set_flat(&flat)?;
            }
            Err(err) => {
                log::warn!("training step {step} failed: {err}");
                consecutive += 1;
                failed_steps += 1;
                if consecutive >= MAX_CONSECUTIVE_FAILURES {
                    return Err(Error::TrainingAborted(consecutive));
                }
            }
        }
    }
    if trace.len() < window {
        best = (f64::INFINITY, model.clone(), config.steps.saturating_sub(1));
    }
    Ok(TrainOutcome { best: best.1, last: model, trace, window, best_step: best.2, failed_steps })
}
