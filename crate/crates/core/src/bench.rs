//! Synthetic scenes and evaluation protocols.

use alloc::vec::Vec;

use rand::Rng;

use crate::augment::{augment_cross_spectral, hsv_to_rgb, AugmentSpec};
use crate::error::{Error, Result};
use crate::features::FeatureSource;
use crate::graph::DistanceOrder;
use crate::image::{Image, RgbImage};
use crate::metrics::{psnr, ssim};
use crate::pipeline::{upsample, UpsampleOptions};
use crate::resample::{bicubic_upsample, downsample, ScalePair};
use crate::rng::{self, SeededRng};
use crate::train::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// Flat-colored rectangles, disks and half-planes.
    Edges,
    /// Smooth colored Gaussian blobs.
    GradientBlobs,
    /// Checkerboard of random colors.
    Checker,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Edges => "edges",
            Self::GradientBlobs => "gradient_blobs",
            Self::Checker => "checker",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "edges" => Some(Self::Edges),
            "gradient_blobs" => Some(Self::GradientBlobs),
            "checker" => Some(Self::Checker),
            _ => None,
        }
    }
}

pub const MIN_SCENE_SIZE: usize = 32;

fn random_color(rng: &mut SeededRng) -> [f64; 3] {
    hsv_to_rgb(rng::uniform(rng, 0.0, 360.0), rng::uniform(rng, 0.4, 1.0), rng::uniform(rng, 0.35, 1.0))
}

/// Square RGB scene of side `size`.
pub fn make_synthetic_rgb(kind: SceneKind, size: usize, seed: u64) -> Result<RgbImage> {
    if size < MIN_SCENE_SIZE {
        return Err(Error::InvalidParameter("synthetic scenes must be at least 32 pixels wide"));
    }
    let mut rng = rng::derived(seed, 2);
    let s = size as f64;
    match kind {
        SceneKind::Edges => {
            let mut canvas = alloc::vec![random_color(&mut rng); size * size];
            let shapes = rng.gen_range(6..=10);
            for _ in 0..shapes {
                let color = random_color(&mut rng);
                let shape = rng.gen_range(0..3);
                let (cy, cx) = (rng::uniform(&mut rng, 0.0, s), rng::uniform(&mut rng, 0.0, s));
                let (ry, rx) = (rng::uniform(&mut rng, 0.08, 0.3) * s, rng::uniform(&mut rng, 0.08, 0.3) * s);
                let angle = rng::uniform(&mut rng, 0.0, core::f64::consts::PI);
                let (sa, ca) = (libm::sin(angle), libm::cos(angle));
                for r in 0..size {
                    for c in 0..size {
                        let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
                        let inside = match shape {
                            0 => libm::fabs(y - cy) < ry && libm::fabs(x - cx) < rx,
                            1 => (y - cy) * (y - cy) + (x - cx) * (x - cx) < ry * ry,
                            _ => (y - cy) * ca - (x - cx) * sa > 0.0 && libm::fabs(x - cx) < 2.0 * rx,
                        };
                        if inside {
                            canvas[r * size + c] = color;
                        }
                    }
                }
            }
            RgbImage::new(size, size, canvas)
        }
        SceneKind::GradientBlobs => {
            let blobs: Vec<_> = (0..rng.gen_range(4..=7))
                .map(|_| {
                    let center = (rng::uniform(&mut rng, 0.0, s), rng::uniform(&mut rng, 0.0, s));
                    let sigma = rng::uniform(&mut rng, 0.08, 0.25) * s;
                    (center, sigma, rng::uniform(&mut rng, 0.0, 360.0))
                })
                .collect();
            let base_hue = rng::uniform(&mut rng, 0.0, 360.0);
            RgbImage::from_fn(size, size, |r, c| {
                let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
                let mut weight = 0.0;
                let mut hue_shift = 0.0;
                for &((cy, cx), sigma, hue) in &blobs {
                    let g = libm::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (2.0 * sigma * sigma));
                    weight += g;
                    hue_shift += g * hue;
                }
                let hue = base_hue + hue_shift / (1.0 + weight) * 0.5;
                hsv_to_rgb(hue, 0.75, 0.35 + 0.6 * (weight / (1.0 + weight)))
            })
        }
        SceneKind::Checker => {
            let cell = rng.gen_range(8..=16);
            let cells = size.div_ceil(cell);
            let colors: Vec<_> = (0..cells * cells).map(|_| random_color(&mut rng)).collect();
            RgbImage::from_fn(size, size, |r, c| colors[(r / cell) * cells + c / cell])
        }
    }
}

/// A guide/truth pair sharing geometry but rendered with independent
/// hue→gray mappings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub guide: Image,
    pub truth: Image,
}

pub fn make_synthetic_scene(kind: SceneKind, size: usize, seed: u64) -> Result<Scene> {
    let rgb = make_synthetic_rgb(kind, size, seed)?;
    let (guide, truth) = augment_cross_spectral(&rgb, &AugmentSpec { anchor_count: 6, seed: seed ^ 0x5eed })?;
    Ok(Scene { guide, truth })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
}

impl MetricReport {
    pub fn compute(estimate: &Image, truth: &Image) -> Result<Self> {
        Ok(Self { psnr_db: psnr(estimate, truth, 1.0)?, ssim: ssim(estimate, truth)? })
    }

    pub fn mean(reports: &[MetricReport]) -> Self {
        let n = reports.len().max(1) as f64;
        Self {
            psnr_db: reports.iter().map(|r| r.psnr_db).sum::<f64>() / n,
            ssim: reports.iter().map(|r| r.ssim).sum::<f64>() / n,
        }
    }
}

/// Upsampling method under evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    Bicubic,
    Guided { model: &'a ModelParams, source: FeatureSource<'a>, options: UpsampleOptions },
}

impl Method<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bicubic => "bicubic",
            Self::Guided { .. } => "guided",
        }
    }
}

/// Reconstructs `truth`'s grid from `lowres` with `method`.
pub fn reconstruct(lowres: &Image, guide: &Image, method: &Method<'_>) -> Result<Image> {
    ScalePair::new(guide.height(), guide.width(), lowres.height(), lowres.width())?;
    match method {
        Method::Bicubic => bicubic_upsample(lowres, guide.height(), guide.width()),
        Method::Guided { model, source, options } => Ok(upsample(lowres, guide, model, *source, options, None)?.image),
    }
}

pub fn evaluate_pair(lowres: &Image, guide: &Image, truth: &Image, method: &Method<'_>) -> Result<MetricReport> {
    if guide.dims() != truth.dims() {
        return Err(Error::DimensionMismatch("guide and truth differ in size"));
    }
    MetricReport::compute(&reconstruct(lowres, guide, method)?, truth)
}

/// Low-resolution observation of `truth` at `factor`.
pub fn observe(truth: &Image, factor: f64) -> Result<Image> {
    let scale = ScalePair::from_factor(truth.height(), truth.width(), factor)?;
    downsample(truth, scale.lo_height, scale.lo_width)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub order: DistanceOrder,
    pub psnr_db: f64,
    pub ssim: f64,
}

/// Mean guided metrics on `scenes` for each distance order, with one model
/// per order. Rows follow the order of `orders`.
pub fn sweep_orders(
    scenes: &[Scene],
    factor: f64,
    orders: &[DistanceOrder],
    models: &[ModelParams],
) -> Result<Vec<SweepRow>> {
    if orders.len() != models.len() {
        return Err(Error::DimensionMismatch("one model per distance order is required"));
    }
    let lowres: Vec<Image> = scenes.iter().map(|s| observe(&s.truth, factor)).collect::<Result<_>>()?;
    orders
        .iter()
        .zip(models)
        .map(|(&order, model)| {
            let source = FeatureSource::builtin(&model.provider)
                .ok_or(Error::InvalidParameter("sweeps require a built-in feature provider"))?;
            let method = Method::Guided { model, source, options: UpsampleOptions { order, ..Default::default() } };
            let reports: Vec<_> = scenes
                .iter()
                .zip(&lowres)
                .map(|(s, lo)| evaluate_pair(lo, &s.guide, &s.truth, &method))
                .collect::<Result<_>>()?;
            let mean = MetricReport::mean(&reports);
            Ok(SweepRow { order, psnr_db: mean.psnr_db, ssim: mean.ssim })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_reproducible_and_normalized() {
        for kind in [SceneKind::Edges, SceneKind::GradientBlobs, SceneKind::Checker] {
            let a = make_synthetic_scene(kind, 40, 7).unwrap();
            assert_eq!(a, make_synthetic_scene(kind, 40, 7).unwrap());
            assert_ne!(a, make_synthetic_scene(kind, 40, 8).unwrap());
            for img in [&a.guide, &a.truth] {
                assert_eq!(img.dims(), (40, 40));
                assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
            }
            assert_eq!(SceneKind::parse(kind.name()), Some(kind));
        }
        assert!(make_synthetic_scene(SceneKind::Edges, 31, 0).is_err());
    }

    #[test]
    fn truth_as_its_own_reconstruction() {
        let s = make_synthetic_scene(SceneKind::Checker, 32, 1).unwrap();
        let r = evaluate_pair(&s.truth, &s.guide, &s.truth, &Method::Bicubic).unwrap();
        assert_eq!(r, MetricReport { psnr_db: 99.0, ssim: 1.0 });
    }

    #[test]
    fn evaluation_composes_the_metrics() {
        let s = make_synthetic_scene(SceneKind::Edges, 32, 4).unwrap();
        let lo = observe(&s.truth, 4.0).unwrap();
        let report = evaluate_pair(&lo, &s.guide, &s.truth, &Method::Bicubic).unwrap();
        let up = bicubic_upsample(&lo, 32, 32).unwrap();
        assert_eq!(report.psnr_db, psnr(&up, &s.truth, 1.0).unwrap());
        assert_eq!(report.ssim, ssim(&up, &s.truth).unwrap());
        let wrong = Image::filled(16, 16, 0.0).unwrap();
        assert!(evaluate_pair(&lo, &s.guide, &wrong, &Method::Bicubic).is_err());
    }

    #[test]
    fn sweep_keeps_order_sequence() {
        let scenes = [make_synthetic_scene(SceneKind::Edges, 32, 2).unwrap()];
        let orders: Vec<_> = [2.0, 1.0, 4.0].iter().map(|&o| DistanceOrder::new(o).unwrap()).collect();
        let models = alloc::vec![ModelParams::default(); 3];
        let rows = sweep_orders(&scenes, 4.0, &orders, &models).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows.iter().map(|r| r.order).collect::<Vec<_>>(), orders);
        assert_eq!(rows, sweep_orders(&scenes, 4.0, &orders, &models).unwrap());
        assert!(sweep_orders(&scenes, 4.0, &orders, &models[..1]).is_err());
    }
}
