//! Area-overlap downsampling operator and the bicubic baseline.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sparse::SparseOperator;

/// High- and low-resolution grid sizes. Scale factors are the per-axis ratios
/// and need not be integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalePair {
    pub hi_height: usize,
    pub hi_width: usize,
    pub lo_height: usize,
    pub lo_width: usize,
}

impl ScalePair {
    pub fn new(hi_height: usize, hi_width: usize, lo_height: usize, lo_width: usize) -> Result<Self> {
        if lo_height == 0 || lo_width == 0 || hi_height == 0 || hi_width == 0 {
            return Err(Error::EmptyGrid);
        }
        if hi_height < lo_height || hi_width < lo_width {
            return Err(Error::InvalidScale { hi_height, hi_width, lo_height, lo_width });
        }
        Ok(Self { hi_height, hi_width, lo_height, lo_width })
    }

    /// Low-resolution size obtained by dividing each axis by `factor` and
    /// rounding to the nearest pixel (at least one).
    pub fn from_factor(hi_height: usize, hi_width: usize, factor: f64) -> Result<Self> {
        if !(factor >= 1.0) || !factor.is_finite() {
            return Err(Error::InvalidParameter("scale factor must be finite and >= 1"));
        }
        let shrink = |n: usize| (libm::round(n as f64 / factor) as usize).max(1);
        Self::new(hi_height, hi_width, shrink(hi_height), shrink(hi_width))
    }

    pub fn sy(&self) -> f64 {
        self.hi_height as f64 / self.lo_height as f64
    }

    pub fn sx(&self) -> f64 {
        self.hi_width as f64 / self.lo_width as f64
    }

    pub fn hi_len(&self) -> usize {
        self.hi_height * self.hi_width
    }

    pub fn lo_len(&self) -> usize {
        self.lo_height * self.lo_width
    }
}

/// Row normalization of the downsampling operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Rows divided by the footprint area so that every row sums to one.
    #[default]
    Averaging,
    /// Bare overlap areas.
    Raw,
}

/// Overlaps of one low-resolution interval with the unit cells of the fine
/// axis. The interval of cell `l` is `[l·hi/lo, (l+1)·hi/lo)`, so adjacent
/// footprints partition the fine axis.
fn axis_overlaps(l: usize, hi: usize, lo: usize) -> Vec<(usize, f64)> {
    let start = (l * hi) as f64 / lo as f64;
    let end = ((l + 1) * hi) as f64 / lo as f64;
    let first = libm::floor(start) as usize;
    let last = (libm::ceil(end) as usize).min(hi);
    (first..last)
        .filter_map(|i| {
            let lo_edge = start.max(i as f64);
            let hi_edge = end.min((i + 1) as f64);
            let w = hi_edge - lo_edge;
            (w > 0.0).then_some((i, w))
        })
        .collect()
}

/// Builds the sparse `lo_len × hi_len` downsampling operator whose entry
/// `(l, h)` is the overlap area between the footprint of low-resolution pixel
/// `l` and the unit square of high-resolution pixel `h`.
pub fn build_downsample(scale: ScalePair, normalize: Normalization) -> Result<SparseOperator> {
    let ScalePair { hi_height, hi_width, lo_height, lo_width } = ScalePair::new(
        scale.hi_height,
        scale.hi_width,
        scale.lo_height,
        scale.lo_width,
    )?;
    let norm = match normalize {
        Normalization::Averaging => 1.0 / (scale.sy() * scale.sx()),
        Normalization::Raw => 1.0,
    };
    let ys: Vec<_> = (0..lo_height).map(|r| axis_overlaps(r, hi_height, lo_height)).collect();
    let xs: Vec<_> = (0..lo_width).map(|c| axis_overlaps(c, hi_width, lo_width)).collect();

    let mut rows = Vec::with_capacity(lo_height * lo_width);
    for wy in &ys {
        for wx in &xs {
            let mut row = Vec::with_capacity(wy.len() * wx.len());
            for &(i, a) in wy {
                for &(j, b) in wx {
                    row.push((i * hi_width + j, a * b * norm));
                }
            }
            rows.push(row);
        }
    }
    SparseOperator::from_rows(lo_height * lo_width, hi_height * hi_width, rows)
}

/// Applies the averaging downsampler to a high-resolution image.
pub fn downsample(img: &Image, lo_height: usize, lo_width: usize) -> Result<Image> {
    let scale = ScalePair::new(img.height(), img.width(), lo_height, lo_width)?;
    let op = build_downsample(scale, Normalization::Averaging)?;
    Image::new(lo_height, lo_width, op.apply(img.data())?)
}

/// Catmull-Rom cubic convolution kernel (`a = -0.5`).
pub fn cubic_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let t = libm::fabs(x);
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source taps and normalized weights for every destination index along one
/// axis, using pixel-centre alignment.
fn cubic_taps(src: usize, dst: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = (d as f64 + 0.5) * scale - 0.5;
            let base = libm::floor(s);
            let frac = s - base;
            let mut idx = [0usize; 4];
            let mut w = [0.0; 4];
            for k in 0..4 {
                let offset = k as f64 - 1.0;
                idx[k] = (base as isize + k as isize - 1).clamp(0, src as isize - 1) as usize;
                w[k] = cubic_kernel(offset - frac);
            }
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= sum);
            (idx, w)
        })
        .collect()
}

/// Bicubic resampling to `out_height × out_width` with edge clamping; the
/// result is clamped to `[0, 1]`.
pub fn bicubic_upsample(img: &Image, out_height: usize, out_width: usize) -> Result<Image> {
    if out_height == 0 || out_width == 0 {
        return Err(Error::EmptyGrid);
    }
    let (h, w) = img.dims();
    let tx = cubic_taps(w, out_width);
    let ty = cubic_taps(h, out_height);

    let mut horiz = Vec::with_capacity(h * out_width);
    for r in 0..h {
        let row = &img.data()[r * w..(r + 1) * w];
        for (idx, wt) in &tx {
            horiz.push((0..4).map(|k| wt[k] * row[idx[k]]).sum::<f64>());
        }
    }

    let mut out = Vec::with_capacity(out_height * out_width);
    for (idx, wt) in &ty {
        for c in 0..out_width {
            let v: f64 = (0..4).map(|k| wt[k] * horiz[idx[k] * out_width + c]).sum();
            out.push(v.clamp(0.0, 1.0));
        }
    }
    Image::new(out_height, out_width, out)
}
