//! Cross-spectral augmentation: two random hue→gray renderings of one RGB
//! image.
//!
//! A handful of anchor hues is drawn uniformly on the hue circle and each
//! anchor gets a random gray level per rendering. A pixel's gray is the
//! circular piecewise-linear interpolation of the anchor grays at its hue,
//! multiplied by its HSV value. Pixels without a hue (zero saturation) take
//! the mean anchor gray. Both renderings share the anchors and the value
//! channel, so they are geometrically aligned while their intensities are
//! unrelated.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{Image, RgbImage};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentSpec {
    pub anchor_count: usize,
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self { anchor_count: 6, seed: 0 }
    }
}

/// `(hue in degrees, saturation, value)`; hue is `None` for grays.
pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> (Option<f64>, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta <= 0.0 {
        return (None, s, max);
    }
    let h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (Some(if h < 0.0 { h + 360.0 } else { h }), s, max)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = libm::fmod(libm::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - libm::fabs(libm::fmod(h, 2.0) - 1.0));
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Piecewise-linear gray level on the hue circle.
#[derive(Debug, Clone, PartialEq)]
pub struct HueMapping {
    hues: Vec<f64>,
    grays: Vec<f64>,
}

impl HueMapping {
    /// `hues` must be sorted in `[0, 360)` and parallel to `grays`.
    pub fn new(hues: Vec<f64>, grays: Vec<f64>) -> Result<Self> {
        if hues.len() < 2 || hues.len() != grays.len() {
            return Err(Error::InvalidParameter("a hue mapping needs at least two anchors"));
        }
        if hues.windows(2).any(|w| w[0] > w[1]) || hues.iter().any(|h| !(0.0..360.0).contains(h)) {
            return Err(Error::InvalidParameter("anchor hues must be sorted in [0, 360)"));
        }
        if grays.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::InvalidParameter("anchor grays must lie in [0, 1]"));
        }
        Ok(Self { hues, grays })
    }

    pub fn mean_gray(&self) -> f64 {
        self.grays.iter().sum::<f64>() / self.grays.len() as f64
    }

    /// Gray level for a hue (degrees), wrapping from the last anchor to the first.
    pub fn gray(&self, hue: Option<f64>) -> f64 {
        let Some(h) = hue else {
            return self.mean_gray();
        };
        let n = self.hues.len();
        let k = self.hues.partition_point(|&a| a <= h);
        let (i0, i1) = if k == 0 || k == n { (n - 1, 0) } else { (k - 1, k) };
        let a0 = self.hues[i0];
        let mut a1 = self.hues[i1];
        let mut hh = h;
        if i1 == 0 {
            a1 += 360.0;
            if hh < a0 {
                hh += 360.0;
            }
        }
        let span = a1 - a0;
        if span <= 0.0 {
            return self.grays[i0];
        }
        let t = (hh - a0) / span;
        self.grays[i0] + t * (self.grays[i1] - self.grays[i0])
    }

    pub fn render(&self, rgb: &RgbImage) -> Result<Image> {
        let data = rgb
            .pixels()
            .iter()
            .map(|&px| {
                let (h, _, v) = rgb_to_hsv(px);
                self.gray(h) * v
            })
            .collect();
        Image::new(rgb.height(), rgb.width(), data)
    }
}

/// Shared anchor hues with independent gray levels for the guide and the
/// target rendering.
pub fn random_mappings(spec: &AugmentSpec) -> Result<(HueMapping, HueMapping)> {
    if spec.anchor_count < 2 {
        return Err(Error::InvalidParameter("anchor_count must be at least 2"));
    }
    let mut rng = rng::seeded(spec.seed);
    let mut hues: Vec<f64> = (0..spec.anchor_count).map(|_| rng::uniform(&mut rng, 0.0, 360.0)).collect();
    hues.sort_by(f64::total_cmp);
    let guide: Vec<f64> = (0..spec.anchor_count).map(|_| rng.gen::<f64>()).collect();
    let target: Vec<f64> = (0..spec.anchor_count).map(|_| rng.gen::<f64>()).collect();
    Ok((HueMapping::new(hues.clone(), guide)?, HueMapping::new(hues, target)?))
}

/// Returns `(guide, target)` renderings of `rgb`.
pub fn augment_cross_spectral(rgb: &RgbImage, spec: &AugmentSpec) -> Result<(Image, Image)> {
    let (guide_map, target_map) = random_mappings(spec)?;
    Ok((guide_map.render(rgb)?, target_map.render(rgb)?))
}
