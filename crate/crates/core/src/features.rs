//! Per-pixel guide features and the learnable linear transform on top of them.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::image::{FeatureMap, Image};

/// Identifier of a feature provider, as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum FeatureProvider {
    /// Raw intensity, one channel.
    Intensity,
    /// Intensity plus central differences along x and y, three channels.
    #[default]
    IntensityGradient,
    /// The 3×3 neighbourhood, nine channels.
    Patch3,
    /// Features loaded from a file path.
    External(String),
}

impl FeatureProvider {
    /// Channel count of the provider's raw output; unknown for external files.
    pub fn channels(&self) -> Option<usize> {
        match self {
            Self::Intensity => Some(1),
            Self::IntensityGradient => Some(3),
            Self::Patch3 => Some(9),
            Self::External(_) => None,
        }
    }
}

impl fmt::Display for FeatureProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Intensity => f.write_str("intensity"),
            Self::IntensityGradient => f.write_str("intensity_gradient"),
            Self::Patch3 => f.write_str("patch3"),
            Self::External(path) => write!(f, "external:{path}"),
        }
    }
}

impl FromStr for FeatureProvider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intensity" => Ok(Self::Intensity),
            "intensity_gradient" => Ok(Self::IntensityGradient),
            "patch3" => Ok(Self::Patch3),
            _ => match s.strip_prefix("external:") {
                Some(path) if !path.is_empty() => Ok(Self::External(path.to_string())),
                _ => Err(Error::InvalidParameter("unknown feature provider")),
            },
        }
    }
}

/// Resolved feature source: a built-in provider or an already loaded map.
#[derive(Debug, Clone, Copy)]
pub enum FeatureSource<'a> {
    Intensity,
    IntensityGradient,
    Patch3,
    External(&'a FeatureMap),
}

impl<'a> FeatureSource<'a> {
    /// Built-in source for `provider`; `None` for external providers, which
    /// need their file loaded first.
    pub fn builtin(provider: &FeatureProvider) -> Option<Self> {
        match provider {
            FeatureProvider::Intensity => Some(Self::Intensity),
            FeatureProvider::IntensityGradient => Some(Self::IntensityGradient),
            FeatureProvider::Patch3 => Some(Self::Patch3),
            FeatureProvider::External(_) => None,
        }
    }
}

/// Per-pixel linear map `f_out = Tᵀ·f_in`, stored row-major as
/// `inputs × outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTransform {
    inputs: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl LinearTransform {
    pub fn new(inputs: usize, outputs: usize, data: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidParameter("transform dimensions must be positive"));
        }
        check_len(inputs * outputs, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { inputs, outputs, data })
    }

    /// Ones on the leading diagonal, zeros elsewhere; with `outputs < inputs`
    /// this keeps the first `outputs` channels.
    pub fn identity_like(inputs: usize, outputs: usize) -> Result<Self> {
        let mut data = vec![0.0; inputs * outputs];
        for k in 0..inputs.min(outputs) {
            data[k * outputs + k] = 1.0;
        }
        Self::new(inputs, outputs, data)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn apply(&self, features: &FeatureMap) -> Result<FeatureMap> {
        check_len(self.inputs, features.channels())?;
        let mut out = Vec::with_capacity(features.pixels() * self.outputs);
        for p in 0..features.pixels() {
            let fin = features.pixel(p);
            for k in 0..self.outputs {
                out.push((0..self.inputs).map(|m| fin[m] * self.data[m * self.outputs + k]).sum());
            }
        }
        FeatureMap::new(features.height(), features.width(), self.outputs, out)
    }

    /// Gradient with respect to the matrix entries given the gradient of the
    /// transformed features.
    pub fn backward(&self, input: &FeatureMap, d_output: &FeatureMap) -> Result<Vec<f64>> {
        check_len(self.inputs, input.channels())?;
        check_len(self.outputs, d_output.channels())?;
        check_len(input.pixels(), d_output.pixels())?;
        let mut grad = vec![0.0; self.data.len()];
        for p in 0..input.pixels() {
            let fin = input.pixel(p);
            let dout = d_output.pixel(p);
            for m in 0..self.inputs {
                for k in 0..self.outputs {
                    grad[m * self.outputs + k] += fin[m] * dout[k];
                }
            }
        }
        Ok(grad)
    }
}

/// Raw provider output for `guide`.
pub fn provider_features(guide: &Image, source: FeatureSource<'_>) -> Result<FeatureMap> {
    let (h, w) = guide.dims();
    match source {
        FeatureSource::Intensity => FeatureMap::new(h, w, 1, guide.data().to_vec()),
        FeatureSource::IntensityGradient => {
            let mut data = Vec::with_capacity(h * w * 3);
            for r in 0..h as isize {
                for c in 0..w as isize {
                    data.push(guide.get_clamped(r, c));
                    data.push(0.5 * (guide.get_clamped(r, c + 1) - guide.get_clamped(r, c - 1)));
                    data.push(0.5 * (guide.get_clamped(r + 1, c) - guide.get_clamped(r - 1, c)));
                }
            }
            FeatureMap::new(h, w, 3, data)
        }
        FeatureSource::Patch3 => {
            let mut data = Vec::with_capacity(h * w * 9);
            for r in 0..h as isize {
                for c in 0..w as isize {
                    for dr in -1..=1 {
                        for dc in -1..=1 {
                            data.push(guide.get_clamped(r + dr, c + dc));
                        }
                    }
                }
            }
            FeatureMap::new(h, w, 9, data)
        }
        FeatureSource::External(map) => {
            if map.height() != h || map.width() != w {
                return Err(Error::DimensionMismatch("external features do not match the guide size"));
            }
            Ok(map.clone())
        }
    }
}

/// Provider features, optionally mapped through `transform`.
pub fn make_features(
    guide: &Image,
    source: FeatureSource<'_>,
    transform: Option<&LinearTransform>,
) -> Result<FeatureMap> {
    let raw = provider_features(guide, source)?;
    match transform {
        Some(t) => t.apply(&raw),
        None => Ok(raw),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provider_ids_round_trip() {
        for p in [
            FeatureProvider::Intensity,
            FeatureProvider::IntensityGradient,
            FeatureProvider::Patch3,
            FeatureProvider::External("a/b.feat".into()),
        ] {
            assert_eq!(p.to_string().parse::<FeatureProvider>().unwrap(), p);
        }
        assert!("sobel".parse::<FeatureProvider>().is_err());
        assert!("external:".parse::<FeatureProvider>().is_err());
    }

    #[test]
    fn constant_guide_gives_constant_intensity() {
        let g = Image::filled(3, 4, 0.6).unwrap();
        let f = make_features(&g, FeatureSource::Intensity, None).unwrap();
        assert_eq!(f.channels(), 1);
        assert!(f.data().iter().all(|&v| v == 0.6));
    }

    #[test]
    fn step_edge_gradient_is_local() {
        // Columns 0..3 dark, 3..6 bright.
        let g = Image::from_fn(4, 6, |_, c| if c < 3 { 0.1 } else { 0.9 }).unwrap();
        let f = make_features(&g, FeatureSource::IntensityGradient, None).unwrap();
        for r in 0..4 {
            for c in 0..6 {
                let px = f.pixel(r * 6 + c);
                assert_eq!(px[0], g.get(r, c));
                assert_eq!(px[2], 0.0);
                if c == 2 || c == 3 {
                    assert!((px[1] - 0.4).abs() < 1e-15);
                } else {
                    assert_eq!(px[1], 0.0);
                }
            }
        }
    }

    #[test]
    fn external_size_must_match() {
        let g = Image::filled(2, 2, 0.0).unwrap();
        let map = FeatureMap::zeros(2, 3, 4).unwrap();
        assert!(make_features(&g, FeatureSource::External(&map), None).is_err());
        let map = FeatureMap::zeros(2, 2, 4).unwrap();
        assert_eq!(make_features(&g, FeatureSource::External(&map), None).unwrap().channels(), 4);
    }

    #[test]
    fn identity_like_transform_truncates() {
        let g = Image::from_fn(2, 2, |r, c| (r * 2 + c) as f64 * 0.1).unwrap();
        let raw = provider_features(&g, FeatureSource::Patch3).unwrap();
        let t = LinearTransform::identity_like(9, 4).unwrap();
        let out = t.apply(&raw).unwrap();
        for p in 0..4 {
            assert_eq!(out.pixel(p), &raw.pixel(p)[..4]);
        }
        let t = LinearTransform::identity_like(9, 9).unwrap();
        assert_eq!(t.apply(&raw).unwrap(), raw);
        assert!(LinearTransform::identity_like(3, 2).unwrap().apply(&raw).is_err());
    }

    #[test]
    fn transform_backward_matches_definition() {
        let input = FeatureMap::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let d_out = FeatureMap::new(1, 2, 1, vec![0.5, -1.0]).unwrap();
        let t = LinearTransform::new(2, 1, vec![0.3, 0.7]).unwrap();
        // dT[m] = Σ_p in[p][m]·dout[p]
        assert_eq!(t.backward(&input, &d_out).unwrap(), vec![0.5 - 3.0, 1.0 - 4.0]);
    }
}
