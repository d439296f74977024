//! Guided upsampling by graph-regularized least squares.
//!
//! A low-resolution image `y` is lifted to the grid of a high-resolution guide
//! by solving
//!
//! ```text
//! argmin_x ‖Dx − y‖² + λ·xᵀLx        ⇔       (DᵀD + λL)·x = Dᵀy
//! ```
//!
//! where `D` is an area-overlap downsampling operator that handles fractional
//! scale factors and `L` is the Laplacian of a 4-neighbour affinity graph built
//! from per-pixel guide features. The affinity scale `η`, the trade-off `λ`
//! and an optional linear feature transform are trainable: gradients through
//! the argmin are obtained with the implicit function theorem (one adjoint
//! solve per backward pass, see [`grad`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, checkpoints and
//! the command line live in the `gup` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adam;
pub mod augment;
pub mod bench;
mod error;
pub mod features;
pub mod grad;
pub mod graph;
pub mod image;
pub mod metrics;
pub mod pipeline;
pub mod resample;
pub mod rng;
pub mod solve;
pub mod sparse;
pub mod train;

pub use error::{Error, Result};
pub use graph::{AffinityParams, DistanceOrder, Laplacian};
pub use image::{FeatureMap, Image, RgbImage};
pub use resample::{Normalization, ScalePair};
pub use solve::{SolveResult, SystemSpec};
pub use sparse::SparseOperator;
