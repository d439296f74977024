//! Four-neighbour affinity graph and its Laplacian.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::image::FeatureMap;
use crate::sparse::SparseOperator;

/// Exponent `o` of the feature distance `d_o(a, b) = mean_m |a_m − b_m|^o`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DistanceOrder(f64);

impl DistanceOrder {
    pub fn new(o: f64) -> Result<Self> {
        if o > 0.0 && o.is_finite() {
            Ok(Self(o))
        } else {
            Err(Error::InvalidParameter("distance order must be positive and finite"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `|delta|^o`.
    #[inline]
    pub fn power(self, delta: f64) -> f64 {
        let a = libm::fabs(delta);
        match self.0 {
            o if o == 1.0 => a,
            o if o == 2.0 => a * a,
            o => libm::pow(a, o),
        }
    }

    /// Derivative of `|delta|^o` with respect to `delta`. Zero at `delta = 0`
    /// (the limit for `o > 1`, the chosen subgradient otherwise).
    #[inline]
    pub fn power_derivative(self, delta: f64) -> f64 {
        if delta == 0.0 {
            return 0.0;
        }
        let o = self.0;
        let a = libm::fabs(delta);
        let mag = match o {
            o if o == 1.0 => 1.0,
            o if o == 2.0 => 2.0 * a,
            o => o * libm::pow(a, o - 1.0),
        };
        mag.copysign(delta)
    }
}

impl Default for DistanceOrder {
    fn default() -> Self {
        Self(1.5)
    }
}

/// Affinity scale `η` and distance order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityParams {
    pub eta: f64,
    pub order: DistanceOrder,
}

impl AffinityParams {
    pub fn new(eta: f64, order: DistanceOrder) -> Result<Self> {
        if eta > 0.0 && eta.is_finite() {
            Ok(Self { eta, order })
        } else {
            Err(Error::InvalidParameter("eta must be positive and finite"))
        }
    }
}

/// Mean of `|fi_m − fj_m|^o` over the feature channels.
pub fn feature_distance(fi: &[f64], fj: &[f64], order: DistanceOrder) -> Result<f64> {
    check_len(fi.len(), fj.len())?;
    if fi.is_empty() {
        return Err(Error::InvalidParameter("feature vectors must be non-empty"));
    }
    Ok(distance_unchecked(fi, fj, order))
}

#[inline]
pub(crate) fn distance_unchecked(fi: &[f64], fj: &[f64], order: DistanceOrder) -> f64 {
    let sum: f64 = fi.iter().zip(fj).map(|(a, b)| order.power(a - b)).sum();
    sum / fi.len() as f64
}

/// Undirected right/down neighbour pairs `(i, j)` with `i < j`, in row-major
/// order of `i` (right edge before down edge).
pub fn grid_edges(height: usize, width: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(2 * height * width);
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            if c + 1 < width {
                edges.push((i, i + 1));
            }
            if r + 1 < height {
                edges.push((i, i + width));
            }
        }
    }
    edges
}

/// Affinity matrix `W`, degrees `S` and Laplacian `L = S − W` on a pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    height: usize,
    width: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    affinity: SparseOperator,
    degree: Vec<f64>,
    laplacian: SparseOperator,
}

impl Laplacian {
    /// Assembles the graph from one weight per edge of [`grid_edges`].
    pub fn from_edge_weights(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyGrid);
        }
        if height * width < 2 {
            return Err(Error::DegenerateGraph);
        }
        let edges = grid_edges(height, width);
        check_len(edges.len(), weights.len())?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = height * width;
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(4); n];
        for (&(i, j), &w) in edges.iter().zip(&weights) {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        let affinity = SparseOperator::from_rows(n, n, adj.clone())?;
        let degree = affinity.row_sums();
        let lap_rows = adj
            .into_iter()
            .zip(&degree)
            .enumerate()
            .map(|(i, (row, &d))| {
                let mut row: Vec<_> = row.into_iter().map(|(j, w)| (j, -w)).collect();
                row.push((i, d));
                row
            })
            .collect();
        let laplacian = SparseOperator::from_rows(n, n, lap_rows)?;
        Ok(Self { height, width, edges, weights, affinity, degree, laplacian })
    }

    pub fn n(&self) -> usize {
        self.height * self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge weights, parallel to [`Self::edges`].
    pub fn edge_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn affinity(&self) -> &SparseOperator {
        &self.affinity
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.laplacian
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.laplacian.apply(x)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.laplacian.apply_into(x, out)
    }
}

/// Builds `W` with `W_ij = exp(−d_o(f_i, f_j)/η)` over 4-neighbour pairs.
pub fn build_affinity_graph(features: &FeatureMap, params: AffinityParams) -> Result<Laplacian> {
    let AffinityParams { eta, order } = AffinityParams::new(params.eta, params.order)?;
    let (h, w) = (features.height(), features.width());
    if h * w < 2 {
        return Err(Error::DegenerateGraph);
    }
    let weights = grid_edges(h, w)
        .into_iter()
        .map(|(i, j)| libm::exp(-distance_unchecked(features.pixel(i), features.pixel(j), order) / eta))
        .collect();
    Laplacian::from_edge_weights(h, w, weights)
}

/// `xᵀLx`.
pub fn laplacian_quadratic(lap: &Laplacian, x: &[f64]) -> Result<f64> {
    let lx = lap.apply(x)?;
    Ok(x.iter().zip(&lx).map(|(a, b)| a * b).sum())
}
