//! Bivariate Gaussian kernel density estimation on a fixed field grid.
//!
//! Every density in a session is evaluated on the same [`FieldGrid`] so that
//! densities can be mixed, compared and integrated node by node. Values are
//! densities per square foot; integrate with the midpoint rule by multiplying
//! each node by [`FieldGrid::cell_area`].
//!
//! The kernel is a product of two univariate normals with per-axis scale
//! `sigma`. Bandwidth selection follows the normal reference rule used by
//! `MASS::kde2d`: `h = 4 * 1.06 * min(sd, IQR / 1.34) * n^(-1/5)` with the
//! kernel scale `sigma = h / 4`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SeamError};

/// Mass below this fraction is reported as leaking off the grid.
pub const MASS_LEAK_TOLERANCE: f64 = 0.10;

/// Kernel-scale fallback, in feet of `h`, for samples with no spread.
pub const FALLBACK_NRD: f64 = 1.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl Default for FieldGrid {
    fn default() -> Self {
        Self {
            x_range: [-250.0, 250.0],
            y_range: [-30.0, 450.0],
            nx: 200,
            ny: 200,
        }
    }
}

impl FieldGrid {
    pub fn new(x_range: [f64; 2], y_range: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        let grid = Self {
            x_range,
            y_range,
            nx,
            ny,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Default extents with a custom resolution.
    pub fn with_resolution(nx: usize, ny: usize) -> Result<Self> {
        let d = Self::default();
        Self::new(d.x_range, d.y_range, nx, ny)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(SeamError::InvalidGrid(format!(
                "need at least 2 nodes per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        for (name, r) in [("x", self.x_range), ("y", self.y_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(SeamError::InvalidGrid(format!(
                    "{name} range [{}, {}] is not an increasing finite interval",
                    r[0], r[1]
                )));
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_range[1] - self.x_range[0]) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_range[1] - self.y_range[0]) / (self.ny - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node_x(&self, ix: usize) -> f64 {
        self.x_range[0] + ix as f64 * self.dx()
    }

    pub fn node_y(&self, iy: usize) -> f64 {
        self.y_range[0] + iy as f64 * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.node_x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.node_y(i)).collect()
    }

    /// Row-major index: rows run along y, columns along x.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }
}

/// Per-axis Gaussian kernel scale in feet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub sigma: [f64; 2],
}

impl Bandwidth {
    pub fn new(sigma_x: f64, sigma_y: f64) -> Result<Self> {
        for s in [sigma_x, sigma_y] {
            if !(s.is_finite() && s > 0.0) {
                return Err(SeamError::InvalidBandwidth(format!(
                    "kernel scale must be positive and finite, got {s}"
                )));
            }
        }
        Ok(Self {
            sigma: [sigma_x, sigma_y],
        })
    }

    /// From `kde2d`-style `h` values, whose Gaussian scale is `h / 4`.
    pub fn from_nrd(hx: f64, hy: f64) -> Result<Self> {
        Self::new(hx / 4.0, hy / 4.0)
    }
}

/// One axis of a normal reference bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBandwidth {
    /// `kde2d`-style `h`; the kernel scale is `h / 4`.
    pub h: f64,
    /// Set when the sample had no usable spread and `FALLBACK_NRD` was used.
    pub fallback: bool,
}

impl AxisBandwidth {
    pub fn sigma(&self) -> f64 {
        self.h / 4.0
    }
}

/// Normal reference rule for one axis.
pub fn normal_reference_bandwidth(values: &[f64]) -> AxisBandwidth {
    let n = values.len();
    if n < 2 {
        return fallback();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    nrd(var.sqrt(), iqr, n as f64)
}

/// Normal reference rule over a weighted sample.
///
/// Uses the reliability-weighted variance, weighted type-7 quantiles and the
/// Kish effective sample size; with equal weights this reduces exactly to
/// [`normal_reference_bandwidth`]. Zero-weight points are ignored.
pub fn weighted_normal_reference_bandwidth(values: &[f64], weights: &[f64]) -> AxisBandwidth {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| (v, w))
        .collect();
    if pairs.len() < 2 {
        return fallback();
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
    let mean = pairs.iter().map(|(v, w)| v * w).sum::<f64>() / total;
    let denom = total - total_sq / total;
    if denom <= 0.0 {
        return fallback();
    }
    let var = pairs.iter().map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / denom;
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let iqr = weighted_quantile_sorted(&pairs, 0.75) - weighted_quantile_sorted(&pairs, 0.25);
    let n_eff = total * total / total_sq;
    nrd(var.sqrt(), iqr, n_eff)
}

fn fallback() -> AxisBandwidth {
    AxisBandwidth {
        h: FALLBACK_NRD,
        fallback: true,
    }
}

fn nrd(sd: f64, iqr: f64, n: f64) -> AxisBandwidth {
    let robust = iqr / 1.34;
    // A zero IQR with nonzero spread (heavy ties) falls back to the sd alone.
    let spread = if robust > 0.0 { sd.min(robust) } else { sd };
    if !(spread.is_finite() && spread > 0.0) {
        return fallback();
    }
    AxisBandwidth {
        h: 4.0 * 1.06 * spread * n.powf(-0.2),
        fallback: false,
    }
}

/// R's default (type 7) quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Type-7 quantile generalized to weights: the k-th order statistic sits at
/// plotting position `(C_k - w_k) / (W - w_n)` where `C_k` is the cumulative
/// weight. Equal weights give the unweighted positions `(k - 1) / (n - 1)`.
fn weighted_quantile_sorted(pairs: &[(f64, f64)], p: f64) -> f64 {
    let total: f64 = pairs.iter().map(|x| x.1).sum();
    let span = total - pairs[pairs.len() - 1].1;
    let mut cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(v, w) in pairs {
        let pos = cum / span;
        cum += w;
        if pos >= p {
            return match prev {
                Some((pv, ppos)) if pos > ppos => pv + (p - ppos) / (pos - ppos) * (v - pv),
                _ => v,
            };
        }
        prev = Some((v, pos));
    }
    pairs[pairs.len() - 1].0
}

/// Bandwidth picked for one KDE call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthChoice {
    pub bandwidth: Bandwidth,
    /// An axis had no spread and used the fallback.
    pub fallback: bool,
    /// An axis scale was raised to the grid node spacing.
    pub floored: bool,
}

/// Per-axis normal reference bandwidth for a (possibly weighted) point set.
///
/// Kernel scales below one node spacing cannot be integrated on the grid, so
/// each axis is floored at the grid spacing.
pub fn select_bandwidth(
    points: &[[f64; 2]],
    weights: Option<&[f64]>,
    grid: &FieldGrid,
) -> Result<BandwidthChoice> {
    if points.is_empty() {
        return Err(SeamError::EmptySample);
    }
    let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
    let (bx, by) = match weights {
        Some(w) => (
            weighted_normal_reference_bandwidth(&xs, w),
            weighted_normal_reference_bandwidth(&ys, w),
        ),
        None => (normal_reference_bandwidth(&xs), normal_reference_bandwidth(&ys)),
    };
    let (sx, fx) = floor_scale(bx.sigma(), grid.dx());
    let (sy, fy) = floor_scale(by.sigma(), grid.dy());
    Ok(BandwidthChoice {
        bandwidth: Bandwidth::new(sx, sy)?,
        fallback: bx.fallback || by.fallback,
        floored: fx || fy,
    })
}

fn floor_scale(sigma: f64, spacing: f64) -> (f64, bool) {
    if sigma < spacing {
        (spacing, true)
    } else {
        (sigma, false)
    }
}

/// Density values on a [`FieldGrid`], row-major (`values[iy * nx + ix]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    #[serde(flatten)]
    pub grid: FieldGrid,
    pub values: Vec<f64>,
    /// Effective sample size backing the estimate.
    pub n_effective: f64,
}

impl DensityGrid {
    pub fn new(grid: FieldGrid, values: Vec<f64>, n_effective: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(SeamError::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SeamError::InvalidGrid(
                "density values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            n_effective,
        })
    }

    /// Evaluates `f(x, y)` at every node.
    pub fn from_fn(grid: FieldGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = grid.xs();
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            let y = grid.node_y(iy);
            values.extend(xs.iter().map(|&x| f(x, y)));
        }
        Self {
            grid,
            values,
            n_effective: 0.0,
        }
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// Midpoint-rule integral over the grid.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// True when more than `MASS_LEAK_TOLERANCE` of the mass fell off the grid.
    pub fn leaks_mass(&self) -> bool {
        self.mass() < 1.0 - MASS_LEAK_TOLERANCE
    }

    /// Node `(ix, iy)` holding the largest value; first in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best % self.grid.nx, best / self.grid.nx)
    }

    /// Keeps every `stride`-th node so each axis has at most `max_nodes`.
    /// Values are point densities, so they are copied, not averaged.
    pub fn downsample(&self, max_nodes: usize) -> Self {
        let max_nodes = max_nodes.max(2);
        let stride = |n: usize| {
            let mut s = 1;
            while (n - 1) / s + 1 > max_nodes {
                s += 1;
            }
            s
        };
        let (sx, sy) = (stride(self.grid.nx), stride(self.grid.ny));
        if sx == 1 && sy == 1 {
            return self.clone();
        }
        let nx = (self.grid.nx - 1) / sx + 1;
        let ny = (self.grid.ny - 1) / sy + 1;
        let grid = FieldGrid {
            x_range: [self.grid.x_range[0], self.grid.node_x((nx - 1) * sx)],
            y_range: [self.grid.y_range[0], self.grid.node_y((ny - 1) * sy)],
            nx,
            ny,
        };
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                values.push(self.value(ix * sx, iy * sy));
            }
        }
        Self {
            grid,
            values,
            n_effective: self.n_effective,
        }
    }

    const MAGIC: &'static [u8; 8] = b"SEAMDG1\0";

    /// Little-endian binary encoding for the on-disk cache.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.values.len());
        out.extend_from_slice(Self::MAGIC);
        for v in [
            self.grid.x_range[0],
            self.grid.x_range[1],
            self.grid.y_range[0],
            self.grid.y_range[1],
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.grid.nx as u32).to_le_bytes());
        out.extend_from_slice(&(self.grid.ny as u32).to_le_bytes());
        out.extend_from_slice(&self.n_effective.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| SeamError::CorruptCache(m.to_string());
        if bytes.len() < 8 + 32 + 8 + 8 || &bytes[..8] != Self::MAGIC {
            return Err(corrupt("bad density grid header"));
        }
        let f = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let u = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let grid = FieldGrid {
            x_range: [f(8), f(16)],
            y_range: [f(24), f(32)],
            nx: u(40),
            ny: u(44),
        };
        let n_effective = f(48);
        let body = &bytes[56..];
        if body.len() != 8 * grid.nx * grid.ny {
            return Err(corrupt("density grid body has the wrong length"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(grid, values, n_effective)
    }
}

fn axis_kernel(nodes: &[f64], center: f64, sigma: f64) -> Vec<f64> {
    let norm = INV_SQRT_2PI / sigma;
    nodes
        .iter()
        .map(|&g| {
            let z = (g - center) / sigma;
            norm * (-0.5 * z * z).exp()
        })
        .collect()
}

fn kernel_sum(points: &[[f64; 2]], weights: &[f64], bandwidth: &Bandwidth, grid: &FieldGrid) -> Vec<f64> {
    let xs = grid.xs();
    let ys = grid.ys();
    let [sx, sy] = bandwidth.sigma;
    let total: f64 = weights.iter().sum();
    let kept: Vec<(Vec<f64>, Vec<f64>, f64)> = points
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(p, &w)| (axis_kernel(&xs, p[0], sx), axis_kernel(&ys, p[1], sy), w / total))
        .collect();

    let mut values = vec![0.0; grid.len()];
    values.par_chunks_mut(grid.nx).enumerate().for_each(|(iy, row)| {
        for (kx, ky, w) in &kept {
            let a = w * ky[iy];
            if a == 0.0 {
                continue;
            }
            for (v, k) in row.iter_mut().zip(kx) {
                *v += a * k;
            }
        }
    });
    values
}

/// Unweighted product-Gaussian KDE evaluated at every grid node.
pub fn kde2(points: &[[f64; 2]], bandwidth: &Bandwidth, grid: &FieldGrid) -> Result<DensityGrid> {
    if points.is_empty() {
        return Err(SeamError::EmptySample);
    }
    grid.validate()?;
    let weights = vec![1.0; points.len()];
    let values = kernel_sum(points, &weights, bandwidth, grid);
    Ok(DensityGrid {
        grid: *grid,
        values,
        n_effective: points.len() as f64,
    })
}

/// Weighted KDE: `sum_i w_i K(g - y_i) / sum_i w_i`.
///
/// `n_effective` is the Kish effective sample size of the weights.
pub fn kde2_weighted(
    points: &[[f64; 2]],
    weights: &[f64],
    bandwidth: &Bandwidth,
    grid: &FieldGrid,
) -> Result<DensityGrid> {
    if points.is_empty() {
        return Err(SeamError::EmptySample);
    }
    if weights.len() != points.len() {
        return Err(SeamError::InvalidArgument(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(SeamError::InvalidArgument(
            "kernel weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(SeamError::ZeroWeights);
    }
    grid.validate()?;
    let total_sq: f64 = weights.iter().map(|w| w * w).sum();
    let values = kernel_sum(points, weights, bandwidth, grid);
    Ok(DensityGrid {
        grid: *grid,
        values,
        n_effective: total * total / total_sq,
    })
}

/// Pointwise convex combination of densities sharing one grid.
pub fn mix(grids: &[&DensityGrid], coefficients: &[f64]) -> Result<DensityGrid> {
    if grids.is_empty() || grids.len() != coefficients.len() {
        return Err(SeamError::InvalidCoefficients(format!(
            "{} grids with {} coefficients",
            grids.len(),
            coefficients.len()
        )));
    }
    if coefficients.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(SeamError::InvalidCoefficients(
            "coefficients must be nonnegative".into(),
        ));
    }
    let sum: f64 = coefficients.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SeamError::InvalidCoefficients(format!(
            "coefficients sum to {sum}, not 1"
        )));
    }
    let grid = grids[0].grid;
    if grids.iter().any(|g| g.grid != grid) {
        return Err(SeamError::GridMismatch);
    }
    let mut values = vec![0.0; grid.len()];
    let mut n_effective = 0.0;
    for (g, &c) in grids.iter().zip(coefficients) {
        if c == 0.0 {
            continue;
        }
        for (v, x) in values.iter_mut().zip(&g.values) {
            *v += c * x;
        }
        n_effective += c * g.n_effective;
    }
    Ok(DensityGrid {
        grid,
        values,
        n_effective,
    })
}

/// Product of two univariate normal densities; used by tests and ground truths.
pub fn gaussian_2d(x: f64, y: f64, mean: [f64; 2], sd: [f64; 2]) -> f64 {
    let zx = (x - mean[0]) / sd[0];
    let zy = (y - mean[1]) / sd[1];
    (-0.5 * (zx * zx + zy * zy)).exp() / (2.0 * PI * sd[0] * sd[1])
}
