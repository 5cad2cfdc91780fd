//! Density and distribution-function estimates for section samples.
//!
//! Samples are first moved to the root scale `X = Z^{1/(n-1)}`, where the
//! density starts flat instead of blowing up at zero. A Gaussian kernel
//! estimate with reflection at zero is formed there and optionally mapped
//! back to the volume scale.

mod bandwidth;
mod ecdf;

pub use bandwidth::{
    sheather_jones_bandwidth, sheather_jones_classical, silverman_bandwidth, Bandwidth,
    BandwidthMethod,
};
pub use ecdf::{empirical_cdf, StepCDF};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dim;
use crate::sampler::SectionSample;

/// Kernel sums are truncated at this many bandwidths; the Gaussian tail
/// beyond it is below 1e-21 relative.
const KERNEL_CUTOFF: f64 = 10.0;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Density of `Z^{1/(n-1)}`.
    RootScale,
    /// Density of the section volume `Z` itself.
    VolumeScale,
}

/// A density tabulated on an increasing grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub transform: Scale,
    pub sample_size: usize,
}

impl DensityEstimate {
    /// Linear interpolation on the grid; zero outside it.
    pub fn interpolate(&self, z: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || z < g[0] || z > g[g.len() - 1] {
            return 0.0;
        }
        let k = g.partition_point(|&x| x <= z);
        if k == g.len() {
            return self.values[g.len() - 1];
        }
        let (x0, x1) = (g[k - 1], g[k]);
        let t = (z - x0) / (x1 - x0);
        self.values[k - 1] * (1.0 - t) + self.values[k] * t
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: &[(&str, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "grid,value")?;
        for (x, y) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{x},{y}")?;
        }
        Ok(())
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// `n` equispaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Default root-scale grid: `points` equispaced values on `[0, max(x) + 4h]`.
pub fn default_grid(x: &[f64], h: f64, points: usize) -> Vec<f64> {
    let max = x.iter().copied().fold(0.0, f64::max);
    linspace(0.0, max + 4.0 * h, points)
}

/// Section volumes mapped to the root scale: identity in the plane, square
/// root in space.
pub fn root_transform(sample: &SectionSample) -> Vec<f64> {
    root_transform_values(&sample.values, sample.dim)
}

pub fn root_transform_values(values: &[f64], dim: Dim) -> Vec<f64> {
    match dim {
        Dim::Two => values.to_vec(),
        Dim::Three => values.iter().map(|v| v.sqrt()).collect(),
    }
}

fn gauss(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Gaussian kernel estimate with reflection at zero,
/// `(1/(hN)) Σ k((z - X_i)/h) + k((z + X_i)/h)` for `z >= 0`.
pub fn reflection_kde(x: &[f64], h: f64, grid: &[f64]) -> Result<DensityEstimate> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    if x.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("reflection estimate needs finite X_i >= 0".into()));
    }
    if grid.iter().any(|&z| !(z >= 0.0)) {
        return Err(Error::InvalidArgument("reflection estimate is defined for z >= 0".into()));
    }
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let reach = KERNEL_CUTOFF * h;
    let scale = 1.0 / (h * sorted.len() as f64);

    let values: Vec<f64> = grid
        .par_iter()
        .map(|&z| {
            let lo = sorted.partition_point(|&v| v < z - reach);
            let hi = sorted.partition_point(|&v| v <= z + reach);
            let mut acc: f64 = sorted[lo..hi].iter().map(|&v| gauss((z - v) / h)).sum();
            if z < reach {
                let top = sorted.partition_point(|&v| v <= reach - z);
                acc += sorted[..top].iter().map(|&v| gauss((z + v) / h)).sum::<f64>();
            }
            acc * scale
        })
        .collect();

    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        bandwidth: h,
        transform: Scale::RootScale,
        sample_size: x.len(),
    })
}

/// Classical Gaussian kernel estimate `(1/(hN)) Σ k((z - X_i)/h)`, summed
/// over every sample point without truncation.
pub fn classical_kde(x: &[f64], h: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let scale = 1.0 / (h * x.len() as f64);
    Ok(grid
        .par_iter()
        .map(|&z| x.iter().map(|&v| gauss((z - v) / h)).sum::<f64>() * scale)
        .collect())
}

/// Change of variables from the root scale to the volume scale,
/// `g(z) = g^S(z^{1/(n-1)}) z^{(2-n)/(n-1)} / (n-1)`, with `g^S` linearly
/// interpolated from `est`.
pub fn untransform_density(est: &DensityEstimate, dim: Dim, grid: &[f64]) -> Result<DensityEstimate> {
    if est.transform != Scale::RootScale {
        return Err(Error::InvalidArgument("estimate is already on the volume scale".into()));
    }
    if grid.iter().any(|&z| z < 0.0) {
        return Err(Error::InvalidArgument("volume-scale grid must be nonnegative".into()));
    }
    let values = match dim {
        Dim::Two => grid.iter().map(|&z| est.interpolate(z)).collect(),
        Dim::Three => {
            if grid.contains(&0.0) {
                return Err(Error::ZeroGridPoint);
            }
            grid.iter()
                .map(|&z| {
                    let r = z.sqrt();
                    est.interpolate(r) / (2.0 * r)
                })
                .collect()
        }
    };
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        bandwidth: est.bandwidth,
        transform: Scale::VolumeScale,
        sample_size: est.sample_size,
    })
}

/// Volume-scale grid matching a root-scale one: `points` equispaced values
/// on `(0, r_max^{n-1}]`, excluding zero.
pub fn volume_grid(root_grid: &[f64], dim: Dim, points: usize) -> Vec<f64> {
    let r_max = root_grid.last().copied().unwrap_or(0.0);
    let z_max = match dim {
        Dim::Two => r_max,
        Dim::Three => r_max * r_max,
    };
    (1..=points).map(|k| z_max * k as f64 / points as f64).collect()
}
