//! Random hyperplane sections of a convex body.
//!
//! IUR draws use rejection sampling from an enclosing ball: an isotropic
//! normal `Θ`, an offset `S ~ U(0, R)`, accept when the plane meets the body.
//! FUR draws fix the normal and take the offset uniform on the support
//! interval.
//!
//! Work is split into shards of [`SHARD_SIZE`] accepted values; shard `i`
//! draws from `rng.child(i)` and the shards are concatenated in order. The
//! output is therefore identical for every worker count.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Dim, Direction, Hyperplane};
use crate::rng::RngStream;

pub const SHARD_SIZE: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionDesign {
    /// Isotropic uniformly random planes.
    Iur,
    /// Fixed orientation, uniformly random offset.
    Fur,
}

/// A batch of section volumes with acceptance bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionSample {
    pub values: Vec<f64>,
    pub n_proposed: u64,
    pub n_accepted: u64,
    /// Accepted sections of zero volume (planes grazing a vertex or edge).
    #[serde(default)]
    pub n_zero: u64,
    pub seed: u64,
    pub body_label: String,
    pub dim: Dim,
    pub design: SectionDesign,
}

impl SectionSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One value per line after a `#`-commented metadata header. `extra`
    /// lines are appended to the header verbatim.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[(&str, String)]) -> std::io::Result<()> {
        writeln!(w, "# body_label: {}", self.body_label)?;
        writeln!(w, "# dim: {}", self.dim)?;
        writeln!(w, "# design: {}", serde_json::to_value(self.design).unwrap().as_str().unwrap())?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# n_proposed: {}", self.n_proposed)?;
        writeln!(w, "# n_accepted: {}", self.n_accepted)?;
        writeln!(w, "# n_zero: {}", self.n_zero)?;
        for (k, v) in extra {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "value")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

/// Isotropic unit direction.
///
/// Plane: `Θ = (cos Φ, sin Φ)`, `Φ ~ U(0, 2π)`. Space: `Φ ~ U(0, 2π)`,
/// `X ~ U(-1, 1)`, `Ω = arccos X`, `Θ = (sin Ω cos Φ, sin Ω sin Φ, cos Ω)`.
pub fn sample_direction<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Direction {
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    match dim {
        Dim::Two => Direction::from_angle(phi),
        Dim::Three => {
            let x = 2.0 * rng.random::<f64>() - 1.0;
            Direction::from_polar(x, phi)
        }
    }
}

struct Shard {
    values: Vec<f64>,
    proposed: u64,
}

fn shard_lengths(n: usize) -> Vec<usize> {
    let full = n / SHARD_SIZE;
    let mut lens = vec![SHARD_SIZE; full];
    if n % SHARD_SIZE != 0 {
        lens.push(n % SHARD_SIZE);
    }
    lens
}

fn assemble(shards: Vec<Shard>, body: &ConvexBody, seed: u64, design: SectionDesign) -> SectionSample {
    let n_proposed = shards.iter().map(|s| s.proposed).sum();
    let values: Vec<f64> = shards.into_iter().flat_map(|s| s.values).collect();
    SectionSample {
        n_accepted: values.len() as u64,
        n_zero: values.iter().filter(|&&v| v == 0.0).count() as u64,
        values,
        n_proposed,
        seed,
        body_label: body.label().to_string(),
        dim: body.dim(),
        design,
    }
}

/// `n` i.i.d. section volumes of isotropic uniformly random planes hitting
/// `body`.
///
/// The body is first translated so its centroid is at the origin; the
/// enclosing radius is the largest centroid-to-vertex distance.
pub fn sample_iur_sections(body: &ConvexBody, n: usize, rng: RngStream) -> Result<SectionSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    body.validate()?;
    let centered = body.centered()?;
    let radius = centered.enclosing_radius(&crate::geometry::Point::zeros());
    let dim = centered.dim();

    let shards: Vec<Shard> = shard_lengths(n)
        .into_par_iter()
        .enumerate()
        .map(|(i, len)| {
            let mut g = rng.child(i as u64).generator();
            let mut values = Vec::with_capacity(len);
            let mut proposed = 0u64;
            while values.len() < len {
                proposed += 1;
                let theta = sample_direction(dim, &mut g);
                let s = radius * g.random::<f64>();
                if !centered.support_interval(&theta).contains(s) {
                    continue;
                }
                values.push(centered.section_volume(&Hyperplane::new(theta, s)));
            }
            Shard { values, proposed }
        })
        .collect();
    Ok(assemble(shards, body, rng.seed, SectionDesign::Iur))
}

/// `n` section volumes of planes with normal `direction` and offset uniform
/// on the support interval. Every proposal is accepted.
pub fn sample_fur_sections(
    body: &ConvexBody,
    direction: &Direction,
    n: usize,
    rng: RngStream,
) -> Result<SectionSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    if direction.dim() != body.dim() {
        return Err(Error::InvalidArgument("direction and body dimension differ".into()));
    }
    let support = body.support_interval(direction);
    let shards: Vec<Shard> = shard_lengths(n)
        .into_par_iter()
        .enumerate()
        .map(|(i, len)| {
            let mut g = rng.child(i as u64).generator();
            let values = (0..len)
                .map(|_| {
                    let s = support.a + support.width() * g.random::<f64>();
                    body.section_volume(&Hyperplane::new(*direction, s))
                })
                .collect();
            Shard {
                values,
                proposed: len as u64,
            }
        })
        .collect();
    Ok(assemble(shards, body, rng.seed, SectionDesign::Fur))
}

/// Fraction of proposals accepted.
pub fn acceptance_estimate(sample: &SectionSample) -> Result<f64> {
    if sample.n_proposed == 0 {
        return Err(Error::EmptySample);
    }
    Ok(sample.n_accepted as f64 / sample.n_proposed as f64)
}

/// Runs `f` on a dedicated pool of `workers` threads. Sampling results do
/// not depend on the worker count.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}
