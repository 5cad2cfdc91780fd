//! Closed-form section laws used as ground truth.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// A density known in closed form on `[0, support_max]`.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticDensity {
    pub name: &'static str,
    pub support_max: f64,
    density: fn(f64) -> f64,
}

impl AnalyticDensity {
    pub fn square_chord() -> Self {
        AnalyticDensity {
            name: "unit_square_chord",
            support_max: SQRT_2,
            density: square_chord_unchecked,
        }
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(0.0..=self.support_max).contains(&z) {
            return Err(Error::OutOfSupport {
                value: z,
                lo: 0.0,
                hi: self.support_max,
            });
        }
        Ok((self.density)(z))
    }
}

fn square_chord_unchecked(z: f64) -> f64 {
    if z <= 1.0 {
        0.5
    } else {
        let z2 = z * z;
        1.0 / (z2 * (z2 - 1.0).sqrt()) - 0.5
    }
}

/// Chord-length density of isotropic uniformly random lines hitting the
/// unit square: `1/2` on `[0, 1]`, `1/(z²√(z²-1)) - 1/2` on `(1, √2]`.
/// Unbounded as `z → 1+`.
pub fn square_chord_density(z: f64) -> Result<f64> {
    AnalyticDensity::square_chord().eval(z)
}

/// Distribution function of [`square_chord_density`], defined on all of ℝ.
pub fn square_chord_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z <= 1.0 {
        0.5 * z
    } else if z < SQRT_2 {
        0.5 + (z * z - 1.0).sqrt() / z - 0.5 * (z - 1.0)
    } else {
        1.0
    }
}

/// Distribution of the area of an isotropic uniformly random plane section
/// of a ball of radius `r`: with `S ~ U(0, r)` the area is `π(r² - S²)`, so
/// `P(A <= a) = 1 - sqrt(1 - a/(π r²))`.
pub fn ball_section_cdf(a: f64, r: f64) -> Result<f64> {
    let max = PI * r * r;
    if !(0.0..=max).contains(&a) {
        return Err(Error::OutOfSupport { value: a, lo: 0.0, hi: max });
    }
    Ok(1.0 - (1.0 - a / max).max(0.0).sqrt())
}
