use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous, piecewise-constant distribution function with finitely
/// many jumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCDF {
    locations: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepCDF {
    /// Builds a step CDF from atoms and nonnegative weights. Weights are
    /// normalized to sum to one; tied locations are merged and zero-weight
    /// atoms dropped.
    pub fn from_atoms(locations: &[f64], weights: &[f64]) -> Result<Self> {
        if locations.len() != weights.len() {
            return Err(Error::InvalidArgument("locations and weights differ in length".into()));
        }
        if locations.iter().chain(weights).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite atom".into()));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptySample);
        }
        let mut atoms: Vec<(f64, f64)> = locations
            .iter()
            .copied()
            .zip(weights.iter().copied())
            .filter(|&(_, w)| w > 0.0)
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut locs: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut mass: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if locs.last() == Some(&x) {
                *mass.last_mut().unwrap() += w;
            } else {
                locs.push(x);
                mass.push(w);
            }
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = mass
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(StepCDF {
            locations: locs,
            cumulative,
        })
    }

    /// Point mass at `x`.
    pub fn point_mass(x: f64) -> Self {
        StepCDF {
            locations: vec![x],
            cumulative: vec![1.0],
        }
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Jump sizes, aligned with [`Self::locations`].
    pub fn weights(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let w = c - prev;
                prev = c;
                w
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// `F(x)`, the mass at or below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.locations.partition_point(|&l| l <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `sup_x |F(x) - G(x)|` for a continuous `G`, checked at both one-sided
    /// limits of every jump.
    pub fn sup_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut prev = 0.0;
        let mut worst = 0.0f64;
        for (&x, &c) in self.locations.iter().zip(&self.cumulative) {
            let g = cdf(x);
            worst = worst.max((g - prev).abs()).max((g - c).abs());
            prev = c;
        }
        worst
    }

    pub fn mean(&self) -> f64 {
        self.locations
            .iter()
            .zip(self.weights())
            .map(|(x, w)| x * w)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: &[(&str, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "location,cumulative")?;
        for (x, c) in self.locations.iter().zip(&self.cumulative) {
            writeln!(w, "{x},{c}")?;
        }
        Ok(())
    }
}

/// Empirical distribution function of `x`; tied values share one jump of
/// size `multiplicity / n`.
pub fn empirical_cdf(x: &[f64]) -> Result<StepCDF> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in sample".into()));
    }
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut locations = Vec::new();
    let mut cumulative = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if locations.last() == Some(&v) {
            *cumulative.last_mut().unwrap() = (i + 1) as f64 / n;
        } else {
            locations.push(v);
            cumulative.push((i + 1) as f64 / n);
        }
    }
    Ok(StepCDF {
        locations,
        cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_basics() {
        let f = empirical_cdf(&[3.0, 1.0, 2.0]).unwrap();
        assert!((f.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.eval(3.0), 1.0);
        assert_eq!(f.eval(0.5), 0.0);
        assert!(matches!(empirical_cdf(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn ties_are_merged() {
        let f = empirical_cdf(&[1.0, 2.0, 2.0, 2.0]).unwrap();
        assert_eq!(f.locations(), &[1.0, 2.0]);
        assert_eq!(f.weights(), vec![0.25, 0.75]);
        assert_eq!(f.eval(1.999), 0.25);
    }

    #[test]
    fn atoms_normalize_and_merge() {
        let f = StepCDF::from_atoms(&[2.0, 1.0, 2.0, 5.0], &[1.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.locations(), &[1.0, 2.0]);
        assert!((f.weights()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(StepCDF::from_atoms(&[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn sup_distance_sees_both_sides_of_a_jump() {
        let f = StepCDF::point_mass(0.5);
        let d = f.sup_distance(|x| x.clamp(0.0, 1.0));
        assert!((d - 0.5).abs() < 1e-15);
    }
}
