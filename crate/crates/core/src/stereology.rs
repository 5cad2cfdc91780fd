//! Particle-size unfolding from planar section profiles.
//!
//! Particles are scaled copies `λK` of a reference body `K`. A section plane
//! hits particles with probability proportional to their size, so the sizes
//! seen in the plane follow the length-biased law `H^b`, and the root-scale
//! profile size is `S = Λ^b X` with `X ~ g_K^S` independent of `Λ^b`:
//!
//! ```text
//! f_S(s) = ∫ g_K^S(s/λ) (1/λ) dH^b(λ)
//! ```
//!
//! [`npmle_em`] maximizes the corresponding log-likelihood over step
//! distributions with jumps at the observations.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma as GammaLaw};

use crate::density::{
    default_grid, reflection_kde, root_transform, sheather_jones_bandwidth, trapezoid, Bandwidth,
    DensityEstimate, StepCDF,
};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::rng::RngStream;
use crate::sampler::{sample_iur_sections, SectionSample};

/// Observation rows per parallel block in the EM sweeps. Fixed so that
/// floating-point reductions do not depend on the worker count.
const EM_BLOCK_ROWS: usize = 64;
/// Atoms lighter than this are dropped from the final estimate.
pub const PRUNE_WEIGHT: f64 = 1e-12;

/// Distribution of particle sizes `λ > 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum SizeDistribution {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    PointMass { at: f64 },
    Step(StepCDF),
}

impl SizeDistribution {
    fn check(&self) -> Result<()> {
        let ok = match self {
            SizeDistribution::Exponential { rate } => *rate > 0.0 && rate.is_finite(),
            SizeDistribution::Gamma { shape, rate } => {
                *shape > 0.0 && *rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
            SizeDistribution::PointMass { at } => *at > 0.0 && at.is_finite(),
            SizeDistribution::Step(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid size distribution {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SizeDistribution::Exponential { rate } => 1.0 / rate,
            SizeDistribution::Gamma { shape, rate } => shape / rate,
            SizeDistribution::PointMass { at } => *at,
            SizeDistribution::Step(f) => f.mean(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            SizeDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * x).exp()
                }
            }
            SizeDistribution::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    GammaLaw::new(*shape, *rate).expect("validated parameters").cdf(x)
                }
            }
            SizeDistribution::PointMass { at } => {
                if x >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            SizeDistribution::Step(f) => f.eval(x),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SizeDistribution::Exponential { rate } => {
                Gamma::new(1.0, 1.0 / rate).expect("validated parameters").sample(rng)
            }
            SizeDistribution::Gamma { shape, rate } => {
                Gamma::new(*shape, 1.0 / rate).expect("validated parameters").sample(rng)
            }
            SizeDistribution::PointMass { at } => *at,
            SizeDistribution::Step(f) => {
                let u: f64 = rng.random();
                let k = f.cumulative().partition_point(|&c| c <= u);
                f.locations()[k.min(f.len() - 1)]
            }
        }
    }
}

/// `H^b(λ) = ∫_0^λ x dH(x) / ∫_0^∞ x dH(x)`.
pub fn length_biased(h: &SizeDistribution) -> Result<SizeDistribution> {
    h.check()?;
    Ok(match h {
        SizeDistribution::Exponential { rate } => SizeDistribution::Gamma {
            shape: 2.0,
            rate: *rate,
        },
        SizeDistribution::Gamma { shape, rate } => SizeDistribution::Gamma {
            shape: shape + 1.0,
            rate: *rate,
        },
        SizeDistribution::PointMass { at } => SizeDistribution::PointMass { at: *at },
        SizeDistribution::Step(f) => {
            if f.locations().iter().any(|&x| x < 0.0) {
                return Err(Error::ZeroLocation);
            }
            let biased: Vec<f64> = f
                .locations()
                .iter()
                .zip(f.weights())
                .map(|(x, w)| x * w)
                .collect();
            let total: f64 = biased.iter().sum();
            if !(total > 0.0 && total.is_finite()) {
                return Err(Error::InfiniteMean);
            }
            SizeDistribution::Step(StepCDF::from_atoms(f.locations(), &biased)?)
        }
    })
}

/// Inverse of [`length_biased`]: reweights by `1/λ`.
pub fn unbias(hb: &SizeDistribution) -> Result<SizeDistribution> {
    hb.check()?;
    Ok(match hb {
        SizeDistribution::Step(f) => {
            if f.locations().iter().any(|&x| x <= 0.0) {
                return Err(Error::ZeroLocation);
            }
            let w: Vec<f64> = f
                .locations()
                .iter()
                .zip(f.weights())
                .map(|(x, w)| w / x)
                .collect();
            SizeDistribution::Step(StepCDF::from_atoms(f.locations(), &w)?)
        }
        SizeDistribution::PointMass { at } => SizeDistribution::PointMass { at: *at },
        SizeDistribution::Gamma { shape, rate } if *shape > 1.0 => {
            if (*shape - 2.0).abs() < 1e-15 {
                SizeDistribution::Exponential { rate: *rate }
            } else {
                SizeDistribution::Gamma {
                    shape: shape - 1.0,
                    rate: *rate,
                }
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "{other:?} is not the length-biased version of a distribution with finite 1/λ moment"
            )))
        }
    })
}

/// Root-scale section density `g_K^S` of the reference body, tabulated and
/// linearly interpolated, zero outside `[0, support_max)`.
#[derive(Clone, Debug, Serialize)]
pub struct ReferenceDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    support_max: f64,
    bandwidth: Option<f64>,
    sample_size: Option<usize>,
}

impl ReferenceDensity {
    /// Truncates a root-scale estimate to `[0, support_max]` and rescales
    /// it to integrate to one there.
    pub fn from_estimate(est: &DensityEstimate, support_max: f64) -> Result<Self> {
        if est.transform != crate::density::Scale::RootScale {
            return Err(Error::InvalidArgument("reference density must be on the root scale".into()));
        }
        let mut grid: Vec<f64> = est
            .grid
            .iter()
            .copied()
            .filter(|&x| x < support_max)
            .collect();
        let mut values: Vec<f64> = grid.iter().map(|&x| est.interpolate(x)).collect();
        grid.push(support_max);
        values.push(est.interpolate(support_max));
        let mut out = Self::normalized(grid, values, support_max)?;
        out.bandwidth = Some(est.bandwidth);
        out.sample_size = Some(est.sample_size);
        Ok(out)
    }

    /// Tabulates `f` on `points` equispaced nodes of `[0, support_max]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, support_max: f64, points: usize) -> Result<Self> {
        let grid = crate::density::linspace(0.0, support_max, points.max(2));
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::normalized(grid, values, support_max)
    }

    /// Sheather–Jones reflection estimate from a section sample of the
    /// reference body; the support bound is the largest root-scale value.
    pub fn from_sample(sample: &SectionSample, grid_points: usize) -> Result<Self> {
        let x = root_transform(sample);
        let Bandwidth { h, .. } = sheather_jones_bandwidth(&x)?;
        let est = reflection_kde(&x, h, &default_grid(&x, h, grid_points))?;
        let support_max = x.iter().copied().fold(0.0, f64::max);
        Self::from_estimate(&est, support_max)
    }

    fn normalized(grid: Vec<f64>, mut values: Vec<f64>, support_max: f64) -> Result<Self> {
        if !(support_max > 0.0 && support_max.is_finite()) {
            return Err(Error::InvalidArgument("support bound must be positive".into()));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("reference density must be finite and nonnegative".into()));
        }
        let mass = trapezoid(&grid, &values);
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument("reference density has no mass".into()));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(ReferenceDensity {
            grid,
            values,
            support_max,
            bandwidth: None,
            sample_size: None,
        })
    }

    pub fn support_max(&self) -> f64 {
        self.support_max
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(x >= 0.0 && x < self.support_max) {
            return 0.0;
        }
        let g = &self.grid;
        let k = g.partition_point(|&v| v <= x).clamp(1, g.len() - 1);
        let (x0, x1) = (g[k - 1], g[k]);
        let t = (x - x0) / (x1 - x0);
        self.values[k - 1] * (1.0 - t) + self.values[k] * t
    }
}

/// Root-scale profile sizes `S_i = Λ_i^b X_i` with `Λ_i^b ~ H^b` and `X_i`
/// the root-scale section volume of a fresh IUR section of `body`.
pub fn sample_profile_sizes(
    body: &ConvexBody,
    h: &SizeDistribution,
    n: usize,
    rng: RngStream,
) -> Result<Vec<f64>> {
    let hb = length_biased(h)?;
    let sections = sample_iur_sections(body, n, rng.child(0))?;
    let x = root_transform(&sections);
    let mut g = rng.child(1).generator();
    Ok(x.into_iter().map(|xi| hb.sample(&mut g) * xi).collect())
}

fn check_observations(s_obs: &[f64]) -> Result<()> {
    if s_obs.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some((i, &v)) = s_obs.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "observation {i} = {v} is not a positive finite size"
        )));
    }
    Ok(())
}

/// `(1/N) Σ_i log Σ_j w_j g^S(s_i/λ_j)/λ_j`.
pub fn log_likelihood(hb: &StepCDF, s_obs: &[f64], g_s: &ReferenceDensity) -> Result<f64> {
    check_observations(s_obs)?;
    if hb.locations().iter().any(|&l| l <= 0.0) {
        return Err(Error::ZeroLocation);
    }
    let weights = hb.weights();
    let mut total = 0.0;
    for (i, &s) in s_obs.iter().enumerate() {
        let mix: f64 = hb
            .locations()
            .iter()
            .zip(&weights)
            .map(|(&l, &w)| w * g_s.eval(s / l) / l)
            .sum();
        if !(mix > 0.0) {
            return Err(Error::AllZeroLikelihood { index: i, value: s });
        }
        total += mix.ln();
    }
    Ok(total / s_obs.len() as f64)
}

/// Result of [`npmle_em`].
#[derive(Clone, Debug, Serialize)]
pub struct NpmleFit {
    pub estimate: StepCDF,
    pub iterations: usize,
    pub final_loglik: f64,
    pub converged: bool,
    pub tol: f64,
    pub pruned_atoms: usize,
    /// Log-likelihood before the first update and after every update.
    pub loglik_trace: Vec<f64>,
}

/// Kernel rows `k_ij = g^S(s_i/λ_j)/λ_j`, stored from the first atom with
/// `s_i/λ_j < support_max` onward (earlier atoms give exactly zero).
struct KernelRows {
    start: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl KernelRows {
    fn new(s_obs: &[f64], atoms: &[f64], g_s: &ReferenceDensity) -> Self {
        let (start, rows) = s_obs
            .par_iter()
            .map(|&s| {
                let j0 = atoms.partition_point(|&l| s / l >= g_s.support_max());
                let row: Vec<f64> = atoms[j0..].iter().map(|&l| g_s.eval(s / l) / l).collect();
                (j0, row)
            })
            .unzip();
        KernelRows { start, rows }
    }

    fn mixtures(&self, w: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .zip(&self.start)
            .map(|(row, &j0)| row.iter().zip(&w[j0..]).map(|(k, w)| k * w).sum())
            .collect()
    }
}

/// Nonparametric maximum-likelihood estimate of `H^b` over step
/// distributions with jumps at the observed sizes, by EM on the mixture
/// weights.
///
/// Starts from uniform weights and stops when one iteration improves the
/// log-likelihood by less than `tol`. Hitting `max_iter` first returns the
/// last iterate with `converged == false`.
pub fn npmle_em(s_obs: &[f64], g_s: &ReferenceDensity, tol: f64, max_iter: usize) -> Result<NpmleFit> {
    check_observations(s_obs)?;
    let mut s = s_obs.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let mut atoms = s.clone();
    atoms.dedup();
    let n = s.len() as f64;
    let m = atoms.len();

    let kernel = KernelRows::new(&s, &atoms, g_s);
    for (i, row) in kernel.rows.iter().enumerate() {
        if !row.iter().any(|&k| k > 0.0) {
            return Err(Error::AllZeroLikelihood { index: i, value: s[i] });
        }
    }

    let mut w = vec![1.0 / m as f64; m];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let mix = kernel.mixtures(&w);
        let ll = mix.iter().map(|v| v.ln()).sum::<f64>() / n;
        if let Some(&prev) = trace.last() {
            if ll - prev < tol {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations == max_iter {
            break;
        }

        // w_j <- w_j (1/N) Σ_i k_ij / mix_i, reduced block by block in order.
        let partials: Vec<Vec<f64>> = kernel
            .rows
            .par_chunks(EM_BLOCK_ROWS)
            .zip(kernel.start.par_chunks(EM_BLOCK_ROWS))
            .zip(mix.par_chunks(EM_BLOCK_ROWS))
            .map(|((rows, starts), mixes)| {
                let mut acc = vec![0.0; m];
                for ((row, &j0), &mi) in rows.iter().zip(starts).zip(mixes) {
                    for (a, k) in acc[j0..].iter_mut().zip(row) {
                        *a += k / mi;
                    }
                }
                acc
            })
            .collect();
        let mut grad = vec![0.0; m];
        for p in &partials {
            for (g, v) in grad.iter_mut().zip(p) {
                *g += v;
            }
        }
        for (wj, gj) in w.iter_mut().zip(&grad) {
            *wj *= gj / n;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        iterations += 1;
    }

    let pruned_atoms = w.iter().filter(|&&v| v < PRUNE_WEIGHT).count();
    let kept: Vec<f64> = w.iter().map(|&v| if v < PRUNE_WEIGHT { 0.0 } else { v }).collect();
    let estimate = StepCDF::from_atoms(&atoms, &kept)?;
    let final_loglik = log_likelihood(&estimate, &s, g_s)?;
    Ok(NpmleFit {
        estimate,
        iterations,
        final_loglik,
        converged,
        tol,
        pruned_atoms,
        loglik_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangular() -> ReferenceDensity {
        // g(x) = 2(1 - x) on [0, 1]
        ReferenceDensity::from_fn(|x| 2.0 * (1.0 - x), 1.0, 1001).unwrap()
    }

    fn step(locs: &[f64], w: &[f64]) -> SizeDistribution {
        SizeDistribution::Step(StepCDF::from_atoms(locs, w).unwrap())
    }

    #[test]
    fn exponential_biases_to_gamma_two() {
        assert_eq!(
            length_biased(&SizeDistribution::Exponential { rate: 1.0 }).unwrap(),
            SizeDistribution::Gamma { shape: 2.0, rate: 1.0 }
        );
    }

    #[test]
    fn point_mass_is_fixed_by_biasing() {
        let p = SizeDistribution::PointMass { at: 1.0 };
        assert_eq!(length_biased(&p).unwrap(), p);
        let p2 = SizeDistribution::PointMass { at: 2.0 };
        assert_eq!(unbias(&p2).unwrap(), p2);
    }

    #[test]
    fn step_biasing_and_inverse() {
        let hb = length_biased(&step(&[1.0, 2.0], &[0.5, 0.5])).unwrap();
        let SizeDistribution::Step(f) = &hb else { panic!() };
        let w = f.weights();
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15 && (w[1] - 2.0 / 3.0).abs() < 1e-15);

        let h = unbias(&step(&[1.0, 2.0], &[1.0 / 3.0, 2.0 / 3.0])).unwrap();
        let SizeDistribution::Step(f) = &h else { panic!() };
        assert!(f.weights().iter().all(|w| (w - 0.5).abs() < 1e-15));
    }

    #[test]
    fn unbias_rejects_zero_location() {
        assert!(matches!(
            unbias(&step(&[0.0, 1.0], &[0.5, 0.5])),
            Err(Error::ZeroLocation)
        ));
    }

    #[test]
    fn biasing_a_zero_atom_has_no_mean() {
        assert!(matches!(
            length_biased(&step(&[0.0], &[1.0])),
            Err(Error::InfiniteMean)
        ));
    }

    #[test]
    fn single_atom_likelihood() {
        let g = triangular();
        let s = [0.2, 0.5, 0.7];
        let ll = log_likelihood(&StepCDF::point_mass(1.0), &s, &g).unwrap();
        let direct = s.iter().map(|&x| (2.0 * (1.0 - x)).ln()).sum::<f64>() / 3.0;
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn toy_likelihood_by_enumeration() {
        let g = triangular();
        let hb = StepCDF::from_atoms(&[1.0, 2.0], &[0.5, 0.5]).unwrap();
        let s = [0.5, 1.0];
        // s=0.5: 0.5·g(0.5)/1 + 0.5·g(0.25)/2 = 0.5 + 0.375
        // s=1.0: 0.5·g(1.0)/1 + 0.5·g(0.5)/2  = 0   + 0.25
        let expected = ((0.5f64 + 0.375).ln() + 0.25f64.ln()) / 2.0;
        let ll = log_likelihood(&hb, &s, &g).unwrap();
        assert!((ll - expected).abs() < 1e-12, "{ll} vs {expected}");
    }

    #[test]
    fn unsupported_observation_is_an_error() {
        let g = triangular();
        let r = log_likelihood(&StepCDF::point_mass(1.0), &[0.5, 1.5], &g);
        assert!(matches!(r, Err(Error::AllZeroLikelihood { index: 1, .. })));
    }

    #[test]
    fn constant_observations_give_point_mass() {
        let g = ReferenceDensity::from_fn(|x| if x < 1.5 { 1.0 / 1.5 } else { 0.0 }, 1.5, 301).unwrap();
        let fit = npmle_em(&[0.8; 20], &g, 1e-10, 100).unwrap();
        assert_eq!(fit.estimate.locations(), &[0.8]);
        assert!(fit.converged);
    }

    #[test]
    fn em_trace_is_monotone_and_weights_normalized() {
        let g = ReferenceDensity::from_fn(|x| 3.0 * x * x / 1.5f64.powi(3), 1.5, 1501).unwrap();
        let s: Vec<f64> = (1..=60).map(|i| 0.05 * i as f64).collect();
        let fit = npmle_em(&s, &g, 1e-10, 2000).unwrap();
        assert!(fit.loglik_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let total: f64 = fit.estimate.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(fit.estimate.weights().iter().all(|&w| w >= 0.0));
    }
}
