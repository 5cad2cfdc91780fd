//! Bandwidth selection for Gaussian kernel density estimates.
//!
//! The Sheather–Jones "solve-the-equation" selector estimates the density
//! functionals ψ4 and ψ6 from linearly binned data; pairwise sums are
//! evaluated from the binned autocorrelation with the diagonal (i = j) terms
//! replaced by their exact values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of bins used for the pairwise functional sums.
const BINS: usize = 4096;
/// Kernel arguments `(u/g)^2` beyond this contribute nothing in double precision.
const MAX_SQUARED_ARG: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMethod {
    SheatherJones,
    /// The plug-in equation had no root in its bracket; Silverman's rule was used.
    SilvermanFallback,
    UserSupplied,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub h: f64,
    pub method: BandwidthMethod,
}

/// Sheather–Jones bandwidth for the reflection estimator: the selector is
/// applied to the reflected sample `{x_i} ∪ {-x_i}` of size `2n`, whose
/// classical estimate is half the reflection estimate.
pub fn sheather_jones_bandwidth(x: &[f64]) -> Result<Bandwidth> {
    if x.len() < 16 {
        return Err(Error::SampleTooSmall {
            needed: 16,
            got: x.len(),
        });
    }
    check_spread(x)?;
    let mut reflected = Vec::with_capacity(2 * x.len());
    reflected.extend_from_slice(x);
    reflected.extend(x.iter().map(|v| -v));
    sheather_jones_classical(&reflected)
}

/// Sheather–Jones bandwidth for the classical estimator on `y` as given.
pub fn sheather_jones_classical(y: &[f64]) -> Result<Bandwidth> {
    if y.len() < 16 {
        return Err(Error::SampleTooSmall {
            needed: 16,
            got: y.len(),
        });
    }
    check_spread(y)?;
    let stats = Spread::of(y);
    let scale = stats.scale();
    let n = y.len() as f64;
    let silverman = silverman_from(&stats, y.len());

    let pairs = BinnedPairs::new(y);
    let a = 1.24 * scale * n.powf(-1.0 / 7.0);
    let b = 1.23 * scale * n.powf(-1.0 / 9.0);
    let c1 = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * n);
    let td = -pairs.psi(6, b);
    let sd_a = pairs.psi(4, a);
    let fallback = Bandwidth {
        h: silverman,
        method: BandwidthMethod::SilvermanFallback,
    };
    if !(td > 0.0 && td.is_finite() && sd_a > 0.0 && sd_a.is_finite()) {
        return Ok(fallback);
    }
    let alpha2 = 1.357 * (sd_a / td).powf(1.0 / 7.0);
    let equation = |h: f64| {
        let psi4 = pairs.psi(4, alpha2 * h.powf(5.0 / 7.0));
        (c1 / psi4).powf(0.2) - h
    };

    let (mut lo, mut hi) = (silverman / 100.0, silverman * 100.0);
    let (mut f_lo, f_hi) = (equation(lo), equation(hi));
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Ok(fallback);
    }
    while hi - lo > 1e-8 * hi {
        let mid = 0.5 * (lo + hi);
        let f_mid = equation(mid);
        if !f_mid.is_finite() {
            return Ok(fallback);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bandwidth {
        h: 0.5 * (lo + hi),
        method: BandwidthMethod::SheatherJones,
    })
}

/// Silverman's rule of thumb `0.9 min(sd, IQR/1.34) n^{-1/5}`, applied to
/// the reflected sample like [`sheather_jones_bandwidth`].
pub fn silverman_bandwidth(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: x.len() });
    }
    check_spread(x)?;
    let mut reflected = x.to_vec();
    reflected.extend(x.iter().map(|v| -v));
    Ok(silverman_from(&Spread::of(&reflected), reflected.len()))
}

fn silverman_from(s: &Spread, n: usize) -> f64 {
    let spread = if s.iqr > 0.0 { s.sd.min(s.iqr / 1.34) } else { s.sd };
    0.9 * spread * (n as f64).powf(-0.2)
}

fn check_spread(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in sample".into()));
    }
    let first = x[0];
    if x.iter().all(|&v| v == first) {
        return Err(Error::ZeroVariance);
    }
    Ok(())
}

struct Spread {
    sd: f64,
    iqr: f64,
}

impl Spread {
    fn of(y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let mut sorted = y.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Spread {
            sd: var.sqrt(),
            iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        }
    }

    /// `min(sd, IQR/1.349)`, falling back to `sd` when the IQR vanishes.
    fn scale(&self) -> f64 {
        if self.iqr > 0.0 {
            self.sd.min(self.iqr / 1.349)
        } else {
            self.sd
        }
    }
}

/// Linear-interpolation quantile of sorted data (R type 7).
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

/// Binned representation of all pairwise differences of a sample.
struct BinnedPairs {
    n: f64,
    delta: f64,
    /// `lag[m]` = Σ_{k,l: |k-l| = m} w_k w_l (both orders counted for m > 0).
    lag: Vec<f64>,
    /// Binned self-pair mass at lags 0 and 1.
    self_lag0: f64,
    self_lag1: f64,
}

impl BinnedPairs {
    fn new(y: &[f64]) -> Self {
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let delta = (hi - lo) / (BINS - 1) as f64;
        let mut w = vec![0.0; BINS];
        let (mut self_lag0, mut self_lag1) = (0.0, 0.0);
        for &v in y {
            let pos = (v - lo) / delta;
            let k = (pos.floor() as usize).min(BINS - 2);
            let t = pos - k as f64;
            w[k] += 1.0 - t;
            w[k + 1] += t;
            self_lag0 += (1.0 - t) * (1.0 - t) + t * t;
            self_lag1 += 2.0 * t * (1.0 - t);
        }
        let mut lag = vec![0.0; BINS];
        for m in 0..BINS {
            let s: f64 = w[..BINS - m].iter().zip(&w[m..]).map(|(a, b)| a * b).sum();
            lag[m] = if m == 0 { s } else { 2.0 * s };
        }
        BinnedPairs {
            n: y.len() as f64,
            delta,
            lag,
            self_lag0,
            self_lag1,
        }
    }

    /// Estimate of ψ_r = ∫ f^{(r)} f for r = 4 or 6, with pilot bandwidth `g`:
    /// Σ_{i,j} φ_g^{(r)}(x_i - x_j) / (n (n-1)).
    fn psi(&self, r: u32, g: f64) -> f64 {
        let deriv = |u2: f64| -> f64 {
            let poly = match r {
                4 => u2 * u2 - 6.0 * u2 + 3.0,
                6 => u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0,
                _ => unreachable!("only psi_4 and psi_6 are used"),
            };
            poly * (-0.5 * u2).exp()
        };
        let mut sum = 0.0;
        for (m, &c) in self.lag.iter().enumerate() {
            let u = m as f64 * self.delta / g;
            let u2 = u * u;
            if u2 > MAX_SQUARED_ARG {
                break;
            }
            sum += c * deriv(u2);
        }
        let d1 = (self.delta / g) * (self.delta / g);
        sum += (self.n - self.self_lag0) * deriv(0.0) - self.self_lag1 * deriv(d1);
        let norm = (2.0 * std::f64::consts::PI).sqrt() * g.powi(r as i32 + 1);
        sum / (self.n * (self.n - 1.0) * norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    /// Exact O(n²) ψ_r estimate including the diagonal terms.
    fn psi_exact(y: &[f64], r: u32, g: f64) -> f64 {
        let n = y.len() as f64;
        let mut s = 0.0;
        for a in y {
            for b in y {
                let u2 = ((a - b) / g).powi(2);
                let poly = match r {
                    4 => u2 * u2 - 6.0 * u2 + 3.0,
                    _ => u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0,
                };
                s += poly * (-0.5 * u2).exp();
            }
        }
        s / (n * (n - 1.0) * (2.0 * std::f64::consts::PI).sqrt() * g.powi(r as i32 + 1))
    }

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut g)).collect()
    }

    #[test]
    fn binned_functionals_match_exact_sums() {
        let y = normals(1500, 1);
        let pairs = BinnedPairs::new(&y);
        for (r, g) in [(4, 0.3), (4, 0.8), (6, 0.5)] {
            let exact = psi_exact(&y, r, g);
            let binned = pairs.psi(r, g);
            assert!((binned - exact).abs() < 1e-3 * exact.abs(), "r={r} g={g}: {binned} vs {exact}");
        }
    }

    #[test]
    fn constant_sample_is_rejected() {
        assert!(matches!(sheather_jones_bandwidth(&[2.5; 40]), Err(Error::ZeroVariance)));
        assert!(matches!(
            sheather_jones_bandwidth(&[1.0, 2.0]),
            Err(Error::SampleTooSmall { .. })
        ));
    }

    #[test]
    fn doubling_the_data_doubles_h() {
        let x: Vec<f64> = normals(5000, 2).into_iter().map(f64::abs).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let h1 = sheather_jones_bandwidth(&x).unwrap();
        let h2 = sheather_jones_bandwidth(&x2).unwrap();
        assert_eq!(h1.method, BandwidthMethod::SheatherJones);
        assert!((h2.h / h1.h - 2.0).abs() < 2e-6, "{} {}", h1.h, h2.h);
    }

    #[test]
    fn half_normal_reflected_bandwidth() {
        // Reference value from an independent R-style bw.SJ on the
        // reflected 2e5 sample: 0.0905 (AMISE-optimal for N(0,1) at n = 2e5 is 0.0922).
        let x: Vec<f64> = normals(100_000, 3).into_iter().map(f64::abs).collect();
        let h = sheather_jones_bandwidth(&x).unwrap();
        assert_eq!(h.method, BandwidthMethod::SheatherJones);
        assert!(h.h > 0.085 && h.h < 0.095, "{}", h.h);
    }

    #[test]
    fn silverman_on_reflected_sample() {
        let x: Vec<f64> = normals(10_000, 4).into_iter().map(f64::abs).collect();
        let h = silverman_bandwidth(&x).unwrap();
        let expected = 0.9 * 20_000f64.powf(-0.2);
        assert!((h / expected - 1.0).abs() < 0.05);
    }
}
