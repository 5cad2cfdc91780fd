use rayon::prelude::*;
use serde::Serialize;

use super::{ConvexBody, Dim, Direction, Hyperplane, Point};
use crate::error::{Error, Result};

/// Maximal section volume for a fixed normal and one offset attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionMaximum {
    pub value: f64,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    /// Periodic trapezoid rule in the polar angle over `[0, π)`.
    UniformAngleTrapezoid,
    /// Midpoint rule in `cos ω` over `(0, 1)` times trapezoid in azimuth:
    /// an equal-area product grid on the upper hemisphere.
    EqualAreaHemisphereGrid,
}

/// Mean width together with the quadrature that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanWidth {
    pub value: f64,
    pub scheme: QuadratureScheme,
    pub nodes: usize,
}

impl ConvexBody {
    /// Largest section volume among planes with normal `direction`.
    ///
    /// The `(n-1)`-th root of the parallel-section function is concave on
    /// the support interval, so a golden-section search on it finds the
    /// global maximum. When the maximizer is an interval, any point of it
    /// may be returned.
    pub fn inner_section_function(&self, direction: &Direction) -> SectionMaximum {
        let support = self.support_interval(direction);
        let p = self.dim().root_exponent();
        let f = |s: f64| self.section_volume(&Hyperplane::new(*direction, s)).powf(p);

        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (support.a, support.b);
        let tol = 1e-10 * support.width();
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > tol {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = f(x1);
            }
        }
        let offset = 0.5 * (lo + hi);
        SectionMaximum {
            value: self.section_volume(&Hyperplane::new(*direction, offset)),
            offset,
        }
    }

    /// Mean width, the width averaged over the unit half-sphere of directions.
    /// Needs at least 64 nodes.
    ///
    /// The plane uses the periodic trapezoid rule in angle (the width has
    /// period π). Space uses an equal-area product grid, accurate to about
    /// 1e-5 relative for polytopes at 1e5 nodes.
    pub fn mean_width(&self, nodes: usize) -> Result<MeanWidth> {
        if nodes < 64 {
            return Err(Error::InvalidArgument(format!("mean width needs >= 64 nodes, got {nodes}")));
        }
        match self.dim() {
            Dim::Two => {
                let sum: f64 = (0..nodes)
                    .into_par_iter()
                    .map(|k| {
                        let phi = std::f64::consts::PI * k as f64 / nodes as f64;
                        self.width(&Direction::from_angle(phi))
                    })
                    .sum();
                Ok(MeanWidth {
                    value: sum / nodes as f64,
                    scheme: QuadratureScheme::UniformAngleTrapezoid,
                    nodes,
                })
            }
            Dim::Three => {
                let rows = ((nodes as f64 / 2.0).sqrt().round() as usize).max(1);
                let cols = nodes / rows;
                let sum: f64 = (0..rows)
                    .into_par_iter()
                    .map(|i| {
                        let z = (i as f64 + 0.5) / rows as f64;
                        let r = (1.0 - z * z).sqrt();
                        (0..cols)
                            .map(|j| {
                                let phi = 2.0 * std::f64::consts::PI * j as f64 / cols as f64;
                                let v = Point::new(r * phi.cos(), r * phi.sin(), z);
                                self.width(&Direction::from_unit_unchecked(v, Dim::Three))
                            })
                            .sum::<f64>()
                    })
                    .sum();
                Ok(MeanWidth {
                    value: sum / (rows * cols) as f64,
                    scheme: QuadratureScheme::EqualAreaHemisphereGrid,
                    nodes: rows * cols,
                })
            }
        }
    }
}
