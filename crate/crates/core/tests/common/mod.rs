#![allow(dead_code)]

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use section_lab::geometry::{ConvexBody, Dim, Direction};

pub type P = Vector3<f64>;

/// Hull facets as half-spaces `n·x <= c`, found by testing every pair
/// (plane) or triple (space) of input points as a candidate supporting
/// line or plane. Knows nothing about the library's hull code.
pub fn brute_halfspaces(dim: Dim, pts: &[P]) -> Vec<(P, f64)> {
    let scale = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| (p - q).norm()))
        .fold(0.0, f64::max);
    let eps = 1e-9 * scale;
    let mut out = Vec::new();
    let mut push_if_supporting = |n: P, c: f64| {
        if pts.iter().all(|p| n.dot(p) <= c + eps) {
            out.push((n, c));
        } else if pts.iter().all(|p| n.dot(p) >= c - eps) {
            out.push((-n, -c));
        }
    };
    let m = pts.len();
    match dim {
        Dim::Two => {
            for i in 0..m {
                for j in i + 1..m {
                    let d = pts[j] - pts[i];
                    if d.norm() < eps {
                        continue;
                    }
                    let n = P::new(d.y, -d.x, 0.0).normalize();
                    push_if_supporting(n, n.dot(&pts[i]));
                }
            }
        }
        Dim::Three => {
            for i in 0..m {
                for j in i + 1..m {
                    for k in j + 1..m {
                        let n = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
                        if n.norm() < eps * scale {
                            continue;
                        }
                        let n = n.normalize();
                        push_if_supporting(n, n.dot(&pts[i]));
                    }
                }
            }
        }
    }
    out
}

/// Section volume of `{x : n·x <= c for all half-spaces}` with the plane
/// `θ·x = s`, by clipping: an interval on the line in the plane, a large
/// square clipped polygon by polygon (Sutherland–Hodgman) in space.
pub fn clipped_section(dim: Dim, hs: &[(P, f64)], theta: &P, s: f64, reach: f64) -> f64 {
    match dim {
        Dim::Two => {
            let base = theta * s;
            let along = P::new(-theta.y, theta.x, 0.0);
            let (mut lo, mut hi) = (-reach, reach);
            for (n, c) in hs {
                let a = n.dot(&along);
                let b = c - n.dot(&base);
                if a.abs() < 1e-15 {
                    if b < 0.0 {
                        return 0.0;
                    }
                } else if a > 0.0 {
                    hi = hi.min(b / a);
                } else {
                    lo = lo.max(b / a);
                }
            }
            (hi - lo).max(0.0)
        }
        Dim::Three => {
            let helper = if theta.x.abs() < 0.6 { P::x() } else { P::y() };
            let u = helper.cross(theta).normalize();
            let w = theta.cross(&u);
            let base = theta * s;
            let mut poly = vec![
                base + reach * (u + w),
                base + reach * (-u + w),
                base + reach * (-u - w),
                base + reach * (u - w),
            ];
            for (n, c) in hs {
                if poly.is_empty() {
                    return 0.0;
                }
                let mut next = Vec::with_capacity(poly.len() + 1);
                for i in 0..poly.len() {
                    let p = poly[i];
                    let q = poly[(i + 1) % poly.len()];
                    let (fp, fq) = (n.dot(&p) - c, n.dot(&q) - c);
                    if fp <= 0.0 {
                        next.push(p);
                    }
                    if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                        next.push(p + (q - p) * (fp / (fp - fq)));
                    }
                }
                poly = next;
            }
            if poly.len() < 3 {
                return 0.0;
            }
            let mut twice = P::zeros();
            for i in 0..poly.len() {
                twice += poly[i].cross(&poly[(i + 1) % poly.len()]);
            }
            0.5 * twice.dot(theta).abs()
        }
    }
}

pub fn random_direction(dim: Dim, rng: &mut ChaCha8Rng) -> Direction {
    loop {
        let v: Vec<f64> = (0..dim.value()).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(d) = Direction::new(&v) {
            return d;
        }
    }
}

pub fn random_rotation(dim: Dim, rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    match dim {
        Dim::Two => {
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let (s, c) = phi.sin_cos();
            Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
        }
        Dim::Three => {
            let q = nalgebra::Quaternion::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
        }
    }
}

/// `count` points on the unit sphere, all of them hull vertices.
pub fn sphere_points(count: usize, rng: &mut ChaCha8Rng) -> Vec<P> {
    (0..count)
        .map(|_| {
            let v = P::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            v.normalize()
        })
        .collect()
}

/// Vertices of a polytope body; panics on balls.
pub fn vertices(body: &ConvexBody) -> Vec<P> {
    body.polytope().expect("polytope").vertices().to_vec()
}
