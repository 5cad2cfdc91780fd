use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{ConvexBody, Dim, Point};
use crate::error::Error;

/// Canonical shapes, all centered at the origin.
///
/// Unnormalized sizes: unit-side square and cube, unit-edge dodecahedron,
/// unit-radius ball and disk, regular polygon with unit circumradius.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinShape {
    Square,
    Cube,
    Dodecahedron,
    Ball,
    Disk,
    RegularPolygon(usize),
}

impl FromStr for BuiltinShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "square" => Ok(BuiltinShape::Square),
            "cube" => Ok(BuiltinShape::Cube),
            "dodecahedron" => Ok(BuiltinShape::Dodecahedron),
            "ball" | "sphere" => Ok(BuiltinShape::Ball),
            "disk" | "disc" | "circle" => Ok(BuiltinShape::Disk),
            other => {
                let k = other
                    .strip_prefix("regular_polygon:")
                    .or_else(|| other.strip_prefix("polygon:"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown shape '{s}'")))?;
                if k < 3 {
                    return Err(Error::InvalidArgument("a regular polygon needs at least 3 sides".into()));
                }
                Ok(BuiltinShape::RegularPolygon(k))
            }
        }
    }
}

impl fmt::Display for BuiltinShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinShape::Square => write!(f, "square"),
            BuiltinShape::Cube => write!(f, "cube"),
            BuiltinShape::Dodecahedron => write!(f, "dodecahedron"),
            BuiltinShape::Ball => write!(f, "ball"),
            BuiltinShape::Disk => write!(f, "disk"),
            BuiltinShape::RegularPolygon(k) => write!(f, "regular_polygon:{k}"),
        }
    }
}

/// Builds a canonical body; with `normalize_volume` it is rescaled to unit
/// volume (area in the plane).
///
/// Panics for `RegularPolygon(k)` with `k < 3`.
pub fn builtin_body(shape: BuiltinShape, normalize_volume: bool) -> ConvexBody {
    let body = match shape {
        BuiltinShape::Square => {
            let pts: Vec<Point> = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
                .iter()
                .map(|&(x, y)| Point::new(x, y, 0.0))
                .collect();
            ConvexBody::from_points(Dim::Two, &pts)
        }
        BuiltinShape::Cube => {
            let pts: Vec<Point> = (0..8)
                .map(|i| {
                    let c = |b: usize| if (i >> b) & 1 == 1 { 0.5 } else { -0.5 };
                    Point::new(c(0), c(1), c(2))
                })
                .collect();
            ConvexBody::from_points(Dim::Three, &pts)
        }
        BuiltinShape::Dodecahedron => ConvexBody::from_points(Dim::Three, &dodecahedron_vertices()),
        BuiltinShape::RegularPolygon(k) => {
            assert!(k >= 3, "a regular polygon needs at least 3 sides");
            let pts: Vec<Point> = (0..k)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / k as f64;
                    Point::new(t.cos(), t.sin(), 0.0)
                })
                .collect();
            ConvexBody::from_points(Dim::Two, &pts)
        }
        BuiltinShape::Ball => ConvexBody::ball(Dim::Three, Point::zeros(), 1.0),
        BuiltinShape::Disk => ConvexBody::ball(Dim::Two, Point::zeros(), 1.0),
    }
    .expect("builtin shapes are valid");

    let body = if normalize_volume {
        let n = body.dim().value() as f64;
        body.scaled(body.volume().powf(-1.0 / n))
            .expect("positive scale factor")
    } else {
        body
    };
    body.with_label(shape.to_string())
}

/// Regular dodecahedron with unit edge length.
fn dodecahedron_vertices() -> Vec<Point> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let inv = 1.0 / phi;
    let mut pts = Vec::with_capacity(20);
    for &x in &[-1.0, 1.0] {
        for &y in &[-1.0, 1.0] {
            for &z in &[-1.0, 1.0] {
                pts.push(Point::new(x, y, z));
            }
        }
    }
    for &a in &[-1.0, 1.0] {
        for &b in &[-1.0, 1.0] {
            pts.push(Point::new(0.0, a * inv, b * phi));
            pts.push(Point::new(a * inv, b * phi, 0.0));
            pts.push(Point::new(a * phi, 0.0, b * inv));
        }
    }
    // These coordinates have edge length 2/φ.
    let s = phi / 2.0;
    pts.into_iter().map(|p| p * s).collect()
}
