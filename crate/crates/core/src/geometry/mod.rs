//! Convex bodies in the plane and in space, and the exact geometric
//! quantities the sampler and the estimators consume.
//!
//! Points are stored as [`nalgebra::Vector3`]; planar bodies keep `z = 0`
//! so support functions and inner products are shared between dimensions.

mod builtin;
mod hull;
pub mod io;
mod measure;
mod section;

pub use builtin::{builtin_body, BuiltinShape};
pub use hull::vertices_from_halfspaces;
pub use measure::{MeanWidth, QuadratureScheme, SectionMaximum};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// Relative tolerance for point-on-plane classification in section queries.
pub(crate) const SECTION_REL_EPS: f64 = 1e-12;
/// Relative tolerance used when ingesting point clouds into a hull.
pub(crate) const HULL_REL_EPS: f64 = 1e-10;

/// Ambient dimension. Only the plane and space are supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn value(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    /// Exponent `1/(n-1)` taking section volumes to the root scale.
    pub fn root_exponent(self) -> f64 {
        1.0 / (self.value() - 1) as f64
    }
}

impl TryFrom<u8> for Dim {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(format!("unsupported dimension {other}; expected 2 or 3")),
        }
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.value() as u8
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A unit vector in the plane or in space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    v: Point,
    dim: Dim,
}

impl Direction {
    /// Normalizes `components` (length 2 or 3) to a unit vector.
    pub fn new(components: &[f64]) -> Result<Self> {
        let (v, dim) = match *components {
            [x, y] => (Point::new(x, y, 0.0), Dim::Two),
            [x, y, z] => (Point::new(x, y, z), Dim::Three),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "direction needs 2 or 3 components, got {}",
                    components.len()
                )))
            }
        };
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument("direction must be nonzero and finite".into()));
        }
        Ok(Direction { v: v / norm, dim })
    }

    /// `(cos φ, sin φ)`.
    pub fn from_angle(phi: f64) -> Self {
        Direction {
            v: Point::new(phi.cos(), phi.sin(), 0.0),
            dim: Dim::Two,
        }
    }

    /// `(sin ω cos φ, sin ω sin φ, cos ω)` given `cos ω` directly.
    pub fn from_polar(cos_omega: f64, phi: f64) -> Self {
        let sin_omega = (1.0 - cos_omega * cos_omega).max(0.0).sqrt();
        Direction {
            v: Point::new(sin_omega * phi.cos(), sin_omega * phi.sin(), cos_omega),
            dim: Dim::Three,
        }
    }

    pub(crate) fn from_unit_unchecked(v: Point, dim: Dim) -> Self {
        Direction { v, dim }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn vector(&self) -> &Point {
        &self.v
    }

    pub fn components(&self) -> Vec<f64> {
        self.v.as_slice()[..self.dim.value()].to_vec()
    }

    pub fn dot(&self, p: &Point) -> f64 {
        self.v.dot(p)
    }

    pub fn negated(&self) -> Self {
        Direction { v: -self.v, dim: self.dim }
    }
}

/// The hyperplane `{x : <x, θ> = s}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperplane {
    pub direction: Direction,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(direction: Direction, offset: f64) -> Self {
        Hyperplane { direction, offset }
    }
}

/// Range `[a, b]` of offsets `s` for which the hyperplane with a fixed
/// normal meets the body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalSupport {
    pub a: f64,
    pub b: f64,
}

impl IntervalSupport {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, s: f64) -> bool {
        self.a <= s && s <= self.b
    }
}

/// Vertex/facet description of a convex polygon or polyhedron.
///
/// Polygons list their vertices counter-clockwise and use the edges as
/// facets. Polyhedron facets are counter-clockwise when seen from outside.
/// `normals[i]`, `offsets[i]` describe facet `i` as `<n, x> <= c`.
#[derive(Clone, Debug)]
pub struct Polytope {
    pub(crate) vertices: Vec<Point>,
    pub(crate) facets: Vec<Vec<usize>>,
    pub(crate) normals: Vec<Point>,
    pub(crate) offsets: Vec<f64>,
    pub(crate) edges: Vec<(usize, usize)>,
    pub(crate) diameter: f64,
}

impl Polytope {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    /// Outward unit facet normals and offsets.
    pub fn halfspaces(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.normals.iter().zip(self.offsets.iter().copied())
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Assembles the derived data (normals, edges, diameter) from an
    /// already-valid vertex/facet description.
    pub(crate) fn assemble(dim: Dim, vertices: Vec<Point>, facets: Vec<Vec<usize>>) -> Self {
        let mut normals = Vec::with_capacity(facets.len());
        let mut offsets = Vec::with_capacity(facets.len());
        for facet in &facets {
            let n = match dim {
                Dim::Two => {
                    let e = vertices[facet[1]] - vertices[facet[0]];
                    Point::new(e.y, -e.x, 0.0).normalize()
                }
                Dim::Three => newell_normal(&vertices, facet),
            };
            let c = facet.iter().map(|&i| n.dot(&vertices[i])).sum::<f64>() / facet.len() as f64;
            normals.push(n);
            offsets.push(c);
        }

        let mut edges: Vec<(usize, usize)> = match dim {
            Dim::Two => facets.iter().map(|f| (f[0], f[1])).collect(),
            Dim::Three => facets
                .iter()
                .flat_map(|f| (0..f.len()).map(move |k| (f[k], f[(k + 1) % f.len()])))
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect(),
        };
        edges.sort_unstable();
        edges.dedup();

        let mut diameter = 0.0f64;
        for (i, p) in vertices.iter().enumerate() {
            for q in &vertices[i + 1..] {
                diameter = diameter.max((p - q).norm());
            }
        }

        Polytope {
            vertices,
            facets,
            normals,
            offsets,
            edges,
            diameter,
        }
    }
}

fn newell_normal(vertices: &[Point], facet: &[usize]) -> Point {
    let mut n = Point::zeros();
    for k in 0..facet.len() {
        let p = vertices[facet[k]];
        let q = vertices[facet[(k + 1) % facet.len()]];
        n.x += (p.y - q.y) * (p.z + q.z);
        n.y += (p.z - q.z) * (p.x + q.x);
        n.z += (p.x - q.x) * (p.y + q.y);
    }
    n.normalize()
}

#[derive(Clone, Debug)]
pub enum BodyKind {
    Polytope(Polytope),
    Ball { center: Point, radius: f64 },
}

/// A convex body in the plane or in space.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    dim: Dim,
    kind: BodyKind,
    label: String,
}

impl ConvexBody {
    /// Convex hull of `points`. Points not on the hull are discarded, as are
    /// points lying in the relative interior of a hull edge or facet.
    pub fn from_points(dim: Dim, points: &[Point]) -> Result<Self> {
        let polytope = hull::polytope_from_points(dim, points)?;
        Ok(ConvexBody {
            dim,
            kind: BodyKind::Polytope(polytope),
            label: "polytope".into(),
        })
    }

    /// Bounded intersection of the half-spaces `<n_i, x> <= c_i`.
    pub fn from_halfspaces(dim: Dim, normals: &[Point], offsets: &[f64]) -> Result<Self> {
        let vertices = vertices_from_halfspaces(dim, normals, offsets)?;
        let body = Self::from_points(dim, &vertices)?;
        // A bounded region equals the hull of its vertices, so every hull facet
        // must lie on one of the input planes. Otherwise the region is unbounded.
        let p = body.polytope().expect("hull of points is a polytope");
        let tol = 1e-7 * p.diameter.max(1.0);
        for facet in &p.facets {
            let on_input_plane = normals.iter().zip(offsets).any(|(n, &c)| {
                let len = n.norm();
                facet
                    .iter()
                    .all(|&i| (n.dot(&p.vertices[i]) - c).abs() / len <= tol)
            });
            if !on_input_plane {
                return Err(Error::DegenerateInput("half-spaces describe an unbounded set".into()));
            }
        }
        Ok(body)
    }

    pub fn ball(dim: Dim, center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBody(format!("ball radius must be positive, got {radius}")));
        }
        if dim == Dim::Two && center.z != 0.0 {
            return Err(Error::InvalidBody("planar ball center must have z = 0".into()));
        }
        Ok(ConvexBody {
            dim,
            kind: BodyKind::Ball { center, radius },
            label: "ball".into(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn polytope(&self) -> Option<&Polytope> {
        match &self.kind {
            BodyKind::Polytope(p) => Some(p),
            BodyKind::Ball { .. } => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            BodyKind::Polytope(p) => p.diameter,
            BodyKind::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Vertex mean for polytopes, the center for balls. Always an interior point.
    pub fn centroid(&self) -> Point {
        match &self.kind {
            BodyKind::Polytope(p) => {
                p.vertices.iter().sum::<Point>() / p.vertices.len() as f64
            }
            BodyKind::Ball { center, .. } => *center,
        }
    }

    /// Radius of the smallest ball centered at `center` that contains the body.
    pub fn enclosing_radius(&self, center: &Point) -> f64 {
        match &self.kind {
            BodyKind::Polytope(p) => p
                .vertices
                .iter()
                .map(|v| (v - center).norm())
                .fold(0.0, f64::max),
            BodyKind::Ball { center: c, radius } => (c - center).norm() + radius,
        }
    }

    /// Applies `x ↦ Mx + t`. `M` must be invertible; for planar bodies it must
    /// leave the plane `z = 0` invariant. Orientation-reversing maps are
    /// accepted (facet orderings are rebuilt).
    pub fn transformed(&self, m: &Matrix3<f64>, t: &Point) -> Result<Self> {
        if self.dim == Dim::Two && (m[(2, 0)] != 0.0 || m[(2, 1)] != 0.0 || t.z != 0.0) {
            return Err(Error::InvalidArgument(
                "planar transform must preserve the plane z = 0".into(),
            ));
        }
        let kind = match &self.kind {
            BodyKind::Polytope(p) => {
                let pts: Vec<Point> = p.vertices.iter().map(|v| m * v + t).collect();
                BodyKind::Polytope(hull::polytope_from_points(self.dim, &pts)?)
            }
            BodyKind::Ball { center, radius } => {
                let (lo, hi) = match self.dim {
                    Dim::Two => {
                        let s = m.fixed_view::<2, 2>(0, 0).into_owned().singular_values();
                        (s.min(), s.max())
                    }
                    Dim::Three => {
                        let s = m.singular_values();
                        (s.min(), s.max())
                    }
                };
                if (hi - lo) > 1e-12 * hi {
                    return Err(Error::InvalidArgument(
                        "a ball can only be mapped by a similarity".into(),
                    ));
                }
                BodyKind::Ball {
                    center: m * center + t,
                    radius: radius * hi,
                }
            }
        };
        Ok(ConvexBody {
            dim: self.dim,
            kind,
            label: self.label.clone(),
        })
    }

    pub fn translated(&self, t: &Point) -> Result<Self> {
        self.transformed(&Matrix3::identity(), t)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor must be positive, got {lambda}")));
        }
        let mut m = Matrix3::identity() * lambda;
        if self.dim == Dim::Two {
            m[(2, 2)] = 1.0;
        }
        self.transformed(&m, &Point::zeros())
    }

    /// Translate so the centroid sits at the origin.
    pub fn centered(&self) -> Result<Self> {
        let c = self.centroid();
        if c.norm() == 0.0 {
            return Ok(self.clone());
        }
        self.translated(&-c)
    }

    /// Checks the structural invariants: positive radius, every facet
    /// planar and supporting, consistent outward orientation, positive volume.
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            BodyKind::Ball { radius, center } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidBody("ball needs finite center and positive radius".into()));
                }
            }
            BodyKind::Polytope(p) => {
                let min_facets = self.dim.value() + 1;
                if p.vertices.len() < min_facets || p.facets.len() < min_facets {
                    return Err(Error::InvalidBody("too few vertices or facets".into()));
                }
                let eps = HULL_REL_EPS * p.diameter.max(f64::MIN_POSITIVE) * 10.0;
                for ((n, c), facet) in p.halfspaces().zip(&p.facets) {
                    if (n.norm() - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidBody("facet normal is not unit length".into()));
                    }
                    if facet.iter().any(|&i| (n.dot(&p.vertices[i]) - c).abs() > eps) {
                        return Err(Error::InvalidBody("facet is not planar".into()));
                    }
                    if p.vertices.iter().any(|v| n.dot(v) > c + eps) {
                        return Err(Error::InvalidBody("facet is not a supporting hyperplane".into()));
                    }
                }
                if !(self.volume() > 0.0) {
                    return Err(Error::InvalidBody("polytope has no interior".into()));
                }
            }
        }
        Ok(())
    }

    /// Lebesgue measure in the ambient dimension.
    pub fn volume(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius, .. } => match self.dim {
                Dim::Two => std::f64::consts::PI * radius * radius,
                Dim::Three => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
            },
            BodyKind::Polytope(p) => match self.dim {
                Dim::Two => {
                    let ring: Vec<usize> = p.facets.iter().map(|f| f[0]).collect();
                    shoelace(ring.iter().map(|&i| (p.vertices[i].x, p.vertices[i].y)))
                }
                Dim::Three => {
                    let c = self.centroid();
                    let mut vol = 0.0;
                    for facet in &p.facets {
                        let a = p.vertices[facet[0]] - c;
                        for k in 1..facet.len() - 1 {
                            let b = p.vertices[facet[k]] - c;
                            let d = p.vertices[facet[k + 1]] - c;
                            vol += a.dot(&b.cross(&d));
                        }
                    }
                    vol / 6.0
                }
            },
        }
    }

    /// `[min <x,θ>, max <x,θ>]` over the body.
    pub fn support_interval(&self, direction: &Direction) -> IntervalSupport {
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                let c = direction.dot(center);
                IntervalSupport { a: c - radius, b: c + radius }
            }
            BodyKind::Polytope(p) => {
                let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
                for v in &p.vertices {
                    let h = direction.dot(v);
                    a = a.min(h);
                    b = b.max(h);
                }
                IntervalSupport { a, b }
            }
        }
    }

    /// Width of the body in direction `θ`.
    pub fn width(&self, direction: &Direction) -> f64 {
        self.support_interval(direction).width()
    }
}

/// Signed area of a closed ring given as `(x, y)` pairs (positive when counter-clockwise).
pub(crate) fn shoelace(ring: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let mut it = ring.clone();
    let Some(first) = it.next() else { return 0.0 };
    let mut prev = first;
    let mut twice = 0.0;
    for p in it {
        twice += prev.0 * p.1 - p.0 * prev.1;
        prev = p;
    }
    twice += prev.0 * first.1 - first.0 * prev.1;
    0.5 * twice
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn square() -> ConvexBody {
        builtin_body(BuiltinShape::Square, false)
    }

    #[test]
    fn square_from_corners() {
        let pts = [(0., 0.), (1., 0.), (1., 1.), (0., 1.)].map(|(x, y)| Point::new(x, y, 0.0));
        let k = ConvexBody::from_points(Dim::Two, &pts).unwrap();
        assert_eq!(k.polytope().unwrap().vertices().len(), 4);
        assert!((k.volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cube_center_point_is_discarded() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(Point::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64));
        }
        pts.push(Point::new(0.5, 0.5, 0.5));
        let k = ConvexBody::from_points(Dim::Three, &pts).unwrap();
        let p = k.polytope().unwrap();
        assert_eq!(p.vertices().len(), 8);
        assert_eq!(p.facets().len(), 6);
        assert_eq!(p.edges().len(), 12);
        assert!((k.volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<Point> = (0..4).map(|i| Point::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(
            ConvexBody::from_points(Dim::Two, &pts),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn coplanar_points_are_degenerate() {
        let pts: Vec<Point> = (0..6)
            .map(|i| Point::new((i as f64).cos(), (i as f64).sin(), 0.3))
            .collect();
        assert!(matches!(
            ConvexBody::from_points(Dim::Three, &pts),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn ball_volume_and_radius() {
        let b = builtin_body(BuiltinShape::Ball, false);
        assert!((b.volume() - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!(ConvexBody::ball(Dim::Three, Point::zeros(), 0.0).is_err());
    }

    #[test]
    fn square_support_intervals() {
        let k = square();
        let s = k.support_interval(&Direction::new(&[1.0, 0.0]).unwrap());
        assert_eq!((s.a, s.b), (-0.5, 0.5));
        let d = Direction::new(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!((k.width(&d) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ball_support_interval() {
        let b = builtin_body(BuiltinShape::Ball, false);
        let d = Direction::new(&[0.3, -0.2, 0.9]).unwrap();
        let s = b.support_interval(&d);
        assert_eq!((s.a, s.b), (-1.0, 1.0));
    }

    #[test]
    fn width_is_symmetric() {
        let k = builtin_body(BuiltinShape::Dodecahedron, true);
        for i in 0..50 {
            let d = Direction::from_polar((i as f64 / 25.0) - 0.99, i as f64 * 0.7);
            assert_eq!(k.width(&d), k.width(&d.negated()));
        }
    }

    #[test]
    fn halfspace_cube_matches_vertex_cube() {
        let normals = [
            Point::x(), -Point::x(), Point::y(), -Point::y(), Point::z(), -Point::z(),
        ];
        let k = ConvexBody::from_halfspaces(Dim::Three, &normals, &[0.5; 6]).unwrap();
        assert_eq!(k.polytope().unwrap().vertices().len(), 8);
        assert!((k.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_halfspaces_rejected() {
        let normals = [Point::x(), Point::y(), Point::z()];
        assert!(ConvexBody::from_halfspaces(Dim::Three, &normals, &[1.0; 3]).is_err());
    }

    #[test]
    fn direction_is_normalized() {
        let d = Direction::new(&[3.0, 4.0]).unwrap();
        assert!((d.vector().norm() - 1.0).abs() < 1e-15);
        assert!(Direction::new(&[0.0, 0.0, 0.0]).is_err());
        assert!(Direction::new(&[1.0]).is_err());
    }

    #[test]
    fn validate_builtins() {
        for shape in [
            BuiltinShape::Square,
            BuiltinShape::Cube,
            BuiltinShape::Dodecahedron,
            BuiltinShape::Ball,
            BuiltinShape::Disk,
            BuiltinShape::RegularPolygon(7),
        ] {
            builtin_body(shape, true).validate().unwrap();
        }
    }
}
