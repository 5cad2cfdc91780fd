use smallvec::SmallVec;

use super::hull::plane_basis;
use super::{BodyKind, ConvexBody, Dim, Hyperplane, Point, Polytope, SECTION_REL_EPS};

impl ConvexBody {
    /// `(n-1)`-volume of the body's intersection with `plane`: a chord length
    /// in the plane, a cross-section area in space.
    ///
    /// Empty and lower-dimensional intersections give 0. A plane containing
    /// a facet gives that facet's measure.
    ///
    /// Panics if the plane and the body live in different dimensions.
    pub fn section_volume(&self, plane: &Hyperplane) -> f64 {
        assert_eq!(plane.direction.dim(), self.dim, "plane and body dimension differ");
        let theta = plane.direction.vector();
        let s = plane.offset;
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                let d = s - theta.dot(center);
                let r2 = radius * radius - d * d;
                if r2 <= 0.0 {
                    return 0.0;
                }
                match self.dim {
                    Dim::Two => 2.0 * r2.sqrt(),
                    Dim::Three => std::f64::consts::PI * r2,
                }
            }
            BodyKind::Polytope(p) => match self.dim {
                Dim::Two => polygon_chord(p, theta, s),
                Dim::Three => polyhedron_section(p, theta, s),
            },
        }
    }
}

/// Clips the line `{sθ + tθ⊥}` against every edge half-plane.
fn polygon_chord(p: &Polytope, theta: &Point, s: f64) -> f64 {
    let eps = SECTION_REL_EPS * p.diameter;
    let base = theta * s;
    let along = Point::new(-theta.y, theta.x, 0.0);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (n, c) in p.halfspaces() {
        let rate = n.dot(&along);
        let slack = c - n.dot(&base);
        if rate.abs() <= 1e-15 {
            if slack < -eps {
                return 0.0;
            }
        } else if rate > 0.0 {
            hi = hi.min(slack / rate);
        } else {
            lo = lo.max(slack / rate);
        }
    }
    (hi - lo).max(0.0)
}

/// Collects edge/plane crossings (and vertices on the plane), orders them
/// by angle inside the plane, and applies the shoelace formula.
fn polyhedron_section(p: &Polytope, theta: &Point, s: f64) -> f64 {
    let eps = SECTION_REL_EPS * p.diameter;
    let heights: SmallVec<[f64; 32]> = p.vertices.iter().map(|v| theta.dot(v) - s).collect();
    if heights.iter().all(|&h| h > eps) || heights.iter().all(|&h| h < -eps) {
        return 0.0;
    }

    let mut pts: SmallVec<[Point; 16]> = SmallVec::new();
    for (v, &h) in p.vertices.iter().zip(&heights) {
        if h.abs() <= eps {
            pts.push(*v);
        }
    }
    for &(a, b) in &p.edges {
        let (ha, hb) = (heights[a], heights[b]);
        if (ha > eps && hb < -eps) || (ha < -eps && hb > eps) {
            let t = ha / (ha - hb);
            pts.push(p.vertices[a] + (p.vertices[b] - p.vertices[a]) * t);
        }
    }
    if pts.len() < 3 {
        return 0.0;
    }

    let (u, w) = plane_basis(theta);
    let mut coords: SmallVec<[(f64, f64); 16]> = pts.iter().map(|q| (u.dot(q), w.dot(q))).collect();
    let n = coords.len() as f64;
    let cx = coords.iter().map(|c| c.0).sum::<f64>() / n;
    let cy = coords.iter().map(|c| c.1).sum::<f64>() / n;
    for c in coords.iter_mut() {
        c.0 -= cx;
        c.1 -= cy;
    }
    coords.sort_by(|a, b| a.1.atan2(a.0).total_cmp(&b.1.atan2(b.0)));
    super::shoelace(coords.iter().copied()).abs()
}

#[cfg(test)]
mod tests {
    use super::super::{builtin_body, BuiltinShape, Direction};
    use super::*;

    fn plane(components: &[f64], s: f64) -> Hyperplane {
        Hyperplane::new(Direction::new(components).unwrap(), s)
    }

    #[test]
    fn square_mid_chord() {
        let k = builtin_body(BuiltinShape::Square, false);
        assert!((k.section_volume(&plane(&[0.0, 1.0], 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(k.section_volume(&plane(&[0.0, 1.0], 0.7)), 0.0);
    }

    #[test]
    fn square_diagonal_chord() {
        let k = builtin_body(BuiltinShape::Square, false);
        let z = k.section_volume(&plane(&[1.0, 1.0], 0.0));
        assert!((z - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn line_along_an_edge_returns_edge_length() {
        let k = builtin_body(BuiltinShape::Square, false);
        assert!((k.section_volume(&plane(&[0.0, 1.0], 0.5)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cube_mid_plane() {
        let k = builtin_body(BuiltinShape::Cube, false);
        assert!((k.section_volume(&plane(&[0.0, 0.0, 1.0], 0.0)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cube_hexagonal_section() {
        let k = builtin_body(BuiltinShape::Cube, false);
        let a = k.section_volume(&plane(&[1.0, 1.0, 1.0], 0.0));
        assert!((a - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-12, "{a}");
    }

    #[test]
    fn plane_containing_a_facet() {
        let k = builtin_body(BuiltinShape::Cube, false);
        assert!((k.section_volume(&plane(&[0.0, 0.0, 1.0], 0.5)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plane_through_vertex_or_edge_only() {
        let k = builtin_body(BuiltinShape::Cube, false);
        let corner = 3f64.sqrt() / 2.0;
        assert_eq!(k.section_volume(&plane(&[1.0, 1.0, 1.0], corner)), 0.0);
        let edge = 2f64.sqrt() / 2.0;
        assert!(k.section_volume(&plane(&[1.0, 1.0, 0.0], edge)) < 1e-12);
    }

    #[test]
    fn ball_sections() {
        let b = builtin_body(BuiltinShape::Ball, false);
        let a = b.section_volume(&plane(&[0.2, 0.5, -0.3], 0.5));
        assert!((a - std::f64::consts::PI * 0.75).abs() < 1e-14);
        assert_eq!(b.section_volume(&plane(&[0.0, 0.0, 1.0], 1.0)), 0.0);
        let d = builtin_body(BuiltinShape::Disk, false);
        assert!((d.section_volume(&plane(&[1.0, 0.0], 0.6)) - 1.6).abs() < 1e-14);
    }
}
