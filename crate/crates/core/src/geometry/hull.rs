//! Convex hulls of point clouds and vertex enumeration for half-space
//! descriptions.

use std::collections::HashSet;

use nalgebra::{Matrix2, Matrix3, Vector2};

use super::{Dim, Point, Polytope, HULL_REL_EPS};
use crate::error::{Error, Result};

pub(crate) fn polytope_from_points(dim: Dim, points: &[Point]) -> Result<Polytope> {
    if points.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
        return Err(Error::DegenerateInput("non-finite coordinate".into()));
    }
    if points.len() < dim.value() + 1 {
        return Err(Error::DegenerateInput(format!(
            "need at least {} points, got {}",
            dim.value() + 1,
            points.len()
        )));
    }
    let scale = points
        .iter()
        .map(|p| (p - points[0]).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let eps = HULL_REL_EPS * scale;

    let facets = match dim {
        Dim::Two => {
            if points.iter().any(|p| p.z != 0.0) {
                return Err(Error::DegenerateInput("planar points must have z = 0".into()));
            }
            let xy: Vec<Vector2<f64>> = points.iter().map(|p| p.xy()).collect();
            let ring = hull_2d(&xy, eps * scale);
            if ring.len() < 3 {
                return Err(Error::DegenerateInput("points are collinear".into()));
            }
            (0..ring.len())
                .map(|k| vec![ring[k], ring[(k + 1) % ring.len()]])
                .collect::<Vec<_>>()
        }
        Dim::Three => hull_3d(points, eps)?,
    };

    // Compact the vertex numbering to the points actually used.
    let mut remap = vec![usize::MAX; points.len()];
    let mut vertices = Vec::new();
    let facets: Vec<Vec<usize>> = facets
        .into_iter()
        .map(|f| {
            f.into_iter()
                .map(|i| {
                    if remap[i] == usize::MAX {
                        remap[i] = vertices.len();
                        vertices.push(points[i]);
                    }
                    remap[i]
                })
                .collect()
        })
        .collect();

    Ok(Polytope::assemble(dim, vertices, facets))
}

fn cross2(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Returns indices of the strictly convex hull in
/// counter-clockwise order; `area_eps` is the turn threshold below which a
/// point counts as collinear.
pub(crate) fn hull_2d(points: &[Vector2<f64>], area_eps: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        points[i]
            .x
            .total_cmp(&points[j].x)
            .then(points[i].y.total_cmp(&points[j].y))
    });
    idx.dedup_by(|a, b| (points[*a] - points[*b]).norm_squared() == 0.0);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && cross2(&points[lower[lower.len() - 2]], &points[lower[lower.len() - 1]], &points[i]) <= area_eps
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && cross2(&points[upper[upper.len() - 2]], &points[upper[upper.len() - 1]], &points[i]) <= area_eps
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

struct Tri {
    v: [usize; 3],
    n: Point,
    c: f64,
    alive: bool,
}

impl Tri {
    fn new(points: &[Point], v: [usize; 3]) -> Self {
        let n = (points[v[1]] - points[v[0]]).cross(&(points[v[2]] - points[v[0]]));
        let n = n / n.norm();
        Tri {
            v,
            n,
            c: n.dot(&points[v[0]]),
            alive: true,
        }
    }

    fn flipped(self) -> Self {
        Tri {
            v: [self.v[0], self.v[2], self.v[1]],
            n: -self.n,
            c: -self.c,
            alive: true,
        }
    }

    fn height(&self, p: &Point) -> f64 {
        self.n.dot(p) - self.c
    }
}

/// Orthonormal `(u, w)` spanning the plane with normal `n`, with `u × w = n`.
pub(crate) fn plane_basis(n: &Point) -> (Point, Point) {
    let a = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Point::x()
    } else if n.y.abs() <= n.z.abs() {
        Point::y()
    } else {
        Point::z()
    };
    let u = (a - n * a.dot(n)).normalize();
    let w = n.cross(&u);
    (u, w)
}

/// Incremental 3D hull. Triangles are only used to discover the supporting
/// planes; each facet is then rebuilt as the planar hull of every input
/// point on its plane, so coplanar triangles merge into one polygon.
fn hull_3d(points: &[Point], eps: f64) -> Result<Vec<Vec<usize>>> {
    let i0 = (0..points.len())
        .min_by(|&a, &b| points[a].x.total_cmp(&points[b].x))
        .unwrap();
    let i1 = argmax(points, |p| (p - points[i0]).norm());
    if (points[i1] - points[i0]).norm() <= eps {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let axis = (points[i1] - points[i0]).normalize();
    let i2 = argmax(points, |p| (p - points[i0]).cross(&axis).norm());
    if (points[i2] - points[i0]).cross(&axis).norm() <= eps {
        return Err(Error::DegenerateInput("points are collinear".into()));
    }
    let base = (points[i1] - points[i0])
        .cross(&(points[i2] - points[i0]))
        .normalize();
    let i3 = argmax(points, |p| base.dot(&(p - points[i0])).abs());
    if base.dot(&(points[i3] - points[i0])).abs() <= eps {
        return Err(Error::DegenerateInput("points are coplanar".into()));
    }

    let inner = (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;
    let mut tris: Vec<Tri> = [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]]
        .into_iter()
        .map(|v| {
            let t = Tri::new(points, v);
            if t.height(&inner) > 0.0 {
                t.flipped()
            } else {
                t
            }
        })
        .collect();

    let seeds = [i0, i1, i2, i3];
    for (p_idx, p) in points.iter().enumerate() {
        if seeds.contains(&p_idx) {
            continue;
        }
        let visible: Vec<usize> = (0..tris.len())
            .filter(|&t| tris[t].alive && tris[t].height(p) > eps)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut directed = HashSet::new();
        for &t in &visible {
            let v = tris[t].v;
            for k in 0..3 {
                directed.insert((v[k], v[(k + 1) % 3]));
            }
        }
        let mut horizon = Vec::new();
        for &t in &visible {
            let v = tris[t].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                if !directed.contains(&(b, a)) {
                    horizon.push((a, b));
                }
            }
            tris[t].alive = false;
        }
        for (a, b) in horizon {
            tris.push(Tri::new(points, [a, b, p_idx]));
        }
    }

    // Turn supporting planes into polygonal facets.
    let mut planes: Vec<(Point, f64)> = Vec::new();
    for t in tris.iter().filter(|t| t.alive && t.n.iter().all(|x| x.is_finite())) {
        let on_known = planes.iter().any(|(n, c)| {
            t.v.iter().all(|&i| (n.dot(&points[i]) - c).abs() <= eps)
        });
        if on_known {
            continue;
        }
        if points.iter().any(|q| t.height(q) > eps) {
            continue;
        }
        planes.push((t.n, t.c));
    }

    let mut facets = Vec::with_capacity(planes.len());
    for (n, c) in &planes {
        let on_plane: Vec<usize> = (0..points.len())
            .filter(|&i| (n.dot(&points[i]) - c).abs() <= eps)
            .collect();
        let (u, w) = plane_basis(n);
        let coords: Vec<Vector2<f64>> = on_plane
            .iter()
            .map(|&i| Vector2::new(u.dot(&points[i]), w.dot(&points[i])))
            .collect();
        let scale = coords.iter().map(|q| (q - coords[0]).norm()).fold(0.0, f64::max);
        let ring = hull_2d(&coords, eps * scale.max(eps));
        if ring.len() >= 3 {
            facets.push(ring.into_iter().map(|k| on_plane[k]).collect());
        }
    }
    if facets.len() < 4 {
        return Err(Error::DegenerateInput("hull has fewer than four facets".into()));
    }
    Ok(facets)
}

fn argmax(points: &[Point], f: impl Fn(&Point) -> f64) -> usize {
    (0..points.len())
        .max_by(|&a, &b| f(&points[a]).total_cmp(&f(&points[b])))
        .unwrap()
}

/// Vertices of the polytope `{x : <n_i, x> <= c_i}` by brute-force
/// enumeration of all `dim`-subsets of constraints. Boundedness is not
/// checked here; see [`super::ConvexBody::from_halfspaces`].
pub fn vertices_from_halfspaces(dim: Dim, normals: &[Point], offsets: &[f64]) -> Result<Vec<Point>> {
    if normals.len() != offsets.len() {
        return Err(Error::DegenerateInput("normals and offsets differ in length".into()));
    }
    let mut hs = Vec::with_capacity(normals.len());
    for (n, &c) in normals.iter().zip(offsets) {
        let len = n.norm();
        if !(len > 0.0) || !len.is_finite() || !c.is_finite() {
            return Err(Error::DegenerateInput("invalid half-space".into()));
        }
        if dim == Dim::Two && n.z != 0.0 {
            return Err(Error::DegenerateInput("planar half-space normal must have z = 0".into()));
        }
        hs.push((n / len, c / len));
    }
    let scale = hs.iter().map(|(_, c)| c.abs()).fold(1.0, f64::max);
    let eps = 1e-9 * scale;
    let feasible = |x: &Point| hs.iter().all(|(n, c)| n.dot(x) <= c + eps);

    let mut verts: Vec<Point> = Vec::new();
    let mut push = |x: Point| {
        if feasible(&x) && !verts.iter().any(|v| (v - x).norm() <= eps) {
            verts.push(x);
        }
    };
    let m = hs.len();
    match dim {
        Dim::Two => {
            for i in 0..m {
                for j in i + 1..m {
                    let a = Matrix2::new(hs[i].0.x, hs[i].0.y, hs[j].0.x, hs[j].0.y);
                    if let Some(inv) = a.try_inverse() {
                        if a.determinant().abs() < 1e-12 {
                            continue;
                        }
                        let x = inv * Vector2::new(hs[i].1, hs[j].1);
                        push(Point::new(x.x, x.y, 0.0));
                    }
                }
            }
        }
        Dim::Three => {
            for i in 0..m {
                for j in i + 1..m {
                    for k in j + 1..m {
                        let a = Matrix3::from_rows(&[
                            hs[i].0.transpose(),
                            hs[j].0.transpose(),
                            hs[k].0.transpose(),
                        ]);
                        if a.determinant().abs() < 1e-12 {
                            continue;
                        }
                        if let Some(inv) = a.try_inverse() {
                            push(inv * Point::new(hs[i].1, hs[j].1, hs[k].1));
                        }
                    }
                }
            }
        }
    }
    if verts.len() < dim.value() + 1 {
        return Err(Error::DegenerateInput(
            "half-spaces describe an empty, lower-dimensional, or unbounded set".into(),
        ));
    }
    Ok(verts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_chain_drops_collinear_and_interior() {
        let pts: Vec<Vector2<f64>> = [(0., 0.), (0.5, 0.), (1., 0.), (1., 1.), (0., 1.), (0.5, 0.5)]
            .iter()
            .map(|&(x, y)| Vector2::new(x, y))
            .collect();
        let ring = hull_2d(&pts, 1e-12);
        assert_eq!(ring, vec![0, 2, 3, 4]);
    }

    #[test]
    fn octahedron_from_points() {
        let pts = [
            Point::x(), -Point::x(), Point::y(), -Point::y(), Point::z(), -Point::z(),
        ];
        let p = polytope_from_points(Dim::Three, &pts).unwrap();
        assert_eq!(p.facets().len(), 8);
        assert!(p.facets().iter().all(|f| f.len() == 3));
        assert_eq!(p.edges().len(), 12);
    }

    #[test]
    fn cube_with_edge_and_face_midpoints() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(Point::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64));
        }
        pts.push(Point::new(0.5, 0.0, 0.0));
        pts.push(Point::new(0.5, 0.5, 1.0));
        let p = polytope_from_points(Dim::Three, &pts).unwrap();
        assert_eq!(p.vertices().len(), 8);
        assert!(p.facets().iter().all(|f| f.len() == 4));
    }

    #[test]
    fn facet_orientation_is_outward() {
        let pts: Vec<Point> = (0..30)
            .map(|i| {
                let t = i as f64 * 2.399963;
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / 30.0;
                let r = (1.0 - z * z).sqrt();
                Point::new(r * t.cos(), r * t.sin(), z)
            })
            .collect();
        let p = polytope_from_points(Dim::Three, &pts).unwrap();
        assert_eq!(p.vertices().len(), 30);
        let c: Point = p.vertices().iter().sum::<Point>() / 30.0;
        for (n, off) in p.halfspaces() {
            assert!(n.dot(&c) < off);
        }
    }
}
