//! JSON body files.
//!
//! Three forms are accepted:
//!
//! ```json
//! {"dim": 3, "kind": "polytope", "vertices": [[0,0,0], ...], "facets": [[0,1,2,3], ...]}
//! {"dim": 3, "kind": "ball", "center": [0,0,0], "radius": 1.0}
//! {"dim": 3, "normals": [[1,0,0], ...], "offsets": [0.5, ...]}
//! ```
//!
//! Facets in the vertex form are optional and always recomputed from the
//! hull of the vertices. `dim` may be omitted when it can be read off the
//! coordinates. An optional `label` names the body.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BodyKind, ConvexBody, Dim, Point};
use crate::error::{Error, Result};

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct BodyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<Dim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<f64>>,
}

fn to_point(coords: &[f64], dim: Dim) -> Result<Point> {
    match (dim, coords) {
        (Dim::Two, &[x, y]) => Ok(Point::new(x, y, 0.0)),
        (Dim::Three, &[x, y, z]) => Ok(Point::new(x, y, z)),
        _ => Err(Error::InvalidBody(format!(
            "expected {dim} coordinates, got {}",
            coords.len()
        ))),
    }
}

fn infer_dim(declared: Option<Dim>, rows: &[Vec<f64>]) -> Result<Dim> {
    if let Some(d) = declared {
        return Ok(d);
    }
    match rows.first().map(Vec::len) {
        Some(2) => Ok(Dim::Two),
        Some(3) => Ok(Dim::Three),
        _ => Err(Error::InvalidBody("cannot infer dimension".into())),
    }
}

impl BodyFile {
    pub fn into_body(self) -> Result<ConvexBody> {
        let kind = self.kind.as_deref().map(str::to_ascii_lowercase);
        let body = if kind.as_deref() == Some("ball") || (self.radius.is_some() && self.vertices.is_none()) {
            let center = self
                .center
                .ok_or_else(|| Error::InvalidBody("ball needs a center".into()))?;
            let radius = self
                .radius
                .ok_or_else(|| Error::InvalidBody("ball needs a radius".into()))?;
            let dim = infer_dim(self.dim, std::slice::from_ref(&center))?;
            ConvexBody::ball(dim, to_point(&center, dim)?, radius)?
        } else if let (Some(normals), Some(offsets)) = (&self.normals, &self.offsets) {
            let dim = infer_dim(self.dim, normals)?;
            let normals = normals
                .iter()
                .map(|n| to_point(n, dim))
                .collect::<Result<Vec<_>>>()?;
            ConvexBody::from_halfspaces(dim, &normals, offsets)?
        } else if let Some(vertices) = &self.vertices {
            let dim = infer_dim(self.dim, vertices)?;
            let pts = vertices
                .iter()
                .map(|v| to_point(v, dim))
                .collect::<Result<Vec<_>>>()?;
            ConvexBody::from_points(dim, &pts)?
        } else {
            return Err(Error::InvalidBody(
                "body file needs vertices, half-spaces, or a ball".into(),
            ));
        };
        body.validate()?;
        Ok(match self.label {
            Some(label) => body.with_label(label),
            None => body,
        })
    }

    pub fn from_body(body: &ConvexBody) -> Self {
        let n = body.dim().value();
        let coords = |p: &Point| p.as_slice()[..n].to_vec();
        match body.kind() {
            BodyKind::Ball { center, radius } => BodyFile {
                dim: Some(body.dim()),
                kind: Some("ball".into()),
                label: Some(body.label().to_string()),
                center: Some(coords(center)),
                radius: Some(*radius),
                ..Default::default()
            },
            BodyKind::Polytope(p) => BodyFile {
                dim: Some(body.dim()),
                kind: Some("polytope".into()),
                label: Some(body.label().to_string()),
                vertices: Some(p.vertices().iter().map(coords).collect()),
                facets: Some(p.facets().to_vec()),
                ..Default::default()
            },
        }
    }
}

pub fn body_from_json(text: &str) -> Result<ConvexBody> {
    serde_json::from_str::<BodyFile>(text)?.into_body()
}

pub fn read_body(path: &Path) -> Result<ConvexBody> {
    let text = std::fs::read_to_string(path)?;
    let body = body_from_json(&text)?;
    if body.label() == "polytope" || body.label() == "ball" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            return Ok(body.with_label(stem));
        }
    }
    Ok(body)
}

pub fn body_to_json(body: &ConvexBody) -> String {
    serde_json::to_string_pretty(&BodyFile::from_body(body)).expect("body serializes")
}
