//! Labeled 2D triangle meshes.
//!
//! A [`TriMesh`] is immutable after construction: connectivity (unique edge
//! list, facet labels, point locator) is derived once in [`TriMesh::new`].

mod generate;
mod locate;

pub use generate::{build_background_mesh, refine_uniform, triangulate_fitted};
pub use locate::Location;

use crate::scalar::Real;
use std::io::{BufRead, Write};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh input: {0}")]
    InvalidInput(String),
    #[error("self-intersecting polygon near ({0}, {1})")]
    SelfIntersection(f64, f64),
    #[error("polygon union failure: {0}")]
    UnionFailure(String),
    #[error("mesher failed near ({x}, {y}): {reason}")]
    MesherFailure { x: f64, y: f64, reason: String },
    #[error("mesh i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh file parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subdomain {
    Fluid,
    Solid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetLabel {
    Outer,
    Interface,
}

/// Tagged boundary or interface edge.
///
/// `vertices` are ordered so that the adjacent triangle `tri` traverses the
/// edge counterclockwise; the outward normal of `tri` along the edge
/// therefore points out of the domain (outer facets) or from the solid into
/// the fluid (interface facets, where `tri` is the solid side).
#[derive(Clone, Copy, Debug)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub label: FacetLabel,
    pub tri: usize,
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T> {
    pub min: [T; 2],
    pub max: [T; 2],
}

impl<T: Real> Rect<T> {
    pub fn new(min: [T; 2], max: [T; 2]) -> Self {
        Rect { min, max }
    }

    pub fn width(&self) -> T {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> T {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, p: [T; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn corners(&self) -> [[T; 2]; 4] {
        [
            [self.min[0], self.min[1]],
            [self.max[0], self.min[1]],
            [self.max[0], self.max[1]],
            [self.min[0], self.max[1]],
        ]
    }
}

/// Target edge lengths for mesh generation: `h_max` globally, `h_cr` inside
/// (and graded around) the listed crack boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeSpec<T> {
    pub h_max: T,
    pub h_cr: T,
    pub crack_boxes: Vec<Rect<T>>,
    /// Size-field growth rate with distance from the crack region. 0.5 keeps
    /// the ratio of neighboring element sizes at or below 1.5.
    pub grading: T,
}

impl<T: Real> SizeSpec<T> {
    pub fn new(h_max: T, h_cr: T, crack_boxes: Vec<Rect<T>>) -> Self {
        SizeSpec {
            h_max,
            h_cr,
            crack_boxes,
            grading: T::of(0.5),
        }
    }

    pub fn validate(&self, domain: &Rect<T>) -> Result<(), MeshError> {
        if !(self.h_cr > T::zero() && self.h_max > T::zero()) {
            return Err(MeshError::InvalidInput("sizes must be positive".into()));
        }
        if self.h_cr > self.h_max {
            return Err(MeshError::InvalidInput(format!(
                "h_cr = {} exceeds h_max = {}",
                self.h_cr, self.h_max
            )));
        }
        if self.grading <= T::zero() {
            return Err(MeshError::InvalidInput("grading must be positive".into()));
        }
        for b in &self.crack_boxes {
            if !(domain.contains(b.min) && domain.contains(b.max)) {
                return Err(MeshError::InvalidInput(
                    "crack box extends outside the domain".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Conforming labeled triangle mesh.
pub struct TriMesh<T> {
    pub vertices: Vec<[T; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub tri_label: Vec<Subdomain>,
    pub facets: Vec<Facet>,
    pub size_field: Option<Vec<T>>,
    /// Unique mesh edges as sorted vertex pairs, in lexicographic order.
    pub edges: Vec<[usize; 2]>,
    /// Per triangle: index into `edges` of the edge opposite local vertex k.
    pub tri_edges: Vec<[usize; 3]>,
    pub(crate) locator: OnceLock<locate::Locator<T>>,
}

impl<T: Real> TriMesh<T> {
    /// Builds the mesh, fixing triangle orientation and deriving edges and
    /// facet labels. Boundary edges become `Outer` facets, edges between a
    /// fluid and a solid triangle become `Interface` facets.
    pub fn new(
        vertices: Vec<[T; 2]>,
        mut triangles: Vec<[usize; 3]>,
        tri_label: Vec<Subdomain>,
        size_field: Option<Vec<T>>,
    ) -> Result<Self, MeshError> {
        if tri_label.len() != triangles.len() {
            return Err(MeshError::InvalidInput("label/triangle count mismatch".into()));
        }
        if let Some(s) = &size_field {
            if s.len() != vertices.len() {
                return Err(MeshError::InvalidInput("size field length mismatch".into()));
            }
        }
        for t in triangles.iter_mut() {
            if t[0] >= vertices.len() || t[1] >= vertices.len() || t[2] >= vertices.len() {
                return Err(MeshError::InvalidInput("triangle index out of range".into()));
            }
            let a = signed_area(&vertices, *t);
            if a == T::zero() {
                return Err(MeshError::InvalidInput(format!(
                    "degenerate triangle {:?}",
                    t
                )));
            }
            if a < T::zero() {
                t.swap(1, 2);
            }
        }

        // unique edge list in lexicographic order
        let mut all: Vec<[usize; 2]> = Vec::with_capacity(3 * triangles.len());
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                all.push([a.min(b), a.max(b)]);
            }
        }
        all.sort_unstable();
        all.dedup();
        let edges = all;
        let edge_id = |a: usize, b: usize| -> usize {
            let key = [a.min(b), a.max(b)];
            edges.binary_search(&key).expect("edge present")
        };

        let mut tri_edges = Vec::with_capacity(triangles.len());
        // adjacency: up to two triangles per edge, in triangle-index order
        let mut edge_tris: Vec<[usize; 2]> = vec![[usize::MAX; 2]; edges.len()];
        for (ti, t) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let e = edge_id(t[(k + 1) % 3], t[(k + 2) % 3]);
                te[k] = e;
                let slot = &mut edge_tris[e];
                if slot[0] == usize::MAX {
                    slot[0] = ti;
                } else if slot[1] == usize::MAX {
                    slot[1] = ti;
                } else {
                    return Err(MeshError::InvalidInput(format!(
                        "non-manifold edge {:?}",
                        edges[e]
                    )));
                }
            }
            tri_edges.push(te);
        }

        // facets: boundary edges and fluid/solid interface edges
        let mut facets = Vec::new();
        for (e, adj) in edge_tris.iter().enumerate() {
            let (label, tri) = if adj[1] == usize::MAX {
                (FacetLabel::Outer, adj[0])
            } else if tri_label[adj[0]] != tri_label[adj[1]] {
                let solid = if tri_label[adj[0]] == Subdomain::Solid {
                    adj[0]
                } else {
                    adj[1]
                };
                (FacetLabel::Interface, solid)
            } else {
                continue;
            };
            // orient the edge as traversed counterclockwise by `tri`
            let t = triangles[tri];
            let [a, b] = edges[e];
            let mut vs = [a, b];
            for k in 0..3 {
                if t[k] == a && t[(k + 1) % 3] == b {
                    vs = [a, b];
                    break;
                }
                if t[k] == b && t[(k + 1) % 3] == a {
                    vs = [b, a];
                    break;
                }
            }
            facets.push(Facet {
                vertices: vs,
                label,
                tri,
            });
        }

        Ok(TriMesh {
            vertices,
            triangles,
            tri_label,
            facets,
            size_field,
            edges,
            tri_edges,
            locator: OnceLock::new(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn tri_area(&self, t: usize) -> T {
        signed_area(&self.vertices, self.triangles[t])
    }

    pub fn total_area(&self) -> T {
        (0..self.n_triangles()).map(|t| self.tri_area(t)).sum()
    }

    pub fn area_of(&self, label: Subdomain) -> T {
        (0..self.n_triangles())
            .filter(|&t| self.tri_label[t] == label)
            .map(|t| self.tri_area(t))
            .sum()
    }

    pub fn tri_centroid(&self, t: usize) -> [T; 2] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let third = T::of(1.0 / 3.0);
        [
            (a[0] + b[0] + c[0]) * third,
            (a[1] + b[1] + c[1]) * third,
        ]
    }

    /// Longest edge of triangle `t`.
    pub fn tri_diameter(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let d = |p: [T; 2], q: [T; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        d(a, b).max(d(b, c)).max(d(c, a))
    }

    /// Minimum interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> T {
        let mut min = T::infinity();
        for t in &self.triangles {
            let p = t.map(|v| self.vertices[v]);
            for k in 0..3 {
                let u = [p[(k + 1) % 3][0] - p[k][0], p[(k + 1) % 3][1] - p[k][1]];
                let w = [p[(k + 2) % 3][0] - p[k][0], p[(k + 2) % 3][1] - p[k][1]];
                let dot = u[0] * w[0] + u[1] * w[1];
                let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
                let nw = (w[0] * w[0] + w[1] * w[1]).sqrt();
                let ang = (dot / (nu * nw)).min(T::one()).max(-T::one()).acos();
                min = min.min(ang);
            }
        }
        min * T::of(180.0 / std::f64::consts::PI)
    }

    /// Unit normal of a facet: out of the domain (outer) or pointing from the
    /// solid into the fluid (interface).
    pub fn facet_normal(&self, f: &Facet) -> [T; 2] {
        let a = self.vertices[f.vertices[0]];
        let b = self.vertices[f.vertices[1]];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        [d[1] / len, -d[0] / len]
    }

    pub fn facet_length(&self, f: &Facet) -> T {
        let a = self.vertices[f.vertices[0]];
        let b = self.vertices[f.vertices[1]];
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    pub fn interface_facets(&self) -> impl Iterator<Item = &Facet> {
        self.facets
            .iter()
            .filter(|f| f.label == FacetLabel::Interface)
    }

    pub fn bounding_box(&self) -> Rect<T> {
        let mut min = [T::infinity(); 2];
        let mut max = [T::neg_infinity(); 2];
        for v in &self.vertices {
            for k in 0..2 {
                min[k] = min[k].min(v[k]);
                max[k] = max[k].max(v[k]);
            }
        }
        Rect { min, max }
    }

    /// Local mesh size at a point: diameter of the containing triangle, or of
    /// the nearest one when outside.
    pub fn local_size(&self, p: [T; 2]) -> T {
        let loc = self.locate(p);
        self.tri_diameter(loc.tri)
    }

    /// Writes the neutral ASCII dump (versioned, load-compatible).
    pub fn dump<W: Write>(&self, mut w: W) -> Result<(), MeshError> {
        writeln!(w, "fracta-mesh 1")?;
        let sized = self.size_field.is_some();
        writeln!(
            w,
            "vertices {} {}",
            self.n_vertices(),
            if sized { "sized" } else { "unsized" }
        )?;
        for (i, v) in self.vertices.iter().enumerate() {
            if let Some(s) = &self.size_field {
                writeln!(w, "{} {} {}", v[0], v[1], s[i])?;
            } else {
                writeln!(w, "{} {}", v[0], v[1])?;
            }
        }
        writeln!(w, "triangles {}", self.n_triangles())?;
        for (t, lab) in self.triangles.iter().zip(&self.tri_label) {
            let lab = match lab {
                Subdomain::Fluid => "fluid",
                Subdomain::Solid => "solid",
            };
            writeln!(w, "{} {} {} {}", t[0], t[1], t[2], lab)?;
        }
        writeln!(w, "facets {}", self.facets.len())?;
        for f in &self.facets {
            let lab = match f.label {
                FacetLabel::Outer => "outer",
                FacetLabel::Interface => "interface",
            };
            writeln!(w, "{} {} {}", f.vertices[0], f.vertices[1], lab)?;
        }
        Ok(())
    }

    /// Loads a mesh dump written by [`TriMesh::dump`]. Facet labels are
    /// re-derived and cross-checked against the file.
    pub fn load<R: BufRead>(r: R) -> Result<Self, MeshError> {
        let mut lines = r.lines().enumerate();
        let mut next = || -> Result<(usize, String), MeshError> {
            lines
                .next()
                .ok_or(MeshError::Parse {
                    line: 0,
                    msg: "unexpected end of file".into(),
                })
                .and_then(|(i, l)| Ok((i + 1, l?)))
        };
        let (ln, header) = next()?;
        if header.trim() != "fracta-mesh 1" {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("unknown header {header:?}"),
            });
        }
        let (ln, vh) = next()?;
        let parts: Vec<&str> = vh.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "vertices" {
            return Err(MeshError::Parse {
                line: ln,
                msg: "expected `vertices <n> sized|unsized`".into(),
            });
        }
        let nv: usize = parts[1].parse().map_err(|_| MeshError::Parse {
            line: ln,
            msg: "bad vertex count".into(),
        })?;
        let sized = parts[2] == "sized";
        let mut vertices = Vec::with_capacity(nv);
        let mut size_field = if sized { Some(Vec::with_capacity(nv)) } else { None };
        for _ in 0..nv {
            let (ln, l) = next()?;
            let nums: Vec<f64> = l
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| MeshError::Parse {
                    line: ln,
                    msg: e.to_string(),
                })?;
            if nums.len() != if sized { 3 } else { 2 } {
                return Err(MeshError::Parse {
                    line: ln,
                    msg: "bad vertex record".into(),
                });
            }
            vertices.push([T::of(nums[0]), T::of(nums[1])]);
            if let Some(s) = &mut size_field {
                s.push(T::of(nums[2]));
            }
        }
        let (ln, th) = next()?;
        let parts: Vec<&str> = th.split_whitespace().collect();
        if parts.len() != 2 || parts[0] != "triangles" {
            return Err(MeshError::Parse {
                line: ln,
                msg: "expected `triangles <n>`".into(),
            });
        }
        let nt: usize = parts[1].parse().map_err(|_| MeshError::Parse {
            line: ln,
            msg: "bad triangle count".into(),
        })?;
        let mut triangles = Vec::with_capacity(nt);
        let mut labels = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = next()?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(MeshError::Parse {
                    line: ln,
                    msg: "bad triangle record".into(),
                });
            }
            let idx: Vec<usize> = parts[..3]
                .iter()
                .map(|s| s.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| MeshError::Parse {
                    line: ln,
                    msg: e.to_string(),
                })?;
            triangles.push([idx[0], idx[1], idx[2]]);
            labels.push(match parts[3] {
                "fluid" => Subdomain::Fluid,
                "solid" => Subdomain::Solid,
                other => {
                    return Err(MeshError::Parse {
                        line: ln,
                        msg: format!("unknown label {other:?}"),
                    })
                }
            });
        }
        TriMesh::new(vertices, triangles, labels, size_field)
    }
}

fn signed_area<T: Real>(vertices: &[[T; 2]], t: [usize; 3]) -> T {
    let [a, b, c] = t.map(|v| vertices[v]);
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::of(0.5)
}
