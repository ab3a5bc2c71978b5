//! Continuous Lagrange finite-element spaces and discrete fields.

use super::basis::{cell_geom, eval_basis};
use crate::mesh::{FacetLabel, Subdomain, TriMesh};
use crate::scalar::Real;
use std::sync::Arc;

/// Scalar or vector continuous Lagrange space of degree 1 or 2.
///
/// Degrees of freedom sit at mesh vertices (degree 1) plus edge midpoints
/// (degree 2); vector components are interleaved per node.
#[derive(Clone)]
pub struct FESpace<T> {
    pub mesh: Arc<TriMesh<T>>,
    pub degree: usize,
    pub components: usize,
}

impl<T: Real> FESpace<T> {
    pub fn new(mesh: Arc<TriMesh<T>>, degree: usize, components: usize) -> Self {
        assert!(matches!(degree, 1 | 2), "degree must be 1 or 2");
        assert!(matches!(components, 1 | 2), "components must be 1 or 2");
        FESpace {
            mesh,
            degree,
            components,
        }
    }

    /// Number of nodal points (vertices, plus edge midpoints for degree 2).
    pub fn n_points(&self) -> usize {
        self.mesh.n_vertices()
            + if self.degree == 2 {
                self.mesh.edges.len()
            } else {
                0
            }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_points() * self.components
    }

    pub fn dof(&self, point: usize, comp: usize) -> usize {
        point * self.components + comp
    }

    /// Nodal points of a cell in local basis order.
    pub fn cell_points(&self, t: usize) -> ([usize; 6], usize) {
        let tri = self.mesh.triangles[t];
        let mut out = [0usize; 6];
        out[..3].copy_from_slice(&tri);
        if self.degree == 1 {
            return (out, 3);
        }
        let nv = self.mesh.n_vertices();
        let te = self.mesh.tri_edges[t];
        // midpoints of edges (0,1), (1,2), (2,0); tri_edges[k] is opposite k
        out[3] = nv + te[2];
        out[4] = nv + te[0];
        out[5] = nv + te[1];
        (out, 6)
    }

    pub fn point_coord(&self, point: usize) -> [T; 2] {
        let nv = self.mesh.n_vertices();
        if point < nv {
            self.mesh.vertices[point]
        } else {
            let [a, b] = self.mesh.edges[point - nv];
            let (pa, pb) = (self.mesh.vertices[a], self.mesh.vertices[b]);
            let half = T::of(0.5);
            [(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]
        }
    }

    fn edge_index(&self, a: usize, b: usize) -> usize {
        let key = [a.min(b), a.max(b)];
        self.mesh.edges.binary_search(&key).expect("mesh edge")
    }

    /// Nodal points on facets with the given label, sorted and deduplicated.
    pub fn points_on(&self, label: FacetLabel) -> Vec<usize> {
        let nv = self.mesh.n_vertices();
        let mut pts = Vec::new();
        for f in self.mesh.facets.iter().filter(|f| f.label == label) {
            pts.push(f.vertices[0]);
            pts.push(f.vertices[1]);
            if self.degree == 2 {
                pts.push(nv + self.edge_index(f.vertices[0], f.vertices[1]));
            }
        }
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    /// Nodal points touched by any triangle of the given subdomain.
    pub fn points_in(&self, label: Subdomain) -> Vec<usize> {
        let mut pts = Vec::new();
        for t in 0..self.mesh.n_triangles() {
            if self.mesh.tri_label[t] == label {
                let (cp, n) = self.cell_points(t);
                pts.extend_from_slice(&cp[..n]);
            }
        }
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    /// All dofs of the listed points, with the given constant values per
    /// component (convenience for Dirichlet sets).
    pub fn dirichlet(&self, points: &[usize], values: &[T]) -> Vec<(usize, T)> {
        assert_eq!(values.len(), self.components);
        points
            .iter()
            .flat_map(|&p| (0..self.components).map(move |c| (self.dof(p, c), values[c])))
            .collect()
    }

    pub fn zero_field(self: &FESpace<T>) -> Field<T> {
        Field {
            space: self.clone(),
            coeffs: vec![T::zero(); self.n_dofs()],
        }
    }

    /// Nodal interpolation of a coordinate function.
    pub fn interpolate_fn(&self, f: impl Fn([T; 2]) -> [T; 2]) -> Field<T> {
        let mut field = self.zero_field();
        for p in 0..self.n_points() {
            let v = f(self.point_coord(p));
            for c in 0..self.components {
                field.coeffs[self.dof(p, c)] = v[c];
            }
        }
        field
    }
}

/// Discrete function: coefficients over a space.
#[derive(Clone)]
pub struct Field<T> {
    pub space: FESpace<T>,
    pub coeffs: Vec<T>,
}

impl<T: Real> Field<T> {
    /// Point evaluation. The second return is `false` when the point lies
    /// outside the mesh and the value is a nearest-element extrapolation.
    pub fn eval(&self, p: [T; 2]) -> ([T; 2], bool) {
        let loc = self.space.mesh.locate(p);
        let geom = cell_geom(&self.space.mesh, loc.tri);
        let basis = eval_basis(self.space.degree, loc.bary, &geom);
        let (cp, n) = self.space.cell_points(loc.tri);
        let mut out = [T::zero(); 2];
        for i in 0..n {
            for c in 0..self.space.components {
                out[c] += self.coeffs[self.space.dof(cp[i], c)] * basis.val[i];
            }
        }
        (out, loc.inside)
    }

    /// Gradient evaluation; `out[c]` is the gradient of component `c`.
    pub fn eval_grad(&self, p: [T; 2]) -> ([[T; 2]; 2], bool) {
        let loc = self.space.mesh.locate(p);
        let geom = cell_geom(&self.space.mesh, loc.tri);
        let basis = eval_basis(self.space.degree, loc.bary, &geom);
        let (cp, n) = self.space.cell_points(loc.tri);
        let mut out = [[T::zero(); 2]; 2];
        for i in 0..n {
            for c in 0..self.space.components {
                let coeff = self.coeffs[self.space.dof(cp[i], c)];
                out[c][0] += coeff * basis.grad[i][0];
                out[c][1] += coeff * basis.grad[i][1];
            }
        }
        (out, loc.inside)
    }
}

/// Nodal interpolation of `source` onto `target` (possibly on a different
/// mesh). Returns the field and the number of target nodes that fell outside
/// the source mesh (filled by extrapolation).
pub fn interpolate<T: Real>(source: &Field<T>, target: &FESpace<T>) -> (Field<T>, usize) {
    assert_eq!(source.space.components, target.components);
    let mut field = target.zero_field();
    let mut outside = 0usize;
    for p in 0..target.n_points() {
        let (v, inside) = source.eval(target.point_coord(p));
        if !inside {
            outside += 1;
        }
        for c in 0..target.components {
            field.coeffs[target.dof(p, c)] = v[c];
        }
    }
    (field, outside)
}
