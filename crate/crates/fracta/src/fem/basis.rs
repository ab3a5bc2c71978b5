//! Lagrange basis evaluation on triangles (P1 and P2).
//!
//! Local node order: the three vertices, then (for P2) the midpoints of the
//! edges (0,1), (1,2), (2,0).

use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Affine geometry of one triangle: vertex coordinates, physical gradients of
/// the barycentric coordinates, and the (positive) area.
#[derive(Clone, Copy, Debug)]
pub struct CellGeom<T> {
    pub verts: [[T; 2]; 3],
    pub grad_l: [[T; 2]; 3],
    pub area: T,
}

pub fn cell_geom<T: Real>(mesh: &TriMesh<T>, t: usize) -> CellGeom<T> {
    let verts = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let [a, b, c] = verts;
    let two_a = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let grad = |p: [T; 2], q: [T; 2]| [(p[1] - q[1]) / two_a, (q[0] - p[0]) / two_a];
    CellGeom {
        verts,
        grad_l: [grad(b, c), grad(c, a), grad(a, b)],
        area: two_a * T::of(0.5),
    }
}

impl<T: Real> CellGeom<T> {
    pub fn point(&self, l: [T; 3]) -> [T; 2] {
        let [a, b, c] = self.verts;
        [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ]
    }
}

/// Basis values and physical gradients at one quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct CellBasis<T> {
    pub n: usize,
    pub val: [T; 6],
    pub grad: [[T; 2]; 6],
}

pub fn eval_basis<T: Real>(degree: usize, l: [T; 3], geom: &CellGeom<T>) -> CellBasis<T> {
    let gl = &geom.grad_l;
    let mut val = [T::zero(); 6];
    let mut grad = [[T::zero(); 2]; 6];
    match degree {
        1 => {
            for i in 0..3 {
                val[i] = l[i];
                grad[i] = gl[i];
            }
            CellBasis { n: 3, val, grad }
        }
        2 => {
            let four = T::of(4.0);
            for i in 0..3 {
                val[i] = l[i] * (l[i] + l[i] - T::one());
                for k in 0..2 {
                    grad[i][k] = (four * l[i] - T::one()) * gl[i][k];
                }
            }
            // midpoints of edges (0,1), (1,2), (2,0)
            for (m, (i, j)) in [(3, (0, 1)), (4, (1, 2)), (5, (2, 0))] {
                val[m] = four * l[i] * l[j];
                for k in 0..2 {
                    grad[m][k] = four * (l[i] * gl[j][k] + l[j] * gl[i][k]);
                }
            }
            CellBasis { n: 6, val, grad }
        }
        d => panic!("unsupported degree {d}"),
    }
}
