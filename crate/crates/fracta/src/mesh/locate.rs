//! Point location on a [`TriMesh`] via a uniform bin grid.

use super::TriMesh;
use crate::scalar::Real;

/// Result of a point query. For points outside the mesh the nearest triangle
/// is returned with `inside = false`; its (unclamped) barycentric coordinates
/// extend fields linearly outside the element.
#[derive(Clone, Copy, Debug)]
pub struct Location<T> {
    pub tri: usize,
    pub bary: [T; 3],
    pub inside: bool,
}

pub(crate) struct Locator<T> {
    min: [T; 2],
    cell: T,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<u32>>,
}

impl<T: Real> Locator<T> {
    pub(crate) fn build(mesh: &TriMesh<T>) -> Self {
        let bb = mesh.bounding_box();
        let nt = mesh.n_triangles().max(1);
        let cell = (mesh.total_area().abs() / T::of(nt as f64))
            .sqrt()
            .max(T::of(1e-12))
            * T::of(2.0);
        let nx = ((bb.width() / cell).as_f64().ceil() as usize + 1).max(1);
        let ny = ((bb.height() / cell).as_f64().ceil() as usize + 1).max(1);
        let mut bins = vec![Vec::new(); nx * ny];
        for (ti, t) in mesh.triangles.iter().enumerate() {
            let ps = t.map(|v| mesh.vertices[v]);
            let (mut lo, mut hi) = (ps[0], ps[0]);
            for p in &ps[1..] {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let ix0 = grid_index(lo[0] - bb.min[0], cell, nx);
            let ix1 = grid_index(hi[0] - bb.min[0], cell, nx);
            let iy0 = grid_index(lo[1] - bb.min[1], cell, ny);
            let iy1 = grid_index(hi[1] - bb.min[1], cell, ny);
            for ix in ix0..=ix1 {
                for iy in iy0..=iy1 {
                    bins[iy * nx + ix].push(ti as u32);
                }
            }
        }
        Locator {
            min: bb.min,
            cell,
            nx,
            ny,
            bins,
        }
    }
}

fn grid_index<T: Real>(offset: T, cell: T, n: usize) -> usize {
    let i = (offset / cell).as_f64().floor();
    (i.max(0.0) as usize).min(n - 1)
}

fn barycentric<T: Real>(p: [T; 2], a: [T; 2], b: [T; 2], c: [T; 2]) -> [T; 3] {
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [T::one() - l1 - l2, l1, l2]
}

impl<T: Real> TriMesh<T> {
    /// Finds the triangle containing `p`, or the nearest one if `p` lies
    /// outside the mesh.
    pub fn locate(&self, p: [T; 2]) -> Location<T> {
        let loc = self.locator.get_or_init(|| Locator::build(self));
        let tol = T::of(1e-10);
        let test = |ti: usize| -> [T; 3] {
            let [a, b, c] = self.triangles[ti].map(|v| self.vertices[v]);
            barycentric(p, a, b, c)
        };

        let ix = grid_index(p[0] - loc.min[0], loc.cell, loc.nx);
        let iy = grid_index(p[1] - loc.min[1], loc.cell, loc.ny);
        let mut best_tri = 0usize;
        let mut best_score = T::neg_infinity();
        let mut best_bary = [T::zero(); 3];
        for &ti in &loc.bins[iy * loc.nx + ix] {
            let bary = test(ti as usize);
            let score = bary[0].min(bary[1]).min(bary[2]);
            if score > best_score {
                best_score = score;
                best_tri = ti as usize;
                best_bary = bary;
            }
            if score >= -tol {
                return Location {
                    tri: ti as usize,
                    bary,
                    inside: true,
                };
            }
        }

        // outside (or in an empty bin): fall back to a full scan, ranking by
        // the least barycentric coordinate relative to the triangle size
        for ti in 0..self.n_triangles() {
            let bary = test(ti);
            let score = bary[0].min(bary[1]).min(bary[2]);
            if score > best_score {
                best_score = score;
                best_tri = ti;
                best_bary = bary;
                if score >= -tol {
                    return Location {
                        tri: ti,
                        bary,
                        inside: true,
                    };
                }
            }
        }
        Location {
            tri: best_tri,
            bary: best_bary,
            inside: best_score >= -tol,
        }
    }
}
