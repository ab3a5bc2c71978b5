//! Residual/Jacobian assembly from element kernels.
//!
//! A kernel is written once, generic over the [`Ad`] scalar; assembly seeds
//! forward-mode duals per local dof, so the matrix is the exact Jacobian of
//! the residual. Cell loops run in parallel with a fixed accumulation order,
//! making the result bitwise reproducible.

use super::FemError;
use crate::scalar::{Ad, Dual, Real};
use rayon::prelude::*;

/// Element-wise description of a nonlinear system: local dof maps plus a
/// residual kernel over cells and (optionally) tagged facets.
pub trait ElementSystem<T: Real>: Sync {
    fn n_dofs(&self) -> usize;
    fn n_cells(&self) -> usize;
    fn cell_dofs(&self, cell: usize, out: &mut Vec<usize>);
    fn cell_residual<S: Ad<T>>(&self, cell: usize, vals: &[S], out: &mut [S]);

    fn n_facets(&self) -> usize {
        0
    }
    fn facet_dofs(&self, _facet: usize, _out: &mut Vec<usize>) {}
    fn facet_residual<S: Ad<T>>(&self, _facet: usize, _vals: &[S], _out: &mut [S]) {}
}

/// Square sparse system in triplet form; `rhs` holds the residual.
pub struct LinearSystem<T> {
    pub n: usize,
    pub triplets: Vec<(usize, usize, T)>,
    pub rhs: Vec<T>,
}

impl<T: Real> LinearSystem<T> {
    pub fn residual_norm(&self) -> T {
        self.rhs.iter().map(|r| *r * *r).sum::<T>().sqrt()
    }

    /// Row/column elimination for the update form of Dirichlet conditions:
    /// the solution of the system is an increment that must vanish on the
    /// constrained dofs (values are imposed on the state before assembly).
    pub fn constrain(&mut self, dofs: impl IntoIterator<Item = usize>) {
        let mut fixed = vec![false; self.n];
        for d in dofs {
            fixed[d] = true;
        }
        self.triplets
            .retain(|(i, j, _)| !fixed[*i] && !fixed[*j]);
        for (d, f) in fixed.iter().enumerate() {
            if *f {
                self.triplets.push((d, d, T::one()));
                self.rhs[d] = T::zero();
            }
        }
    }
}

/// Assembles residual and exact Jacobian of `sys` at `state`. `N` is the
/// compile-time bound on local dofs per cell or facet.
pub fn assemble<T: Real, const N: usize>(
    sys: &(impl ElementSystem<T> + ?Sized),
    state: &[T],
) -> Result<LinearSystem<T>, FemError> {
    assert_eq!(state.len(), sys.n_dofs());
    let n_cells = sys.n_cells();
    let chunk = (n_cells / (8 * rayon::current_num_threads().max(1))).clamp(16, 4096);

    type Chunk<T> = (Vec<(usize, usize, T)>, Vec<(usize, T)>);
    let assemble_range = |range: std::ops::Range<usize>,
                          facet: bool|
     -> Result<Chunk<T>, FemError> {
        let mut dofs = Vec::with_capacity(N);
        let mut triplets = Vec::new();
        let mut res = Vec::new();
        let mut vals = [Dual::<T, N>::new(T::zero()); N];
        let mut out = [Dual::<T, N>::new(T::zero()); N];
        for e in range {
            dofs.clear();
            if facet {
                sys.facet_dofs(e, &mut dofs);
            } else {
                sys.cell_dofs(e, &mut dofs);
            }
            let n = dofs.len();
            assert!(n <= N, "element has {n} dofs, bound is {N}");
            for (i, &d) in dofs.iter().enumerate() {
                vals[i] = Dual::variable(state[d], i);
            }
            for o in out[..n].iter_mut() {
                *o = Dual::new(T::zero());
            }
            if facet {
                sys.facet_residual(e, &vals[..n], &mut out[..n]);
            } else {
                sys.cell_residual(e, &vals[..n], &mut out[..n]);
            }
            for (i, &di) in dofs.iter().enumerate() {
                if !out[i].re.is_finite() {
                    return Err(FemError::NanInIntegrand {
                        element: e,
                        facet,
                    });
                }
                res.push((di, out[i].re));
                for (j, &dj) in dofs.iter().enumerate() {
                    let v = out[i].eps[j];
                    if v != T::zero() {
                        triplets.push((di, dj, v));
                    }
                }
            }
        }
        Ok((triplets, res))
    };

    let starts: Vec<usize> = (0..n_cells).step_by(chunk).collect();
    let chunks: Result<Vec<Chunk<T>>, FemError> = starts
        .par_iter()
        .map(|&s| assemble_range(s..(s + chunk).min(n_cells), false))
        .collect();
    let mut chunks = chunks?;
    chunks.push(assemble_range(0..sys.n_facets(), true)?);

    let mut sys_out = LinearSystem {
        n: sys.n_dofs(),
        triplets: Vec::new(),
        rhs: vec![T::zero(); sys.n_dofs()],
    };
    for (triplets, res) in chunks {
        sys_out.triplets.extend(triplets);
        for (d, v) in res {
            sys_out.rhs[d] += v;
        }
    }
    Ok(sys_out)
}
