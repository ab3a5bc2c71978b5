//! Sparse direct solve behind an `f64` seam (faer's sparse LU).

use super::{FemError, LinearSystem};
use crate::scalar::Real;
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

/// Solves `A x = rhs` with sparse LU and verifies the relative residual
/// `‖Ax − b‖ / ‖b‖ ≤ 1e−10` (absolute when `b = 0`).
pub fn solve_linear<T: Real>(sys: &LinearSystem<T>) -> Result<Vec<T>, FemError> {
    let n = sys.n;
    let triplets: Vec<Triplet<usize, usize, f64>> = sys
        .triplets
        .iter()
        .map(|(i, j, v)| Triplet::new(*i, *j, v.as_f64()))
        .collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| FemError::Solver(format!("matrix creation: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|_| FemError::Singular { dof: empty_row(sys) })?;
    let b = faer::Mat::from_fn(n, 1, |i, _| sys.rhs[i].as_f64());
    let x = lu.solve(&b);
    if (0..n).any(|i| !x[(i, 0)].is_finite()) {
        return Err(FemError::Singular { dof: empty_row(sys) });
    }

    let mut residual = vec![0.0f64; n];
    for (i, r) in residual.iter_mut().enumerate() {
        *r = -sys.rhs[i].as_f64();
    }
    for t in &triplets {
        residual[t.row] += t.val * x[(t.col, 0)];
    }
    let rnorm = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
    let bnorm = sys
        .rhs
        .iter()
        .map(|r| r.as_f64().powi(2))
        .sum::<f64>()
        .sqrt();
    if rnorm > 1e-10 * bnorm.max(1e-300) && rnorm > 1e-12 {
        return Err(FemError::Solver(format!(
            "direct solve residual {rnorm:.3e} exceeds 1e-10 relative ({bnorm:.3e})"
        )));
    }
    Ok((0..n).map(|i| T::of(x[(i, 0)])).collect())
}

/// Best-effort diagnosis of a singular system: first structurally empty row,
/// or the first row whose entries are all zero.
fn empty_row<T: Real>(sys: &LinearSystem<T>) -> usize {
    let mut has = vec![false; sys.n];
    for (i, _, v) in &sys.triplets {
        if *v != T::zero() {
            has[*i] = true;
        }
    }
    has.iter().position(|h| !h).unwrap_or(0)
}
