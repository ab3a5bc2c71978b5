//! Newton driver with backtracking line search and an admissibility hook.

use super::{solve_linear, FemError, LinearSystem};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions<T> {
    /// Relative tolerance against max(1, initial residual norm).
    pub tol: T,
    pub max_iter: usize,
    pub max_backtracks: usize,
    /// Accept full (undamped) steps without requiring residual decrease.
    /// Semismooth systems with switching active sets need this; monotone
    /// backtracking can stall them while plain steps terminate finitely.
    pub full_steps: bool,
    /// Accept a stagnated iteration: when the best residual has not improved
    /// over this many consecutive steps and lies below `stagnation_tol`
    /// (relative, like `tol`), return the best iterate. 0 disables. Large
    /// penalty factors put a floor under the achievable residual of
    /// semismooth systems; cycling below that floor is not a failure.
    pub stagnation_window: usize,
    pub stagnation_tol: T,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        NewtonOptions {
            tol: T::of(1e-9),
            max_iter: 30,
            max_backtracks: 10,
            full_steps: false,
            stagnation_window: 0,
            stagnation_tol: T::of(1e-4),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct NewtonHistory {
    pub residual_norms: Vec<f64>,
}

/// Solves `residual(state) = 0` in place. `system` must return the residual
/// (in `rhs`) and its exact Jacobian at the given state; `admissible` rejects
/// trial states (for example mesh entanglement with `det F ≤ 0`).
pub fn newton_solve<T: Real>(
    state: &mut [T],
    mut system: impl FnMut(&[T]) -> Result<LinearSystem<T>, FemError>,
    mut admissible: impl FnMut(&[T]) -> bool,
    opts: NewtonOptions<T>,
) -> Result<NewtonHistory, FemError> {
    let mut history = NewtonHistory::default();
    let mut sys = system(state)?;
    let mut norm = sys.residual_norm();
    let target = opts.tol * T::one().max(norm);
    let stagnation_target = opts.stagnation_tol * T::one().max(norm);
    history.residual_norms.push(norm.as_f64());
    let mut best = norm;
    let mut best_state = state.to_vec();
    let mut stalled = 0usize;

    for _ in 0..opts.max_iter {
        if norm <= target {
            return Ok(history);
        }
        if opts.stagnation_window > 0 && stalled >= opts.stagnation_window && best <= stagnation_target
        {
            state.copy_from_slice(&best_state);
            return Ok(history);
        }
        let delta = solve_linear(&sys)?;
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<T> = state
                .iter()
                .zip(&delta)
                .map(|(x, d)| *x - alpha * *d)
                .collect();
            if admissible(&trial) {
                let trial_sys = system(&trial)?;
                let trial_norm = trial_sys.residual_norm();
                if opts.full_steps || trial_norm < norm || trial_norm <= target {
                    state.copy_from_slice(&trial);
                    sys = trial_sys;
                    norm = trial_norm;
                    history.residual_norms.push(norm.as_f64());
                    if norm < best * T::of(0.9) {
                        best = norm;
                        best_state.copy_from_slice(state);
                        stalled = 0;
                    } else {
                        stalled += 1;
                    }
                    accepted = true;
                    break;
                }
            }
            alpha = alpha * T::of(0.5);
        }
        if !accepted {
            return Err(FemError::LineSearchFailure { history });
        }
    }
    if norm <= target {
        Ok(history)
    } else if opts.stagnation_window > 0 && best <= stagnation_target {
        state.copy_from_slice(&best_state);
        Ok(history)
    } else {
        Err(FemError::NoConvergence { history })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_system(
        f: impl Fn(f64) -> (f64, f64),
    ) -> impl FnMut(&[f64]) -> Result<LinearSystem<f64>, FemError> {
        move |x: &[f64]| {
            let (r, j) = f(x[0]);
            Ok(LinearSystem {
                n: 1,
                triplets: vec![(0, 0, j)],
                rhs: vec![r],
            })
        }
    }

    #[test]
    fn linear_problem_converges_in_one_iteration() {
        let mut x = vec![10.0];
        let hist = newton_solve(
            &mut x,
            scalar_system(|x| (2.0 * x - 3.0, 2.0)),
            |_| true,
            NewtonOptions::default(),
        )
        .unwrap();
        assert!((x[0] - 1.5).abs() < 1e-12);
        assert_eq!(hist.residual_norms.len(), 2);
    }

    #[test]
    fn sqrt_of_four_with_quadratic_history() {
        let mut x = vec![3.0];
        let hist = newton_solve(
            &mut x,
            scalar_system(|x| (x * x - 4.0, 2.0 * x)),
            |_| true,
            NewtonOptions {
                tol: 1e-13,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        // error roughly squares every step once in the basin
        let r = &hist.residual_norms;
        for k in 1..r.len() - 1 {
            if r[k] < 1e-1 && r[k + 1] > 1e-14 {
                assert!(r[k + 1] <= 2.0 * r[k] * r[k], "history {r:?}");
            }
        }
    }

    #[test]
    fn inadmissible_region_is_avoided() {
        // root at x = 2; full steps from x = 0.5 would jump below zero
        let mut x = vec![0.5];
        newton_solve(
            &mut x,
            scalar_system(|x| (x * x - 4.0, 2.0 * x)),
            |x| x[0] > 0.0,
            NewtonOptions::default(),
        )
        .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn divergence_reports_history() {
        let mut x = vec![1.0];
        // residual 1 everywhere with flat slope: no progress possible
        let err = newton_solve(
            &mut x,
            scalar_system(|_| (1.0, 1.0)),
            |_| true,
            NewtonOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, FemError::LineSearchFailure { .. }));
    }
}
