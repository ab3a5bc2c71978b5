//! Linear-elastic material parameters.

use super::FemError;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticParams<T> {
    pub e_mod: T,
    pub nu_s: T,
    pub mu: T,
    pub lambda: T,
    pub k_dr: T,
}

/// Plane-strain Lamé parameters and drained bulk modulus from (E, ν).
pub fn lame_from_e_nu<T: Real>(e_mod: T, nu_s: T) -> Result<ElasticParams<T>, FemError> {
    if !(e_mod > T::zero()) {
        return Err(FemError::InvalidParameter("E must be positive".into()));
    }
    if !(nu_s > T::of(-1.0) && nu_s < T::of(0.5)) {
        return Err(FemError::InvalidParameter(
            "nu_s must lie in (-1, 0.5); the incompressible limit is rejected".into(),
        ));
    }
    let one = T::one();
    let mu = e_mod / ((one + nu_s) * T::of(2.0));
    let lambda = nu_s * e_mod / ((one + nu_s) * (one - nu_s - nu_s));
    let k_dr = T::of(2.0 / 3.0) * mu + lambda;
    Ok(ElasticParams {
        e_mod,
        nu_s,
        mu,
        lambda,
        k_dr,
    })
}
