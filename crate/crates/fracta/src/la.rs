//! Minimal 2D vector/matrix helpers shared by the element kernels.
//!
//! Everything is generic over [`Ad`] so the same expressions run on plain
//! floats and on dual numbers.

use crate::scalar::{Ad, Real};

pub type V2<S> = [S; 2];
pub type M2<S> = [[S; 2]; 2];

pub fn v2_zero<T: Real, S: Ad<T>>() -> V2<S> {
    [S::zero(), S::zero()]
}

pub fn m2_zero<T: Real, S: Ad<T>>() -> M2<S> {
    [[S::zero(), S::zero()], [S::zero(), S::zero()]]
}

pub fn m2_identity<T: Real, S: Ad<T>>() -> M2<S> {
    [[S::one(), S::zero()], [S::zero(), S::one()]]
}

pub fn v2_add<T: Real, S: Ad<T>>(a: V2<S>, b: V2<S>) -> V2<S> {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn v2_scale<T: Real, S: Ad<T>>(a: V2<S>, s: S) -> V2<S> {
    [a[0] * s, a[1] * s]
}

pub fn v2_dot<T: Real, S: Ad<T>>(a: V2<S>, b: V2<S>) -> S {
    a[0] * b[0] + a[1] * b[1]
}

pub fn m2_add<T: Real, S: Ad<T>>(a: M2<S>, b: M2<S>) -> M2<S> {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

pub fn m2_scale<T: Real, S: Ad<T>>(a: M2<S>, s: S) -> M2<S> {
    [
        [a[0][0] * s, a[0][1] * s],
        [a[1][0] * s, a[1][1] * s],
    ]
}

pub fn m2_mul<T: Real, S: Ad<T>>(a: M2<S>, b: M2<S>) -> M2<S> {
    let mut out = m2_zero::<T, S>();
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn m2_vec<T: Real, S: Ad<T>>(a: M2<S>, v: V2<S>) -> V2<S> {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

pub fn m2_transpose<T: Real, S: Ad<T>>(a: M2<S>) -> M2<S> {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn m2_det<T: Real, S: Ad<T>>(a: M2<S>) -> S {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn m2_inv<T: Real, S: Ad<T>>(a: M2<S>) -> M2<S> {
    let det = m2_det::<T, S>(a);
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

pub fn m2_trace<T: Real, S: Ad<T>>(a: M2<S>) -> S {
    a[0][0] + a[1][1]
}

/// Frobenius inner product `a : b`.
pub fn m2_ddot<T: Real, S: Ad<T>>(a: M2<S>, b: M2<S>) -> S {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Symmetric part `(a + a^T) / 2`.
pub fn m2_sym<T: Real, S: Ad<T>>(a: M2<S>) -> M2<S> {
    let half = T::of(0.5);
    [
        [a[0][0], (a[0][1] + a[1][0]) * half],
        [(a[0][1] + a[1][0]) * half, a[1][1]],
    ]
}
