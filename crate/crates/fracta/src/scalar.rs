//! Scalar abstraction and forward-mode dual numbers.
//!
//! All element kernels are written against [`Ad`], so the same code path
//! evaluates residuals (with a plain float) and exact Jacobians (with
//! [`Dual`] seeded per local degree of freedom).

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Floating point scalar the toolkit is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from `f64` literals.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar usable inside element kernels: either `T` itself or a dual number
/// carrying derivatives with respect to the local dofs.
pub trait Ad<T: Real>:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<T, Output = Self>
    + Sub<T, Output = Self>
    + Mul<T, Output = Self>
    + Div<T, Output = Self>
    + AddAssign
    + SubAssign
{
    fn constant(v: T) -> Self;
    fn re(&self) -> T;

    fn zero() -> Self {
        Self::constant(T::zero())
    }

    fn one() -> Self {
        Self::constant(T::one())
    }

    /// Positive part `max(x, 0)`. The derivative is taken from the active
    /// branch at the kink (one for `re >= 0`, zero below), which keeps
    /// semismooth Newton steps feasible when starting on the constraint.
    fn plus(self) -> Self;
}

impl<T: Real> Ad<T> for T {
    fn constant(v: T) -> Self {
        v
    }

    fn re(&self) -> T {
        *self
    }

    fn plus(self) -> Self {
        if self > T::zero() {
            self
        } else {
            T::zero()
        }
    }
}

/// Forward-mode dual number with `N` derivative slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T, const N: usize> {
    pub re: T,
    pub eps: [T; N],
}

impl<T: Real, const N: usize> Dual<T, N> {
    pub fn new(re: T) -> Self {
        Dual {
            re,
            eps: [T::zero(); N],
        }
    }

    /// Independent variable seeded in derivative slot `i`.
    pub fn variable(re: T, i: usize) -> Self {
        let mut d = Self::new(re);
        d.eps[i] = T::one();
        d
    }
}

impl<T: Real, const N: usize> PartialOrd for Dual<T, N> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<T: Real, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.re += rhs.re;
        for k in 0..N {
            self.eps[k] += rhs.eps[k];
        }
        self
    }
}

impl<T: Real, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.re -= rhs.re;
        for k in 0..N {
            self.eps[k] -= rhs.eps[k];
        }
        self
    }
}

impl<T: Real, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::new(self.re * rhs.re);
        for k in 0..N {
            out.eps[k] = self.eps[k] * rhs.re + self.re * rhs.eps[k];
        }
        out
    }
}

impl<T: Real, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        let mut out = Self::new(self.re * inv);
        for k in 0..N {
            out.eps[k] = (self.eps[k] - out.re * rhs.eps[k]) * inv;
        }
        out
    }
}

impl<T: Real, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.re = -self.re;
        for k in 0..N {
            self.eps[k] = -self.eps[k];
        }
        self
    }
}

impl<T: Real, const N: usize> Add<T> for Dual<T, N> {
    type Output = Self;
    fn add(mut self, rhs: T) -> Self {
        self.re += rhs;
        self
    }
}

impl<T: Real, const N: usize> Sub<T> for Dual<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: T) -> Self {
        self.re -= rhs;
        self
    }
}

impl<T: Real, const N: usize> Mul<T> for Dual<T, N> {
    type Output = Self;
    fn mul(mut self, rhs: T) -> Self {
        self.re *= rhs;
        for k in 0..N {
            self.eps[k] *= rhs;
        }
        self
    }
}

impl<T: Real, const N: usize> Div<T> for Dual<T, N> {
    type Output = Self;
    fn div(mut self, rhs: T) -> Self {
        let inv = T::one() / rhs;
        self.re *= inv;
        for k in 0..N {
            self.eps[k] *= inv;
        }
        self
    }
}

impl<T: Real, const N: usize> AddAssign for Dual<T, N> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real, const N: usize> SubAssign for Dual<T, N> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<T: Real, const N: usize> Ad<T> for Dual<T, N> {
    fn constant(v: T) -> Self {
        Self::new(v)
    }

    fn re(&self) -> T {
        self.re
    }

    fn plus(self) -> Self {
        if self.re > T::zero() {
            self
        } else if self.re == T::zero() {
            Self { re: T::zero(), eps: self.eps }
        } else {
            Self::zero()
        }
    }
}
