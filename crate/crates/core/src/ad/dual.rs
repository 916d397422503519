use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use super::{Scalar, TangentMap, PAYLOAD};
use crate::error::Result;

/// Forward-mode dual number with a six-slot derivative payload.
///
/// `T` is itself a [`Scalar`], so `Dual6<Dual6<f64>>` is the nested dual:
/// `x.grad[j].grad[k]` holds the second partial in directions `j`, `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual6<T> {
    pub val: T,
    pub grad: [T; PAYLOAD],
}

impl<T: Scalar> Dual6<T> {
    pub fn new(val: T, grad: [T; PAYLOAD]) -> Self {
        Self { val, grad }
    }

    pub fn constant(val: T) -> Self {
        Self { val, grad: [T::zero(); PAYLOAD] }
    }

    /// `val + f'(val) * payload`, for an elementary function with value `fv`
    /// and derivative `dfv` at `val`.
    #[inline]
    fn chain(&self, fv: T, dfv: T) -> Self {
        Self { val: fv, grad: self.grad.map(|g| g * dfv) }
    }
}

impl<T: Scalar> Zero for Dual6<T> {
    fn zero() -> Self {
        Self::constant(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.val.is_zero() && self.grad.iter().all(Zero::is_zero)
    }
}

impl<T: Scalar> One for Dual6<T> {
    fn one() -> Self {
        Self::constant(T::one())
    }
}

impl<T: Scalar> Neg for Dual6<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self { val: -self.val, grad: self.grad.map(|g| -g) }
    }
}

impl<T: Scalar> Add for Dual6<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            val: self.val + rhs.val,
            grad: std::array::from_fn(|k| self.grad[k] + rhs.grad[k]),
        }
    }
}

impl<T: Scalar> Sub for Dual6<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            val: self.val - rhs.val,
            grad: std::array::from_fn(|k| self.grad[k] - rhs.grad[k]),
        }
    }
}

impl<T: Scalar> Mul for Dual6<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self {
            val: self.val * rhs.val,
            grad: std::array::from_fn(|k| self.val * rhs.grad[k] + rhs.val * self.grad[k]),
        }
    }
}

impl<T: Scalar> Div for Dual6<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.val;
        let val = self.val / rhs.val;
        Self {
            val,
            grad: std::array::from_fn(|k| (self.grad[k] - val * rhs.grad[k]) * inv),
        }
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl<T: Scalar> $tr for Dual6<T> {
            #[inline]
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    };
}

assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl<T: Scalar> Scalar for Dual6<T> {
    const ORDER: usize = T::ORDER + 1;

    #[inline]
    fn from_f64(v: f64) -> Self {
        Self::constant(T::from_f64(v))
    }

    #[inline]
    fn value(&self) -> f64 {
        self.val.value()
    }

    fn sin(self) -> Self {
        self.chain(self.val.sin(), self.val.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.val.cos(), -self.val.sin())
    }

    fn sqrt(self) -> Self {
        let r = self.val.sqrt();
        // d√x = dx / (2√x); at x = 0 this is 0/0 and stays NaN.
        let inv2r = (r + r).recip();
        self.chain(r, inv2r)
    }

    fn atan2(self, x: Self) -> Self {
        let (yv, xv) = (self.val, x.val);
        let inv = (xv * xv + yv * yv).recip();
        Self {
            val: yv.atan2(xv),
            grad: std::array::from_fn(|k| (xv * self.grad[k] - yv * x.grad[k]) * inv),
        }
    }

    fn recip(self) -> Self {
        let inv = self.val.recip();
        self.chain(inv, -(inv * inv))
    }

    #[inline]
    fn scale(self, k: f64) -> Self {
        Self { val: self.val.scale(k), grad: self.grad.map(|g| g.scale(k)) }
    }

    fn all_finite(&self) -> bool {
        self.val.all_finite() && self.grad.iter().all(Scalar::all_finite)
    }

    fn lift<F, const N: usize, const M: usize>(map: &F, x: &[Self; N]) -> Result<[Self; M]>
    where
        F: TangentMap<N, M>,
    {
        let vals: [T; N] = x.map(|d| d.val);
        let value = T::lift(map, &vals)?;
        let partials = map.partials::<T>(&vals)?;
        Ok(std::array::from_fn(|j| {
            let grad = std::array::from_fn(|k| {
                let mut acc = T::zero();
                for n in 0..N {
                    acc += partials[n][j] * x[n].grad[k];
                }
                acc
            });
            Dual6 { val: value[j], grad }
        }))
    }
}
