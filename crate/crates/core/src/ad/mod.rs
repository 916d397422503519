//! The scalar contract and the forward-mode scalar types.
//!
//! Every primitive in this crate is generic over [`Scalar`]. Plain `f64`
//! (or `f32`) evaluates values, [`Dual6`] carries a six-slot first-order
//! payload and `Dual6<Dual6<f64>>` carries first- and second-order
//! payloads. Branch selection always looks at [`Scalar::value`], never at
//! the payload.

mod dual;

pub use dual::Dual6;

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Width of the derivative payload: the SE(3) tangent dimension.
pub const PAYLOAD: usize = 6;

/// Numeric type over which the Lie-group layer and the NLL gradient body
/// are written.
pub trait Scalar:
    nalgebra::Scalar
    + Copy
    + Send
    + Sync
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// Number of nested derivative levels carried by the type (0 for reals).
    const ORDER: usize;

    fn from_f64(v: f64) -> Self;

    /// The real (value) part, used for branch selection and domain checks.
    fn value(&self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan2(self, x: Self) -> Self;

    fn recip(self) -> Self {
        Self::one() / self
    }

    /// Multiply by a real constant without promoting it first.
    fn scale(self, k: f64) -> Self;

    /// True when the value and every payload slot are finite.
    fn all_finite(&self) -> bool;

    /// Evaluate `map` at `x`, pushing any derivative payload through the
    /// map's own partial derivatives instead of through its arithmetic.
    fn lift<F, const N: usize, const M: usize>(map: &F, x: &[Self; N]) -> Result<[Self; M]>
    where
        F: TangentMap<N, M>;
}

/// A vector-valued function with closed-form partial derivatives, both
/// evaluable in any scalar type.
///
/// [`Scalar::lift`] uses `partials` to propagate dual payloads, so a map
/// whose partials are written badly (for example with an unfused `0/0`
/// quotient) shows that defect only under dual evaluation.
pub trait TangentMap<const N: usize, const M: usize> {
    fn eval<S: Scalar>(&self, x: &[S; N]) -> Result<[S; M]>;

    /// `partials[n][j] = ∂ out_j / ∂ x_n`.
    fn partials<S: Scalar>(&self, x: &[S; N]) -> Result<[[S; M]; N]>;
}

macro_rules! impl_real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const ORDER: usize = 0;

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn value(&self) -> f64 {
                *self as f64
            }
            #[inline]
            fn sin(self) -> Self {
                <$t>::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn atan2(self, x: Self) -> Self {
                <$t>::atan2(self, x)
            }
            #[inline]
            fn scale(self, k: f64) -> Self {
                self * (k as $t)
            }
            #[inline]
            fn all_finite(&self) -> bool {
                self.is_finite()
            }
            fn lift<F, const N: usize, const M: usize>(map: &F, x: &[Self; N]) -> Result<[Self; M]>
            where
                F: TangentMap<N, M>,
            {
                map.eval(x)
            }
        }
    };
}

impl_real_scalar!(f64);
impl_real_scalar!(f32);

/// Elementary functions available on the regular branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Sin,
    Cos,
    Sqrt,
    Recip,
}

/// Checked elementary evaluation: rejects value parts outside the function's
/// smooth domain. The unchecked [`Scalar`] methods propagate NaN instead.
pub fn elementary<S: Scalar>(f: Elementary, x: S) -> Result<S> {
    let v = x.value();
    match f {
        Elementary::Sin => Ok(x.sin()),
        Elementary::Cos => Ok(x.cos()),
        Elementary::Sqrt if v > 0.0 => Ok(x.sqrt()),
        Elementary::Sqrt => Err(Error::Domain { what: "sqrt", value: v }),
        Elementary::Recip if v != 0.0 && v.is_finite() => Ok(x.recip()),
        Elementary::Recip => Err(Error::Domain { what: "recip", value: v }),
    }
}

/// Scalars that can be seeded as the six independent tangent directions.
pub trait Seed: Scalar {
    /// `x_m` with value zero and derivative slot `m` set to one at every
    /// nesting level.
    fn seed_identity() -> [Self; PAYLOAD];

    /// Seeds placed at the real point `at` instead of the origin.
    fn seed_at(at: &[f64; PAYLOAD]) -> [Self; PAYLOAD] {
        let mut out = Self::seed_identity();
        for (o, a) in out.iter_mut().zip(at) {
            *o += Self::from_f64(*a);
        }
        out
    }
}

impl Seed for f64 {
    fn seed_identity() -> [f64; PAYLOAD] {
        [0.0; PAYLOAD]
    }
}

impl<T: Seed> Seed for Dual6<T> {
    fn seed_identity() -> [Self; PAYLOAD] {
        let inner = T::seed_identity();
        std::array::from_fn(|m| {
            let mut grad = [T::zero(); PAYLOAD];
            grad[m] = T::one();
            Dual6 { val: inner[m], grad }
        })
    }
}

/// Seeded inputs for derivative order 1 (`Dual6`) or 2 (nested).
#[derive(Clone, Debug)]
pub enum Seeded {
    First([Dual6<f64>; PAYLOAD]),
    Second([Dual6<Dual6<f64>>; PAYLOAD]),
}

pub fn seed_identity(order: usize) -> Result<Seeded> {
    match order {
        1 => Ok(Seeded::First(Dual6::<f64>::seed_identity())),
        2 => Ok(Seeded::Second(Dual6::<Dual6<f64>>::seed_identity())),
        other => Err(Error::InvalidArgument(format!(
            "seed order must be 1 or 2, got {other}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type N2 = Dual6<Dual6<f64>>;

    #[test]
    fn first_order_seeds() {
        let Seeded::First(x) = seed_identity(1).unwrap() else {
            panic!("expected first-order seeds")
        };
        assert_eq!(x[0].val, 0.0);
        assert_eq!(x[0].grad, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut sum = [0.0; 6];
        for d in &x {
            for (s, g) in sum.iter_mut().zip(d.grad) {
                *s += g;
            }
        }
        assert_eq!(sum, [1.0; 6]);
    }

    #[test]
    fn second_order_seed_gives_mixed_partial() {
        let Seeded::Second(x) = seed_identity(2).unwrap() else {
            panic!("expected nested seeds")
        };
        let f = x[0] * x[1];
        for j in 0..6 {
            for k in 0..6 {
                let want = if (j, k) == (0, 1) || (j, k) == (1, 0) { 1.0 } else { 0.0 };
                assert_eq!(f.grad[j].grad[k], want, "slot ({j},{k})");
            }
        }
        assert!(seed_identity(3).is_err());
    }

    #[test]
    fn elementary_chain_rules() {
        let mut e0 = [0.0; 6];
        e0[0] = 1.0;
        let s = elementary(Elementary::Sin, Dual6 { val: 0.0, grad: e0 }).unwrap();
        assert_eq!(s.val, 0.0);
        assert_eq!(s.grad, e0);

        let mut e1 = [0.0; 6];
        e1[1] = 1.0;
        let r = elementary(Elementary::Sqrt, Dual6 { val: 4.0, grad: e1 }).unwrap();
        assert_eq!(r.val, 2.0);
        assert_eq!(r.grad[1], 0.25);

        assert!(elementary(Elementary::Sqrt, 0.0_f64).is_err());
        assert!(elementary(Elementary::Recip, Dual6::<f64>::constant(0.0)).is_err());
        assert_eq!(elementary(Elementary::Recip, 4.0_f64).unwrap(), 0.25);
    }

    #[test]
    fn nested_sin_second_derivative() {
        let x = N2::seed_at(&[0.7, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let y = x[0].sin();
        let want = -(0.7_f64).sin();
        assert!((y.grad[0].grad[0] - want).abs() < 1e-15);
        assert!((y.grad[0].val - 0.7_f64.cos()).abs() < 1e-15);
        assert_eq!(y.grad[1].grad[0], 0.0);
    }

    #[test]
    fn literal_plus_zero_is_identity() {
        let x = Dual6::<f64>::from_f64(2.5);
        assert_eq!(x + Dual6::zero(), x);
        assert_eq!(N2::from_f64(-1.25) + N2::zero(), N2::from_f64(-1.25));
    }

    #[test]
    fn f32_is_a_scalar() {
        let x: f32 = Scalar::from_f64(0.5);
        assert!((Scalar::sin(x) - 0.5f32.sin()).abs() < 1e-7);
        assert_eq!(<f32 as Scalar>::ORDER, 0);
        assert_eq!(<N2 as Scalar>::ORDER, 2);
    }
}
