//! The s-native scalar basis shared by the SO(3) and SE(3) closed forms.
//!
//! With `θ = |ω|` and `s = θ² = ω·ω`:
//!
//! ```text
//! A = sin θ / θ        B = (1 - cos θ) / θ²      C = (θ - sin θ) / θ³
//! D = (1 - (θ/2) cot(θ/2)) / θ²
//! D̃ = 2 dD/ds          β̄ = (C / (2B) - 2D) / s   β̄_s = dβ̄/ds
//! ```
//!
//! `D̃` and `β̄` are the same function; they are computed by different
//! closed forms so the identity can be checked.
//!
//! Below [`BRANCH_THRESHOLD`] every value is a Taylor polynomial in `s`, so
//! seeded scalars never see `√s` or a division by `θ` near the origin.

use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::Vector3;

use crate::ad::Scalar;
use crate::error::{Error, Result};

/// Squared-angle threshold below which the Taylor branch is used.
pub const BRANCH_THRESHOLD: f64 = 1.0;

/// Degree (in `s`) of every Taylor branch.
pub const TAYLOR_DEGREE: usize = 12;

/// Radians kept below π: the basis rejects `s ≥ (π - margin)²`.
pub const ANGLE_MARGIN: f64 = 1e-6;

pub fn max_squared_angle() -> f64 {
    (PI - ANGLE_MARGIN) * (PI - ANGLE_MARGIN)
}

// Exact rational coefficients in the comments; f64 literals are the
// correctly rounded values.
const A_SERIES: [f64; TAYLOR_DEGREE + 1] = [
    1.0,                     // 1
    -0.16666666666666666,    // -1/6
    0.008333333333333333,    // 1/120
    -0.0001984126984126984,  // -1/5040
    2.7557319223985893e-06,  // 1/362880
    -2.505210838544172e-08,  // -1/39916800
    1.6059043836821613e-10,  // 1/6227020800
    -7.647163731819816e-13,  // -1/1307674368000
    2.8114572543455206e-15,  // 1/355687428096000
    -8.22063524662433e-18,   // -1/121645100408832000
    1.9572941063391263e-20,  // 1/51090942171709440000
    -3.868170170630684e-23,  // -1/25852016738884976640000
    6.446950284384474e-26,   // 1/15511210043330985984000000
];

const B_SERIES: [f64; TAYLOR_DEGREE + 1] = [
    0.5,                     // 1/2
    -0.041666666666666664,   // -1/24
    0.001388888888888889,    // 1/720
    -2.48015873015873e-05,   // -1/40320
    2.755731922398589e-07,   // 1/3628800
    -2.08767569878681e-09,   // -1/479001600
    1.1470745597729725e-11,  // 1/87178291200
    -4.779477332387385e-14,  // -1/20922789888000
    1.5619206968586225e-16,  // 1/6402373705728000
    -4.110317623312165e-19,  // -1/2432902008176640000
    8.896791392450574e-22,   // 1/1124000727777607680000
    -1.6117375710961184e-24, // -1/620448401733239439360000
    2.4795962632247976e-27,  // 1/403291461126605635584000000
];

const C_SERIES: [f64; TAYLOR_DEGREE + 1] = [
    0.16666666666666666,     // 1/6
    -0.008333333333333333,   // -1/120
    0.0001984126984126984,   // 1/5040
    -2.7557319223985893e-06, // -1/362880
    2.505210838544172e-08,   // 1/39916800
    -1.6059043836821613e-10, // -1/6227020800
    7.647163731819816e-13,   // 1/1307674368000
    -2.8114572543455206e-15, // -1/355687428096000
    8.22063524662433e-18,    // 1/121645100408832000
    -1.9572941063391263e-20, // -1/51090942171709440000
    3.868170170630684e-23,   // 1/25852016738884976640000
    -6.446950284384474e-26,  // -1/15511210043330985984000000
    9.183689863795546e-29,   // 1/10888869450418352160768000000
];

const D_SERIES: [f64; TAYLOR_DEGREE + 1] = [
    0.08333333333333333,    // 1/12
    0.001388888888888889,   // 1/720
    3.306878306878307e-05,  // 1/30240
    8.267195767195768e-07,  // 1/1209600
    2.08767569878681e-08,   // 1/47900160
    5.284190138687493e-10,  // 691/1307674368000
    1.3382536530684679e-11, // 1/74724249600
    3.3896802963225827e-13, // 3617/10670622842880000
    8.586062056277845e-15,  // 43867/5109094217170944000
    2.174868698558062e-16,  // 174611/802857662698291200000
    5.5090028283602295e-18, // 77683/14101100039391805440000
    1.3954464685812522e-19, // 236364091/1693824136731743669452800000
    3.534707039629467e-21,  // 657931/186134520519971831808000000
];

/// Series of `D̃ = β̄`.
const BETA_BAR_SERIES: [f64; TAYLOR_DEGREE + 1] = [
    0.002777777777777778,   // 1/360
    0.00013227513227513228, // 1/7560
    4.96031746031746e-06,   // 1/201600
    1.670140559029448e-07,  // 1/5987520
    5.2841901386874934e-09, // 691/130767436800
    1.6059043836821613e-10, // 1/6227020800
    4.745552414851616e-12,  // 3617/762187345920000
    1.3737699290044552e-13, // 43867/319318388573184000
    3.914763657404511e-15,  // 174611/44603203483238400000
    1.1018005656720459e-16, // 77683/705055001969590272000
    3.069982230878755e-18,  // 236364091/76992006215079257702400000
    8.483296895110721e-20,  // 657931/7755605021665492992000000
    2.327914531029762e-21,  // 3392780147/1457433295671379443056640000000
];

const BETA_BAR_S_SERIES: [f64; TAYLOR_DEGREE + 1] = [
    0.00013227513227513228, // 1/7560
    9.92063492063492e-06,   // 1/100800
    5.010421677088344e-07,  // 1/1995840
    2.1136760554749974e-08, // 691/32691859200
    8.029521918410807e-10,  // 1/1245404160
    2.8473314489109696e-11, // 3617/127031224320000
    9.616389503031186e-13,  // 43867/45616912653312000
    3.131810925923609e-14,  // 174611/5575400435404800000
    9.916205091048413e-16,  // 77683/78339444663287808000
    3.069982230878755e-17,  // 236364091/7699200621507925770240000
    9.331626584621793e-19,  // 657931/705055001969590272000000
    2.793497437235715e-20,  // 3392780147/121452774639281620254720000000
    8.255346926509166e-22,  // 1723168255201/2087335966060549638345719808000000
];

/// All basis values at one squared angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SBasisEval<S> {
    pub s: S,
    pub a: S,
    pub b: S,
    pub c: S,
    pub d: S,
    pub d_tilde: S,
    pub beta_bar: S,
    pub beta_bar_s: S,
}

#[inline]
pub(crate) fn horner<S: Scalar>(coeffs: &[f64], x: S) -> S {
    let (last, rest) = coeffs.split_last().expect("non-empty series");
    let mut acc = S::from_f64(*last);
    for &c in rest.iter().rev() {
        acc = acc * x + S::from_f64(c);
    }
    acc
}

/// Derivative of `Σ c_k x^(2k)` with respect to `x`, evaluated at `x`.
fn even_series_slope<S: Scalar>(coeffs: &[f64], x: S) -> S {
    let d: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(k, c)| 2.0 * k as f64 * c).collect();
    horner(&d, x * x) * x
}

fn check_domain<S: Scalar>(s: &S) -> Result<()> {
    let v = s.value();
    if !(v >= 0.0) || v >= max_squared_angle() {
        return Err(Error::Domain { what: "squared angle", value: v });
    }
    Ok(())
}

/// Fused, s-native evaluation of the whole basis.
pub fn eval_basis<S: Scalar>(s: S) -> Result<SBasisEval<S>> {
    check_domain(&s)?;
    Ok(if s.value() < BRANCH_THRESHOLD {
        taylor_branch(s)
    } else {
        closed_branch(s)
    })
}

/// Taylor polynomials in `s`, without domain checks.
pub fn taylor_branch<S: Scalar>(s: S) -> SBasisEval<S> {
    let beta_bar = horner(&BETA_BAR_SERIES, s);
    SBasisEval {
        s,
        a: horner(&A_SERIES, s),
        b: horner(&B_SERIES, s),
        c: horner(&C_SERIES, s),
        d: horner(&D_SERIES, s),
        d_tilde: beta_bar,
        beta_bar,
        beta_bar_s: horner(&BETA_BAR_S_SERIES, s),
    }
}

/// Closed trigonometric forms, without domain checks. Loses accuracy as
/// `s → 0`; only meant for `s ≥ BRANCH_THRESHOLD`.
pub fn closed_branch<S: Scalar>(s: S) -> SBasisEval<S> {
    let theta = s.sqrt();
    let (sn, cs) = (theta.sin(), theta.cos());
    let inv_s = s.recip();
    let half = theta.scale(0.5);
    let (sh, ch) = (half.sin(), half.cos());

    let a = sn / theta;
    let b = (sh * sh).scale(2.0) * inv_s;
    let c = (theta - sn) / theta * inv_s;

    // f = u cot u with u = θ/2, and df/dθ
    let f = half * ch / sh;
    let df = (ch / sh - half / (sh * sh)).scale(0.5);
    let d = (S::one() - f) * inv_s;
    let d_tilde = -(df / theta) * inv_s - d.scale(2.0) * inv_s;

    let two_b = b.scale(2.0);
    let beta_bar = (c / two_b - d.scale(2.0)) * inv_s;

    let a_s = (cs - a).scale(0.5) * inv_s;
    let b_s = (a.scale(0.5) - b) * inv_s;
    let c_s = -(a_s + c) * inv_s;
    let beta_s = c_s / two_b - c * b_s / (two_b * b) - d_tilde;
    let beta_bar_s = (beta_s - beta_bar) * inv_s;

    SBasisEval { s, a, b, c, d, d_tilde, beta_bar, beta_bar_s }
}

/// θ-parameterized counterpart of [`eval_basis`].
///
/// Computes `θ = √s` unconditionally and writes `D̃` and `β̄_s` as
/// θ-quotients. Values agree with [`eval_basis`] for plain scalars; at
/// `s = 0` the value is special-cased, but `√s` has already put `0/0`
/// into any seeded payload.
pub fn eval_basis_naive_theta<S: Scalar>(s: S) -> Result<SBasisEval<S>> {
    check_domain(&s)?;
    let theta = s.sqrt();
    if theta.value() == 0.0 {
        let k = S::from_f64;
        return Ok(SBasisEval {
            s,
            a: k(A_SERIES[0]),
            b: k(B_SERIES[0]),
            c: k(C_SERIES[0]),
            d: k(D_SERIES[0]),
            d_tilde: k(BETA_BAR_SERIES[0]),
            beta_bar: k(BETA_BAR_SERIES[0]),
            beta_bar_s: k(BETA_BAR_S_SERIES[0]),
        });
    }
    let (d_theta, beta_bar_theta) = naive_theta_slopes(theta);
    let two_theta = theta.scale(2.0);
    if theta.value() * theta.value() < BRANCH_THRESHOLD {
        let t2 = theta * theta;
        Ok(SBasisEval {
            s,
            a: horner(&A_SERIES, t2),
            b: horner(&B_SERIES, t2),
            c: horner(&C_SERIES, t2),
            d: horner(&D_SERIES, t2),
            d_tilde: d_theta / theta,
            beta_bar: horner(&BETA_BAR_SERIES, t2),
            beta_bar_s: beta_bar_theta / two_theta,
        })
    } else {
        let t = theta_closed(theta);
        Ok(SBasisEval {
            s,
            a: t.a,
            b: t.b,
            c: t.c,
            d: t.d,
            d_tilde: d_theta / theta,
            beta_bar: t.beta_bar,
            beta_bar_s: beta_bar_theta / two_theta,
        })
    }
}

struct ThetaClosed<S> {
    a: S,
    b: S,
    c: S,
    d: S,
    beta_bar: S,
    /// dD/dθ
    d_theta: S,
    /// dβ̄/dθ
    beta_bar_theta: S,
}

fn theta_closed<S: Scalar>(theta: S) -> ThetaClosed<S> {
    let (sn, cs) = (theta.sin(), theta.cos());
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let half = theta.scale(0.5);
    let (sh, ch) = (half.sin(), half.cos());
    let one = S::one();

    let a = sn / theta;
    let b = (one - cs) / t2;
    let c = (theta - sn) / t3;
    let f = half * ch / sh;
    let d = (one - f) / t2;
    let beta = c / b.scale(2.0) - d.scale(2.0);
    let beta_bar = beta / t2;

    let df = (ch / sh - half / (sh * sh)).scale(0.5);
    let d_theta = -(df / t2) - (one - f).scale(2.0) / t3;
    let b_theta = (theta * sn - (one - cs).scale(2.0)) / t3;
    let c_theta = (one - cs) / t3 - (theta - sn).scale(3.0) / (t3 * theta);
    let beta_theta = c_theta / b.scale(2.0) - c * b_theta / (b * b).scale(2.0) - d_theta.scale(2.0);
    let beta_bar_theta = beta_theta / t2 - beta.scale(2.0) / t3;

    ThetaClosed { a, b, c, d, beta_bar, d_theta, beta_bar_theta }
}

/// `(dD/dθ, dβ̄/dθ)` in θ-form; zero at `θ = 0` by special case.
fn naive_theta_slopes<S: Scalar>(theta: S) -> (S, S) {
    if theta.value() == 0.0 {
        (S::zero(), S::zero())
    } else if theta.value() * theta.value() < BRANCH_THRESHOLD {
        (even_series_slope(&D_SERIES, theta), even_series_slope(&BETA_BAR_SERIES, theta))
    } else {
        let t = theta_closed(theta);
        (t.d_theta, t.beta_bar_theta)
    }
}

/// The s-derivatives of `D` and `β̄` pushed onto one rotation axis:
/// `slope_d[m] = ∂D/∂ω_m`, `slope_beta_bar[m] = ∂β̄/∂ω_m`.
#[derive(Clone, Copy, Debug)]
pub struct RadialSlopes<S> {
    pub slope_d: [S; 3],
    pub slope_beta_bar: [S; 3],
}

/// A way of evaluating the scalar basis and its radial derivatives.
///
/// [`Fused`] is the s-native form. [`NaiveTheta`] is the conventional
/// θ-based form, kept to demonstrate what goes wrong at `ω = 0`.
pub trait Basis: Copy + Default + Debug + Send + Sync + 'static {
    const NAME: &'static str;

    fn eval<S: Scalar>(self, s: S) -> Result<SBasisEval<S>>;

    fn radial_slopes<S: Scalar>(self, omega: &Vector3<S>, basis: &SBasisEval<S>) -> RadialSlopes<S>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Fused;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NaiveTheta;

impl Basis for Fused {
    const NAME: &'static str = "fused";

    fn eval<S: Scalar>(self, s: S) -> Result<SBasisEval<S>> {
        eval_basis(s)
    }

    /// `∂D/∂ω_m = D̃ ω_m`, `∂β̄/∂ω_m = 2 ω_m β̄_s`.
    fn radial_slopes<S: Scalar>(self, omega: &Vector3<S>, b: &SBasisEval<S>) -> RadialSlopes<S> {
        RadialSlopes {
            slope_d: std::array::from_fn(|m| b.d_tilde * omega[m]),
            slope_beta_bar: std::array::from_fn(|m| (b.beta_bar_s * omega[m]).scale(2.0)),
        }
    }
}

impl Basis for NaiveTheta {
    const NAME: &'static str = "naive-theta";

    fn eval<S: Scalar>(self, s: S) -> Result<SBasisEval<S>> {
        eval_basis_naive_theta(s)
    }

    /// `∂D/∂ω_m = D'(θ) · (ω_m / θ)` with the two factors kept apart.
    fn radial_slopes<S: Scalar>(self, omega: &Vector3<S>, b: &SBasisEval<S>) -> RadialSlopes<S> {
        let theta = b.s.sqrt();
        let (d_theta, beta_bar_theta) = naive_theta_slopes(theta);
        let unit: [S; 3] = std::array::from_fn(|m| omega[m] / theta);
        RadialSlopes {
            slope_d: unit.map(|u| d_theta * u),
            slope_beta_bar: unit.map(|u| beta_bar_theta * u),
        }
    }
}
