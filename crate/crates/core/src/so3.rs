//! SO(3) primitives over any [`Scalar`].
//!
//! Conventions: `R = Exp(ω) = I + A[ω]ₓ + B[ω]ₓ²`, right Jacobian
//! `Jr = I - B[ω]ₓ + C[ω]ₓ²`, inverse `Jr⁻¹ = I + ½[ω]ₓ + D[ω]ₓ²`.
//! The `*_with` variants take the [`Basis`] explicitly; the plain names use
//! [`Fused`].

use nalgebra::{Matrix3, Vector3};

use crate::ad::Scalar;
use crate::basis::{horner, max_squared_angle, Basis, Fused, SBasisEval};
use crate::error::{Error, Result};

pub type Rot3<S> = Matrix3<S>;
pub type Omega3<S> = Vector3<S>;

/// Below this value of `sin²θ` (and with `cos θ > 0`) the logarithm uses a
/// series in `sin²θ`.
const LOG_SERIES_THRESHOLD: f64 = 1e-4;

/// `asin(√y) / √y = θ / sin θ` as a series in `y = sin²θ`.
const THETA_OVER_SIN_SERIES: [f64; 6] = [
    1.0,
    1.0 / 6.0,
    3.0 / 40.0,
    5.0 / 112.0,
    35.0 / 1152.0,
    63.0 / 2816.0,
];

pub fn hat<S: Scalar>(v: &Vector3<S>) -> Matrix3<S> {
    let z = S::zero();
    Matrix3::new(z, -v[2], v[1], v[2], z, -v[0], -v[1], v[0], z)
}

pub fn vee<S: Scalar>(m: &Matrix3<S>) -> Vector3<S> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// `E_m = [e_m]ₓ`.
pub fn generator<S: Scalar>(m: usize) -> Matrix3<S> {
    let mut e = Vector3::zeros();
    e[m] = S::one();
    hat(&e)
}

/// `S_m = ∂[ω]ₓ² / ∂ω_m = E_m[ω]ₓ + [ω]ₓE_m`.
pub fn d_hat_sq<S: Scalar>(omega: &Vector3<S>, m: usize) -> Matrix3<S> {
    let e = generator::<S>(m);
    let w = hat(omega);
    e * w + w * e
}

pub(crate) fn basis_at<S: Scalar, B: Basis>(basis: B, omega: &Vector3<S>) -> Result<SBasisEval<S>> {
    basis.eval(omega.dot(omega))
}

pub fn exp_so3<S: Scalar>(omega: &Omega3<S>) -> Result<Rot3<S>> {
    exp_so3_with(Fused, omega)
}

pub fn exp_so3_with<S: Scalar, B: Basis>(basis: B, omega: &Omega3<S>) -> Result<Rot3<S>> {
    let b = basis_at(basis, omega)?;
    let w = hat(omega);
    Ok(Matrix3::identity() + w * b.a + w * w * b.b)
}

/// Principal-branch logarithm.
///
/// Uses the antisymmetric part `(R - Rᵀ)/2 = sin θ [n]ₓ` rescaled by
/// `θ / sin θ`. Near the identity that factor is a series in `sin²θ`, so no
/// square root is taken there.
pub fn log_so3<S: Scalar>(r: &Rot3<S>) -> Result<Omega3<S>> {
    let half = S::from_f64(0.5);
    let cos_theta = (r.trace() - S::one()) * half;
    let limit = (std::f64::consts::PI - crate::basis::ANGLE_MARGIN).cos();
    if !(cos_theta.value() > limit) {
        return Err(Error::Domain { what: "log_so3 trace", value: r.trace().value() });
    }
    let v = vee(&(r - r.transpose())) * half;
    let y = v.dot(&v);
    let factor = if y.value() < LOG_SERIES_THRESHOLD && cos_theta.value() > 0.0 {
        horner(&THETA_OVER_SIN_SERIES, y)
    } else {
        let sin_theta = y.sqrt();
        sin_theta.atan2(cos_theta) / sin_theta
    };
    Ok(v * factor)
}

pub fn jr_so3<S: Scalar>(omega: &Omega3<S>) -> Result<Matrix3<S>> {
    jr_so3_with(Fused, omega)
}

pub fn jr_so3_with<S: Scalar, B: Basis>(basis: B, omega: &Omega3<S>) -> Result<Matrix3<S>> {
    let b = basis_at(basis, omega)?;
    let w = hat(omega);
    Ok(Matrix3::identity() - w * b.b + w * w * b.c)
}

pub fn jr_inv_so3<S: Scalar>(omega: &Omega3<S>) -> Result<Matrix3<S>> {
    jr_inv_so3_with(Fused, omega)
}

pub fn jr_inv_so3_with<S: Scalar, B: Basis>(basis: B, omega: &Omega3<S>) -> Result<Matrix3<S>> {
    let b = basis_at(basis, omega)?;
    Ok(jr_inv_from(&b, omega))
}

pub(crate) fn jr_inv_from<S: Scalar>(b: &SBasisEval<S>, omega: &Omega3<S>) -> Matrix3<S> {
    let w = hat(omega);
    Matrix3::identity() + w * S::from_f64(0.5) + w * w * b.d
}

/// `∂Jr⁻¹/∂ω_m = ½E_m + D̃(s) ω_m [ω]ₓ² + D(s) S_m`.
pub fn d_jr_inv_so3<S: Scalar>(omega: &Omega3<S>, m: usize) -> Result<Matrix3<S>> {
    d_jr_inv_so3_with(Fused, omega, m)
}

pub fn d_jr_inv_so3_with<S: Scalar, B: Basis>(
    basis: B,
    omega: &Omega3<S>,
    m: usize,
) -> Result<Matrix3<S>> {
    check_axis(m)?;
    let b = basis_at(basis, omega)?;
    let slopes = basis.radial_slopes(omega, &b);
    Ok(d_jr_inv_from(&b, slopes.slope_d[m], omega, m))
}

pub(crate) fn d_jr_inv_from<S: Scalar>(
    b: &SBasisEval<S>,
    slope_d: S,
    omega: &Omega3<S>,
    m: usize,
) -> Matrix3<S> {
    let w = hat(omega);
    generator::<S>(m) * S::from_f64(0.5) + w * w * slope_d + d_hat_sq(omega, m) * b.d
}

pub(crate) fn check_axis(m: usize) -> Result<()> {
    if m < 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("axis index {m} out of range 0..3")))
    }
}

/// Largest rotation angle accepted by the basis.
pub fn max_angle() -> f64 {
    max_squared_angle().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::{Dual6, Seed};
    use crate::basis::NaiveTheta;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type D = Dual6<f64>;
    type N2 = Dual6<Dual6<f64>>;

    fn max_abs(m: &Matrix3<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    fn random_omega(rng: &mut ChaCha8Rng, max_norm: f64) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                return v / n * rng.random_range(0.0..max_norm);
            }
        }
    }

    // Rodrigues in θ-form, independent of the basis code.
    fn rodrigues(omega: &Vector3<f64>) -> Matrix3<f64> {
        let theta = omega.norm();
        let k = hat(&(omega / theta));
        Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos())
    }

    #[test]
    fn hat_basics() {
        let e0 = Vector3::new(1.0, 0.0, 0.0);
        let e1 = Vector3::new(0.0, 1.0, 0.0);
        assert_eq!(hat(&e0) * e1, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(hat(&Vector3::<f64>::zeros()), Matrix3::zeros());
        let v = Vector3::new(0.3, -1.2, 2.5);
        assert_eq!(hat(&v).transpose(), -hat(&v));
        let w = Vector3::new(-0.7, 0.1, 0.4);
        assert!((hat(&v) * w - v.cross(&w)).norm() < 1e-15);
        assert_eq!(vee(&hat(&v)), v);
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_so3(&Vector3::<f64>::zeros()).unwrap(), Matrix3::identity());
        let r = exp_so3(&Vector3::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0)).unwrap();
        assert!((r * Vector3::new(0.0, 1.0, 0.0) - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        let w = Vector3::new(0.3, -0.2, 0.1);
        assert!(max_abs(&(exp_so3(&w).unwrap() - rodrigues(&w))) < 1e-15);
        assert!(exp_so3(&Vector3::new(3.2, 0.0, 0.0)).is_err());
    }

    #[test]
    fn exp_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let w = random_omega(&mut rng, 3.0);
            let r = exp_so3(&w).unwrap();
            assert!(max_abs(&(r.transpose() * r - Matrix3::identity())) < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
            assert!(max_abs(&(r - rodrigues(&w))) < 1e-14);
        }
    }

    #[test]
    fn log_roundtrip() {
        assert_eq!(log_so3(&Matrix3::<f64>::identity()).unwrap(), Vector3::zeros());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let w = random_omega(&mut rng, 3.0);
            let back = log_so3(&exp_so3(&w).unwrap()).unwrap();
            assert!((back - w).norm() < 1e-10, "{w:?} -> {back:?}");
        }
        for k in 0..40 {
            let n = 10f64.powf(-12.0 + 12.5 * k as f64 / 39.0).min(std::f64::consts::PI - 0.1);
            let w = Vector3::new(0.48, -0.6, 0.64) * n;
            let back = log_so3(&exp_so3(&w).unwrap()).unwrap();
            assert!((back - w).norm() < 1e-9 * n.max(1.0));
        }
    }

    #[test]
    fn log_tiny_angle_keeps_relative_accuracy() {
        let w = Vector3::new(0.6e-9, -0.8e-9, 0.0);
        let back = log_so3(&exp_so3(&w).unwrap()).unwrap();
        assert!((back - w).norm() / w.norm() < 1e-6);
    }

    #[test]
    fn log_rejects_near_pi() {
        let half_turn = Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(log_so3(&half_turn).is_err());
        let r = exp_so3(&Vector3::new(0.0, 0.0, max_angle() - 1e-3)).unwrap();
        assert!(log_so3(&r).is_ok());
    }

    #[test]
    fn jr_and_inverse() {
        assert_eq!(jr_so3(&Vector3::<f64>::zeros()).unwrap(), Matrix3::identity());
        assert_eq!(jr_inv_so3(&Vector3::<f64>::zeros()).unwrap(), Matrix3::identity());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let w = random_omega(&mut rng, 3.0);
            let p = jr_so3(&w).unwrap() * jr_inv_so3(&w).unwrap();
            assert!(max_abs(&(p - Matrix3::identity())) < 1e-12);
        }
    }

    #[test]
    fn jr_matches_fd_of_right_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = 1e-5;
        for _ in 0..20 {
            let w = random_omega(&mut rng, 2.5);
            let r_inv = exp_so3(&w).unwrap().transpose();
            let jr = jr_so3(&w).unwrap();
            for m in 0..3 {
                let mut dp = w;
                dp[m] += h;
                let mut dm = w;
                dm[m] -= h;
                let plus = log_so3(&(r_inv * exp_so3(&dp).unwrap())).unwrap();
                let minus = log_so3(&(r_inv * exp_so3(&dm).unwrap())).unwrap();
                let col = (plus - minus) / (2.0 * h);
                assert!((col - jr.column(m)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn dual_exp_reproduces_jr_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let w = random_omega(&mut rng, 2.5);
            let x = D::seed_at(&[w[0], w[1], w[2], 0.0, 0.0, 0.0]);
            let wd = Vector3::new(x[0], x[1], x[2]);
            let r = exp_so3(&wd).unwrap();
            let rv = r.map(|d| d.val);
            let jr = jr_so3(&w).unwrap();
            for m in 0..3 {
                // Rᵀ ∂R/∂ω_m = [Jr e_m]ₓ
                let dr = r.map(|d| d.grad[m]);
                let col = vee(&(rv.transpose() * dr));
                assert!((col - jr.column(m)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn d_jr_inv_at_origin() {
        for m in 0..3 {
            let got = d_jr_inv_so3(&Vector3::<f64>::zeros(), m).unwrap();
            let want = generator::<f64>(m) * 0.5;
            assert!(max_abs(&(got - want)) < 1e-16);
        }
        assert!(d_jr_inv_so3(&Vector3::<f64>::zeros(), 3).is_err());
    }

    #[test]
    fn d_jr_inv_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = 1e-5;
        for _ in 0..100 {
            let w = random_omega(&mut rng, 2.8);
            for m in 0..3 {
                let mut dp = w;
                dp[m] += h;
                let mut dm = w;
                dm[m] -= h;
                let fd = (jr_inv_so3(&dp).unwrap() - jr_inv_so3(&dm).unwrap()) / (2.0 * h);
                let an = d_jr_inv_so3(&w, m).unwrap();
                assert!(max_abs(&(fd - an)) < 1e-7);
            }
        }
    }

    #[test]
    fn seeded_evaluation_at_origin_is_finite() {
        let xd = D::seed_identity();
        let wd = Vector3::new(xd[0], xd[1], xd[2]);
        let xn = N2::seed_identity();
        let wn = Vector3::new(xn[0], xn[1], xn[2]);
        for m in 0..3 {
            assert!(d_jr_inv_so3(&wd, m).unwrap().iter().all(Scalar::all_finite));
            assert!(d_jr_inv_so3(&wn, m).unwrap().iter().all(Scalar::all_finite));
        }
        assert!(jr_inv_so3(&wd).unwrap().iter().all(Scalar::all_finite));
        assert!(jr_inv_so3(&wn).unwrap().iter().all(Scalar::all_finite));
        assert!(log_so3(&exp_so3(&wn).unwrap()).unwrap().iter().all(Scalar::all_finite));
    }

    #[test]
    fn naive_derivative_tensor_is_nan_at_origin() {
        let xd = D::seed_identity();
        let wd = Vector3::new(xd[0], xd[1], xd[2]);
        let nan = (0..3).any(|m| {
            !d_jr_inv_so3_with(NaiveTheta, &wd, m).unwrap().iter().all(Scalar::all_finite)
        });
        assert!(nan);
        // away from the origin the two forms agree
        let w = Vector3::new(0.3, -0.2, 0.35);
        for m in 0..3 {
            let a = d_jr_inv_so3(&w, m).unwrap();
            let b = d_jr_inv_so3_with(NaiveTheta, &w, m).unwrap();
            assert!(max_abs(&(a - b)) < 1e-13);
        }
    }

    #[test]
    fn f32_instantiation() {
        let w = Vector3::new(0.3f32, -0.2, 0.1);
        let back = log_so3(&exp_so3(&w).unwrap()).unwrap();
        assert!((back - w).norm() < 1e-5);
    }
}
