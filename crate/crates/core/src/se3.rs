//! SE(3) primitives over any [`Scalar`], rotation-first tangent `ξ = [ω; t]`.
//!
//! Right Jacobian and inverse are lower block-triangular:
//!
//! ```text
//! Jr   = [ Jr   0  ]      Jr⁻¹ = [ Jr⁻¹  0    ]      Qr = -Jr Q̃r Jr
//!        [ Qr   Jr ]             [ Q̃r    Jr⁻¹ ]
//! ```
//!
//! with `Q̃r = ½[t]ₓ + D H + α[ω]ₓ²`, `H = [ω]ₓ[t]ₓ + [t]ₓ[ω]ₓ`,
//! `α = (ωᵀt) β̄`.

use nalgebra::{Matrix3, Matrix3x6, Matrix6, Vector3, Vector6};

use crate::ad::{Scalar, TangentMap};
use crate::basis::{Basis, Fused, RadialSlopes, SBasisEval};
use crate::error::Result;
use crate::so3::{self, check_axis, d_hat_sq, d_jr_inv_from, generator, hat, jr_inv_from};

/// A rigid transform `x ↦ R x + p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose3<S: Scalar> {
    pub r: Matrix3<S>,
    pub p: Vector3<S>,
}

impl<S: Scalar> Pose3<S> {
    pub fn new(r: Matrix3<S>, p: Vector3<S>) -> Self {
        Self { r, p }
    }

    pub fn identity() -> Self {
        Self { r: Matrix3::identity(), p: Vector3::zeros() }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { r: self.r * other.r, p: self.r * other.p + self.p }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.r.transpose();
        Self { r: rt, p: -(rt * self.p) }
    }

    pub fn act(&self, x: &Vector3<S>) -> Vector3<S> {
        self.r * x + self.p
    }
}

impl Pose3<f64> {
    /// Promote a real pose into another scalar type (constant payload).
    pub fn cast<S: Scalar>(&self) -> Pose3<S> {
        Pose3 { r: self.r.map(S::from_f64), p: self.p.map(S::from_f64) }
    }
}

pub fn compose<S: Scalar>(a: &Pose3<S>, b: &Pose3<S>) -> Pose3<S> {
    a.compose(b)
}

pub fn inverse<S: Scalar>(t: &Pose3<S>) -> Pose3<S> {
    t.inverse()
}

pub fn act<S: Scalar>(t: &Pose3<S>, x: &Vector3<S>) -> Vector3<S> {
    t.act(x)
}

/// Tangent vector `[ω; t]`; slots 0-2 rotation, 3-5 translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist6<S: Scalar> {
    pub omega: Vector3<S>,
    pub t: Vector3<S>,
}

impl<S: Scalar> Twist6<S> {
    pub fn new(omega: Vector3<S>, t: Vector3<S>) -> Self {
        Self { omega, t }
    }

    pub fn zero() -> Self {
        Self { omega: Vector3::zeros(), t: Vector3::zeros() }
    }

    pub fn from_array(x: [S; 6]) -> Self {
        Self {
            omega: Vector3::new(x[0], x[1], x[2]),
            t: Vector3::new(x[3], x[4], x[5]),
        }
    }

    pub fn to_array(&self) -> [S; 6] {
        [self.omega[0], self.omega[1], self.omega[2], self.t[0], self.t[1], self.t[2]]
    }

    pub fn from_vector(v: &Vector6<S>) -> Self {
        Self::from_array([v[0], v[1], v[2], v[3], v[4], v[5]])
    }

    pub fn to_vector(&self) -> Vector6<S> {
        Vector6::from_column_slice(&self.to_array())
    }
}

fn lower_block<S: Scalar>(diag: &Matrix3<S>, lower: &Matrix3<S>) -> Matrix6<S> {
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(diag);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(lower);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(diag);
    m
}

pub fn exp_se3<S: Scalar>(xi: &Twist6<S>) -> Result<Pose3<S>> {
    exp_se3_with(Fused, xi)
}

/// `Exp(ξ) = (Exp(ω), V(ω) t)` with `V = I + B[ω]ₓ + C[ω]ₓ²`.
pub fn exp_se3_with<S: Scalar, B: Basis>(basis: B, xi: &Twist6<S>) -> Result<Pose3<S>> {
    let b = so3::basis_at(basis, &xi.omega)?;
    let w = hat(&xi.omega);
    let w2 = w * w;
    let id = Matrix3::identity();
    let r = id + w * b.a + w2 * b.b;
    let v = id + w * b.b + w2 * b.c;
    Ok(Pose3 { r, p: v * xi.t })
}

pub fn log_se3<S: Scalar>(t: &Pose3<S>) -> Result<Twist6<S>> {
    log_se3_with(Fused, t)
}

/// `Log(T) = [Log(R); V⁻¹ p]` with `V⁻¹ = I - ½[ω]ₓ + D[ω]ₓ²`.
pub fn log_se3_with<S: Scalar, B: Basis>(basis: B, t: &Pose3<S>) -> Result<Twist6<S>> {
    let omega = so3::log_so3(&t.r)?;
    let b = so3::basis_at(basis, &omega)?;
    let w = hat(&omega);
    let v_inv = Matrix3::identity() - w * S::from_f64(0.5) + w * w * b.d;
    Ok(Twist6 { omega, t: v_inv * t.p })
}

fn h_matrix<S: Scalar>(omega: &Vector3<S>, t: &Vector3<S>) -> Matrix3<S> {
    let (w, tx) = (hat(omega), hat(t));
    w * tx + tx * w
}

pub(crate) fn q_tilde_from<S: Scalar>(b: &SBasisEval<S>, omega: &Vector3<S>, t: &Vector3<S>) -> Matrix3<S> {
    let w = hat(omega);
    let alpha = omega.dot(t) * b.beta_bar;
    hat(t) * S::from_f64(0.5) + h_matrix(omega, t) * b.d + w * w * alpha
}

/// `∂Q̃r/∂ω_m = D̃ ω_m H + D H_m + α_m [ω]ₓ² + α S_m` with
/// `α_m = t_m β̄ + (ωᵀt) ∂β̄/∂ω_m`. The radial slopes carry the fusion.
pub(crate) fn d_q_tilde_from<S: Scalar>(
    b: &SBasisEval<S>,
    slopes: &RadialSlopes<S>,
    omega: &Vector3<S>,
    t: &Vector3<S>,
    m: usize,
) -> Matrix3<S> {
    let w = hat(omega);
    let em = generator::<S>(m);
    let tx = hat(t);
    let h_m = em * tx + tx * em;
    let wt = omega.dot(t);
    let alpha = wt * b.beta_bar;
    let alpha_m = t[m] * b.beta_bar + wt * slopes.slope_beta_bar[m];
    h_matrix(omega, t) * slopes.slope_d[m] + h_m * b.d + w * w * alpha_m + d_hat_sq(omega, m) * alpha
}

pub fn q_tilde_r<S: Scalar>(omega: &Vector3<S>, t: &Vector3<S>) -> Result<Matrix3<S>> {
    q_tilde_r_with(Fused, omega, t)
}

pub fn q_tilde_r_with<S: Scalar, B: Basis>(basis: B, omega: &Vector3<S>, t: &Vector3<S>) -> Result<Matrix3<S>> {
    let b = so3::basis_at(basis, omega)?;
    Ok(q_tilde_from(&b, omega, t))
}

pub fn d_q_tilde_r<S: Scalar>(omega: &Vector3<S>, t: &Vector3<S>, m: usize) -> Result<Matrix3<S>> {
    d_q_tilde_r_with(Fused, omega, t, m)
}

pub fn d_q_tilde_r_with<S: Scalar, B: Basis>(
    basis: B,
    omega: &Vector3<S>,
    t: &Vector3<S>,
    m: usize,
) -> Result<Matrix3<S>> {
    check_axis(m)?;
    let b = so3::basis_at(basis, omega)?;
    let slopes = basis.radial_slopes(omega, &b);
    Ok(d_q_tilde_from(&b, &slopes, omega, t, m))
}

pub fn jr_inv_se3<S: Scalar>(xi: &Twist6<S>) -> Result<Matrix6<S>> {
    jr_inv_se3_with(Fused, xi)
}

pub fn jr_inv_se3_with<S: Scalar, B: Basis>(basis: B, xi: &Twist6<S>) -> Result<Matrix6<S>> {
    let b = so3::basis_at(basis, &xi.omega)?;
    Ok(lower_block(&jr_inv_from(&b, &xi.omega), &q_tilde_from(&b, &xi.omega, &xi.t)))
}

pub fn jr_se3<S: Scalar>(xi: &Twist6<S>) -> Result<Matrix6<S>> {
    jr_se3_with(Fused, xi)
}

/// Forward Jacobian from the inverse side: `Qr = -Jr Q̃r Jr`.
pub fn jr_se3_with<S: Scalar, B: Basis>(basis: B, xi: &Twist6<S>) -> Result<Matrix6<S>> {
    let b = so3::basis_at(basis, &xi.omega)?;
    let w = hat(&xi.omega);
    let jr = Matrix3::identity() - w * b.b + w * w * b.c;
    let qr = -(jr * q_tilde_from(&b, &xi.omega, &xi.t) * jr);
    Ok(lower_block(&jr, &qr))
}

/// `Jr⁻¹(ξ)` as a [`TangentMap`]: under dual scalars its payload is pushed
/// through `∂Jr⁻¹/∂ω_m`, `∂Q̃r/∂ω_m` and `∂Q̃r/∂t_m` rather than through the
/// arithmetic of the value formula.
#[derive(Clone, Copy, Debug, Default)]
pub struct JrInvSe3Map<B: Basis>(pub B);

impl<B: Basis> TangentMap<6, 36> for JrInvSe3Map<B> {
    fn eval<S: Scalar>(&self, x: &[S; 6]) -> Result<[S; 36]> {
        let m = jr_inv_se3_with(self.0, &Twist6::from_array(*x))?;
        Ok(flatten(&m))
    }

    fn partials<S: Scalar>(&self, x: &[S; 6]) -> Result<[[S; 36]; 6]> {
        let xi = Twist6::from_array(*x);
        let b = so3::basis_at(self.0, &xi.omega)?;
        let slopes = self.0.radial_slopes(&xi.omega, &b);
        let mut out = [[S::zero(); 36]; 6];
        for m in 0..3 {
            let diag = d_jr_inv_from(&b, slopes.slope_d[m], &xi.omega, m);
            let lower = d_q_tilde_from(&b, &slopes, &xi.omega, &xi.t, m);
            out[m] = flatten(&lower_block(&diag, &lower));
            // Q̃r is linear in t.
            let mut e = Vector3::zeros();
            e[m] = S::one();
            let mut dt = Matrix6::zeros();
            dt.fixed_view_mut::<3, 3>(3, 0).copy_from(&q_tilde_from(&b, &xi.omega, &e));
            out[m + 3] = flatten(&dt);
        }
        Ok(out)
    }
}

/// `Jr⁻¹(ξ)` evaluated through [`Scalar::lift`].
pub fn jr_inv_se3_lifted<S: Scalar, B: Basis>(basis: B, xi: &Twist6<S>) -> Result<Matrix6<S>> {
    let flat = S::lift(&JrInvSe3Map(basis), &xi.to_array())?;
    Ok(Matrix6::from_row_slice(&flat))
}

fn flatten<S: Scalar>(m: &Matrix6<S>) -> [S; 36] {
    std::array::from_fn(|k| m[(k / 6, k % 6)])
}

/// `Ad_T = [[R, 0], [[p]ₓR, R]]`.
pub fn adjoint<S: Scalar>(t: &Pose3<S>) -> Matrix6<S> {
    lower_block(&t.r, &(hat(&t.p) * t.r))
}

/// Algebra adjoint `ad_ξ = [[[ω]ₓ, 0], [[t]ₓ, [ω]ₓ]]`.
pub fn ad_algebra<S: Scalar>(xi: &Twist6<S>) -> Matrix6<S> {
    lower_block(&hat(&xi.omega), &hat(&xi.t))
}

/// `∂(T Exp(δ) x)/∂δ = (-R[x]ₓ | R)`.
pub fn j_act<S: Scalar>(t: &Pose3<S>, x: &Vector3<S>) -> Matrix3x6<S> {
    let mut j = Matrix3x6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&-(t.r * hat(x)));
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&t.r);
    j
}
