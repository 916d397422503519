//! Single-pose NLL with a manifold prior and robust pinhole landmark terms.
//!
//! `nll_grad` is the one gradient body. Plain scalars give the gradient,
//! seeded [`Dual6`](crate::ad::Dual6) gives gradient and Hessian, the nested
//! dual adds the third-order tensor.

use nalgebra::{Matrix2, Matrix2x3, Matrix6, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::ad::Scalar;
use crate::basis::{Basis, Fused};
use crate::error::{Error, Result};
use crate::se3::{self, adjoint, j_act, Pose3, Twist6};

/// Camera-frame depth at or below which a landmark is rejected.
pub const DEPTH_GUARD: f64 = 1e-6;

pub const DEFAULT_KAPPA: f64 = 1.0;

/// Pinhole intrinsics for `π(u) = (fx u₀/u₂ + cx, fy u₁/u₂ + cy)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self { fx: 500.0, fy: 500.0, cx: 320.0, cy: 240.0 }
    }
}

impl Intrinsics {
    pub fn project<S: Scalar>(&self, u: &Vector3<S>) -> Vector2<S> {
        let inv_z = u[2].recip();
        Vector2::new(
            u[0] * inv_z * S::from_f64(self.fx) + S::from_f64(self.cx),
            u[1] * inv_z * S::from_f64(self.fy) + S::from_f64(self.cy),
        )
    }

    /// `∂π/∂u`.
    pub fn project_jacobian<S: Scalar>(&self, u: &Vector3<S>) -> Matrix2x3<S> {
        let inv_z = u[2].recip();
        let (fx, fy) = (S::from_f64(self.fx), S::from_f64(self.fy));
        let z = S::zero();
        Matrix2x3::new(
            fx * inv_z, z, -(fx * u[0] * inv_z * inv_z),
            z, fy * inv_z, -(fy * u[1] * inv_z * inv_z),
        )
    }
}

/// One landmark measurement with whitening `L` (`LᵀL = Ω`).
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub landmark: Vector3<f64>,
    pub z: Vector2<f64>,
    pub whitening: Matrix2<f64>,
    pub kappa: f64,
}

impl Observation {
    pub fn new(landmark: Vector3<f64>, z: Vector2<f64>, whitening: Matrix2<f64>, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
        }
        let w = whitening;
        if w[(1, 0)] != 0.0 || !(w[(0, 0)] > 0.0) || !(w[(1, 1)] > 0.0) || !w[(0, 1)].is_finite() {
            return Err(Error::InvalidArgument(
                "whitening must be upper-triangular with positive diagonal".into(),
            ));
        }
        Ok(Self { landmark, z, whitening, kappa })
    }

    /// Isotropic pixel noise `sigma`: `L = I / sigma`.
    pub fn isotropic(landmark: Vector3<f64>, z: Vector2<f64>, sigma: f64, kappa: f64) -> Result<Self> {
        Self::new(landmark, z, Matrix2::identity() / sigma, kappa)
    }
}

/// Gaussian prior on the pose, `½ ξᵀ Σ⁻¹ ξ` with `ξ = Log(T⁻¹ T_prior)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec {
    pub t_prior: Pose3<f64>,
    pub info: Matrix6<f64>,
}

impl PriorSpec {
    pub fn new(t_prior: Pose3<f64>, info: Matrix6<f64>) -> Result<Self> {
        let asym = (info - info.transpose()).norm();
        if asym > 1e-12 * info.norm().max(1.0) {
            return Err(Error::InvalidArgument(format!("prior information not symmetric ({asym:e})")));
        }
        if info.cholesky().is_none() {
            return Err(Error::InvalidArgument("prior information not positive definite".into()));
        }
        Ok(Self { t_prior, info })
    }

    pub fn diagonal(t_prior: Pose3<f64>, diag: [f64; 6]) -> Result<Self> {
        Self::new(t_prior, Matrix6::from_diagonal(&Vector6::from_column_slice(&diag)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NLLProblem {
    pub t_bar: Pose3<f64>,
    pub prior: PriorSpec,
    pub obs: Vec<Observation>,
    pub intrinsics: Intrinsics,
}

impl NLLProblem {
    /// Checks that every landmark clears the depth guard at `t_bar`.
    pub fn validate(&self) -> Result<()> {
        for (i, o) in self.obs.iter().enumerate() {
            let u = self.t_bar.act(&o.landmark);
            if !(u[2] > DEPTH_GUARD) {
                return Err(Error::Depth { index: i, depth: u[2] });
            }
        }
        Ok(())
    }
}

/// `ρ(s) = κ²(√(1 + s/κ²) − 1)`.
pub fn pseudo_huber<S: Scalar>(s: S, kappa: f64) -> S {
    let k2 = kappa * kappa;
    ((S::one() + s.scale(1.0 / k2)).sqrt() - S::one()).scale(k2)
}

/// `ρ'(s) = 1 / (2√(1 + s/κ²))`, so `ρ'(0) = ½`.
pub fn pseudo_huber_slope<S: Scalar>(s: S, kappa: f64) -> S {
    (S::one() + s.scale(1.0 / (kappa * kappa))).sqrt().scale(2.0).recip()
}

fn check_depth<S: Scalar>(u: &Vector3<S>, index: usize) -> Result<()> {
    let depth = u[2].value();
    if depth > DEPTH_GUARD {
        Ok(())
    } else {
        Err(Error::Depth { index, depth })
    }
}

fn whitened_residual<S: Scalar>(obs: &Observation, u: &Vector3<S>, intr: &Intrinsics) -> Vector2<S> {
    let l = obs.whitening.map(S::from_f64);
    l * (intr.project(u) - obs.z.map(S::from_f64))
}

/// `ρ(‖L(π(u) − z)‖²)` for a camera-frame point `u`.
pub fn observation_cost<S: Scalar>(obs: &Observation, u: &Vector3<S>, intr: &Intrinsics) -> Result<S> {
    check_depth(u, 0)?;
    let r = whitened_residual(obs, u, intr);
    Ok(pseudo_huber(r.dot(&r), obs.kappa))
}

/// `∂/∂u ρ(‖L(π(u) − z)‖²) = 2 ρ'(s) Jπᵀ Lᵀ r`, written out by hand.
pub fn below_seam_gradient<S: Scalar>(obs: &Observation, u: &Vector3<S>, intr: &Intrinsics) -> Result<Vector3<S>> {
    check_depth(u, 0)?;
    let r = whitened_residual(obs, u, intr);
    let w = pseudo_huber_slope(r.dot(&r), obs.kappa).scale(2.0);
    let lt_r = obs.whitening.map(S::from_f64).transpose() * r;
    Ok(intr.project_jacobian(u).transpose() * lt_r * w)
}

fn reindex(e: Error, index: usize) -> Error {
    match e {
        Error::Depth { depth, .. } => Error::Depth { index, depth },
        other => other,
    }
}

pub fn nll_value<S: Scalar>(problem: &NLLProblem, delta: &Twist6<S>) -> Result<S> {
    nll_value_with(Fused, problem, delta)
}

/// `½ ξᵀΣ⁻¹ξ + Σᵢ ρ(‖Lᵢ(π(T xᵢ) − zᵢ)‖²)` at `T = T̄ Exp(δ)`.
pub fn nll_value_with<S: Scalar, B: Basis>(basis: B, problem: &NLLProblem, delta: &Twist6<S>) -> Result<S> {
    let t = problem.t_bar.cast::<S>().compose(&se3::exp_se3_with(basis, delta)?);
    let g = t.inverse().compose(&problem.prior.t_prior.cast());
    let xi = se3::log_se3_with(basis, &g)?.to_vector();
    let info = problem.prior.info.map(S::from_f64);
    let mut total = xi.dot(&(info * xi)).scale(0.5);
    for (i, o) in problem.obs.iter().enumerate() {
        let u = t.act(&o.landmark.map(S::from_f64));
        total += observation_cost(o, &u, &problem.intrinsics).map_err(|e| reindex(e, i))?;
    }
    Ok(total)
}

pub fn nll_grad<S: Scalar>(problem: &NLLProblem, delta: &Twist6<S>) -> Result<Twist6<S>> {
    nll_grad_with(Fused, problem, delta)
}

/// Gradient of [`nll_value_with`] in `δ`.
///
/// Prior seam: `−Ad_{G⁻¹}ᵀ Jr⁻¹(ξ)ᵀ Σ⁻¹ ξ` with `G = T⁻¹T_prior`, `ξ = Log G`.
/// Data seams: `J_actᵀ q` with `q` from [`below_seam_gradient`].
/// The body gradient is mapped back through `Jr(δ)ᵀ`.
pub fn nll_grad_with<S: Scalar, B: Basis>(basis: B, problem: &NLLProblem, delta: &Twist6<S>) -> Result<Twist6<S>> {
    let t = problem.t_bar.cast::<S>().compose(&se3::exp_se3_with(basis, delta)?);

    let g = t.inverse().compose(&problem.prior.t_prior.cast());
    let xi = se3::log_se3_with(basis, &g)?;
    let jr_inv = se3::jr_inv_se3_lifted(basis, &xi)?;
    let info = problem.prior.info.map(S::from_f64);
    let mut body: Vector6<S> = -(adjoint(&g.inverse()).transpose() * (jr_inv.transpose() * (info * xi.to_vector())));

    for (i, o) in problem.obs.iter().enumerate() {
        let x = o.landmark.map(S::from_f64);
        let u = t.act(&x);
        let q = below_seam_gradient(o, &u, &problem.intrinsics).map_err(|e| reindex(e, i))?;
        body += j_act(&t, &x).transpose() * q;
    }

    let jr = se3::jr_se3_with(basis, delta)?;
    Ok(Twist6::from_vector(&(jr.transpose() * body)))
}
