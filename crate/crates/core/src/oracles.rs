//! Reference derivative paths for validation. None of these call
//! [`nll_grad`](crate::nll::nll_grad): they work from the value body, from
//! finite differences, or from the series definition of `Jr⁻¹`.

use nalgebra::{Matrix6, Vector6};

use crate::ad::{Dual6, Seed};
use crate::basis::{Basis, NaiveTheta};
use crate::error::{Error, Result};
use crate::extract::{seeded_raw, AnalyticGradient};
use crate::nll::{nll_value_with, NLLProblem};
use crate::se3::{ad_algebra, Twist6};

/// Default step for value-level second differences. Deliberately in the
/// truncation-dominated regime; the rounding/truncation optimum is near 1e-4.
pub const VALUE_FD_STEP: f64 = 1e-2;
/// Default step for central differences of a gradient. The optimum is near 1e-6.
pub const GRADIENT_FD_STEP: f64 = 1e-4;

/// Largest `‖ξ‖` accepted by [`bernoulli_jr_inv_se3`].
pub const BERNOULLI_MAX_NORM: f64 = 1.5;

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {step}")))
    }
}

fn shifted(base: &[f64; 6], moves: &[(usize, f64)]) -> [f64; 6] {
    let mut x = *base;
    for &(k, h) in moves {
        x[k] += h;
    }
    x
}

/// Central second differences of a scalar function around `0`.
///
/// Diagonal `(f₊ − 2f₀ + f₋)/h²`, off-diagonal the four-point
/// `(f₊₊ − f₊₋ − f₋₊ + f₋₋)/(4h²)`.
pub fn fd_hessian_of_value_fn<F>(f: F, step: f64) -> Result<Matrix6<f64>>
where
    F: Fn(&[f64; 6]) -> Result<f64>,
{
    check_step(step)?;
    let h = step;
    let o = [0.0; 6];
    let f0 = f(&o)?;
    let mut out = Matrix6::zeros();
    for i in 0..6 {
        let fp = f(&shifted(&o, &[(i, h)]))?;
        let fm = f(&shifted(&o, &[(i, -h)]))?;
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let pp = f(&shifted(&o, &[(i, h), (j, h)]))?;
            let pm = f(&shifted(&o, &[(i, h), (j, -h)]))?;
            let mp = f(&shifted(&o, &[(i, -h), (j, h)]))?;
            let mm = f(&shifted(&o, &[(i, -h), (j, -h)]))?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

pub fn fd_hessian_of_value(problem: &NLLProblem, step: f64) -> Result<Matrix6<f64>> {
    fd_hessian_of_value_fn(|d| nll_value_with(crate::basis::Fused, problem, &Twist6::from_array(*d)), step)
}

/// Central differences of a 6-vector field around `0`; `out[(i, j)] = ∂gᵢ/∂δⱼ`.
pub fn fd_hessian_of_gradient<F>(grad: F, step: f64) -> Result<Matrix6<f64>>
where
    F: Fn(&[f64; 6]) -> Result<Vector6<f64>>,
{
    check_step(step)?;
    let o = [0.0; 6];
    let mut out = Matrix6::zeros();
    for j in 0..6 {
        let gp = grad(&shifted(&o, &[(j, step)]))?;
        let gm = grad(&shifted(&o, &[(j, -step)]))?;
        out.set_column(j, &((gp - gm) / (2.0 * step)));
    }
    Ok(out)
}

/// Gradient of the value body at `δ` by forward seeding.
pub fn ad_traced_gradient<B: Basis>(problem: &NLLProblem, basis: B, delta: &[f64; 6]) -> Result<Vector6<f64>> {
    let v = nll_value_with(basis, problem, &Twist6::from_array(Dual6::<f64>::seed_at(delta)))?;
    Ok(Vector6::from_column_slice(&v.grad))
}

/// Value-level Hessian at `δ = 0` from one nested-dual pass.
pub fn nested_value_hessian<B: Basis>(problem: &NLLProblem, basis: B) -> Result<Matrix6<f64>> {
    let v = nll_value_with(basis, problem, &Twist6::from_array(Dual6::<Dual6<f64>>::seed_identity()))?;
    Ok(Matrix6::from_fn(|j, k| v.grad[j].grad[k]))
}

/// Outcome of the seeded analytical gradient under the θ-quotient basis.
#[derive(Clone, Debug, PartialEq)]
pub struct NanReport {
    pub hess: Matrix6<f64>,
    /// `(row, col)` of every non-finite Hessian entry.
    pub nan_entries: Vec<(usize, usize)>,
}

impl NanReport {
    pub fn nan_count(&self) -> usize {
        self.nan_entries.len()
    }
}

/// Seeded analytical gradient with [`NaiveTheta`]. A NaN is an observation
/// here, not an error.
pub fn naive_seeded_hessian(problem: &NLLProblem) -> Result<NanReport> {
    let (_, hess) = seeded_raw(&AnalyticGradient { problem, basis: NaiveTheta })?;
    let nan_entries = (0..6)
        .flat_map(|i| (0..6).map(move |j| (i, j)))
        .filter(|&(i, j)| !hess[(i, j)].is_finite())
        .collect();
    Ok(NanReport { hess, nan_entries })
}

/// Bernoulli numbers `B₀..=B_n` with the `B₁ = +½` convention.
pub fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut b = vec![0.0f64; n + 1];
    b[0] = 1.0;
    for m in 1..=n {
        // Σ_{k<m+1} C(m+1, k) B_k = 0
        let mut acc = 0.0;
        let mut binom = 1.0;
        for (k, bk) in b.iter().enumerate().take(m) {
            acc += binom * bk;
            binom = binom * (m + 1 - k) as f64 / (k + 1) as f64;
        }
        b[m] = -acc / (m + 1) as f64;
    }
    if n >= 1 {
        b[1] = 0.5;
    }
    b
}

/// `Jr⁻¹(ξ) ≈ Σ_{n=0}^{max_power} Bₙ/n! ad_ξⁿ`.
pub fn bernoulli_jr_inv_se3(xi: &Twist6<f64>, max_power: usize) -> Result<Matrix6<f64>> {
    let norm = xi.to_vector().norm();
    if !(norm <= BERNOULLI_MAX_NORM) {
        return Err(Error::Domain { what: "bernoulli_jr_inv_se3", value: norm });
    }
    let ad = ad_algebra(xi);
    let bern = bernoulli_numbers(max_power);
    let mut out = Matrix6::identity();
    let mut power = Matrix6::identity();
    let mut fact = 1.0;
    for (n, bn) in bern.iter().enumerate().skip(1) {
        power *= ad;
        fact *= n as f64;
        out += power * (bn / fact);
    }
    Ok(out)
}
