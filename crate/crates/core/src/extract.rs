//! Derivative extraction from one scalar-generic gradient body.
//!
//! * plain `f64` → gradient
//! * seeded [`Dual6`] → gradient and Hessian (`hess[i][j] = ∂gᵢ/∂δⱼ`)
//! * seeded nested dual → additionally `t3[i][j][k] = ∂²gᵢ/∂δⱼ∂δₖ`
//!
//! All at `δ = 0`.

use nalgebra::{Matrix6, Vector6};

use crate::ad::{Dual6, Scalar, Seed};
use crate::basis::{Basis, Fused};
use crate::error::{Error, Result};
use crate::nll::{nll_grad_with, NLLProblem};
use crate::se3::Twist6;

/// A 6-vector field written once over any [`Scalar`].
pub trait GradientField {
    fn eval<S: Scalar>(&self, delta: &Twist6<S>) -> Result<Twist6<S>>;
}

/// The analytical NLL gradient under a chosen basis.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticGradient<'a, B: Basis = Fused> {
    pub problem: &'a NLLProblem,
    pub basis: B,
}

impl<'a> AnalyticGradient<'a, Fused> {
    pub fn new(problem: &'a NLLProblem) -> Self {
        Self { problem, basis: Fused }
    }
}

impl<B: Basis> GradientField for AnalyticGradient<'_, B> {
    fn eval<S: Scalar>(&self, delta: &Twist6<S>) -> Result<Twist6<S>> {
        nll_grad_with(self.basis, self.problem, delta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HessianResult {
    pub grad: Vector6<f64>,
    pub hess: Matrix6<f64>,
    /// `‖H − Hᵀ‖_F / ‖H‖_F`, published rather than symmetrized away.
    pub symmetry_defect: f64,
}

pub type Tensor3 = [[[f64; 6]; 6]; 6];

#[derive(Clone, Debug, PartialEq)]
pub struct ThirdOrderResult {
    pub grad: Vector6<f64>,
    pub hess: Matrix6<f64>,
    pub t3: Tensor3,
    /// Max relative asymmetry of `t3` in its last two indices.
    pub symmetry_defect: f64,
}

pub fn relative_asymmetry(h: &Matrix6<f64>) -> f64 {
    let n = h.norm();
    if n == 0.0 {
        0.0
    } else {
        (h - h.transpose()).norm() / n
    }
}

/// Seeded first-order pass without the NaN check.
pub fn seeded_raw<G: GradientField>(field: &G) -> Result<(Vector6<f64>, Matrix6<f64>)> {
    let out = field.eval(&Twist6::from_array(Dual6::<f64>::seed_identity()))?.to_array();
    let grad = Vector6::from_fn(|i, _| out[i].val);
    let hess = Matrix6::from_fn(|i, j| out[i].grad[j]);
    Ok((grad, hess))
}

fn count_non_finite<'a>(it: impl IntoIterator<Item = &'a f64>) -> usize {
    it.into_iter().filter(|v| !v.is_finite()).count()
}

pub fn hessian_of<G: GradientField>(field: &G) -> Result<HessianResult> {
    let (grad, hess) = seeded_raw(field)?;
    let count = count_non_finite(grad.iter().chain(hess.iter()));
    if count > 0 {
        return Err(Error::NonFinite { count });
    }
    Ok(HessianResult { grad, hess, symmetry_defect: relative_asymmetry(&hess) })
}

/// One seeded forward pass of the analytical gradient.
pub fn hessian_seeded(problem: &NLLProblem) -> Result<HessianResult> {
    hessian_of(&AnalyticGradient::new(problem))
}

pub fn hessian_seeded_with<B: Basis>(problem: &NLLProblem, basis: B) -> Result<HessianResult> {
    hessian_of(&AnalyticGradient { problem, basis })
}

pub fn third_order_of<G: GradientField>(field: &G) -> Result<ThirdOrderResult> {
    let out = field.eval(&Twist6::from_array(Dual6::<Dual6<f64>>::seed_identity()))?.to_array();
    let grad = Vector6::from_fn(|i, _| out[i].val.val);
    let hess = Matrix6::from_fn(|i, j| out[i].grad[j].val);
    let t3: Tensor3 = std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| out[i].grad[j].grad[k])));
    let count = count_non_finite(grad.iter().chain(hess.iter()).chain(t3.iter().flatten().flatten()));
    if count > 0 {
        return Err(Error::NonFinite { count });
    }
    let mut defect = 0.0f64;
    for slab in &t3 {
        let m = Matrix6::from_fn(|j, k| slab[j][k]);
        defect = defect.max(relative_asymmetry(&m));
    }
    Ok(ThirdOrderResult { grad, hess, t3, symmetry_defect: defect })
}

pub fn third_order_nested(problem: &NLLProblem) -> Result<ThirdOrderResult> {
    third_order_of(&AnalyticGradient::new(problem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nll::{nll_grad, PriorSpec};
    use crate::se3::exp_se3;
    use nalgebra::Vector3;

    struct Linear(Matrix6<f64>);

    impl GradientField for Linear {
        fn eval<S: Scalar>(&self, d: &Twist6<S>) -> Result<Twist6<S>> {
            Ok(Twist6::from_vector(&(self.0.map(S::from_f64) * d.to_vector())))
        }
    }

    // g_0 = δ_a δ_b δ_c.
    struct Cubic(usize, usize, usize);

    impl GradientField for Cubic {
        fn eval<S: Scalar>(&self, d: &Twist6<S>) -> Result<Twist6<S>> {
            let x = d.to_array();
            let mut out = [S::zero(); 6];
            out[0] = x[self.0] * x[self.1] * x[self.2];
            Ok(Twist6::from_array(out))
        }
    }

    // g_2 = (δ_0 + 1) δ_3 δ_5, g_4 = δ_1² (δ_2 + 1).
    struct Shifted;

    impl GradientField for Shifted {
        fn eval<S: Scalar>(&self, d: &Twist6<S>) -> Result<Twist6<S>> {
            let x = d.to_array();
            let one = S::one();
            let mut out = [S::zero(); 6];
            out[2] = (x[0] + one) * x[3] * x[5];
            out[4] = x[1] * x[1] * (x[2] + one);
            Ok(Twist6::from_array(out))
        }
    }

    struct NanField;

    impl GradientField for NanField {
        fn eval<S: Scalar>(&self, d: &Twist6<S>) -> Result<Twist6<S>> {
            let x = d.to_array();
            Ok(Twist6::from_array(x.map(|v| (v * v).sqrt())))
        }
    }

    fn prior_only(info: Matrix6<f64>) -> NLLProblem {
        let t = exp_se3(&Twist6::new(Vector3::new(0.3, -0.1, 0.2), Vector3::new(1.0, 0.5, -2.0))).unwrap();
        NLLProblem {
            t_bar: t,
            prior: PriorSpec::new(t, info).unwrap(),
            obs: vec![],
            intrinsics: Default::default(),
        }
    }

    #[test]
    fn linear_field_gives_its_matrix_and_zero_tensor() {
        let m = Matrix6::from_fn(|i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let h = hessian_of(&Linear(m)).unwrap();
        assert_eq!(h.hess, m);
        assert_eq!(h.grad, Vector6::zeros());
        let t = third_order_of(&Linear(m)).unwrap();
        assert_eq!(t.hess, m);
        assert!(t.t3.iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn cubic_monomial_tensor() {
        let t = third_order_of(&Cubic(1, 1, 4)).unwrap();
        // every second derivative of a cubic monomial keeps a factor of δ
        assert!(t.t3.iter().flatten().flatten().all(|&v| v == 0.0));

        let t = third_order_of(&Shifted).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let want2 = if (j, k) == (3, 5) || (j, k) == (5, 3) { 1.0 } else { 0.0 };
                let want4 = if (j, k) == (1, 1) { 2.0 } else { 0.0 };
                assert_eq!(t.t3[2][j][k], want2);
                assert_eq!(t.t3[4][j][k], want4);
                assert_eq!(t.t3[0][j][k], 0.0);
            }
        }
        assert_eq!(t.symmetry_defect, 0.0);
    }

    #[test]
    fn prior_only_identity_information_gives_identity_hessian() {
        let p = prior_only(Matrix6::identity());
        let h = hessian_seeded(&p).unwrap();
        assert!((h.hess - Matrix6::identity()).norm() < 1e-10);
        assert_eq!(h.grad, Vector6::zeros());

        let info = Matrix6::from_fn(|i, j| if i == j { 2.0 + i as f64 } else { 0.1 });
        let h = hessian_seeded(&prior_only(info)).unwrap();
        assert!((h.hess - info).norm() < 1e-10 * info.norm());
    }

    #[test]
    fn seeded_gradient_is_bit_identical_to_plain() {
        let mut p = prior_only(Matrix6::identity());
        p.prior.t_prior = p.t_bar.compose(&exp_se3(&Twist6::new(Vector3::new(0.1, 0.0, -0.2), Vector3::new(0.3, 0.1, 0.0))).unwrap());
        let h = hessian_seeded(&p).unwrap();
        let g = nll_grad(&p, &Twist6::<f64>::zero()).unwrap().to_vector();
        for k in 0..6 {
            assert_eq!(h.grad[k].to_bits(), g[k].to_bits());
        }
        assert!(h.symmetry_defect < 1e-10);
    }

    #[test]
    fn non_finite_is_reported() {
        assert_eq!(hessian_of(&NanField), Err(Error::NonFinite { count: 36 }));
        assert!(matches!(third_order_of(&NanField), Err(Error::NonFinite { .. })));
    }
}
