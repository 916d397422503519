//! Scalar-generic SE(3) primitives and pose NLLs whose one gradient body
//! yields gradients, exact Hessians and third-order tensors when evaluated
//! with plain, dual and nested-dual scalars.
//!
//! ```
//! use se3ad::{bench, extract};
//!
//! let problem = bench::generate_problem(&bench::BenchConfig::default()).unwrap().problem;
//! let h = extract::hessian_seeded(&problem).unwrap();
//! assert!(h.symmetry_defect < 1e-10);
//! ```

pub mod ad;
pub mod basis;
pub mod bench;
pub mod error;
pub mod extract;
pub mod nll;
pub mod oracles;
pub mod se3;
pub mod so3;
pub mod verify;

pub use ad::{Dual6, Scalar, Seed, TangentMap};
pub use basis::{Basis, Fused, NaiveTheta, SBasisEval};
pub use error::{Error, Result};
pub use extract::{hessian_seeded, third_order_nested, HessianResult, ThirdOrderResult};
pub use nll::{nll_grad, nll_value, Intrinsics, NLLProblem, Observation, PriorSpec};
pub use se3::{Pose3, Twist6};

/// First-order forward dual over `f64`.
pub type Dual6f = Dual6<f64>;
/// One level of nesting: second-order payload in `x.grad[j].grad[k]`.
pub type NestedDual6 = Dual6<Dual6<f64>>;

pub type Pose3d = Pose3<f64>;
pub type Pose3f = Pose3<f32>;
pub type Twist6d = Twist6<f64>;
pub type Twist6f = Twist6<f32>;
