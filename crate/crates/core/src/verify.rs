//! Invariant suites runnable outside the test harness (`se3ad verify`).
//!
//! Each check reports a worst-case figure against a pinned tolerance.

use std::fmt;
use std::time::Instant;

use nalgebra::{Matrix3, Matrix6, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ad::{Dual6, Scalar, Seed};
use crate::basis::{closed_branch, eval_basis, taylor_branch, Fused, NaiveTheta, SBasisEval, BRANCH_THRESHOLD};
use crate::bench::{generate_problem, BenchConfig};
use crate::error::{Error, Result};
use crate::extract::{hessian_seeded, hessian_seeded_with, third_order_nested};
use crate::nll::{nll_grad, nll_value};
use crate::oracles::{bernoulli_jr_inv_se3, naive_seeded_hessian};
use crate::se3::{self, adjoint, j_act, Pose3, Twist6};
use crate::so3;

type N2 = Dual6<Dual6<f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Basis,
    So3,
    Se3,
    Nll,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basis" => Ok(Self::Basis),
            "so3" => Ok(Self::So3),
            "se3" => Ok(Self::Se3),
            "nll" => Ok(Self::Nll),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidArgument(format!("unknown suite '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub elapsed_s: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<44} worst {:.3e}  tol {:.1e}  {:.3}s",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.elapsed_s
        )
    }
}

/// Runs `f`, which returns the worst observed error, and compares it with `tol`.
/// An `Err` or NaN counts as failure.
fn check(name: &'static str, tol: f64, f: impl FnOnce() -> Result<f64>) -> Check {
    let t0 = Instant::now();
    let worst = f().unwrap_or(f64::INFINITY);
    Check { name, worst, tolerance: tol, passed: worst <= tol, elapsed_s: t0.elapsed().as_secs_f64() }
}

/// Boolean check: `worst` is 0 when `f` holds, 1 otherwise.
fn holds(name: &'static str, f: impl FnOnce() -> Result<bool>) -> Check {
    check(name, 0.0, || f().map(|ok| if ok { 0.0 } else { 1.0 }))
}

/// `max` that keeps NaN instead of discarding it.
fn worse(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn max_abs<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> f64 {
    m.iter().fold(0.0f64, |a, v| worse(a, v.abs()))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_vec(r: &mut ChaCha8Rng, scale: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| r.random_range(-1.0..1.0)) * scale
}

fn rand_twist(r: &mut ChaCha8Rng, rot: f64, trans: f64) -> Twist6<f64> {
    Twist6::new(rand_vec(r, rot), rand_vec(r, trans))
}

fn rand_pose(r: &mut ChaCha8Rng) -> Result<Pose3<f64>> {
    se3::exp_se3(&rand_twist(r, 1.5, 2.0))
}

fn pose_err(a: &Pose3<f64>, b: &Pose3<f64>) -> f64 {
    worse(max_abs(&(a.r - b.r)), max_abs(&(a.p - b.p)))
}

pub const GRID_POINTS: usize = 1000;

/// `1000` log-spaced points on `[1e-16, 9]`.
pub fn log_grid() -> impl Iterator<Item = f64> {
    let span = 16.0 + 9f64.log10();
    (0..GRID_POINTS).map(move |i| 10f64.powf(-16.0 + span * i as f64 / (GRID_POINTS - 1) as f64))
}

fn fields<S: Copy>(b: &SBasisEval<S>) -> [S; 7] {
    [b.a, b.b, b.c, b.d, b.d_tilde, b.beta_bar, b.beta_bar_s]
}

pub fn basis_suite() -> Vec<Check> {
    let mut out = vec![
        check("A + sC = 1 (relative)", 1e-12, || {
            let mut w = 0.0f64;
            for s in log_grid() {
                let b = eval_basis(s)?;
                w = worse(w, (b.a + s * b.c - 1.0).abs());
            }
            Ok(w)
        }),
        check("A^2 - 2B + sB^2 = 0", 1e-12, || {
            let mut w = 0.0f64;
            for s in log_grid() {
                let b = eval_basis(s)?;
                w = worse(w, (b.a * b.a - 2.0 * b.b + s * b.b * b.b).abs());
            }
            Ok(w)
        }),
        check("D = (1 - A/(2B))/s above threshold (rel)", 1e-12, || {
            let mut w = 0.0f64;
            for s in log_grid().filter(|&s| s > BRANCH_THRESHOLD) {
                let b = eval_basis(s)?;
                let d = (1.0 - b.a / (2.0 * b.b)) / s;
                w = worse(w, ((b.d - d) / d).abs());
            }
            Ok(w)
        }),
        check("beta_bar = 2 dD/ds (FD on D)", 1e-8, || {
            let h = 1e-4;
            let d = |s: f64| eval_basis(s).map(|b| b.d);
            let mut w = 0.0f64;
            for s in log_grid().filter(|&s| (s - BRANCH_THRESHOLD).abs() > 3.0 * h) {
                let slope = if s > h {
                    (d(s + h)? - d(s - h)?) / (2.0 * h)
                } else {
                    (-3.0 * d(s)? + 4.0 * d(s + h)? - d(s + 2.0 * h)?) / (2.0 * h)
                };
                w = worse(w, (eval_basis(s)?.beta_bar - 2.0 * slope).abs());
            }
            Ok(w)
        }),
        check("D_tilde = beta_bar (relative)", 1e-12, || {
            let mut w = 0.0f64;
            for s in log_grid() {
                let b = eval_basis(s)?;
                w = worse(w, ((b.d_tilde - b.beta_bar) / b.beta_bar).abs());
            }
            Ok(w)
        }),
    ];
    out.extend(continuity_checks());
    out.push(holds("values at s = 0", || {
        let b = eval_basis(0.0)?;
        Ok(b.a == 1.0 && b.b == 0.5 && b.c == 1.0 / 6.0 && b.d == 1.0 / 12.0 && b.beta_bar == 1.0 / 360.0)
    }));
    out.push(holds("Taylor third s-derivatives nonzero", || {
        type N3 = Dual6<N2>;
        let x = N3::seed_at(&[0.3, 0.0, 0.0, 0.0, 0.0, 0.0])[0];
        Ok(fields(&taylor_branch(x)).iter().all(|f| f.grad[0].grad[0].grad[0] != 0.0))
    }));
    out
}

/// Value, first and second `s`-derivatives of both branches on 20 points
/// straddling the threshold.
pub fn continuity_checks() -> Vec<Check> {
    let sweep = |order: usize| -> Result<f64> {
        let mut w = 0.0f64;
        for i in 0..20 {
            let s = BRANCH_THRESHOLD * (0.9 + 0.01 * i as f64);
            let x = N2::seed_at(&[s, 0.0, 0.0, 0.0, 0.0, 0.0])[0];
            let t = fields(&taylor_branch(x));
            let c = fields(&closed_branch(x));
            for (a, b) in t.iter().zip(&c) {
                let (ga, gb) = match order {
                    0 => (a.val.val, b.val.val),
                    1 => (a.grad[0].val, b.grad[0].val),
                    _ => (a.grad[0].grad[0], b.grad[0].grad[0]),
                };
                w = worse(w, (ga - gb).abs());
            }
        }
        Ok(w)
    };
    vec![
        check("branch continuity: values", 1e-12, || sweep(0)),
        check("branch continuity: first derivatives", 1e-9, || sweep(1)),
        check("branch continuity: second derivatives", 1e-9, || sweep(2)),
    ]
}

pub const GEOMETRY_SAMPLES: usize = 100;

pub fn so3_suite() -> Vec<Check> {
    vec![
        check("so3 Exp/Log roundtrip", 1e-10, || {
            let mut r = rng(101);
            let mut w = 0.0f64;
            for _ in 0..GEOMETRY_SAMPLES {
                let om = rand_vec(&mut r, 1.0).normalize() * r.random_range(1e-12..(std::f64::consts::PI - 0.1));
                let back = so3::log_so3(&so3::exp_so3(&om)?)?;
                w = worse(w, (back - om).amax());
            }
            Ok(w)
        }),
        check("so3 Jr Jr^-1 = I", 1e-12, || {
            let mut r = rng(102);
            let mut w = 0.0f64;
            for _ in 0..GEOMETRY_SAMPLES {
                let om = rand_vec(&mut r, 1.6);
                w = worse(w, max_abs(&(so3::jr_so3(&om)? * so3::jr_inv_so3(&om)? - Matrix3::identity())));
            }
            Ok(w)
        }),
        check("d Jr^-1 / d omega_m vs FD", 1e-7, || {
            let mut r = rng(103);
            let (h, mut w) = (1e-5, 0.0f64);
            for _ in 0..GEOMETRY_SAMPLES {
                let om = rand_vec(&mut r, 1.6);
                for m in 0..3 {
                    let mut e = Vector3::zeros();
                    e[m] = h;
                    let fd = (so3::jr_inv_so3(&(om + e))? - so3::jr_inv_so3(&(om - e))?) / (2.0 * h);
                    w = worse(w, max_abs(&(fd - so3::d_jr_inv_so3(&om, m)?)));
                }
            }
            Ok(w)
        }),
        holds("fused tensors finite at origin (Dual6, nested)", || {
            let sd = Dual6::<f64>::seed_identity();
            let sn = N2::seed_identity();
            let d = Vector3::new(sd[0], sd[1], sd[2]);
            let n = Vector3::new(sn[0], sn[1], sn[2]);
            let mut ok = so3::jr_inv_so3(&d)?.iter().all(Scalar::all_finite)
                && so3::jr_inv_so3(&n)?.iter().all(Scalar::all_finite);
            for m in 0..3 {
                ok &= so3::d_jr_inv_so3(&d, m)?.iter().all(Scalar::all_finite);
                ok &= so3::d_jr_inv_so3(&n, m)?.iter().all(Scalar::all_finite);
            }
            Ok(ok)
        }),
        holds("naive tensor has NaN at origin (Dual6)", || {
            let s = Dual6::<f64>::seed_identity();
            let d = Vector3::new(s[0], s[1], s[2]);
            let mut nan = false;
            for m in 0..3 {
                nan |= !so3::d_jr_inv_so3_with(NaiveTheta, &d, m)?.iter().all(Scalar::all_finite);
            }
            Ok(nan)
        }),
    ]
}

pub const BERNOULLI_SAMPLES: usize = 50;
pub const BERNOULLI_POWER: usize = 8;

pub fn bernoulli_check() -> Check {
    check("Jr^-1 vs 8-power Bernoulli ad-series", 1e-9, || {
        let mut r = rng(201);
        let mut w = 0.0f64;
        for _ in 0..BERNOULLI_SAMPLES {
            let raw = rand_twist(&mut r, 1.0, 1.0).to_vector();
            let xi = Twist6::from_vector(&(raw.normalize() * r.random_range(0.0..=0.5)));
            w = worse(w, max_abs(&(bernoulli_jr_inv_se3(&xi, BERNOULLI_POWER)? - se3::jr_inv_se3(&xi)?)));
        }
        Ok(w)
    })
}

pub fn se3_suite() -> Vec<Check> {
    vec![
        check("se3 Exp/Log roundtrip", 1e-10, || {
            let mut r = rng(301);
            let mut w = 0.0f64;
            for _ in 0..GEOMETRY_SAMPLES {
                let t = rand_pose(&mut r)?;
                w = worse(w, pose_err(&t, &se3::exp_se3(&se3::log_se3(&t)?)?));
            }
            Ok(w)
        }),
        check("se3 Jr Jr^-1 = I", 1e-12, || {
            let mut r = rng(302);
            let mut w = 0.0f64;
            for _ in 0..GEOMETRY_SAMPLES {
                let xi = rand_twist(&mut r, 1.6, 2.0);
                w = worse(w, max_abs(&(se3::jr_se3(&xi)? * se3::jr_inv_se3(&xi)? - Matrix6::identity())));
            }
            Ok(w)
        }),
        check("adjoint homomorphism (relative)", 1e-12, || {
            let mut r = rng(303);
            let mut w = 0.0f64;
            for _ in 0..GEOMETRY_SAMPLES {
                let (a, b) = (rand_pose(&mut r)?, rand_pose(&mut r)?);
                let lhs = adjoint(&a.compose(&b));
                w = worse(w, max_abs(&(lhs - adjoint(&a) * adjoint(&b))) / max_abs(&lhs).max(1.0));
            }
            Ok(w)
        }),
        check("j_act vs FD", 1e-7, || {
            let mut r = rng(304);
            let (h, mut w) = (1e-5, 0.0f64);
            for _ in 0..GEOMETRY_SAMPLES {
                let t = rand_pose(&mut r)?;
                let x = rand_vec(&mut r, 3.0);
                let j = j_act(&t, &x);
                for k in 0..6 {
                    let mut a = [0.0; 6];
                    a[k] = h;
                    let pp = t.compose(&se3::exp_se3(&Twist6::from_array(a))?).act(&x);
                    a[k] = -h;
                    let pm = t.compose(&se3::exp_se3(&Twist6::from_array(a))?).act(&x);
                    w = worse(w, ((pp - pm) / (2.0 * h) - j.column(k)).amax());
                }
            }
            Ok(w)
        }),
        check("d Q~r / d omega_m vs FD", 1e-7, || {
            let mut r = rng(305);
            let (h, mut w) = (1e-5, 0.0f64);
            for _ in 0..GEOMETRY_SAMPLES {
                let om = rand_vec(&mut r, 1.6);
                let t = rand_vec(&mut r, 2.0);
                for m in 0..3 {
                    let mut e = Vector3::zeros();
                    e[m] = h;
                    let fd = (se3::q_tilde_r(&(om + e), &t)? - se3::q_tilde_r(&(om - e), &t)?) / (2.0 * h);
                    w = worse(w, max_abs(&(fd - se3::d_q_tilde_r(&om, &t, m)?)));
                }
            }
            Ok(w)
        }),
        bernoulli_check(),
    ]
}

fn random_problem(seed: u64) -> Result<crate::nll::NLLProblem> {
    let cfg = BenchConfig { seed, n_landmarks: 3 + (seed % 5) as usize, ..BenchConfig::default() };
    Ok(generate_problem(&cfg)?.problem)
}

pub fn nll_suite() -> Vec<Check> {
    vec![
        check("nll_grad vs FD of value (relative)", 1e-5, || {
            let mut r = rng(401);
            let mut w = 0.0f64;
            for seed in 0..20 {
                let p = random_problem(1000 + seed)?;
                let raw = rand_twist(&mut r, 1.0, 1.0).to_vector();
                let d = raw.normalize() * r.random_range(0.0..0.1);
                let g = nll_grad(&p, &Twist6::from_vector(&d))?.to_vector();
                let h = 1e-6;
                let fd = nalgebra::Vector6::from_fn(|k, _| {
                    let (mut a, mut b) = (d, d);
                    a[k] += h;
                    b[k] -= h;
                    let fa = nll_value(&p, &Twist6::from_vector(&a)).unwrap_or(f64::NAN);
                    let fb = nll_value(&p, &Twist6::from_vector(&b)).unwrap_or(f64::NAN);
                    (fa - fb) / (2.0 * h)
                });
                w = worse(w, (g - fd).norm() / g.norm().max(1.0));
            }
            Ok(w)
        }),
        check("seeded Hessian symmetry (50 problems)", 1e-10, || {
            let mut w = 0.0f64;
            for seed in 0..50 {
                w = worse(w, hessian_seeded(&random_problem(2000 + seed)?)?.symmetry_defect);
            }
            Ok(w)
        }),
        check("prior-only Hessian = I at prior mean", 1e-10, || {
            let mut p = random_problem(3000)?;
            p.obs.clear();
            p.prior.info = Matrix6::identity();
            Ok(max_abs(&(hessian_seeded(&p)?.hess - Matrix6::identity())))
        }),
        nan_lock_check(),
        third_order_check(),
    ]
}

/// Naive basis NaN and fused basis finite on the same problem at `ω = 0`.
pub fn nan_lock_check() -> Check {
    holds("NaN lock: naive NaN, fused finite", || {
        let p = generate_problem(&BenchConfig::default())?.problem;
        let naive = naive_seeded_hessian(&p)?;
        let fused = hessian_seeded_with(&p, Fused)?;
        Ok(naive.nan_count() > 0 && fused.hess.iter().all(|v| v.is_finite()))
    })
}

/// `t3` against central differences of the seeded Hessian in `δ`.
pub fn third_order_check() -> Check {
    check("t3 vs FD of seeded Hessian (relative)", 1e-5, || {
        let p = generate_problem(&BenchConfig::default())?.problem;
        let t = third_order_nested(&p)?;
        let h = 1e-5;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in 0..6 {
            let mut a = [0.0; 6];
            a[k] = h;
            let hp = shifted_hessian(&p, &a)?;
            a[k] = -h;
            let hm = shifted_hessian(&p, &a)?;
            let fd = (hp - hm) / (2.0 * h);
            for i in 0..6 {
                for j in 0..6 {
                    num += (fd[(i, j)] - t.t3[i][j][k]).powi(2);
                    den += t.t3[i][j][k].powi(2);
                }
            }
        }
        Ok((num / den).sqrt())
    })
}

/// Seeded Hessian of the gradient field at `δ₀`, using `seed_at`.
pub fn shifted_hessian(p: &crate::nll::NLLProblem, at: &[f64; 6]) -> Result<Matrix6<f64>> {
    let out = nll_grad(p, &Twist6::from_array(Dual6::<f64>::seed_at(at)))?.to_array();
    Ok(Matrix6::from_fn(|i, j| out[i].grad[j]))
}

pub fn run(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Basis => basis_suite(),
        Suite::So3 => so3_suite(),
        Suite::Se3 => se3_suite(),
        Suite::Nll => nll_suite(),
        Suite::All => [basis_suite(), so3_suite(), se3_suite(), nll_suite()].concat(),
    }
}
