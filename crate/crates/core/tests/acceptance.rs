//! Acceptance criteria, one line each. Runs sequentially so the timing
//! comparison is not disturbed by sibling tests.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Matrix6;
use se3ad::bench::{generate_problem, row_hessian, run_rows_on, BenchConfig, RowReport, ALL_ROWS};
use se3ad::extract::{third_order_of, GradientField};
use se3ad::verify::{self, Check};
use se3ad::{Result, Scalar, Twist6};

const ROW7_MAX: f64 = 1e-13;
const FD_GRADIENT_BAND: (f64, f64) = (1e-8, 1e-4);
const FD_VALUE_BAND: (f64, f64) = (1e-5, 1e-1);

struct Outcome {
    id: u8,
    title: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    budget: Option<Duration>,
}

fn run(id: u8, title: &'static str, budget: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t0 = Instant::now();
    let (ok, detail) = f();
    let elapsed = t0.elapsed();
    let in_time = budget.is_none_or(|b| elapsed < b);
    Outcome { id, title, passed: ok && in_time, detail, elapsed, budget }
}

fn from_checks(checks: &[Check]) -> (bool, String) {
    let ok = checks.iter().all(|c| c.passed);
    let detail = checks
        .iter()
        .map(|c| format!("{}={:.1e}{}", c.name, c.worst, if c.passed { "" } else { "(!)" }))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn in_band(v: Option<f64>, (lo, hi): (f64, f64)) -> bool {
    v.is_some_and(|e| (lo..=hi).contains(&e))
}

fn row(rows: &[RowReport], id: u8) -> &RowReport {
    rows.iter().find(|r| r.row_id == id).expect("row present")
}

fn fmt_err(r: &RowReport) -> String {
    r.rel_err_vs_oracle.map(|e| format!("{e:.2e}")).unwrap_or_else(|| "NaN".into())
}

struct Quadratic(Matrix6<f64>);

impl GradientField for Quadratic {
    fn eval<S: Scalar>(&self, d: &Twist6<S>) -> Result<Twist6<S>> {
        Ok(Twist6::from_vector(&(self.0.map(S::from_f64) * d.to_vector())))
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let cfg = BenchConfig::default();
    let mut out = Vec::new();

    out.push(run(1, "scalar identities on 1000-point grid", Some(secs(1)), || {
        from_checks(&verify::basis_suite()[..5])
    }));

    out.push(run(2, "branch continuity to second derivative", Some(secs(1)), || {
        from_checks(&verify::continuity_checks())
    }));

    out.push(run(3, "geometry suite", Some(secs(5)), || {
        let mut checks = verify::so3_suite()[..3].to_vec();
        checks.extend(verify::se3_suite()[..5].iter().cloned());
        from_checks(&checks)
    }));

    out.push(run(4, "Bernoulli ad-series cross-check", Some(secs(1)), || from_checks(&[verify::bernoulli_check()])));

    out.push(run(5, "Table-1 accuracy (seed 42, 5 landmarks)", Some(secs(30)), || {
        let quick = BenchConfig { repeats: 3, warmup: 0, ..cfg.clone() };
        let problem = match generate_problem(&quick) {
            Ok(g) => g.problem,
            Err(e) => return (false, e.to_string()),
        };
        let rows = match run_rows_on(&problem, &quick, &ALL_ROWS) {
            Ok((rows, _)) => rows,
            Err(e) => return (false, e.to_string()),
        };
        let (r1, r2, r3, r6, r7) = (row(&rows, 1), row(&rows, 2), row(&rows, 3), row(&rows, 6), row(&rows, 7));
        let ok = r7.rel_err_vs_oracle.is_some_and(|e| e < ROW7_MAX)
            && in_band(r2.rel_err_vs_oracle, FD_GRADIENT_BAND)
            && in_band(r3.rel_err_vs_oracle, FD_GRADIENT_BAND)
            && in_band(r1.rel_err_vs_oracle, FD_VALUE_BAND)
            && r6.nan_count >= 1;
        let detail = format!(
            "row1 {} row2 {} row3 {} row6 NaN={} row7 {}",
            fmt_err(r1), fmt_err(r2), fmt_err(r3), r6.nan_count, fmt_err(r7)
        );
        (ok, detail)
    }));

    out.push(run(6, "row 7 faster than row 2 (median)", None, || {
        let problem = match generate_problem(&cfg) {
            Ok(g) => g.problem,
            Err(e) => return (false, e.to_string()),
        };
        let time = |r: u8| se3ad::bench::median_time_ns(cfg.repeats, cfg.warmup, || row_hessian(&problem, &cfg, r));
        let (t2, t7) = (time(2), time(7));
        (t7 < t2, format!("row2 {:.0} ns, row7 {:.0} ns, ratio {:.2}x", t2, t7, t2 / t7))
    }));

    out.push(run(7, "third-order tensor", Some(secs(10)), || {
        let (fd_ok, fd_detail) = from_checks(&[verify::third_order_check()]);
        let m = Matrix6::from_fn(|i, j| (1 + i + j) as f64 + if i == j { 6.0 } else { 0.0 });
        let zero = third_order_of(&Quadratic(m)).is_ok_and(|t| t.t3.iter().flatten().flatten().all(|&v| v == 0.0));
        (fd_ok && zero, format!("{fd_detail}; quadratic t3 exactly zero: {zero}"))
    }));

    out.push(run(8, "NaN regression lock", None, || from_checks(&[verify::nan_lock_check()])));

    let mut failed = 0;
    for o in &out {
        if !o.passed {
            failed += 1;
        }
        let budget = o.budget.map(|b| format!(" / {}s", b.as_secs())).unwrap_or_default();
        println!(
            "criterion {} {:<40} {}  [{:.2}s{}]  {}",
            o.id,
            o.title,
            if o.passed { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            budget,
            o.detail
        );
    }
    println!("{} of {} criteria passed", out.len() - failed, out.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
