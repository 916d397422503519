//! Benchmark harness: synthetic PnP-style problem generation, the seven
//! Hessian paths, timing, and report formatting.

use std::fmt::Write as _;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::{Matrix6, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{Fused, NaiveTheta};
use crate::error::{Error, Result};
use crate::extract::hessian_seeded;
use crate::nll::{nll_grad, Intrinsics, NLLProblem, Observation, PriorSpec, DEFAULT_KAPPA, DEPTH_GUARD};
use crate::oracles::{
    ad_traced_gradient, fd_hessian_of_gradient, fd_hessian_of_value, naive_seeded_hessian, nested_value_hessian,
    GRADIENT_FD_STEP, VALUE_FD_STEP,
};
use crate::se3::{exp_se3, Pose3, Twist6};

/// Attempts per landmark before generation gives up.
pub const MAX_RETRIES: usize = 100;

pub const ALL_ROWS: [u8; 7] = [1, 2, 3, 4, 5, 6, 7];

/// Fixed landmark/measurement lists that replace the random draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitProblem {
    pub landmarks: Vec<[f64; 3]>,
    pub measurements: Vec<[f64; 2]>,
    /// Prior mean as a twist `[ω; t]`; identity when absent.
    #[serde(default)]
    pub prior_twist: Option<[f64; 6]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub n_landmarks: usize,
    pub kappa: f64,
    pub prior_info_diag: [f64; 6],
    /// Pixel noise added to the measurements; also the whitening scale.
    pub noise_sigma: f64,
    pub repeats: usize,
    pub warmup: usize,
    /// Step of the value-level second differences (row 1).
    pub value_fd_step: f64,
    /// Step of the gradient central differences (rows 2 and 3).
    pub gradient_fd_step: f64,
    pub intrinsics: Intrinsics,
    pub problem: Option<ExplicitProblem>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_landmarks: 5,
            kappa: DEFAULT_KAPPA,
            prior_info_diag: [100.0, 100.0, 100.0, 25.0, 25.0, 25.0],
            noise_sigma: 1.0,
            repeats: 21,
            warmup: 3,
            value_fd_step: VALUE_FD_STEP,
            gradient_fd_step: GRADIENT_FD_STEP,
            intrinsics: Intrinsics::default(),
            problem: None,
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_landmarks < 1 {
            return bad("n_landmarks must be at least 1".into());
        }
        if self.repeats < 3 {
            return bad(format!("repeats must be at least 3, got {}", self.repeats));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        if self.prior_info_diag.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("prior_info_diag entries must be positive".into());
        }
        for (name, h) in [("value_fd_step", self.value_fd_step), ("gradient_fd_step", self.gradient_fd_step)] {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("{name} must be positive, got {h}"));
            }
        }
        let i = &self.intrinsics;
        if !(i.fx > 0.0 && i.fy > 0.0) {
            return bad("focal lengths must be positive".into());
        }
        if let Some(p) = &self.problem {
            if p.landmarks.len() != p.measurements.len() || p.landmarks.is_empty() {
                return bad("explicit problem needs equally many (>0) landmarks and measurements".into());
            }
        }
        Ok(())
    }

    fn whitening_sigma(&self) -> f64 {
        if self.noise_sigma > 0.0 {
            self.noise_sigma
        } else {
            1.0
        }
    }
}

fn ball_sample(rng: &mut ChaCha8Rng, radius: f64) -> Vector3<f64> {
    let dir = Vector3::from_fn(|_, _| StandardNormal.sample(rng)).normalize();
    dir * radius * rng.random::<f64>().cbrt()
}

/// The benchmark problem plus the pose used to synthesize its measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedProblem {
    pub problem: NLLProblem,
    pub t_true: Pose3<f64>,
}

/// Deterministic in `config.seed`. `T̄` is the prior mean, so the prior seam
/// starts at `ξ = 0`.
pub fn generate_problem(config: &BenchConfig) -> Result<GeneratedProblem> {
    config.validate()?;
    let intr = config.intrinsics;
    let sigma = config.whitening_sigma();
    let info = config.prior_info_diag;

    if let Some(ex) = &config.problem {
        let t_prior = exp_se3(&Twist6::from_array(ex.prior_twist.unwrap_or([0.0; 6])))?;
        let obs = ex
            .landmarks
            .iter()
            .zip(&ex.measurements)
            .map(|(x, z)| Observation::isotropic(Vector3::from(*x), Vector2::from(*z), sigma, config.kappa))
            .collect::<Result<Vec<_>>>()?;
        let problem = NLLProblem { t_bar: t_prior, prior: PriorSpec::diagonal(t_prior, info)?, obs, intrinsics: intr };
        problem.validate()?;
        return Ok(GeneratedProblem { problem, t_true: t_prior });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let t_prior = exp_se3(&Twist6::new(ball_sample(&mut rng, 0.5), ball_sample(&mut rng, 1.0)))?;
    let offset = Twist6::new(ball_sample(&mut rng, 0.2), ball_sample(&mut rng, 0.5));
    let t_true = t_prior.compose(&exp_se3(&offset)?);
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;

    let mut obs = Vec::with_capacity(config.n_landmarks);
    for i in 0..config.n_landmarks {
        let mut accepted = None;
        for _ in 0..MAX_RETRIES {
            let px = rng.random_range(0.0..2.0 * intr.cx);
            let py = rng.random_range(0.0..2.0 * intr.cy);
            let depth = rng.random_range(2.0..8.0);
            let cam = Vector3::new((px - intr.cx) / intr.fx * depth, (py - intr.cy) / intr.fy * depth, depth);
            let world = t_true.inverse().act(&cam);
            if t_prior.act(&world)[2] > DEPTH_GUARD {
                accepted = Some((cam, world));
                break;
            }
        }
        let (cam, world) = accepted.ok_or_else(|| {
            Error::Config(format!("landmark {i}: no draw cleared the depth guard in {MAX_RETRIES} tries"))
        })?;
        let z = intr.project(&cam) + Vector2::new(noise.sample(&mut rng), noise.sample(&mut rng));
        obs.push(Observation::isotropic(world, z, sigma, config.kappa)?);
    }

    let problem = NLLProblem { t_bar: t_prior, prior: PriorSpec::diagonal(t_prior, info)?, obs, intrinsics: intr };
    Ok(GeneratedProblem { problem, t_true })
}

pub fn method_name(row: u8) -> &'static str {
    match row {
        1 => "FD of value",
        2 => "FD of AD-traced gradient",
        3 => "FD of analytical gradient, fused basis",
        4 => "nested AD of value, naive basis",
        5 => "nested AD of value, fused basis (oracle)",
        6 => "seeded AD of analytical gradient, naive basis",
        7 => "seeded AD of analytical gradient, fused basis",
        _ => "unknown",
    }
}

/// Hessian of `problem` at `δ = 0` by the method of `row`.
pub fn row_hessian(problem: &NLLProblem, config: &BenchConfig, row: u8) -> Result<Matrix6<f64>> {
    let gh = config.gradient_fd_step;
    match row {
        1 => fd_hessian_of_value(problem, config.value_fd_step),
        2 => fd_hessian_of_gradient(|d| ad_traced_gradient(problem, Fused, d), gh),
        3 => fd_hessian_of_gradient(|d| Ok(nll_grad(problem, &Twist6::from_array(*d))?.to_vector()), gh),
        4 => nested_value_hessian(problem, NaiveTheta),
        5 => nested_value_hessian(problem, Fused),
        6 => naive_seeded_hessian(problem).map(|r| r.hess),
        7 => hessian_seeded(problem).map(|h| h.hess),
        _ => Err(Error::InvalidArgument(format!("row {row} is not in 1..=7"))),
    }
}

pub fn fd_step(config: &BenchConfig, row: u8) -> Option<f64> {
    match row {
        1 => Some(config.value_fd_step),
        2 | 3 => Some(config.gradient_fd_step),
        _ => None,
    }
}

/// `‖A − B‖_F / ‖B‖_F`.
pub fn rel_frobenius(a: &Matrix6<f64>, oracle: &Matrix6<f64>) -> f64 {
    (a - oracle).norm() / oracle.norm()
}

/// Median wall time in nanoseconds of `f` over `repeats` runs after `warmup`.
pub fn median_time_ns<T>(repeats: usize, warmup: usize, mut f: impl FnMut() -> T) -> f64 {
    for _ in 0..warmup {
        std::hint::black_box(f());
    }
    let mut times: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let t0 = Instant::now();
            std::hint::black_box(f());
            t0.elapsed().as_nanos() as f64
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub row_id: u8,
    pub method: String,
    /// `None` when the Hessian has non-finite entries or the row failed.
    pub rel_err_vs_oracle: Option<f64>,
    /// `median(row 2) / median(row)`; above 1 means faster than row 2.
    pub speed_vs_row2: Option<f64>,
    pub nan_count: usize,
    pub median_ns: Option<f64>,
    pub fd_step: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<RowReport>,
    /// Row-5 Hessian, row-major.
    pub oracle_hessian: Vec<f64>,
    pub timestamps: Timestamps,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn parse_rows(spec: &str) -> Result<Vec<u8>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(ALL_ROWS.to_vec());
    }
    let mut rows = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let r: u8 = part.parse().map_err(|_| Error::InvalidArgument(format!("bad row '{part}'")))?;
        if !(1..=7).contains(&r) {
            return Err(Error::InvalidArgument(format!("row {r} is not in 1..=7")));
        }
        if !rows.contains(&r) {
            rows.push(r);
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows selected".into()));
    }
    Ok(rows)
}

/// Runs the selected rows on an already generated problem. The oracle
/// (row 5) and the row-2 timing are always computed.
pub fn run_rows_on(problem: &NLLProblem, config: &BenchConfig, rows: &[u8]) -> Result<(Vec<RowReport>, Matrix6<f64>)> {
    let oracle = row_hessian(problem, config, 5)?;
    let time = |row: u8| median_time_ns(config.repeats, config.warmup, || row_hessian(problem, config, row));
    let t2 = time(2);

    let mut out = Vec::with_capacity(rows.len());
    for &row in rows {
        let base = RowReport {
            row_id: row,
            method: method_name(row).to_string(),
            rel_err_vs_oracle: None,
            speed_vs_row2: None,
            nan_count: 0,
            median_ns: None,
            fd_step: fd_step(config, row),
            error: None,
        };
        let report = match row_hessian(problem, config, row) {
            Err(e) => RowReport { error: Some(e.to_string()), ..base },
            Ok(h) => {
                let nan_count = h.iter().filter(|v| !v.is_finite()).count();
                let t = if row == 2 { t2 } else { time(row) };
                let usable = nan_count == 0;
                RowReport {
                    rel_err_vs_oracle: usable.then(|| rel_frobenius(&h, &oracle)),
                    speed_vs_row2: (usable && t > 0.0).then(|| t2 / t),
                    nan_count,
                    median_ns: Some(t),
                    ..base
                }
            }
        };
        out.push(report);
    }
    Ok((out, oracle))
}

pub fn run_rows(config: &BenchConfig, rows: &[u8]) -> Result<Vec<RowReport>> {
    let g = generate_problem(config)?;
    Ok(run_rows_on(&g.problem, config, rows)?.0)
}

pub fn run_bench(config: &BenchConfig, rows: &[u8]) -> Result<BenchReport> {
    let started = unix_now();
    let g = generate_problem(config)?;
    let (rows, oracle) = run_rows_on(&g.problem, config, rows)?;
    Ok(BenchReport {
        config: config.clone(),
        rows,
        oracle_hessian: (0..36).map(|k| oracle[(k / 6, k % 6)]).collect(),
        timestamps: Timestamps { started_unix_s: started, finished_unix_s: unix_now() },
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("row_id,method,rel_err_vs_oracle,speed_vs_row2,nan_count,median_ns,fd_step,error\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},\"{}\",{},{},{},{},{},\"{}\"",
                r.row_id,
                r.method,
                opt(r.rel_err_vs_oracle),
                r.speed_vs_row2.map(|x| format!("{x:.3}")).unwrap_or_default(),
                r.nan_count,
                r.median_ns.map(|x| format!("{x:.0}")).unwrap_or_default(),
                opt(r.fd_step),
                r.error.as_deref().unwrap_or("").replace('"', "'"),
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "seed {}  landmarks {}  repeats {}  warmup {}\n{:<3} {:<46} {:>12} {:>10} {:>5}\n",
            self.config.seed, self.config.n_landmarks, self.config.repeats, self.config.warmup,
            "#", "method", "rel err", "speed", "NaN"
        );
        for r in &self.rows {
            let err = match (&r.error, r.rel_err_vs_oracle) {
                (Some(_), _) => "error".to_string(),
                (None, Some(e)) => format!("{e:.2e}"),
                (None, None) => "NaN".to_string(),
            };
            let speed = r.speed_vs_row2.map(|x| format!("{x:.2}x")).unwrap_or_else(|| "---".into());
            let _ = writeln!(s, "{:<3} {:<46} {:>12} {:>10} {:>5}", r.row_id, r.method, err, speed, r.nan_count);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = BenchConfig::default();
        let a = generate_problem(&cfg).unwrap();
        let b = generate_problem(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.problem.obs.len(), 5);
        assert!(a.problem.validate().is_ok());
        for o in &a.problem.obs {
            assert!(a.t_true.act(&o.landmark)[2] >= 2.0 - 1e-12);
        }
        let other = generate_problem(&BenchConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn noiseless_at_true_pose_has_zero_data_gradient() {
        let cfg = BenchConfig { noise_sigma: 0.0, ..BenchConfig::default() };
        let g = generate_problem(&cfg).unwrap();
        let mut p = g.problem.clone();
        p.t_bar = g.t_true;
        p.prior.t_prior = g.t_true;
        let grad = nll_grad(&p, &Twist6::<f64>::zero()).unwrap().to_vector();
        assert!(grad.norm() < 1e-9, "{}", grad.norm());
    }

    #[test]
    fn config_roundtrip_and_validation() {
        let cfg = BenchConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(BenchConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(BenchConfig::from_toml("seed = 7").unwrap().seed, 7);
        assert!(BenchConfig::from_toml("repeats = 2").is_err());
        assert!(BenchConfig::from_toml("n_landmarks = 0").is_err());
        assert!(BenchConfig::from_toml("bogus = 1").is_err());

        let explicit = "[problem]\nlandmarks = [[0.0, 0.0, 4.0], [1.0, 0.5, 5.0]]\nmeasurements = [[321.0, 240.0], [420.0, 290.0]]\n";
        let cfg = BenchConfig::from_toml(explicit).unwrap();
        let g = generate_problem(&cfg).unwrap();
        assert_eq!(g.problem.obs.len(), 2);
        assert_eq!(g.problem.obs[1].z, Vector2::new(420.0, 290.0));
    }

    #[test]
    fn rows_parse() {
        assert_eq!(parse_rows("all").unwrap(), ALL_ROWS.to_vec());
        assert_eq!(parse_rows("7, 2,7").unwrap(), vec![7, 2]);
        assert!(parse_rows("8").is_err());
        assert!(parse_rows("").is_err());
    }

    #[test]
    fn report_shapes() {
        let cfg = BenchConfig { repeats: 3, warmup: 0, ..BenchConfig::default() };
        let rep = run_bench(&cfg, &ALL_ROWS).unwrap();
        assert_eq!(rep.oracle_hessian.len(), 36);
        assert_eq!(rep.rows.len(), 7);
        assert_eq!(rep.rows[4].rel_err_vs_oracle, Some(0.0));
        assert!(rep.rows[5].nan_count > 0);
        let json: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert!(json["rows"][5]["rel_err_vs_oracle"].is_null());
        assert_eq!(rep.to_csv().lines().count(), 8);
        assert!(rep.to_table().contains("oracle"));
    }
}
