//! Replicated training sweeps and empirical rate fits.
//!
//! A sweep trains `replications` independent models for every horizon `T` in
//! the grid, records the excess risk of the final iterate and fits
//! `ln(mean risk) = a + b ln T` by least squares. Each `(T, rep)` cell draws
//! its samples, features and evaluation points from seeds derived from
//! `(master_seed, T, rep)`, so the output does not depend on scheduling.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMap, FeatureMapSpec};
use crate::learner::{train, EvalMode, Model, TrainOptions};
use crate::rng::derive_seed;
use crate::schedules::Schedule;
use crate::synthetic::{ProblemSpec, SpectralProblem};

/// Default one-sided tolerance on the fitted slope.
pub const DEFAULT_TOLERANCE: f64 = 0.15;

/// Which random features the learner uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureChoice {
    /// Spectral features over the problem's operator (exact risk available).
    #[default]
    Spectral,
    /// Gaussian random Fourier features on `[0,1]`; no exact oracle.
    GaussianRff { sigma: f64 },
}

/// Step-size rule, built per horizon.
///
/// `gamma` and `c_gamma` default to the problem's capacity pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    ConstantCapacity {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        c_gamma: Option<f64>,
    },
    ConstantIndependent,
    ConstantHk,
    Decaying {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        c_gamma: Option<f64>,
    },
    Regularized {
        epsilon: f64,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        c_gamma: Option<f64>,
    },
    Custom {
        eta1: f64,
        theta: f64,
        #[serde(default)]
        lambda: f64,
    },
}

impl ScheduleSpec {
    /// `(gamma, c_gamma)` the schedule is tuned for.
    pub fn capacity(&self, problem: &SpectralProblem, kappa_sq: f64) -> (f64, f64) {
        let pick = |g: &Option<f64>, c: &Option<f64>| {
            (g.unwrap_or(problem.gamma()), c.unwrap_or(problem.c_gamma()))
        };
        match self {
            ScheduleSpec::ConstantCapacity { gamma, c_gamma }
            | ScheduleSpec::Decaying { gamma, c_gamma }
            | ScheduleSpec::Regularized { gamma, c_gamma, .. } => pick(gamma, c_gamma),
            ScheduleSpec::ConstantIndependent | ScheduleSpec::ConstantHk => (1.0, kappa_sq),
            ScheduleSpec::Custom { .. } => (problem.gamma(), problem.c_gamma()),
        }
    }

    pub fn build(&self, problem: &SpectralProblem, kappa_sq: f64, horizon: usize) -> Result<Schedule> {
        let (gamma, c_gamma) = self.capacity(problem, kappa_sq);
        let zeta = problem.zeta();
        match self {
            ScheduleSpec::ConstantCapacity { .. } => {
                Schedule::constant_capacity(zeta, gamma, c_gamma, kappa_sq, horizon)
            }
            ScheduleSpec::ConstantIndependent => Schedule::constant_independent(zeta, kappa_sq, horizon),
            ScheduleSpec::ConstantHk => Schedule::constant_hk(kappa_sq, horizon),
            ScheduleSpec::Decaying { .. } => Schedule::decaying(zeta, gamma, c_gamma, kappa_sq, horizon),
            ScheduleSpec::Regularized { epsilon, .. } => {
                Schedule::regularized(zeta, gamma, c_gamma, kappa_sq, horizon, *epsilon)
            }
            ScheduleSpec::Custom { eta1, theta, lambda } => Schedule::custom(*eta1, *theta, horizon, *lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskMode {
    /// Parseval on the projected model (spectral features only).
    #[default]
    Exact,
    /// Monte-Carlo against `f_rho` on `m` fresh points.
    Mc { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawConfig")]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub features: FeatureChoice,
    pub schedule: ScheduleSpec,
    /// Horizons `T`, strictly increasing.
    pub horizons: Vec<usize>,
    /// Defaults to 50 for spectral features and 20 for Gaussian RFF.
    pub replications: usize,
    pub master_seed: u64,
    pub risk: RiskMode,
    /// Keep features in memory during training; does not change results
    /// beyond floating-point summation order.
    pub cached: bool,
    pub tolerance: f64,
}

/// On-disk form; only `problem` and `schedule` are required.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: ProblemSpec,
    #[serde(default)]
    features: FeatureChoice,
    schedule: ScheduleSpec,
    #[serde(default = "default_horizons")]
    horizons: Vec<usize>,
    replications: Option<usize>,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    risk: RiskMode,
    #[serde(default)]
    cached: bool,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
}

impl From<RawConfig> for ExperimentConfig {
    fn from(raw: RawConfig) -> Self {
        Self {
            replications: raw.replications.unwrap_or_else(|| default_replications(&raw.features)),
            problem: raw.problem,
            features: raw.features,
            schedule: raw.schedule,
            horizons: raw.horizons,
            master_seed: raw.master_seed,
            risk: raw.risk,
            cached: raw.cached,
            tolerance: raw.tolerance,
        }
    }
}

/// `2^8, ..., 2^13`.
pub fn default_horizons() -> Vec<usize> {
    (8..=13).map(|j| 1usize << j).collect()
}

pub fn default_replications(features: &FeatureChoice) -> usize {
    match features {
        FeatureChoice::Spectral => 50,
        FeatureChoice::GaussianRff { .. } => 20,
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, schedule: ScheduleSpec) -> Self {
        Self {
            problem,
            features: FeatureChoice::Spectral,
            schedule,
            horizons: default_horizons(),
            replications: default_replications(&FeatureChoice::Spectral),
            master_seed: 0,
            risk: RiskMode::Exact,
            cached: false,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::param("horizons", "must be non-empty"));
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("horizons", "must be strictly increasing"));
        }
        if self.replications == 0 {
            return Err(Error::param("replications", "must be at least 1"));
        }
        if let RiskMode::Mc { m } = self.risk {
            if m < 2 {
                return Err(Error::param("risk.m", "need at least 2 points"));
            }
        }
        if matches!(self.features, FeatureChoice::GaussianRff { .. }) && self.risk == RiskMode::Exact {
            return Err(Error::param("risk", "exact risk needs spectral features; use mc"));
        }
        Ok(())
    }
}

/// A built experiment: problem, feature map and configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: SpectralProblem,
    pub map: Arc<FeatureMap>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let problem = config.problem.build()?;
        let map = match config.features {
            FeatureChoice::Spectral => problem.feature_map()?,
            FeatureChoice::GaussianRff { sigma } => FeatureMap::new(FeatureMapSpec::gaussian(sigma, 1)?)?,
        };
        Ok(Self {
            config,
            problem,
            map: Arc::new(map),
        })
    }

    pub fn kappa_sq(&self) -> f64 {
        self.map.kappa_sq()
    }

    pub fn schedule(&self, horizon: usize) -> Result<Schedule> {
        self.config.schedule.build(&self.problem, self.kappa_sq(), horizon)
    }

    /// Seed of cell `(T, rep)`.
    pub fn cell_seed(&self, horizon: usize, rep: usize) -> u64 {
        derive_seed(derive_seed(self.config.master_seed, horizon as u64), rep as u64)
    }

    /// Trains one model for `horizon` steps and returns it.
    pub fn train_cell(&self, horizon: usize, rep: usize) -> Result<Model> {
        let seed = self.cell_seed(horizon, rep);
        let mode = if self.config.cached { EvalMode::Cached } else { EvalMode::Replay };
        if horizon == 0 {
            return Ok(Model::new(self.map.clone(), derive_seed(seed, 2), 0.0)?.with_mode(mode));
        }
        let schedule = self.schedule(horizon)?;
        let opts = TrainOptions::new(derive_seed(seed, 2)).mode(mode);
        let samples = self.problem.stream(derive_seed(seed, 1)).take(horizon);
        let (model, _) = train(samples, &schedule, self.map.clone(), &opts, |_| None)?;
        Ok(model)
    }

    /// Excess risk of a trained model under the configured risk mode.
    pub fn evaluate(&self, model: &Model, seed: u64) -> Result<f64> {
        match self.config.risk {
            RiskMode::Exact => self.problem.model_excess_risk(model),
            RiskMode::Mc { m } => Ok(self.problem.excess_risk_mc(model, m, derive_seed(seed, 3))?.0),
        }
    }

    /// Excess risk of the final iterate of cell `(T, rep)`.
    pub fn run_replication(&self, horizon: usize, rep: usize) -> Result<f64> {
        let seed = self.cell_seed(horizon, rep);
        let run = || -> Result<f64> {
            let model = self.train_cell(horizon, rep)?;
            self.evaluate(&model, seed)
        };
        run().map_err(|e| Error::Cell {
            horizon,
            rep,
            seed,
            source: Box::new(e),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellResult {
    pub horizon: usize,
    pub rep: usize,
    pub risk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerT {
    pub horizon: usize,
    pub mean: f64,
    /// Standard error of the mean; zero for a single replication.
    pub se: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub per_t: Vec<PerT>,
}

/// Mean and standard error of `values`.
pub fn summarize(horizon: usize, values: &[f64]) -> PerT {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    PerT { horizon, mean, se, n }
}

/// Runs every `(T, rep)` cell on `threads` workers (0 = rayon default).
///
/// The first failing cell in grid order aborts the sweep.
pub fn sweep(experiment: &Experiment, threads: usize) -> Result<SweepResult> {
    let cells: Vec<(usize, usize)> = experiment
        .config
        .horizons
        .iter()
        .flat_map(|&t| (0..experiment.config.replications).map(move |r| (t, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    // longest horizons first for better load balance; results are re-keyed below
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(cells[i].0));
    let mut results: Vec<Option<Result<f64>>> = (0..cells.len()).map(|_| None).collect();
    let computed: Vec<(usize, Result<f64>)> = pool.install(|| {
        order
            .par_iter()
            .map(|&i| (i, experiment.run_replication(cells[i].0, cells[i].1)))
            .collect()
    });
    for (i, r) in computed {
        results[i] = Some(r);
    }
    let mut out = Vec::with_capacity(cells.len());
    for ((horizon, rep), r) in cells.into_iter().zip(results) {
        let risk = r.expect("every cell computed")?;
        out.push(CellResult { horizon, rep, risk });
    }
    let per_t = experiment
        .config
        .horizons
        .iter()
        .map(|&t| {
            let values: Vec<f64> = out.iter().filter(|c| c.horizon == t).map(|c| c.risk).collect();
            summarize(t, &values)
        })
        .collect();
    Ok(SweepResult { cells: out, per_t })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub per_t: Vec<PerT>,
}

/// Least-squares fit of `ln mean` on `ln T`.
pub fn fit_rate(per_t: &[PerT]) -> Result<RateEstimate> {
    if per_t.len() < 3 {
        return Err(Error::param("per_t", format!("need at least 3 grid points, got {}", per_t.len())));
    }
    if let Some(p) = per_t.iter().find(|p| !(p.mean > 0.0) || p.horizon == 0) {
        return Err(Error::param(
            "per_t",
            format!("mean risk and T must be positive, got mean {} at T = {}", p.mean, p.horizon),
        ));
    }
    let n = per_t.len() as f64;
    let xs: Vec<f64> = per_t.iter().map(|p| (p.horizon as f64).ln()).collect();
    let ys: Vec<f64> = per_t.iter().map(|p| p.mean.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let slope_stderr = (ssr / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(RateEstimate {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        per_t: per_t.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub slope: f64,
    pub exponent: f64,
    pub tolerance: f64,
}

/// Passes iff the fitted slope is at most `exponent + tolerance`.
pub fn check_theorem(estimate: &RateEstimate, exponent: f64, tolerance: f64) -> Verdict {
    Verdict {
        passed: estimate.slope <= exponent + tolerance,
        slope: estimate.slope,
        exponent,
        tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub horizon: usize,
    pub eta1: f64,
    pub theta: f64,
    pub lambda: f64,
    /// Step-size conditions hold for the tuned capacity pair.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub truncation: usize,
    pub tail_mass: f64,
    pub kappa_sq: f64,
    pub gamma: f64,
    pub c_gamma: f64,
    pub f_rho_norm_sq: f64,
    pub schedules: Vec<ScheduleRow>,
    pub theoretical_exponent: Option<f64>,
    pub rate: Option<RateEstimate>,
    pub verdict: Option<Verdict>,
    pub notes: Vec<String>,
}

/// Collects everything written to `summary.json`.
pub fn summarize_sweep(experiment: &Experiment, result: &SweepResult) -> Result<Summary> {
    let kappa_sq = experiment.kappa_sq();
    let (gamma, c_gamma) = experiment.config.schedule.capacity(&experiment.problem, kappa_sq);
    let mut schedules = Vec::new();
    let mut exponent = None;
    for &t in &experiment.config.horizons {
        if t == 0 {
            continue;
        }
        let s = experiment.schedule(t)?;
        exponent = s.theoretical_exponent();
        schedules.push(ScheduleRow {
            horizon: t,
            eta1: s.eta1(),
            theta: s.theta(),
            lambda: s.lambda(),
            valid: s.validate(gamma, c_gamma, kappa_sq).passed,
        });
    }
    let rate = fit_rate(&result.per_t).ok();
    let verdict = match (&rate, exponent) {
        (Some(r), Some(e)) => Some(check_theorem(r, e, experiment.config.tolerance)),
        _ => None,
    };
    let mut notes = Vec::new();
    if matches!(experiment.config.features, FeatureChoice::GaussianRff { .. }) {
        notes.push(
            "gaussian rff features: the schedule uses the problem's nominal capacity pair and the risk is a Monte-Carlo estimate; no exact oracle applies".into(),
        );
    }
    if schedules.iter().any(|r| !r.valid) {
        notes.push("some horizons use a schedule that fails its step-size conditions".into());
    }
    if rate.is_none() {
        notes.push("rate not fitted: fewer than 3 horizons or a non-positive mean".into());
    }
    Ok(Summary {
        config: experiment.config.clone(),
        truncation: experiment.problem.truncation(),
        tail_mass: experiment.problem.tail_mass(),
        kappa_sq,
        gamma: experiment.problem.gamma(),
        c_gamma: experiment.problem.c_gamma(),
        f_rho_norm_sq: experiment.problem.f_rho().norm_sq(),
        schedules,
        theoretical_exponent: exponent,
        rate,
        verdict,
        notes,
    })
}

/// `T,rep,risk` rows.
pub fn cells_csv(cells: &[CellResult]) -> String {
    let mut out = String::from("T,rep,risk\n");
    for c in cells {
        out.push_str(&format!("{},{},{:e}\n", c.horizon, c.rep, c.risk));
    }
    out
}

/// `T,mean,se,n` rows, one per horizon.
pub fn per_t_csv(per_t: &[PerT]) -> String {
    let mut out = String::from("T,mean,se,n\n");
    for p in per_t {
        out.push_str(&format!("{},{:e},{:e},{}\n", p.horizon, p.mean, p.se, p.n));
    }
    out
}

/// Writes `cells.csv`, `per_t.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, result: &SweepResult, summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("cells.csv"), cells_csv(&result.cells))?;
    fs::write(dir.join("per_t.csv"), per_t_csv(&result.per_t))?;
    let mut f = fs::File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, summary).map_err(|e| Error::Io(e.into()))?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::GMode;

    fn small_config() -> ExperimentConfig {
        let problem = ProblemSpec {
            gamma: 0.5,
            zeta: 0.5,
            radius: 1.0,
            noise_std: 0.1,
            truncation: 50,
            g_mode: GMode::Single { index: 1 },
        };
        let mut c = ExperimentConfig::new(problem, ScheduleSpec::Decaying { gamma: None, c_gamma: None });
        c.horizons = vec![16, 32, 64];
        c.replications = 3;
        c.master_seed = 9;
        c
    }

    #[test]
    fn config_defaults_by_feature_kind() {
        let base = r#""problem": {"gamma": 0.5, "zeta": 0.5}, "schedule": {"preset": "decaying"}"#;
        let c: ExperimentConfig = serde_json::from_str(&format!("{{{base}}}")).unwrap();
        assert_eq!(c.replications, 50);
        assert_eq!(c.horizons, default_horizons());
        let rff = format!(r#"{{{base}, "features": {{"kind": "gaussian_rff", "sigma": 1.0}}, "risk": {{"kind": "mc", "m": 100}}}}"#);
        let c: ExperimentConfig = serde_json::from_str(&rff).unwrap();
        assert_eq!(c.replications, 20);
        let c: ExperimentConfig = serde_json::from_str(&format!(r#"{{{base}, "replications": 7}}"#)).unwrap();
        assert_eq!(c.replications, 7);
        assert!(serde_json::from_str::<ExperimentConfig>(&format!(r#"{{{base}, "extra": 1}}"#)).is_err());

        let round: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn exact_power_law_fit() {
        let per_t: Vec<PerT> = [256usize, 512, 1024, 2048]
            .iter()
            .map(|&t| PerT {
                horizon: t,
                mean: 3.0 * (t as f64).powf(-0.4),
                se: 0.0,
                n: 1,
            })
            .collect();
        let r = fit_rate(&per_t).unwrap();
        assert!((r.slope + 0.4).abs() < 1e-10);
        assert!((r.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_factor_flattens_slope() {
        let per_t: Vec<PerT> = (8..=13)
            .map(|j| {
                let t = 1usize << j;
                PerT {
                    horizon: t,
                    mean: 2.0 * (t as f64).powf(-0.4) * (t as f64).ln(),
                    se: 0.0,
                    n: 1,
                }
            })
            .collect();
        let r = fit_rate(&per_t).unwrap();
        assert!(r.slope > -0.4 && r.slope < -0.25, "{}", r.slope);
    }

    #[test]
    fn fit_preconditions() {
        let p = |t, mean| PerT { horizon: t, mean, se: 0.0, n: 1 };
        assert!(fit_rate(&[p(1, 1.0), p(2, 0.5)]).is_err());
        assert!(fit_rate(&[p(1, 1.0), p(2, 0.0), p(4, 0.1)]).is_err());
    }

    #[test]
    fn verdicts() {
        let est = |slope| RateEstimate {
            slope,
            intercept: 0.0,
            slope_stderr: 0.0,
            r_squared: 1.0,
            per_t: vec![],
        };
        assert!(check_theorem(&est(-0.45), -0.4, 0.15).passed);
        assert!(!check_theorem(&est(-0.1), -0.4, 0.15).passed);
        // lowering the tolerance never turns a failure into a pass
        for tol in [0.3, 0.2, 0.1, 0.0] {
            let v = check_theorem(&est(-0.2), -0.4, tol);
            assert_eq!(v.passed, tol >= 0.2);
        }
        let s = Schedule::constant_capacity(0.5, 0.5, 1.0, 1.0, 256).unwrap();
        assert!((s.theoretical_exponent().unwrap() + 0.4).abs() < 1e-15);
    }

    #[test]
    fn replication_is_deterministic_and_seed_separated() {
        let e = Experiment::new(small_config()).unwrap();
        assert_eq!(e.run_replication(32, 1).unwrap(), e.run_replication(32, 1).unwrap());
        let risks: Vec<f64> = (0..100).map(|r| e.run_replication(16, r).unwrap()).collect();
        let mut sorted = risks.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        assert_eq!(sorted.len(), risks.len());
    }

    #[test]
    fn zero_horizon_is_norm() {
        let mut c = small_config();
        c.problem.noise_std = 0.0;
        let e = Experiment::new(c).unwrap();
        let risk = e.run_replication(0, 0).unwrap();
        assert_eq!(risk, e.problem.f_rho().norm_sq());
    }

    #[test]
    fn single_cell_passthrough() {
        let mut c = small_config();
        c.horizons = vec![32];
        c.replications = 1;
        let e = Experiment::new(c).unwrap();
        let r = sweep(&e, 1).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.per_t.len(), 1);
        assert_eq!(r.per_t[0].mean, r.cells[0].risk);
        assert_eq!(r.per_t[0].se, 0.0);
    }

    #[test]
    fn sweep_is_deterministic_across_threads() {
        let e = Experiment::new(small_config()).unwrap();
        let a = sweep(&e, 1).unwrap();
        let b = sweep(&e, 3).unwrap();
        assert_eq!(cells_csv(&a.cells), cells_csv(&b.cells));
        assert_eq!(per_t_csv(&a.per_t).lines().count(), 1 + 3);
    }

    #[test]
    fn failing_cell_reports_seed() {
        let mut c = small_config();
        c.schedule = ScheduleSpec::Custom {
            eta1: 0.5,
            theta: 0.0,
            lambda: 3.0,
        };
        let e = Experiment::new(c).unwrap();
        match sweep(&e, 1) {
            Err(Error::Cell { horizon, rep, seed, .. }) => {
                assert_eq!((horizon, rep), (16, 0));
                assert_eq!(seed, e.cell_seed(16, 0));
            }
            other => panic!("expected cell failure, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        c.horizons = vec![32, 16];
        assert!(Experiment::new(c).is_err());
        let mut c = small_config();
        c.replications = 0;
        assert!(Experiment::new(c).is_err());
        let mut c = small_config();
        c.features = FeatureChoice::GaussianRff { sigma: 0.2 };
        assert!(Experiment::new(c.clone()).is_err());
        c.risk = RiskMode::Mc { m: 1000 };
        let e = Experiment::new(c).unwrap();
        assert!(e.run_replication(16, 0).unwrap() > 0.0);
    }

    #[test]
    fn outputs_are_written() {
        let e = Experiment::new(small_config()).unwrap();
        let r = sweep(&e, 1).unwrap();
        let s = summarize_sweep(&e, &r).unwrap();
        assert!(s.rate.is_some());
        assert_eq!(s.truncation, 50);
        let dir = std::env::temp_dir().join(format!("dskl-harness-{}", std::process::id()));
        write_outputs(&dir, &r, &s).unwrap();
        let cells = fs::read_to_string(dir.join("cells.csv")).unwrap();
        assert_eq!(cells.lines().count(), 1 + 9);
        let per_t = fs::read_to_string(dir.join("per_t.csv")).unwrap();
        assert_eq!(per_t.lines().count(), 1 + 3);
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["truncation"], 50);
        fs::remove_dir_all(dir).unwrap();
    }
}
