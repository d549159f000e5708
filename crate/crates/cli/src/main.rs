use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dskl::bounds::{verify_all, BoundReport};
use dskl::features::{FeatureMap, FeatureMapSpec};
use dskl::harness::{self, Experiment, ExperimentConfig, ScheduleSpec};
use dskl::rng::{derive_seed, SplitMix64};
use dskl::synthetic::{GMode, ProblemSpec};

#[derive(Parser)]
#[command(name = "dskl", version, about = "Doubly stochastic kernel learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write the model file.
    Train {
        #[command(flatten)]
        common: Common,
        /// Number of steps; defaults to the largest horizon in the configuration.
        #[arg(long)]
        horizon: Option<usize>,
        /// Replication index selecting the sample and feature streams.
        #[arg(long, default_value_t = 0)]
        rep: usize,
    },
    /// Replicated sweep over horizons with a rate fit.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        replications: Option<usize>,
        /// Comma-separated horizons.
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
    },
    /// Randomized exact-versus-bound comparisons.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        /// Draws per lemma.
        #[arg(long, default_value_t = 200)]
        draws: usize,
    },
    /// Monte-Carlo check of the Gaussian random Fourier feature kernel.
    KernelCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Features per estimate.
        #[arg(long, default_value_t = 10_000)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
    },
    /// Check a schedule against its step-size conditions.
    ValidateSchedule {
        #[command(flatten)]
        common: Common,
        /// Horizons to check; defaults to the configuration's grid.
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
    },
}

fn default_config() -> ExperimentConfig {
    ExperimentConfig::new(
        ProblemSpec {
            gamma: 0.5,
            zeta: 0.5,
            radius: 1.0,
            noise_std: 0.1,
            truncation: 2000,
            g_mode: GMode::PowerDecay,
        },
        ScheduleSpec::ConstantCapacity { gamma: None, c_gamma: None },
    )
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => default_config(),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn train(common: Common, horizon: Option<usize>, rep: usize) -> Result<()> {
    let config = load_config(&common)?;
    let horizon = horizon.unwrap_or(*config.horizons.last().context("empty horizon grid")?);
    let experiment = Experiment::new(config)?;
    let model = experiment.train_cell(horizon, rep)?;
    let risk = experiment.evaluate(&model, experiment.cell_seed(horizon, rep))?;
    let out = common.out.unwrap_or_else(|| PathBuf::from("model.json"));
    fs::write(&out, model.serialize()).with_context(|| format!("writing {}", out.display()))?;
    println!("T = {horizon}, rep = {rep}, excess risk = {risk:e}, model written to {}", out.display());
    Ok(())
}

fn sweep(common: Common, replications: Option<usize>, horizons: Option<Vec<usize>>) -> Result<()> {
    let mut config = load_config(&common)?;
    if let Some(r) = replications {
        config.replications = r;
    }
    if let Some(h) = horizons {
        config.horizons = h;
    }
    let experiment = Experiment::new(config)?;
    let result = harness::sweep(&experiment, common.threads)?;
    let summary = harness::summarize_sweep(&experiment, &result)?;
    let dir = common.out.unwrap_or_else(|| PathBuf::from("sweep-out"));
    harness::write_outputs(&dir, &result, &summary)?;
    print!("{}", harness::per_t_csv(&result.per_t));
    if let Some(rate) = &summary.rate {
        println!(
            "slope = {:.4} ± {:.4}, r^2 = {:.4}",
            rate.slope, rate.slope_stderr, rate.r_squared
        );
    }
    if let Some(v) = &summary.verdict {
        println!(
            "{}: slope {:.4} vs exponent {:.4} + {:.2}",
            if v.passed { "PASS" } else { "FAIL" },
            v.slope,
            v.exponent,
            v.tolerance
        );
    }
    println!("outputs written to {}", dir.display());
    Ok(())
}

fn bounds_table(reports: &[BoundReport]) -> String {
    let mut out = String::from("name,exact,bound,slack,pass\n");
    for r in reports {
        out.push_str(&format!("{},{:e},{:e},{:e},{}\n", r.name, r.exact, r.bound, r.slack, r.passed()));
    }
    out
}

fn verify_bounds(common: Common, draws: usize) -> Result<()> {
    let reports = verify_all(draws, common.seed.unwrap_or(0))?;
    write_or_print(common.out.as_deref(), &bounds_table(&reports))?;
    let mut names: Vec<&str> = Vec::new();
    for r in &reports {
        if !names.contains(&r.name) {
            names.push(r.name);
        }
    }
    let mut failed = 0;
    for name in names {
        let group: Vec<&BoundReport> = reports.iter().filter(|r| r.name == name).collect();
        let fails = group.iter().filter(|r| !r.passed()).count();
        let min_rel = group
            .iter()
            .map(|r| if r.bound.is_finite() && r.bound != 0.0 { r.slack / r.bound.abs() } else { f64::INFINITY })
            .fold(f64::INFINITY, f64::min);
        eprintln!("{name:<18} {} draws, {fails} failed, min relative slack {min_rel:.3e}", group.len());
        failed += fails;
    }
    if failed > 0 {
        bail!("{failed} comparisons failed");
    }
    Ok(())
}

fn kernel_check(common: Common, sigma: f64, dim: usize, m: usize, pairs: usize) -> Result<()> {
    let map = FeatureMap::new(FeatureMapSpec::gaussian(sigma, dim)?)?;
    let seed = common.seed.unwrap_or(0);
    let mut rng = SplitMix64::new(seed);
    let tol = 3.0 * map.kappa_sq() / (m as f64).sqrt();
    let mut out = String::from("pair,exact,mc,abs_error,within\n");
    let mut within = 0;
    for p in 0..pairs {
        let x: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
        let exact = map.kernel_exact(&x, &y);
        let mc = map.kernel_mc(&x, &y, m, derive_seed(seed, p as u64))?;
        let err = (mc - exact).abs();
        within += usize::from(err <= tol);
        out.push_str(&format!("{p},{exact:e},{mc:e},{err:e},{}\n", err <= tol));
    }
    write_or_print(common.out.as_deref(), &out)?;
    eprintln!("{within}/{pairs} pairs within 3 kappa^2 / sqrt(m) = {tol:.4e}");
    Ok(())
}

fn validate_schedule(common: Common, horizons: Option<Vec<usize>>) -> Result<()> {
    let config = load_config(&common)?;
    let horizons = horizons.unwrap_or_else(|| config.horizons.clone());
    let experiment = Experiment::new(config)?;
    let kappa_sq = experiment.kappa_sq();
    let (gamma, c_gamma) = experiment.config.schedule.capacity(&experiment.problem, kappa_sq);
    let mut rows = Vec::new();
    let mut all = true;
    for t in horizons {
        let schedule = match experiment.config.schedule.build(&experiment.problem, kappa_sq, t) {
            Ok(s) => s,
            Err(e) => {
                all = false;
                rows.push(serde_json::json!({ "horizon": t, "error": e.to_string() }));
                continue;
            }
        };
        let v = schedule.validate(gamma, c_gamma, kappa_sq);
        all &= v.passed;
        rows.push(serde_json::json!({ "horizon": t, "schedule": schedule, "validation": v }));
    }
    let text = serde_json::to_string_pretty(&serde_json::json!({
        "gamma": gamma,
        "c_gamma": c_gamma,
        "kappa_sq": kappa_sq,
        "results": rows,
    }))? + "\n";
    write_or_print(common.out.as_deref(), &text)?;
    if !all {
        bail!("schedule failed validation");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { common, horizon, rep } => {
            train(common, horizon, rep)
        }
        Command::Sweep {
            common,
            replications,
            horizons,
        } => sweep(common, replications, horizons),
        Command::VerifyBounds { common, draws } => {
            verify_bounds(common, draws)
        }
        Command::KernelCheck {
            common,
            sigma,
            dim,
            m,
            pairs,
        } => {
            kernel_check(common, sigma, dim, m, pairs)
        }
        Command::ValidateSchedule { common, horizons } => {
            validate_schedule(common, horizons)
        }
    }
}
