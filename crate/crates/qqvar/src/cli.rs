//! Command-line front end: config ingestion, seeded runs, table/CSV/JSON
//! emission, and bound-verification reports.
//!
//! Exit codes: 0 success, 1 internal numerical failure, 2 malformed config or
//! arguments, 3 I/O failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bounds::{self, BoundKind};
use crate::decomposition;
use crate::dist::MvtModel;
use crate::empirical::ProjectedSample;
use crate::error::Error;
use crate::inference::{self, DensityMethod};
use crate::monte_carlo::{self, RateFit, SimConfig};
use crate::report::{self, format_f64, RunManifest};

pub const OUT_DIR_ENV: &str = "QQVAR_OUT";

const PRESET_PAPER_TABLES: &str = include_str!("../configs/paper_tables.toml");
const PRESET_SMOKE: &str = include_str!("../configs/smoke.toml");
const PRESET_DESK_RATE: &str = include_str!("../configs/desk_rate.toml");

#[derive(Debug, Parser)]
#[command(name = "qqvar", version, about = "Estimated-VaR error decomposition under multivariate Student-t returns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Generic,
    TModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Analytic,
    Kernel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every cell of a simulation config and emit the table CSVs.
    Simulate {
        /// Config file path, or a bundled preset: paper_tables | smoke | desk_rate.
        #[arg(long)]
        config: String,
        /// Output directory (default: $QQVAR_OUT or ./qqvar_out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = library default). Never changes results.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// One decomposition at fixed parameters, printed as JSON.
    Decompose {
        #[arg(long, default_value_t = 5)]
        p: usize,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 10.0)]
        nu: f64,
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Seed for the return sample.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Explicit perturbed direction, comma-separated. Default: w0.
        #[arg(long, value_delimiter = ',')]
        w_hat: Option<Vec<f64>>,
        /// Draw w_hat by perturbing w0 with this seed instead.
        #[arg(long, conflicts_with = "w_hat")]
        perturb_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Remainder-rate regression of log mean|D3| on log n, per nu.
    Rate {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Add the n = 1e6 endpoint to the sample-size list.
        #[arg(long)]
        extended: bool,
        /// Inject an exact n^(-3/4) power law instead of simulating.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Fit a symmetric-difference bound constant and verify it on a held-out grid.
    Bounds {
        /// Config supplying p, rho, the model nu (first entry) and alpha.
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use this constant instead of fitting one.
        #[arg(long)]
        constant: Option<f64>,
        #[arg(long, value_enum, default_value_t = KindArg::TModel)]
        kind: KindArg,
        /// Perturbation radius around (w0, q0).
        #[arg(long, default_value_t = 0.05)]
        radius: f64,
        /// Held-out grid size.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Monte Carlo draws per grid point.
        #[arg(long, default_value_t = 100_000)]
        n_mc: usize,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Confidence interval for the projected quantile, printed as JSON.
    Ci {
        #[arg(long, default_value_t = 5)]
        p: usize,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 5.0)]
        nu: f64,
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Direction, comma-separated; default equal weights.
        #[arg(long, value_delimiter = ',')]
        w: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = MethodArg::Analytic)]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let threads = match &cli.command {
        Command::Simulate { threads, .. }
        | Command::Decompose { threads, .. }
        | Command::Rate { threads, .. }
        | Command::Bounds { threads, .. }
        | Command::Ci { threads, .. } => *threads,
    };
    let body = || match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    if threads == 0 {
        body()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                1
            }
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::ZeroWeight => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Simulate {
            config, out, seed, threads,
        } => cmd_simulate(&config, out, seed, threads),
        Command::Decompose {
            p, rho, nu, alpha, n, seed, w_hat, perturb_seed, out, threads,
        } => cmd_decompose(p, rho, nu, alpha, n, seed, w_hat, perturb_seed, out, threads),
        Command::Rate {
            config, out, seed, extended, synthetic, threads,
        } => cmd_rate(&config, out, seed, extended, synthetic, threads),
        Command::Bounds {
            config, out, seed, constant, kind, radius, grid, n_mc, threads,
        } => cmd_bounds(&config, out, seed, constant, kind, radius, grid, n_mc, threads),
        Command::Ci {
            p, rho, nu, alpha, gamma, n, seed, w, method, out, threads,
        } => cmd_ci(p, rho, nu, alpha, gamma, n, seed, w, method, out, threads),
    }
}

fn load_config(source: &str) -> Result<SimConfig, Error> {
    let text = match source {
        "paper_tables" => PRESET_PAPER_TABLES.to_string(),
        "smoke" => PRESET_SMOKE.to_string(),
        "desk_rate" => PRESET_DESK_RATE.to_string(),
        path => std::fs::read_to_string(path)?,
    };
    SimConfig::from_toml(&text)
}

fn out_dir(out: Option<PathBuf>) -> Result<PathBuf, Error> {
    let dir = out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qqvar_out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_simulate(
    config_source: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: usize,
) -> Result<(), Error> {
    let mut config = load_config(config_source)?;
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let dir = out_dir(out)?;
    let tables = monte_carlo::reproduce_tables(&config, &dir)?;
    let mut manifest = RunManifest::new(
        "simulate",
        config.master_seed,
        threads,
        serde_json::to_value(&config).expect("config serializes"),
    );
    for p in &tables.paths {
        manifest.record_output(p);
        println!("wrote {}", p.display());
    }
    let mp = manifest.write(&dir)?;
    println!("wrote {}", mp.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_decompose(
    p: usize,
    rho: f64,
    nu: f64,
    alpha: f64,
    n: usize,
    seed: u64,
    w_hat: Option<Vec<f64>>,
    perturb_seed: Option<u64>,
    out: Option<PathBuf>,
    threads: usize,
) -> Result<(), Error> {
    let model = MvtModel::equicorrelated(p, rho, nu)?;
    let w0 = vec![1.0 / p as f64; p];
    let w_hat = match (w_hat, perturb_seed) {
        (Some(w), _) => w,
        (None, Some(ps)) => monte_carlo::perturb_weights(&w0, n, ps)?,
        (None, None) => w0.clone(),
    };
    let sample = model.sample(n, seed)?;
    let d = decomposition::compute(&model, &sample, &w0, &w_hat, alpha)?;
    let payload = json!({
        "decomposition": d,
        "model": { "p": p, "rho": rho, "nu": nu, "mu": "zero", "boundary": model.is_boundary() },
        "alpha": alpha,
        "n": n,
        "sample_seed": seed,
        "w0": w0,
        "w_hat": w_hat,
        "quantile_convention": report::QUANTILE_CONVENTION,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let text = serde_json::to_string_pretty(&payload).expect("payload serializes");
    println!("{text}");
    if let Some(out) = out {
        let dir = out_dir(Some(out))?;
        let path = dir.join("decompose.json");
        std::fs::write(&path, &text)?;
        let mut manifest = RunManifest::new("decompose", seed, threads, payload);
        manifest.record_output(&path);
        manifest.write(&dir)?;
    }
    Ok(())
}

fn cmd_rate(
    config_source: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    extended: bool,
    synthetic: bool,
    threads: usize,
) -> Result<(), Error> {
    let mut config = load_config(config_source)?;
    if let Some(s) = seed {
        config.master_seed = s;
    }
    if extended && !config.n.contains(&1_000_000) {
        config.n.push(1_000_000);
    }
    if config.n.len() < 3 {
        return Err(Error::Config(
            "rate regression needs at least 3 sample sizes in n".into(),
        ));
    }
    let dir = out_dir(out)?;
    let alpha = config.primary_alpha();
    let w0 = config.w0_vec();

    let mut fits: Vec<(f64, RateFit)> = Vec::new();
    let mut rows = Vec::new();
    for &nu in &config.nu {
        let fit = if synthetic {
            let points: Vec<(f64, f64)> = config
                .n
                .iter()
                .map(|&n| ((n as f64).ln(), (n as f64).powf(-0.75).ln()))
                .collect();
            let (slope, intercept, r_squared) = monte_carlo::ols(&points)?;
            RateFit { slope, intercept, r_squared, points }
        } else {
            let model = config.model_for(nu)?;
            let cells: Vec<_> = config
                .n
                .iter()
                .map(|&n| {
                    monte_carlo::run_cell(&model, &w0, alpha, n, config.m, config.master_seed)
                })
                .collect::<Result<_, _>>()?;
            monte_carlo::rate_regression(&cells)?
        };
        println!(
            "nu={nu}: slope {:.4}, intercept {:.4}, R² {:.5}",
            fit.slope, fit.intercept, fit.r_squared
        );
        rows.push(vec![
            format_f64(nu),
            format_f64(alpha),
            format_f64(fit.slope),
            format_f64(fit.intercept),
            format_f64(fit.r_squared),
            config.m.to_string(),
            synthetic.to_string(),
        ]);
        fits.push((nu, fit));
    }

    let csv_path = dir.join("rate.csv");
    report::write_csv(
        &csv_path,
        &["nu", "alpha", "slope", "intercept", "r_squared", "m", "synthetic"],
        &rows,
    )?;
    let json_path = dir.join("rate.json");
    let payload = json!({
        "alpha": alpha,
        "synthetic": synthetic,
        "fits": fits.iter().map(|(nu, f)| json!({"nu": nu, "fit": f})).collect::<Vec<_>>(),
        "config": &config,
    });
    std::fs::write(&json_path, serde_json::to_string_pretty(&payload).expect("rate payload"))?;

    let mut manifest = RunManifest::new(
        "rate",
        config.master_seed,
        threads,
        serde_json::to_value(&config).expect("config serializes"),
    );
    manifest.record_output(&csv_path);
    manifest.record_output(&json_path);
    let mp = manifest.write(&dir)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    println!("wrote {}", mp.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    config_source: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    constant: Option<f64>,
    kind: KindArg,
    radius: f64,
    grid_size: usize,
    n_mc: usize,
    threads: usize,
) -> Result<(), Error> {
    let mut config = load_config(config_source)?;
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let dir = out_dir(out)?;
    let kind = match kind {
        KindArg::Generic => BoundKind::Generic,
        KindArg::TModel => BoundKind::TModel,
    };
    let nu = config.nu[0];
    let alpha = config.primary_alpha();
    let model = config.model_for(nu)?;
    let w0 = config.w0_vec();
    let q0 = model.population_quantile(&w0, alpha)?;
    let ms = config.master_seed;
    let e_norm = bounds::estimate_mean_norm(&model, 1_000_000, crate::seeding::derive_seed(ms, &[11]))?;

    let constant_used = match constant {
        Some(c) => c,
        None => {
            let cal = bounds::perturbation_grid(&w0, q0, radius, grid_size, crate::seeding::derive_seed(ms, &[12]))?;
            bounds::fit_constant(
                &model, &w0, q0, kind, &cal, n_mc,
                crate::seeding::derive_seed(ms, &[13]), 1.5, e_norm,
            )?
        }
    };

    let mut held = bounds::perturbation_grid(&w0, q0, radius, grid_size, crate::seeding::derive_seed(ms, &[14]))?;
    held.insert(0, (w0.clone(), q0)); // zero-perturbation reference row
    let reports = bounds::verify_bound(
        &model, &w0, q0, &held, constant_used, kind, n_mc,
        crate::seeding::derive_seed(ms, &[15]), e_norm,
    )?;

    let rows: Vec<Vec<String>> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                i.to_string(),
                r.w.iter().map(|x| format_f64(*x)).collect::<Vec<_>>().join(";"),
                format_f64(r.t),
                format_f64(r.q0),
                format_f64(r.observed),
                format_f64(r.mcse),
                format_f64(r.bound_value),
                format_f64(r.constant_used),
                format_f64(r.slack),
                r.violation.to_string(),
            ]
        })
        .collect();
    let csv_path = dir.join("bounds.csv");
    report::write_csv(
        &csv_path,
        &["index", "w", "t", "q0", "observed", "mcse", "bound_value", "constant_used", "slack", "violation"],
        &rows,
    )?;
    let json_path = dir.join("bounds.json");
    let payload = json!({
        "kind": kind,
        "constant_used": constant_used,
        "fitted": constant.is_none(),
        "safety_factor": 1.5,
        "e_norm_r": e_norm,
        "nu": nu,
        "alpha": alpha,
        "q0": q0,
        "radius": radius,
        "n_mc": n_mc,
        "violations": reports.iter().filter(|r| r.violation).count(),
        "reports": reports,
    });
    std::fs::write(&json_path, serde_json::to_string_pretty(&payload).expect("bounds payload"))?;

    let mut manifest = RunManifest::new(
        "bounds",
        config.master_seed,
        threads,
        serde_json::to_value(&config).expect("config serializes"),
    );
    manifest.record_output(&csv_path);
    manifest.record_output(&json_path);
    manifest.write(&dir)?;
    let violations = reports.iter().filter(|r| r.violation).count();
    println!(
        "constant {constant_used:.6} ({kind:?}): {violations} violation(s) across {} grid points",
        reports.len()
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_ci(
    p: usize,
    rho: f64,
    nu: f64,
    alpha: f64,
    gamma: f64,
    n: usize,
    seed: u64,
    w: Option<Vec<f64>>,
    method: MethodArg,
    out: Option<PathBuf>,
    threads: usize,
) -> Result<(), Error> {
    let model = MvtModel::equicorrelated(p, rho, nu)?;
    let w = w.unwrap_or_else(|| vec![1.0 / p as f64; p]);
    let sample = model.sample(n, seed)?;
    let proj = ProjectedSample::new(&sample, &w)?;
    let q_hat = proj.quantile(alpha)?;
    let law = model.project_loss(&w)?;
    let q_pop = law.quantile(alpha)?;
    let (density, method_enum, eval_point) = match method {
        MethodArg::Analytic => (law.pdf(q_pop)?, DensityMethod::Analytic, q_pop),
        MethodArg::Kernel => (
            inference::kernel_density_at(proj.losses(), q_hat)?,
            DensityMethod::Kernel,
            q_hat,
        ),
    };
    let ci = inference::confidence_interval(q_hat, alpha, gamma, n, density, method_enum)?;
    let z = if gamma == 1.0 {
        0.0
    } else {
        inference::standard_normal_quantile(1.0 - gamma / 2.0)?
    };
    let payload = json!({
        "ci": ci,
        "lower": ci.lower(),
        "upper": ci.upper(),
        "z_value": z,
        "alpha": alpha,
        "n": n,
        "density_eval_point": eval_point,
        "population_quantile": q_pop,
        "model": { "p": p, "rho": rho, "nu": nu },
        "w": w,
        "sample_seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let text = serde_json::to_string_pretty(&payload).expect("ci payload");
    println!("{text}");
    if let Some(out) = out {
        let dir = out_dir(Some(out))?;
        let path = dir.join("ci.json");
        std::fs::write(&path, &text)?;
        let mut manifest = RunManifest::new("ci", seed, threads, payload);
        manifest.record_output(&path);
        manifest.write(&dir)?;
    }
    Ok(())
}
