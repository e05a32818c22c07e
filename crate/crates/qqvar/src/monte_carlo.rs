//! Replication engine: weight perturbation, per-cell summaries with Monte
//! Carlo standard errors, table emission, and the remainder-rate regression.
//!
//! Reproducibility contract: the seed of replication j in cell (ν, α, n) is a
//! pure function of (master_seed, ν, α, n, j). Replications run in parallel
//! but are accumulated in replication order, so summaries and emitted CSVs
//! are bit-identical for any worker count.

use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition;
use crate::dist::MvtModel;
use crate::error::{Error, Result};
use crate::report::{self, format_f64};
use crate::seeding::{derive_seed, rng_from_seed};

/// Simulation design: equicorrelated scatter, zero location, equal reference
/// weights unless overridden.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub p: usize,
    pub rho: f64,
    /// Degrees-of-freedom sweep.
    pub nu: Vec<f64>,
    /// Quantile levels.
    pub alpha: Vec<f64>,
    /// Sample sizes.
    pub n: Vec<usize>,
    /// Replications per cell.
    pub m: usize,
    pub master_seed: u64,
    /// Reference weights; defaults to 1/p each. Must sum to one.
    #[serde(default)]
    pub w0: Option<Vec<f64>>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        MvtModel::equicorrelated(self.p, self.rho, self.nu.first().copied().unwrap_or(5.0))?;
        if self.m < 2 {
            return Err(Error::Config("m must be at least 2".into()));
        }
        if self.nu.is_empty() || self.alpha.is_empty() || self.n.is_empty() {
            return Err(Error::Config("nu, alpha, and n lists must be nonempty".into()));
        }
        for &nu in &self.nu {
            if !(nu > 0.0) {
                return Err(Error::Config(format!("nu must be positive, got {nu}")));
            }
        }
        for &a in &self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!("alpha {a} outside (0,1)")));
            }
        }
        for &n in &self.n {
            if n < 1 {
                return Err(Error::Config("sample sizes must be at least 1".into()));
            }
        }
        let w0 = self.w0_vec();
        if w0.len() != self.p {
            return Err(Error::Config(format!(
                "w0 has length {} but p = {}",
                w0.len(),
                self.p
            )));
        }
        let sum: f64 = w0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("w0 must sum to one, sums to {sum}")));
        }
        Ok(())
    }

    pub fn w0_vec(&self) -> Vec<f64> {
        self.w0
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.p as f64; self.p])
    }

    pub fn model_for(&self, nu: f64) -> Result<MvtModel> {
        MvtModel::equicorrelated(self.p, self.rho, nu)
    }

    /// The alpha used for the component tables: 0.95 when present, otherwise
    /// the first entry.
    pub fn primary_alpha(&self) -> f64 {
        self.alpha
            .iter()
            .copied()
            .find(|a| (a - 0.95).abs() < 1e-12)
            .unwrap_or(self.alpha[0])
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Per-(ν, α, n) Monte Carlo summary.
#[derive(Debug, Clone, Serialize)]
pub struct McCellSummary {
    pub nu: f64,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub mean_abs_d1: f64,
    pub mean_abs_d2: f64,
    pub mean_abs_d3: f64,
    pub mcse_d1: f64,
    pub mcse_d2: f64,
    pub mcse_d3: f64,
    /// mean|d3| / (mean|d1| + mean|d2| + mean|d3|).
    pub rel_contribution_d3: f64,
    pub boundary_flag: bool,
    /// Total weight-perturbation resamples across replications (degenerate
    /// normalization sums; astronomically rare at the stated scales).
    pub resamples: u64,
}

/// OLS fit of log mean|d3| against log n.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// (ln n, ln mean|d3|) pairs entering the fit.
    pub points: Vec<(f64, f64)>,
}

/// ŵ = (w0 + ε)/sum(w0 + ε) with ε ~ N(0, n^{-1} I_p).
pub fn perturb_weights(w0: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    perturb_weights_counted(w0, n, seed).map(|(w, _)| w)
}

/// Same, also reporting how many times the draw was rejected because the sum
/// landed within 1e-8 of zero.
pub fn perturb_weights_counted(w0: &[f64], n: usize, seed: u64) -> Result<(Vec<f64>, u32)> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let sum_w0: f64 = w0.iter().sum();
    if (sum_w0 - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "reference weights must sum to one, sum is {sum_w0}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let sd = 1.0 / (n as f64).sqrt();
    let mut resamples = 0u32;
    loop {
        let w: Vec<f64> = w0
            .iter()
            .map(|&x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x + sd * z
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s.abs() > 1e-8 {
            return Ok((w.iter().map(|x| x / s).collect(), resamples));
        }
        resamples += 1;
    }
}

/// Run one simulation cell: draw ŵ and a sample per replication, decompose,
/// and summarize the absolute components.
pub fn run_cell(
    model: &MvtModel,
    w0: &[f64],
    alpha: f64,
    n: usize,
    m: usize,
    master_seed: u64,
) -> Result<McCellSummary> {
    if m < 2 {
        return Err(Error::invalid("m must be at least 2"));
    }
    let nu = model.nu();
    let outcomes: Vec<(f64, f64, f64, u32)> = (0..m)
        .into_par_iter()
        .map(|j| -> Result<(f64, f64, f64, u32)> {
            let rep_seed = derive_seed(
                master_seed,
                &[nu.to_bits(), alpha.to_bits(), n as u64, j as u64],
            );
            let (w_hat, resamples) =
                perturb_weights_counted(w0, n, derive_seed(rep_seed, &[1]))?;
            let sample = model.sample(n, derive_seed(rep_seed, &[2]))?;
            let d = decomposition::compute(model, &sample, w0, &w_hat, alpha)?;
            Ok((d.d1.abs(), d.d2.abs(), d.d3.abs(), resamples))
        })
        .collect::<Result<Vec<_>>>()?;

    // order-fixed accumulation: results are already indexed by replication
    let mf = m as f64;
    let mut sums = [0.0f64; 3];
    let mut resamples = 0u64;
    for &(a, b, c, r) in &outcomes {
        sums[0] += a;
        sums[1] += b;
        sums[2] += c;
        resamples += r as u64;
    }
    let means = [sums[0] / mf, sums[1] / mf, sums[2] / mf];
    let mut sq = [0.0f64; 3];
    for &(a, b, c, _) in &outcomes {
        sq[0] += (a - means[0]).powi(2);
        sq[1] += (b - means[1]).powi(2);
        sq[2] += (c - means[2]).powi(2);
    }
    let mcse = |k: usize| (sq[k] / (mf - 1.0)).sqrt() / mf.sqrt();

    Ok(McCellSummary {
        nu,
        alpha,
        n,
        m,
        mean_abs_d1: means[0],
        mean_abs_d2: means[1],
        mean_abs_d3: means[2],
        mcse_d1: mcse(0),
        mcse_d2: mcse(1),
        mcse_d3: mcse(2),
        rel_contribution_d3: means[2] / (means[0] + means[1] + means[2]),
        boundary_flag: model.is_boundary(),
        resamples,
    })
}

/// Ordinary least squares for y on x; returns (slope, intercept, r²).
pub fn ols(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("x values are constant"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, intercept, r2))
}

/// Fit the decay rate of mean|d3| across sample sizes for a fixed (ν, α).
pub fn rate_regression(cells: &[McCellSummary]) -> Result<RateFit> {
    let mut ns: Vec<usize> = cells.iter().map(|c| c.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::invalid(format!(
            "rate regression needs at least 3 distinct sample sizes, got {}",
            ns.len()
        )));
    }
    if let Some(first) = cells.first() {
        for c in cells {
            if c.nu != first.nu || c.alpha != first.alpha {
                return Err(Error::invalid(
                    "rate regression cells must share (nu, alpha)",
                ));
            }
        }
    }
    let points: Vec<(f64, f64)> = cells
        .iter()
        .map(|c| ((c.n as f64).ln(), c.mean_abs_d3.ln()))
        .collect();
    let (slope, intercept, r_squared) = ols(&points)?;
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points,
    })
}

/// All cells of a config, in deterministic (ν, α, n) order.
pub fn run_all_cells(config: &SimConfig) -> Result<Vec<McCellSummary>> {
    config.validate()?;
    let w0 = config.w0_vec();
    let mut cells = Vec::new();
    for &nu in &config.nu {
        let model = config.model_for(nu)?;
        for &alpha in &config.alpha {
            for &n in &config.n {
                cells.push(run_cell(&model, &w0, alpha, n, config.m, config.master_seed)?);
            }
        }
    }
    Ok(cells)
}

/// Cells plus the files they were written to.
#[derive(Debug)]
pub struct TableSet {
    pub cells: Vec<McCellSummary>,
    pub paths: Vec<PathBuf>,
}

/// Run every cell and emit the three-table layout:
/// component magnitudes at the primary alpha and largest n (table1), the
/// remainder sweep over alpha at largest n (table2), and the full
/// sample-size progression (table_appendix), plus a JSON sidecar carrying
/// config, seeds, and conventions.
pub fn reproduce_tables(config: &SimConfig, out_dir: &Path) -> Result<TableSet> {
    let cells = run_all_cells(config)?;
    std::fs::create_dir_all(out_dir)?;
    let n_max = config.n.iter().copied().max().expect("validated nonempty");
    let a_primary = config.primary_alpha();

    let component_cols = [
        "nu",
        "alpha",
        "n",
        "m",
        "mean_abs_d1",
        "mcse_d1",
        "mean_abs_d2",
        "mcse_d2",
        "mean_abs_d3",
        "mcse_d3",
        "rel_contribution_d3",
        "boundary",
    ];
    let component_row = |c: &McCellSummary| -> Vec<String> {
        vec![
            format_f64(c.nu),
            format_f64(c.alpha),
            c.n.to_string(),
            c.m.to_string(),
            format_f64(c.mean_abs_d1),
            format_f64(c.mcse_d1),
            format_f64(c.mean_abs_d2),
            format_f64(c.mcse_d2),
            format_f64(c.mean_abs_d3),
            format_f64(c.mcse_d3),
            format_f64(c.rel_contribution_d3),
            c.boundary_flag.to_string(),
        ]
    };

    let mut paths = Vec::new();

    let t1: Vec<Vec<String>> = cells
        .iter()
        .filter(|c| c.n == n_max && c.alpha == a_primary)
        .map(component_row)
        .collect();
    let p1 = out_dir.join("table1.csv");
    report::write_csv(&p1, &component_cols, &t1)?;
    paths.push(p1);

    let t2: Vec<Vec<String>> = cells
        .iter()
        .filter(|c| c.n == n_max)
        .map(|c| {
            vec![
                format_f64(c.nu),
                format_f64(c.alpha),
                c.n.to_string(),
                c.m.to_string(),
                format_f64(c.mean_abs_d3),
                format_f64(c.mcse_d3),
                c.boundary_flag.to_string(),
            ]
        })
        .collect();
    let p2 = out_dir.join("table2.csv");
    report::write_csv(
        &p2,
        &["nu", "alpha", "n", "m", "mean_abs_d3", "mcse_d3", "boundary"],
        &t2,
    )?;
    paths.push(p2);

    let t3: Vec<Vec<String>> = cells
        .iter()
        .filter(|c| c.alpha == a_primary)
        .map(component_row)
        .collect();
    let p3 = out_dir.join("table_appendix.csv");
    report::write_csv(&p3, &component_cols, &t3)?;
    paths.push(p3);

    let sidecar = serde_json::json!({
        "config": config,
        "master_seed": config.master_seed,
        "version": env!("CARGO_PKG_VERSION"),
        "quantile_convention": report::QUANTILE_CONVENTION,
        "halfspace_convention": report::HALFSPACE_CONVENTION,
        "total_resamples": cells.iter().map(|c| c.resamples).sum::<u64>(),
        "cells": cells,
    });
    let pj = out_dir.join("tables.json");
    std::fs::write(&pj, serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"))?;
    paths.push(pj);

    Ok(TableSet { cells, paths })
}

pub fn smoke_config() -> SimConfig {
    SimConfig {
        p: 5,
        rho: 0.5,
        nu: vec![2.0, 10.0],
        alpha: vec![0.9, 0.95],
        n: vec![500, 1000],
        m: 2,
        master_seed: 7_2025,
        w0: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn perturbation_normalizes_and_replays() {
        let w0 = vec![0.2; 5];
        for seed in 0..100 {
            let w = perturb_weights(&w0, 10_000, seed).unwrap();
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
        }
        let a = perturb_weights(&w0, 10_000, 42).unwrap();
        let b = perturb_weights(&w0, 10_000, 42).unwrap();
        assert_eq!(a, b);
        assert!(perturb_weights(&[0.4, 0.4], 100, 1).is_err());
        assert!(perturb_weights(&w0, 0, 1).is_err());
    }

    #[test]
    fn perturbation_magnitude_scales_as_root_n() {
        let w0 = vec![0.2; 5];
        let median_dist = |n: usize, tag: u64| -> f64 {
            let mut d: Vec<f64> = (0..10_000u64)
                .map(|s| {
                    let w = perturb_weights(&w0, n, derive_seed(tag, &[s])).unwrap();
                    linalg::norm(&linalg::sub(&w, &w0))
                })
                .collect();
            d.sort_by(|a, b| a.total_cmp(b));
            d[5_000]
        };
        let ratio = median_dist(1_000, 1) / median_dist(100_000, 2);
        assert!(
            (ratio - 10.0).abs() <= 1.5,
            "median ratio {ratio} should be 10 ± 15%"
        );
    }

    #[test]
    fn run_cell_is_invariant_to_worker_count() {
        let cfg = smoke_config();
        let model = cfg.model_for(10.0).unwrap();
        let w0 = cfg.w0_vec();
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_cell(&model, &w0, 0.95, 400, 50, 99).unwrap())
        };
        let a = run_with(1);
        let b = run_with(4);
        assert_eq!(a.mean_abs_d1.to_bits(), b.mean_abs_d1.to_bits());
        assert_eq!(a.mean_abs_d2.to_bits(), b.mean_abs_d2.to_bits());
        assert_eq!(a.mean_abs_d3.to_bits(), b.mean_abs_d3.to_bits());
        assert_eq!(a.mcse_d3.to_bits(), b.mcse_d3.to_bits());
        assert!(!a.boundary_flag);
        assert!(a.rel_contribution_d3 > 0.0 && a.rel_contribution_d3 < 1.0);
    }

    #[test]
    fn synthetic_power_law_regression_is_exact() {
        let mk = |n: usize| McCellSummary {
            nu: 5.0,
            alpha: 0.95,
            n,
            m: 2,
            mean_abs_d1: 0.0,
            mean_abs_d2: 0.0,
            mean_abs_d3: (n as f64).powf(-0.75),
            mcse_d1: 0.0,
            mcse_d2: 0.0,
            mcse_d3: 0.0,
            rel_contribution_d3: 1.0,
            boundary_flag: false,
            resamples: 0,
        };
        let cells: Vec<_> = [1_000, 10_000, 100_000, 1_000_000].iter().map(|&n| mk(n)).collect();
        let fit = rate_regression(&cells).unwrap();
        assert!((fit.slope + 0.75).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-10);

        assert!(rate_regression(&cells[..2]).is_err());
        let mut mixed = cells.clone();
        mixed[0].alpha = 0.9;
        assert!(rate_regression(&mixed).is_err());
    }

    #[test]
    fn mcse_is_a_small_share_of_the_mean_at_full_replication_count() {
        // at m = 1e4 each component's MCSE sits well under 5% of its mean
        let cfg = smoke_config();
        let model = cfg.model_for(5.0).unwrap();
        let c = run_cell(&model, &cfg.w0_vec(), 0.95, 500, 10_000, 11).unwrap();
        assert!(c.mcse_d1 <= 0.05 * c.mean_abs_d1, "{} vs {}", c.mcse_d1, c.mean_abs_d1);
        assert!(c.mcse_d2 <= 0.05 * c.mean_abs_d2);
        assert!(c.mcse_d3 <= 0.05 * c.mean_abs_d3);
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let mut cfg = smoke_config();
        assert!(cfg.validate().is_ok());
        cfg.m = 1;
        assert!(cfg.validate().is_err());
        cfg.m = 2;
        cfg.alpha = vec![1.5];
        assert!(cfg.validate().is_err());
        cfg.alpha = vec![0.95];
        cfg.rho = 0.999_999;
        assert!(cfg.validate().is_ok());
        cfg.rho = -0.3; // below -1/(p-1) = -0.25
        assert!(cfg.validate().is_err());
        cfg.rho = 0.5;
        cfg.w0 = Some(vec![0.5, 0.5, 0.0, 0.0, 0.1]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let text = "p = 5\nrho = 0.5\nnu = [5.0]\nalpha = [0.95]\nn = [100]\nm = 2\nmaster_seed = 1\ntypo_key = 3\n";
        assert!(SimConfig::from_toml(text).is_err());
        let ok = "p = 5\nrho = 0.5\nnu = [5.0]\nalpha = [0.95]\nn = [100]\nm = 2\nmaster_seed = 1\n";
        assert!(SimConfig::from_toml(ok).is_ok());
    }

    #[test]
    fn tables_are_deterministic() {
        let cfg = smoke_config();
        let dir = tempfile::tempdir().unwrap();
        let first = reproduce_tables(&cfg, dir.path()).unwrap();
        assert_eq!(first.paths.len(), 4);
        let bytes: Vec<Vec<u8>> = first
            .paths
            .iter()
            .map(|p| std::fs::read(p).unwrap())
            .collect();
        let again = reproduce_tables(&cfg, dir.path()).unwrap();
        for (p, old) in again.paths.iter().zip(&bytes) {
            let new = std::fs::read(p).unwrap();
            assert_eq!(&new, old, "{} changed between runs", p.display());
        }
        let header = String::from_utf8(bytes[0].clone()).unwrap();
        assert!(header.starts_with(
            "nu,alpha,n,m,mean_abs_d1,mcse_d1,mean_abs_d2,mcse_d2,mean_abs_d3,mcse_d3,rel_contribution_d3,boundary"
        ));
    }
}
