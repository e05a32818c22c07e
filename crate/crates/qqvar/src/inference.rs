//! Asymptotic confidence intervals for the projected quantile.
//!
//! The interval is q̂ ± z_{1−γ/2}·√(α(1−α)) / (√n · f̂), where f̂ is the
//! projected density at the quantile. The density can be the analytic
//! projected-t value (model known) or a Gaussian-kernel estimate with the
//! Silverman bandwidth (model-free); which one was used is recorded in the
//! result.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMethod {
    Analytic,
    Kernel,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuantileCI {
    pub center: f64,
    pub half_width: f64,
    /// 1 − coverage level.
    pub gamma: f64,
    pub density_used: f64,
    pub density_method: DensityMethod,
}

impl QuantileCI {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower() && x <= self.upper()
    }
}

/// (1−γ) confidence interval around the sample quantile.
///
/// γ = 1 is accepted as a degenerate limit (z_{1/2} = 0, zero width).
pub fn confidence_interval(
    q_hat: f64,
    alpha: f64,
    gamma: f64,
    n: usize,
    density: f64,
    method: DensityMethod,
) -> Result<QuantileCI> {
    if !(density > 0.0) {
        return Err(Error::invalid(format!(
            "density must be positive, got {density}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0,1)")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("gamma {gamma} outside (0,1]")));
    }
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    let z = if gamma == 1.0 {
        0.0
    } else {
        special::normal_quantile(1.0 - gamma / 2.0)?
    };
    let half_width = z * (alpha * (1.0 - alpha)).sqrt() / ((n as f64).sqrt() * density);
    Ok(QuantileCI {
        center: q_hat,
        half_width,
        gamma,
        density_used: density,
        density_method: method,
    })
}

/// Silverman bandwidth 0.9·min(sd, IQR/1.34)·n^{-1/5} on sorted data.
pub fn silverman_bandwidth(sorted: &[f64]) -> Result<f64> {
    let n = sorted.len();
    if n < 10 {
        return Err(Error::invalid("kernel estimate needs at least 10 points"));
    }
    let nf = n as f64;
    let mean: f64 = sorted.iter().sum::<f64>() / nf;
    let var: f64 = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let order_stat = |a: f64| sorted[((nf * a).ceil() as usize).clamp(1, n) - 1];
    let iqr = order_stat(0.75) - order_stat(0.25);
    let spread = sd.min(iqr / 1.34);
    if !(spread > 0.0) {
        return Err(Error::DegenerateSample(
            "zero spread: bandwidth undefined".into(),
        ));
    }
    Ok(0.9 * spread * nf.powf(-0.2))
}

/// Gaussian-kernel density estimate at x with the Silverman bandwidth.
pub fn kernel_density_at(sorted_losses: &[f64], x: f64) -> Result<f64> {
    let h = silverman_bandwidth(sorted_losses)?;
    kernel_density_at_with_bandwidth(sorted_losses, x, h)
}

/// Same with an explicit bandwidth; strictly positive by construction.
pub fn kernel_density_at_with_bandwidth(
    sorted_losses: &[f64],
    x: f64,
    bandwidth: f64,
) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    if sorted_losses.is_empty() {
        return Err(Error::EmptySample);
    }
    if !x.is_finite() {
        return Err(Error::invalid("evaluation point must be finite"));
    }
    let n = sorted_losses.len() as f64;
    let sum: f64 = sorted_losses
        .iter()
        .map(|&xi| special::normal_pdf((x - xi) / bandwidth))
        .sum();
    Ok(sum / (n * bandwidth))
}

/// Inverse standard normal cdf; |cdf(result) − p| ≤ 1e-12.
pub fn standard_normal_quantile(p: f64) -> Result<f64> {
    special::normal_quantile(p)
}
