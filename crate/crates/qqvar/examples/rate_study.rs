//! Decay rate of the remainder: regress log mean|d3| on log n. The remainder
//! shrinks like n^(-3/4), visibly faster than the n^(-1/2) of the leading
//! terms. Reduced replication count here; the binary's `desk_rate` preset is
//! the full desk-scale study.
//!
//! Run with: cargo run --release --example rate_study

use qqvar::monte_carlo::{rate_regression, run_cell};
use qqvar::MvtModel;

fn main() -> qqvar::Result<()> {
    let w0 = vec![0.2; 5];
    let alpha = 0.95;
    let m = 400;
    for nu in [5.0, 10.0] {
        let model = MvtModel::equicorrelated(5, 0.5, nu)?;
        let cells: Vec<_> = [1_000usize, 10_000, 100_000]
            .iter()
            .map(|&n| run_cell(&model, &w0, alpha, n, m, 31_415))
            .collect::<qqvar::Result<_>>()?;
        for c in &cells {
            println!(
                "nu={nu} n={:>6}: mean|d3| = {:.6} (mcse {:.6})",
                c.n, c.mean_abs_d3, c.mcse_d3
            );
        }
        let fit = rate_regression(&cells)?;
        println!(
            "nu={nu}: slope {:.3}, intercept {:.3}, R² {:.4}\n",
            fit.slope, fit.intercept, fit.r_squared
        );
    }
    Ok(())
}
