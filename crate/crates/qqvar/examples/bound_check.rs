//! Calibrate a symmetric-difference bound constant and verify it on held-out
//! perturbations. Both bound families are checked: the first-order t-model
//! form and the half-order generic form.
//!
//! Run with: cargo run --release --example bound_check

use qqvar::bounds::{
    estimate_mean_norm, exact_sym_diff_parallel, fit_constant, perturbation_grid, verify_bound,
    BoundKind,
};
use qqvar::MvtModel;

fn main() -> qqvar::Result<()> {
    let model = MvtModel::equicorrelated(5, 0.5, 10.0)?;
    let w0 = vec![0.2; 5];
    let alpha = 0.95;
    let q0 = model.population_quantile(&w0, alpha)?;
    let e_norm = estimate_mean_norm(&model, 500_000, 1)?;
    println!("plug-in E||R|| = {e_norm:.4}, q0 = {q0:.4}");

    // parallel half-spaces have a closed form to sanity-check against
    let law = model.project_loss(&w0)?;
    let t = law.quantile(0.97)?;
    println!(
        "parallel case: exact P(A Δ B) between the 95% and 97% thresholds = {:.4}",
        exact_sym_diff_parallel(&law, t, q0)?
    );

    let calibration = perturbation_grid(&w0, q0, 0.05, 60, 11)?;
    let held_out = perturbation_grid(&w0, q0, 0.05, 60, 12)?;
    for kind in [BoundKind::TModel, BoundKind::Generic] {
        let c = fit_constant(&model, &w0, q0, kind, &calibration, 100_000, 13, 1.5, e_norm)?;
        let reports = verify_bound(&model, &w0, q0, &held_out, c, kind, 100_000, 14, e_norm)?;
        let violations = reports.iter().filter(|r| r.violation).count();
        let mean_slack: f64 =
            reports.iter().map(|r| r.slack).sum::<f64>() / reports.len() as f64;
        println!(
            "{kind:?}: constant {c:.4}, {violations} violations on {} held-out points, mean slack {mean_slack:.5}",
            reports.len()
        );
    }
    Ok(())
}
