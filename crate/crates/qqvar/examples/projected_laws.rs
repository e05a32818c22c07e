//! The exact projected-loss law: every linear projection of a multivariate-t
//! return vector is univariate Student-t, so population quantities are
//! analytic. Compares exact cdf/quantile values against a large sample.
//!
//! Run with: cargo run --release --example projected_laws

use qqvar::empirical::ProjectedSample;
use qqvar::MvtModel;

fn main() -> qqvar::Result<()> {
    let model = MvtModel::equicorrelated(5, 0.5, 5.0)?;
    let w = vec![0.2; 5];

    let law = model.project_loss(&w)?;
    println!(
        "projected law: location {:.3}, scale {:.6}, nu {}",
        law.loc(),
        law.scale(),
        law.nu()
    );

    let sample = model.sample(200_000, 2024)?;
    let proj = ProjectedSample::new(&sample, &w)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "alpha", "exact q", "sample q", "gap");
    for alpha in [0.90, 0.95, 0.99] {
        let exact = law.quantile(alpha)?;
        let empirical = proj.quantile(alpha)?;
        println!(
            "{alpha:>6} {exact:>12.6} {empirical:>12.6} {:>12.2e}",
            (exact - empirical).abs()
        );
    }

    println!();
    println!("gradient of the 95% quantile in w:");
    let grad = model.quantile_gradient(&w, 0.95)?;
    println!("  {grad:.6?}");
    Ok(())
}
