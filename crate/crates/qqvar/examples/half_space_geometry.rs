//! Half-space symmetric differences on a sample: the indicator identities,
//! the four-cell partition, and the grid sup-discrepancy between empirical
//! and population half-space probabilities.
//!
//! Run with: cargo run --release --example half_space_geometry

use qqvar::empirical::{
    great_circle_grid, partition_counts, sup_discrepancy, sym_diff_proportion,
};
use qqvar::{HalfSpace, MvtModel};

fn main() -> qqvar::Result<()> {
    let model = MvtModel::equicorrelated(5, 0.5, 5.0)?;
    let w0 = vec![0.2; 5];
    let q0 = model.population_quantile(&w0, 0.95)?;
    let sample = model.sample(50_000, 99)?;

    let reference = HalfSpace::new(w0.clone(), q0)?;
    let perturbed = HalfSpace::new(vec![0.23, 0.17, 0.21, 0.2, 0.19], q0 + 0.02)?;

    let prop = sym_diff_proportion(&sample, &perturbed, &reference)?;
    let cells = partition_counts(&sample, &perturbed, &reference)?;
    println!("P_n(A Δ B) = {prop:.5}");
    println!(
        "four-cell counts: n11={} n10={} n01={} n00={} (sum {})",
        cells.n11,
        cells.n10,
        cells.n01,
        cells.n00,
        cells.total()
    );
    println!(
        "identity (n10 + n01)/n = {:.5}",
        (cells.n10 + cells.n01) as f64 / cells.total() as f64
    );

    println!();
    let grid = great_circle_grid(&model, &w0, 0.95, 21, 21, 0.1)?;
    let sup = sup_discrepancy(&sample, &model, &grid)?;
    println!(
        "sup |F_n - F| over a {}-point neighborhood grid: {sup:.5}",
        grid.len()
    );
    Ok(())
}
