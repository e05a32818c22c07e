//! Directions that do not move the projected law to first order: along any h
//! with hᵀμ = 0 and hᵀΣw0 = 0 the weight-derivative of F(w, q0) vanishes, so
//! all first-order movement lives in the quantile coordinate. Demonstrates
//! the vanishing derivative and the quadratic shrinkage of the first-order
//! residual.
//!
//! Run with: cargo run --release --example tangent_space

use qqvar::decomposition::{directional_derivative, first_order_check, tangent_basis};
use qqvar::MvtModel;

fn main() -> qqvar::Result<()> {
    let model = MvtModel::equicorrelated(5, 0.5, 10.0)?;
    let w0 = vec![0.2; 5];
    let alpha = 0.95;
    let q0 = model.population_quantile(&w0, alpha)?;

    let basis = tangent_basis(&model, &w0)?;
    println!("tangent space dimension: {}", basis.dimension());
    for (i, h) in basis.vectors().iter().enumerate() {
        let dd = directional_derivative(&model, &w0, q0, h)?;
        println!("  h{i}: weight-derivative of F = {dd:+.2e}");
    }

    // a non-tangent direction moves F at first order
    let dd = directional_derivative(&model, &w0, q0, &w0)?;
    println!("  w0 itself (not tangent): {dd:+.2e}");

    println!();
    println!("first-order residual along a tangent direction:");
    let h = basis.vectors()[0].clone();
    println!("{:>10} {:>14} {:>14} {:>14}", "eps=delta", "lhs", "rhs", "residual");
    let mut scale = 4e-3;
    for _ in 0..4 {
        let c = first_order_check(&model, &w0, alpha, &h, scale, scale)?;
        println!(
            "{scale:>10.1e} {:>14.3e} {:>14.3e} {:>14.3e}",
            c.lhs, c.rhs, c.residual
        );
        scale /= 2.0;
    }
    println!("(each halving divides the residual by about four)");
    Ok(())
}
