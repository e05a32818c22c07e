//! Symmetric-difference bound evaluators and verifiers.
//!
//! Two bound families are implemented for P(AΔB) between a perturbed
//! half-space A = {−wᵀr ≤ t} and a reference B = {−w0ᵀr ≤ q0}:
//!
//!  - generic (half-order): C′·√(‖w−ŵ‖·E‖R‖ + |t−q|), needing only a first
//!    moment and local Lipschitz control;
//!  - t-model (first-order): C·{|t−q0| + |(w−w0)ᵀμ| + ((w−w0)ᵀΣ(w−w0))^{1/2}},
//!    using the explicit projected-t geometry.
//!
//! Neither constant is pinned down analytically, so constants are either
//! user-supplied or fitted by least squares on a calibration grid and then
//! verified on held-out perturbations. Violations are reported as data,
//! never raised.

use rand::Rng;
use serde::Serialize;

use crate::dist::{MvtModel, ProjectedT};
use crate::empirical::HalfSpace;
use crate::error::{Error, Result};
use crate::linalg;
use crate::seeding::{derive_seed, rng_from_seed};

/// Which bound family a constant belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    Generic,
    TModel,
}

/// Monte Carlo estimate of P(AΔB) with its binomial standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McSymDiff {
    pub estimate: f64,
    pub mcse: f64,
}

/// One verified grid point: observed probability vs bound value.
/// Negative slack is recorded, not clipped.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub w: Vec<f64>,
    pub t: f64,
    pub q0: f64,
    pub observed: f64,
    pub mcse: f64,
    pub bound_value: f64,
    pub constant_used: f64,
    pub slack: f64,
    pub violation: bool,
}

/// C′·√(‖w−ŵ‖·E‖R‖ + |t−q|).
pub fn generic_slab_bound(
    w: &[f64],
    w_hat: &[f64],
    t: f64,
    q: f64,
    e_norm_r: f64,
    c_prime: f64,
) -> Result<f64> {
    if !(c_prime > 0.0) {
        return Err(Error::invalid(format!("constant must be positive, got {c_prime}")));
    }
    if !(e_norm_r > 0.0) {
        return Err(Error::invalid(format!(
            "mean norm must be positive, got {e_norm_r}"
        )));
    }
    if w.len() != w_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: w_hat.len(),
        });
    }
    let dw = linalg::norm(&linalg::sub(w, w_hat));
    Ok(c_prime * (dw * e_norm_r + (t - q).abs()).sqrt())
}

/// C·{|t−q0| + |(w−w0)ᵀμ| + ((w−w0)ᵀΣ(w−w0))^{1/2}}.
pub fn t_population_bound(
    model: &MvtModel,
    w0: &[f64],
    w: &[f64],
    t: f64,
    q0: f64,
    c: f64,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::invalid(format!("constant must be positive, got {c}")));
    }
    if w.len() != w0.len() || w.len() != model.p() {
        return Err(Error::DimensionMismatch {
            expected: model.p(),
            got: w.len(),
        });
    }
    let delta = linalg::sub(w, w0);
    let loc_term = linalg::dot(&delta, model.mu()).abs();
    let scale_term = model.scatter_quad_form(&delta).sqrt();
    Ok(c * ((t - q0).abs() + loc_term + scale_term))
}

/// Exact P(AΔB) for half-spaces sharing a direction: |T(t) − T(q)|.
pub fn exact_sym_diff_parallel(law: &ProjectedT, t: f64, q: f64) -> Result<f64> {
    Ok((law.cdf(t)? - law.cdf(q)?).abs())
}

/// The slab inclusion behind the t-model bound: a point in AΔB must satisfy
/// |U − q0| ≤ |V| + |t − q0| with U = −w0ᵀr and V the projection of the
/// weight perturbation.
pub fn slab_inclusion_holds(r: &[f64], perturbed: &HalfSpace, reference: &HalfSpace) -> bool {
    let in_a = perturbed.contains(r);
    let in_b = reference.contains(r);
    if in_a == in_b {
        return true; // not in the symmetric difference
    }
    let u = -linalg::dot(reference.w(), r);
    let lp = -linalg::dot(perturbed.w(), r);
    let v = lp - u;
    (u - reference.t()).abs() <= v.abs() + (perturbed.t() - reference.t()).abs()
}

/// Monte Carlo estimate of P(AΔB) with binomial MCSE. Every sampled point in
/// the symmetric difference is also checked against the slab inclusion, which
/// is an exact set identity; a failure would indicate a bug, so it panics.
pub fn mc_sym_diff(
    model: &MvtModel,
    a: &HalfSpace,
    b: &HalfSpace,
    n: usize,
    seed: u64,
) -> Result<McSymDiff> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let sample = model.sample(n, seed)?;
    let mut hits = 0usize;
    for r in sample.rows() {
        if a.contains(r) != b.contains(r) {
            hits += 1;
            assert!(
                slab_inclusion_holds(r, a, b),
                "slab inclusion violated at a symmetric-difference point"
            );
        }
    }
    let p_hat = hits as f64 / n as f64;
    Ok(McSymDiff {
        estimate: p_hat,
        mcse: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
    })
}

/// Plug-in estimate of E‖R‖ from a fresh sample.
pub fn estimate_mean_norm(model: &MvtModel, n: usize, seed: u64) -> Result<f64> {
    let sample = model.sample(n, seed)?;
    Ok(sample.rows().map(linalg::norm).sum::<f64>() / n as f64)
}

/// Deterministic perturbation grid around (w0, q0): `count` points with radii
/// stepping up to `radius`, random unit directions for the weight move and a
/// signed fraction of the radius for the threshold move.
pub fn perturbation_grid(
    w0: &[f64],
    q0: f64,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    if count == 0 || !(radius > 0.0) {
        return Err(Error::invalid("grid needs a positive radius and size"));
    }
    let mut rng = rng_from_seed(seed);
    let p = w0.len();
    let mut grid = Vec::with_capacity(count);
    for i in 0..count {
        let mag = radius * (i + 1) as f64 / count as f64;
        let mut u: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
        let un = linalg::norm(&u);
        if un == 0.0 {
            u[0] = 1.0;
        } else {
            u = linalg::scale(&u, 1.0 / un);
        }
        let mut w = w0.to_vec();
        linalg::axpy(&mut w, mag, &u);
        let t = q0 + mag * rng.gen_range(-1.0..1.0f64);
        grid.push((w, t));
    }
    Ok(grid)
}

/// Calibrate the constant for the chosen bound family: the smallest C with
/// C·shape ≥ observed on every calibration point (the max observed
/// shape-ratio), inflated by `safety`. Observations come from `mc_sym_diff`
/// with a derived seed per grid point.
///
/// A central (least-squares) fit is provably insufficient here: the ratio
/// P(AΔB)/shape swings by a factor of about four across grid geometry —
/// correlation between the reference projection and the perturbation
/// projection amplifies threshold shifts by up to the standardized quantile
/// z0 — so center × 1.5 undercovers. The covering constant keeps the
/// safety factor as genuine headroom.
#[allow(clippy::too_many_arguments)]
pub fn fit_constant(
    model: &MvtModel,
    w0: &[f64],
    q0: f64,
    kind: BoundKind,
    grid: &[(Vec<f64>, f64)],
    n_mc: usize,
    seed: u64,
    safety: f64,
    e_norm_r: f64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::invalid("calibration grid is empty"));
    }
    if !(safety >= 1.0) {
        return Err(Error::invalid("safety factor must be at least 1"));
    }
    let b = HalfSpace::new(w0.to_vec(), q0)?;
    let mut worst = 0.0f64;
    for (i, (w, t)) in grid.iter().enumerate() {
        let a = HalfSpace::new(w.clone(), *t)?;
        let obs = mc_sym_diff(model, &a, &b, n_mc, derive_seed(seed, &[i as u64]))?;
        let g = bound_shape(model, w0, q0, kind, w, *t, e_norm_r)?;
        if g > 0.0 {
            worst = worst.max(obs.estimate / g);
        }
    }
    if worst == 0.0 {
        return Err(Error::Numerical(
            "no calibration point produced a usable ratio".into(),
        ));
    }
    Ok(safety * worst)
}

/// The bound with the constant factored out.
fn bound_shape(
    model: &MvtModel,
    w0: &[f64],
    q0: f64,
    kind: BoundKind,
    w: &[f64],
    t: f64,
    e_norm_r: f64,
) -> Result<f64> {
    match kind {
        BoundKind::Generic => generic_slab_bound(w0, w, t, q0, e_norm_r, 1.0),
        BoundKind::TModel => t_population_bound(model, w0, w, t, q0, 1.0),
    }
}

/// Evaluate observed vs bound across a grid. A point is flagged when its
/// slack falls below −3·MCSE; flags are data for the report, not errors.
#[allow(clippy::too_many_arguments)]
pub fn verify_bound(
    model: &MvtModel,
    w0: &[f64],
    q0: f64,
    grid: &[(Vec<f64>, f64)],
    constant: f64,
    kind: BoundKind,
    n_mc: usize,
    seed: u64,
    e_norm_r: f64,
) -> Result<Vec<BoundReport>> {
    if !(constant > 0.0) {
        return Err(Error::invalid("constant must be positive"));
    }
    let b = HalfSpace::new(w0.to_vec(), q0)?;
    let mut reports = Vec::with_capacity(grid.len());
    for (i, (w, t)) in grid.iter().enumerate() {
        let zero_perturbation = w.as_slice() == w0 && *t == q0;
        let (observed, mcse) = if zero_perturbation {
            (0.0, 0.0)
        } else {
            let a = HalfSpace::new(w.clone(), *t)?;
            let est = mc_sym_diff(model, &a, &b, n_mc, derive_seed(seed, &[i as u64]))?;
            (est.estimate, est.mcse)
        };
        let bound_value = constant * bound_shape(model, w0, q0, kind, w, *t, e_norm_r)?;
        let slack = bound_value - observed;
        reports.push(BoundReport {
            w: w.clone(),
            t: *t,
            q0,
            observed,
            mcse,
            bound_value,
            constant_used: constant,
            slack,
            violation: slack < -3.0 * mcse,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::MvtModel;
    use crate::empirical::{self, HalfSpace};
    use proptest::prelude::*;

    fn model() -> MvtModel {
        MvtModel::equicorrelated(5, 0.5, 5.0).unwrap()
    }

    const W0: [f64; 5] = [0.2; 5];

    #[test]
    fn generic_bound_basics() {
        let w = vec![0.2; 5];
        assert_eq!(generic_slab_bound(&w, &w, 1.0, 1.0, 2.0, 1.5).unwrap(), 0.0);

        let w_hat = vec![0.25, 0.15, 0.2, 0.2, 0.2];
        let b1 = generic_slab_bound(&w, &w_hat, 1.0, 1.2, 2.0, 1.5).unwrap();
        let b2 = generic_slab_bound(&w, &w_hat, 1.0, 1.4, 2.0, 1.5).unwrap();
        assert!(b2 > b1, "monotone in |t − q|");

        let w_far = vec![0.3, 0.1, 0.2, 0.2, 0.2];
        let b3 = generic_slab_bound(&w, &w_far, 1.0, 1.2, 2.0, 1.5).unwrap();
        assert!(b3 > b1, "monotone in the weight perturbation");

        // quadrupling both terms doubles the value
        let dq = 0.2;
        let b = generic_slab_bound(&w, &w_hat, 1.0, 1.0 + dq, 2.0, 1.5).unwrap();
        let w_hat4: Vec<f64> = w
            .iter()
            .zip(&w_hat)
            .map(|(a, b)| a + 4.0 * (b - a))
            .collect();
        let b4 = generic_slab_bound(&w, &w_hat4, 1.0, 1.0 + 4.0 * dq, 2.0, 1.5).unwrap();
        assert!((b4 - 2.0 * b).abs() < 1e-12 * b.max(1.0));

        assert!(generic_slab_bound(&w, &w_hat, 1.0, 1.2, -1.0, 1.5).is_err());
        assert!(generic_slab_bound(&w, &w_hat, 1.0, 1.2, 2.0, 0.0).is_err());
    }

    #[test]
    fn t_bound_basics() {
        let m = model();
        let q0 = m.population_quantile(&W0, 0.95).unwrap();
        assert_eq!(
            t_population_bound(&m, &W0, &W0, q0, q0, 2.0).unwrap(),
            0.0
        );

        // mu = 0: only the threshold and scale terms remain
        let w = [0.22, 0.18, 0.2, 0.2, 0.2];
        let b = t_population_bound(&m, &W0, &w, q0 + 0.1, q0, 2.0).unwrap();
        let delta = linalg::sub(&w, &W0);
        let expect = 2.0 * (0.1 + m.scatter_quad_form(&delta).sqrt());
        assert!((b - expect).abs() < 1e-12);

        // absolute homogeneity of degree 1 under joint scaling
        let c = 3.0;
        let w_scaled: Vec<f64> = W0.iter().zip(&w).map(|(a, b)| a + c * (b - a)).collect();
        let b_scaled =
            t_population_bound(&m, &W0, &w_scaled, q0 + c * 0.1, q0, 2.0).unwrap();
        assert!((b_scaled - c * b).abs() < 1e-12 * b.max(1.0));

        assert!(t_population_bound(&m, &W0, &w, q0, q0, -1.0).is_err());
    }

    #[test]
    fn parallel_exact_and_mc_agree() {
        let m = model();
        let law = ProjectedT::standard(5.0).unwrap();
        assert_eq!(exact_sym_diff_parallel(&law, 0.7, 0.7).unwrap(), 0.0);
        let q95 = law.quantile(0.95).unwrap();
        let v = exact_sym_diff_parallel(&law, q95, 0.0).unwrap();
        assert!((v - 0.45).abs() < 1e-10);

        // against the sampler, same direction, two thresholds
        let law_w = m.project_loss(&W0).unwrap();
        let t = law_w.quantile(0.9).unwrap();
        let q = law_w.quantile(0.6).unwrap();
        let exact = exact_sym_diff_parallel(&law_w, t, q).unwrap();
        let a = HalfSpace::new(W0.to_vec(), t).unwrap();
        let b = HalfSpace::new(W0.to_vec(), q).unwrap();
        let est = mc_sym_diff(&m, &a, &b, 100_000, 77).unwrap();
        assert!(
            (est.estimate - exact).abs() <= 3.0 * est.mcse,
            "{} vs {} (mcse {})",
            est.estimate,
            exact,
            est.mcse
        );
        // and the empirical-module proportion sees the same sets
        let sample = m.sample(100_000, 8_143).unwrap();
        let prop = empirical::sym_diff_proportion(&sample, &a, &b).unwrap();
        let mcse = (prop * (1.0 - prop) / 100_000.0).sqrt();
        assert!((prop - exact).abs() <= 3.0 * mcse + 3.0 * est.mcse);
    }

    #[test]
    fn identical_halfspaces_give_zero() {
        let m = model();
        let a = HalfSpace::new(W0.to_vec(), 0.4).unwrap();
        let est = mc_sym_diff(&m, &a, &a, 10_000, 3).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.mcse, 0.0);
    }

    #[test]
    fn sym_diff_shrinks_linearly_along_a_ray() {
        // log–log slope 1.0 ± 0.1 for w(eps) = w0 + eps·h, t = q0
        let m = model();
        let alpha = 0.95;
        let q0 = m.population_quantile(&W0, alpha).unwrap();
        let b = HalfSpace::new(W0.to_vec(), q0).unwrap();
        let h = [1.0, -0.5, 0.25, -0.25, -0.5];
        let epsilons = [1e-3, 3.16e-3, 1e-2, 3.16e-2, 1e-1];
        let mut pts = Vec::new();
        for (i, &eps) in epsilons.iter().enumerate() {
            let mut w = W0.to_vec();
            linalg::axpy(&mut w, eps, &h);
            let a = HalfSpace::new(w, q0).unwrap();
            let est = mc_sym_diff(&m, &a, &b, 2_000_000, derive_seed(41, &[i as u64])).unwrap();
            pts.push((eps.ln(), est.estimate.ln()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 1.0).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn verify_reports_violations_without_raising() {
        let m = model();
        let q0 = m.population_quantile(&W0, 0.95).unwrap();
        let e_norm = estimate_mean_norm(&m, 50_000, 1).unwrap();
        let mut grid = perturbation_grid(&W0, q0, 0.05, 20, 5).unwrap();
        grid.push((W0.to_vec(), q0)); // zero-perturbation point

        let reports = verify_bound(
            &m,
            &W0,
            q0,
            &grid,
            1e-6,
            BoundKind::TModel,
            20_000,
            9,
            e_norm,
        )
        .unwrap();
        assert_eq!(reports.len(), 21);
        let last = reports.last().unwrap();
        assert_eq!(last.observed, 0.0);
        assert_eq!(last.bound_value, 0.0);
        assert_eq!(last.slack, 0.0);
        assert!(!last.violation);
        assert!(
            reports.iter().any(|r| r.violation),
            "a deliberately tiny constant must violate somewhere"
        );
    }

    #[test]
    fn fitted_constant_covers_heldout_grid() {
        let m = model();
        let q0 = m.population_quantile(&W0, 0.95).unwrap();
        let e_norm = estimate_mean_norm(&m, 100_000, 11).unwrap();
        let cal = perturbation_grid(&W0, q0, 0.05, 40, 13).unwrap();
        let held = perturbation_grid(&W0, q0, 0.05, 40, 14).unwrap();
        for kind in [BoundKind::TModel, BoundKind::Generic] {
            let c = fit_constant(&m, &W0, q0, kind, &cal, 50_000, 15, 1.5, e_norm).unwrap();
            let reports =
                verify_bound(&m, &W0, q0, &held, c, kind, 50_000, 16, e_norm).unwrap();
            let violations = reports.iter().filter(|r| r.violation).count();
            assert_eq!(violations, 0, "{kind:?} constant {c} violated");
        }
    }

    #[test]
    fn t_model_bound_is_tighter_at_small_radius() {
        // both constants fitted on the same calibration grid of small
        // perturbations; the first-order t bound should dominate the
        // half-order generic bound on held-out points
        let m = model();
        let q0 = m.population_quantile(&W0, 0.95).unwrap();
        let e_norm = estimate_mean_norm(&m, 100_000, 21).unwrap();
        let cal = perturbation_grid(&W0, q0, 0.01, 50, 22).unwrap();
        let held = perturbation_grid(&W0, q0, 0.01, 50, 23).unwrap();
        let c_t = fit_constant(&m, &W0, q0, BoundKind::TModel, &cal, 200_000, 24, 1.5, e_norm)
            .unwrap();
        let c_g = fit_constant(&m, &W0, q0, BoundKind::Generic, &cal, 200_000, 24, 1.5, e_norm)
            .unwrap();
        let mean = |kind, c| -> f64 {
            held.iter()
                .map(|(w, t)| c * bound_shape(&m, &W0, q0, kind, w, *t, e_norm).unwrap())
                .sum::<f64>()
                / held.len() as f64
        };
        let mt = mean(BoundKind::TModel, c_t);
        let mg = mean(BoundKind::Generic, c_g);
        assert!(mt < mg, "t-model mean bound {mt} vs generic {mg}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn slab_inclusion_is_pointwise_exact(
            r in proptest::array::uniform3(-5.0f64..5.0),
            wa in proptest::array::uniform3(-2.0f64..2.0),
            wb in proptest::array::uniform3(-2.0f64..2.0),
            ta in -3.0f64..3.0,
            tb in -3.0f64..3.0,
        ) {
            prop_assume!(wa.iter().any(|&x| x != 0.0));
            prop_assume!(wb.iter().any(|&x| x != 0.0));
            let a = HalfSpace::new(wa.to_vec(), ta).unwrap();
            let b = HalfSpace::new(wb.to_vec(), tb).unwrap();
            prop_assert!(slab_inclusion_holds(&r, &a, &b));
        }
    }
}
