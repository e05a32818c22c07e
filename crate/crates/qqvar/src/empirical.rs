//! Empirical measures over the half-space class indexed by (w, t):
//! weight-indexed empirical cdfs and quantiles, symmetric-difference
//! proportions, four-cell partition counts, and grid-based sup-discrepancy.
//!
//! Half-spaces use the closed form A = {r : −wᵀr ≤ t} throughout; the
//! projected laws are continuous, so the choice of ≤ over < does not move
//! any probability.

use crate::dist::{MvtModel, ReturnSample};
use crate::error::{Error, Result};
use crate::linalg;

/// A = {r : −wᵀr ≤ t}.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    w: Vec<f64>,
    t: f64,
}

impl HalfSpace {
    pub fn new(w: Vec<f64>, t: f64) -> Result<Self> {
        if w.is_empty() || w.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroWeight);
        }
        if w.iter().any(|x| !x.is_finite()) || !t.is_finite() {
            return Err(Error::invalid("half-space parameters must be finite"));
        }
        Ok(Self { w, t })
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn contains(&self, r: &[f64]) -> bool {
        -linalg::dot(&self.w, r) <= self.t
    }
}

/// Counts of the four cells S₁₁, S₁₀, S₀₁, S₀₀ induced by a pair (A, B).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionCounts {
    pub n11: usize,
    pub n10: usize,
    pub n01: usize,
    pub n00: usize,
}

impl PartitionCounts {
    pub fn total(&self) -> usize {
        self.n11 + self.n10 + self.n01 + self.n00
    }
}

/// Projected losses {−wᵀR_i}, computed once and kept sorted so repeated
/// cdf/quantile queries are cheap inside simulation loops.
#[derive(Debug, Clone)]
pub struct ProjectedSample {
    losses: Vec<f64>,
}

impl ProjectedSample {
    pub fn new(sample: &ReturnSample, w: &[f64]) -> Result<Self> {
        if sample.n() == 0 {
            return Err(Error::EmptySample);
        }
        if w.len() != sample.p() {
            return Err(Error::DimensionMismatch {
                expected: sample.p(),
                got: w.len(),
            });
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroWeight);
        }
        let mut losses: Vec<f64> = sample.rows().map(|r| -linalg::dot(w, r)).collect();
        losses.sort_unstable_by(|a, b| a.total_cmp(b));
        Ok(Self { losses })
    }

    pub fn n(&self) -> usize {
        self.losses.len()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// F_n(t) = #{i : loss_i ≤ t} / n, right-continuous in t.
    pub fn cdf(&self, t: f64) -> f64 {
        let k = self.losses.partition_point(|&x| x <= t);
        k as f64 / self.losses.len() as f64
    }

    /// Generalized inverse: the ⌈nα⌉-th order statistic, no interpolation.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "quantile level {alpha} outside (0,1)"
            )));
        }
        let n = self.losses.len();
        let k = (n as f64 * alpha).ceil() as usize;
        Ok(self.losses[k.clamp(1, n) - 1])
    }
}

/// F_n(w, t) for a single query.
pub fn empirical_cdf(sample: &ReturnSample, w: &[f64], t: f64) -> Result<f64> {
    Ok(ProjectedSample::new(sample, w)?.cdf(t))
}

/// q̂_α(w) for a single query.
pub fn empirical_quantile(sample: &ReturnSample, w: &[f64], alpha: f64) -> Result<f64> {
    ProjectedSample::new(sample, w)?.quantile(alpha)
}

/// P_n(AΔB): the fraction of observations on which the two half-space
/// indicators disagree.
pub fn sym_diff_proportion(sample: &ReturnSample, a: &HalfSpace, b: &HalfSpace) -> Result<f64> {
    if sample.n() == 0 {
        return Err(Error::EmptySample);
    }
    check_dims(sample, a, b)?;
    let disagree = sample
        .rows()
        .filter(|r| a.contains(r) != b.contains(r))
        .count();
    Ok(disagree as f64 / sample.n() as f64)
}

/// Counts of S₁₁ = A∩B, S₁₀ = A∩Bᶜ, S₀₁ = Aᶜ∩B, S₀₀ = Aᶜ∩Bᶜ.
pub fn partition_counts(
    sample: &ReturnSample,
    a: &HalfSpace,
    b: &HalfSpace,
) -> Result<PartitionCounts> {
    if sample.n() == 0 {
        return Err(Error::EmptySample);
    }
    check_dims(sample, a, b)?;
    let mut c = PartitionCounts {
        n11: 0,
        n10: 0,
        n01: 0,
        n00: 0,
    };
    for r in sample.rows() {
        match (a.contains(r), b.contains(r)) {
            (true, true) => c.n11 += 1,
            (true, false) => c.n10 += 1,
            (false, true) => c.n01 += 1,
            (false, false) => c.n00 += 1,
        }
    }
    Ok(c)
}

fn check_dims(sample: &ReturnSample, a: &HalfSpace, b: &HalfSpace) -> Result<()> {
    for hs in [a, b] {
        if hs.w().len() != sample.p() {
            return Err(Error::DimensionMismatch {
                expected: sample.p(),
                got: hs.w().len(),
            });
        }
    }
    Ok(())
}

/// max over the grid of |F_n(w,t) − F(w,t)|; a lower bound on the class
/// supremum. Consecutive grid points sharing a direction reuse the sorted
/// projection.
pub fn sup_discrepancy(
    sample: &ReturnSample,
    model: &MvtModel,
    grid: &[(Vec<f64>, f64)],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::invalid("discrepancy grid is empty"));
    }
    let mut worst = 0.0f64;
    let mut cached: Option<(&[f64], ProjectedSample, crate::dist::ProjectedT)> = None;
    for (w, t) in grid {
        let reuse = matches!(&cached, Some((cw, _, _)) if *cw == w.as_slice());
        if !reuse {
            let proj = ProjectedSample::new(sample, w)?;
            let law = model.project_loss(w)?;
            cached = Some((w.as_slice(), proj, law));
        }
        let (_, proj, law) = cached.as_ref().unwrap();
        let gap = (proj.cdf(*t) - law.cdf(*t)?).abs();
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Default discrepancy grid: directions on the great circle through w0
/// (rotated toward a fixed orthogonal direction by angles in
/// [−theta_max, theta_max]) crossed with thresholds spanning q_α(w0) ± 3
/// projected scales.
pub fn great_circle_grid(
    model: &MvtModel,
    w0: &[f64],
    alpha: f64,
    n_directions: usize,
    n_thresholds: usize,
    theta_max: f64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    if n_directions == 0 || n_thresholds == 0 {
        return Err(Error::invalid("grid dimensions must be positive"));
    }
    let law = model.project_loss(w0)?;
    let q0 = law.quantile(alpha)?;
    let s = law.scale();
    let w0_norm = linalg::norm(w0);
    let u = orthogonal_direction(w0);
    let mut grid = Vec::with_capacity(n_directions * n_thresholds);
    for i in 0..n_directions {
        let theta = if n_directions == 1 {
            0.0
        } else {
            -theta_max + 2.0 * theta_max * i as f64 / (n_directions - 1) as f64
        };
        let mut w = linalg::scale(w0, theta.cos());
        linalg::axpy(&mut w, theta.sin() * w0_norm, &u);
        for j in 0..n_thresholds {
            let t = if n_thresholds == 1 {
                q0
            } else {
                q0 - 3.0 * s + 6.0 * s * j as f64 / (n_thresholds - 1) as f64
            };
            grid.push((w.clone(), t));
        }
    }
    Ok(grid)
}

fn orthogonal_direction(w0: &[f64]) -> Vec<f64> {
    let basis = linalg::orthonormal_complement(&[w0.to_vec()], w0.len(), 1e-12);
    basis
        .into_iter()
        .next()
        .unwrap_or_else(|| vec![0.0; w0.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::MvtModel;
    use crate::seeding::derive_seed;
    use proptest::prelude::*;

    fn sample_from_losses(losses: &[f64]) -> ReturnSample {
        // p = 1 and w = [1.0]: loss = -r, so store the negated values
        let data: Vec<f64> = losses.iter().map(|&l| -l).collect();
        ReturnSample::from_data(data, 1, 0, "test").unwrap()
    }

    #[test]
    fn ecdf_edge_and_count_cases() {
        let s = sample_from_losses(&[-1.0, 0.0, 1.0, 2.0]);
        let w = [1.0];
        assert_eq!(empirical_cdf(&s, &w, 10.0).unwrap(), 1.0);
        assert_eq!(empirical_cdf(&s, &w, -5.0).unwrap(), 0.0);
        assert_eq!(empirical_cdf(&s, &w, 0.5).unwrap(), 0.5);
        // right-continuity: jump exactly at an observed loss
        assert_eq!(empirical_cdf(&s, &w, 1.0).unwrap(), 0.75);
    }

    #[test]
    fn quantile_is_order_statistic() {
        let s = sample_from_losses(&[5.0, 2.0, 1.0, 4.0, 3.0]);
        let w = [1.0];
        assert_eq!(empirical_quantile(&s, &w, 0.5).unwrap(), 3.0);
        // alpha just above (k-1)/n picks the k-th order statistic
        assert_eq!(empirical_quantile(&s, &w, 0.4 + 1e-9).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&s, &w, 0.4).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&s, &w, 0.999).unwrap(), 5.0);
        assert!(empirical_quantile(&s, &w, 0.0).is_err());
    }

    #[test]
    fn quantile_concentrates_near_population_value() {
        // asymptotic sd ≈ 0.0107 at n = 1e5 for standard t5 at alpha 0.95;
        // 0.05 is about 4.7 sd, so expect at least 19/20 seeds inside
        let model = MvtModel::equicorrelated(1, 0.0, 5.0).unwrap();
        let mut hits = 0;
        for s in 0..20u64 {
            let sample = model.sample(100_000, derive_seed(77, &[s])).unwrap();
            let q = empirical_quantile(&sample, &[1.0], 0.95).unwrap();
            if (q - 2.015_048_373_333_024_2).abs() < 0.05 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "{hits}/20 inside the band");
    }

    #[test]
    fn sym_diff_trivial_and_parallel() {
        let model = MvtModel::equicorrelated(3, 0.2, 5.0).unwrap();
        let sample = model.sample(4000, 5).unwrap();
        let w = vec![0.5, 0.3, 0.2];
        let a = HalfSpace::new(w.clone(), 0.4).unwrap();
        assert_eq!(sym_diff_proportion(&sample, &a, &a).unwrap(), 0.0);

        let b = HalfSpace::new(w.clone(), 1.1).unwrap();
        let lhs = sym_diff_proportion(&sample, &a, &b).unwrap();
        let rhs = empirical_cdf(&sample, &w, 1.1).unwrap() - empirical_cdf(&sample, &w, 0.4).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn partition_counts_patterns() {
        let model = MvtModel::equicorrelated(3, 0.2, 5.0).unwrap();
        let sample = model.sample(1000, 6).unwrap();
        let w = vec![0.5, 0.3, 0.2];
        let a = HalfSpace::new(w.clone(), 0.7).unwrap();
        let c = partition_counts(&sample, &a, &a).unwrap();
        assert_eq!(c.n10, 0);
        assert_eq!(c.n01, 0);
        assert_eq!(c.total(), 1000);

        // empty A (t very low), full B (q very high): everything lands in S01
        let empty = HalfSpace::new(w.clone(), -1e12).unwrap();
        let full = HalfSpace::new(w, 1e12).unwrap();
        let c = partition_counts(&sample, &empty, &full).unwrap();
        assert_eq!(c.n11, 0);
        assert_eq!(c.n00, 0);
        assert_eq!(c.n01, 1000);
    }

    #[test]
    fn sup_discrepancy_single_pair_and_calibration() {
        let model = MvtModel::equicorrelated(5, 0.5, 5.0).unwrap();
        let w0 = vec![0.2; 5];
        let sample = model.sample(10_000, 11).unwrap();
        let law = model.project_loss(&w0).unwrap();
        let q = law.quantile(0.9).unwrap();
        let single = vec![(w0.clone(), q)];
        let got = sup_discrepancy(&sample, &model, &single).unwrap();
        let want = (empirical_cdf(&sample, &w0, q).unwrap() - 0.9).abs();
        assert!((got - want).abs() < 1e-12);

        // 200-point grid at n = 1e4 stays under 0.03 in at least 19/20 seeds
        let grid = great_circle_grid(&model, &w0, 0.95, 20, 10, 0.1).unwrap();
        assert_eq!(grid.len(), 200);
        let mut hits = 0;
        for s in 0..20u64 {
            let sample = model.sample(10_000, derive_seed(21, &[s])).unwrap();
            if sup_discrepancy(&sample, &model, &grid).unwrap() < 0.03 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "{hits}/20 under 0.03");
    }

    #[test]
    fn sup_discrepancy_decreases_with_n() {
        let model = MvtModel::equicorrelated(5, 0.5, 5.0).unwrap();
        let w0 = vec![0.2; 5];
        let grid = great_circle_grid(&model, &w0, 0.95, 7, 7, 0.1).unwrap();
        let med = |n: usize, tag: u64| {
            let mut vals: Vec<f64> = (0..50u64)
                .map(|s| {
                    let sample = model.sample(n, derive_seed(tag, &[s])).unwrap();
                    sup_discrepancy(&sample, &model, &grid).unwrap()
                })
                .collect();
            vals.sort_by(|a, b| a.total_cmp(b));
            vals[25]
        };
        let small = med(1_000, 1);
        let large = med(100_000, 2);
        assert!(
            large < small,
            "median discrepancy did not shrink: {large} vs {small}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn indicator_identities_hold_exactly(
            seed in 0u64..1000,
            wa in proptest::array::uniform3(-2.0f64..2.0),
            wb in proptest::array::uniform3(-2.0f64..2.0),
            ta in -2.0f64..2.0,
            tb in -2.0f64..2.0,
        ) {
            prop_assume!(wa.iter().any(|&x| x != 0.0));
            prop_assume!(wb.iter().any(|&x| x != 0.0));
            let model = MvtModel::equicorrelated(3, 0.1, 4.0).unwrap();
            let sample = model.sample(257, seed).unwrap();
            let a = HalfSpace::new(wa.to_vec(), ta).unwrap();
            let b = HalfSpace::new(wb.to_vec(), tb).unwrap();

            let prop = sym_diff_proportion(&sample, &a, &b).unwrap();
            let c = partition_counts(&sample, &a, &b).unwrap();
            prop_assert_eq!(c.total(), 257);
            // disagreement count identity: P_n(AΔB) = (N10 + N01)/n
            prop_assert_eq!(prop, (c.n10 + c.n01) as f64 / 257.0);
            // and the L1 form: the sample mean of |1_A − 1_B|
            let mean_abs: f64 = sample.rows()
                .map(|r| {
                    let ia = if a.contains(r) { 1.0f64 } else { 0.0 };
                    let ib = if b.contains(r) { 1.0f64 } else { 0.0 };
                    (ia - ib).abs()
                })
                .sum::<f64>() / 257.0;
            prop_assert_eq!(prop, mean_abs);
        }

        #[test]
        fn ecdf_monotone_and_inverse_is_generalized(
            seed in 0u64..1000,
            alpha in 0.01f64..0.99,
        ) {
            let model = MvtModel::equicorrelated(2, 0.3, 3.0).unwrap();
            let sample = model.sample(100, seed).unwrap();
            let w = vec![0.7, 0.3];
            let proj = ProjectedSample::new(&sample, &w).unwrap();

            let mut last = 0.0;
            for k in -10..=10 {
                let f = proj.cdf(k as f64 * 0.5);
                prop_assert!(f >= last);
                last = f;
            }

            let q = proj.quantile(alpha).unwrap();
            prop_assert!(proj.cdf(q) >= alpha);
            // any t strictly below the quantile has F_n(t) < alpha
            let below: Vec<f64> = proj.losses().iter().copied().filter(|&x| x < q).collect();
            if let Some(&t) = below.last() {
                prop_assert!(proj.cdf(t) < alpha);
            }
            prop_assert!(proj.cdf(q - 1e-9) < alpha + 1e-12);
        }
    }
}
