//! Minimal dense linear algebra for small (p ~ 5..50) symmetric systems.
//!
//! Matrices are row-major `Vec<f64>` of length p*p. Nothing here is tuned for
//! large p; the simulation loops never touch these routines per-observation.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// y = M x for a row-major p×p matrix.
pub fn mat_vec(m: &[f64], p: usize, x: &[f64]) -> Vec<f64> {
    (0..p).map(|i| dot(&m[i * p..(i + 1) * p], x)).collect()
}

/// xᵀ M y.
pub fn quad_form(m: &[f64], p: usize, x: &[f64], y: &[f64]) -> f64 {
    (0..p).map(|i| x[i] * dot(&m[i * p..(i + 1) * p], y)).sum()
}

pub fn max_abs_asymmetry(m: &[f64], p: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..p {
        for j in (i + 1)..p {
            worst = worst.max((m[i * p + j] - m[j * p + i]).abs());
        }
    }
    worst
}

/// Lower-triangular Cholesky factor L with M = L Lᵀ, row-major.
pub fn cholesky(m: &[f64], p: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = m[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite(format!(
                        "pivot {i} is {s:.3e}"
                    )));
                }
                l[i * p + j] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Ok(l)
}

/// Relative Frobenius distance between M and L Lᵀ.
pub fn reconstruction_error(m: &[f64], l: &[f64], p: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..p {
        for j in 0..p {
            let mut r = 0.0;
            for k in 0..=i.min(j) {
                r += l[i * p + k] * l[j * p + k];
            }
            num += (m[i * p + j] - r).powi(2);
            den += m[i * p + j].powi(2);
        }
    }
    (num / den).sqrt()
}

/// Orthonormal basis of the subspace orthogonal to every row in `constraints`.
///
/// Modified Gram-Schmidt over the constraint rows followed by the standard
/// basis; vectors whose residual drops below `tol` times their original norm
/// are treated as dependent and dropped. Deterministic for fixed input.
pub fn orthonormal_complement(constraints: &[Vec<f64>], p: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for c in constraints {
        if let Some(q) = project_out(c, &ortho, tol) {
            ortho.push(q);
        }
    }
    let rank = ortho.len();
    let mut basis = Vec::new();
    for i in 0..p {
        let mut e = vec![0.0; p];
        e[i] = 1.0;
        if let Some(q) = project_out(&e, &ortho, tol) {
            ortho.push(q.clone());
            basis.push(q);
        }
    }
    debug_assert_eq!(basis.len(), p - rank);
    basis
}

fn project_out(v: &[f64], ortho: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let orig = norm(v);
    if orig == 0.0 {
        return None;
    }
    let mut r = v.to_vec();
    // two rounds of MGS for re-orthogonalization
    for _ in 0..2 {
        for q in ortho {
            let c = dot(&r, q);
            axpy(&mut r, -c, q);
        }
    }
    let n = norm(&r);
    if n <= tol * orig {
        None
    } else {
        Some(scale(&r, 1.0 / n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let p = 3;
        let m = vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let l = cholesky(&m, p).unwrap();
        assert!(reconstruction_error(&m, &l, p) < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&m, 2).is_err());
    }

    #[test]
    fn complement_of_two_constraints() {
        let p = 4;
        let c = vec![vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0, 0.0]];
        let basis = orthonormal_complement(&c, p, 1e-12);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(dot(b, &c[0]).abs() < 1e-12);
            assert!(dot(b, &c[1]).abs() < 1e-12);
            assert!((norm(b) - 1.0).abs() < 1e-12);
        }
        assert!(dot(&basis[0], &basis[1]).abs() < 1e-12);
    }

    #[test]
    fn complement_drops_dependent_constraints() {
        let p = 3;
        let c = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]];
        let basis = orthonormal_complement(&c, p, 1e-12);
        assert_eq!(basis.len(), 2);
    }
}
