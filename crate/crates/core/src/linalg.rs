//! Small dense Hermitian linear algebra for element-count sized systems.
//!
//! Arrays here are a handful of elements, so an O(M^3) Cholesky solve and
//! power-iteration extremal eigenvalue estimates are all that is needed.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Cholesky factor `L` (lower triangular, `A = L L^H`) of a Hermitian
/// positive-definite matrix in row-major order.
#[derive(Debug, Clone)]
pub(crate) struct CholeskyFactor {
    l: Vec<Complex64>,
    n: usize,
}

pub(crate) fn cholesky(a: &[Complex64], n: usize) -> Result<CholeskyFactor> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                if sum.re <= 0.0 || !sum.re.is_finite() {
                    return Err(Error::numerical(
                        "singular Gram; supply regularization".to_string(),
                    ));
                }
                l[i * n + j] = Complex64::new(sum.re.sqrt(), 0.0);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(CholeskyFactor { l, n })
}

impl CholeskyFactor {
    /// Solves `A x = b` using the stored factor.
    pub(crate) fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Forward: L y = b.
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = self.l[i * n + k] * y[k];
                y[i] -= t;
            }
            y[i] /= self.l[i * n + i];
        }
        // Backward: L^H x = y.
        let mut x = y;
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = self.l[k * n + i].conj() * x[k];
                x[i] -= t;
            }
            x[i] /= self.l[i * n + i];
        }
        x
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn mat_vec(a: &[Complex64], n: usize, v: &[Complex64]) -> Vec<Complex64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum())
        .collect()
}

fn rayleigh(a: &[Complex64], n: usize, v: &[Complex64]) -> f64 {
    let av = mat_vec(a, n, v);
    let num: Complex64 = v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum();
    let den: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    num.re / den
}

/// Estimates the condition number of a Hermitian positive-definite matrix as
/// the ratio of extremal eigenvalues, via plain and inverse power iteration.
pub(crate) fn condition_estimate(a: &[Complex64], n: usize, factor: &CholeskyFactor) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let start: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0, 0.3 * (i as f64 + 1.0)))
        .collect();

    let mut v = start.clone();
    for _ in 0..200 {
        let next = mat_vec(a, n, &v);
        let nn = norm(&next);
        if nn == 0.0 {
            return f64::INFINITY;
        }
        v = next.iter().map(|z| z / nn).collect();
    }
    let lambda_max = rayleigh(a, n, &v);

    let mut w = start;
    for _ in 0..200 {
        let next = factor.solve(&w);
        let nn = norm(&next);
        if !nn.is_finite() || nn == 0.0 {
            return f64::INFINITY;
        }
        w = next.iter().map(|z| z / nn).collect();
    }
    let lambda_min = rayleigh(a, n, &w);
    if lambda_min <= 0.0 {
        return f64::INFINITY;
    }
    lambda_max / lambda_min
}
