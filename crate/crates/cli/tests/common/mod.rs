//! Shared oracles and helpers for the integration and acceptance suites.
//!
//! Everything here recomputes expected values through routes that are
//! independent of the library implementation under test: closed-form sinc
//! Grams solved by Gaussian elimination and a plain power-iteration
//! eigensolver.

#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

/// End-fire steering phases for an x-axis uniform line of isotropic
/// elements centered on the origin.
pub fn end_fire_steering(m: usize, kd: f64) -> Vec<Complex64> {
    let offset = 0.5 * (m as f64 - 1.0);
    (0..m)
        .map(|i| Complex64::from_polar(1.0, (i as f64 - offset) * kd))
        .collect()
}

/// Normalized sinc Gram of a uniform line of isotropic elements:
/// `A_ij = sinc(kd |i - j|)`.
pub fn sinc_gram(m: usize, kd: f64) -> Vec<Complex64> {
    let mut a = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            let x = kd * (i as f64 - j as f64).abs();
            let s = if x == 0.0 { 1.0 } else { x.sin() / x };
            a[i * m + j] = Complex64::new(s, 0.0);
        }
    }
    a
}

/// Complex Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Complex64], n: usize, b: &[Complex64]) -> Vec<Complex64> {
    let mut m: Vec<Complex64> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                m[r * n + col]
                    .norm()
                    .partial_cmp(&m[s * n + col].norm())
                    .unwrap()
            })
            .unwrap();
        if pivot != col {
            for c in 0..n {
                m.swap(col * n + c, pivot * n + c);
            }
            x.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for c in col..n {
                let v = m[col * n + c];
                m[row * n + c] -= f * v;
            }
            let v = x[col];
            x[row] -= f * v;
        }
    }
    for row in (0..n).rev() {
        for c in row + 1..n {
            let v = x[c];
            x[row] -= m[row * n + c] * v;
        }
        x[row] /= m[row * n + row];
    }
    x
}

/// Analytic end-fire directivity of M isotropic elements at spacing `d`
/// wavelengths: `E0^H A^{-1} E0` with the sinc Gram, solved independently.
pub fn analytic_isotropic_directivity(m: usize, spacing_wl: f64) -> f64 {
    let kd = 2.0 * PI * spacing_wl;
    let a = sinc_gram(m, kd);
    let e0 = end_fire_steering(m, kd);
    let x = gauss_solve(&a, m, &e0);
    e0.iter()
        .zip(&x)
        .map(|(e, xi)| (e.conj() * xi).re)
        .sum()
}

/// Generic eigensolver oracle: power iteration on `G^{-1} (E0 E0^H)`,
/// returning the dominant eigenvalue via the Rayleigh quotient. Uses only
/// Gaussian elimination, no rank-1 shortcut.
pub fn power_iteration_lambda(gram: &[Complex64], e0: &[Complex64], m: usize) -> f64 {
    let mut v: Vec<Complex64> = (0..m)
        .map(|i| Complex64::new(1.0, 0.2 * (i as f64 + 1.0)))
        .collect();
    let mut lambda = 0.0;
    for _ in 0..60 {
        let inner: Complex64 = e0.iter().zip(&v).map(|(e, x)| e.conj() * x).sum();
        let rhs: Vec<Complex64> = e0.iter().map(|e| e * inner).collect();
        let next = gauss_solve(gram, m, &rhs);
        let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let proj: Complex64 = v.iter().zip(&next).map(|(x, y)| x.conj() * y).sum();
        lambda = proj.re / vnorm;
        let nn: f64 = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nn == 0.0 {
            return 0.0;
        }
        v = next.into_iter().map(|z| z / nn).collect();
    }
    lambda
}

/// Runs the `superdir` binary with the given arguments in `dir`.
pub fn run_cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superdir"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to spawn superdir")
}

pub fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

pub fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}
