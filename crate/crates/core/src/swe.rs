//! Spherical wave expansion of far fields.
//!
//! Provides an independent route to directivity: element fields are projected
//! onto orthonormal vector spherical modes, and the directivity of any
//! excitation follows from the combined mode coefficients alone. Agreement
//! with the quadrature path of [`crate::analysis`] is the cross-check used
//! throughout the test suite.
//!
//! The truncation order `N` bounds the polar index; the flat mode index runs
//! over `T = 2 N (N + 2)` modes, interleaving the two mode species fastest,
//! then the azimuthal index from `-n` to `n`, grouped by increasing `n`.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::beamform::BeamVector;
use crate::error::{Error, Result};
use crate::fieldmodel::{AngularGrid, ArrayGeometry, ElementFieldSet, Polarization};
use crate::FULL_SPHERE_SR;

/// Default cap on pattern-matrix entries (`2*l*q*T`), roughly 256 MiB of
/// complex samples.
pub const DEFAULT_PATTERN_ENTRY_CAP: usize = 16 * 1024 * 1024;

/// One spherical mode: species `s` (1 or 2), polar index `n`, azimuthal `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeIndex {
    pub s: u8,
    pub n: u32,
    pub m: i32,
}

impl ModeIndex {
    pub fn new(s: u8, n: u32, m: i32) -> Result<Self> {
        if !(s == 1 || s == 2) {
            return Err(Error::invalid("mode species must be 1 or 2"));
        }
        if n < 1 {
            return Err(Error::invalid("polar index n must be >= 1"));
        }
        if m.unsigned_abs() > n {
            return Err(Error::invalid("|m| must not exceed n"));
        }
        Ok(ModeIndex { s, n, m })
    }

    /// Number of modes up to truncation order `n_max`: `2 n (n + 2)`.
    pub fn count(n_max: u32) -> usize {
        2 * n_max as usize * (n_max as usize + 2)
    }

    /// Zero-based flat index; species varies fastest, then `m`, then `n`.
    pub fn flat(&self) -> usize {
        let n = self.n as i64;
        let j = 2 * (n * (n + 1) + self.m as i64 - 1) + self.s as i64;
        (j - 1) as usize
    }

    /// Inverse of [`ModeIndex::flat`].
    pub fn from_flat(t: usize) -> Self {
        let j = t as i64 + 1;
        let s = if j % 2 == 1 { 1 } else { 2 };
        let jp = (j + 1) / 2; // = n(n+1) + m
        let n = (jp as f64).sqrt().floor() as i64;
        let n = if (n + 1) * (n + 1) <= jp { n + 1 } else { n };
        let m = jp - n * (n + 1);
        ModeIndex {
            s,
            n: n as u32,
            m: m as i32,
        }
    }
}

/// Normalized associated Legendre values at one angle: the function itself,
/// its theta derivative, and `m * value / sin(theta)`.
///
/// Normalization: the square of the function integrates to 1 against
/// `sin(theta) d(theta)` over `[0, pi]`. Computed by forward recurrence in
/// the polar index, which is stable for these orders.
pub fn normalized_legendre_terms(n: u32, m: i32, theta: f64) -> Result<(f64, f64, f64)> {
    if n < 1 || m.unsigned_abs() > n {
        return Err(Error::invalid("need 1 <= n and |m| <= n"));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::invalid("theta must lie strictly inside (0, pi)"));
    }
    let m_abs = m.unsigned_abs();
    let x = theta.cos();
    let sin_t = theta.sin();

    // Seed at the diagonal: sqrt(1/2) for (0,0), then climb in order.
    let mut p_diag = (0.5f64).sqrt();
    for mu in 1..=m_abs {
        p_diag *= -((2.0 * mu as f64 + 1.0) / (2.0 * mu as f64)).sqrt() * sin_t;
    }

    // Walk n upward at fixed |m|, keeping the previous value for the
    // derivative formula.
    let (p, p_prev) = if n == m_abs {
        (p_diag, 0.0)
    } else {
        let mut prev = p_diag;
        let mut cur = (2.0 * m_abs as f64 + 3.0).sqrt() * x * p_diag;
        for nu in (m_abs + 2)..=n {
            let nf = nu as f64;
            let mf = m_abs as f64;
            let a = ((2.0 * nf - 1.0) * (2.0 * nf + 1.0) / ((nf - mf) * (nf + mf))).sqrt();
            let b = ((2.0 * nf + 1.0) * (nf - 1.0 - mf) * (nf - 1.0 + mf)
                / ((2.0 * nf - 3.0) * (nf - mf) * (nf + mf)))
                .sqrt();
            let next = a * x * cur - b * prev;
            prev = cur;
            cur = next;
        }
        (cur, prev)
    };

    let nf = n as f64;
    let mf = m_abs as f64;
    let coupling = ((nf * nf - mf * mf) * (2.0 * nf + 1.0) / (2.0 * nf - 1.0)).sqrt();
    let dp_dtheta = (nf * x * p - coupling * p_prev) / sin_t;
    let m_p_over_sin = m as f64 * p / sin_t;
    Ok((p, dp_dtheta, m_p_over_sin))
}

fn minus_j_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

fn mode_sign(m: i32) -> f64 {
    // (-m/|m|)^m, defined as 1 at m = 0; negative m always gives +1.
    if m > 0 && m % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Far-field pattern function of one mode: (theta, phi) components.
pub fn pattern_function(mode: ModeIndex, theta: f64, phi: f64) -> Result<(Complex64, Complex64)> {
    let (_, dp, mp_sin) = normalized_legendre_terms(mode.n, mode.m, theta)?;
    let n = mode.n as f64;
    let scale = (2.0 / (n * (n + 1.0))).sqrt() * mode_sign(mode.m);
    let azimuth = Complex64::from_polar(1.0, mode.m as f64 * phi);
    let j_mp = Complex64::new(0.0, mp_sin);
    match mode.s {
        1 => {
            let pref = scale * azimuth * minus_j_pow(mode.n + 1);
            Ok((pref * j_mp, pref * (-dp)))
        }
        2 => {
            let pref = scale * azimuth * minus_j_pow(mode.n);
            Ok((pref * dp, pref * j_mp))
        }
        _ => Err(Error::invalid("mode species must be 1 or 2")),
    }
}

/// Pattern functions of all modes sampled on a grid, one column per mode.
///
/// Rows follow the field-matrix convention (theta-major points, theta and phi
/// component rows interleaved, scaled by the root of the solid-angle weight).
/// Columns additionally carry `1/sqrt(4 pi)` so they are orthonormal under
/// the plain Euclidean inner product.
#[derive(Debug, Clone)]
pub struct PatternMatrix {
    columns: Vec<Vec<Complex64>>,
    n_max: u32,
    grid: AngularGrid,
}

impl PatternMatrix {
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn num_modes(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn column(&self, t: usize) -> &[Complex64] {
        &self.columns[t]
    }
}

/// Builds the pattern matrix with the default memory cap.
pub fn build_pattern_matrix(grid: &AngularGrid, n_max: u32) -> Result<PatternMatrix> {
    build_pattern_matrix_capped(grid, n_max, DEFAULT_PATTERN_ENTRY_CAP)
}

/// Builds the pattern matrix, rejecting sizes above `entry_cap` total
/// complex entries.
pub fn build_pattern_matrix_capped(
    grid: &AngularGrid,
    n_max: u32,
    entry_cap: usize,
) -> Result<PatternMatrix> {
    if n_max < 1 {
        return Err(Error::invalid("truncation order must be >= 1"));
    }
    let t_count = ModeIndex::count(n_max);
    let rows = 2 * grid.len();
    let entries = rows.checked_mul(t_count).ok_or_else(|| {
        Error::invalid("pattern matrix size overflows".to_string())
    })?;
    if entries > entry_cap {
        return Err(Error::invalid(format!(
            "pattern matrix would hold {entries} complex entries (rows {rows} x modes {t_count}), \
             above the cap of {entry_cap}; lower N or coarsen the grid"
        )));
    }

    let l = grid.l();
    let q = grid.q();
    let inv_sqrt_4pi = 1.0 / FULL_SPHERE_SR.sqrt();
    let sqrt_w: Vec<f64> = grid.weights_sr().iter().map(|w| w.sqrt()).collect();

    // e^{j m phi} table over m in [-N, N].
    let span = (2 * n_max + 1) as usize;
    let mut azimuth = vec![Complex64::new(0.0, 0.0); span * q];
    for (mi, m) in (-(n_max as i32)..=n_max as i32).enumerate() {
        for (k, &phi) in grid.phi_rad().iter().enumerate() {
            azimuth[mi * q + k] = Complex64::from_polar(1.0, m as f64 * phi);
        }
    }

    let mut columns = vec![vec![Complex64::new(0.0, 0.0); rows]; t_count];
    for (t, col) in columns.iter_mut().enumerate() {
        let mode = ModeIndex::from_flat(t);
        let n = mode.n as f64;
        let scale = (2.0 / (n * (n + 1.0))).sqrt() * mode_sign(mode.m) * inv_sqrt_4pi;
        let species = minus_j_pow(mode.n + if mode.s == 1 { 1 } else { 0 });
        let mi = (mode.m + n_max as i32) as usize;
        for j in 0..l {
            let theta = grid.theta_rad()[j];
            let (_, dp, mp_sin) = normalized_legendre_terms(mode.n, mode.m, theta)?;
            let (a_theta, a_phi) = if mode.s == 1 {
                (Complex64::new(0.0, mp_sin), Complex64::new(-dp, 0.0))
            } else {
                (Complex64::new(dp, 0.0), Complex64::new(0.0, mp_sin))
            };
            let radial = species * scale;
            for k in 0..q {
                let p = grid.index(j, k);
                let f = azimuth[mi * q + k] * radial * sqrt_w[p];
                col[2 * p] = f * a_theta;
                col[2 * p + 1] = f * a_phi;
            }
        }
    }

    Ok(PatternMatrix {
        columns,
        n_max,
        grid: grid.clone(),
    })
}

/// Mode coefficients of every element, with per-element reconstruction
/// residuals.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    coeffs: Vec<Vec<Complex64>>,
    n_max: u32,
    residuals: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn num_elements(&self) -> usize {
        self.coeffs.len()
    }

    pub fn num_modes(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Coefficients of one element over the flat mode index.
    pub fn element(&self, i: usize) -> &[Complex64] {
        &self.coeffs[i]
    }

    /// Relative reconstruction residual of one element (0 for a zero field).
    pub fn residual(&self, i: usize) -> f64 {
        self.residuals[i]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Projects element fields onto the pattern-matrix columns. Since the columns
/// are orthonormal the projection `K^H e` is the least-squares coefficient
/// solution; a large residual means the truncation (or the data) does not fit
/// and is reported, not treated as an error.
pub fn extract_coefficients(
    set: &ElementFieldSet,
    kmat: &PatternMatrix,
) -> Result<CoefficientMatrix> {
    if set.grid() != kmat.grid() {
        return Err(Error::invalid("field set and pattern matrix use different grids"));
    }
    let grid = set.grid();
    let sqrt_w: Vec<f64> = grid.weights_sr().iter().map(|w| w.sqrt()).collect();
    let t_count = kmat.num_modes();
    let rows = kmat.num_rows();

    let mut coeffs = Vec::with_capacity(set.num_elements());
    let mut residuals = Vec::with_capacity(set.num_elements());
    let mut weighted = vec![Complex64::new(0.0, 0.0); rows];
    for i in 0..set.num_elements() {
        let s = set.samples(i);
        for p in 0..grid.len() {
            weighted[2 * p] = s[2 * p] * sqrt_w[p];
            weighted[2 * p + 1] = s[2 * p + 1] * sqrt_w[p];
        }
        let mut q_row = Vec::with_capacity(t_count);
        for t in 0..t_count {
            let col = kmat.column(t);
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, e) in col.iter().zip(&weighted) {
                acc += k.conj() * e;
            }
            q_row.push(acc);
        }
        let norm2: f64 = weighted.iter().map(|z| z.norm_sqr()).sum();
        let residual = if norm2 == 0.0 {
            0.0
        } else {
            let mut diff2 = 0.0;
            for (r, e) in weighted.iter().enumerate() {
                let mut recon = Complex64::new(0.0, 0.0);
                for (t, qt) in q_row.iter().enumerate() {
                    recon += kmat.column(t)[r] * qt;
                }
                diff2 += (e - recon).norm_sqr();
            }
            (diff2 / norm2).sqrt()
        };
        coeffs.push(q_row);
        residuals.push(residual);
    }

    Ok(CoefficientMatrix {
        coeffs,
        n_max: kmat.n_max(),
        residuals,
    })
}

/// Which field components enter the directivity numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizationMode {
    /// Both components; matches the quadrature path of [`crate::analysis`].
    Total,
    /// One scalar component; matches the steering-vector convention of
    /// [`crate::fieldmodel::ArrayFieldMatrix`].
    Single(Polarization),
}

/// Directivity of excitation `b` evaluated purely in mode space: the
/// reconstructed field at the target direction over the total mode power,
/// scaled by 4 pi.
pub fn directivity_from_modes(
    coeffs: &CoefficientMatrix,
    b: &BeamVector,
    direction_rad: (f64, f64),
    polarization: PolarizationMode,
) -> Result<f64> {
    if b.len() != coeffs.num_elements() {
        return Err(Error::invalid("beam vector length must match element count"));
    }
    let (theta, phi) = direction_rad;
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::invalid("direction must be off the poles"));
    }

    let t_count = coeffs.num_modes();
    let mut combined = vec![Complex64::new(0.0, 0.0); t_count];
    for (i, bi) in b.entries().iter().enumerate() {
        for (t, qt) in coeffs.element(i).iter().enumerate() {
            combined[t] += bi * qt;
        }
    }
    let power: f64 = combined.iter().map(|z| z.norm_sqr()).sum();
    if !(power > 0.0) {
        return Err(Error::numerical("zero radiated power"));
    }

    let inv_sqrt_4pi = 1.0 / FULL_SPHERE_SR.sqrt();
    let mut f_theta = Complex64::new(0.0, 0.0);
    let mut f_phi = Complex64::new(0.0, 0.0);
    for (t, ct) in combined.iter().enumerate() {
        let (kt, kp) = pattern_function(ModeIndex::from_flat(t), theta, phi)?;
        f_theta += ct * kt * inv_sqrt_4pi;
        f_phi += ct * kp * inv_sqrt_4pi;
    }
    let num = match polarization {
        PolarizationMode::Total => f_theta.norm_sqr() + f_phi.norm_sqr(),
        PolarizationMode::Single(Polarization::Theta) => f_theta.norm_sqr(),
        PolarizationMode::Single(Polarization::Phi) => f_phi.norm_sqr(),
    };
    Ok(FULL_SPHERE_SR * num / power)
}

/// Default truncation order for an array: `ceil(k r0) + 10` with `r0` the
/// radius of the smallest origin-centered sphere holding every element.
pub fn default_truncation(geometry: &ArrayGeometry) -> u32 {
    let kr = geometry.wavenumber() * geometry.enclosing_radius_m();
    (kr.ceil() as u32) + 10
}

/// Debug dump: one CSV row per element, `re`/`im` pairs over the flat mode
/// index, 17 significant digits.
pub fn save_coefficients_csv(coeffs: &CoefficientMatrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let t_count = coeffs.num_modes();
    let header: Vec<String> = (0..t_count)
        .flat_map(|t| [format!("re_q{t}"), format!("im_q{t}")])
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..coeffs.num_elements() {
        let row: Vec<String> = coeffs
            .element(i)
            .iter()
            .flat_map(|z| [format!("{:.16e}", z.re), format!("{:.16e}", z.im)])
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
