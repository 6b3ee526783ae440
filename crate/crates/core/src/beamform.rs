//! Closed-form superdirective beamformer and comparison baselines.
//!
//! The optimum of the directivity quotient
//! `f(b) = |b^T E0|^2 / (b^T G b*)` is a rank-1 generalized eigenproblem:
//! the only nonzero eigenvalue is `lambda0 = E0^H G^{-1} E0` and the
//! maximizing vector is `b = x0*` with `x0 = G^{-1} E0`. One Hermitian solve
//! replaces a general eigendecomposition; a generic eigensolver survives only
//! as a test oracle.
//!
//! Quadratic forms follow the `b^T (.) b*` convention throughout, which is
//! why the conjugate `x0*` (not `x0`) is the returned excitation.

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fieldmodel::{
    build_field_matrix, synth_element_fields, AngularGrid, ArrayFieldMatrix, ArrayGeometry,
    ElementModel,
};
use crate::linalg;

/// Condition estimate above which an unregularized solve carries a warning.
pub const CONDITION_WARN_THRESHOLD: f64 = 1e12;

/// How a beam vector was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamLabel {
    Optimal,
    Mrt,
    Traditional,
    Ga,
    Custom,
}

impl BeamLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BeamLabel::Optimal => "optimal",
            BeamLabel::Mrt => "mrt",
            BeamLabel::Traditional => "traditional",
            BeamLabel::Ga => "ga",
            BeamLabel::Custom => "custom",
        }
    }
}

/// Complex excitation vector, one entry per element.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    b: Vec<Complex64>,
    label: BeamLabel,
}

impl BeamVector {
    pub fn new(b: Vec<Complex64>, label: BeamLabel) -> Result<Self> {
        if b.is_empty() || b.iter().all(|z| z.norm_sqr() == 0.0) {
            return Err(Error::invalid("beam vector needs at least one nonzero entry"));
        }
        if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("beam vector entries must be finite"));
        }
        Ok(BeamVector { b, label })
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.b
    }

    pub fn label(&self) -> BeamLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Largest amplitude divided by smallest nonzero amplitude.
    pub fn amplitude_range(&self) -> f64 {
        let mut min = f64::INFINITY;
        let mut max: f64 = 0.0;
        for z in &self.b {
            let a = z.norm();
            if a > 0.0 {
                min = min.min(a);
            }
            max = max.max(a);
        }
        max / min
    }
}

/// Outcome of the closed-form solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub b: BeamVector,
    /// Unconstrained maximum of the directivity quotient.
    pub lambda0: f64,
    /// `lambda0 * 4 pi`, the physical directivity in the target direction.
    pub directivity: f64,
    /// Estimated condition number of the (regularized) Gram.
    pub condition_estimate: f64,
    /// Present when the Gram looks ill-conditioned and no regularization was
    /// requested.
    pub warning: Option<String>,
}

impl Serialize for SolveReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = if self.warning.is_some() { 6 } else { 5 };
        let mut s = serializer.serialize_struct("SolveReport", n)?;
        s.serialize_field("method", self.b.label().as_str())?;
        let b: Vec<[f64; 2]> = self.b.entries().iter().map(|z| [z.re, z.im]).collect();
        s.serialize_field("b", &b)?;
        s.serialize_field("lambda0", &self.lambda0)?;
        s.serialize_field("directivity", &self.directivity)?;
        s.serialize_field("condition_estimate", &self.condition_estimate)?;
        if let Some(w) = &self.warning {
            s.serialize_field("warning", w)?;
        }
        s.end()
    }
}

/// Physical directivity of excitation `b`:
/// `c * |b^T E0|^2 / (b^T G b*)` with `c = 4 pi`.
///
/// This is also the GA fitness up to the constant `c`.
pub fn directivity_quotient(b: &BeamVector, a: &ArrayFieldMatrix) -> Result<f64> {
    if b.len() != a.num_elements() {
        return Err(Error::invalid(format!(
            "beam vector has {} entries for {} elements",
            b.len(),
            a.num_elements()
        )));
    }
    let num = a.steered_field(b.entries()).norm_sqr();
    let den = a.radiated_power(b.entries());
    if !(den > 0.0) {
        return Err(Error::numerical("degenerate excitation: zero radiated power"));
    }
    Ok(a.c() * num / den)
}

fn regularized_gram(a: &ArrayFieldMatrix, regularization: f64) -> Vec<Complex64> {
    let m = a.num_elements();
    let mut g = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            g.push(a.gram(i, j));
        }
    }
    if regularization > 0.0 {
        let trace: f64 = (0..m).map(|i| a.gram(i, i).re).sum();
        let eps = regularization * trace / m as f64;
        for i in 0..m {
            g[i * m + i] += eps;
        }
    }
    g
}

/// Closed-form optimal beamformer via the rank-1 structure:
/// `x0 = G^{-1} E0`, `lambda0 = E0^H x0`, `b = x0*`.
///
/// `regularization` adds `eps * trace(G)/M` to the Gram diagonal before the
/// solve (Tikhonov); zero means off.
pub fn optimal_beamformer(a: &ArrayFieldMatrix, regularization: f64) -> Result<SolveReport> {
    if !(regularization >= 0.0) || !regularization.is_finite() {
        return Err(Error::invalid("regularization must be a finite nonnegative number"));
    }
    let m = a.num_elements();
    if a.steering().iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::numerical("steering vector is zero in the target direction"));
    }
    let g = regularized_gram(a, regularization);
    let factor = linalg::cholesky(&g, m)?;
    let x0 = factor.solve(a.steering());

    let lambda0: f64 = a
        .steering()
        .iter()
        .zip(&x0)
        .map(|(e, x)| (e.conj() * x).re)
        .sum();
    let lambda0 = lambda0.max(0.0);

    let b = BeamVector::new(x0.iter().map(|z| z.conj()).collect(), BeamLabel::Optimal)?;

    // The quotient evaluated on the same (regularized) Gram must reproduce
    // lambda0; a mismatch means the solve went numerically bad.
    let num = a.steered_field(b.entries()).norm_sqr();
    let mut den = Complex64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            den += b.entries()[i] * g[i * m + j] * b.entries()[j].conj();
        }
    }
    if !(den.re > 0.0) {
        return Err(Error::numerical("degenerate excitation: zero radiated power"));
    }
    let check = num / den.re;
    if (check - lambda0).abs() > 1e-10 * lambda0.max(f64::MIN_POSITIVE) {
        return Err(Error::numerical(format!(
            "closed-form eigenvalue {lambda0:e} disagrees with quotient {check:e}; \
             Gram too ill-conditioned, supply regularization"
        )));
    }

    let condition_estimate = linalg::condition_estimate(&g, m, &factor);
    let warning = if regularization == 0.0 && condition_estimate > CONDITION_WARN_THRESHOLD {
        Some(format!(
            "gram condition estimate {condition_estimate:.3e} exceeds {CONDITION_WARN_THRESHOLD:.0e}; \
             consider regularization"
        ))
    } else {
        None
    };

    Ok(SolveReport {
        b,
        lambda0,
        directivity: lambda0 * a.c(),
        condition_estimate,
        warning,
    })
}

/// Maximum ratio transmission: conjugate match to the steering field,
/// `b = E0*`.
pub fn mrt_beamformer(a: &ArrayFieldMatrix) -> Result<BeamVector> {
    BeamVector::new(
        a.steering().iter().map(|z| z.conj()).collect(),
        BeamLabel::Mrt,
    )
}

/// Coupling-blind baseline: solves the optimal beamformer on idealized
/// synthesized fields (isolated-element pattern times geometric phase), then
/// evaluates that excitation against the actual field matrix. Returns the
/// beam vector and its directivity on the actual fields.
pub fn traditional_beamformer(
    geometry: &ArrayGeometry,
    model: &ElementModel,
    grid: &AngularGrid,
    direction_rad: (f64, f64),
    actual: &ArrayFieldMatrix,
    regularization: f64,
) -> Result<(BeamVector, f64)> {
    if geometry.num_elements() != actual.num_elements() {
        return Err(Error::invalid("geometry and actual matrix disagree on element count"));
    }
    if 2 * grid.len() != actual.num_rows() {
        return Err(Error::invalid("grid and actual matrix disagree on sample count"));
    }
    let (t0, p0) = actual.direction_rad();
    if (direction_rad.0 - t0).abs() > 1e-12 || (direction_rad.1 - p0).abs() > 1e-12 {
        return Err(Error::invalid("direction must match the actual field matrix"));
    }
    let ideal_set = synth_element_fields(geometry, model, grid)?;
    let ideal = build_field_matrix(&ideal_set, direction_rad, actual.polarization())?;
    let report = optimal_beamformer(&ideal, regularization)?;
    let b = BeamVector::new(report.b.entries().to_vec(), BeamLabel::Traditional)?;
    let directivity = directivity_quotient(&b, actual)?;
    Ok((b, directivity))
}

/// Scales `b` so the smallest amplitude is 1, then clips amplitudes above `P`
/// to `P` preserving phase. Entries that are exactly zero become `1 + 0j`.
pub fn project_to_range(b: &BeamVector, p: f64) -> Result<BeamVector> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::invalid("range constraint P must be finite and > 1"));
    }
    let min_amp = b
        .entries()
        .iter()
        .map(|z| z.norm())
        .filter(|a| *a > 0.0)
        .fold(f64::INFINITY, f64::min);
    let projected: Vec<Complex64> = b
        .entries()
        .iter()
        .map(|z| {
            if z.norm_sqr() == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let scaled = z / min_amp;
            let amp = scaled.norm();
            if amp > p {
                scaled * (p / amp)
            } else {
                scaled
            }
        })
        .collect();
    BeamVector::new(projected, b.label())
}
