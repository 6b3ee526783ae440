//! Angular grids, analytic element far fields, and the weighted field matrix.
//!
//! Everything downstream (closed-form solver, GA fitness, pattern metrics)
//! consumes an [`ArrayFieldMatrix`]: per-element far-field samples stacked
//! into a tall complex matrix whose rows carry the square root of the
//! solid-angle quadrature weight, so that quadratic forms in the excitation
//! vector are true quadratures of radiated power over the sphere.

mod io;

pub use io::{load_field_set, save_field_set};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{FULL_SPHERE_SR, SPEED_OF_LIGHT};

/// Discretized (theta, phi) sphere with per-point solid-angle weights.
///
/// Theta samples are cell midpoints `theta_j = (j + 1/2) * pi / l`, so the
/// poles are never sampled. Phi samples are `phi_k = k * 2*pi / q`. The weight
/// of a point is the exact solid angle of its grid cell,
/// `2 sin(theta_j) sin(dtheta/2) dphi`, which telescopes to exactly 4*pi over
/// the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    l: usize,
    q: usize,
    theta_rad: Vec<f64>,
    phi_rad: Vec<f64>,
    weights_sr: Vec<f64>,
}

impl AngularGrid {
    /// Builds an `l x q` midpoint grid. Rejects `l < 2` or `q < 4`, where the
    /// quadrature would be meaningless.
    pub fn new(l: usize, q: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::invalid(format!("theta sample count l={l} must be >= 2")));
        }
        if q < 4 {
            return Err(Error::invalid(format!("phi sample count q={q} must be >= 4")));
        }
        let dtheta = PI / l as f64;
        let dphi = 2.0 * PI / q as f64;
        let theta_rad: Vec<f64> = (0..l).map(|j| (j as f64 + 0.5) * dtheta).collect();
        let phi_rad: Vec<f64> = (0..q).map(|k| k as f64 * dphi).collect();
        let half = (0.5 * dtheta).sin();
        let mut weights_sr = Vec::with_capacity(l * q);
        for &theta in &theta_rad {
            let w = 2.0 * theta.sin() * half * dphi;
            for _ in 0..q {
                weights_sr.push(w);
            }
        }
        Ok(AngularGrid {
            l,
            q,
            theta_rad,
            phi_rad,
            weights_sr,
        })
    }

    /// Number of theta samples.
    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of phi samples.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Total number of angular points, `l * q`.
    pub fn len(&self) -> usize {
        self.l * self.q
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn theta_rad(&self) -> &[f64] {
        &self.theta_rad
    }

    pub fn phi_rad(&self) -> &[f64] {
        &self.phi_rad
    }

    /// Per-point solid-angle weights in steradians, point-major order.
    pub fn weights_sr(&self) -> &[f64] {
        &self.weights_sr
    }

    /// Flat point index for theta ring `j` and phi column `k` (theta-major).
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.q + k
    }

    /// Angles of flat point `p`.
    pub fn angles(&self, p: usize) -> (f64, f64) {
        (self.theta_rad[p / self.q], self.phi_rad[p % self.q])
    }

    /// Flat index of the grid point nearest to an arbitrary direction.
    pub fn nearest(&self, theta: f64, phi: f64) -> usize {
        let dtheta = PI / self.l as f64;
        let dphi = 2.0 * PI / self.q as f64;
        let j = ((theta / dtheta - 0.5).round().max(0.0) as usize).min(self.l - 1);
        let phi = phi.rem_euclid(2.0 * PI);
        let k = (phi / dphi).round() as usize % self.q;
        self.index(j, k)
    }
}

/// Element positions and operating frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions_m: Vec<[f64; 3]>,
    frequency_hz: f64,
}

impl ArrayGeometry {
    pub fn new(positions_m: Vec<[f64; 3]>, frequency_hz: f64) -> Result<Self> {
        if positions_m.is_empty() {
            return Err(Error::invalid("array needs at least one element"));
        }
        if !(frequency_hz > 0.0) {
            return Err(Error::invalid("frequency must be positive"));
        }
        if positions_m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("element positions must be finite"));
        }
        Ok(ArrayGeometry {
            positions_m,
            frequency_hz,
        })
    }

    /// Uniform linear array along `axis`, centered on the origin, with the
    /// given spacing in wavelengths.
    pub fn uniform_linear(
        num_elements: usize,
        spacing_wavelengths: f64,
        axis: [f64; 3],
        frequency_hz: f64,
    ) -> Result<Self> {
        if !(spacing_wavelengths > 0.0) {
            return Err(Error::invalid("spacing must be positive"));
        }
        if !(frequency_hz > 0.0) {
            return Err(Error::invalid("frequency must be positive"));
        }
        let axis = unit_vector(axis)?;
        let lambda = SPEED_OF_LIGHT / frequency_hz;
        let step = spacing_wavelengths * lambda;
        let offset = 0.5 * step * (num_elements as f64 - 1.0);
        let positions = (0..num_elements)
            .map(|i| {
                let s = i as f64 * step - offset;
                [axis[0] * s, axis[1] * s, axis[2] * s]
            })
            .collect();
        ArrayGeometry::new(positions, frequency_hz)
    }

    pub fn positions_m(&self) -> &[[f64; 3]] {
        &self.positions_m
    }

    pub fn num_elements(&self) -> usize {
        self.positions_m.len()
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    /// Free-space wavenumber `2 pi f / c0`, radians per meter.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI * self.frequency_hz / SPEED_OF_LIGHT
    }

    /// Radius of the smallest origin-centered sphere enclosing all elements.
    pub fn enclosing_radius_m(&self) -> f64 {
        self.positions_m
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Isolated-element radiation model used when synthesizing fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ElementModel {
    /// Unit theta-polarized field in every direction.
    Isotropic,
    /// Infinitesimal dipole along `axis`.
    HertzianDipole { axis: [f64; 3] },
    /// Half-wavelength dipole along `axis`.
    HalfWaveDipole { axis: [f64; 3] },
}

impl ElementModel {
    pub fn isotropic() -> Self {
        ElementModel::Isotropic
    }

    pub fn hertzian_dipole(axis: [f64; 3]) -> Result<Self> {
        Ok(ElementModel::HertzianDipole {
            axis: unit_vector(axis)?,
        })
    }

    pub fn half_wave_dipole(axis: [f64; 3]) -> Result<Self> {
        Ok(ElementModel::HalfWaveDipole {
            axis: unit_vector(axis)?,
        })
    }

    /// Checks the unit-axis invariant on models built from raw config data.
    pub fn validate(&self) -> Result<()> {
        match self {
            ElementModel::Isotropic => Ok(()),
            ElementModel::HertzianDipole { axis } | ElementModel::HalfWaveDipole { axis } => {
                let n2 = axis.iter().map(|v| v * v).sum::<f64>();
                if (n2.sqrt() - 1.0).abs() > 1e-12 {
                    Err(Error::invalid("element axis must have unit norm"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Isolated-element pattern (theta and phi components, no array phase).
    fn pattern(&self, sin_t: f64, cos_t: f64, sin_p: f64, cos_p: f64) -> (f64, f64) {
        match self {
            ElementModel::Isotropic => (1.0, 0.0),
            ElementModel::HertzianDipole { axis } => {
                let (t_hat, p_hat) = tangent_basis(sin_t, cos_t, sin_p, cos_p);
                (dot(*axis, t_hat), dot(*axis, p_hat))
            }
            ElementModel::HalfWaveDipole { axis } => {
                let (t_hat, p_hat) = tangent_basis(sin_t, cos_t, sin_p, cos_p);
                let r_hat = [sin_t * cos_p, sin_t * sin_p, cos_t];
                let cos_psi = dot(*axis, r_hat);
                let sin2_psi = (1.0 - cos_psi * cos_psi).max(0.0);
                if sin2_psi < 1e-24 {
                    return (0.0, 0.0);
                }
                let shape = (0.5 * PI * cos_psi).cos() / sin2_psi;
                (shape * dot(*axis, t_hat), shape * dot(*axis, p_hat))
            }
        }
    }
}

fn unit_vector(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::invalid("axis must be a nonzero finite vector"));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn tangent_basis(sin_t: f64, cos_t: f64, sin_p: f64, cos_p: f64) -> ([f64; 3], [f64; 3]) {
    (
        [cos_t * cos_p, cos_t * sin_p, -sin_t],
        [-sin_p, cos_p, 0.0],
    )
}

/// Smooth multiplicative per-element pattern perturbation used by the
/// coupling-distortion benchmarks. The factor for element `i` is
/// `1 + level * (c0 + c1 cos(theta) + c2 sin(theta)cos(phi) + c3 sin(theta)sin(phi))`
/// with complex coefficients drawn once from a seeded generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    level: f64,
    seed: u64,
    coeffs: Vec<[Complex64; 4]>,
}

impl Distortion {
    fn new(level: f64, seed: u64, num_elements: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 0.5;
        let coeffs = (0..num_elements)
            .map(|_| {
                let mut c = [Complex64::new(0.0, 0.0); 4];
                for slot in &mut c {
                    let re: f64 = rng.random_range(-1.0..1.0);
                    let im: f64 = rng.random_range(-1.0..1.0);
                    *slot = scale * Complex64::new(re, im);
                }
                c
            })
            .collect();
        Distortion {
            level,
            seed,
            coeffs,
        }
    }

    fn factor(&self, element: usize, sin_t: f64, cos_t: f64, sin_p: f64, cos_p: f64) -> Complex64 {
        let c = &self.coeffs[element];
        Complex64::new(1.0, 0.0)
            + self.level * (c[0] + c[1] * cos_t + c[2] * sin_t * cos_p + c[3] * sin_t * sin_p)
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// How a field set came to be; decides how off-grid directions are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldOrigin {
    /// Synthesized from an analytic model; directions evaluate exactly.
    Synthetic {
        geometry: ArrayGeometry,
        model: ElementModel,
        distortion: Option<Distortion>,
    },
    /// Loaded from disk; directions evaluate at the nearest grid point.
    Loaded,
}

/// Per-element complex far-field samples on an [`AngularGrid`].
///
/// Samples for one element are stored theta-major with the two polarization
/// components interleaved per point: index `2p` is the theta component and
/// `2p + 1` the phi component of point `p`.
#[derive(Debug, Clone)]
pub struct ElementFieldSet {
    grid: AngularGrid,
    samples: Vec<Vec<Complex64>>,
    frequency_hz: f64,
    origin: FieldOrigin,
}

impl ElementFieldSet {
    pub(crate) fn from_parts(
        grid: AngularGrid,
        samples: Vec<Vec<Complex64>>,
        frequency_hz: f64,
        origin: FieldOrigin,
    ) -> Result<Self> {
        let expected = 2 * grid.len();
        for (i, s) in samples.iter().enumerate() {
            if s.len() != expected {
                return Err(Error::invalid(format!(
                    "element {i} has {} samples, expected {expected}",
                    s.len()
                )));
            }
            if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::invalid(format!("element {i} contains non-finite samples")));
            }
        }
        if samples.is_empty() {
            return Err(Error::invalid("field set needs at least one element"));
        }
        Ok(ElementFieldSet {
            grid,
            samples,
            frequency_hz,
            origin,
        })
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn num_elements(&self) -> usize {
        self.samples.len()
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn origin(&self) -> &FieldOrigin {
        &self.origin
    }

    /// Interleaved (theta, phi) samples of one element.
    pub fn samples(&self, element: usize) -> &[Complex64] {
        &self.samples[element]
    }

    /// Field of one element at grid point `p`.
    pub fn at(&self, element: usize, p: usize) -> (Complex64, Complex64) {
        let s = &self.samples[element];
        (s[2 * p], s[2 * p + 1])
    }

    /// Evaluates every element at an arbitrary direction: analytically for
    /// synthetic sets, nearest grid point for loaded ones.
    pub fn eval_direction(&self, theta: f64, phi: f64) -> Vec<(Complex64, Complex64)> {
        match &self.origin {
            FieldOrigin::Synthetic {
                geometry,
                model,
                distortion,
            } => {
                let mut out = Vec::with_capacity(self.num_elements());
                for i in 0..self.num_elements() {
                    out.push(eval_element(geometry, model, distortion.as_ref(), i, theta, phi));
                }
                out
            }
            FieldOrigin::Loaded => {
                let p = self.grid.nearest(theta, phi);
                (0..self.num_elements()).map(|i| self.at(i, p)).collect()
            }
        }
    }

    /// Returns a copy with seeded multiplicative pattern distortion applied.
    /// Only synthetic sets can be distorted.
    pub fn with_distortion(&self, level: f64, seed: u64) -> Result<Self> {
        let (geometry, model) = match &self.origin {
            FieldOrigin::Synthetic {
                geometry, model, ..
            } => (geometry.clone(), *model),
            FieldOrigin::Loaded => {
                return Err(Error::invalid("cannot distort a loaded field set"))
            }
        };
        if !(level >= 0.0) || !level.is_finite() {
            return Err(Error::invalid("distortion level must be a finite nonnegative number"));
        }
        let distortion = Distortion::new(level, seed, geometry.num_elements());
        synth_with(&geometry, &model, &self.grid, Some(distortion))
    }

    /// Weighted power of one element's samples over the sphere.
    pub fn weighted_power(&self, element: usize) -> f64 {
        let w = self.grid.weights_sr();
        let s = &self.samples[element];
        (0..self.grid.len())
            .map(|p| w[p] * (s[2 * p].norm_sqr() + s[2 * p + 1].norm_sqr()))
            .sum()
    }
}

fn eval_element(
    geometry: &ArrayGeometry,
    model: &ElementModel,
    distortion: Option<&Distortion>,
    element: usize,
    theta: f64,
    phi: f64,
) -> (Complex64, Complex64) {
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_p, cos_p) = phi.sin_cos();
    let (et, ep) = model.pattern(sin_t, cos_t, sin_p, cos_p);
    let r_hat = [sin_t * cos_p, sin_t * sin_p, cos_t];
    let k = geometry.wavenumber();
    let phase = Complex64::from_polar(1.0, k * dot(r_hat, geometry.positions_m()[element]));
    let factor = match distortion {
        Some(d) => d.factor(element, sin_t, cos_t, sin_p, cos_p) * phase,
        None => phase,
    };
    (factor * et, factor * ep)
}

/// Synthesizes per-element far fields: isolated-element pattern times the
/// geometric phase `exp(j k r_hat . p_i)`, with no coupling between elements.
pub fn synth_element_fields(
    geometry: &ArrayGeometry,
    model: &ElementModel,
    grid: &AngularGrid,
) -> Result<ElementFieldSet> {
    model.validate()?;
    synth_with(geometry, model, grid, None)
}

fn synth_with(
    geometry: &ArrayGeometry,
    model: &ElementModel,
    grid: &AngularGrid,
    distortion: Option<Distortion>,
) -> Result<ElementFieldSet> {
    let mut samples = Vec::with_capacity(geometry.num_elements());
    for i in 0..geometry.num_elements() {
        let mut s = Vec::with_capacity(2 * grid.len());
        for j in 0..grid.l() {
            let theta = grid.theta_rad()[j];
            for k in 0..grid.q() {
                let phi = grid.phi_rad()[k];
                let (et, ep) = eval_element(geometry, model, distortion.as_ref(), i, theta, phi);
                s.push(et);
                s.push(ep);
            }
        }
        samples.push(s);
    }
    ElementFieldSet::from_parts(
        grid.clone(),
        samples,
        geometry.frequency_hz(),
        FieldOrigin::Synthetic {
            geometry: geometry.clone(),
            model: *model,
            distortion,
        },
    )
}

/// Which scalar field component steers the beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Theta,
    Phi,
}

/// Weighted field matrix, its Gram, and the steering field of the array.
///
/// Column `i` holds element `i`'s interleaved samples scaled by the square
/// root of the point's solid-angle weight. The Gram entry `(i, j)` is
/// `sum_p w_p e_i(p) conj(e_j(p))` over both polarization rows, so the
/// quadratic form `b^T G b*` is the weighted radiated power of the summed
/// field `sum_i b_i e_i`. The steering vector holds the chosen polarization
/// component of each element field in the target direction, unweighted.
#[derive(Debug, Clone)]
pub struct ArrayFieldMatrix {
    columns: Vec<Vec<Complex64>>,
    gram: Vec<Complex64>,
    e0: Vec<Complex64>,
    direction_rad: (f64, f64),
    polarization: Polarization,
}

impl ArrayFieldMatrix {
    pub fn num_elements(&self) -> usize {
        self.e0.len()
    }

    /// Number of rows, `2 * l * q`.
    pub fn num_rows(&self) -> usize {
        self.columns[0].len()
    }

    /// Weighted sample column of one element.
    pub fn column(&self, element: usize) -> &[Complex64] {
        &self.columns[element]
    }

    /// Gram entry `(i, j)`.
    pub fn gram(&self, i: usize, j: usize) -> Complex64 {
        self.gram[i * self.e0.len() + j]
    }

    /// Steering field: chosen polarization component per element at the
    /// target direction.
    pub fn steering(&self) -> &[Complex64] {
        &self.e0
    }

    pub fn direction_rad(&self) -> (f64, f64) {
        self.direction_rad
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    /// Directivity normalization constant, 4 pi steradians.
    pub fn c(&self) -> f64 {
        FULL_SPHERE_SR
    }

    /// Weighted radiated power of the excitation `b`: `b^T G b*`.
    pub fn radiated_power(&self, b: &[Complex64]) -> f64 {
        let m = self.e0.len();
        assert_eq!(b.len(), m, "excitation length must match element count");
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                acc += b[i] * self.gram[i * m + j] * b[j].conj();
            }
        }
        acc.re
    }

    /// Field value at the target direction for excitation `b`: `b^T E0`.
    pub fn steered_field(&self, b: &[Complex64]) -> Complex64 {
        b.iter().zip(&self.e0).map(|(bi, e)| bi * e).sum()
    }
}

/// Builds the weighted field matrix, Gram, and steering vector for a target
/// direction and polarization.
pub fn build_field_matrix(
    set: &ElementFieldSet,
    direction_rad: (f64, f64),
    polarization: Polarization,
) -> Result<ArrayFieldMatrix> {
    let (theta0, phi0) = direction_rad;
    if !(0.0..=PI).contains(&theta0) {
        return Err(Error::invalid("direction theta must lie in [0, pi]"));
    }
    if !phi0.is_finite() {
        return Err(Error::invalid("direction phi must be finite"));
    }
    let phi0 = phi0.rem_euclid(2.0 * PI);
    if polarization == Polarization::Phi && theta0.sin().abs() < 1e-12 {
        return Err(Error::invalid(
            "phi polarization is undefined at the poles; pick a direction with sin(theta) != 0",
        ));
    }

    let grid = set.grid();
    let m = set.num_elements();
    let sqrt_w: Vec<f64> = grid.weights_sr().iter().map(|w| w.sqrt()).collect();

    let mut columns = Vec::with_capacity(m);
    for i in 0..m {
        let s = set.samples(i);
        let mut col = Vec::with_capacity(s.len());
        for p in 0..grid.len() {
            col.push(s[2 * p] * sqrt_w[p]);
            col.push(s[2 * p + 1] * sqrt_w[p]);
        }
        columns.push(col);
    }

    // Upper triangle computed once, lower mirrored, so the Gram is exactly
    // Hermitian.
    let mut gram = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in i..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in columns[i].iter().zip(&columns[j]) {
                acc += a * b.conj();
            }
            gram[i * m + j] = acc;
            gram[j * m + i] = acc.conj();
        }
    }

    let fields0 = set.eval_direction(theta0, phi0);
    let e0: Vec<Complex64> = fields0
        .iter()
        .map(|&(et, ep)| match polarization {
            Polarization::Theta => et,
            Polarization::Phi => ep,
        })
        .collect();

    Ok(ArrayFieldMatrix {
        columns,
        gram,
        e0,
        direction_rad: (theta0, phi0),
        polarization,
    })
}

#[cfg(test)]
mod tests;
