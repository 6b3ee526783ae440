//! Pattern metrics and method comparison.
//!
//! Directivity here always uses the total radiated power over both
//! polarization components in the denominator, the physically meaningful
//! normalization. The optimizer quotient of [`crate::beamform`] shares the
//! same denominator but steers a single polarization component, so the two
//! numbers coincide exactly when the cross-polarized field vanishes; reports
//! carry both.

use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

use crate::beamform::{
    directivity_quotient, mrt_beamformer, optimal_beamformer, project_to_range, BeamLabel,
    BeamVector,
};
use crate::error::{Error, Result};
use crate::fieldmodel::{build_field_matrix, ArrayFieldMatrix, ElementFieldSet};
use crate::ga::run_ga;
use crate::scenario::ScenarioConfig;
use crate::FULL_SPHERE_SR;

/// Principal plane of a pattern cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutPlane {
    /// Contains the array axis and the dipole axis: the half-plane at phi = 0
    /// joined with phi = 180 degrees, swept over the polar angle.
    EPlane,
    /// The equatorial plane, swept over the azimuth.
    HPlane,
}

/// Directivity along one principal-plane circle, in dBi over angles in
/// degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternCut {
    pub plane: CutPlane,
    pub angles_deg: Vec<f64>,
    pub directivity_dbi: Vec<f64>,
}

impl PatternCut {
    pub fn new(plane: CutPlane, angles_deg: Vec<f64>, directivity_dbi: Vec<f64>) -> Result<Self> {
        if angles_deg.len() != directivity_dbi.len() || angles_deg.len() < 3 {
            return Err(Error::invalid("cut needs matching angle and value sequences"));
        }
        if angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("cut angles must be strictly increasing"));
        }
        if angles_deg
            .iter()
            .chain(directivity_dbi.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("cut values must be finite"));
        }
        Ok(PatternCut {
            plane,
            angles_deg,
            directivity_dbi,
        })
    }

    /// Writes the `angle_deg,directivity_dbi` CSV (LF endings).
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "angle_deg,directivity_dbi")?;
        for (a, d) in self.angles_deg.iter().zip(&self.directivity_dbi) {
            writeln!(w, "{a},{d:.6}")?;
        }
        Ok(())
    }
}

fn summed_field(
    b: &BeamVector,
    fields: &[(Complex64, Complex64)],
) -> (Complex64, Complex64) {
    let mut ft = Complex64::new(0.0, 0.0);
    let mut fp = Complex64::new(0.0, 0.0);
    for (bi, (et, ep)) in b.entries().iter().zip(fields) {
        ft += bi * et;
        fp += bi * ep;
    }
    (ft, fp)
}

/// Weighted total radiated power of the combined field over the sphere.
fn total_power(b: &BeamVector, set: &ElementFieldSet) -> Result<f64> {
    if b.len() != set.num_elements() {
        return Err(Error::invalid("beam vector length must match element count"));
    }
    let grid = set.grid();
    let mut power = 0.0;
    for (p, w) in grid.weights_sr().iter().enumerate() {
        let mut ft = Complex64::new(0.0, 0.0);
        let mut fp = Complex64::new(0.0, 0.0);
        for (i, bi) in b.entries().iter().enumerate() {
            let (et, ep) = set.at(i, p);
            ft += bi * et;
            fp += bi * ep;
        }
        power += w * (ft.norm_sqr() + fp.norm_sqr());
    }
    if !(power > 0.0) {
        return Err(Error::numerical("zero radiated power"));
    }
    Ok(power)
}

/// Physical directivity of excitation `b` in a direction, using both
/// polarization components.
pub fn total_directivity(
    b: &BeamVector,
    set: &ElementFieldSet,
    direction_rad: (f64, f64),
) -> Result<f64> {
    let (theta, _) = direction_rad;
    if theta.sin().abs() < 1e-12 {
        return Err(Error::invalid("direction must be off the poles"));
    }
    let power = total_power(b, set)?;
    let fields = set.eval_direction(direction_rad.0, direction_rad.1);
    let (ft, fp) = summed_field(b, &fields);
    Ok(FULL_SPHERE_SR * (ft.norm_sqr() + fp.norm_sqr()) / power)
}

const DBI_FLOOR: f64 = 1e-30;

/// Evaluates a principal-plane cut of the pattern for excitation `b`.
///
/// The E-plane covers the phi = 0 half-plane for angles in `[0, 180]` and the
/// phi = 180 half-plane for negative angles, so the full circle reads
/// -180..180 degrees. The H-plane sweeps the azimuth at the equator.
pub fn pattern_cut(
    b: &BeamVector,
    set: &ElementFieldSet,
    plane: CutPlane,
    step_deg: f64,
) -> Result<PatternCut> {
    if !(step_deg > 0.0) || (360.0 / step_deg).fract().abs() > 1e-9 {
        return Err(Error::invalid("step must be positive and divide 360 degrees"));
    }
    let power = total_power(b, set)?;
    let steps = (360.0 / step_deg).round() as usize;
    let mut angles = Vec::with_capacity(steps + 1);
    let mut dbi = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let a = -180.0 + i as f64 * step_deg;
        let (theta_deg, phi_deg) = match plane {
            CutPlane::EPlane => {
                if a >= 0.0 {
                    (a, 0.0)
                } else {
                    (-a, 180.0)
                }
            }
            CutPlane::HPlane => (90.0, a.rem_euclid(360.0)),
        };
        let fields = set.eval_direction(theta_deg.to_radians(), phi_deg.to_radians());
        let (ft, fp) = summed_field(b, &fields);
        let d = FULL_SPHERE_SR * (ft.norm_sqr() + fp.norm_sqr()) / power;
        angles.push(a);
        dbi.push(10.0 * d.max(DBI_FLOOR).log10());
    }
    PatternCut::new(plane, angles, dbi)
}

const HALF_POWER_DB: f64 = 3.010_299_956_639_812;

/// 3-dB beamwidth of a cut: locate the peak, walk both ways to the first
/// half-power crossings, interpolate linearly in dB, and return the angular
/// distance between the crossings. The cut is treated as a full circle.
pub fn beamwidth_3db(cut: &PatternCut) -> Result<f64> {
    let n = cut.angles_deg.len();
    // Drop a duplicated wrap point so indices live on the open circle.
    let closed = (cut.angles_deg[n - 1] - cut.angles_deg[0] - 360.0).abs() < 1e-9;
    let m = if closed { n - 1 } else { n };
    if m < 3 {
        return Err(Error::invalid("cut too short"));
    }

    let values = &cut.directivity_dbi[..m];
    let peak_idx = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .expect("nonempty cut");
    let threshold = values[peak_idx] - HALF_POWER_DB;

    let walk = |direction: i64| -> Option<f64> {
        let mut prev_idx = peak_idx;
        let mut prev_angle = cut.angles_deg[peak_idx];
        let mut prev_val = values[peak_idx];
        for _ in 0..m {
            let next_idx = (prev_idx as i64 + direction).rem_euclid(m as i64) as usize;
            let mut delta = cut.angles_deg[next_idx] - cut.angles_deg[prev_idx];
            if direction > 0 && delta <= 0.0 {
                delta += 360.0;
            } else if direction < 0 && delta >= 0.0 {
                delta -= 360.0;
            }
            let next_angle = prev_angle + delta;
            let next_val = values[next_idx];
            if prev_val >= threshold && next_val < threshold {
                let frac = (prev_val - threshold) / (prev_val - next_val);
                return Some(prev_angle + frac * (next_angle - prev_angle));
            }
            prev_idx = next_idx;
            prev_angle = next_angle;
            prev_val = next_val;
        }
        None
    };

    let right = walk(1).ok_or_else(|| Error::numerical("beamwidth undefined: no half-power crossing"))?;
    let left = walk(-1).ok_or_else(|| Error::numerical("beamwidth undefined: no half-power crossing"))?;
    let width = right - left;
    if !(width > 0.0 && width < 360.0) {
        return Err(Error::numerical("beamwidth undefined: crossings overlap"));
    }
    Ok(width)
}

/// One row of a method comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: String,
    pub p: f64,
    /// Total-power directivity at the target direction.
    pub directivity: f64,
    /// Single-polarization optimizer quotient at the same direction.
    pub directivity_quotient: f64,
    /// 3-dB beamwidth of the E-plane cut; absent when undefined.
    pub beamwidth_deg: Option<f64>,
    pub b: Vec<[f64; 2]>,
    /// Whether the excitation satisfies the range constraint `p`.
    pub feasible: bool,
}

/// A named cut destined for one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCut {
    pub name: String,
    pub cut: PatternCut,
}

/// Everything `compare_methods` produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub methods: Vec<MethodReport>,
    pub cuts: Vec<NamedCut>,
}

fn method_row(
    name: &str,
    p: f64,
    b: &BeamVector,
    set: &ElementFieldSet,
    a: &ArrayFieldMatrix,
    cut: &PatternCut,
) -> Result<MethodReport> {
    let direction = a.direction_rad();
    Ok(MethodReport {
        method: name.to_string(),
        p,
        directivity: total_directivity(b, set, direction)?,
        directivity_quotient: directivity_quotient(b, a)?,
        beamwidth_deg: beamwidth_3db(cut).ok(),
        b: b.entries().iter().map(|z| [z.re, z.im]).collect(),
        feasible: b.amplitude_range() <= p * (1.0 + 1e-12),
    })
}

/// Runs every method of the scenario (closed form, MRT, coupling-blind
/// traditional, their range projections, and the GA per constraint) and
/// collects directivity, beamwidth, and cuts for each.
pub fn compare_methods(config: &ScenarioConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let set = config.build_set()?;
    let direction = config.direction_rad();
    let a = build_field_matrix(&set, direction, config.polarization)?;
    let step = config.cut_step_deg;

    let solve = optimal_beamformer(&a, config.regularization)?;
    let mrt = mrt_beamformer(&a)?;
    let geometry = config.geometry()?;
    let (traditional, _) = crate::beamform::traditional_beamformer(
        &geometry,
        &config.element,
        set.grid(),
        direction,
        &a,
        config.regularization,
    )?;

    let mut cuts = Vec::new();
    let mut raw_cut = |name: &str, b: &BeamVector| -> Result<PatternCut> {
        let cut = pattern_cut(b, &set, CutPlane::EPlane, step)?;
        cuts.push(NamedCut {
            name: name.to_string(),
            cut: cut.clone(),
        });
        Ok(cut)
    };
    let optimal_cut = raw_cut("optimal", &solve.b)?;
    let mrt_cut = raw_cut("mrt", &mrt)?;
    let traditional_cut = raw_cut("traditional", &traditional)?;

    let mut methods = Vec::new();
    for &p in &config.range_constraints {
        methods.push(method_row("optimal", p, &solve.b, &set, &a, &optimal_cut)?);
        methods.push(method_row("mrt", p, &mrt, &set, &a, &mrt_cut)?);
        methods.push(method_row(
            "traditional",
            p,
            &traditional,
            &set,
            &a,
            &traditional_cut,
        )?);

        for (name, raw) in [
            ("optimal-projected", &solve.b),
            ("mrt-projected", &mrt),
            ("traditional-projected", &traditional),
        ] {
            let projected = project_to_range(raw, p)?;
            let cut = pattern_cut(&projected, &set, CutPlane::EPlane, step)?;
            methods.push(method_row(name, p, &projected, &set, &a, &cut)?);
            cuts.push(NamedCut {
                name: format!("{name}_P{p}"),
                cut,
            });
        }

        let spec = config.quantization(p)?;
        let ga_report = run_ga(&config.ga_config(), &spec, &a)?;
        let ga_b = BeamVector::new(ga_report.best_b.entries().to_vec(), BeamLabel::Ga)?;
        let cut = pattern_cut(&ga_b, &set, CutPlane::EPlane, step)?;
        methods.push(method_row("ga", p, &ga_b, &set, &a, &cut)?);
        cuts.push(NamedCut {
            name: format!("ga_P{p}"),
            cut,
        });
    }

    Ok(ComparisonReport { methods, cuts })
}
