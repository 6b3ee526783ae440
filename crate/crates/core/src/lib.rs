//! Superdirective beamforming for antenna arrays driven by sampled far-field data.
//!
//! The crate computes excitation vectors that maximize directivity in a chosen
//! direction, either in closed form (a rank-1 generalized Rayleigh quotient
//! solve over the element-field Gram matrix) or by a genetic algorithm that
//! honors an excitation amplitude-range constraint. Directivity is validated
//! through two independent paths: direct solid-angle quadrature on the sampling
//! grid and a spherical wave expansion of the element fields.
//!
//! Module map:
//!
//! * [`fieldmodel`] - angular grids, analytic element fields, field-set I/O,
//!   and the weighted field matrix consumed by every solver.
//! * [`beamform`] - the closed-form optimal beamformer plus MRT and
//!   coupling-blind baselines, and the amplitude-range projection.
//! * [`ga`] - quantized amplitude/phase chromosomes and the elitist GA driver.
//! * [`swe`] - normalized Legendre machinery, far-field pattern functions,
//!   mode-coefficient extraction, and mode-space directivity.
//! * [`analysis`] - full-pattern directivity, principal-plane cuts, 3-dB
//!   beamwidth, and multi-method comparison reports.
//! * [`scenario`] - serializable experiment configuration shared with the CLI.

// Negated float comparisons like `!(x > 0.0)` are load-bearing: they reject
// NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod beamform;
mod error;
pub mod fieldmodel;
pub mod ga;
mod linalg;
pub mod scenario;
pub mod swe;

pub use analysis::{beamwidth_3db, pattern_cut, total_directivity, CutPlane, MethodReport, PatternCut};
pub use beamform::{
    directivity_quotient, mrt_beamformer, optimal_beamformer, project_to_range,
    traditional_beamformer, BeamLabel, BeamVector, SolveReport,
};
pub use error::{Error, Result};
pub use fieldmodel::{
    build_field_matrix, load_field_set, save_field_set, synth_element_fields, AngularGrid,
    ArrayFieldMatrix, ArrayGeometry, ElementFieldSet, ElementModel, Polarization,
};
pub use ga::{run_ga, GaConfig, GaRunReport, Genome, QuantizationSpec};
pub use scenario::ScenarioConfig;

/// Speed of light in vacuum, meters per second.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Full sphere solid angle, steradians. Also the directivity normalization
/// constant: with solid-angle weights folded into the field matrix the
/// Rayleigh quotient times this constant is the physical directivity.
pub const FULL_SPHERE_SR: f64 = 4.0 * std::f64::consts::PI;
