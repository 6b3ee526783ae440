//! Shared fixtures for the criterion benches.

use std::f64::consts::PI;
use superdir_core::fieldmodel::{
    build_field_matrix, synth_element_fields, AngularGrid, ArrayFieldMatrix, ArrayGeometry,
    ElementFieldSet, ElementModel, Polarization,
};

pub const FREQ: f64 = 1.6e9;
pub const END_FIRE: (f64, f64) = (PI / 2.0, 0.0);

pub fn dipole_set(m: usize, spacing_wl: f64, l: usize, q: usize) -> ElementFieldSet {
    let geom = ArrayGeometry::uniform_linear(m, spacing_wl, [1.0, 0.0, 0.0], FREQ).unwrap();
    let grid = AngularGrid::new(l, q).unwrap();
    let model = ElementModel::hertzian_dipole([0.0, 0.0, 1.0]).unwrap();
    synth_element_fields(&geom, &model, &grid).unwrap()
}

pub fn dipole_matrix(m: usize, spacing_wl: f64, l: usize, q: usize) -> ArrayFieldMatrix {
    let set = dipole_set(m, spacing_wl, l, q);
    build_field_matrix(&set, END_FIRE, Polarization::Theta).unwrap()
}
