use super::*;
use approx::assert_relative_eq;

fn freq_1ghz() -> f64 {
    1.0e9
}

fn lambda(freq: f64) -> f64 {
    SPEED_OF_LIGHT / freq
}

#[test]
fn grid_weights_sum_to_full_sphere() {
    for (l, q) in [(180, 360), (90, 180), (2, 4), (7, 13)] {
        let grid = AngularGrid::new(l, q).unwrap();
        let sum: f64 = grid.weights_sr().iter().sum();
        assert_relative_eq!(sum, FULL_SPHERE_SR, max_relative = 1e-9);
        assert_eq!(grid.weights_sr().len(), l * q);
    }
}

#[test]
fn grid_small_case_weight_formula() {
    let grid = AngularGrid::new(2, 4).unwrap();
    assert_eq!(grid.len(), 8);
    let dtheta = PI / 2.0;
    let dphi = PI / 2.0;
    for p in 0..grid.len() {
        let (theta, _) = grid.angles(p);
        // Exact solid angle of the cell around the midpoint.
        let expected = 2.0 * theta.sin() * (0.5 * dtheta).sin() * dphi;
        assert_relative_eq!(grid.weights_sr()[p], expected, max_relative = 1e-15);
    }
}

#[test]
fn grid_midpoints_avoid_poles() {
    let grid = AngularGrid::new(180, 360).unwrap();
    for &t in grid.theta_rad() {
        assert!(t > 0.0 && t < PI);
    }
    assert_relative_eq!(grid.theta_rad()[0], 0.5 * PI / 180.0, max_relative = 1e-15);
    assert_relative_eq!(grid.phi_rad()[0], 0.0);
    assert_relative_eq!(grid.phi_rad()[1], 2.0 * PI / 360.0, max_relative = 1e-15);
}

#[test]
fn grid_rejects_degenerate_sizes() {
    assert!(AngularGrid::new(1, 360).is_err());
    assert!(AngularGrid::new(180, 3).is_err());
}

#[test]
fn grid_nearest_picks_closest_midpoint() {
    let grid = AngularGrid::new(180, 360).unwrap();
    let p = grid.nearest(PI / 2.0, 0.0);
    let (theta, phi) = grid.angles(p);
    assert!((theta - PI / 2.0).abs() <= PI / 360.0 + 1e-12);
    assert!(phi.abs() <= PI / 360.0 + 1e-12);
    // Wraps around in phi.
    let p = grid.nearest(PI / 2.0, 2.0 * PI - 1e-4);
    let (_, phi) = grid.angles(p);
    assert_eq!(phi, 0.0);
}

#[test]
fn isotropic_element_at_origin_is_unit_theta() {
    let geom = ArrayGeometry::new(vec![[0.0, 0.0, 0.0]], freq_1ghz()).unwrap();
    let grid = AngularGrid::new(18, 36).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    for p in 0..grid.len() {
        let (et, ep) = set.at(0, p);
        assert_relative_eq!(et.re, 1.0, max_relative = 1e-15);
        assert!(et.im.abs() < 1e-15);
        assert_eq!(ep, Complex64::new(0.0, 0.0));
    }
}

#[test]
fn hertzian_dipole_z_has_sine_pattern() {
    let geom = ArrayGeometry::new(vec![[0.0, 0.0, 0.0]], freq_1ghz()).unwrap();
    let grid = AngularGrid::new(45, 90).unwrap();
    let model = ElementModel::hertzian_dipole([0.0, 0.0, 1.0]).unwrap();
    let set = synth_element_fields(&geom, &model, &grid).unwrap();
    for p in 0..grid.len() {
        let (theta, _) = grid.angles(p);
        let (et, ep) = set.at(0, p);
        assert_relative_eq!(et.norm(), theta.sin(), max_relative = 1e-12);
        assert!(ep.norm() < 1e-15);
    }
}

#[test]
fn two_element_phase_difference_is_kd_at_end_fire() {
    // Hand check: r_hat(pi/2, 0) = x_hat, so elements at x = 0 and x = d see
    // phases 0 and k*d.
    let freq = freq_1ghz();
    let d = 0.13 * lambda(freq);
    let geom = ArrayGeometry::new(vec![[0.0, 0.0, 0.0], [d, 0.0, 0.0]], freq).unwrap();
    let grid = AngularGrid::new(4, 8).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    let fields = set.eval_direction(PI / 2.0, 0.0);
    let k = geom.wavenumber();
    let phase_diff = (fields[1].0 / fields[0].0).arg();
    assert_relative_eq!(phase_diff, k * d, max_relative = 1e-12);
}

#[test]
fn uniform_linear_is_centered() {
    let geom = ArrayGeometry::uniform_linear(4, 0.1, [1.0, 0.0, 0.0], freq_1ghz()).unwrap();
    let xs: Vec<f64> = geom.positions_m().iter().map(|p| p[0]).collect();
    assert_relative_eq!(xs[0] + xs[3], 0.0, epsilon = 1e-18);
    assert_relative_eq!(xs[1] + xs[2], 0.0, epsilon = 1e-18);
    let d = 0.1 * lambda(freq_1ghz());
    assert_relative_eq!(xs[1] - xs[0], d, max_relative = 1e-12);
}

#[test]
fn save_load_round_trip_is_exact() {
    let freq = freq_1ghz();
    let geom = ArrayGeometry::uniform_linear(2, 0.17, [1.0, 0.0, 0.0], freq).unwrap();
    let grid = AngularGrid::new(9, 12).unwrap();
    let model = ElementModel::hertzian_dipole([0.0, 0.0, 1.0]).unwrap();
    let set = synth_element_fields(&geom, &model, &grid).unwrap();

    let dir = tempfile::tempdir().unwrap();
    save_field_set(&set, dir.path()).unwrap();
    let loaded = load_field_set(dir.path()).unwrap();

    assert_eq!(loaded.num_elements(), 2);
    assert_eq!(loaded.grid(), set.grid());
    assert_eq!(loaded.frequency_hz(), freq);
    assert_eq!(*loaded.origin(), FieldOrigin::Loaded);
    for i in 0..2 {
        for (a, b) in set.samples(i).iter().zip(loaded.samples(i)) {
            assert_eq!(a, b, "round trip must be bit exact");
        }
    }
}

#[test]
fn load_rejects_row_count_mismatch() {
    let geom = ArrayGeometry::new(vec![[0.0, 0.0, 0.0]], freq_1ghz()).unwrap();
    let grid = AngularGrid::new(4, 4).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_field_set(&set, dir.path()).unwrap();

    // Drop the last row.
    let path = dir.path().join("element_000.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let truncated: Vec<&str> = text.lines().collect();
    std::fs::write(&path, truncated[..truncated.len() - 1].join("\n") + "\n").unwrap();

    let err = load_field_set(dir.path()).unwrap_err();
    assert!(err.to_string().contains("row count mismatch"), "{err}");
}

#[test]
fn load_rejects_missing_element_file() {
    let geom = ArrayGeometry::uniform_linear(3, 0.2, [1.0, 0.0, 0.0], freq_1ghz()).unwrap();
    let grid = AngularGrid::new(4, 4).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_field_set(&set, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("element_002.csv")).unwrap();

    let err = load_field_set(dir.path()).unwrap_err();
    assert!(err.to_string().contains("element count mismatch"), "{err}");
}

#[test]
fn load_rejects_malformed_header() {
    let geom = ArrayGeometry::new(vec![[0.0, 0.0, 0.0]], freq_1ghz()).unwrap();
    let grid = AngularGrid::new(4, 4).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_field_set(&set, dir.path()).unwrap();

    let path = dir.path().join("element_000.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("theta_deg", "theta", 1)).unwrap();

    let err = load_field_set(dir.path()).unwrap_err();
    assert!(err.to_string().contains("malformed header"), "{err}");
    assert!(err.to_string().contains("line 1"), "{err}");
}

#[test]
fn steering_vector_of_isotropic_element_has_unit_magnitude() {
    let geom = ArrayGeometry::new(vec![[0.01, -0.02, 0.005]], freq_1ghz()).unwrap();
    let grid = AngularGrid::new(18, 36).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    for (theta, phi) in [(0.3, 0.0), (PI / 2.0, 1.0), (2.9, 5.5)] {
        let a = build_field_matrix(&set, (theta, phi), Polarization::Theta).unwrap();
        assert_relative_eq!(a.steering()[0].norm(), 1.0, max_relative = 1e-12);
    }
}

#[test]
fn gram_off_diagonal_matches_sinc_kernel() {
    // The sphere integral of exp(j k r_hat . dp) is 4 pi sinc(k |dp|).
    let freq = freq_1ghz();
    let d = 0.23 * lambda(freq);
    let geom = ArrayGeometry::new(vec![[0.0, 0.0, 0.0], [d, 0.0, 0.0]], freq).unwrap();
    let grid = AngularGrid::new(180, 360).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    let a = build_field_matrix(&set, (PI / 2.0, 0.0), Polarization::Theta).unwrap();
    let kd = geom.wavenumber() * d;
    let expected = kd.sin() / kd;
    let ratio = a.gram(0, 1) / a.gram(0, 0);
    assert!((ratio.re - expected).abs() < 1e-3, "{} vs {}", ratio.re, expected);
    assert!(ratio.im.abs() < 1e-9);
}

#[test]
fn gram_is_diagonal_at_half_wavelength_spacing() {
    let freq = freq_1ghz();
    let geom = ArrayGeometry::uniform_linear(4, 0.5, [1.0, 0.0, 0.0], freq).unwrap();
    let grid = AngularGrid::new(180, 360).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    let a = build_field_matrix(&set, (PI / 2.0, 0.0), Polarization::Theta).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                assert_relative_eq!(a.gram(i, j).re, FULL_SPHERE_SR, max_relative = 0.01);
            } else {
                assert!(a.gram(i, j).norm() < 0.01 * FULL_SPHERE_SR);
            }
        }
    }
}

#[test]
fn gram_error_shrinks_at_least_quadratically_with_grid_step() {
    let freq = freq_1ghz();
    let d = 0.17 * lambda(freq);
    let geom = ArrayGeometry::new(vec![[0.0, 0.0, 0.0], [d, 0.0, 0.0]], freq).unwrap();
    let kd = geom.wavenumber() * d;
    let exact = FULL_SPHERE_SR * kd.sin() / kd;

    let mut errs = Vec::new();
    for (l, q) in [(180, 360), (360, 720)] {
        let grid = AngularGrid::new(l, q).unwrap();
        let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
        let a = build_field_matrix(&set, (PI / 2.0, 0.0), Polarization::Theta).unwrap();
        errs.push((a.gram(0, 1).re - exact).abs());
    }
    assert!(
        errs[1] <= errs[0] / 3.5,
        "halving the step should shrink the error ~4x: {errs:?}"
    );
}

#[test]
fn quadratic_form_equals_direct_weighted_power() {
    let freq = freq_1ghz();
    let geom = ArrayGeometry::uniform_linear(3, 0.21, [1.0, 0.0, 0.0], freq).unwrap();
    let grid = AngularGrid::new(36, 72).unwrap();
    let model = ElementModel::hertzian_dipole([0.0, 0.0, 1.0]).unwrap();
    let set = synth_element_fields(&geom, &model, &grid).unwrap();
    let a = build_field_matrix(&set, (PI / 2.0, 0.0), Polarization::Theta).unwrap();

    let b = [
        Complex64::new(1.3, -0.4),
        Complex64::new(-0.2, 2.0),
        Complex64::new(0.7, 0.9),
    ];
    let via_gram = a.radiated_power(&b);

    let mut direct = 0.0;
    for (p, w) in grid.weights_sr().iter().enumerate() {
        let mut et = Complex64::new(0.0, 0.0);
        let mut ep = Complex64::new(0.0, 0.0);
        for (i, bi) in b.iter().enumerate() {
            let (t, f) = set.at(i, p);
            et += bi * t;
            ep += bi * f;
        }
        direct += w * (et.norm_sqr() + ep.norm_sqr());
    }
    assert_relative_eq!(via_gram, direct, max_relative = 1e-10);
}

#[test]
fn phi_polarization_rejected_at_pole() {
    let geom = ArrayGeometry::new(vec![[0.0, 0.0, 0.0]], freq_1ghz()).unwrap();
    let grid = AngularGrid::new(8, 8).unwrap();
    let set = synth_element_fields(&geom, &ElementModel::isotropic(), &grid).unwrap();
    assert!(build_field_matrix(&set, (0.0, 0.0), Polarization::Phi).is_err());
    assert!(build_field_matrix(&set, (0.0, 0.0), Polarization::Theta).is_ok());
}

#[test]
fn distortion_is_deterministic_and_small() {
    let freq = freq_1ghz();
    let geom = ArrayGeometry::uniform_linear(2, 0.2, [1.0, 0.0, 0.0], freq).unwrap();
    let grid = AngularGrid::new(18, 36).unwrap();
    let model = ElementModel::hertzian_dipole([0.0, 0.0, 1.0]).unwrap();
    let clean = synth_element_fields(&geom, &model, &grid).unwrap();
    let a = clean.with_distortion(0.05, 7).unwrap();
    let b = clean.with_distortion(0.05, 7).unwrap();
    for i in 0..2 {
        assert_eq!(a.samples(i), b.samples(i));
    }
    // Stays within a few times the level of the clean pattern.
    for i in 0..2 {
        for p in 0..grid.len() {
            let (ct, _) = clean.at(i, p);
            let (dt, _) = a.at(i, p);
            assert!((dt - ct).norm() <= 0.05 * 2.5 * ct.norm() + 1e-12);
        }
    }
    // Distorted synthetic sets still evaluate directions analytically and
    // match the stored grid samples.
    let p = grid.index(3, 5);
    let (theta, phi) = grid.angles(p);
    let fields = a.eval_direction(theta, phi);
    let (st, sp) = a.at(1, p);
    assert_relative_eq!(fields[1].0.re, st.re, max_relative = 1e-12);
    assert_relative_eq!(fields[1].1.im, sp.im, max_relative = 1e-12);
}
