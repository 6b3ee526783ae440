use super::*;
use crate::fieldmodel::{
    build_field_matrix, synth_element_fields, AngularGrid, ArrayGeometry, ElementModel,
    Polarization,
};
use approx::assert_relative_eq;

const FREQ: f64 = 1.0e9;
const END_FIRE: (f64, f64) = (PI / 2.0, 0.0);

fn dipole_matrix(m: usize, spacing_wl: f64, grid: (usize, usize)) -> ArrayFieldMatrix {
    let geom = ArrayGeometry::uniform_linear(m, spacing_wl, [1.0, 0.0, 0.0], FREQ).unwrap();
    let g = AngularGrid::new(grid.0, grid.1).unwrap();
    let model = ElementModel::hertzian_dipole([0.0, 0.0, 1.0]).unwrap();
    let set = synth_element_fields(&geom, &model, &g).unwrap();
    build_field_matrix(&set, END_FIRE, Polarization::Theta).unwrap()
}

#[test]
fn seven_bit_amplitude_units_reproduce_standard_ranges() {
    for (unit, p) in [(0.01, 2.27), (0.02, 3.54), (0.03, 4.81)] {
        let spec = QuantizationSpec::from_amp_unit(unit, 7, 8).unwrap();
        assert_relative_eq!(spec.p(), p, max_relative = 1e-12);
        let spec = QuantizationSpec::new(p, 7, 8).unwrap();
        assert_relative_eq!(spec.amp_unit(), unit, max_relative = 1e-12);
    }
}

#[test]
fn one_bit_amplitude_decodes_to_the_interval_ends() {
    let spec = QuantizationSpec::new(2.0, 1, 2).unwrap();
    let zero = Genome::from_bits(vec![false, false, false], &spec).unwrap();
    let one = Genome::from_bits(vec![true, false, false], &spec).unwrap();
    assert_eq!(decode(&zero, &spec).unwrap().entries()[0].norm(), 1.0);
    assert_eq!(decode(&one, &spec).unwrap().entries()[0].norm(), 2.0);
}

#[test]
fn quantization_rejects_bad_ranges() {
    assert!(QuantizationSpec::new(1.0, 7, 8).is_err());
    assert!(QuantizationSpec::new(0.9, 7, 8).is_err());
    assert!(QuantizationSpec::new(2.0, 0, 8).is_err());
}

#[test]
fn all_zero_genome_decodes_to_unit_excitations() {
    let spec = QuantizationSpec::new(2.27, 7, 8).unwrap();
    let genome = Genome::from_bits(vec![false; 3 * spec.chromosome_bits()], &spec).unwrap();
    let b = decode(&genome, &spec).unwrap();
    for z in b.entries() {
        assert_eq!(*z, Complex64::new(1.0, 0.0));
    }
}

#[test]
fn worked_decode_example() {
    // x = 2, y = 2, P = 4: bits 11|01 give amplitude 1 + 3 * 1 = 4 and phase
    // one quarter turn.
    let spec = QuantizationSpec::new(4.0, 2, 2).unwrap();
    let genome = Genome::from_bits(vec![true, true, false, true], &spec).unwrap();
    let b = decode(&genome, &spec).unwrap();
    assert_relative_eq!(b.entries()[0].norm(), 4.0, max_relative = 1e-15);
    assert_relative_eq!(b.entries()[0].arg(), PI / 2.0, max_relative = 1e-15);
}

#[test]
fn decoded_amplitudes_always_satisfy_the_box_constraint() {
    let spec = QuantizationSpec::new(2.27, 7, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let genome = Genome::random(4, &spec, &mut rng);
        for amp in decoded_amplitudes(&genome, &spec) {
            assert!((1.0..=spec.p()).contains(&amp), "amplitude {amp} escaped the box");
        }
        // The complex representation agrees up to last-bit rounding.
        let b = decode(&genome, &spec).unwrap();
        for z in b.entries() {
            assert!(z.norm() >= 1.0 - 1e-12 && z.norm() <= spec.p() * (1.0 + 1e-15));
        }
    }
}

#[test]
fn encode_round_trip_stays_within_half_a_unit() {
    let spec = QuantizationSpec::new(3.54, 7, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..300 {
        let b = BeamVector::new(
            (0..3)
                .map(|_| {
                    Complex64::from_polar(
                        rng.random_range(1.0..spec.p()),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect(),
            BeamLabel::Custom,
        )
        .unwrap();
        let round = decode(&encode(&b, &spec).unwrap(), &spec).unwrap();
        for (orig, got) in b.entries().iter().zip(round.entries()) {
            assert!((orig.norm() - got.norm()).abs() <= 0.5 * spec.amp_unit() + 1e-12);
            let dphi = (orig.arg() - got.arg()).rem_euclid(2.0 * PI);
            let dphi = dphi.min(2.0 * PI - dphi);
            assert!(dphi <= 0.5 * spec.phase_unit() + 1e-12);
        }
    }
}

#[test]
fn encode_rejects_infeasible_amplitudes() {
    let spec = QuantizationSpec::new(2.0, 4, 4).unwrap();
    let b = BeamVector::new(vec![Complex64::new(2.5, 0.0)], BeamLabel::Custom).unwrap();
    let err = encode(&b, &spec).unwrap_err();
    assert!(err.to_string().contains("infeasible amplitude"), "{err}");
    let b = BeamVector::new(vec![Complex64::new(0.5, 0.0)], BeamLabel::Custom).unwrap();
    assert!(encode(&b, &spec).is_err());
}

#[test]
fn encode_breaks_ties_toward_even_codes() {
    // unit = 0.5 with x = 2, P = 2.5: amplitudes sitting exactly between two
    // codes round to the even one.
    let spec = QuantizationSpec::new(2.5, 2, 2).unwrap();
    assert_eq!(spec.amp_unit(), 0.5);
    for (amp, expected_code) in [(1.25, 0u32), (1.75, 2u32)] {
        let b = BeamVector::new(vec![Complex64::new(amp, 0.0)], BeamLabel::Custom).unwrap();
        let genome = encode(&b, &spec).unwrap();
        let decoded = decode(&genome, &spec).unwrap().entries()[0].norm();
        assert_relative_eq!(
            decoded,
            spec.decode_amp(expected_code),
            max_relative = 1e-15
        );
    }
}

#[test]
fn fitness_is_pure_and_matches_the_quotient() {
    let spec = QuantizationSpec::new(2.27, 4, 4).unwrap();
    let a = dipole_matrix(3, 0.15, (45, 90));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let genome = Genome::random(3, &spec, &mut rng);
    let f1 = fitness(&genome, &spec, &a).unwrap();
    let f2 = fitness(&genome, &spec, &a).unwrap();
    assert_eq!(f1, f2);
    let b = decode(&genome, &spec).unwrap();
    let quotient = directivity_quotient(&b, &a).unwrap();
    assert_relative_eq!(f1, quotient / a.c(), max_relative = 1e-14);
}

#[test]
fn fitness_is_invariant_to_a_constant_phase_code_shift() {
    let spec = QuantizationSpec::new(2.27, 3, 4).unwrap();
    let a = dipole_matrix(3, 0.15, (45, 90));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let genome = Genome::random(3, &spec, &mut rng);
    let f = fitness(&genome, &spec, &a).unwrap();

    // Add the same constant to every phase code modulo 2^y.
    let shift = 5u32;
    let mut bits = Vec::new();
    for c in 0..3 {
        let (amp, phase) = genome.codes(c, &spec);
        let shifted = (phase + shift) % (1 << spec.phase_bits());
        Genome::push_codes(&mut bits, &spec, amp, shifted);
    }
    let shifted = Genome::from_bits(bits, &spec).unwrap();
    let f_shift = fitness(&shifted, &spec, &a).unwrap();
    assert_relative_eq!(f, f_shift, max_relative = 1e-12);
}

#[test]
fn projected_seed_never_beats_the_unconstrained_bound() {
    let spec = QuantizationSpec::new(2.27, 7, 8).unwrap();
    let a = dipole_matrix(4, 0.1, (90, 180));
    let solve = optimal_beamformer(&a, 0.0).unwrap();
    let projected = project_to_range(&solve.b, spec.p()).unwrap();
    let genome = encode(&projected, &spec).unwrap();
    let f = fitness(&genome, &spec, &a).unwrap();
    assert!(f <= solve.lambda0 * (1.0 + 1e-9));
}

#[test]
fn select_keeps_the_best_and_breaks_ties_by_index() {
    let fitnesses = [0.3, 0.9, 0.1, 0.9, 0.5];
    assert_eq!(select(&fitnesses, 4), vec![1, 3, 4, 0]);
    // m = I - 1 drops exactly the single worst.
    assert!(!select(&fitnesses, 4).contains(&2));
    // All equal: first m by index.
    let equal = [1.0; 5];
    assert_eq!(select(&equal, 3), vec![0, 1, 2]);
    // Elite minimum dominates non-elite maximum.
    let elites = select(&fitnesses, 2);
    let worst_elite = elites.iter().map(|&i| fitnesses[i]).fold(f64::INFINITY, f64::min);
    let best_rest = fitnesses
        .iter()
        .enumerate()
        .filter(|(i, _)| !elites.contains(i))
        .map(|(_, &f)| f)
        .fold(0.0, f64::max);
    assert!(worst_elite >= best_rest);
}

#[test]
fn crossover_of_identical_parents_is_identity() {
    let spec = QuantizationSpec::new(2.27, 5, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let parent = Genome::random(3, &spec, &mut rng);
    let child = crossover(&parent, &parent, &spec, &mut rng);
    assert_eq!(child, parent);
}

#[test]
fn crossover_with_equal_points_copies_the_first_parent() {
    let spec = QuantizationSpec::new(2.27, 5, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = Genome::random(2, &spec, &mut rng);
    let b = Genome::random(2, &spec, &mut rng);
    let child = crossover_at(&a, &b, &spec, &[(4, 4), (7, 7)]);
    assert_eq!(child, a);
    // Full-width fragment copies the second parent.
    let width = spec.chromosome_bits();
    let child = crossover_at(&a, &b, &spec, &[(0, width), (0, width)]);
    assert_eq!(child, b);
}

#[test]
fn every_child_bit_comes_from_a_parent() {
    let spec = QuantizationSpec::new(2.27, 5, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let a = Genome::random(3, &spec, &mut rng);
        let b = Genome::random(3, &spec, &mut rng);
        let child = crossover(&a, &b, &spec, &mut rng);
        for (i, &bit) in child.bits().iter().enumerate() {
            assert!(bit == a.bits()[i] || bit == b.bits()[i], "orphan bit at {i}");
        }
    }
}

#[test]
fn mutation_probability_zero_is_identity_and_one_flips_everything() {
    let spec = QuantizationSpec::new(2.27, 5, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let genome = Genome::random(4, &spec, &mut rng);
    assert_eq!(mutate(&genome, 0.0, &mut rng), genome);
    let flipped = mutate(&genome, 1.0, &mut rng);
    for (a, b) in genome.bits().iter().zip(flipped.bits()) {
        assert_eq!(*a, !*b);
    }
}

#[test]
fn empirical_flip_rate_matches_the_probability() {
    let spec = QuantizationSpec::new(2.0, 10, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let genome = Genome::from_bits(vec![false; 1_000_000], &spec).unwrap();
    let mutated = mutate(&genome, 0.01, &mut rng);
    let flips = mutated.bits().iter().filter(|&&b| b).count();
    let rate = flips as f64 / 1e6;
    assert!((0.009..=0.011).contains(&rate), "flip rate {rate}");
}

#[test]
fn init_population_is_deterministic_and_feasible() {
    let spec = QuantizationSpec::new(2.27, 7, 8).unwrap();
    let a = dipole_matrix(3, 0.12, (45, 90));
    let cfg = GaConfig {
        population: 20,
        elites: 5,
        seed: 42,
        ..GaConfig::default()
    };
    let p1 = init_population(&cfg, &spec, &a).unwrap();
    let p2 = init_population(&cfg, &spec, &a).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(p1.len(), 20);
    for genome in &p1 {
        let b = decode(genome, &spec).unwrap();
        for z in b.entries() {
            assert!((1.0..=spec.p()).contains(&z.norm()));
        }
    }
    // First individual is the encoded projection of the closed-form optimum.
    let solve = optimal_beamformer(&a, 0.0).unwrap();
    let projected = project_to_range(&solve.b, spec.p()).unwrap();
    assert_eq!(p1[0], encode(&projected, &spec).unwrap());
}

#[test]
fn ga_history_is_nondecreasing_and_bounded_by_lambda0() {
    let spec = QuantizationSpec::new(2.27, 4, 5).unwrap();
    let a = dipole_matrix(3, 0.1, (45, 90));
    let cfg = GaConfig {
        population: 40,
        elites: 8,
        max_iterations: 60,
        seed: 3,
        ..GaConfig::default()
    };
    let report = run_ga(&cfg, &spec, &a).unwrap();
    let lambda0 = optimal_beamformer(&a, 0.0).unwrap().lambda0;
    for pair in report.history.windows(2) {
        assert!(pair[1].best >= pair[0].best - 1e-15);
    }
    assert!(report.best_fitness <= lambda0 * (1.0 + 1e-9));
    assert!(report.amp_observed.0 >= 1.0);
    assert!(report.amp_observed.1 <= spec.p());

    // Projection seeding means the run can never fall below the projected
    // closed-form individual.
    let projected = project_to_range(&optimal_beamformer(&a, 0.0).unwrap().b, spec.p()).unwrap();
    let seed_fitness = fitness(&encode(&projected, &spec).unwrap(), &spec, &a).unwrap();
    assert!(report.best_fitness >= seed_fitness - 1e-15);
}

#[test]
fn ga_runs_are_reproducible() {
    let spec = QuantizationSpec::new(2.27, 4, 4).unwrap();
    let a = dipole_matrix(2, 0.15, (36, 72));
    let cfg = GaConfig {
        population: 24,
        elites: 6,
        max_iterations: 30,
        seed: 77,
        ..GaConfig::default()
    };
    let r1 = run_ga(&cfg, &spec, &a).unwrap();
    let r2 = run_ga(&cfg, &spec, &a).unwrap();
    assert_eq!(r1.best_genome, r2.best_genome);
    assert_eq!(r1.best_fitness, r2.best_fitness);
    assert_eq!(r1.history, r2.history);
    assert_eq!(
        serde_json::to_string(&r1).unwrap(),
        serde_json::to_string(&r2).unwrap()
    );
}

#[test]
fn ga_finds_the_exhaustive_optimum_on_a_tiny_instance() {
    let spec = QuantizationSpec::new(2.27, 2, 3).unwrap();
    let a = dipole_matrix(2, 0.1, (45, 90));
    let (_, f_best) = exhaustive_optimum(&spec, &a).unwrap();
    let cfg = GaConfig {
        population: 50,
        elites: 10,
        max_iterations: 200,
        seed: 1,
        ..GaConfig::default()
    };
    let report = run_ga(&cfg, &spec, &a).unwrap();
    assert!(report.best_fitness >= f_best * (1.0 - 1e-12));
}

#[test]
fn exhaustive_search_rejects_large_spaces() {
    let spec = QuantizationSpec::new(2.27, 7, 8).unwrap();
    let a = dipole_matrix(3, 0.1, (18, 36));
    assert!(exhaustive_optimum(&spec, &a).is_err());
}
