//! Genetic algorithm for beamforming under an excitation range constraint.
//!
//! Candidate excitations are genomes of `M` chromosomes, one per element;
//! each chromosome packs a quantized amplitude code followed by a quantized
//! phase code, most significant bit first. Decoded amplitudes always land in
//! `[1, P]`, so every individual the GA ever evaluates is feasible and the
//! fitness needs no penalty term. Selection is elitist: the top `m` vectors
//! survive unchanged and children refill the population through per-chromosome
//! two-point crossover and bit mutation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::f64::consts::PI;

use crate::beamform::{
    directivity_quotient, optimal_beamformer, project_to_range, BeamLabel, BeamVector,
};
use crate::error::{Error, Result};
use crate::fieldmodel::ArrayFieldMatrix;
use crate::FULL_SPHERE_SR;

/// Amplitude/phase quantization of one chromosome.
///
/// Amplitude codes split `[1, P]` into `2^x - 1` steps of
/// `(P - 1) / (2^x - 1)`; phase codes cover `[0, 2 pi)` in steps of
/// `2 pi / 2^y` with no redundant endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationSpec {
    p: f64,
    amp_bits: u32,
    phase_bits: u32,
    amp_unit: f64,
    phase_unit: f64,
}

impl QuantizationSpec {
    pub fn new(p: f64, amp_bits: u32, phase_bits: u32) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::invalid("range constraint P must be finite and > 1"));
        }
        if amp_bits < 1 || phase_bits < 1 {
            return Err(Error::invalid("amplitude and phase need at least one bit each"));
        }
        if amp_bits > 30 || phase_bits > 30 {
            return Err(Error::invalid("more than 30 bits per part is not supported"));
        }
        let amp_levels = (1u64 << amp_bits) - 1;
        let phase_levels = 1u64 << phase_bits;
        Ok(QuantizationSpec {
            p,
            amp_bits,
            phase_bits,
            amp_unit: (p - 1.0) / amp_levels as f64,
            phase_unit: 2.0 * PI / phase_levels as f64,
        })
    }

    /// Builds the spec from an amplitude step instead of a range:
    /// `P = 1 + unit * (2^x - 1)`.
    pub fn from_amp_unit(amp_unit: f64, amp_bits: u32, phase_bits: u32) -> Result<Self> {
        if !(amp_unit > 0.0) || !amp_unit.is_finite() {
            return Err(Error::invalid("amplitude unit must be finite and positive"));
        }
        if !(1..=30).contains(&amp_bits) {
            return Err(Error::invalid("amplitude bits must lie in 1..=30"));
        }
        let p = 1.0 + amp_unit * ((1u64 << amp_bits) - 1) as f64;
        QuantizationSpec::new(p, amp_bits, phase_bits)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn amp_bits(&self) -> u32 {
        self.amp_bits
    }

    pub fn phase_bits(&self) -> u32 {
        self.phase_bits
    }

    pub fn amp_unit(&self) -> f64 {
        self.amp_unit
    }

    pub fn phase_unit(&self) -> f64 {
        self.phase_unit
    }

    /// Bits per chromosome, `x + y`.
    pub fn chromosome_bits(&self) -> usize {
        (self.amp_bits + self.phase_bits) as usize
    }

    fn max_amp_code(&self) -> u32 {
        (1u32 << self.amp_bits) - 1
    }

    fn decode_amp(&self, code: u32) -> f64 {
        // Top code is pinned to exactly P so the box constraint holds
        // bit-for-bit.
        if code == self.max_amp_code() {
            self.p
        } else {
            1.0 + code as f64 * self.amp_unit
        }
    }

    fn decode_phase(&self, code: u32) -> f64 {
        code as f64 * self.phase_unit
    }
}

/// Bit string of `M` chromosomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    bits: Vec<bool>,
}

impl Genome {
    pub fn from_bits(bits: Vec<bool>, spec: &QuantizationSpec) -> Result<Self> {
        if bits.is_empty() || !bits.len().is_multiple_of(spec.chromosome_bits()) {
            return Err(Error::invalid("genome length must be a positive multiple of x + y"));
        }
        Ok(Genome { bits })
    }

    pub fn random(num_elements: usize, spec: &QuantizationSpec, rng: &mut impl Rng) -> Self {
        let bits = (0..num_elements * spec.chromosome_bits())
            .map(|_| rng.random::<bool>())
            .collect();
        Genome { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn num_chromosomes(&self, spec: &QuantizationSpec) -> usize {
        self.bits.len() / spec.chromosome_bits()
    }

    fn codes(&self, chromosome: usize, spec: &QuantizationSpec) -> (u32, u32) {
        let start = chromosome * spec.chromosome_bits();
        let mut amp = 0u32;
        for i in 0..spec.amp_bits as usize {
            amp = (amp << 1) | self.bits[start + i] as u32;
        }
        let mut phase = 0u32;
        for i in 0..spec.phase_bits as usize {
            phase = (phase << 1) | self.bits[start + spec.amp_bits as usize + i] as u32;
        }
        (amp, phase)
    }

    fn push_codes(bits: &mut Vec<bool>, spec: &QuantizationSpec, amp: u32, phase: u32) {
        for i in (0..spec.amp_bits).rev() {
            bits.push(amp >> i & 1 == 1);
        }
        for i in (0..spec.phase_bits).rev() {
            bits.push(phase >> i & 1 == 1);
        }
    }
}

/// Decodes a genome into its excitation vector.
pub fn decode(genome: &Genome, spec: &QuantizationSpec) -> Result<BeamVector> {
    let m = genome.num_chromosomes(spec);
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let (amp_code, phase_code) = genome.codes(i, spec);
        b.push(Complex64::from_polar(
            spec.decode_amp(amp_code),
            spec.decode_phase(phase_code),
        ));
    }
    BeamVector::new(b, BeamLabel::Ga)
}

/// Quantized amplitudes of a genome. These are the exact decoded values; the
/// modulus of the complex excitation can differ by rounding in the last bit.
pub fn decoded_amplitudes(genome: &Genome, spec: &QuantizationSpec) -> Vec<f64> {
    (0..genome.num_chromosomes(spec))
        .map(|i| spec.decode_amp(genome.codes(i, spec).0))
        .collect()
}

/// Encodes a feasible excitation, rounding each amplitude and phase to the
/// nearest code with ties toward the even code.
pub fn encode(b: &BeamVector, spec: &QuantizationSpec) -> Result<Genome> {
    let slack = 1e-9 * (spec.p - 1.0);
    let mut bits = Vec::with_capacity(b.len() * spec.chromosome_bits());
    for (i, z) in b.entries().iter().enumerate() {
        let amp = z.norm();
        if !((1.0 - slack)..=(spec.p + slack)).contains(&amp) {
            return Err(Error::invalid(format!(
                "infeasible amplitude {amp} at element {i}, needs 1 <= |b| <= {}",
                spec.p
            )));
        }
        let amp_code = (((amp - 1.0) / spec.amp_unit).round_ties_even() as i64)
            .clamp(0, spec.max_amp_code() as i64) as u32;
        let phase = z.arg().rem_euclid(2.0 * PI);
        let levels = 1i64 << spec.phase_bits;
        let phase_code = ((phase / spec.phase_unit).round_ties_even() as i64).rem_euclid(levels) as u32;
        Genome::push_codes(&mut bits, spec, amp_code, phase_code);
    }
    Genome::from_bits(bits, spec)
}

/// GA fitness: the raw directivity quotient of the decoded excitation,
/// without the 4 pi directivity constant. Every genome is feasible by
/// construction so there is no penalty term.
pub fn fitness(genome: &Genome, spec: &QuantizationSpec, a: &ArrayFieldMatrix) -> Result<f64> {
    let b = decode(genome, spec)?;
    Ok(directivity_quotient(&b, a)? / a.c())
}

/// GA hyperparameters. `elites` is the candidate count kept each generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub elites: usize,
    pub mutation_prob: f64,
    pub max_iterations: usize,
    pub stagnation_window: usize,
    /// Fitness target terminating the run; defaults to the unconstrained
    /// optimum of the quotient when absent.
    pub f_max: Option<f64>,
    pub seed: u64,
    /// Seed one individual with the range-projected closed-form solution.
    pub seed_with_projection: bool,
    /// Tikhonov level used for the closed-form solve behind the projection
    /// seed. A touch of loading tames the solution's dynamic range, which
    /// survives the range projection far better on ill-conditioned Grams.
    pub projection_regularization: f64,
    /// Rotate every candidate's phase codes so the first chromosome's phase
    /// code is zero. The fitness is invariant under a global phase, so this
    /// removes a pure redundancy from the search space and lets crossover mix
    /// parents expressed in one common gauge.
    pub fix_first_phase: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 200,
            elites: 40,
            mutation_prob: 0.01,
            max_iterations: 500,
            stagnation_window: 100,
            f_max: None,
            seed: 0,
            seed_with_projection: true,
            projection_regularization: 0.0,
            fix_first_phase: false,
        }
    }
}

/// Rotates all phase codes by the negative of the first chromosome's phase
/// code (modulo the code range). The decoded excitation changes only by a
/// global phase, so the fitness is untouched.
pub fn normalize_phase_gauge(genome: &Genome, spec: &QuantizationSpec) -> Genome {
    let chromosomes = genome.num_chromosomes(spec);
    let levels = 1u32 << spec.phase_bits;
    let shift = levels - genome.codes(0, spec).1;
    let mut bits = Vec::with_capacity(genome.bits.len());
    for c in 0..chromosomes {
        let (amp, phase) = genome.codes(c, spec);
        Genome::push_codes(&mut bits, spec, amp, (phase + shift) % levels);
    }
    Genome { bits }
}

impl GaConfig {
    fn validate(&self) -> Result<()> {
        if self.elites < 2 || self.elites >= self.population {
            return Err(Error::invalid("need 2 <= elites < population"));
        }
        if !(0.0..1.0).contains(&self.mutation_prob) {
            return Err(Error::invalid("mutation probability must lie in [0, 1)"));
        }
        if self.stagnation_window == 0 {
            return Err(Error::invalid("stagnation window must be positive"));
        }
        Ok(())
    }
}

/// Indices of the top `m` individuals by fitness, ties broken by lower index.
pub fn select(fitnesses: &[f64], m: usize) -> Vec<usize> {
    assert!(m <= fitnesses.len(), "cannot select more than the population");
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| {
        fitnesses[b]
            .partial_cmp(&fitnesses[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(m);
    order
}

/// Two-point crossover applied independently to each chromosome: the half-open
/// fragment `[p, r)` of the first parent is replaced by the second parent's.
pub fn crossover(
    parent_a: &Genome,
    parent_b: &Genome,
    spec: &QuantizationSpec,
    rng: &mut impl Rng,
) -> Genome {
    assert_eq!(parent_a.bits.len(), parent_b.bits.len(), "parents must share a shape");
    let width = spec.chromosome_bits();
    let chromosomes = parent_a.bits.len() / width;
    let points: Vec<(usize, usize)> = (0..chromosomes)
        .map(|_| {
            let a = rng.random_range(0..=width);
            let b = rng.random_range(0..=width);
            (a.min(b), a.max(b))
        })
        .collect();
    crossover_at(parent_a, parent_b, spec, &points)
}

pub(crate) fn crossover_at(
    parent_a: &Genome,
    parent_b: &Genome,
    spec: &QuantizationSpec,
    points: &[(usize, usize)],
) -> Genome {
    let width = spec.chromosome_bits();
    let mut bits = parent_a.bits.clone();
    for (c, &(p, r)) in points.iter().enumerate() {
        let base = c * width;
        bits[base + p..base + r].copy_from_slice(&parent_b.bits[base + p..base + r]);
    }
    Genome { bits }
}

/// Flips each bit independently with the given probability.
pub fn mutate(genome: &Genome, probability: f64, rng: &mut impl Rng) -> Genome {
    assert!(
        (0.0..=1.0).contains(&probability),
        "mutation probability must lie in [0, 1]"
    );
    let bits = genome
        .bits
        .iter()
        .map(|&bit| {
            if probability > 0.0 && rng.random_bool(probability) {
                !bit
            } else {
                bit
            }
        })
        .collect();
    Genome { bits }
}

/// Seeds the initial population: uniform random genomes, with one individual
/// replaced by the encoded range projection of the closed-form optimum when
/// the config asks for it.
pub fn init_population(
    cfg: &GaConfig,
    spec: &QuantizationSpec,
    a: &ArrayFieldMatrix,
) -> Result<Vec<Genome>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_with(cfg, spec, a, &mut rng)
}

fn init_with(
    cfg: &GaConfig,
    spec: &QuantizationSpec,
    a: &ArrayFieldMatrix,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Genome>> {
    let m = a.num_elements();
    let mut population = Vec::with_capacity(cfg.population);
    if cfg.seed_with_projection {
        let solve = optimal_beamformer(a, cfg.projection_regularization)?;
        let projected = project_to_range(&solve.b, spec.p())?;
        population.push(encode(&projected, spec)?);
    }
    while population.len() < cfg.population {
        population.push(Genome::random(m, spec, rng));
    }
    if cfg.fix_first_phase {
        for genome in &mut population {
            *genome = normalize_phase_gauge(genome, spec);
        }
    }
    Ok(population)
}

/// Per-generation fitness statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationStats {
    pub best: f64,
    pub median: f64,
}

/// Outcome of one GA run.
#[derive(Debug, Clone)]
pub struct GaRunReport {
    pub best_genome: Genome,
    pub best_b: BeamVector,
    pub best_fitness: f64,
    /// `best_fitness * 4 pi`.
    pub directivity: f64,
    /// Evolution steps executed (the history also records generation zero).
    pub generations: usize,
    pub seed: u64,
    pub history: Vec<GenerationStats>,
    /// Smallest and largest decoded amplitude seen across every evaluation.
    pub amp_observed: (f64, f64),
    /// Quantization actually used, echoed for the report.
    pub quantization: QuantizationSpec,
}

impl Serialize for GaRunReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("GaRunReport", 10)?;
        let b: Vec<[f64; 2]> = self.best_b.entries().iter().map(|z| [z.re, z.im]).collect();
        s.serialize_field("best_b", &b)?;
        s.serialize_field("best_fitness", &self.best_fitness)?;
        s.serialize_field("directivity", &self.directivity)?;
        s.serialize_field("generations", &self.generations)?;
        s.serialize_field("seed", &self.seed)?;
        s.serialize_field("p", &self.quantization.p())?;
        s.serialize_field("amp_unit", &self.quantization.amp_unit())?;
        s.serialize_field("amp_min", &self.amp_observed.0)?;
        s.serialize_field("amp_max", &self.amp_observed.1)?;
        s.serialize_field("history", &self.history)?;
        s.end()
    }
}

struct Evaluator<'a> {
    spec: &'a QuantizationSpec,
    a: &'a ArrayFieldMatrix,
    amp_min: f64,
    amp_max: f64,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a QuantizationSpec, a: &'a ArrayFieldMatrix) -> Self {
        Evaluator {
            spec,
            a,
            amp_min: f64::INFINITY,
            amp_max: 0.0,
        }
    }

    fn eval(&mut self, genome: &Genome) -> Result<f64> {
        for amp in decoded_amplitudes(genome, self.spec) {
            self.amp_min = self.amp_min.min(amp);
            self.amp_max = self.amp_max.max(amp);
        }
        let b = decode(genome, self.spec)?;
        Ok(directivity_quotient(&b, self.a)? / self.a.c())
    }
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

const IMPROVEMENT_EPS: f64 = 1e-12;

/// Runs the GA: evaluate, keep the `m` best, refill with mutated crossover
/// children of distinct elite pairs, and stop on the iteration budget, the
/// fitness target, or a stagnant best fitness.
pub fn run_ga(cfg: &GaConfig, spec: &QuantizationSpec, a: &ArrayFieldMatrix) -> Result<GaRunReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let f_max = match cfg.f_max {
        Some(v) => v,
        None => optimal_beamformer(a, 0.0)?.lambda0,
    };

    let mut evaluator = Evaluator::new(spec, a);
    let mut population = init_with(cfg, spec, a, &mut rng)?;
    let mut fitnesses = Vec::with_capacity(cfg.population);
    for genome in &population {
        fitnesses.push(evaluator.eval(genome)?);
    }

    let mut best_idx = select(&fitnesses, 1)[0];
    let mut best_genome = population[best_idx].clone();
    let mut best_fitness = fitnesses[best_idx];
    let mut history = vec![GenerationStats {
        best: best_fitness,
        median: median(&fitnesses),
    }];

    let mut stagnant = 0usize;
    let mut generations = 0usize;
    for _ in 0..cfg.max_iterations {
        if best_fitness >= f_max || stagnant >= cfg.stagnation_window {
            break;
        }

        let elite_idx = select(&fitnesses, cfg.elites);
        let mut next: Vec<Genome> = elite_idx.iter().map(|&i| population[i].clone()).collect();
        while next.len() < cfg.population {
            let i = rng.random_range(0..cfg.elites);
            let mut j = rng.random_range(0..cfg.elites - 1);
            if j >= i {
                j += 1;
            }
            let child = crossover(&next[i], &next[j], spec, &mut rng);
            let child = mutate(&child, cfg.mutation_prob, &mut rng);
            next.push(if cfg.fix_first_phase {
                normalize_phase_gauge(&child, spec)
            } else {
                child
            });
        }
        population = next;
        fitnesses.clear();
        for genome in &population {
            fitnesses.push(evaluator.eval(genome)?);
        }
        generations += 1;

        best_idx = select(&fitnesses, 1)[0];
        if fitnesses[best_idx] > best_fitness + IMPROVEMENT_EPS {
            best_fitness = fitnesses[best_idx];
            best_genome = population[best_idx].clone();
            stagnant = 0;
        } else {
            stagnant += 1;
            if fitnesses[best_idx] > best_fitness {
                best_fitness = fitnesses[best_idx];
                best_genome = population[best_idx].clone();
            }
        }
        history.push(GenerationStats {
            best: best_fitness,
            median: median(&fitnesses),
        });
    }

    let best_b = decode(&best_genome, spec)?;
    Ok(GaRunReport {
        best_fitness,
        directivity: best_fitness * FULL_SPHERE_SR,
        best_genome,
        best_b,
        generations,
        seed: cfg.seed,
        history,
        amp_observed: (evaluator.amp_min, evaluator.amp_max),
        quantization: *spec,
    })
}

/// Exhaustive search over every genome, for cross-checking the GA on tiny
/// bit widths. Rejects search spaces above 2^20 genomes.
pub fn exhaustive_optimum(
    spec: &QuantizationSpec,
    a: &ArrayFieldMatrix,
) -> Result<(Genome, f64)> {
    let total_bits = a.num_elements() * spec.chromosome_bits();
    if total_bits > 20 {
        return Err(Error::invalid(format!(
            "exhaustive search over {total_bits} bits is not tractable (cap 20)"
        )));
    }
    let mut best: Option<(Genome, f64)> = None;
    for word in 0u64..(1u64 << total_bits) {
        let bits: Vec<bool> = (0..total_bits)
            .rev()
            .map(|i| word >> i & 1 == 1)
            .collect();
        let genome = Genome { bits };
        let f = fitness(&genome, spec, a)?;
        let better = match &best {
            None => true,
            Some((_, fb)) => f > *fb,
        };
        if better {
            best = Some((genome, f));
        }
    }
    Ok(best.expect("at least one genome"))
}

#[cfg(test)]
mod tests;
