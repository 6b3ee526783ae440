//! Command-line driver: synthesize fields, solve beamformers, run the GA,
//! evaluate cuts, and emit comparison reports.
//!
//! Every command is deterministic for a given config and seed, down to the
//! bytes of stdout and of every file written. Exit codes: 0 on success, 2 for
//! configuration problems, 3 for numerical failures.

use clap::{Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use superdir_core::analysis::{compare_methods, pattern_cut, CutPlane};
use superdir_core::beamform::{
    directivity_quotient, mrt_beamformer, optimal_beamformer, traditional_beamformer, BeamVector,
    SolveReport,
};
use superdir_core::fieldmodel::{build_field_matrix, save_field_set};
use superdir_core::ga::{exhaustive_optimum, run_ga};
use superdir_core::{Error, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "superdir",
    version,
    about = "Superdirective beamforming from sampled far fields"
)]
struct Cli {
    /// Scenario config (JSON)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's `output_dir`
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the scenario seed
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Optimal,
    Mrt,
    Traditional,
    Ga,
}

impl Method {
    fn as_str(self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Mrt => "mrt",
            Method::Traditional => "traditional",
            Method::Ga => "ga",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Plane {
    E,
    H,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize element far fields and write a field-set directory
    Synth,
    /// Solve one beamformer and print its report as JSON
    Solve {
        #[arg(long, value_enum)]
        method: Method,
        /// Tikhonov knob added to the Gram diagonal (relative to trace/M)
        #[arg(long)]
        regularization: Option<f64>,
    },
    /// Run the range-constrained genetic algorithm and print its report
    Ga {
        /// Population size I
        #[arg(long)]
        pop: Option<usize>,
        /// Elite candidate count m
        #[arg(long)]
        elites: Option<usize>,
        /// Per-bit mutation probability
        #[arg(long = "mut")]
        mutation: Option<f64>,
        /// Iteration budget
        #[arg(long)]
        iters: Option<usize>,
        /// Amplitude bits per chromosome
        #[arg(long = "amp-bits")]
        amp_bits: Option<u32>,
        /// Phase bits per chromosome
        #[arg(long = "phase-bits")]
        phase_bits: Option<u32>,
        /// Range constraint P (defaults to the first configured one)
        #[arg(long = "range")]
        range: Option<f64>,
        /// Do not seed the population with the projected closed-form solution
        #[arg(long = "no-seed-projection")]
        no_seed_projection: bool,
        /// Cross-check against exhaustive enumeration (tiny bit widths only)
        #[arg(long = "exhaustive-check")]
        exhaustive_check: bool,
    },
    /// Evaluate a principal-plane cut for one method and write its CSV
    Pattern {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, value_enum, default_value = "e")]
        plane: Plane,
        /// Cut step in degrees; overrides the config
        #[arg(long)]
        step: Option<f64>,
        /// Range constraint for the GA method
        #[arg(long = "range")]
        range: Option<f64>,
    },
    /// Compare all methods, write report JSON and cut CSVs
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("missing --config <PATH>".into()))?;
    let mut config = ScenarioConfig::from_file(config_path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.display().to_string());
    }

    match cli.command {
        Command::Synth => cmd_synth(&config),
        Command::Solve {
            method,
            regularization,
        } => cmd_solve(&config, method, regularization),
        Command::Ga {
            pop,
            elites,
            mutation,
            iters,
            amp_bits,
            phase_bits,
            range,
            no_seed_projection,
            exhaustive_check,
        } => {
            let mut cfg = config.clone();
            if let Some(v) = pop {
                cfg.ga.population = v;
            }
            if let Some(v) = elites {
                cfg.ga.elites = v;
            }
            if let Some(v) = mutation {
                cfg.ga.mutation_prob = v;
            }
            if let Some(v) = iters {
                cfg.ga.max_iterations = v;
            }
            if let Some(v) = amp_bits {
                cfg.ga.amp_bits = v;
            }
            if let Some(v) = phase_bits {
                cfg.ga.phase_bits = v;
            }
            if no_seed_projection {
                cfg.ga.seed_with_projection = false;
            }
            cfg.validate()?;
            cmd_ga(&cfg, range, exhaustive_check)
        }
        Command::Pattern {
            method,
            plane,
            step,
            range,
        } => cmd_pattern(&config, method, plane, step, range),
        Command::Report => cmd_report(&config),
    }
}

fn out_dir(config: &ScenarioConfig) -> Result<PathBuf, Error> {
    let dir = config.output_dir.as_ref().ok_or_else(|| {
        Error::InvalidArgument("output directory required: pass --out or set output_dir".into())
    })?;
    let path = PathBuf::from(dir);
    fs::create_dir_all(&path)?;
    Ok(path)
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text)?;
    Ok(())
}

fn json_line(value: &impl serde::Serialize) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn cmd_synth(config: &ScenarioConfig) -> Result<(), Error> {
    let dir = out_dir(config)?.join("fieldset");
    let set = config.build_set()?;
    save_field_set(&set, &dir)?;
    println!("{}", dir.join("manifest.json").display());
    Ok(())
}

fn solve_for(
    config: &ScenarioConfig,
    method: Method,
    regularization: f64,
) -> Result<(SolveReport, BeamVector), Error> {
    let set = config.build_set()?;
    let direction = config.direction_rad();
    let a = build_field_matrix(&set, direction, config.polarization)?;
    let optimal = optimal_beamformer(&a, regularization)?;
    let report = match method {
        Method::Optimal => optimal,
        Method::Mrt => {
            let b = mrt_beamformer(&a)?;
            let directivity = directivity_quotient(&b, &a)?;
            SolveReport {
                lambda0: directivity / a.c(),
                directivity,
                condition_estimate: optimal.condition_estimate,
                warning: None,
                b,
            }
        }
        Method::Traditional => {
            let geometry = config.geometry()?;
            let (b, directivity) = traditional_beamformer(
                &geometry,
                &config.element,
                set.grid(),
                direction,
                &a,
                regularization,
            )?;
            SolveReport {
                lambda0: directivity / a.c(),
                directivity,
                condition_estimate: optimal.condition_estimate,
                warning: None,
                b,
            }
        }
        Method::Ga => {
            return Err(Error::InvalidArgument(
                "use the `ga` subcommand for the genetic algorithm".into(),
            ))
        }
    };
    let b = report.b.clone();
    Ok((report, b))
}

fn cmd_solve(
    config: &ScenarioConfig,
    method: Method,
    regularization: Option<f64>,
) -> Result<(), Error> {
    let reg = regularization.unwrap_or(config.regularization);
    let (report, _) = solve_for(config, method, reg)?;
    let json = json_line(&report)?;
    print!("{json}");
    if config.output_dir.is_some() {
        let dir = out_dir(config)?;
        write_text(&dir.join(format!("solve_{}.json", method.as_str())), &json)?;
    }
    Ok(())
}

fn cmd_ga(config: &ScenarioConfig, range: Option<f64>, exhaustive_check: bool) -> Result<(), Error> {
    let p = range.unwrap_or(config.range_constraints[0]);
    if p.is_nan() || p <= 1.0 {
        return Err(Error::InvalidArgument("range constraint P must be > 1".into()));
    }
    let spec = config.quantization(p)?;
    let set = config.build_set()?;
    let a = build_field_matrix(&set, config.direction_rad(), config.polarization)?;
    let report = run_ga(&config.ga_config(), &spec, &a)?;

    let mut value = serde_json::to_value(&report)?;
    if exhaustive_check {
        let (_, best) = exhaustive_optimum(&spec, &a)?;
        let obj = value.as_object_mut().expect("report serializes to an object");
        obj.insert("exhaustive_fitness".into(), serde_json::json!(best));
        obj.insert(
            "matches_exhaustive".into(),
            serde_json::json!(report.best_fitness >= best * (1.0 - 1e-9)),
        );
    }
    let mut json = serde_json::to_string_pretty(&value)?;
    json.push('\n');
    print!("{json}");
    if config.output_dir.is_some() {
        let dir = out_dir(config)?;
        write_text(&dir.join("ga_report.json"), &json)?;
    }
    Ok(())
}

fn cmd_pattern(
    config: &ScenarioConfig,
    method: Method,
    plane: Plane,
    step: Option<f64>,
    range: Option<f64>,
) -> Result<(), Error> {
    let set = config.build_set()?;
    let direction = config.direction_rad();
    let a = build_field_matrix(&set, direction, config.polarization)?;
    let b = match method {
        Method::Ga => {
            let p = range.unwrap_or(config.range_constraints[0]);
            let spec = config.quantization(p)?;
            run_ga(&config.ga_config(), &spec, &a)?.best_b
        }
        _ => solve_for(config, method, config.regularization)?.1,
    };
    let step = step.unwrap_or(config.cut_step_deg);
    let plane = match plane {
        Plane::E => CutPlane::EPlane,
        Plane::H => CutPlane::HPlane,
    };
    let cut = pattern_cut(&b, &set, plane, step)?;
    let dir = out_dir(config)?;
    let path = dir.join(format!("cut_{}.csv", method.as_str()));
    let mut buf = Vec::new();
    cut.write_csv(&mut buf)?;
    fs::write(&path, buf)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_report(config: &ScenarioConfig) -> Result<(), Error> {
    let dir = out_dir(config)?;
    let report = compare_methods(config)?;
    let json = json_line(&report.methods)?;
    write_text(&dir.join("report.json"), &json)?;
    for named in &report.cuts {
        let mut buf = Vec::new();
        named.cut.write_csv(&mut buf)?;
        fs::write(dir.join(format!("cut_{}.csv", named.name)), buf)?;
    }
    let summary = serde_json::json!({
        "report_path": dir.join("report.json").display().to_string(),
        "cut_files": report.cuts.len(),
        "methods": report.methods,
    });
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    print!("{text}");
    Ok(())
}
