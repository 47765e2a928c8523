use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dnls_core::multipulse::measure_spec;
use dnls_core::output::{read_json, write_json};
use dnls_core::solver::single_pulse;
use dnls_core::study::{d_grid, Configuration};
use dnls_core::{
    build_multipulse, compute_spectrum, emit_outputs, run_decay_study, run_error_sweep, Axis, DnlsError, Emit,
    EigenClass, LatticeField, PhasePattern, PredictionRoute, Problem, PulseSpec, StudySettings, TheoryPrediction,
};
use serde_json::Value;

/// Multi-pulse standing waves of the discrete NLS lattice.
#[derive(Debug, Parser)]
#[command(name = "dnls", version)]
struct Cli {
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continue the single on-site pulse from d = 0.
    Solve(SolveArgs),
    /// Continue a multi-pulse such as "+-+:8,8" from d = 0.
    Build(BuildArgs),
    /// Stability spectrum of a saved solution.
    Spectrum(SpectrumArgs),
    /// Predicted interaction eigenvalues.
    Predict(PredictArgs),
    /// Decay and error studies.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Debug, Subcommand)]
enum StudyCommand {
    /// Fit log|λ| against the half-distance over equally spaced pulses.
    Decay(DecayArgs),
    /// Relative error of the predictions across a grid in d.
    ErrorSweep(SweepArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write the solution JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write CSV, JSON and SVG artefacts into this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    d: f64,
    #[arg(long, default_value_t = 30)]
    half_width: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Phase pattern and distances, e.g. "+-+:8,8".
    #[arg(long)]
    pattern: PulseSpec,
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    d: f64,
    /// Defaults to twice the configuration extent plus 30.
    #[arg(long)]
    half_width: Option<usize>,
    /// Also classify the spectrum of the result.
    #[arg(long)]
    spectrum: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Solution JSON written by `solve` or `build`.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Number of pulses; measured from the field when omitted.
    #[arg(long)]
    pulses: Option<usize>,
    /// Write the spectrum JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    pattern: PulseSpec,
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    d: f64,
    #[arg(long, default_value = "matrix")]
    route: PredictionRoute,
    /// Lattice for the single pulse; defaults to the study rule.
    #[arg(long)]
    half_width: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecayArgs {
    /// Phase pattern, e.g. "++-".
    #[arg(long)]
    pattern: PhasePattern,
    #[arg(long, default_value_t = 2.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Even pulse distances.
    #[arg(long, value_delimiter = ',', default_value = "8,10,12,14")]
    n_list: Vec<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    pattern: PulseSpec,
    #[arg(long, default_value_t = 2.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.05)]
    d_min: f64,
    #[arg(long, default_value_t = 1.0)]
    d_max: f64,
    #[arg(long, default_value_t = 0.05)]
    d_step: f64,
    #[arg(long, default_value = "matrix")]
    route: PredictionRoute,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Appends `--key value` for every config entry whose flag is absent.
fn inject_config(mut args: Vec<String>) -> anyhow::Result<Vec<String>> {
    let path = args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| DnlsError::Io {
        path: path.clone().into(),
        source: e,
    })?;
    let config: serde_json::Map<String, Value> = serde_json::from_str(&text).map_err(|e| DnlsError::Json {
        path: path.clone().into(),
        source: e,
    })?;
    for (key, value) in config {
        let flag = format!("--{}", key.replace('_', "-"));
        let given = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        match value {
            Value::Bool(true) => args.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => args.push(format!("{flag}={s}")),
            Value::Number(n) => args.push(format!("{flag}={n}")),
            Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                args.push(format!("{flag}={}", joined.join(",")));
            }
            Value::Object(_) => bail!("config key {key:?} must not be an object"),
        }
    }
    Ok(args)
}

fn emit(item: &impl Emit, dir: &Path) -> anyhow::Result<()> {
    for path in emit_outputs(item, dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn save_json<T: serde::Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| DnlsError::Io {
            path: parent.into(),
            source: e,
        })?;
    }
    write_json(path, value)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn summarise_field(q: &LatticeField) {
    let p = q.problem();
    println!(
        "omega {} d {} half-width {} sup-norm {:.12}",
        p.omega,
        p.d,
        p.half_width,
        q.sup_norm()
    );
}

fn summarise_spectrum(c: &dnls_core::Spectrum) {
    println!(
        "zero modes {}, real pairs {}, imaginary pairs {}, band {}, other {}",
        c.count(EigenClass::ZeroMode),
        c.pairs_on(Axis::Real),
        c.pairs_on(Axis::Imaginary),
        c.count(EigenClass::Band),
        c.count(EigenClass::Other)
    );
    for (j, p) in c.interaction_pairs().iter().enumerate() {
        println!("pair {j}: {} |λ| = {:.12e}", p.axis, p.magnitude);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = StudySettings::default();
    let s = &settings.continuation;
    match cli.command {
        Command::Solve(a) => {
            let p = Problem::new(a.omega, a.d, a.half_width)?;
            let q = single_pulse(&p, s).context("single pulse continuation")?;
            summarise_field(&q);
            if let Some(out) = &a.output.out {
                save_json(&q, out)?;
            }
            if let Some(dir) = &a.output.out_dir {
                emit(&q, dir)?;
            }
        }
        Command::Build(a) => {
            let q = build_multipulse(&a.pattern, a.omega, a.d, a.half_width, s)
                .with_context(|| format!("building {}", a.pattern))?;
            summarise_field(&q);
            if let Some(out) = &a.output.out {
                save_json(&q, out)?;
            }
            if a.spectrum {
                let spectrum = compute_spectrum(&q, a.pattern.pulses(), &settings.tolerances)?;
                summarise_spectrum(&spectrum);
                if let Some(dir) = &a.output.out_dir {
                    emit(&Configuration { field: q, spectrum }, dir)?;
                }
            } else if let Some(dir) = &a.output.out_dir {
                emit(&q, dir)?;
            }
        }
        Command::Spectrum(a) => {
            let q: LatticeField = read_json(&a.input)?;
            let m = match a.pulses {
                Some(m) => m,
                None => measure_spec(&q)?.pulses(),
            };
            let spectrum = compute_spectrum(&q, m, &settings.tolerances)?;
            summarise_spectrum(&spectrum);
            if let Some(out) = &a.out {
                save_json(&spectrum, out)?;
            }
            if let Some(dir) = &a.out_dir {
                emit(&spectrum, dir)?;
            }
        }
        Command::Predict(a) => {
            let l = a
                .half_width
                .unwrap_or_else(|| dnls_core::study::harness_half_width(&a.pattern));
            let p = Problem::new(a.omega, a.d, l)?;
            let pred = TheoryPrediction::compute(&a.pattern, &p, a.route, s)?;
            println!("r {:.12} M {:.12}", pred.r, pred.melnikov);
            for (j, pair) in pred.lambda_pred.iter().enumerate() {
                println!("pair {j}: mu {:.12e} {} |λ| = {:.12e}", pair.mu, pair.axis, pair.magnitude);
            }
            if let Some(dir) = &a.out_dir {
                emit(&pred, dir)?;
            }
        }
        Command::Study(StudyCommand::Decay(a)) => {
            let study = run_decay_study(a.omega, a.d, &a.pattern, &a.n_list, &settings)?;
            println!("target slope {:.12}", study.target_slope);
            for f in &study.fits {
                println!(
                    "pair {} ({}): slope {:.12} rel err {:.3e}",
                    f.pair, f.axis, f.slope, f.rel_slope_error
                );
            }
            if let Some(dir) = &a.out_dir {
                emit(&study, dir)?;
            }
        }
        Command::Study(StudyCommand::ErrorSweep(a)) => {
            let grid = d_grid(a.d_min, a.d_max, a.d_step)?;
            let sweep = run_error_sweep(a.omega, &a.pattern, &grid, a.route, &settings)?;
            for row in &sweep.rows {
                match (&row.error, row.max_rel_error()) {
                    (Some(e), _) => println!("d {}: {}", row.d, e.tag),
                    (None, Some(e)) => println!("d {}: max rel err {e:.3e}", row.d),
                    (None, None) => println!("d {}: no pairs", row.d),
                }
            }
            if let Some((d, j, e)) = sweep.min_rel_error() {
                println!("min rel err {e:.3e} at d {d} (pair {j})");
            }
            if let Some(dir) = &a.out_dir {
                emit(&sweep, dir)?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let Some(err) = e.downcast_ref::<DnlsError>() else { return 1 };
    match err {
        DnlsError::NoConvergence { .. }
        | DnlsError::StepFloorReached { .. }
        | DnlsError::SingularJacobian { .. }
        | DnlsError::StructureMismatch(_)
        | DnlsError::NoQrConvergence { .. } => 2,
        DnlsError::ClassificationAmbiguous(_) | DnlsError::AmbiguousStructure(_) => 3,
        DnlsError::Io { .. } | DnlsError::Json { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let args = match inject_config(std::env::args().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
