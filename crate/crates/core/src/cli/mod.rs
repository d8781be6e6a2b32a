//! Command-line front end. Every subcommand reads the same configuration keys;
//! output is assembled in memory and written once, so identical configurations
//! produce identical bytes.

pub mod config;
pub mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::evolution::{evolve_with, strong_stability_report, time_grid, EnergyTrace};
use crate::fit::line_fit;
use crate::generator::{CoupledGenerator, Coupling, StateVector};
use crate::resolvent::{mode_grid, scan_with_tolerance, ResolventScan};
use crate::stability::{
    fit_polynomial_decay, pre_asymptotic_limit, spectrum, validate_decay_window, wave_branch,
    DecayFit, DecayModel,
};
use config::{Block, ConfigError, Format, InitialKind, LambdaGrid, RunConfig, KEYS_HELP};

pub const THREADS_ENV: &str = "THERMOSPEC_THREADS";

#[derive(Parser, Debug)]
#[command(name = "thermospec", version, about = "Spectral analysis of a weakly coupled thermoelastic system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML file with configuration keys
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues of the truncated generator (JSON)
    #[command(after_help = KEYS_HELP)]
    Spectrum(Common),
    /// Energy trace t, energy, state_norm (CSV or JSON)
    #[command(after_help = KEYS_HELP)]
    Evolve(Common),
    /// Resolvent norms along the imaginary axis plus a growth fit
    #[command(after_help = KEYS_HELP)]
    Resolvent(Common),
    /// Power-law versus exponential fit of the energy decay (JSON)
    #[command(after_help = KEYS_HELP)]
    Decay(Common),
    /// Seeded invariant checks (JSON); fails if any check fails
    #[command(after_help = KEYS_HELP)]
    Verify(Common),
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
    /// A property that must always hold was violated.
    Invariant(String),
    ChecksFailed,
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Runtime(_) | Failure::ChecksFailed => 1,
            Failure::Config(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Bytes destined for the primary output and an optional companion file.
#[derive(Debug, Default, PartialEq)]
pub struct Output {
    pub primary: String,
    pub companion: Option<String>,
    /// Remarks for stderr.
    pub notes: Vec<String>,
}

/// Parses arguments, runs the command and writes its output.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let common = match &cli.command {
        Command::Spectrum(c)
        | Command::Evolve(c)
        | Command::Resolvent(c)
        | Command::Decay(c)
        | Command::Verify(c) => c.clone(),
    };
    let cfg = match config::load(common.config.as_deref(), &common.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (result, output) = match execute(&cli.command, &cfg) {
        Ok(out) => (Ok(()), Some(out)),
        Err((failure, out)) => (Err(failure), out),
    };
    if let Some(out) = &output {
        for note in &out.notes {
            eprintln!("note: {note}");
        }
        if let Err(e) = write_output(&cfg, out) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::Invariant(m) => eprintln!("internal invariant violated: {m}"),
                Failure::ChecksFailed => eprintln!("error: one or more checks failed"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), String> {
    // dense kernels stay sequential so results do not depend on scheduling
    faer::set_global_parallelism(faer::Par::Seq);
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure {n} threads: {e}"))
}

fn write_output(cfg: &RunConfig, out: &Output) -> Result<(), String> {
    use std::io::Write;
    let write = |path: &str, text: &str| -> Result<(), String> {
        if path == "-" {
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string())
        } else {
            std::fs::write(path, text).map_err(|e| format!("cannot write {path}: {e}"))
        }
    };
    write(&cfg.output, &out.primary)?;
    if let Some(companion) = &out.companion {
        match (&cfg.fit_output, cfg.output.as_str()) {
            (Some(path), _) => write(path, companion)?,
            (None, "-") => eprint!("{companion}"),
            (None, path) => write(&companion_path(path), companion)?,
        }
    }
    Ok(())
}

/// `scan.csv` -> `scan.fit.json`.
pub fn companion_path(path: &str) -> String {
    let p = std::path::Path::new(path);
    match p.extension() {
        Some(_) => p.with_extension("fit.json").to_string_lossy().into_owned(),
        None => format!("{path}.fit.json"),
    }
}

type Outcome = Result<Output, (Failure, Option<Output>)>;

/// Runs one subcommand without touching the filesystem or stdout.
pub fn execute(command: &Command, cfg: &RunConfig) -> Outcome {
    let plain = |r: Result<Output, Failure>| r.map_err(|f| (f, None));
    match command {
        Command::Spectrum(_) => plain(cmd_spectrum(cfg)),
        Command::Evolve(_) => cmd_evolve(cfg),
        Command::Resolvent(_) => plain(cmd_resolvent(cfg)),
        Command::Decay(_) => plain(cmd_decay(cfg)),
        Command::Verify(_) => cmd_verify(cfg),
    }
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::Runtime(format!("JSON encoding failed: {e}")))
}

fn generator(cfg: &RunConfig) -> Result<CoupledGenerator, Failure> {
    config::validate(cfg)?;
    let mut coupling = config::coupling(cfg)?;
    if cfg.flip_theta_coupling_sign {
        coupling = Coupling { alpha: coupling.alpha, beta: -coupling.beta };
    }
    Ok(CoupledGenerator::assemble(config::bc_pair(cfg), coupling, cfg.modes, cfg.length)?)
}

fn times(cfg: &RunConfig) -> Result<Vec<f64>, Failure> {
    time_grid(cfg.t_min, cfg.t_max, cfg.samples, cfg.spacing)
        .map_err(|e| Failure::Config(format!("invalid time grid (keys `t_min`, `t_max`, `samples`, `spacing`): {e}")))
}

fn require_fit_modes(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.modes < 8 {
        return Err(Failure::Config(format!(
            "invalid configuration key `modes`: fitting needs at least 8 modes, got {}",
            cfg.modes
        )));
    }
    Ok(())
}

/// Initial data selected by `initial`, `block`, `mode`, `exponent` and `seed`.
pub fn initial_state(cfg: &RunConfig) -> StateVector {
    let n = cfg.modes;
    let mut s = StateVector::zeros(n);
    let put = |s: &mut StateVector, m: usize, x: f64| {
        let slot = match cfg.block {
            Block::U => &mut s.u,
            Block::V => &mut s.v,
            Block::Theta => &mut s.theta,
        };
        slot[m] = C::new(x, 0.0);
    };
    match cfg.initial {
        InitialKind::Zero => {}
        InitialKind::SingleMode => put(&mut s, cfg.mode - 1, 1.0),
        InitialKind::PowerLaw => {
            for m in 0..n {
                put(&mut s, m, ((m + 1) as f64).powf(-cfg.exponent));
            }
        }
        InitialKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for m in 0..n {
                let w = ((m + 1) as f64).powf(-cfg.exponent);
                s.u[m] = C::new(w * rng.random_range(-1.0..1.0), 0.0);
                s.v[m] = C::new(w * rng.random_range(-1.0..1.0), 0.0);
                s.theta[m] = C::new(w * rng.random_range(-1.0..1.0), 0.0);
            }
        }
    }
    s
}

fn spectral_abscissa(gen: &CoupledGenerator) -> Result<f64, Failure> {
    if gen.is_modal() {
        Ok((0..gen.mode_count())
            .map(|m| wave_branch(&gen.modal_block(m).unwrap().eigenvalues()).re)
            .fold(f64::NEG_INFINITY, f64::max))
    } else {
        Ok(spectrum(gen)?.spectral_abscissa)
    }
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Output, Failure> {
    let gen = generator(cfg)?;
    let report = spectrum(&gen)?;
    let mut notes = Vec::new();
    if !report.imaginary_axis_clear {
        notes.push(format!(
            "{} eigenvalue(s) lie on the imaginary axis; the truncation is not strongly stable",
            report.on_axis_count
        ));
    }
    Ok(Output { primary: to_json(&report)?, companion: None, notes })
}

pub fn trace_csv(trace: &EnergyTrace) -> String {
    let mut out = String::from("t,energy,state_norm\n");
    for ((t, e), s) in trace.times.iter().zip(&trace.energy).zip(&trace.state_norms) {
        out.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(*e), fmt_f64(*s)));
    }
    out
}

pub fn cmd_evolve(cfg: &RunConfig) -> Outcome {
    let run = || -> Result<(Output, bool), Failure> {
        let gen = generator(cfg)?;
        let grid = times(cfg)?;
        let initial = initial_state(cfg);
        let trace = evolve_with(&gen, &initial, &grid, cfg.propagation)?;
        let report = strong_stability_report(&trace)?;
        // E(0) must bound the whole trace, even when the grid starts after 0
        let e0 = gen.energy_norm_sq(&initial)?;
        let bounded = trace.energy.iter().all(|&e| e <= e0 * (1.0 + 1e-12));
        let primary = match cfg.format {
            Format::Csv => trace_csv(&trace),
            Format::Json => to_json(&trace)?,
        };
        let ok = !contractive(&gen) || (report.monotone && bounded);
        Ok((Output { primary, companion: None, notes: Vec::new() }, ok))
    };
    match run() {
        Ok((out, true)) => Ok(out),
        Ok((out, false)) => Err((
            Failure::Invariant("energy increased along the trajectory of a contraction semigroup".into()),
            Some(out),
        )),
        Err(f) => Err((f, None)),
    }
}

/// Whether the generator is dissipative, so energy must not grow.
fn contractive(gen: &CoupledGenerator) -> bool {
    gen.coupling().gamma().is_some()
}

#[derive(Serialize)]
struct GrowthReport {
    bc_pair: String,
    coupling: Coupling,
    mode_count: usize,
    grid: LambdaGrid,
    /// `None` when fewer than 5 unflagged points with `lambda > 0` remain.
    slope: Option<f64>,
    intercept: Option<f64>,
    r_squared: Option<f64>,
    points: usize,
    flagged_count: usize,
    flag_tolerance: f64,
}

pub fn scan_csv(scan: &ResolventScan) -> String {
    let mut out = String::from("lambda,resolvent_norm,flagged\n");
    for ((l, r), f) in scan.lambdas.iter().zip(&scan.norms).zip(&scan.flagged) {
        out.push_str(&format!("{},{},{}\n", fmt_f64(*l), fmt_f64(*r), f));
    }
    out
}

pub fn resolvent_scan(cfg: &RunConfig) -> Result<ResolventScan, Failure> {
    let gen = generator(cfg)?;
    let lambdas = match cfg.lambda_grid {
        LambdaGrid::Modes => {
            let (lo, hi) = config::mode_range(cfg)?;
            mode_grid(&gen, lo, hi)?
        }
        LambdaGrid::Uniform => {
            if cfg.lambda_samples < 2 || !(cfg.lambda_max > cfg.lambda_min) {
                return Err(Failure::Config(
                    "invalid configuration key `lambda_samples`: a uniform grid needs \
                     lambda_samples >= 2 and lambda_max > lambda_min"
                        .into(),
                ));
            }
            let last = (cfg.lambda_samples - 1) as f64;
            (0..cfg.lambda_samples)
                .map(|i| cfg.lambda_min + (cfg.lambda_max - cfg.lambda_min) * i as f64 / last)
                .collect()
        }
    };
    Ok(scan_with_tolerance(&gen, &lambdas, cfg.flag_tol)?)
}

pub fn cmd_resolvent(cfg: &RunConfig) -> Result<Output, Failure> {
    require_fit_modes(cfg)?;
    let scan = resolvent_scan(cfg)?;
    // fit log r against log lambda over unflagged points with lambda > 0
    let (xs, ys): (Vec<f64>, Vec<f64>) = scan
        .lambdas
        .iter()
        .zip(&scan.norms)
        .zip(&scan.flagged)
        .filter(|((l, r), f)| !**f && **l > 0.0 && r.is_finite())
        .map(|((l, r), _)| (l.ln(), r.ln()))
        .unzip();
    let mut notes = Vec::new();
    let fit = if xs.len() >= 5 {
        Some(line_fit(&xs, &ys)?)
    } else {
        notes.push(format!(
            "growth fit skipped: needs at least 5 unflagged points with lambda > 0, got {}",
            xs.len()
        ));
        None
    };
    let report = GrowthReport {
        bc_pair: scan.bc_pair.to_string(),
        coupling: scan.coupling,
        mode_count: scan.mode_count,
        grid: cfg.lambda_grid,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r_squared: fit.map(|f| f.r_squared),
        points: xs.len(),
        flagged_count: scan.flagged_count(),
        flag_tolerance: scan.flag_tolerance,
    };
    let primary = match cfg.format {
        Format::Csv => scan_csv(&scan),
        Format::Json => to_json(&scan)?,
    };
    Ok(Output { primary, companion: Some(to_json(&report)?), notes })
}

#[derive(Serialize)]
struct DecayReport {
    bc_pair: String,
    coupling: Coupling,
    mode_count: usize,
    initial: InitialKind,
    spectral_abscissa: f64,
    pre_asymptotic_limit: f64,
    #[serde(flatten)]
    fit: DecayFit,
}

pub fn cmd_decay(cfg: &RunConfig) -> Result<Output, Failure> {
    require_fit_modes(cfg)?;
    let gen = generator(cfg)?;
    let window = config::decay_window(cfg);
    let abscissa = spectral_abscissa(&gen)?;
    validate_decay_window(window, abscissa).map_err(|e| {
        let limit = pre_asymptotic_limit(abscissa);
        Failure::Config(format!(
            "invalid decay window (keys `window_lo`, `window_hi`, `t_max`): {e}; suggested t_max = {}",
            fmt_f64(limit.min(cfg.t_max))
        ))
    })?;
    let grid = times(cfg)?;
    let trace = evolve_with(&gen, &initial_state(cfg), &grid, cfg.propagation)?;
    let fit = fit_polynomial_decay(&trace, window)
        .map_err(|e| Failure::Config(format!("invalid decay window: {e}")))?;
    let mut notes = Vec::new();
    match fit.preferred_model {
        DecayModel::Exponential => notes.push(format!(
            "exponential model preferred: its residual {:.3e} is at least 10x below the power-law residual {:.3e}",
            fit.exp_fit_residual, fit.power_fit_residual
        )),
        DecayModel::Inconclusive => {
            notes.push("neither the power-law nor the exponential model fits 10x better".into())
        }
        DecayModel::PowerLaw => {}
    }
    let report = DecayReport {
        bc_pair: gen.bc().to_string(),
        coupling: gen.coupling(),
        mode_count: gen.mode_count(),
        initial: cfg.initial,
        spectral_abscissa: abscissa,
        pre_asymptotic_limit: pre_asymptotic_limit(abscissa),
        fit,
    };
    Ok(Output { primary: to_json(&report)?, companion: None, notes })
}

pub fn cmd_verify(cfg: &RunConfig) -> Outcome {
    let run = || -> Result<verify::VerifyReport, Failure> {
        let gen = generator(cfg)?;
        let input = verify::VerifyInput {
            gen: &gen,
            intended: config::coupling(cfg)?,
            seed: cfg.seed,
            states: cfg.verify_states.max(1),
            times: times(cfg)?,
        };
        Ok(verify::run(&input)?)
    };
    let report = run().map_err(|f| (f, None))?;
    let notes = report.skipped.iter().map(|s| format!("skipped {}: {}", s.name, s.reason)).collect();
    let out = Output {
        primary: to_json(&report).map_err(|f| (f, None))?,
        companion: None,
        notes,
    };
    if report.pass {
        Ok(out)
    } else {
        Err((Failure::ChecksFailed, Some(out)))
    }
}
