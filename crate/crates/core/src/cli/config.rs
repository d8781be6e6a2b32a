//! Run configuration: a flat TOML file merged with `--set key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::BcPair;
use crate::evolution::{Propagation, Spacing};
use crate::generator::Coupling;

pub const KEYS_HELP: &str = "\
CONFIGURATION KEYS (file via --config, overridden by --set KEY=VALUE; the command line wins)
  bc = \"DD\"                   boundary conditions of (u, theta): DD, DN, ND or NN
  gamma = 1.0                 coupling strength of the symmetric system
  alpha, beta                 general coupling u_tt = -Au - alpha theta,
                              theta_t = -A'theta - beta u_t (unset; set both to use)
  decoupled_control = false   permit zero coupling
  modes = 128                 modes per field
  length = 3.141592653589793  interval length
  t_min = 10.0                first sample time
  t_max = 1000.0              last sample time
  samples = 41                number of sample times
  spacing = \"log\"             log | linear
  propagation = \"auto\"        auto | modal | dense
  initial = \"power_law\"       zero | single_mode | power_law | random
  block = \"v\"                 u | v | theta: component carrying single_mode/power_law data
  mode = 1                    one-based mode of single_mode data
  exponent = 1.6              power_law amplitudes m^-exponent (also scales random data)
  lambda_grid = \"modes\"       modes (lambda = sqrt(lam_m)) | uniform
  mode_lo = 8                 first mode of the mode grid (1 when modes < 40)
  mode_hi = modes/2 - 8       last mode of the mode grid (modes/2 when modes < 40)
  lambda_min = 0.5            uniform grid start
  lambda_max = 20.0           uniform grid end
  lambda_samples = 400        uniform grid size
  flag_tol = 1e-6             distance to an eigenvalue that flags a scan point
  window_lo = t_min           decay fit window start
  window_hi = t_max           decay fit window end
  seed = 20240601             seed for random data and verify
  verify_states = 20          random states per verify check
  format = \"csv\"              csv | json (evolve and resolvent; other reports are JSON)
  output = \"-\"                output path, - for stdout
  fit_output                  resolvent growth-fit JSON (default <output>.fit.json,
                              stderr when output is stdout)
  flip_theta_coupling_sign = false   test hook: flips the sign of beta

ENVIRONMENT
  THERMOSPEC_THREADS          maximum number of worker threads";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    SingleMode,
    PowerLaw,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    U,
    V,
    Theta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    Modes,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Raw configuration as written by the user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub bc: String,
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub decoupled_control: bool,
    pub modes: usize,
    pub length: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub spacing: Spacing,
    pub propagation: Propagation,
    pub initial: InitialKind,
    pub block: Block,
    pub mode: usize,
    pub exponent: f64,
    pub lambda_grid: LambdaGrid,
    pub mode_lo: Option<usize>,
    pub mode_hi: Option<usize>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_samples: usize,
    pub flag_tol: f64,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub seed: u64,
    pub verify_states: usize,
    pub format: Format,
    pub output: String,
    pub fit_output: Option<String>,
    pub flip_theta_coupling_sign: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bc: "DD".into(),
            gamma: 1.0,
            alpha: None,
            beta: None,
            decoupled_control: false,
            modes: 128,
            length: std::f64::consts::PI,
            t_min: 10.0,
            t_max: 1000.0,
            samples: 41,
            spacing: Spacing::Log,
            propagation: Propagation::Auto,
            initial: InitialKind::PowerLaw,
            block: Block::V,
            mode: 1,
            exponent: 1.6,
            lambda_grid: LambdaGrid::Modes,
            mode_lo: None,
            mode_hi: None,
            lambda_min: 0.5,
            lambda_max: 20.0,
            lambda_samples: 400,
            flag_tol: crate::resolvent::DEFAULT_FLAG_TOLERANCE,
            window_lo: None,
            window_hi: None,
            seed: 20240601,
            verify_states: 20,
            format: Format::Csv,
            output: "-".into(),
            fit_output: None,
            flip_theta_coupling_sign: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn key_error(key: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("invalid configuration key `{key}`: {msg}"))
}

fn known_keys() -> Vec<String> {
    match toml::Table::try_from(RunConfig::default()) {
        Ok(t) => {
            let mut keys: Vec<String> = t.keys().cloned().collect();
            // optional keys are skipped when unset
            for k in ["alpha", "beta", "mode_lo", "mode_hi", "window_lo", "window_hi", "fit_output"] {
                if !keys.iter().any(|x| x == k) {
                    keys.push(k.into());
                }
            }
            keys.sort();
            keys
        }
        Err(_) => Vec::new(),
    }
}

/// Parses `key=value`; the value is read as a TOML literal, else as a bare string.
fn parse_override(item: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, value) = item
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override `{item}` must have the form KEY=VALUE")))?;
    let key = key.trim().to_string();
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key, parsed))
}

/// Merges the file and overrides into a configuration, naming the first bad key.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| ConfigError(format!("config {} is not valid TOML: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        let (k, v) = parse_override(item)?;
        table.insert(k, v);
    }
    let known = known_keys();
    for (key, value) in &table {
        if !known.iter().any(|k| k == key) {
            return Err(ConfigError(format!("unknown configuration key `{key}`")));
        }
        let single: toml::Table = [(key.clone(), value.clone())].into_iter().collect();
        single.try_into::<RunConfig>().map_err(|e| key_error(key, e.message()))?;
    }
    table
        .try_into::<RunConfig>()
        .map_err(|e| ConfigError(format!("invalid configuration: {}", e.message())))
}

/// Checks that do not depend on the subcommand.
pub fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.bc.parse::<BcPair>().map_err(|e| key_error("bc", e))?;
    coupling(cfg)?;
    if cfg.modes == 0 {
        return Err(key_error("modes", "must be at least 1"));
    }
    if !(cfg.length > 0.0 && cfg.length.is_finite()) {
        return Err(key_error("length", "must be positive"));
    }
    if !(cfg.flag_tol >= 0.0 && cfg.flag_tol.is_finite()) {
        return Err(key_error("flag_tol", "must be non-negative"));
    }
    if !cfg.exponent.is_finite() {
        return Err(key_error("exponent", "must be finite"));
    }
    if cfg.initial == InitialKind::SingleMode && !(1..=cfg.modes).contains(&cfg.mode) {
        return Err(key_error("mode", format!("must lie in 1..={}", cfg.modes)));
    }
    Ok(())
}

pub fn bc_pair(cfg: &RunConfig) -> BcPair {
    cfg.bc.parse().unwrap_or(BcPair::DD)
}

/// The coupling requested by the configuration, before any test hook.
pub fn coupling(cfg: &RunConfig) -> Result<Coupling, ConfigError> {
    let c = match (cfg.alpha, cfg.beta) {
        (Some(a), Some(b)) => Coupling::general(a, b).map_err(|e| key_error("alpha", e))?,
        (Some(_), None) => return Err(key_error("beta", "must be set together with alpha")),
        (None, Some(_)) => return Err(key_error("alpha", "must be set together with beta")),
        (None, None) => {
            if !cfg.gamma.is_finite() {
                return Err(key_error("gamma", "must be finite"));
            }
            Coupling::symmetric(cfg.gamma)
        }
    };
    let zero = c.alpha == 0.0 || c.beta == 0.0;
    if zero && !cfg.decoupled_control {
        let key = if cfg.alpha.is_some() { "alpha" } else { "gamma" };
        return Err(key_error(key, "zero coupling requires decoupled_control = true"));
    }
    Ok(c)
}

/// One-based mode range of the mode-indexed grid.
pub fn mode_range(cfg: &RunConfig) -> Result<(usize, usize), ConfigError> {
    let half = cfg.modes / 2;
    let (lo_default, hi_default) = if cfg.modes >= 40 { (8, half - 8) } else { (1, half.max(1)) };
    let lo = cfg.mode_lo.unwrap_or(lo_default);
    let hi = cfg.mode_hi.unwrap_or(hi_default);
    if lo == 0 {
        return Err(key_error("mode_lo", "modes are one-based"));
    }
    if hi < lo || hi > cfg.modes {
        return Err(key_error("mode_hi", format!("must lie in {lo}..={}", cfg.modes)));
    }
    Ok((lo, hi))
}

pub fn decay_window(cfg: &RunConfig) -> (f64, f64) {
    (cfg.window_lo.unwrap_or(cfg.t_min), cfg.window_hi.unwrap_or(cfg.t_max))
}
