//! Scenario configuration: a flat, line-oriented `key = value` text format
//! with dotted section keys. Parsing applies defaults and validates; emitting
//! produces the canonical normalized form, so `parse(emit(c)) == c`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::bath::{BathParams, Beta};
use crate::dynamics::Observable;
use crate::error::{Error, Result};
use crate::measurement::{MethodChoice, SweepSpec, ThresholdConfig};
use crate::qubit::{Basis, DensityMatrix};

/// Output format of the emitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv|json)")),
        }
    }
}

/// Parsed scenario: system, bath, initial state, optional threshold / time
/// window / sweep axes / output destination.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub omega0: f64,
    pub lambda: f64,
    pub observable: Observable,
    pub eta: f64,
    pub omega_c: f64,
    pub beta: Beta,
    pub rho11: f64,
    pub re_rho12: f64,
    pub im_rho12: f64,
    pub basis: Basis,
    pub fraction: Option<f64>,
    pub method: MethodChoice,
    pub t_end: Option<f64>,
    pub samples: usize,
    pub sweep_lambdas: Option<Vec<f64>>,
    pub sweep_etas: Option<Vec<f64>>,
    pub include_baseline: bool,
    pub output_path: Option<String>,
    pub output_format: OutputFormat,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let rho0 = DensityMatrix::reference_initial_state();
        ScenarioConfig {
            omega0: 0.0,
            lambda: 1.0,
            observable: Observable::SigmaX,
            eta: 0.0,
            omega_c: 1.0,
            beta: Beta::Infinite,
            rho11: rho0.rho11(),
            re_rho12: rho0.rho12().re,
            im_rho12: rho0.rho12().im,
            basis: Basis::Z,
            fraction: None,
            method: MethodChoice::Auto,
            t_end: None,
            samples: 200,
            sweep_lambdas: None,
            sweep_etas: None,
            include_baseline: false,
            output_path: None,
            output_format: OutputFormat::Csv,
        }
    }
}

fn parse_f64(field: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::config(field, format!("expected a number, got `{v}`")))
        .and_then(|x| {
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::config(field, "value must be finite"))
            }
        })
}

fn parse_list(field: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|tok| parse_f64(field, tok.trim()))
        .collect()
}

fn parse_bool(field: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::config(field, format!("expected true|false, got `{v}`"))),
    }
}

impl ScenarioConfig {
    /// Parse the key = value text form. Unknown keys, duplicate keys, and
    /// malformed values are config errors carrying the offending field path.
    pub fn parse(text: &str) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), lineno).is_some() {
                return Err(Error::config(key, "duplicate key"));
            }
            match key {
                "method" => {
                    cfg.method = value
                        .parse()
                        .map_err(|e: String| Error::config(key, e))?;
                }
                "system.omega0" => cfg.omega0 = parse_f64(key, value)?,
                "system.lambda" => cfg.lambda = parse_f64(key, value)?,
                "system.observable" => {
                    cfg.observable = match value {
                        "sigma_z" => Observable::SigmaZ,
                        "sigma_x" => Observable::SigmaX,
                        _ => {
                            return Err(Error::config(
                                key,
                                format!("expected sigma_z|sigma_x, got `{value}`"),
                            ))
                        }
                    };
                }
                "bath.eta" => cfg.eta = parse_f64(key, value)?,
                "bath.omega_c" => cfg.omega_c = parse_f64(key, value)?,
                "bath.beta" => {
                    cfg.beta = if value == "zero-temperature" {
                        Beta::Infinite
                    } else {
                        Beta::Finite(parse_f64(key, value)?)
                    };
                }
                "initial.rho11" => cfg.rho11 = parse_f64(key, value)?,
                "initial.re_rho12" => cfg.re_rho12 = parse_f64(key, value)?,
                "initial.im_rho12" => cfg.im_rho12 = parse_f64(key, value)?,
                "initial.basis" => {
                    cfg.basis = match value {
                        "z" => Basis::Z,
                        "x" => Basis::X,
                        _ => {
                            return Err(Error::config(
                                key,
                                format!("expected z|x, got `{value}`"),
                            ))
                        }
                    };
                }
                "threshold.f" => cfg.fraction = Some(parse_f64(key, value)?),
                "time.t_end" => cfg.t_end = Some(parse_f64(key, value)?),
                "time.samples" => {
                    cfg.samples = value.parse::<usize>().map_err(|_| {
                        Error::config(key, format!("expected a positive integer, got `{value}`"))
                    })?;
                }
                "sweep.lambda" => cfg.sweep_lambdas = Some(parse_list(key, value)?),
                "sweep.eta" => cfg.sweep_etas = Some(parse_list(key, value)?),
                "sweep.include_baseline" => cfg.include_baseline = parse_bool(key, value)?,
                "output.path" => cfg.output_path = Some(value.to_string()),
                "output.format" => {
                    cfg.output_format = value
                        .parse()
                        .map_err(|e: String| Error::config(key, e))?;
                }
                _ => return Err(Error::config(key, "unknown key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural validation shared by all commands.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::config("system.lambda", "lambda must be positive"));
        }
        if !(self.omega0 >= 0.0) {
            return Err(Error::config("system.omega0", "omega0 must be >= 0"));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::config("bath.eta", "eta must be >= 0"));
        }
        if !(self.omega_c > 0.0) {
            return Err(Error::config("bath.omega_c", "omega_c must be positive"));
        }
        if let Beta::Finite(b) = self.beta {
            if !(b > 0.0) {
                return Err(Error::config(
                    "bath.beta",
                    "beta must be positive or `zero-temperature`",
                ));
            }
        }
        if let Some(f) = self.fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::config("threshold.f", "f must satisfy 0 < f < 1"));
            }
        }
        if let Some(t) = self.t_end {
            if !(t >= 0.0) {
                return Err(Error::config("time.t_end", "t_end must be >= 0"));
            }
        }
        if self.samples == 0 {
            return Err(Error::config("time.samples", "samples must be >= 1"));
        }
        self.initial_state()?;
        Ok(())
    }

    /// Canonical normalized text form; floats carry 17 significant digits so
    /// the round trip is exact.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("method", self.method.name().to_string());
        push("system.omega0", fmt_float(self.omega0));
        push("system.lambda", fmt_float(self.lambda));
        push("system.observable", self.observable.name().to_string());
        push("bath.eta", fmt_float(self.eta));
        push("bath.omega_c", fmt_float(self.omega_c));
        let beta = match self.beta {
            Beta::Infinite => "zero-temperature".to_string(),
            Beta::Finite(b) => fmt_float(b),
        };
        push("bath.beta", beta);
        push("initial.rho11", fmt_float(self.rho11));
        push("initial.re_rho12", fmt_float(self.re_rho12));
        push("initial.im_rho12", fmt_float(self.im_rho12));
        push("initial.basis", self.basis.to_string());
        if let Some(f) = self.fraction {
            push("threshold.f", fmt_float(f));
        }
        if let Some(t) = self.t_end {
            push("time.t_end", fmt_float(t));
        }
        push("time.samples", self.samples.to_string());
        if let Some(ls) = &self.sweep_lambdas {
            push("sweep.lambda", fmt_list(ls));
        }
        if let Some(es) = &self.sweep_etas {
            push("sweep.eta", fmt_list(es));
        }
        push(
            "sweep.include_baseline",
            self.include_baseline.to_string(),
        );
        if let Some(p) = &self.output_path {
            push("output.path", p.clone());
        }
        push("output.format", self.output_format.name().to_string());
        out
    }

    /// Normalized key/value map, used as the config echo in result envelopes.
    pub fn echo_map(&self) -> BTreeMap<String, String> {
        self.emit()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    pub fn system(&self) -> Result<crate::dynamics::SystemParams> {
        crate::dynamics::SystemParams::new(self.omega0, self.lambda, self.observable)
    }

    pub fn bath(&self) -> Result<BathParams> {
        BathParams::new(self.eta, self.omega_c, self.beta)
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(
            self.rho11,
            Complex64::new(self.re_rho12, self.im_rho12),
            self.basis,
        )
        .map_err(|e| Error::config("initial", e.to_string()))
    }

    pub fn threshold(&self) -> Result<ThresholdConfig> {
        let f = self
            .fraction
            .ok_or_else(|| Error::config("threshold.f", "missing required key"))?;
        ThresholdConfig::new(f)
    }

    pub fn time_window(&self) -> Result<(f64, usize)> {
        let t = self
            .t_end
            .ok_or_else(|| Error::config("time.t_end", "missing required key"))?;
        Ok((t, self.samples))
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let lambdas = self
            .sweep_lambdas
            .clone()
            .ok_or_else(|| Error::config("sweep.lambda", "missing required key"))?;
        let etas = self
            .sweep_etas
            .clone()
            .ok_or_else(|| Error::config("sweep.eta", "missing required key"))?;
        let fraction = self
            .fraction
            .ok_or_else(|| Error::config("threshold.f", "missing required key"))?;
        let spec = SweepSpec {
            lambdas,
            etas,
            fraction,
            observable: self.observable,
            omega0: self.omega0,
            omega_c: self.omega_c,
            beta: self.beta,
            initial: self.initial_state()?,
            method: self.method,
            include_baseline: self.include_baseline,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// 17 significant digits: enough for an exact f64 round trip.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| fmt_float(*x))
        .collect::<Vec<_>>()
        .join(", ")
}
