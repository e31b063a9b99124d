//! Measurement duration: the first time the measured-basis coherence falls to
//! the fraction `f` of its initial value, the closed-form upper bound
//! `-ln(f) / (2 lambda^2)`, and (lambda, eta) sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{BathParams, Beta};
use crate::dynamics::{
    analytic_x, analytic_z, HybridPropagator, Method, Observable, PropagatorConfig, SystemParams,
};
use crate::error::{Error, Result};
use crate::quad::QuadratureConfig;
use crate::qubit::{Basis, DensityMatrix};
use crate::superop::{superop_exp, unvectorize, vectorize};

/// Which scalar the threshold condition is applied to. The modulus is the
/// general criterion; the imaginary-part ratio is the simplified condition
/// usable when the initial coherence is purely imaginary in the measured
/// basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossingCriterion {
    #[default]
    Modulus,
    ImaginaryPart,
}

/// Threshold fraction and root-finding controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    /// Fraction f in |rho12(t_M)| = f |rho12(0)|, 0 < f < 1.
    pub fraction: f64,
    /// Forward-march step; `None` selects upper_bound / 20.
    pub bracket_step: Option<f64>,
    /// Relative tolerance on the extracted time.
    pub root_rel_tol: f64,
    pub criterion: CrossingCriterion,
}

impl ThresholdConfig {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidFraction(fraction));
        }
        Ok(ThresholdConfig {
            fraction,
            bracket_step: None,
            root_rel_tol: 1e-10,
            criterion: CrossingCriterion::Modulus,
        })
    }
}

/// Extracted measurement time with diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeasurementTimeResult {
    pub t_m: f64,
    /// Closed-form bound -ln(f) / (2 lambda^2).
    pub upper_bound: f64,
    #[serde(serialize_with = "serialize_method")]
    pub method: Method,
    pub iterations: usize,
    /// signal(t_M)/signal(0) - f at the reported root.
    pub residual: f64,
}

fn serialize_method<S: serde::Serializer>(m: &Method, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(m.name())
}

/// `t_M = -ln(f) / (2 lambda^2)`: the measurement-duration upper bound.
/// Strictly positive and strictly decreasing in both arguments.
pub fn upper_bound(lambda: f64, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    if !(lambda > 0.0) {
        return Err(Error::ZeroStrength(lambda));
    }
    Ok(-fraction.ln() / (2.0 * lambda * lambda))
}

/// A coherence-producing evolution the threshold condition can be applied to.
/// Implementations re-evaluate the true model at arbitrary times, so root
/// refinement is not limited by any trajectory sampling stride.
pub trait CoherenceModel {
    fn method(&self) -> Method;
    /// Evolved state at time t, expressed in the measurement eigenbasis.
    fn state_at(&mut self, t: f64) -> Result<DensityMatrix>;
}

/// Evaluator choice for scenarios and sweeps; `Auto` picks the analytic path
/// where its validity preconditions hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodChoice {
    Auto,
    Analytic,
    Lindblad,
    Hybrid,
}

impl MethodChoice {
    pub fn name(&self) -> &'static str {
        match self {
            MethodChoice::Auto => "auto",
            MethodChoice::Analytic => "analytic",
            MethodChoice::Lindblad => "lindblad",
            MethodChoice::Hybrid => "hybrid",
        }
    }

    /// Resolve to a concrete method for the given parameters: eta = 0 runs
    /// the exact semigroup; sigma_z has a closed form at any temperature;
    /// sigma_x has one only at T = 0, omega0 = 0; everything else integrates
    /// the hybrid equation.
    pub fn resolve(&self, s: &SystemParams, b: &BathParams) -> Method {
        match self {
            MethodChoice::Lindblad => Method::LindbladOnly,
            MethodChoice::Hybrid => Method::HybridNumeric,
            MethodChoice::Analytic => match s.observable {
                Observable::SigmaZ => Method::AnalyticZ,
                Observable::SigmaX => Method::AnalyticX,
            },
            MethodChoice::Auto => {
                if b.eta == 0.0 {
                    Method::LindbladOnly
                } else {
                    match s.observable {
                        Observable::SigmaZ => Method::AnalyticZ,
                        Observable::SigmaX => {
                            if s.omega0 == 0.0 && !b.beta.is_finite() {
                                Method::AnalyticX
                            } else {
                                Method::HybridNumeric
                            }
                        }
                    }
                }
            }
        }
    }
}

impl std::str::FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "analytic" => Ok(MethodChoice::Analytic),
            "lindblad" => Ok(MethodChoice::Lindblad),
            "hybrid" => Ok(MethodChoice::Hybrid),
            other => Err(format!(
                "unknown method `{other}` (expected auto|analytic|lindblad|hybrid)"
            )),
        }
    }
}

struct AnalyticZModel {
    rho0: DensityMatrix,
    s: SystemParams,
    b: BathParams,
    q: QuadratureConfig,
}

impl CoherenceModel for AnalyticZModel {
    fn method(&self) -> Method {
        Method::AnalyticZ
    }
    fn state_at(&mut self, t: f64) -> Result<DensityMatrix> {
        analytic_z(&self.rho0, t, &self.s, &self.b, &self.q)
    }
}

struct AnalyticXModel {
    rho0: DensityMatrix,
    s: SystemParams,
    b: BathParams,
    q: QuadratureConfig,
}

impl CoherenceModel for AnalyticXModel {
    fn method(&self) -> Method {
        Method::AnalyticX
    }
    fn state_at(&mut self, t: f64) -> Result<DensityMatrix> {
        analytic_x(&self.rho0, t, &self.s, &self.b, &self.q)
    }
}

struct LindbladModel {
    rho0: DensityMatrix,
    s: SystemParams,
}

impl CoherenceModel for LindbladModel {
    fn method(&self) -> Method {
        Method::LindbladOnly
    }
    fn state_at(&mut self, t: f64) -> Result<DensityMatrix> {
        let gen = self.s.measurement_generator();
        let prop = superop_exp(&gen, t)?;
        let v = prop.apply_vec(&vectorize(self.rho0.change_basis(Basis::Z).matrix()));
        let state = DensityMatrix::from_propagated(&unvectorize(&v), Basis::Z, 1e-10)?;
        Ok(state.change_basis(self.s.observable.eigenbasis()))
    }
}

struct HybridModel {
    prop: HybridPropagator,
}

impl CoherenceModel for HybridModel {
    fn method(&self) -> Method {
        Method::HybridNumeric
    }
    fn state_at(&mut self, t: f64) -> Result<DensityMatrix> {
        self.prop.state_at(t)
    }
}

/// Build the evaluator for a resolved method. `horizon_hint` sizes the
/// correlation cache of the hybrid path.
pub fn build_model(
    method: Method,
    rho0: &DensityMatrix,
    s: &SystemParams,
    b: &BathParams,
    c: &PropagatorConfig,
    q: &QuadratureConfig,
    horizon_hint: f64,
) -> Result<Box<dyn CoherenceModel>> {
    Ok(match method {
        Method::AnalyticZ => Box::new(AnalyticZModel {
            rho0: *rho0,
            s: *s,
            b: *b,
            q: *q,
        }),
        Method::AnalyticX => Box::new(AnalyticXModel {
            rho0: *rho0,
            s: *s,
            b: *b,
            q: *q,
        }),
        Method::LindbladOnly => Box::new(LindbladModel { rho0: *rho0, s: *s }),
        Method::HybridNumeric => Box::new(HybridModel {
            prop: HybridPropagator::new(rho0, s, b, c, q, horizon_hint)?,
        }),
    })
}

const SCAN_HORIZON_FACTOR: f64 = 20.0;
const MIN_COHERENCE: f64 = 1e-14;

/// First time the measured coherence signal reaches `f` times its initial
/// value: forward bracket marching followed by bisection on the true model.
pub fn measurement_time(
    model: &mut dyn CoherenceModel,
    s: &SystemParams,
    cfg: &ThresholdConfig,
) -> Result<MeasurementTimeResult> {
    let bound = upper_bound(s.lambda, cfg.fraction)?;
    let signal = |state: &DensityMatrix| -> f64 {
        match cfg.criterion {
            CrossingCriterion::Modulus => state.coherence(),
            CrossingCriterion::ImaginaryPart => state.rho12().im.abs(),
        }
    };

    let initial = signal(&model.state_at(0.0)?);
    if initial <= MIN_COHERENCE {
        return Err(Error::NoInitialCoherence);
    }
    let target = cfg.fraction * initial;
    let step = cfg.bracket_step.unwrap_or(bound / 20.0);
    let horizon = SCAN_HORIZON_FACTOR * bound;

    let mut iterations = 0usize;
    let mut lo = 0.0f64;
    let mut hi = step;
    loop {
        if hi > horizon {
            return Err(Error::NoCrossingFound { horizon });
        }
        iterations += 1;
        if signal(&model.state_at(hi)?) <= target {
            break;
        }
        lo = hi;
        hi += step;
    }

    while (hi - lo) > cfg.root_rel_tol * hi.max(f64::MIN_POSITIVE) {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if signal(&model.state_at(mid)?) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t_m = 0.5 * (lo + hi);
    let residual = signal(&model.state_at(t_m)?) / initial - cfg.fraction;
    Ok(MeasurementTimeResult {
        t_m,
        upper_bound: bound,
        method: model.method(),
        iterations,
        residual,
    })
}

/// Axes and fixed parameters of a (lambda, eta) sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub lambdas: Vec<f64>,
    pub etas: Vec<f64>,
    pub fraction: f64,
    pub observable: Observable,
    pub omega0: f64,
    pub omega_c: f64,
    pub beta: Beta,
    pub initial: DensityMatrix,
    pub method: MethodChoice,
    /// Prepend an eta = 0 row set evaluated with the exact semigroup.
    pub include_baseline: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::config("sweep.lambda", "empty lambda grid"));
        }
        if self.etas.is_empty() {
            return Err(Error::config("sweep.eta", "empty eta list"));
        }
        for &l in &self.lambdas {
            if !(l > 0.0) {
                return Err(Error::ZeroStrength(l));
            }
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::InvalidFraction(self.fraction));
        }
        Ok(())
    }
}

/// One sweep cell; errors are carried as a status marker, never aborting the
/// rest of the grid.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub lambda: f64,
    pub eta: f64,
    pub result: std::result::Result<MeasurementTimeResult, Error>,
}

impl SweepRow {
    pub fn status(&self) -> String {
        match &self.result {
            Ok(_) => "ok".to_string(),
            Err(e) => error_code(e).to_string(),
        }
    }
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::NoInitialCoherence => "no_initial_coherence",
        Error::NoCrossingFound { .. } => "no_crossing",
        Error::QuadratureFailure { .. } => "quadrature_failure",
        Error::NonFinite(_) => "non_finite",
        Error::StepSizeTooLarge { .. } => "step_size",
        Error::ConfigError { .. } => "config_error",
        Error::DegenerateOmega(_) => "degenerate_omega",
        _ => "error",
    }
}

/// Evaluate the sweep grid; cells run in parallel, rows are ordered by
/// (eta, lambda) regardless of scheduling.
pub fn sweep(spec: &SweepSpec, c: &PropagatorConfig, q: &QuadratureConfig) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut etas = Vec::new();
    if spec.include_baseline && !spec.etas.contains(&0.0) {
        etas.push(0.0);
    }
    etas.extend_from_slice(&spec.etas);

    let cells: Vec<(f64, f64)> = etas
        .iter()
        .flat_map(|&eta| spec.lambdas.iter().map(move |&l| (eta, l)))
        .collect();

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(eta, lambda)| {
            let result = sweep_cell(spec, eta, lambda, c, q);
            SweepRow {
                lambda,
                eta,
                result,
            }
        })
        .collect();
    Ok(rows)
}

fn sweep_cell(
    spec: &SweepSpec,
    eta: f64,
    lambda: f64,
    c: &PropagatorConfig,
    q: &QuadratureConfig,
) -> Result<MeasurementTimeResult> {
    let s = SystemParams::new(spec.omega0, lambda, spec.observable)?;
    let b = BathParams::new(eta, spec.omega_c, spec.beta)?;
    let cfg = ThresholdConfig::new(spec.fraction)?;
    let bound = upper_bound(lambda, spec.fraction)?;
    let method = spec.method.resolve(&s, &b);
    let mut model = build_model(
        method,
        &spec.initial,
        &s,
        &b,
        c,
        q,
        SCAN_HORIZON_FACTOR * bound,
    )?;
    measurement_time(model.as_mut(), &s, &cfg)
}
