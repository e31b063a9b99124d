//! C ABI for the decotime toolkit.
//!
//! Conventions:
//! * every fallible call returns a [`DtStatus`] code and writes results
//!   through out-pointers;
//! * scenario and trajectory objects are opaque handles with explicit
//!   `_free` functions;
//! * the last error message on the calling thread is available from
//!   [`dt_last_error`] until the next failing call;
//! * strings returned through `char **` are freed with [`dt_string_free`].
//!
//! The matching header lives at `include/decotime.h`; rebuild it with
//! `cargo build -p decotime-ffi --features generate-header`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use decotime::config::{OutputFormat, ScenarioConfig};
use decotime::dynamics::PropagatorConfig;
use decotime::error::Error;
use decotime::measurement::{build_model, measurement_time, sweep, upper_bound};
use decotime::quad::QuadratureConfig;
use decotime::report;

/// Status codes mirroring the CLI exit-code contract.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtStatus {
    DtOk = 0,
    DtInvalidArgument = 1,
    DtConfigError = 2,
    DtNumericalError = 3,
}

/// Parsed scenario configuration (opaque).
pub struct DtScenario {
    config: ScenarioConfig,
}

/// Evolved trajectory samples (opaque).
pub struct DtTrajectory {
    inner: decotime::dynamics::Trajectory,
}

/// One trajectory sample in the measurement eigenbasis.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DtTrajectoryRow {
    pub t: f64,
    pub rho11: f64,
    pub re_rho12: f64,
    pub im_rho12: f64,
    pub abs_rho12: f64,
}

/// Measurement-time extraction result.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DtMeasurement {
    pub t_m: f64,
    pub upper_bound: f64,
    pub fraction: f64,
    pub lambda: f64,
    pub eta: f64,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DtStatus {
    match err.exit_code() {
        2 => DtStatus::DtConfigError,
        _ => DtStatus::DtNumericalError,
    }
}

fn fail(err: &Error) -> DtStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn invalid(message: &str) -> DtStatus {
    set_error(message);
    DtStatus::DtInvalidArgument
}

fn guarded<F: FnOnce() -> DtStatus>(body: F) -> DtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DtStatus::DtNumericalError
        }
    }
}

/// Version string of the underlying library; static storage, do not free.
#[no_mangle]
pub extern "C" fn dt_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Message of the last error on this thread; valid until the next failing
/// call on the same thread. Do not free.
#[no_mangle]
pub extern "C" fn dt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `t_M = -ln(f) / (2 lambda^2)`.
#[no_mangle]
pub extern "C" fn dt_upper_bound(lambda: f64, fraction: f64, out: *mut f64) -> DtStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out pointer is null");
        }
        match upper_bound(lambda, fraction) {
            Ok(v) => {
                unsafe { *out = v };
                DtStatus::DtOk
            }
            Err(e) => fail(&e),
        }
    })
}

/// Parse a `key = value` scenario config. On success writes a handle that
/// must be released with [`dt_scenario_free`].
#[no_mangle]
pub extern "C" fn dt_scenario_parse(text: *const c_char, out: *mut *mut DtScenario) -> DtStatus {
    guarded(|| {
        if text.is_null() || out.is_null() {
            return invalid("null argument");
        }
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(s) => s,
            Err(_) => return invalid("config text is not valid UTF-8"),
        };
        match ScenarioConfig::parse(text) {
            Ok(config) => {
                unsafe { *out = Box::into_raw(Box::new(DtScenario { config })) };
                DtStatus::DtOk
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a scenario handle; a null pointer is a no-op.
#[no_mangle]
pub extern "C" fn dt_scenario_free(scenario: *mut DtScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Normalized canonical text of a parsed scenario; free with
/// [`dt_string_free`].
#[no_mangle]
pub extern "C" fn dt_scenario_emit(
    scenario: *const DtScenario,
    out: *mut *mut c_char,
) -> DtStatus {
    guarded(|| {
        if scenario.is_null() || out.is_null() {
            return invalid("null argument");
        }
        let text = unsafe { &*scenario }.config.emit();
        match CString::new(text) {
            Ok(c) => {
                unsafe { *out = c.into_raw() };
                DtStatus::DtOk
            }
            Err(_) => invalid("emitted config contains NUL"),
        }
    })
}

fn run_trajectory(config: &ScenarioConfig) -> decotime::error::Result<decotime::dynamics::Trajectory> {
    let q = QuadratureConfig::from_env();
    let s = config.system()?;
    let b = config.bath()?;
    let rho0 = config.initial_state()?;
    let (t_end, samples) = config.time_window()?;
    match config.method.resolve(&s, &b) {
        decotime::dynamics::Method::AnalyticZ => {
            decotime::dynamics::analytic_z_trajectory(&rho0, t_end, samples, &s, &b, &q)
        }
        decotime::dynamics::Method::AnalyticX => {
            decotime::dynamics::analytic_x_trajectory(&rho0, t_end, samples, &s, &b, &q)
        }
        decotime::dynamics::Method::LindbladOnly => {
            decotime::dynamics::propagate_lindblad(&rho0, t_end, samples, &s)
        }
        decotime::dynamics::Method::HybridNumeric => {
            let mut c = PropagatorConfig::default();
            let steps = (t_end / c.resolve_dt(&s, &b)).ceil().max(1.0) as usize;
            c.output_stride = (steps / samples.max(1)).max(1);
            decotime::dynamics::propagate_hybrid(&rho0, t_end, &s, &b, &c, &q)
        }
    }
}

/// Evolve the scenario and return an opaque trajectory handle; release with
/// [`dt_trajectory_free`].
#[no_mangle]
pub extern "C" fn dt_trajectory_run(
    scenario: *const DtScenario,
    out: *mut *mut DtTrajectory,
) -> DtStatus {
    guarded(|| {
        if scenario.is_null() || out.is_null() {
            return invalid("null argument");
        }
        let config = &unsafe { &*scenario }.config;
        match run_trajectory(config) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(DtTrajectory { inner })) };
                DtStatus::DtOk
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of samples in a trajectory; 0 for a null handle.
#[no_mangle]
pub extern "C" fn dt_trajectory_len(trajectory: *const DtTrajectory) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    unsafe { &*trajectory }.inner.samples.len()
}

/// Copy sample `index` into `out`.
#[no_mangle]
pub extern "C" fn dt_trajectory_row(
    trajectory: *const DtTrajectory,
    index: usize,
    out: *mut DtTrajectoryRow,
) -> DtStatus {
    guarded(|| {
        if trajectory.is_null() || out.is_null() {
            return invalid("null argument");
        }
        let traj = &unsafe { &*trajectory }.inner;
        let Some(s) = traj.samples.get(index) else {
            return invalid("sample index out of range");
        };
        unsafe {
            *out = DtTrajectoryRow {
                t: s.t,
                rho11: s.state.rho11(),
                re_rho12: s.state.rho12().re,
                im_rho12: s.state.rho12().im,
                abs_rho12: s.coherence,
            };
        }
        DtStatus::DtOk
    })
}

/// Static name of the evolution method that produced the trajectory.
#[no_mangle]
pub extern "C" fn dt_trajectory_method(trajectory: *const DtTrajectory) -> *const c_char {
    if trajectory.is_null() {
        return std::ptr::null();
    }
    match unsafe { &*trajectory }.inner.method {
        decotime::dynamics::Method::AnalyticZ => "analytic_z\0".as_ptr() as *const c_char,
        decotime::dynamics::Method::AnalyticX => "analytic_x\0".as_ptr() as *const c_char,
        decotime::dynamics::Method::LindbladOnly => "lindblad\0".as_ptr() as *const c_char,
        decotime::dynamics::Method::HybridNumeric => "hybrid\0".as_ptr() as *const c_char,
    }
}

/// Release a trajectory handle; a null pointer is a no-op.
#[no_mangle]
pub extern "C" fn dt_trajectory_free(trajectory: *mut DtTrajectory) {
    if !trajectory.is_null() {
        drop(unsafe { Box::from_raw(trajectory) });
    }
}

/// Extract the measurement time of the scenario (threshold.f required).
#[no_mangle]
pub extern "C" fn dt_measure(scenario: *const DtScenario, out: *mut DtMeasurement) -> DtStatus {
    guarded(|| {
        if scenario.is_null() || out.is_null() {
            return invalid("null argument");
        }
        let config = &unsafe { &*scenario }.config;
        let result = (|| {
            let q = QuadratureConfig::from_env();
            let s = config.system()?;
            let b = config.bath()?;
            let rho0 = config.initial_state()?;
            let threshold = config.threshold()?;
            let bound = upper_bound(s.lambda, threshold.fraction)?;
            let mut model = build_model(
                config.method.resolve(&s, &b),
                &rho0,
                &s,
                &b,
                &PropagatorConfig::default(),
                &q,
                20.0 * bound,
            )?;
            measurement_time(model.as_mut(), &s, &threshold)
        })();
        match result {
            Ok(r) => {
                unsafe {
                    *out = DtMeasurement {
                        t_m: r.t_m,
                        upper_bound: r.upper_bound,
                        fraction: config.fraction.unwrap_or(f64::NAN),
                        lambda: config.lambda,
                        eta: config.eta,
                        residual: r.residual,
                    };
                }
                DtStatus::DtOk
            }
            Err(e) => fail(&e),
        }
    })
}

/// Render a command's output ("trajectory" | "tmeasure" | "sweep") in the
/// given format ("csv" | "json") exactly as the CLI would emit it. Free the
/// string with [`dt_string_free`].
#[no_mangle]
pub extern "C" fn dt_render(
    scenario: *const DtScenario,
    command: *const c_char,
    format: *const c_char,
    out: *mut *mut c_char,
) -> DtStatus {
    guarded(|| {
        if scenario.is_null() || command.is_null() || format.is_null() || out.is_null() {
            return invalid("null argument");
        }
        let config = &unsafe { &*scenario }.config;
        let command = match unsafe { CStr::from_ptr(command) }.to_str() {
            Ok(s) => s,
            Err(_) => return invalid("command is not valid UTF-8"),
        };
        let format = match unsafe { CStr::from_ptr(format) }
            .to_str()
            .map_err(|_| ())
            .and_then(|s| s.parse::<OutputFormat>().map_err(|_| ()))
        {
            Ok(f) => f,
            Err(()) => return invalid("format must be csv or json"),
        };
        let rendered = match command {
            "trajectory" => run_trajectory(config).map(|traj| match format {
                OutputFormat::Csv => report::trajectory_csv(config, &traj),
                OutputFormat::Json => report::trajectory_json(config, &traj),
            }),
            "tmeasure" => (|| {
                let q = QuadratureConfig::from_env();
                let s = config.system()?;
                let b = config.bath()?;
                let threshold = config.threshold()?;
                let bound = upper_bound(s.lambda, threshold.fraction)?;
                let mut model = build_model(
                    config.method.resolve(&s, &b),
                    &config.initial_state()?,
                    &s,
                    &b,
                    &PropagatorConfig::default(),
                    &q,
                    20.0 * bound,
                )?;
                let r = measurement_time(model.as_mut(), &s, &threshold)?;
                Ok(report::tmeasure_json(config, &r))
            })(),
            "sweep" => (|| {
                let q = QuadratureConfig::from_env();
                let spec = config.sweep_spec()?;
                let rows = sweep(&spec, &PropagatorConfig::default(), &q)?;
                Ok(match format {
                    OutputFormat::Csv => report::sweep_csv(config, &rows),
                    OutputFormat::Json => report::sweep_json(config, &rows),
                })
            })(),
            other => return invalid(&format!("unknown command `{other}`")),
        };
        match rendered {
            Ok(text) => match CString::new(text) {
                Ok(c) => {
                    unsafe { *out = c.into_raw() };
                    DtStatus::DtOk
                }
                Err(_) => invalid("rendered output contains NUL"),
            },
            Err(e) => fail(&e),
        }
    })
}

/// Free a string returned by this library; a null pointer is a no-op.
#[no_mangle]
pub extern "C" fn dt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Run the built-in consistency checks; returns the number of failures.
#[no_mangle]
pub extern "C" fn dt_selftest() -> i32 {
    match catch_unwind(|| {
        decotime::selftest::run_all()
            .iter()
            .filter(|(_, r)| r.is_err())
            .count() as i32
    }) {
        Ok(n) => n,
        Err(_) => -1,
    }
}
