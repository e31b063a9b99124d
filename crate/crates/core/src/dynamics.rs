//! Time evolution of the measured qubit: analytic weak-coupling solutions for
//! both observables, the pure-Lindblad (eta = 0) reference, and a direct
//! integrator of the hybrid measurement + noise master equation.

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{
    a_plus, b_plus, decoherence_exponent_z, g0, gamma_decoherence_factor, BathParams, Beta,
    CorrelationTable,
};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureConfig};
use crate::qubit::{sigma_x, sigma_z, Basis, DensityMatrix, Operator2};
use crate::superop::{
    commutator_generator, conjugate_picture, left_mul, lindblad_generator, right_mul, superop_exp,
    unvectorize, vectorize, Superoperator,
};

/// Which observable the apparatus measures (the Lindblad operator is
/// `lambda * sigma_alpha`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    SigmaZ,
    SigmaX,
}

impl Observable {
    pub fn eigenbasis(&self) -> Basis {
        match self {
            Observable::SigmaZ => Basis::Z,
            Observable::SigmaX => Basis::X,
        }
    }

    pub fn operator(&self) -> Operator2 {
        match self {
            Observable::SigmaZ => sigma_z(),
            Observable::SigmaX => sigma_x(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::SigmaZ => "sigma_z",
            Observable::SigmaX => "sigma_x",
        }
    }
}

impl std::fmt::Display for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// System and measurement parameters; `lambda^2` is the measurement rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub omega0: f64,
    pub lambda: f64,
    pub observable: Observable,
}

impl SystemParams {
    pub fn new(omega0: f64, lambda: f64, observable: Observable) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::ZeroStrength(lambda));
        }
        if !(omega0 >= 0.0) {
            return Err(Error::config(
                "system.omega0",
                "level splitting must be >= 0",
            ));
        }
        Ok(SystemParams {
            omega0,
            lambda,
            observable,
        })
    }

    /// `Omega = sqrt(lambda^4 - 4 omega0^2)`; real only for
    /// `lambda^4 >= 4 omega0^2`.
    pub fn big_omega(&self) -> Result<f64> {
        let disc = self.lambda.powi(4) - 4.0 * self.omega0 * self.omega0;
        if disc <= 0.0 {
            return Err(Error::DegenerateOmega(disc));
        }
        Ok(disc.sqrt())
    }

    /// Lindblad coupling operator `L = lambda * sigma_alpha`.
    pub fn measurement_operator(&self) -> Operator2 {
        self.observable.operator() * Complex64::from(self.lambda)
    }

    /// System Hamiltonian `H = omega0 * sigma_z` (hbar = 1).
    pub fn hamiltonian(&self) -> Operator2 {
        sigma_z() * Complex64::from(self.omega0)
    }

    /// Full measurement generator (Liouvillian + Lindbladian) in the z basis.
    pub fn measurement_generator(&self) -> Superoperator {
        lindblad_generator(&self.hamiltonian(), &[self.measurement_operator()])
            .expect("sigma_z Hamiltonian is Hermitian")
    }
}

/// Which evolution path produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    AnalyticZ,
    AnalyticX,
    LindbladOnly,
    HybridNumeric,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::AnalyticZ => "analytic_z",
            Method::AnalyticX => "analytic_x",
            Method::LindbladOnly => "lindblad",
            Method::HybridNumeric => "hybrid",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Integrator controls for [`propagate_hybrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    /// Time step; `None` selects `min(1e-3/lambda^2, 1e-3 * beta)` at finite
    /// temperature and `min(1e-3/lambda^2, 1e-3/w_c)` at T = 0.
    pub dt: Option<f64>,
    /// Gauss-Legendre nodes for the memory integral on `[0, t]`.
    pub kernel_nodes: usize,
    /// Emit every n-th step into the trajectory.
    pub output_stride: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            dt: None,
            kernel_nodes: 200,
            output_stride: 1,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::config("propagator.dt", "time step must be positive"));
            }
        }
        if self.kernel_nodes < 16 {
            return Err(Error::config(
                "propagator.kernel_nodes",
                "at least 16 kernel nodes required",
            ));
        }
        if self.output_stride == 0 {
            return Err(Error::config(
                "propagator.output_stride",
                "stride must be >= 1",
            ));
        }
        Ok(())
    }

    pub fn resolve_dt(&self, s: &SystemParams, b: &BathParams) -> f64 {
        if let Some(dt) = self.dt {
            return dt;
        }
        let rate = 1e-3 / (s.lambda * s.lambda);
        match b.beta {
            Beta::Finite(beta) => rate.min(1e-3 * beta),
            Beta::Infinite => rate.min(1e-3 / b.omega_c),
        }
    }
}

/// One sample of an evolved state, tagged with the measured-basis coherence.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: DensityMatrix,
    pub coherence: f64,
}

/// Ordered evolution samples plus method tag and numerical diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub method: Method,
    /// Smallest state eigenvalue seen along the run (positivity diagnostic;
    /// checked, never projected away).
    pub min_eigenvalue: f64,
    pub max_trace_defect: f64,
}

impl Trajectory {
    fn new(method: Method) -> Self {
        Trajectory {
            samples: Vec::new(),
            method,
            min_eigenvalue: f64::INFINITY,
            max_trace_defect: 0.0,
        }
    }

    fn push(&mut self, t: f64, state: DensityMatrix) {
        let (lo, _) = state.eigenvalues();
        self.min_eigenvalue = self.min_eigenvalue.min(lo);
        self.max_trace_defect = self.max_trace_defect.max((state.trace() - 1.0).abs());
        self.samples.push(TrajectorySample {
            t,
            state,
            coherence: state.coherence(),
        });
    }

    /// Structural checks: strictly increasing times from 0, unit trace,
    /// coherence consistency, and positivity to `positivity_tol`.
    pub fn validate(&self, positivity_tol: f64) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InvalidState("empty trajectory".into()));
        }
        if self.samples[0].t != 0.0 {
            return Err(Error::InvalidState("trajectory must start at t = 0".into()));
        }
        for w in self.samples.windows(2) {
            if w[1].t <= w[0].t {
                return Err(Error::InvalidState("non-increasing sample times".into()));
            }
        }
        for s in &self.samples {
            if (s.coherence - s.state.coherence()).abs() > 1e-14 {
                return Err(Error::InvalidState("stale coherence cache".into()));
            }
        }
        if self.max_trace_defect > 1e-9 {
            return Err(Error::StepSizeTooLarge {
                drift: self.max_trace_defect,
            });
        }
        if self.min_eigenvalue < -positivity_tol {
            return Err(Error::InvalidState(format!(
                "positivity violated: min eigenvalue {:.3e}",
                self.min_eigenvalue
            )));
        }
        Ok(())
    }
}

/// Closed-form evolution for the sigma_z measurement:
/// populations frozen, coherence damped by the bath factor times
/// `e^{-2 lambda^2 t}` and rotated at `2 omega0`.
///
/// At finite temperature the bath factor is the Gamma-function closed form;
/// at T = 0 it falls back to the quadrature exponent with `coth -> 1`.
pub fn analytic_z(
    rho0: &DensityMatrix,
    t: f64,
    s: &SystemParams,
    b: &BathParams,
    q: &QuadratureConfig,
) -> Result<DensityMatrix> {
    if s.observable != Observable::SigmaZ {
        return Err(Error::WrongObservable {
            expected: "sigma_z",
            got: s.observable.name(),
        });
    }
    let rho0 = rho0.change_basis(Basis::Z);
    let bath_factor = match b.beta {
        Beta::Finite(_) => gamma_decoherence_factor(t, b)?,
        Beta::Infinite => decoherence_exponent_z(t, b, q)?.exp(),
    };
    let lam2 = s.lambda * s.lambda;
    let phase = Complex64::new(0.0, -2.0 * s.omega0 * t).exp();
    let rho12 = rho0.rho12() * Complex64::from(bath_factor * (-2.0 * lam2 * t).exp()) * phase;
    DensityMatrix::new(rho0.rho11(), rho12, Basis::Z)
}

fn analytic_x_preconditions(s: &SystemParams, b: &BathParams) -> Result<()> {
    if s.observable != Observable::SigmaX {
        return Err(Error::WrongObservable {
            expected: "sigma_x",
            got: s.observable.name(),
        });
    }
    if b.beta.is_finite() {
        return Err(Error::RequiresZeroTemperature);
    }
    if s.omega0 != 0.0 {
        return Err(Error::RequiresZeroSplitting(s.omega0));
    }
    Ok(())
}

fn analytic_x_state(
    rho0_z: &DensityMatrix,
    t: f64,
    s: &SystemParams,
    b: &BathParams,
    g0_value: f64,
    a_plus_t: f64,
    b_plus_t: f64,
    a_minus_t: f64,
    b_minus_t: f64,
) -> DensityMatrix {
    let lam2 = s.lambda * s.lambda;
    let eta = b.eta;
    let re0 = rho0_z.rho12().re;
    let im0 = rho0_z.rho12().im;

    let rho11_x = 0.5
        + re0
            * (-8.0 * eta * lam2 * g0_value * t + 4.0 * eta * lam2 * (a_minus_t - b_minus_t))
                .exp();
    let re12 = (2.0 * rho0_z.rho11() - 1.0) / 2.0 * (-2.0 * lam2 * t).exp();
    let im12 = -im0
        * (-2.0 * lam2 * t + 8.0 * eta * lam2 * g0_value * t
            - 4.0 * eta * lam2 * (a_plus_t + b_plus_t))
            .exp();
    DensityMatrix::from_analytic(rho11_x, Complex64::new(re12, im12), Basis::X)
}

/// Closed-form evolution for the sigma_x measurement at T = 0, omega0 = 0.
/// Initial conditions are read in the z eigenbasis; the result is expressed
/// in the x (measurement) eigenbasis.
pub fn analytic_x(
    rho0: &DensityMatrix,
    t: f64,
    s: &SystemParams,
    b: &BathParams,
    q: &QuadratureConfig,
) -> Result<DensityMatrix> {
    analytic_x_preconditions(s, b)?;
    let rho0_z = rho0.change_basis(Basis::Z);
    let big_omega = s.big_omega()?;
    let g0v = g0(b, big_omega, q)?;
    let ap = a_plus(t, s.lambda, b, big_omega, q)?;
    let bp = b_plus(t, s.lambda, b, big_omega, q)?;
    let am = crate::bath::a_minus(t, s.lambda, b, big_omega, q)?;
    let bm = crate::bath::b_minus(t, s.lambda, b, big_omega, q)?;
    Ok(analytic_x_state(&rho0_z, t, s, b, g0v, ap, bp, am, bm))
}

/// Sampled analytic sigma_x evolution; the nested time integrals are
/// accumulated segment by segment across the sample grid instead of being
/// recomputed from 0 for every sample.
pub fn analytic_x_trajectory(
    rho0: &DensityMatrix,
    t_end: f64,
    n_samples: usize,
    s: &SystemParams,
    b: &BathParams,
    q: &QuadratureConfig,
) -> Result<Trajectory> {
    analytic_x_preconditions(s, b)?;
    let rho0_z = rho0.change_basis(Basis::Z);
    let big_omega = s.big_omega()?;
    let g0v = g0(b, big_omega, q)?;
    let lam2 = s.lambda * s.lambda;

    let mut traj = Trajectory::new(Method::AnalyticX);
    traj.push(0.0, analytic_x_state(&rho0_z, 0.0, s, b, g0v, 0.0, 0.0, 0.0, 0.0));
    if t_end == 0.0 {
        return Ok(traj);
    }

    let n = n_samples.max(1);
    let dt = t_end / n as f64;
    let (mut ap, mut bp, mut am, mut bm) = (0.0, 0.0, 0.0, 0.0);
    for k in 1..=n {
        let (t0, t1) = ((k - 1) as f64 * dt, k as f64 * dt);
        if 2.0 * lam2 * t1 > 700.0 {
            return Err(Error::NonFinite("analytic_x picture factor"));
        }
        let seg = |sign: f64, g: fn(f64, &BathParams, f64, &QuadratureConfig) -> Result<f64>| {
            integrate(
                |u| {
                    (sign * 2.0 * lam2 * u).exp()
                        * g(u, b, big_omega, q).unwrap_or(f64::NAN)
                },
                t0,
                t1,
                q,
                "analytic_x segment",
            )
            .map(|r| r.value)
        };
        ap += seg(1.0, crate::bath::g1)?;
        bp += seg(1.0, crate::bath::g2)?;
        am += seg(-1.0, crate::bath::g1)?;
        bm += seg(-1.0, crate::bath::g2)?;
        traj.push(t1, analytic_x_state(&rho0_z, t1, s, b, g0v, ap, bp, am, bm));
    }
    Ok(traj)
}

/// Sampled analytic sigma_z evolution on a uniform grid.
pub fn analytic_z_trajectory(
    rho0: &DensityMatrix,
    t_end: f64,
    n_samples: usize,
    s: &SystemParams,
    b: &BathParams,
    q: &QuadratureConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new(Method::AnalyticZ);
    traj.push(0.0, analytic_z(rho0, 0.0, s, b, q)?);
    if t_end == 0.0 {
        return Ok(traj);
    }
    let n = n_samples.max(1);
    for k in 1..=n {
        let t = t_end * k as f64 / n as f64;
        traj.push(t, analytic_z(rho0, t, s, b, q)?);
    }
    Ok(traj)
}

/// Exact semigroup evolution under the measurement generator alone (eta = 0),
/// sampled on a uniform grid and expressed in the measurement eigenbasis.
pub fn propagate_lindblad(
    rho0: &DensityMatrix,
    t_end: f64,
    n_samples: usize,
    s: &SystemParams,
) -> Result<Trajectory> {
    let gen = s.measurement_generator();
    let rho0_z = rho0.change_basis(Basis::Z);
    let v0 = vectorize(rho0_z.matrix());
    let basis = s.observable.eigenbasis();

    let mut traj = Trajectory::new(Method::LindbladOnly);
    traj.push(0.0, rho0_z.change_basis(basis));
    if t_end == 0.0 {
        return Ok(traj);
    }
    let n = n_samples.max(1);
    for k in 1..=n {
        let t = t_end * k as f64 / n as f64;
        let prop = superop_exp(&gen, t)?;
        let m = unvectorize(&prop.apply_vec(&v0));
        let state = DensityMatrix::from_propagated(&m, Basis::Z, 1e-10)?;
        traj.push(t, state.change_basis(basis));
    }
    Ok(traj)
}

/// Resumable integrator of the hybrid master equation.
///
/// The picture state `sigma(t) = Tr_B alpha(t)` obeys the time-local equation
/// `d sigma/dt = R(t) sigma(t)` with the memory-kernel generator
///
/// ```text
/// R(t) = - e^{-S t} [sigma_z, .] W(t) e^{S t}
/// W(t) = int_0^t dtau e^{S tau} (C(tau) Lz - conj(C(tau)) Rz) e^{-S tau}
/// ```
///
/// built from the bath correlation `C` on Gauss-Legendre nodes. The physical
/// state is recovered as `rho_S(t) = e^{S t} sigma(t)`. Steps are classical
/// RK4; boundary states are cached so the coherence can be re-evaluated at
/// arbitrary times during root refinement without re-propagating from zero.
pub struct HybridPropagator {
    s_gen: Superoperator,
    ad_z: Superoperator,
    lz: Superoperator,
    rz: Superoperator,
    table: Option<CorrelationTable>,
    bath: BathParams,
    quad_cfg: QuadratureConfig,
    nodes: Vec<(f64, f64)>,
    dt: f64,
    basis: Basis,
    /// sigma at step boundaries k * dt
    states: Vec<Vector4<Complex64>>,
}

impl HybridPropagator {
    pub fn new(
        rho0: &DensityMatrix,
        s: &SystemParams,
        b: &BathParams,
        c: &PropagatorConfig,
        q: &QuadratureConfig,
        t_horizon: f64,
    ) -> Result<Self> {
        c.validate()?;
        let dt = c.resolve_dt(s, b);
        let table = if b.eta == 0.0 {
            None
        } else {
            Some(CorrelationTable::build(b, q, t_horizon.max(dt), dt)?)
        };
        let rho0_z = rho0.change_basis(Basis::Z);
        Ok(HybridPropagator {
            s_gen: s.measurement_generator(),
            ad_z: commutator_generator(&sigma_z())
                .expect("sigma_z is Hermitian")
                .scale(Complex64::new(0.0, 1.0)), // undo the -i: plain [sigma_z, .]
            lz: left_mul(&sigma_z()),
            rz: right_mul(&sigma_z()),
            table,
            bath: *b,
            quad_cfg: *q,
            nodes: crate::quad::gauss_legendre(c.kernel_nodes),
            dt,
            basis: s.observable.eigenbasis(),
            states: vec![vectorize(rho0_z.matrix())],
        })
    }

    /// Grow the correlation table when a query runs past the built horizon,
    /// so cached boundary states stay valid.
    fn ensure_table_horizon(&mut self, t: f64) -> Result<()> {
        if let Some(table) = &self.table {
            if t > table.t_max() {
                self.table = Some(CorrelationTable::build(
                    &self.bath,
                    &self.quad_cfg,
                    1.5 * t,
                    self.dt,
                )?);
            }
        }
        Ok(())
    }

    /// Memory-kernel generator R(t).
    fn generator_at(&self, t: f64) -> Result<Superoperator> {
        let table = match &self.table {
            None => return Ok(Superoperator::zero()),
            Some(tb) => tb,
        };
        if t == 0.0 {
            return Ok(Superoperator::zero());
        }
        let half = 0.5 * t;
        let mut w = Superoperator::zero();
        for &(x, wt) in &self.nodes {
            let tau = half * (x + 1.0);
            let c = table.eval(tau);
            let kernel = self
                .lz
                .scale(c)
                .sub(&self.rz.scale(c.conj()));
            // e^{S tau} kernel e^{-S tau}
            let conjugated = conjugate_picture(&self.s_gen, -tau, &kernel)?;
            w = w.add(&conjugated.scale(Complex64::from(wt * half)));
        }
        let r = conjugate_picture(&self.s_gen, t, &self.ad_z.compose(&w))?
            .scale(Complex64::from(-1.0));
        if !r.is_finite() {
            return Err(Error::NonFinite("hybrid kernel generator"));
        }
        Ok(r)
    }

    fn rk4_step(&self, t: f64, h: f64, sigma: &Vector4<Complex64>) -> Result<Vector4<Complex64>> {
        let r1 = self.generator_at(t)?;
        let r2 = self.generator_at(t + 0.5 * h)?;
        let r4 = self.generator_at(t + h)?;
        let hc = Complex64::from(h);
        let k1 = r1.apply_vec(sigma);
        let k2 = r2.apply_vec(&(sigma + k1 * (hc * 0.5)));
        let k3 = r2.apply_vec(&(sigma + k2 * (hc * 0.5)));
        let k4 = r4.apply_vec(&(sigma + k3 * hc));
        let two = Complex64::from(2.0);
        let next = sigma + (k1 + k2 * two + k3 * two + k4) * (hc / 6.0);
        if !next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("hybrid RK4 step"));
        }
        Ok(next)
    }

    fn ensure_boundary(&mut self, k: usize) -> Result<()> {
        while self.states.len() <= k {
            let i = self.states.len() - 1;
            let t = i as f64 * self.dt;
            let next = self.rk4_step(t, self.dt, &self.states[i])?;
            self.states.push(next);
        }
        Ok(())
    }

    /// Picture state sigma(t), stepping across cached boundaries plus one
    /// partial RK4 step.
    fn sigma_at(&mut self, t: f64) -> Result<Vector4<Complex64>> {
        self.ensure_table_horizon(t)?;
        let k = (t / self.dt).floor() as usize;
        self.ensure_boundary(k)?;
        let t_k = k as f64 * self.dt;
        let rem = t - t_k;
        if rem <= 1e-15 * t.max(1.0) {
            return Ok(self.states[k]);
        }
        self.rk4_step(t_k, rem, &self.states[k])
    }

    /// Physical state rho_S(t) = e^{S t} sigma(t) in the measurement basis.
    pub fn state_at(&mut self, t: f64) -> Result<DensityMatrix> {
        let sigma = self.sigma_at(t)?;
        let back = superop_exp(&self.s_gen, t)?;
        let m = unvectorize(&back.apply_vec(&sigma));
        let state = DensityMatrix::from_propagated(&m, Basis::Z, 1e-6)?;
        Ok(state.change_basis(self.basis))
    }

    /// Measured-basis coherence |rho12(t)|.
    pub fn coherence_at(&mut self, t: f64) -> Result<f64> {
        Ok(self.state_at(t)?.coherence())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Integrate the hybrid master equation up to `t_end`, sampling every
/// `output_stride` steps (plus the endpoint). Trace is preserved to 1e-9 or
/// the run fails with `StepSizeTooLarge`.
pub fn propagate_hybrid(
    rho0: &DensityMatrix,
    t_end: f64,
    s: &SystemParams,
    b: &BathParams,
    c: &PropagatorConfig,
    q: &QuadratureConfig,
) -> Result<Trajectory> {
    let mut prop = HybridPropagator::new(rho0, s, b, c, q, t_end)?;
    let mut traj = Trajectory::new(Method::HybridNumeric);
    traj.push(0.0, prop.state_at(0.0)?);
    if t_end == 0.0 {
        return Ok(traj);
    }
    let n_steps = (t_end / prop.dt).ceil() as usize;
    let mut k = c.output_stride;
    while k < n_steps {
        let t = k as f64 * prop.dt;
        traj.push(t, prop.state_at(t)?);
        k += c.output_stride;
    }
    traj.push(t_end, prop.state_at(t_end)?);
    if traj.max_trace_defect > 1e-9 {
        return Err(Error::StepSizeTooLarge {
            drift: traj.max_trace_defect,
        });
    }
    Ok(traj)
}

/// Sampled coherence modulus with linear interpolation between samples,
/// suitable for bracketing threshold crossings.
pub struct CoherenceSamples {
    ts: Vec<f64>,
    values: Vec<f64>,
}

pub fn coherence_modulus(traj: &Trajectory) -> CoherenceSamples {
    CoherenceSamples {
        ts: traj.samples.iter().map(|s| s.t).collect(),
        values: traj.samples.iter().map(|s| s.coherence).collect(),
    }
}

impl CoherenceSamples {
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn initial(&self) -> f64 {
        self.values[0]
    }

    /// Linear interpolation; clamps outside the sampled window.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.values[0];
        }
        if t >= self.ts[n - 1] {
            return self.values[n - 1];
        }
        let i = self.ts.partition_point(|&x| x < t).max(1) - 1;
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let s = (t - t0) / (t1 - t0);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    /// First sample interval [t_i, t_{i+1}] whose right end dips to or below
    /// the threshold.
    pub fn first_crossing_bracket(&self, threshold: f64) -> Option<(f64, f64)> {
        for i in 1..self.ts.len() {
            if self.values[i] <= threshold {
                return Some((self.ts[i - 1], self.ts[i]));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn paper_state() -> DensityMatrix {
        DensityMatrix::reference_initial_state()
    }

    #[test]
    fn system_params_validation() {
        assert!(matches!(
            SystemParams::new(0.0, 0.0, Observable::SigmaZ),
            Err(Error::ZeroStrength(_))
        ));
        let s = SystemParams::new(0.3, 1.2, Observable::SigmaZ).unwrap();
        let expect = (1.2f64.powi(4) - 4.0 * 0.09).sqrt();
        assert_relative_eq!(s.big_omega().unwrap(), expect);
        // lambda^4 < 4 omega0^2 has no real Omega
        let s = SystemParams::new(1.0, 1.0, Observable::SigmaX).unwrap();
        assert!(matches!(s.big_omega(), Err(Error::DegenerateOmega(_))));
    }

    #[test]
    fn analytic_z_at_zero_time_is_identity() {
        let s = SystemParams::new(0.5, 1.0, Observable::SigmaZ).unwrap();
        let b = BathParams::new(0.05, 1.0, Beta::Finite(1.0)).unwrap();
        let rho = paper_state();
        let out = analytic_z(&rho, 0.0, &s, &b, &q()).unwrap();
        assert_eq!(out.rho11(), rho.rho11());
        assert!((out.rho12() - rho.rho12()).norm() < 1e-15);
    }

    #[test]
    fn analytic_z_free_case_is_pure_exponential() {
        let s = SystemParams::new(0.5, 1.0, Observable::SigmaZ).unwrap();
        let b = BathParams::new(0.0, 1.0, Beta::Finite(1.0)).unwrap();
        let rho = paper_state();
        let t = 0.8;
        let out = analytic_z(&rho, t, &s, &b, &q()).unwrap();
        let expect = rho.rho12()
            * Complex64::from((-2.0 * t).exp())
            * Complex64::new(0.0, -2.0 * s.omega0 * t).exp();
        assert!((out.rho12() - expect).norm() < 1e-14);
        assert_eq!(out.rho11(), rho.rho11());
    }

    #[test]
    fn analytic_z_population_constancy() {
        let s = SystemParams::new(1.3, 0.8, Observable::SigmaZ).unwrap();
        let b = BathParams::new(0.08, 2.0, Beta::Finite(0.7)).unwrap();
        let rho = DensityMatrix::new(0.73, Complex64::new(0.1, 0.2), Basis::Z).unwrap();
        for t in [0.1, 0.5, 2.0, 5.0] {
            let out = analytic_z(&rho, t, &s, &b, &q()).unwrap();
            assert_eq!(out.rho11(), rho.rho11());
        }
    }

    #[test]
    fn analytic_z_weak_coupling_matches_quadrature_oracle() {
        // |rho12(t)|/|rho12(0)| = exp(exponent) * e^{-2 lambda^2 t}
        let s = SystemParams::new(0.5, 1.0, Observable::SigmaZ).unwrap();
        let b = BathParams::new(0.05, 1.0, Beta::Finite(1.0)).unwrap();
        let rho = paper_state();
        let t = 0.5;
        let out = analytic_z(&rho, t, &s, &b, &q()).unwrap();
        let expect =
            decoherence_exponent_z(t, &b, &q()).unwrap().exp() * (-2.0f64 * t).exp();
        assert_relative_eq!(
            out.coherence() / rho.coherence(),
            expect,
            max_relative = 1e-6
        );
    }

    #[test]
    fn analytic_z_rejects_wrong_observable() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::new(0.05, 1.0, Beta::Finite(1.0)).unwrap();
        assert!(matches!(
            analytic_z(&paper_state(), 1.0, &s, &b, &q()),
            Err(Error::WrongObservable { .. })
        ));
    }

    #[test]
    fn analytic_x_at_zero_time_equals_basis_change() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let rho = paper_state();
        let out = analytic_x(&rho, 0.0, &s, &b, &q()).unwrap();
        let direct = rho.change_basis(Basis::X);
        assert!((out.rho12() - direct.rho12()).norm() < 1e-12);
        assert_relative_eq!(out.rho11(), direct.rho11(), epsilon = 1e-12);
    }

    #[test]
    fn analytic_x_free_case_decays_exponentially() {
        let s = SystemParams::new(0.0, 1.3, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(0.0, 1.0).unwrap();
        let rho = paper_state();
        let t = 0.6;
        let out = analytic_x(&rho, t, &s, &b, &q()).unwrap();
        let rho_x0 = rho.change_basis(Basis::X);
        let decay = (-2.0 * s.lambda * s.lambda * t).exp();
        assert!((out.rho12() - rho_x0.rho12() * Complex64::from(decay)).norm() < 1e-12);
    }

    #[test]
    fn analytic_x_requires_zero_temperature_and_splitting() {
        let rho = paper_state();
        let b_warm = BathParams::new(0.05, 1.0, Beta::Finite(1.0)).unwrap();
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        assert!(matches!(
            analytic_x(&rho, 1.0, &s, &b_warm, &q()),
            Err(Error::RequiresZeroTemperature)
        ));
        let b = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let s_split = SystemParams::new(0.3, 4.0, Observable::SigmaX).unwrap();
        assert!(matches!(
            analytic_x(&rho, 1.0, &s_split, &b, &q()),
            Err(Error::RequiresZeroSplitting(_))
        ));
    }

    #[test]
    fn analytic_x_matches_golden_point() {
        // |rho12^(x)(1)| for the reference state, lambda=1, eta=0.05, wc=1
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let out = analytic_x(&paper_state(), 1.0, &s, &b, &q()).unwrap();
        assert_relative_eq!(out.coherence(), 0.042434136223630203, epsilon = 1e-9);
    }

    #[test]
    fn analytic_x_trajectory_consistent_with_pointwise() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let traj = analytic_x_trajectory(&paper_state(), 1.2, 12, &s, &b, &q()).unwrap();
        traj.validate(1e-8).unwrap();
        for k in [3usize, 7, 12] {
            let sm = &traj.samples[k];
            let direct = analytic_x(&paper_state(), sm.t, &s, &b, &q()).unwrap();
            assert!(
                (sm.state.rho12() - direct.rho12()).norm() < 1e-9,
                "t={}: {:.3e}",
                sm.t,
                (sm.state.rho12() - direct.rho12()).norm()
            );
        }
    }

    #[test]
    fn lindblad_sigma_z_coherence_decay() {
        let s = SystemParams::new(0.4, 1.1, Observable::SigmaZ).unwrap();
        let traj = propagate_lindblad(&paper_state(), 1.0, 20, &s).unwrap();
        traj.validate(1e-10).unwrap();
        let c0 = traj.samples[0].coherence;
        for sm in &traj.samples {
            let expect = c0 * (-2.0 * s.lambda * s.lambda * sm.t).exp();
            assert_relative_eq!(sm.coherence, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn lindblad_matches_analytic_z_without_bath() {
        let s = SystemParams::new(0.7, 0.9, Observable::SigmaZ).unwrap();
        let b = BathParams::new(0.0, 1.0, Beta::Finite(1.0)).unwrap();
        let traj = propagate_lindblad(&paper_state(), 1.5, 10, &s).unwrap();
        for sm in &traj.samples {
            let exact = analytic_z(&paper_state(), sm.t, &s, &b, &q()).unwrap();
            assert!((sm.state.rho12() - exact.rho12()).norm() < 1e-12);
            assert!((sm.state.rho11() - exact.rho11()).abs() < 1e-12);
        }
    }

    #[test]
    fn lindblad_sigma_x_matches_analytic_x_without_bath() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(0.0, 1.0).unwrap();
        let traj = propagate_lindblad(&paper_state(), 1.0, 8, &s).unwrap();
        for sm in &traj.samples {
            let exact = analytic_x(&paper_state(), sm.t, &s, &b, &q()).unwrap();
            assert!((sm.state.rho12() - exact.rho12()).norm() < 1e-10);
        }
    }

    #[test]
    fn lindblad_zero_horizon_single_sample() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaZ).unwrap();
        let traj = propagate_lindblad(&paper_state(), 0.0, 50, &s).unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.samples[0].t, 0.0);
    }

    #[test]
    fn hybrid_without_bath_coincides_with_lindblad() {
        let s = SystemParams::new(0.2, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(0.0, 1.0).unwrap();
        let c = PropagatorConfig {
            output_stride: 100,
            ..Default::default()
        };
        let traj = propagate_hybrid(&paper_state(), 1.0, &s, &b, &c, &q()).unwrap();
        for sm in &traj.samples {
            let twin = propagate_lindblad(&paper_state(), sm.t.max(1e-12), 1, &s).unwrap();
            let exact = twin.samples.last().unwrap();
            assert!(
                (sm.state.rho12() - exact.state.rho12()).norm() < 1e-9,
                "t={}",
                sm.t
            );
        }
    }

    #[test]
    fn hybrid_sigma_z_reproduces_analytic_z() {
        // the sigma_z kernel is diagonal, so the integrated equation must
        // reproduce the closed form at any coupling
        let s = SystemParams::new(0.5, 1.0, Observable::SigmaZ).unwrap();
        let b = BathParams::new(0.05, 1.0, Beta::Finite(1.0)).unwrap();
        let c = PropagatorConfig {
            output_stride: 200,
            ..Default::default()
        };
        let traj = propagate_hybrid(&paper_state(), 1.0, &s, &b, &c, &q()).unwrap();
        traj.validate(1e-8).unwrap();
        for sm in traj.samples.iter().skip(1) {
            let exact = analytic_z(&paper_state(), sm.t, &s, &b, &q()).unwrap();
            assert_relative_eq!(sm.coherence, exact.coherence(), max_relative = 1e-6);
        }
    }

    #[test]
    fn hybrid_sigma_x_weak_coupling_tracks_analytic_x() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let c = PropagatorConfig {
            output_stride: 250,
            ..Default::default()
        };
        let traj = propagate_hybrid(&paper_state(), 1.0, &s, &b, &c, &q()).unwrap();
        for sm in traj.samples.iter().skip(1) {
            let exact = analytic_x(&paper_state(), sm.t, &s, &b, &q()).unwrap();
            let rel = (sm.coherence - exact.coherence()).abs() / exact.coherence();
            assert!(rel < 1e-4, "t={}: rel={rel:.2e}", sm.t);
        }
    }

    #[test]
    fn hybrid_trace_preserved() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(1.0, 1.0).unwrap();
        let c = PropagatorConfig {
            output_stride: 50,
            ..Default::default()
        };
        let traj = propagate_hybrid(&paper_state(), 0.8, &s, &b, &c, &q()).unwrap();
        assert!(traj.max_trace_defect < 1e-9);
    }

    #[test]
    fn coherence_modulus_interpolates() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaZ).unwrap();
        let traj = propagate_lindblad(&paper_state(), 1.0, 100, &s).unwrap();
        let samples = coherence_modulus(&traj);
        assert_eq!(samples.len(), 101);
        assert_relative_eq!(samples.initial(), 0.5, epsilon = 1e-12);
        let mid = samples.eval(0.505);
        let exact = 0.5 * (-2.0f64 * 0.505).exp();
        assert!((mid - exact).abs() < 1e-4); // linear interpolation error
        let bracket = samples.first_crossing_bracket(0.3 * 0.5).unwrap();
        assert!(bracket.0 < 0.26 && 0.26 < bracket.1);
    }

    #[test]
    fn step_halving_changes_little() {
        let s = SystemParams::new(0.0, 1.0, Observable::SigmaX).unwrap();
        let b = BathParams::zero_temperature(0.5, 1.0).unwrap();
        let coarse = PropagatorConfig {
            dt: Some(2e-3),
            output_stride: 100,
            ..Default::default()
        };
        let fine = PropagatorConfig {
            dt: Some(1e-3),
            output_stride: 200,
            ..Default::default()
        };
        let ta = propagate_hybrid(&paper_state(), 0.8, &s, &b, &coarse, &q()).unwrap();
        let tb = propagate_hybrid(&paper_state(), 0.8, &s, &b, &fine, &q()).unwrap();
        for (a, b) in ta.samples.iter().zip(tb.samples.iter()) {
            assert!((a.t - b.t).abs() < 1e-12);
            assert!(
                (a.coherence - b.coherence).abs() < 1e-6,
                "t={}: {:.2e}",
                a.t,
                (a.coherence - b.coherence).abs()
            );
        }
    }
}
