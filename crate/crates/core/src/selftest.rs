//! Built-in consistency checks behind `decotime selftest`: the
//! oracle-equivalence facts the rest of the toolkit leans on, runnable in a
//! few seconds without any config.

use num_complex::Complex64;

use crate::bath::{
    a_minus, a_plus, b_minus, b_plus, bath_correlation, decoherence_exponent_z, g0, g1, g2,
    gamma_decoherence_factor, BathParams, Beta,
};
use crate::config::ScenarioConfig;
use crate::dynamics::{Method, Observable, PropagatorConfig, SystemParams};
use crate::error::{Error, Result};
use crate::measurement::{build_model, measurement_time, upper_bound, ThresholdConfig};
use crate::quad::QuadratureConfig;
use crate::qubit::{sigma_x, sigma_z, DensityMatrix, Operator2};
use crate::superop::{lindblad_generator, superop_exp};

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidState(format!("selftest: {what}")))
    }
}

fn gamma_form_matches_exponent(q: &QuadratureConfig) -> Result<()> {
    for (t, eta, beta, wc) in [
        (1.0, 0.05, 1.0, 1.0),
        (2.0, 0.1, 2.5, 1.0),
        (0.3, 0.02, 0.5, 1.0),
        (5.0, 0.07, 0.3, 2.0),
    ] {
        let p = BathParams::new(eta, wc, Beta::Finite(beta))?;
        let closed = gamma_decoherence_factor(t, &p)?;
        let integral = decoherence_exponent_z(t, &p, q)?.exp();
        let rel = (closed - integral).abs() / integral;
        check(
            rel < 1e-6,
            &format!("gamma closed form off by {rel:.2e} at t={t}, beta={beta}"),
        )?;
    }
    Ok(())
}

fn zero_temperature_correlation(q: &QuadratureConfig) -> Result<()> {
    let p = BathParams::zero_temperature(0.4, 1.0)?;
    for t in [0.0, 0.7, 3.0, 20.0, 45.0] {
        let c = bath_correlation(t, &p, q)?;
        let z = Complex64::new(1.0, p.omega_c * t);
        let exact = Complex64::from(p.eta * p.omega_c * p.omega_c) / (z * z);
        check(
            (c - exact).norm() < 1e-10,
            &format!("T=0 correlation off by {:.2e} at t={t}", (c - exact).norm()),
        )?;
    }
    Ok(())
}

fn free_measurement_matches_bound(q: &QuadratureConfig) -> Result<()> {
    let s = SystemParams::new(0.0, 1.0, Observable::SigmaZ)?;
    let b = BathParams::new(0.0, 1.0, Beta::Finite(1.0))?;
    let cfg = ThresholdConfig::new(0.3)?;
    let mut model = build_model(
        Method::LindbladOnly,
        &DensityMatrix::reference_initial_state(),
        &s,
        &b,
        &PropagatorConfig::default(),
        q,
        10.0,
    )?;
    let r = measurement_time(model.as_mut(), &s, &cfg)?;
    let bound = upper_bound(1.0, 0.3)?;
    check(
        ((r.t_m - bound) / bound).abs() < 1e-8,
        &format!("eta=0 t_M = {} vs bound {}", r.t_m, bound),
    )
}

fn semigroup_property() -> Result<()> {
    let k = lindblad_generator(
        &(sigma_z() * Complex64::from(0.4)),
        &[sigma_x() * Complex64::from(0.9)],
    )?;
    let e1 = superop_exp(&k, 0.3)?;
    let e2 = superop_exp(&k, 0.9)?;
    let e12 = superop_exp(&k, 1.2)?;
    check(
        (e1.compose(&e2).matrix() - e12.matrix()).norm() < 1e-10,
        "semigroup property violated",
    )
}

fn spectral_identities(q: &QuadratureConfig) -> Result<()> {
    let p = BathParams::zero_temperature(0.05, 1.0)?;
    let big_omega = 1.0;
    let g0v = g0(&p, big_omega, q)?;
    let g1v = g1(0.0, &p, big_omega, q)?;
    check(
        ((g1v - 2.0 * g0v) / g0v).abs() < 1e-8,
        &format!("g1(0) = {g1v} vs 2 g0 = {}", 2.0 * g0v),
    )?;
    check(g2(0.0, &p, big_omega, q)? == 0.0, "g2(0) != 0")?;
    for f in [a_plus, a_minus, b_plus, b_minus] {
        check(f(0.0, 1.0, &p, big_omega, q)? == 0.0, "A/B(0) != 0")?;
    }
    Ok(())
}

fn upper_bound_scaling() -> Result<()> {
    let base = upper_bound(1.0, 0.3)?;
    for c in [2.0, 4.0] {
        let scaled = upper_bound(c, 0.3)?;
        check(
            ((scaled - base / (c * c)) / scaled).abs() < 1e-14,
            "1/lambda^2 scaling violated",
        )?;
    }
    check(upper_bound(1.0, 1.0 - 1e-13)? < 1e-12, "f -> 1 limit")?;
    Ok(())
}

fn config_round_trip() -> Result<()> {
    let text = "system.lambda = 1.25\nsystem.observable = sigma_x\nbath.eta = 0.05\nbath.beta = zero-temperature\nthreshold.f = 0.3\ntime.t_end = 1.5\n";
    let cfg = ScenarioConfig::parse(text)?;
    let again = ScenarioConfig::parse(&cfg.emit())?;
    check(cfg == again, "config round trip not the identity")
}

fn hermitian_ops_sane() -> Result<()> {
    let bad = Operator2::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    check(
        lindblad_generator(&bad, &[]).is_err(),
        "non-Hermitian Hamiltonian accepted",
    )
}

/// All checks with their names; failures carry a diagnostic.
pub fn run_all() -> Vec<(&'static str, Result<()>)> {
    let q = QuadratureConfig::from_env();
    vec![
        (
            "gamma closed form == exp(2-D dephasing integral)",
            gamma_form_matches_exponent(&q),
        ),
        (
            "T=0 bath correlation == eta wc^2/(1+i wc t)^2",
            zero_temperature_correlation(&q),
        ),
        (
            "eta=0 measurement time == -ln(f)/(2 lambda^2)",
            free_measurement_matches_bound(&q),
        ),
        ("propagator semigroup property", semigroup_property()),
        (
            "spectral integral identities (g1(0)=2g0, g2(0)=0, A/B(0)=0)",
            spectral_identities(&q),
        ),
        ("upper bound scaling and limits", upper_bound_scaling()),
        ("config round-trip identity", config_round_trip()),
        ("Hermiticity guards", hermitian_ops_sane()),
    ]
}
