//! Thermal bath with Ohmic spectral density `J(w) = eta w exp(-w/w_c)`:
//! correlation functions, the sigma_z dephasing exponent and its
//! Gamma-function closed form, and the spectral/time integrals entering the
//! sigma_x analytic solution.
//!
//! The bath enters only through `J(w)` and the thermal kernel
//! `coth(beta w / 2)`; mode operators are never materialized.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_oscillatory, Quadrature, QuadratureConfig};
use crate::special::log_gamma_complex;

/// Inverse temperature; `Infinite` is the distinguished T = 0 state where
/// `coth(beta w / 2) = 1` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn is_finite(&self) -> bool {
        matches!(self, Beta::Finite(_))
    }
}

impl std::fmt::Display for Beta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => write!(f, "zero-temperature"),
        }
    }
}

/// Environment parameters: coupling `eta`, cutoff `w_c`, inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub eta: f64,
    pub omega_c: f64,
    pub beta: Beta,
}

impl BathParams {
    pub fn new(eta: f64, omega_c: f64, beta: Beta) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::config("bath.eta", "coupling eta must be >= 0"));
        }
        if !(omega_c > 0.0) {
            return Err(Error::config("bath.omega_c", "cutoff must be positive"));
        }
        if let Beta::Finite(b) = beta {
            if !(b > 0.0) {
                return Err(Error::config(
                    "bath.beta",
                    "inverse temperature must be positive (or zero-temperature)",
                ));
            }
        }
        Ok(BathParams {
            eta,
            omega_c,
            beta,
        })
    }

    pub fn zero_temperature(eta: f64, omega_c: f64) -> Result<Self> {
        BathParams::new(eta, omega_c, Beta::Infinite)
    }

    /// Thermal kernel coth(beta w / 2); 1 at zero temperature.
    fn thermal_kernel(&self, w: f64) -> f64 {
        match self.beta {
            Beta::Infinite => 1.0,
            Beta::Finite(beta) => 1.0 / (0.5 * beta * w).tanh(),
        }
    }
}

/// Ohmic spectral density `J(w) = eta w exp(-w / w_c)` for `w >= 0`.
pub fn ohmic_j(w: f64, p: &BathParams) -> Result<f64> {
    if w < 0.0 {
        return Err(Error::NegativeFrequency(w));
    }
    Ok(p.eta * w * (-w / p.omega_c).exp())
}

// switch to half-period panel integration once cos(w t) / sin(w t) packs more
// than ~10 periods into the quadrature window
const OSCILLATORY_SWITCH: f64 = 30.0;

fn thermal_cos_moment(
    t: f64,
    p: &BathParams,
    q: &QuadratureConfig,
    weight: impl Fn(f64) -> f64 + Copy,
    limit_at_zero: f64,
    context: &'static str,
) -> Result<Quadrature> {
    let wc = p.omega_c;
    let cutoff = q.cutoff_multiplier * wc;
    let f = move |w: f64| {
        if w < 1e-14 * wc {
            limit_at_zero
        } else {
            weight(w) * p.thermal_kernel(w) * (w * t).cos()
        }
    };
    if t * wc > OSCILLATORY_SWITCH {
        let env = move |w: f64| weight(w).abs() * p.thermal_kernel(w.max(1e-14 * wc));
        integrate_oscillatory(f, cutoff, t, env, q, context)
    } else {
        integrate(f, 0.0, cutoff, q, context)
    }
}

/// Dephasing exponent of the sigma_z coherence,
/// `-4 eta int_0^inf dw e^{-w/w_c} coth(beta w/2) (1 - cos(w t)) / w`,
/// i.e. the double time-frequency integral after the inner time integration
/// has been done analytically. Always <= 0; zero at t = 0 or eta = 0.
///
/// Works at any temperature; the zero-temperature kernel is `coth -> 1`.
pub fn decoherence_exponent_z(t: f64, p: &BathParams, q: &QuadratureConfig) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::config("time", format!("t = {t} must be >= 0")));
    }
    if t == 0.0 || p.eta == 0.0 {
        return Ok(0.0);
    }
    let wc = p.omega_c;
    let cutoff = q.cutoff_multiplier * wc;
    // (1 - cos(w t))/w with the w -> 0 limits: t^2/beta at finite beta
    // (after the thermal kernel), 0 at zero temperature
    let limit_at_zero = match p.beta {
        Beta::Finite(beta) => t * t / beta,
        Beta::Infinite => 0.0,
    };
    let f = move |w: f64| {
        if w < 1e-14 * wc {
            limit_at_zero
        } else {
            let half = (0.5 * w * t).sin();
            (-w / wc).exp() * p.thermal_kernel(w) * 2.0 * half * half / w
        }
    };
    let quad = if t * wc > OSCILLATORY_SWITCH {
        let env = move |w: f64| (-w / wc).exp() * p.thermal_kernel(w.max(1e-14 * wc)) * 2.0 / w;
        integrate_oscillatory(f, cutoff, t, env, q, "decoherence_exponent_z")?
    } else {
        integrate(f, 0.0, cutoff, q, "decoherence_exponent_z")?
    };
    Ok(-4.0 * p.eta * quad.value)
}

/// Gamma-function closed form of the sigma_z coherence decay factor: the
/// bracketed Gamma-ratio product raised to the power `2 eta`. Defined for
/// finite temperature only; equals `exp(decoherence_exponent_z(t))`.
pub fn gamma_decoherence_factor(t: f64, p: &BathParams) -> Result<f64> {
    let beta = match p.beta {
        Beta::Finite(b) => b,
        Beta::Infinite => return Err(Error::ZeroTemperatureUnsupported),
    };
    if t == 0.0 || p.eta == 0.0 {
        return Ok(1.0);
    }
    let a = 1.0 / (p.omega_c * beta);
    let y = t / beta;
    // ln of the bracket; Gamma(x+iy) Gamma(x-iy) = |Gamma(x+iy)|^2 for real x
    let lg_a = log_gamma_complex(Complex64::new(a, 0.0))?.re;
    let lg_a1 = log_gamma_complex(Complex64::new(a + 1.0, 0.0))?.re;
    let lg_ay = log_gamma_complex(Complex64::new(a, y))?.re;
    let lg_a1y = log_gamma_complex(Complex64::new(a + 1.0, y))?.re;
    let ln_bracket = 2.0 * (lg_ay - lg_a) + 2.0 * (lg_a1y - lg_a1);
    Ok((2.0 * p.eta * ln_bracket).exp())
}

/// Thermal bath correlation function
/// `C(t) = int_0^inf dw J(w) [coth(beta w/2) cos(w t) - i sin(w t)]`.
///
/// At zero temperature this equals `eta w_c^2 / (1 + i w_c t)^2`.
pub fn bath_correlation(t: f64, p: &BathParams, q: &QuadratureConfig) -> Result<Complex64> {
    if t < 0.0 {
        return Err(Error::config("time", format!("t = {t} must be >= 0")));
    }
    if p.eta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let wc = p.omega_c;
    let cutoff = q.cutoff_multiplier * wc;
    let jw = move |w: f64| p.eta * w * (-w / wc).exp();

    // real part: J coth cos; w -> 0 limit is 2 eta / beta at finite beta
    let re_limit = match p.beta {
        Beta::Finite(beta) => 2.0 * p.eta / beta,
        Beta::Infinite => 0.0,
    };
    let re = thermal_cos_moment(t, p, q, jw, re_limit, "bath_correlation re")?;

    // imaginary part: -J sin, temperature independent
    let fim = move |w: f64| jw(w) * (w * t).sin();
    let im = if t * wc > OSCILLATORY_SWITCH {
        integrate_oscillatory(fim, cutoff, t, jw, q, "bath_correlation im")?
    } else {
        integrate(fim, 0.0, cutoff, q, "bath_correlation im")?
    };
    Ok(Complex64::new(re.value, -im.value))
}

fn check_omega(big_omega: f64) -> Result<()> {
    if !(big_omega > 0.0) {
        return Err(Error::DegenerateOmega(big_omega));
    }
    Ok(())
}

/// `g0 = int_0^inf dw w/(4 Omega^2 + w^2) e^{-w/w_c}`.
pub fn g0(p: &BathParams, big_omega: f64, q: &QuadratureConfig) -> Result<f64> {
    check_omega(big_omega)?;
    let wc = p.omega_c;
    let f = move |w: f64| w / (4.0 * big_omega * big_omega + w * w) * (-w / wc).exp();
    Ok(integrate(f, 0.0, q.cutoff_multiplier * wc, q, "g0")?.value)
}

/// `g1(t) = 2 int_0^inf dw w/(4 Omega^2 + w^2) e^{-w/w_c} cos(w t)`.
pub fn g1(t: f64, p: &BathParams, big_omega: f64, q: &QuadratureConfig) -> Result<f64> {
    check_omega(big_omega)?;
    let wc = p.omega_c;
    let weight = move |w: f64| 2.0 * w / (4.0 * big_omega * big_omega + w * w) * (-w / wc).exp();
    let cutoff = q.cutoff_multiplier * wc;
    let f = move |w: f64| weight(w) * (w * t).cos();
    let quad = if t * wc > OSCILLATORY_SWITCH {
        integrate_oscillatory(f, cutoff, t, move |w| weight(w).abs(), q, "g1")?
    } else {
        integrate(f, 0.0, cutoff, q, "g1")?
    };
    Ok(quad.value)
}

/// `g2(t) = (1/Omega) int_0^inf dw w^2/(4 Omega^2 + w^2) e^{-w/w_c} sin(w t)`.
pub fn g2(t: f64, p: &BathParams, big_omega: f64, q: &QuadratureConfig) -> Result<f64> {
    check_omega(big_omega)?;
    let wc = p.omega_c;
    let weight =
        move |w: f64| w * w / (big_omega * (4.0 * big_omega * big_omega + w * w)) * (-w / wc).exp();
    let cutoff = q.cutoff_multiplier * wc;
    let f = move |w: f64| weight(w) * (w * t).sin();
    let quad = if t * wc > OSCILLATORY_SWITCH {
        integrate_oscillatory(f, cutoff, t, move |w| weight(w).abs(), q, "g2")?
    } else {
        integrate(f, 0.0, cutoff, q, "g2")?
    };
    Ok(quad.value)
}

// exp(2 lambda^2 t) overflows past this point; callers bound t
const EXP_ARG_LIMIT: f64 = 700.0;

fn nested_time_integral(
    t: f64,
    rate_sign: f64,
    lambda: f64,
    p: &BathParams,
    big_omega: f64,
    q: &QuadratureConfig,
    inner: impl Fn(f64, &BathParams, f64, &QuadratureConfig) -> Result<f64>,
    context: &'static str,
) -> Result<f64> {
    check_omega(big_omega)?;
    if t < 0.0 {
        return Err(Error::config("time", format!("t = {t} must be >= 0")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if rate_sign * 2.0 * lambda * lambda * t > EXP_ARG_LIMIT {
        return Err(Error::NonFinite(context));
    }
    let f = |u: f64| -> f64 {
        let g = inner(u, p, big_omega, q).unwrap_or(f64::NAN);
        (rate_sign * 2.0 * lambda * lambda * u).exp() * g
    };
    let quad = integrate(f, 0.0, t, q, context)?;
    if !quad.value.is_finite() {
        return Err(Error::NonFinite(context));
    }
    Ok(quad.value)
}

/// `A_+(t) = int_0^t e^{+2 lambda^2 t'} g1(t') dt'`.
pub fn a_plus(t: f64, lambda: f64, p: &BathParams, big_omega: f64, q: &QuadratureConfig) -> Result<f64> {
    nested_time_integral(t, 1.0, lambda, p, big_omega, q, g1, "a_plus")
}

/// `A_-(t) = int_0^t e^{-2 lambda^2 t'} g1(t') dt'`.
pub fn a_minus(t: f64, lambda: f64, p: &BathParams, big_omega: f64, q: &QuadratureConfig) -> Result<f64> {
    nested_time_integral(t, -1.0, lambda, p, big_omega, q, g1, "a_minus")
}

/// `B_+(t) = int_0^t e^{+2 lambda^2 t'} g2(t') dt'`.
pub fn b_plus(t: f64, lambda: f64, p: &BathParams, big_omega: f64, q: &QuadratureConfig) -> Result<f64> {
    nested_time_integral(t, 1.0, lambda, p, big_omega, q, g2, "b_plus")
}

/// `B_-(t) = int_0^t e^{-2 lambda^2 t'} g2(t') dt'`.
pub fn b_minus(t: f64, lambda: f64, p: &BathParams, big_omega: f64, q: &QuadratureConfig) -> Result<f64> {
    nested_time_integral(t, -1.0, lambda, p, big_omega, q, g2, "b_minus")
}

/// Correlation values cached on a uniform time lattice with cubic Hermite
/// interpolation between nodes. Backs the memory integral of the hybrid
/// propagator so each kernel node costs an interpolation, not a quadrature.
#[derive(Debug, Clone)]
pub struct CorrelationTable {
    step: f64,
    values: Vec<Complex64>,
}

impl CorrelationTable {
    pub fn build(p: &BathParams, q: &QuadratureConfig, t_max: f64, step_hint: f64) -> Result<Self> {
        let mut step = (0.01 / p.omega_c).min(step_hint.max(1e-6));
        if let Beta::Finite(b) = p.beta {
            step = step.min(0.01 * b);
        }
        let n = ((t_max / step).ceil() as usize).clamp(32, 2_000_000) + 3;
        let step = t_max.max(step) / (n - 3) as f64;
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            values.push(bath_correlation(k as f64 * step, p, q)?);
        }
        Ok(CorrelationTable { step, values })
    }

    pub fn t_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// C(tau) by cubic Hermite interpolation with centered-difference slopes.
    pub fn eval(&self, tau: f64) -> Complex64 {
        let n = self.values.len();
        let pos = (tau / self.step).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let s = pos - i as f64;
        let v0 = self.values[i];
        let v1 = self.values[i + 1];
        let m0 = if i == 0 {
            v1 - v0
        } else {
            (v1 - self.values[i - 1]) * Complex64::from(0.5)
        };
        let m1 = if i + 2 >= n {
            v1 - v0
        } else {
            (self.values[i + 2] - v0) * Complex64::from(0.5)
        };
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        v0 * Complex64::from(h00)
            + m0 * Complex64::from(h10)
            + v1 * Complex64::from(h01)
            + m1 * Complex64::from(h11)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn thermal(eta: f64, wc: f64, beta: f64) -> BathParams {
        BathParams::new(eta, wc, Beta::Finite(beta)).unwrap()
    }

    #[test]
    fn ohmic_density_basics() {
        let p = BathParams::zero_temperature(1.0, 2.0).unwrap();
        assert_eq!(ohmic_j(0.0, &p).unwrap(), 0.0);
        assert_relative_eq!(
            ohmic_j(2.0, &p).unwrap(),
            2.0 * (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert!(matches!(
            ohmic_j(-1.0, &p),
            Err(Error::NegativeFrequency(_))
        ));
    }

    #[test]
    fn ohmic_density_peaks_at_cutoff() {
        let p = BathParams::zero_temperature(0.3, 1.7).unwrap();
        let peak = ohmic_j(p.omega_c, &p).unwrap();
        for w in [0.3, 1.0, 1.5, 2.0, 3.0, 5.0] {
            if (w - p.omega_c).abs() > 1e-12 {
                assert!(ohmic_j(w, &p).unwrap() < peak);
            }
        }
    }

    #[test]
    fn exponent_vanishes_at_zero_time_and_zero_coupling() {
        let p = thermal(0.05, 1.0, 1.0);
        assert_eq!(decoherence_exponent_z(0.0, &p, &cfg()).unwrap(), 0.0);
        let free = thermal(0.0, 1.0, 1.0);
        assert_eq!(decoherence_exponent_z(2.0, &free, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn exponent_pinned_value() {
        // golden value from an independent high-precision 2-D double
        // quadrature of the raw time-frequency integral
        let p = thermal(0.05, 1.0, 1.0);
        let e = decoherence_exponent_z(1.0, &p, &cfg()).unwrap();
        assert_relative_eq!(e, -0.19105456166474800, epsilon = 1e-8);
    }

    #[test]
    fn exponent_non_increasing_in_time() {
        for (beta, wc) in [(0.5, 1.0), (1.0, 1.0), (5.0, 0.7), (2.0, 2.0)] {
            let p = thermal(0.05, wc, beta);
            let mut last = 0.0;
            for k in 1..=20 {
                let t = 0.5 * k as f64;
                let e = decoherence_exponent_z(t, &p, &cfg()).unwrap();
                assert!(e <= last + 1e-12, "exponent increased at t={t}");
                last = e;
            }
        }
    }

    #[test]
    fn exponent_zero_temperature_closed_form() {
        // coth -> 1: exponent = -2 eta ln(1 + wc^2 t^2)
        let p = BathParams::zero_temperature(0.08, 1.3).unwrap();
        for t in [0.3, 1.0, 4.0, 20.0, 40.0] {
            let e = decoherence_exponent_z(t, &p, &cfg()).unwrap();
            let exact = -2.0 * p.eta * (1.0 + p.omega_c * p.omega_c * t * t).ln();
            assert_relative_eq!(e, exact, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn gamma_factor_matches_quadrature_exponent() {
        let p = thermal(0.05, 1.0, 1.0);
        let lhs = gamma_decoherence_factor(1.0, &p).unwrap();
        let rhs = decoherence_exponent_z(1.0, &p, &cfg()).unwrap().exp();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
    }

    #[test]
    fn gamma_factor_trivial_cases() {
        let p = thermal(0.05, 1.0, 1.0);
        assert_eq!(gamma_decoherence_factor(0.0, &p).unwrap(), 1.0);
        let free = thermal(0.0, 1.0, 1.0);
        assert_eq!(gamma_decoherence_factor(3.0, &free).unwrap(), 1.0);
        let t0 = BathParams::zero_temperature(0.05, 1.0).unwrap();
        assert!(matches!(
            gamma_decoherence_factor(1.0, &t0),
            Err(Error::ZeroTemperatureUnsupported)
        ));
        for t in [0.1, 1.0, 5.0] {
            let v = gamma_decoherence_factor(t, &p).unwrap();
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn correlation_zero_temperature_closed_form() {
        let p = BathParams::zero_temperature(0.4, 1.0).unwrap();
        for t in [0.0, 0.5, 2.0, 10.0, 35.0] {
            let c = bath_correlation(t, &p, &cfg()).unwrap();
            let z = Complex64::new(1.0, p.omega_c * t);
            let exact = Complex64::from(p.eta * p.omega_c * p.omega_c) / (z * z);
            assert!(
                (c - exact).norm() < 1e-10,
                "t={t}: {c} vs {exact} (diff {:.2e})",
                (c - exact).norm()
            );
        }
    }

    #[test]
    fn correlation_at_zero_time_is_second_moment() {
        let p = BathParams::zero_temperature(0.7, 1.5).unwrap();
        let c = bath_correlation(0.0, &p, &cfg()).unwrap();
        assert_relative_eq!(c.re, p.eta * p.omega_c * p.omega_c, max_relative = 1e-10);
        assert!(c.im.abs() < 1e-12);
    }

    #[test]
    fn correlation_vanishes_without_coupling() {
        let p = thermal(0.0, 1.0, 1.0);
        assert_eq!(
            bath_correlation(1.0, &p, &cfg()).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn spectral_integrals_identities_and_golden_values() {
        let p = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let q = cfg();
        // pinned by independent adaptive quadrature cross-checked against a
        // second node family
        assert_relative_eq!(
            g0(&p, 0.5, &q).unwrap(),
            0.34337796155642703,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            g0(&p, 1.0, &q).unwrap(),
            0.14454530303733242,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            g1(0.7, &p, 1.0, &q).unwrap(),
            0.14455296969964852,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            g2(0.7, &p, 1.0, &q).unwrap(),
            0.14252956594519373,
            epsilon = 1e-9
        );
        // g1(0) = 2 g0, g2(0) = 0
        assert_relative_eq!(
            g1(0.0, &p, 0.8, &q).unwrap(),
            2.0 * g0(&p, 0.8, &q).unwrap(),
            max_relative = 1e-10
        );
        assert_eq!(g2(0.0, &p, 0.8, &q).unwrap(), 0.0);
    }

    #[test]
    fn spectral_integrals_reject_degenerate_omega() {
        let p = BathParams::zero_temperature(0.05, 1.0).unwrap();
        assert!(matches!(
            g0(&p, 0.0, &cfg()),
            Err(Error::DegenerateOmega(_))
        ));
        assert!(matches!(
            g1(1.0, &p, -0.5, &cfg()),
            Err(Error::DegenerateOmega(_))
        ));
    }

    #[test]
    fn g1_g2_bounded_by_g1_at_zero() {
        let p = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let q = cfg();
        let bound = g1(0.0, &p, 1.0, &q).unwrap();
        for k in 0..=20 {
            let t = 0.5 * k as f64;
            assert!(g1(t, &p, 1.0, &q).unwrap().abs() <= bound + 1e-12);
            assert!(g2(t, &p, 1.0, &q).unwrap().abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn nested_integrals_vanish_at_zero_and_match_golden() {
        let p = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let q = cfg();
        for f in [a_plus, a_minus, b_plus, b_minus] {
            assert_eq!(f(0.0, 1.0, &p, 1.0, &q).unwrap(), 0.0);
        }
        // pinned by an independent composite-Simpson nested quadrature
        assert_relative_eq!(
            a_plus(1.0, 1.0, &p, 1.0, &q).unwrap(),
            0.49745777891537154,
            epsilon = 1e-8
        );
        assert_relative_eq!(
            b_plus(1.0, 1.0, &p, 1.0, &q).unwrap(),
            0.39203967820546825,
            epsilon = 1e-8
        );
        assert_relative_eq!(
            a_minus(1.0, 1.0, &p, 1.0, &q).unwrap(),
            0.10043319083685140,
            epsilon = 1e-8
        );
        assert_relative_eq!(
            b_minus(1.0, 1.0, &p, 1.0, &q).unwrap(),
            0.039533872762047789,
            epsilon = 1e-8
        );
    }

    #[test]
    fn a_plus_derivative_fundamental_theorem() {
        let p = BathParams::zero_temperature(0.05, 1.0).unwrap();
        let q = cfg();
        let (t0, lam) = (0.6, 1.0);
        let h = 1e-4;
        let d = (a_plus(t0 + h, lam, &p, 1.0, &q).unwrap()
            - a_plus(t0 - h, lam, &p, 1.0, &q).unwrap())
            / (2.0 * h);
        let expect = (2.0 * lam * lam * t0).exp() * g1(t0, &p, 1.0, &q).unwrap();
        assert_relative_eq!(d, expect, epsilon = 1e-6, max_relative = 1e-6);
    }

    #[test]
    fn nested_integral_overflow_guard() {
        let p = BathParams::zero_temperature(0.05, 1.0).unwrap();
        assert!(matches!(
            a_plus(500.0, 2.0, &p, 4.0, &cfg()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn correlation_table_tracks_direct_evaluation() {
        let p = thermal(0.3, 1.0, 2.0);
        let q = cfg();
        let table = CorrelationTable::build(&p, &q, 3.0, 0.005).unwrap();
        for k in 0..=30 {
            let tau = 0.1 * k as f64;
            let direct = bath_correlation(tau, &p, &q).unwrap();
            let interp = table.eval(tau);
            assert!(
                (direct - interp).norm() < 1e-8,
                "tau={tau}: interp off by {:.2e}",
                (direct - interp).norm()
            );
        }
    }

    #[test]
    fn quadrature_tolerance_halving_is_stable() {
        // halving tolerances moves results by less than the error estimate
        let p = thermal(0.05, 1.0, 1.0);
        let loose = QuadratureConfig::default();
        let tight = QuadratureConfig {
            abs_tol: loose.abs_tol / 2.0,
            rel_tol: loose.rel_tol / 2.0,
            ..loose
        };
        for t in [0.5, 2.0, 8.0] {
            let a = decoherence_exponent_z(t, &p, &loose).unwrap();
            let b = decoherence_exponent_z(t, &p, &tight).unwrap();
            assert!((a - b).abs() <= loose.abs_tol.max(1e-12));
        }
    }

    #[test]
    fn bath_params_validation() {
        assert!(BathParams::new(-0.1, 1.0, Beta::Infinite).is_err());
        assert!(BathParams::new(0.1, 0.0, Beta::Infinite).is_err());
        assert!(BathParams::new(0.1, 1.0, Beta::Finite(0.0)).is_err());
        assert!(BathParams::new(0.0, 1.0, Beta::Finite(2.0)).is_ok());
    }
}
