//! Adaptive Gauss-Kronrod quadrature with an oscillatory panel mode.
//!
//! The bath integrals all live on `[0, W * w_c]` with an `exp(-w / w_c)`
//! envelope, so truncation at the cutoff multiplier `W` is certified by the
//! envelope itself (tail < e^{-W}). Two integration modes:
//!
//! * plain global-adaptive G7-K15 bisection, worst interval first;
//! * half-period panels for integrands carrying `cos(w t)` / `sin(w t)` with
//!   large `t`, each panel integrated adaptively and the panel series summed
//!   with compensated (Kahan) accumulation.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and truncation controls for the frequency quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute tolerance on the integral value.
    pub abs_tol: f64,
    /// Relative tolerance on the integral value.
    pub rel_tol: f64,
    /// Truncate improper frequency integrals at `cutoff_multiplier * w_c`.
    pub cutoff_multiplier: f64,
    /// Cap on interval bisections before giving up.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            cutoff_multiplier: 50.0,
            max_subdivisions: 2000,
        }
    }
}

/// Environment override for the absolute tolerance (power-user escape hatch).
pub const QUAD_TOL_ENV: &str = "DECOTIME_QUAD_TOL";

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::config(
                "quadrature.tolerance",
                "tolerances must be positive",
            ));
        }
        if !(self.cutoff_multiplier >= 10.0) {
            return Err(Error::config(
                "quadrature.cutoff_multiplier",
                "cutoff multiplier must be >= 10",
            ));
        }
        Ok(())
    }

    /// Default config with the `DECOTIME_QUAD_TOL` override applied when set.
    pub fn from_env() -> Self {
        let mut cfg = QuadratureConfig::default();
        if let Ok(s) = std::env::var(QUAD_TOL_ENV) {
            if let Ok(tol) = s.trim().parse::<f64>() {
                if tol > 0.0 {
                    cfg.abs_tol = tol;
                }
            }
        }
        cfg
    }
}

/// Integral value with its accumulated error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights. QUADPACK values.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7-K15 rule application; returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // odd Kronrod indices are the embedded Gauss nodes
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK-style error rescaling
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0_f64.min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

#[derive(Debug)]
struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Globally adaptive G7-K15 integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
    context: &'static str,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
        });
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total_value = v;
    let mut total_error = e;

    let mut splits = 0usize;
    while total_error > cfg.abs_tol.max(cfg.rel_tol * total_value.abs()) {
        if splits >= cfg.max_subdivisions {
            return Err(Error::QuadratureFailure {
                context,
                estimate: total_error,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval has collapsed to machine precision; accept what we have
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Interval {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Interval {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        splits += 1;
    }

    // re-sum from the heap for a tighter floating-point total
    let mut sum = KahanSum::new();
    let mut err = KahanSum::new();
    for iv in heap.iter() {
        sum.add(iv.value);
        err.add(iv.error);
    }
    Ok(Quadrature {
        value: sum.value(),
        error: err.value(),
    })
}

/// Integration of an integrand oscillating as `cos(w t)` or `sin(w t)` in the
/// variable `w` over `[0, b]`, split into half-period panels `pi / t` wide.
///
/// Each panel runs through the adaptive rule with a budgeted tolerance; the
/// alternating panel series is accumulated with compensated summation. The
/// summation stops early once the integrand envelope `env_bound(w)` certifies
/// that the whole remaining tail is below tolerance.
pub fn integrate_oscillatory<F, E>(
    f: F,
    b: f64,
    t: f64,
    env_bound: E,
    cfg: &QuadratureConfig,
    context: &'static str,
) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
    E: Fn(f64) -> f64,
{
    assert!(t > 0.0, "oscillatory mode needs a positive frequency scale");
    let panel = std::f64::consts::PI / t;
    let n_panels = (b / panel).ceil() as usize;
    let per_panel = QuadratureConfig {
        abs_tol: cfg.abs_tol / (n_panels.max(1) as f64),
        rel_tol: cfg.rel_tol,
        max_subdivisions: 200,
        ..*cfg
    };

    let mut sum = KahanSum::new();
    let mut err = KahanSum::new();
    let mut lo = 0.0f64;
    while lo < b {
        let hi = (lo + panel).min(b);
        let q = integrate(&f, lo, hi, &per_panel, context)?;
        sum.add(q.value);
        err.add(q.error);
        // tail bound: |remaining| <= env_bound(hi) * (b - hi)
        if env_bound(hi) * (b - hi) < 0.5 * cfg.abs_tol {
            break;
        }
        lo = hi;
    }
    Ok(Quadrature {
        value: sum.value(),
        error: err.value(),
    })
}

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2);
    let mut rule = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((-x, w));
        if !(n % 2 == 1 && i == m - 1) {
            rule.push((x, w));
        }
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_exponential_exactly() {
        let cfg = QuadratureConfig::default();
        let q = integrate(|x| (-x).exp(), 0.0, 50.0, &cfg, "test").unwrap();
        assert_relative_eq!(q.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_ohmic_moment() {
        // int_0^inf w e^{-w} dw = 1
        let cfg = QuadratureConfig::default();
        let q = integrate(|w| w * (-w).exp(), 0.0, 50.0, &cfg, "test").unwrap();
        assert_relative_eq!(q.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn oscillatory_panels_match_closed_form() {
        // int_0^inf w e^{-w} cos(w t) dw = Re 1/(1+it)^2 = (1-t^2)/(1+t^2)^2
        let cfg = QuadratureConfig::default();
        let t = 40.0;
        let q = integrate_oscillatory(
            |w| w * (-w).exp() * (w * t).cos(),
            50.0,
            t,
            |w| w * (-w).exp(),
            &cfg,
            "test",
        )
        .unwrap();
        let exact = (1.0 - t * t) / (1.0 + t * t).powi(2);
        assert!((q.value - exact).abs() < 1e-11, "got {} want {}", q.value, exact);
    }

    #[test]
    fn adaptive_handles_narrow_peak() {
        // Lorentzian of width 1e-3 around 1; exact arctan difference
        let cfg = QuadratureConfig::default();
        let g = 1e-3;
        let q = integrate(
            |x| g / ((x - 1.0) * (x - 1.0) + g * g),
            0.0,
            2.0,
            &cfg,
            "test",
        )
        .unwrap();
        let exact = ((1.0f64 / g).atan() - (-1.0f64 / g).atan()).abs();
        assert_relative_eq!(q.value, exact, epsilon = 1e-9);
    }

    #[test]
    fn failure_reported_when_budget_exhausted() {
        let cfg = QuadratureConfig {
            max_subdivisions: 2,
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let r = integrate(|x| (200.0 * x).sin() / (x + 1e-4), 0.0, 30.0, &cfg, "test");
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        // n-point GL is exact for degree 2n-1
        for n in [2usize, 5, 16, 64] {
            let rule = gauss_legendre(n);
            assert_eq!(rule.len(), n);
            let wsum: f64 = rule.iter().map(|(_, w)| w).sum();
            assert_relative_eq!(wsum, 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let val: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!(val.abs() < 1e-12); // odd power integrates to zero
            let val2: f64 = rule
                .iter()
                .map(|(x, w)| w * x.powi((deg - 1) as i32))
                .sum();
            let exact = 2.0 / deg as f64;
            assert_relative_eq!(val2, exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            cutoff_multiplier: 5.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
