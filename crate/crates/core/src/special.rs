//! Complex log-Gamma via the Lanczos approximation (g = 7, 9 coefficients),
//! with the reflection formula for Re z < 0.5.

use num_complex::Complex64;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
// GSL coefficient set for g = 7
const LANCZOS_COEF: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

const LN_2PI_OVER_2: f64 = 0.918938533204672741780329736406; // ln(2 pi)/2

/// Principal-branch `ln Gamma(z)`.
///
/// Relative accuracy is about 1e-13 for Re z > 0. Returns [`Error::PoleOfGamma`]
/// at the poles z = 0, -1, -2, ...
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Err(Error::PoleOfGamma { re: z.re, im: z.im });
    }
    if z.re < 0.5 {
        // ln Gamma(z) = ln(pi / sin(pi z)) - ln Gamma(1 - z)
        let pi = std::f64::consts::PI;
        let s = (pi * z).sin();
        if s.norm() == 0.0 {
            return Err(Error::PoleOfGamma { re: z.re, im: z.im });
        }
        return Ok(Complex64::from(pi).ln() - s.ln() - log_gamma_complex(Complex64::new(1.0, 0.0) - z)?);
    }

    let x = z - 1.0;
    let mut acc = Complex64::from(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let w = x + LANCZOS_G + 0.5;
    Ok(LN_2PI_OVER_2 + (x + 0.5) * w.ln() - w + acc.ln())
}
