//! Liouville-space algebra for one qubit: 4x4 superoperators acting on
//! column-stacked density matrices.
//!
//! Vectorization convention (fixed, asserted by tests):
//! `vec(rho) = (rho11, rho21, rho12, rho22)^T` (column stacking), so that
//! `vec(A X B) = (B^T kron A) vec(X)`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qubit::{hermiticity_defect, Operator2};

/// 4x4 complex superoperator in the column-stacking convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superoperator(Matrix4<Complex64>);

/// Column-stack a 2x2 matrix: (m11, m21, m12, m22)^T.
pub fn vectorize(m: &Operator2) -> Vector4<Complex64> {
    Vector4::new(m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)])
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &Vector4<Complex64>) -> Operator2 {
    Operator2::new(v[0], v[2], v[1], v[3])
}

/// Left-multiplication superoperator: vec(A X) = (I kron A) vec(X).
pub fn left_mul(a: &Operator2) -> Superoperator {
    Superoperator(Operator2::identity().kronecker(a))
}

/// Right-multiplication superoperator: vec(X B) = (B^T kron I) vec(X).
pub fn right_mul(b: &Operator2) -> Superoperator {
    Superoperator(b.transpose().kronecker(&Operator2::identity()))
}

impl Superoperator {
    pub fn zero() -> Self {
        Superoperator(Matrix4::zeros())
    }

    pub fn identity() -> Self {
        Superoperator(Matrix4::identity())
    }

    pub fn from_matrix(m: Matrix4<Complex64>) -> Self {
        Superoperator(m)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn apply_vec(&self, v: &Vector4<Complex64>) -> Vector4<Complex64> {
        self.0 * v
    }

    /// Apply to a 2x2 operator through the vectorization round trip.
    pub fn apply(&self, m: &Operator2) -> Operator2 {
        unvectorize(&(self.0 * vectorize(m)))
    }

    /// Superoperator composition (matrix product).
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator(self.0 * other.0)
    }

    pub fn scale(&self, c: Complex64) -> Superoperator {
        Superoperator(self.0 * c)
    }

    pub fn add(&self, other: &Superoperator) -> Superoperator {
        Superoperator(self.0 + other.0)
    }

    pub fn sub(&self, other: &Superoperator) -> Superoperator {
        Superoperator(self.0 - other.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Residual of the trace functional (1, 0, 0, 1) under the generator:
    /// zero for any trace-preserving generator.
    pub fn trace_functional_residual(&self) -> f64 {
        let tr = Vector4::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        );
        (self.0.transpose() * tr).norm()
    }
}

const HERMITICITY_TOL: f64 = 1e-12;

/// Lindblad generator `K` with
/// `K vec(rho) = vec(-i [H, rho] + sum_j (L_j rho L_j^dag - 1/2 {L_j^dag L_j, rho}))`.
///
/// The trace functional annihilates `K` by construction.
pub fn lindblad_generator(h: &Operator2, lindblad_ops: &[Operator2]) -> Result<Superoperator> {
    let defect = hermiticity_defect(h);
    if defect > HERMITICITY_TOL {
        return Err(Error::NonHermitianHamiltonian { defect });
    }
    let i = Complex64::new(0.0, 1.0);
    let mut k = (left_mul(h).sub(&right_mul(h))).scale(-i).0;
    for l in lindblad_ops {
        let ldl = l.adjoint() * l;
        // vec(L rho L^dag) = (conj(L) kron L) vec(rho)
        let sandwich = l.conjugate().kronecker(l);
        let anti = (left_mul(&ldl).add(&right_mul(&ldl))).scale(Complex64::new(0.5, 0.0));
        k += sandwich - anti.0;
    }
    Ok(Superoperator(k))
}

/// Commutator superoperator `K vec(rho) = vec(-i [A, rho])` for Hermitian `A`.
pub fn commutator_generator(a: &Operator2) -> Result<Superoperator> {
    let defect = hermiticity_defect(a);
    if defect > HERMITICITY_TOL {
        return Err(Error::NonHermitianHamiltonian { defect });
    }
    let i = Complex64::new(0.0, 1.0);
    Ok(left_mul(a).sub(&right_mul(a)).scale(-i))
}

// Pade-13 coefficients for expm (Higham, scaling and squaring).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &Matrix4<Complex64>) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(K t)` by scaling-and-squaring with a degree-13 Pade approximant.
///
/// Relative accuracy ~1e-13 for well-scaled generators; errors with
/// [`Error::NonFinite`] when the result overflows.
pub fn superop_exp(k: &Superoperator, t: f64) -> Result<Superoperator> {
    if !k.is_finite() || !t.is_finite() {
        return Err(Error::NonFinite("superop_exp input"));
    }
    let a = k.0 * Complex64::from(t);
    let norm = one_norm(&a);
    if !norm.is_finite() {
        return Err(Error::NonFinite("superop_exp scaled input"));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = a * Complex64::from(0.5f64.powi(s as i32));

    let ident = Matrix4::<Complex64>::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a2 * a4;
    let b = &PADE13;
    let u = a * (a6 * (a6 * Complex64::from(b[13]) + a4 * Complex64::from(b[11]) + a2 * Complex64::from(b[9]))
        + a6 * Complex64::from(b[7])
        + a4 * Complex64::from(b[5])
        + a2 * Complex64::from(b[3])
        + ident * Complex64::from(b[1]));
    let v = a6 * (a6 * Complex64::from(b[12]) + a4 * Complex64::from(b[10]) + a2 * Complex64::from(b[8]))
        + a6 * Complex64::from(b[6])
        + a4 * Complex64::from(b[4])
        + a2 * Complex64::from(b[2])
        + ident * Complex64::from(b[0]);

    let denom = v - u;
    let numer = v + u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or(Error::NonFinite("superop_exp Pade solve"))?;
    for _ in 0..s {
        r = r * r;
    }
    let result = Superoperator(r);
    if !result.is_finite() {
        return Err(Error::NonFinite("superop_exp result"));
    }
    Ok(result)
}

/// Interaction-picture conjugation `exp(-S t) K exp(S t)`.
///
/// The backward factor grows for dissipative `S`; callers bound `t`.
pub fn conjugate_picture(s: &Superoperator, t: f64, k: &Superoperator) -> Result<Superoperator> {
    let forward = superop_exp(s, t)?;
    let backward = superop_exp(s, -t)?;
    let out = backward.compose(k).compose(&forward);
    if !out.is_finite() {
        return Err(Error::NonFinite("conjugate_picture product"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{identity, sigma_x, sigma_z};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vectorization_round_trip_and_kron_identity() {
        let a = Operator2::new(c(1.0, 0.5), c(0.2, -0.1), c(0.0, 2.0), c(-1.0, 0.0));
        let x = Operator2::new(c(0.3, 0.0), c(0.1, 0.9), c(-0.4, 0.2), c(0.7, -0.3));
        let b = Operator2::new(c(0.0, 1.0), c(2.0, 0.0), c(0.5, 0.5), c(1.0, -1.0));
        assert_eq!(unvectorize(&vectorize(&x)), x);
        // vec(A X B) = (B^T kron A) vec(X)
        let lhs = vectorize(&(a * x * b));
        let rhs = b.transpose().kronecker(&a) * vectorize(&x);
        assert!((lhs - rhs).norm() < 1e-14);
        // left/right multiplication superoperators agree with direct products
        assert!((vectorize(&(a * x)) - left_mul(&a).apply_vec(&vectorize(&x))).norm() < 1e-14);
        assert!((vectorize(&(x * b)) - right_mul(&b).apply_vec(&vectorize(&x))).norm() < 1e-14);
    }

    #[test]
    fn dephasing_generator_eigenvalues() {
        // H = w0 sigma_z, L = lambda sigma_z: rho21 component evolves at
        // -2 lambda^2 + 2 i w0, populations are conserved.
        let w0 = 0.7;
        let lam = 1.3;
        let h = sigma_z() * c(w0, 0.0);
        let l = sigma_z() * c(lam, 0.0);
        let k = lindblad_generator(&h, &[l]).unwrap();
        let m = k.matrix();
        // generator is diagonal in this vectorization
        let expect21 = c(-2.0 * lam * lam, 2.0 * w0);
        let expect12 = c(-2.0 * lam * lam, -2.0 * w0);
        assert!((m[(1, 1)] - expect21).norm() < 1e-12);
        assert!((m[(2, 2)] - expect12).norm() < 1e-12);
        assert!(m[(0, 0)].norm() < 1e-12 && m[(3, 3)].norm() < 1e-12);
        assert!(k.trace_functional_residual() < 1e-12);
    }

    #[test]
    fn empty_generator_is_zero() {
        let k = lindblad_generator(&(sigma_z() * c(0.0, 0.0)), &[]).unwrap();
        assert!(one_norm(k.matrix()) < 1e-15);
    }

    #[test]
    fn sigma_x_dissipator_relaxes_populations() {
        // H = 0, L = lambda sigma_x: population difference decays at 2 lambda^2.
        let lam = 0.9;
        let k = lindblad_generator(&Operator2::zeros(), &[sigma_x() * c(lam, 0.0)]).unwrap();
        // eigenvector vec(sigma_z) = (1, 0, 0, -1): K vec(sigma_z) = -2 lam^2 vec(sigma_z)
        let v = vectorize(&sigma_z());
        let kv = k.apply_vec(&v);
        assert!((kv + v * c(2.0 * lam * lam, 0.0)).norm() < 1e-12);
        // and the steady state is maximally mixed: K vec(I/2) = 0
        let mixed = identity() * c(0.5, 0.0);
        assert!(k.apply_vec(&vectorize(&mixed)).norm() < 1e-13);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let bad = Operator2::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(
            lindblad_generator(&bad, &[]),
            Err(Error::NonHermitianHamiltonian { .. })
        ));
        assert!(matches!(
            commutator_generator(&bad),
            Err(Error::NonHermitianHamiltonian { .. })
        ));
    }

    #[test]
    fn commutator_generator_matches_dense_algebra() {
        let a = sigma_x();
        let k = commutator_generator(&a).unwrap();
        let x = Operator2::new(c(0.8, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(0.2, 0.0));
        let expect = (a * x - x * a) * c(0.0, -1.0);
        let got = k.apply(&x);
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn commutator_with_sigma_z_action() {
        // multiplies rho21 by +2i, rho12 by -2i, populations by 0
        let k = commutator_generator(&sigma_z()).unwrap();
        let m = k.matrix();
        assert!((m[(1, 1)] - c(0.0, 2.0)).norm() < 1e-14);
        assert!((m[(2, 2)] - c(0.0, -2.0)).norm() < 1e-14);
        assert!(m[(0, 0)].norm() < 1e-14 && m[(3, 3)].norm() < 1e-14);
    }

    #[test]
    fn commutator_with_identity_is_zero() {
        let k = commutator_generator(&identity()).unwrap();
        assert!(one_norm(k.matrix()) < 1e-14);
    }

    #[test]
    fn identity_in_kernel_of_any_commutator() {
        for a in [sigma_z(), sigma_x(), identity()] {
            let k = commutator_generator(&a).unwrap();
            assert!(k.apply_vec(&vectorize(&identity())).norm() < 1e-13);
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = superop_exp(&Superoperator::zero(), 3.7).unwrap();
        assert!((e.matrix() - Matrix4::<Complex64>::identity()).norm() < 1e-15);
    }

    #[test]
    fn exp_of_dephasing_generator_closed_form() {
        let lam = 1.1;
        let k = lindblad_generator(&Operator2::zeros(), &[sigma_z() * c(lam, 0.0)]).unwrap();
        let t = 0.8;
        let e = superop_exp(&k, t).unwrap();
        let decay = (-2.0 * lam * lam * t).exp();
        let m = e.matrix();
        assert_relative_eq!(m[(0, 0)].re, 1.0, epsilon = 1e-13);
        assert_relative_eq!(m[(3, 3)].re, 1.0, epsilon = 1e-13);
        assert_relative_eq!(m[(1, 1)].re, decay, max_relative = 1e-12);
        assert_relative_eq!(m[(2, 2)].re, decay, max_relative = 1e-12);
    }

    #[test]
    fn exp_matches_taylor_for_dense_generator() {
        let k = lindblad_generator(&(sigma_x() * c(0.4, 0.0)), &[sigma_x() * c(0.6, 0.0)])
            .unwrap();
        let t = 0.05;
        let e = superop_exp(&k, t).unwrap();
        // 6-term Taylor reference at small argument
        let a = k.matrix() * c(t, 0.0);
        let mut term = Matrix4::<Complex64>::identity();
        let mut sum = term;
        for n in 1..=8 {
            term = term * a * c(1.0 / n as f64, 0.0);
            sum += term;
        }
        assert!((e.matrix() - sum).norm() < 1e-12);
    }

    #[test]
    fn semigroup_property() {
        let k = lindblad_generator(&(sigma_z() * c(0.3, 0.0)), &[sigma_x() * c(0.8, 0.0)])
            .unwrap();
        let e1 = superop_exp(&k, 0.4).unwrap();
        let e2 = superop_exp(&k, 1.1).unwrap();
        let e12 = superop_exp(&k, 1.5).unwrap();
        assert!((e1.compose(&e2).matrix() - e12.matrix()).norm() < 1e-10);
    }

    #[test]
    fn exp_overflow_reported() {
        let k = Superoperator::from_matrix(Matrix4::identity() * c(1.0, 0.0));
        assert!(matches!(
            superop_exp(&k, 1e6),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn conjugate_picture_at_zero_time_is_identity_map() {
        let s = lindblad_generator(&Operator2::zeros(), &[sigma_x() * c(0.7, 0.0)]).unwrap();
        let k = commutator_generator(&sigma_z()).unwrap();
        let out = conjugate_picture(&s, 0.0, &k).unwrap();
        assert!((out.matrix() - k.matrix()).norm() < 1e-13);
    }

    #[test]
    fn conjugate_picture_commuting_case() {
        // diagonal S and diagonal K commute: conjugation acts as identity
        let s = lindblad_generator(&Operator2::zeros(), &[sigma_z() * c(0.9, 0.0)]).unwrap();
        let k = commutator_generator(&sigma_z()).unwrap();
        let out = conjugate_picture(&s, 0.6, &k).unwrap();
        assert!((out.matrix() - k.matrix()).norm() < 1e-11);
    }

    #[test]
    fn conjugate_picture_matches_commutator_series() {
        // exp(-St) K exp(St) = K - t[S,K] + t^2/2 [S,[S,K]] - t^3/6 [S,[S,[S,K]]] + O(t^4)
        let s = lindblad_generator(&Operator2::zeros(), &[sigma_x() * c(0.8, 0.0)]).unwrap();
        let k = commutator_generator(&sigma_z()).unwrap();
        let t = 1e-2;
        let out = conjugate_picture(&s, t, &k).unwrap();
        let sm = s.matrix();
        let km = k.matrix();
        let c1 = sm * km - km * sm;
        let c2 = sm * c1 - c1 * sm;
        let c3 = sm * c2 - c2 * sm;
        let series = km - c1 * c(t, 0.0) + c2 * c(t * t / 2.0, 0.0) - c3 * c(t * t * t / 6.0, 0.0);
        assert!((out.matrix() - series).norm() < 1e-8);
    }
}
