//! Qubit-level types: density matrices with a basis tag, Pauli operators,
//! and the z <-> x eigenbasis change.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Operator2 = Matrix2<Complex64>;

/// Eigenbasis a density matrix is expressed in: the sigma_z eigenbasis
/// {|+>, |->} or the sigma_x eigenbasis {|+>_x, |->_x}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Basis::Z => write!(f, "z"),
            Basis::X => write!(f, "x"),
        }
    }
}

pub fn identity() -> Operator2 {
    Operator2::identity()
}

/// sigma_z = [[1, 0], [0, -1]]
pub fn sigma_z() -> Operator2 {
    Operator2::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(-1.0, 0.0),
    )
}

/// sigma_x = [[0, 1], [1, 0]]
pub fn sigma_x() -> Operator2 {
    Operator2::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// The unitary mapping the z eigenbasis onto the x eigenbasis,
/// |+->_x = (|+> +- |->)/sqrt(2). Hermitian and involutive.
#[derive(Debug, Clone, Copy)]
pub struct BasisChange(Operator2);

impl BasisChange {
    pub fn hadamard() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        BasisChange(Operator2::new(h, h, h, -h))
    }

    pub fn matrix(&self) -> &Operator2 {
        &self.0
    }

    /// Conjugate rho by the basis-change unitary: H rho H.
    pub fn conjugate(&self, rho: &Operator2) -> Operator2 {
        self.0 * rho * self.0
    }
}

/// Hermiticity defect max_ij |m_ij - conj(m_ji)|.
pub fn hermiticity_defect(m: &Operator2) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

/// 2x2 Hermitian, unit-trace, positive-semidefinite qubit state together with
/// the eigenbasis tag its matrix elements refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: Operator2,
    basis: Basis,
}

const POSITIVITY_TOL: f64 = 1e-12;

impl DensityMatrix {
    /// Build a state from the independent elements rho11 and rho12;
    /// rho22 = 1 - rho11 and rho21 = conj(rho12) are filled in.
    pub fn new(rho11: f64, rho12: Complex64, basis: Basis) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho11) {
            return Err(Error::InvalidState(format!(
                "rho11 = {rho11} outside [0, 1]"
            )));
        }
        let det = rho11 * (1.0 - rho11) - rho12.norm_sqr();
        if det < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "|rho12|^2 = {} exceeds rho11 rho22 = {}",
                rho12.norm_sqr(),
                rho11 * (1.0 - rho11)
            )));
        }
        let matrix = Operator2::new(
            Complex64::new(rho11, 0.0),
            rho12,
            rho12.conj(),
            Complex64::new(1.0 - rho11, 0.0),
        );
        Ok(DensityMatrix { matrix, basis })
    }

    /// Accept a raw matrix from a propagation step: re-symmetrize
    /// rho <- (rho + rho^dagger)/2, check the trace, and check positivity to
    /// the given tolerance (positivity is checked, never projected).
    pub fn from_propagated(m: &Operator2, basis: Basis, positivity_tol: f64) -> Result<Self> {
        let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let trace = sym[(0, 0)].re + sym[(1, 1)].re;
        if !trace.is_finite() {
            return Err(Error::NonFinite("propagated density matrix"));
        }
        if (trace - 1.0).abs() > 1e-9 {
            return Err(Error::StepSizeTooLarge {
                drift: (trace - 1.0).abs(),
            });
        }
        let dm = DensityMatrix { matrix: sym, basis };
        let min_ev = dm.eigenvalues().0;
        if min_ev < -positivity_tol {
            return Err(Error::InvalidState(format!(
                "propagated state has eigenvalue {min_ev:.3e} below -{positivity_tol:.1e}"
            )));
        }
        Ok(dm)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &Operator2 {
        &self.matrix
    }

    pub fn rho11(&self) -> f64 {
        self.matrix[(0, 0)].re
    }

    pub fn rho22(&self) -> f64 {
        self.matrix[(1, 1)].re
    }

    pub fn rho12(&self) -> Complex64 {
        self.matrix[(0, 1)]
    }

    /// Coherence modulus |rho12| in the tagged basis.
    pub fn coherence(&self) -> f64 {
        self.rho12().norm()
    }

    pub fn trace(&self) -> f64 {
        self.rho11() + self.rho22()
    }

    /// Eigenvalue pair (min, max); closed form for the 2x2 Hermitian case.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.trace();
        let half_gap = (0.25 * (self.rho11() - self.rho22()).powi(2)
            + self.rho12().norm_sqr())
        .sqrt();
        (0.5 * tr - half_gap, 0.5 * tr + half_gap)
    }

    /// Express the state in another eigenbasis; the identity when the tag
    /// already matches. Trace and spectrum are preserved.
    pub fn change_basis(&self, to: Basis) -> DensityMatrix {
        if self.basis == to {
            return *self;
        }
        let rotated = BasisChange::hadamard().conjugate(&self.matrix);
        // conjugation by a Hermitian unitary preserves Hermiticity exactly up
        // to rounding; re-symmetrize the stored matrix
        let sym = (rotated + rotated.adjoint()) * Complex64::new(0.5, 0.0);
        DensityMatrix { matrix: sym, basis: to }
    }

    /// State assembled from a closed-form evolution formula. Trace is 1 by
    /// construction (rho22 = 1 - rho11); positivity is the formula's business
    /// and is deliberately not enforced here, since perturbative solutions may
    /// transiently violate it outside their validity window.
    pub(crate) fn from_analytic(rho11: f64, rho12: Complex64, basis: Basis) -> DensityMatrix {
        let matrix = Operator2::new(
            Complex64::new(rho11, 0.0),
            rho12,
            rho12.conj(),
            Complex64::new(1.0 - rho11, 0.0),
        );
        DensityMatrix { matrix, basis }
    }

    /// The paper-style initial state (|+> - e^{i pi/4}|->)/sqrt(2), tagged Z.
    pub fn reference_initial_state() -> DensityMatrix {
        let half_inv_sqrt2 = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::new(
            0.5,
            Complex64::new(-half_inv_sqrt2, half_inv_sqrt2),
            Basis::Z,
        )
        .expect("reference state is valid")
    }
}
