//! Density matrices, von Neumann entropy and trace distance.
//!
//! Matrices in the hot path are at most 4×4, so every spectral quantity goes
//! through a full Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::check_unit_interval;
use crate::{Error, Result, C64};

/// Maximum entrywise deviation from `A = A†`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_TOL, 0)` are numerical noise and get clamped.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this contribute nothing to the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-15;

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates `entries` as a density matrix.
    ///
    /// The accepted matrix is Hermitized. Eigenvalues inside the noise window
    /// `[-1e-10, 0)` are clamped to zero and the result is renormalized to unit
    /// trace.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }

        let mut deviation = 0.0f64;
        for i in 0..rows {
            for j in i..rows {
                deviation = deviation.max((entries[(i, j)] - entries[(j, i)].conj()).norm());
            }
        }
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }

        let trace = entries.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::NotUnitTrace { trace: trace.re });
        }

        let hermitian = (&entries + entries.adjoint()).scale(0.5);
        let eigen = hermitian.clone().symmetric_eigen();
        let min_eigenvalue = eigen.eigenvalues.min();
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::NotPsd { min_eigenvalue });
        }

        let entries = if min_eigenvalue < 0.0 {
            let clamped = eigen.eigenvalues.map(|l| l.clamp(0.0, 1.0));
            let total = clamped.sum();
            let lambda = DMatrix::from_diagonal(&clamped.map(|l| C64::new(l / total, 0.0)));
            &eigen.eigenvectors * lambda * eigen.eigenvectors.adjoint()
        } else {
            let tr = hermitian.trace().re;
            hermitian.unscale(tr)
        };
        Ok(Self { entries })
    }

    /// Diagonal density matrix with the given probabilities.
    pub fn from_diagonal(probabilities: &[f64]) -> Result<Self> {
        let diag = DVector::from_iterator(
            probabilities.len(),
            probabilities.iter().map(|&p| C64::new(p, 0.0)),
        );
        Self::new(DMatrix::from_diagonal(&diag))
    }

    /// Projector onto the normalized `state`.
    pub fn pure(state: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(state);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::NotUnitTrace { trace: 0.0 });
        }
        let v = v.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Free-function form of [`DensityMatrix::new`].
pub fn validate_density_matrix(entries: DMatrix<C64>) -> Result<DensityMatrix> {
    DensityMatrix::new(entries)
}

/// `S(ρ) = -Tr ρ log₂ ρ`, in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > ENTROPY_CUTOFF)
        .map(|l| -l * l.log2())
        .sum();
    s.max(0.0)
}

/// Trace distance `½‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let diff = a.matrix() - b.matrix();
    let eigenvalues = diff.symmetric_eigen().eigenvalues;
    let d = 0.5 * eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
    Ok(d.clamp(0.0, 1.0))
}

/// Single-qubit input `(1-p)|g⟩⟨g| + r|g⟩⟨e| + r*|e⟩⟨g| + p|e⟩⟨e|`.
///
/// Basis order is `(|g⟩, |e⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitInput {
    p: f64,
    r: C64,
}

impl QubitInput {
    pub fn new(p: f64, r: C64) -> Result<Self> {
        check_unit_interval("p", p)?;
        let bound = (p * (1.0 - p)).sqrt();
        let r_abs = r.norm();
        if !(r_abs <= bound + 1e-12) {
            return Err(Error::InvalidQubitInput { p, r_abs, bound });
        }
        Ok(Self { p, r })
    }

    /// Input with no coherence, `r = 0`.
    pub fn classical(p: f64) -> Result<Self> {
        Self::new(p, C64::new(0.0, 0.0))
    }

    /// Excited-state population.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> C64 {
        self.r
    }

    /// Largest admissible `|r|` for this `p`.
    pub fn coherence_bound(&self) -> f64 {
        (self.p * (1.0 - self.p)).sqrt()
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0 - self.p, 0.0),
                self.r,
                self.r.conj(),
                C64::new(self.p, 0.0),
            ],
        );
        DensityMatrix::new(m).expect("qubit input invariants guarantee a density matrix")
    }
}
