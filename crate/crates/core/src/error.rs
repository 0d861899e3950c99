use thiserror::Error;

/// Failures raised by the numeric substrate and the solvers built on it.
///
/// Energies are reported as `f64` real parts so the error type stays
/// independent of the scalar the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not diagonalizable: minimal left/right overlap {min_overlap:.3e}")]
    Defective { min_overlap: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    EigenNoConvergence { iterations: usize },

    #[error("eigenvalue {re}+{im}i is complex but a real result was requested")]
    ComplexEigenvalue { re: f64, im: f64 },

    #[error("linear system is singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("invalid quadrature range [{kmin}, {kmax}]")]
    BadRange { kmin: f64, kmax: f64 },

    #[error("{operation}: energy {energy} hits a pole at {pole} ({detail})")]
    PoleHit {
        operation: &'static str,
        energy: f64,
        pole: f64,
        detail: String,
    },

    #[error("{operation}: dimension mismatch (expected {expected}, got {actual})")]
    DimensionMismatch {
        operation: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("difference ratio of order {order} has coincident points and no derivative channel")]
    CoincidentWithoutDerivative { order: usize },

    #[error("{what} needs complex arithmetic (damping or complex energies) but runs in a real scalar")]
    RequiresComplex { what: String },

    #[error("potential is energy dependent; the operation requires constant terms only")]
    NotEnergyIndependent,

    #[error("branch {branch}: g(E) - E does not change sign on [{lo}, {hi}]")]
    NoRoot { branch: usize, lo: f64, hi: f64 },

    #[error("branch {branch}: eigenvector continuation lost the branch near E = {energy} (overlap {overlap:.3})")]
    BranchJump {
        branch: usize,
        energy: f64,
        overlap: f64,
    },

    #[error("{operation}: iteration diverged at step {iteration} (residual {residual:.3e})")]
    Diverged {
        operation: &'static str,
        iteration: usize,
        residual: f64,
    },

    #[error("{operation}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        operation: &'static str,
        iterations: usize,
        residual: f64,
    },
}

impl Error {
    pub(crate) fn dims(operation: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            operation,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    /// True for failures of a solver rather than of the input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoRoot { .. }
                | Error::Diverged { .. }
                | Error::PoleHit { .. }
                | Error::BranchJump { .. }
                | Error::NoConvergence { .. }
                | Error::EigenNoConvergence { .. }
                | Error::Defective { .. }
                | Error::Singular { .. }
                | Error::ComplexEigenvalue { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
