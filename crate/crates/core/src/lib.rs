//! Energy-dependent effective Hamiltonians for two-particle systems:
//! order-by-order expansions with folded terms, all-order Bethe-Salpeter and
//! Bethe-Salpeter-Bloch solvers, and brute-force oracles to check them.
//!
//! Everything is generic over [`Scalar`] (`f32`, `f64` and their complex
//! counterparts); the aliases below fix the common double-precision choices.

pub mod allorder;
pub mod diffratio;
pub mod error;
pub mod expansion;
pub mod model;
pub mod numerics;
pub mod potential;
pub mod scalar;
pub mod toys;
pub mod verify;

use num_complex::Complex64;

pub use error::{Error, Result};
pub use numerics::{eig_general, gauss_legendre, solve_linear, EigenSystem, Matrix, QuadratureGrid};
pub use scalar::{Real, Scalar};

pub type RealMatrix = Matrix<f64>;
pub type ComplexMatrix = Matrix<Complex64>;
pub type RealSpectrum = model::Spectrum<f64>;
pub type ComplexSpectrum = model::Spectrum<Complex64>;
pub type RealModelSpace = model::ModelSpace<f64>;
pub type ComplexModelSpace = model::ModelSpace<Complex64>;
pub type RealPotential = potential::EnergyDependentPotential<f64>;
pub type ComplexPotential = potential::EnergyDependentPotential<Complex64>;
pub type RealLedger = expansion::ExpansionLedger<f64>;
pub type RealBlochState = allorder::BsBlochState<f64>;
pub type ComplexBlochState = allorder::BsBlochState<Complex64>;
