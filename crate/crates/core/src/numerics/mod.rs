pub mod eig;
pub mod linsolve;
pub mod matrix;
pub mod quadrature;

pub use eig::{eig_general, EigenSystem};
pub use linsolve::{inverse, solve_linear, Lu};
pub use matrix::{dot, norm2, overlap, Matrix};
pub use quadrature::{gauss_legendre, QuadratureGrid};
