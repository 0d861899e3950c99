//! All-order solvers: the Brillouin-Wigner operator `Ω̄(E)`, the
//! self-consistent single-branch solve of `(E − H0)Ψ = V(E)Ψ`, the damped
//! Bethe-Salpeter-Bloch iteration on quasi-degenerate model spaces, and a
//! brute-force branch scan used as an oracle.

mod bloch;
mod branch;
mod bw;

pub use bloch::{bs_bloch_solve, BsBlochOptions, BsBlochState, IterationRecord};
pub use branch::{
    bs_residual, oracle_scan, solve_bs_state, solve_bs_state_with, BranchPoint, BranchSolveReport, BranchTracker,
    OracleRoot, SolveOptions, MIN_OVERLAP, ROOT_DEDUP_TOL,
};
pub use bw::{heff_bar, omega_bar};
