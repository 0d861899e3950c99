use num_traits::{Float, One, Zero};

use super::branch::bs_residual;
use crate::error::{Error, Result};
use crate::expansion::{normalization_error, EffectiveHamiltonian, WaveOperator};
use crate::model::{ModelSpace, Spectrum};
use crate::numerics::{eig_general, Matrix};
use crate::potential::{apply_with_eigensystem, EnergyDependentPotential};
use crate::scalar::{Real, Scalar};

#[derive(Clone, Debug)]
pub struct BsBlochOptions<R> {
    /// Stop when `max(‖ΔΩ‖∞, ‖ΔH_eff‖∞)` of the undamped update drops below this.
    pub tol: R,
    pub max_iter: usize,
    /// Initial mixing factor, halved whenever the residual grows.
    pub eta: R,
    pub min_eta: R,
    /// Smallest admissible `|E_m − ε_q|`.
    pub gap_floor: R,
    /// Consecutive residual increases tolerated before giving up.
    pub growth_window: usize,
}

impl<R: Real> Default for BsBlochOptions<R> {
    fn default() -> Self {
        BsBlochOptions {
            tol: R::lit(1e-13).max(R::epsilon() * R::lit(64.0)),
            max_iter: 2000,
            eta: R::lit(0.5),
            min_eta: R::lit(1.0 / 64.0),
            gap_floor: R::lit(1e-6),
            growth_window: 10,
        }
    }
}

/// One sweep of the fixed-point iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord<R> {
    pub iteration: usize,
    pub delta_omega: R,
    pub delta_heff: R,
    pub eta: R,
    /// `max |(PΩP − P)_{ij}|` of the stored iterate.
    pub normalization_error: R,
}

/// Converged solution of the Bethe-Salpeter-Bloch equation.
#[derive(Clone, Debug)]
pub struct BsBlochState<T: Scalar> {
    pub omega: WaveOperator<T>,
    pub heff: EffectiveHamiltonian<T>,
    /// Eigenvalues `E^α` of `H_eff`, sorted.
    pub energies: Vec<T>,
    /// Right model vectors `Ψ0^α` as columns.
    pub right: Matrix<T>,
    /// Left model vectors as rows, biorthonormal to `right`.
    pub left: Matrix<T>,
    pub trace: Vec<IterationRecord<T::Real>>,
    /// `‖(E^α − H0 − V(E^α))·Ω·Ψ0^α‖` per eigenvalue.
    pub equation_residuals: Vec<T::Real>,
}

impl<T: Scalar> BsBlochState<T> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn max_normalization_error(&self) -> T::Real {
        self.trace
            .iter()
            .map(|r| r.normalization_error)
            .fold(T::Real::zero(), T::Real::max)
    }
}

fn reimpose<T: Scalar>(omega: &mut Matrix<T>, p: &ModelSpace<T>) {
    for (c, &i) in p.p_indices().iter().enumerate() {
        for m in 0..p.dim() {
            omega[(i, m)] = if c == m { T::one() } else { T::zero() };
        }
    }
}

pub fn bs_bloch_solve<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    opts: &BsBlochOptions<T::Real>,
) -> Result<BsBlochState<T>> {
    p.check_spectrum(s, "bs_bloch_solve")?;
    if v.dim() != s.len() {
        return Err(Error::dims("bs_bloch_solve", s.len(), v.dim()));
    }
    if !(opts.eta > T::Real::zero() && opts.eta <= T::Real::one()) {
        return Err(Error::InvalidInput(format!("bs_bloch_solve: mixing factor {} outside (0, 1]", opts.eta)));
    }
    let gap = p.min_pq_gap(s);
    if gap < opts.gap_floor {
        return Err(Error::InvalidInput(format!(
            "bs_bloch_solve: P/Q gap {gap} is below the floor {}",
            opts.gap_floor
        )));
    }

    let (n, d) = (s.len(), p.dim());
    let h0p = p.h0_block();
    let mut denom = Matrix::zeros(n, d);
    for &q in p.q_indices() {
        for m in 0..d {
            denom[(q, m)] = T::one() / (p.energies()[m] - s.energy(q));
        }
    }

    let mut omega = p.injection();
    let mut hp = Matrix::<T>::zeros(d, d);
    let mut eta = opts.eta;
    let mut trace = Vec::new();
    let mut last = T::Real::infinity();
    let mut growth = 0usize;

    for it in 1..=opts.max_iter {
        let sys = eig_general(&(&h0p + &hp))?;
        let y = apply_with_eigensystem(v, &sys, &omega, 0)?;
        let hp_new = p.project(&y);
        let oh = omega.matmul(&hp_new)?;
        let mut om_new = p.injection();
        for &q in p.q_indices() {
            for m in 0..d {
                om_new[(q, m)] = (y[(q, m)] - oh[(q, m)]) * denom[(q, m)];
            }
        }
        let d_om = om_new.max_abs_diff(&omega);
        let d_h = hp_new.max_abs_diff(&hp);
        let residual = d_om.max(d_h);
        if !residual.is_finite() {
            return Err(Error::Diverged {
                operation: "bs_bloch_solve",
                iteration: it,
                residual: f64::INFINITY,
            });
        }
        if residual > last {
            growth += 1;
            eta = (eta * T::Real::lit(0.5)).max(opts.min_eta);
            if growth >= opts.growth_window {
                return Err(Error::Diverged {
                    operation: "bs_bloch_solve",
                    iteration: it,
                    residual: residual.as_f64(),
                });
            }
        } else {
            growth = 0;
        }
        last = residual;

        let converged = residual < opts.tol;
        if converged {
            omega = om_new;
            hp = hp_new;
        } else {
            let mix = T::from(eta);
            omega = &omega + &(&om_new - &omega).scale(mix);
            hp = &hp + &(&hp_new - &hp).scale(mix);
        }
        reimpose(&mut omega, p);
        trace.push(IterationRecord {
            iteration: it,
            delta_omega: d_om,
            delta_heff: d_h,
            eta,
            normalization_error: normalization_error(&omega, p),
        });
        if converged {
            return finish(s, p, v, omega, hp, trace);
        }
    }
    Err(Error::NoConvergence {
        operation: "bs_bloch_solve",
        iterations: opts.max_iter,
        residual: last.as_f64(),
    })
}

fn finish<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    omega: Matrix<T>,
    hp: Matrix<T>,
    trace: Vec<IterationRecord<T::Real>>,
) -> Result<BsBlochState<T>> {
    let heff = EffectiveHamiltonian::new(p, hp)?;
    let sys = eig_general(&heff.matrix())?;
    let mut equation_residuals = Vec::with_capacity(sys.len());
    for (a, &e) in sys.values.iter().enumerate() {
        let psi = omega.mul_vec(&sys.right_vector(a));
        equation_residuals.push(bs_residual(s, v, e, &psi)?);
    }
    Ok(BsBlochState {
        omega: WaveOperator::from_block_unchecked(omega),
        heff,
        energies: sys.values,
        right: sys.right,
        left: sys.left,
        trace,
        equation_residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allorder::{oracle_scan, solve_bs_state};

    fn opts() -> BsBlochOptions<f64> {
        BsBlochOptions::default()
    }

    #[test]
    fn zero_potential_one_step() {
        let s = Spectrum::from_diagonal(vec![0.0, 0.01, 1.0]).unwrap();
        let p = ModelSpace::new(&s, &[0, 1]).unwrap();
        let st = bs_bloch_solve(&s, &p, &EnergyDependentPotential::zero(3), &opts()).unwrap();
        assert_eq!(st.iterations(), 1);
        assert_eq!(st.heff.matrix(), p.h0_block());
        assert_eq!(st.omega.block(), &p.injection());
        assert_eq!(st.energies, vec![0.0, 0.01]);
    }

    #[test]
    fn toy_a_matches_branch_solve() {
        let s = Spectrum::from_diagonal(vec![0.0, 1.0, 1.5, 2.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        let mut w = Matrix::zeros(4, 4);
        w[(1, 0)] = 0.1;
        w[(0, 1)] = 0.1;
        let v = EnergyDependentPotential::constant(w).unwrap();
        let st = bs_bloch_solve(&s, &p, &v, &opts()).unwrap();
        let r = solve_bs_state(&s, &p, &v, 0, (-0.5, 0.5)).unwrap();
        assert!((st.energies[0] - r.energy).abs() < 1e-12);
        assert!((st.energies[0] + 0.009_901_951_359_278_449).abs() < 1e-12);
        assert!(st.max_normalization_error() <= 1e-12);
        assert!(st.equation_residuals[0] < 1e-12);
    }

    #[test]
    fn toy_c_matches_oracle() {
        let s: Spectrum<f64> = Spectrum::from_diagonal(vec![0.0, 0.01, 1.0, 1.2]).unwrap();
        let p = ModelSpace::new(&s, &[0, 1]).unwrap();
        let mut w = Matrix::zeros(4, 4);
        for i in 0..2 {
            for q in 2..4 {
                w[(i, q)] = 0.1;
                w[(q, i)] = 0.1;
            }
        }
        let v = EnergyDependentPotential::constant(w).unwrap();
        let st = bs_bloch_solve(&s, &p, &v, &opts()).unwrap();
        let roots = oracle_scan(&s, &p, &v, (-0.5, 0.5), 201).unwrap();
        assert_eq!(roots.len(), 2);
        for (e, r) in st.energies.iter().zip(roots.iter()) {
            assert!((*e - r.energy).abs() < 1e-9_f64, "{e} vs {}", r.energy);
        }
        assert!(st.trace.iter().all(|r| r.normalization_error == 0.0));
    }

    #[test]
    fn toy_b_rational() {
        let s = Spectrum::from_diagonal(vec![0.0, 3.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        let mut w = Matrix::zeros(2, 2);
        w[(0, 0)] = 0.5;
        let v = EnergyDependentPotential::rational(w, -2.0, 1).unwrap();
        let st = bs_bloch_solve(&s, &p, &v, &opts()).unwrap();
        assert!((st.energies[0] - (-1.0 + 1.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn gap_floor_and_eta_are_checked() {
        let s = Spectrum::from_diagonal(vec![0.0, 1e-9]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        assert!(bs_bloch_solve(&s, &p, &EnergyDependentPotential::zero(2), &opts()).is_err());
        let s = Spectrum::from_diagonal(vec![0.0, 1.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        let bad = BsBlochOptions { eta: 0.0, ..opts() };
        assert!(bs_bloch_solve(&s, &p, &EnergyDependentPotential::zero(2), &bad).is_err());
    }

    #[test]
    fn strong_coupling_diverges_or_stalls() {
        let s = Spectrum::from_diagonal(vec![0.0, 0.1]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        let w: Matrix<f64> = Matrix::from_rows(&[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        let v = EnergyDependentPotential::constant(w).unwrap();
        let o = BsBlochOptions { max_iter: 300, ..opts() };
        let err = bs_bloch_solve(&s, &p, &v, &o).unwrap_err();
        assert!(err.is_solver_failure(), "{err}");
    }
}
