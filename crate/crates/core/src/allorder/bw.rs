use crate::error::{Error, Result};
use crate::expansion::WaveOperator;
use crate::model::{reduced_resolvent_diagonal, ModelSpace, Spectrum};
use crate::numerics::{solve_linear, Matrix};
use crate::potential::EnergyDependentPotential;
use crate::scalar::{Real, Scalar};

fn check<T: Scalar>(s: &Spectrum<T>, p: &ModelSpace<T>, v: &EnergyDependentPotential<T>, op: &'static str) -> Result<()> {
    p.check_spectrum(s, op)?;
    if v.dim() != s.len() {
        return Err(Error::dims(op, format!("potential of size {}", s.len()), v.dim()));
    }
    Ok(())
}

/// Brillouin-Wigner wave operator at a fixed energy: the solution of
/// `X = P + Γ_Q(E)·V(E)·X`, obtained with one linear solve.
pub fn omega_bar<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    e: T,
) -> Result<WaveOperator<T>> {
    check(s, p, v, "omega_bar")?;
    let g = reduced_resolvent_diagonal(s, p, e)?;
    let vm = v.evaluate(e)?;
    let n = s.len();
    let mut a = Matrix::identity(n);
    for i in 0..n {
        if g[i] == T::zero() {
            continue;
        }
        for j in 0..n {
            a[(i, j)] -= g[i] * vm[(i, j)];
        }
    }
    let x = solve_linear(&a, &p.injection())?;
    WaveOperator::new(x, p, T::Real::lit(1e-12))
}

/// `H̄'(E) = P·V(E)·Ω̄(E)` on the model block.
pub fn heff_bar<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    e: T,
) -> Result<Matrix<T>> {
    let om = omega_bar(s, p, v, e)?;
    let vm = v.evaluate(e)?;
    Ok(p.project(&vm.matmul(om.block())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Float;

    fn toy_a() -> (Spectrum<f64>, ModelSpace<f64>, EnergyDependentPotential<f64>) {
        let s = Spectrum::from_diagonal(vec![0.0, 1.0, 1.5, 2.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        let mut w = Matrix::zeros(4, 4);
        w[(1, 0)] = 0.1;
        w[(0, 1)] = 0.1;
        (s, p, EnergyDependentPotential::constant(w).unwrap())
    }

    #[test]
    fn zero_potential_is_injection() {
        let s = Spectrum::from_diagonal(vec![0.0, 1.0, 2.0]).unwrap();
        let p = ModelSpace::new(&s, &[0, 2]).unwrap();
        let om = omega_bar(&s, &p, &EnergyDependentPotential::zero(3), 0.4).unwrap();
        assert_eq!(om.block(), &p.injection());
    }

    #[test]
    fn toy_a_eigenvector_ratio() {
        let (s, p, v) = toy_a();
        let e = (1.0 - 1.04.sqrt()) / 2.0;
        let om = omega_bar(&s, &p, &v, e).unwrap();
        assert!((om.block()[(1, 0)] - 0.1 / (e - 1.0)).abs() < 1e-15);
        assert!((om.block()[(1, 0)] - e / 0.1).abs() < 1e-13);
        assert!((om.block()[(1, 0)] + 0.0990195).abs() < 1e-7);
    }

    #[test]
    fn heff_bar_examples() {
        let (s, p, v) = toy_a();
        assert!((heff_bar(&s, &p, &v, 0.0).unwrap()[(0, 0)] + 0.01).abs() < 1e-16);

        let s = Spectrum::from_diagonal(vec![0.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        let v = EnergyDependentPotential::rational(Matrix::scalar(0.5), -2.0, 1).unwrap();
        assert_eq!(heff_bar(&s, &p, &v, 0.0).unwrap()[(0, 0)], 0.25);

        let s = Spectrum::from_diagonal(vec![0.0, 0.4]).unwrap();
        let p = ModelSpace::new(&s, &[0, 1]).unwrap();
        let w = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.2, 0.3]]).unwrap();
        let v = EnergyDependentPotential::constant(w.clone()).unwrap();
        assert_eq!(heff_bar(&s, &p, &v, 0.7).unwrap(), w);
    }

    #[test]
    fn resonance_is_singular() {
        // 1 − Γ_Q V = 0 at E = 1.5 for V_qq = 0.5 with ε_q = 1
        let s = Spectrum::from_diagonal(vec![0.0, 1.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        let w = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let v = EnergyDependentPotential::constant(w).unwrap();
        assert!(matches!(omega_bar(&s, &p, &v, 1.5), Err(Error::Singular { .. })));
    }
}
