//! Small reference systems with closed-form answers and a seeded ensemble of
//! weakly coupled two-particle models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{ModelSpace, Orbital, Spectrum};
use crate::numerics::{gauss_legendre, Matrix};
use crate::potential::{EnergyDependentPotential, PhotonKernel, PotentialTerm, Profile};
use crate::scalar::Scalar;

/// `E* = −1 + √1.5`, root of `E² + 2E − 0.5 = 0`.
pub const TOY_B_ROOT: f64 = 0.224_744_871_391_588_94;
/// `E* = (1 − √1.04)/2`.
pub const TOY_A_ROOT: f64 = -0.009_901_951_359_278_516;

/// A complete problem: spectrum, model space, potential and an energy window
/// that contains the model-space roots and no poles of the potential.
#[derive(Clone, Debug)]
pub struct Instance<T: Scalar> {
    pub name: String,
    pub spectrum: Spectrum<T>,
    pub model: ModelSpace<T>,
    pub potential: EnergyDependentPotential<T>,
    pub window: (f64, f64),
}

impl<T: Scalar> Instance<T> {
    pub fn new(
        name: impl Into<String>,
        spectrum: Spectrum<T>,
        p: &[usize],
        potential: EnergyDependentPotential<T>,
        window: (f64, f64),
    ) -> Result<Self> {
        let model = ModelSpace::new(&spectrum, p)?;
        Ok(Instance {
            name: name.into(),
            spectrum,
            model,
            potential,
            window,
        })
    }

    /// Same system with every coupling multiplied by `lambda`.
    pub fn with_coupling(&self, lambda: f64) -> Self {
        Instance {
            potential: self.potential.coupling_scaled(T::lit(lambda)),
            ..self.clone()
        }
    }
}

fn symmetric_couplings<T: Scalar>(n: usize, pairs: &[(usize, usize, f64)]) -> Matrix<T> {
    let mut w = Matrix::zeros(n, n);
    for &(i, j, x) in pairs {
        w[(i, j)] = T::lit(x);
        w[(j, i)] = T::lit(x);
    }
    w
}

/// `h0 = diag(0, 1, 1.5, 2)`, `P = {0}`, constant coupling 0.1 between
/// states 0 and 1.
pub fn toy_a<T: Scalar>() -> Instance<T> {
    let s = Spectrum::from_diagonal([0.0, 1.0, 1.5, 2.0].map(T::lit).to_vec()).expect("toy spectrum");
    let v = EnergyDependentPotential::constant(symmetric_couplings(4, &[(0, 1, 0.1)])).expect("toy potential");
    Instance::new("toy-a", s, &[0], v, (-0.5, 0.5)).expect("toy model space")
}

/// Single state at 0 with `V(E) = 0.5/(E + 2)`.
pub fn toy_b<T: Scalar>() -> Instance<T> {
    let s = Spectrum::from_diagonal(vec![T::zero()]).expect("toy spectrum");
    let v = EnergyDependentPotential::rational(Matrix::scalar(T::lit(0.5)), T::lit(-2.0), 1).expect("toy potential");
    Instance::new("toy-b", s, &[0], v, (-0.5, 0.5)).expect("toy model space")
}

/// Quasi-degenerate pair: `h0 = diag(0, 0.01, 1, 1.2)`, `P = {0, 1}`,
/// constant coupling 0.1 between every P and Q state.
pub fn toy_c<T: Scalar>() -> Instance<T> {
    let s = Spectrum::from_diagonal([0.0, 0.01, 1.0, 1.2].map(T::lit).to_vec()).expect("toy spectrum");
    let w = symmetric_couplings(4, &[(0, 2, 0.1), (0, 3, 0.1), (1, 2, 0.1), (1, 3, 0.1)]);
    let v = EnergyDependentPotential::constant(w).expect("toy potential");
    Instance::new("toy-c", s, &[0, 1], v, (-0.5, 0.5)).expect("toy model space")
}

/// Quasi-degenerate pair at gap `delta` with an energy-dependent potential
/// that couples the pair directly, so folded terms are nonzero.
pub fn gap_toy(delta: f64) -> Result<Instance<f64>> {
    let s = Spectrum::from_diagonal(vec![0.0, delta, 1.0, 1.3])?;
    let w = symmetric_couplings(4, &[(0, 1, 0.04), (0, 2, 0.1), (1, 2, 0.07), (1, 3, 0.05), (0, 3, -0.06)]);
    let diag = Matrix::from_diagonal(&[0.03, -0.02, 0.0, 0.01]);
    let r = symmetric_couplings(4, &[(0, 1, 0.3), (0, 2, 0.2), (1, 3, -0.25), (2, 3, 0.1)]);
    let v = EnergyDependentPotential::constant(&w + &diag)?.with_term(PotentialTerm::Rational {
        w: r,
        pole: -2.5,
        power: 1,
    })?;
    Instance::new(format!("gap-{delta:e}"), s, &[0, 1], v, (-0.4, 0.4))
}

/// Seeded weak-coupling instance: two particle orbital sets in a tensor
/// basis (`N ≤ 8`), a quasi-degenerate model space of dimension ≤ 3 lying at
/// least 0.5 below every Q state, and constant, rational and single-photon
/// terms scaled so that `‖V(E0)‖∞` is between 5% and 10% of the P/Q gap.
pub fn ensemble_instance(seed: u64) -> Result<Instance<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: usize = rng.gen_range(1..=3);
    let na: usize = rng.gen_range(1..=2);
    let nb_max = if na == 2 { 4 } else { 5 };
    let nb: usize = rng.gen_range(d + 1..=nb_max.max(d + 1));

    let base = rng.gen_range(0.2..0.8);
    let mut a = vec![Orbital::new(0, base)];
    if na == 2 {
        a.push(Orbital::new(1, base + rng.gen_range(0.6..1.2)));
    }
    let mut b = vec![Orbital::new(0, 0.0)];
    let mut e = 0.0;
    for i in 1..nb {
        e += if i < d { rng.gen_range(0.002..0.03) } else if i == d { rng.gen_range(0.6..1.0) } else { rng.gen_range(0.1..0.5) };
        b.push(Orbital::new(i, e));
    }
    let s = Spectrum::tensor_h0(&a, &b)?;
    let n = s.len();
    let p: Vec<usize> = (0..d).collect();
    let model = ModelSpace::new(&s, &p)?;
    let gap = model.min_pq_gap(&s);

    let random_symmetric = |rng: &mut ChaCha8Rng| {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = rng.gen_range(-1.0..1.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    };
    let wc = random_symmetric(&mut rng);
    let wr = random_symmetric(&mut rng);
    let wp = random_symmetric(&mut rng);
    let pole = -2.0 - rng.gen_range(0.0..1.0);
    let power = rng.gen_range(1..=2);
    let e_max = model.energies().iter().fold(f64::MIN, |m, &x| m.max(x));
    let kmin = e_max + 0.2 + rng.gen_range(0.5..1.5);
    let grid = gauss_legendre(8, kmin, kmin + 3.0)?;
    let profile = Profile::Lorentzian {
        center: kmin + 1.0,
        width: 1.5,
    };
    let photon = PhotonKernel::new(&s, grid, profile, wp, 0.0)?;
    let v = EnergyDependentPotential::constant(wc)?
        .with_term(PotentialTerm::Rational { w: wr, pole, power })?
        .with_term(PotentialTerm::Photon(photon))?;

    let e0 = model.energies()[0];
    let size = v.evaluate(e0)?.norm_inf();
    let target = gap * rng.gen_range(0.05..0.1);
    let v = v.coupling_scaled(target / size);

    let lo = e0 - 0.25;
    let hi = e_max + 0.25;
    Instance::new(format!("ensemble-{seed}"), s, &p, v, (lo, hi))
}

/// Instances for seeds `base .. base + count`.
pub fn ensemble(base: u64, count: usize) -> Result<Vec<Instance<f64>>> {
    (0..count as u64).map(|i| ensemble_instance(base + i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_closed_forms() {
        assert_eq!(TOY_B_ROOT, -1.0 + 1.5f64.sqrt());
        assert_eq!(TOY_A_ROOT, (1.0 - 1.04f64.sqrt()) / 2.0);
    }

    #[test]
    fn ensemble_respects_bounds() {
        for seed in 0..50 {
            let inst = ensemble_instance(seed).unwrap();
            let n = inst.spectrum.len();
            assert!(n <= 8 && inst.model.dim() <= 3, "{}", inst.name);
            let gap = inst.model.min_pq_gap(&inst.spectrum);
            assert!(gap >= 0.5, "{} gap {gap}", inst.name);
            let e0 = inst.model.energies()[0];
            let size = inst.potential.evaluate(e0).unwrap().norm_inf();
            assert!(size <= 0.1 * gap + 1e-15);
            for pole in inst.potential.pole_energies() {
                assert!(pole < inst.window.0 - 1.0 || pole > inst.window.1 + 0.2, "{} pole {pole}", inst.name);
            }
        }
    }

    #[test]
    fn ensemble_is_deterministic() {
        let a = ensemble_instance(7).unwrap();
        let b = ensemble_instance(7).unwrap();
        assert_eq!(a.potential.evaluate(0.1).unwrap(), b.potential.evaluate(0.1).unwrap());
        assert_eq!(a.spectrum, b.spectrum);
    }
}
