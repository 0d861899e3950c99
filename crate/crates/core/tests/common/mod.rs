//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use bsbloch::model::{ModelSpace, Spectrum};
use bsbloch::potential::{EnergyDependentPotential, PotentialTerm};
use bsbloch::{Matrix, Scalar};

/// Order-by-order solution of `Ω H_eff − H0 Ω = V(H_eff) Ω` obtained by
/// expanding `V(H_eff)` about the diagonal `D = diag(E_m)`:
///
/// `[V(D + X) B]_{:,b} = Σ_paths V[E_{a0}, …, E_{ak} = E_b] B[:,a0] X_{a0 a1} ⋯ X_{a(k−1) b}`
///
/// Collecting order `n` gives `Y_n`, then `H^(n) = P Y_n` and
/// `Ω^(n)_{qb} = (Y_n − Σ_k Ω^(n−k) H^(k))_{qb} / (E_b − ε_q)`.
pub fn rs_series<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    max_order: usize,
) -> Vec<(Matrix<T>, Matrix<T>)> {
    let (n, d) = (s.len(), p.dim());
    let e = p.energies().to_vec();
    let mut omegas: Vec<Matrix<T>> = vec![p.injection()];
    let mut heffs: Vec<Matrix<T>> = vec![Matrix::zeros(d, d)];
    for order in 1..=max_order {
        let mut y = Matrix::zeros(n, d);
        for b in 0..d {
            // compositions (i1..ik) with each i ≥ 1, j = order − 1 − Σi ≥ 0
            let mut stack: Vec<Vec<usize>> = vec![vec![]];
            while let Some(comp) = stack.pop() {
                let used: usize = comp.iter().sum();
                if used + 1 <= order {
                    let j = order - 1 - used;
                    accumulate_paths(&mut y, b, &comp, j, &e, v, &omegas, &heffs);
                }
                for i in 1..=(order - 1).saturating_sub(used) {
                    let mut c = comp.clone();
                    c.push(i);
                    stack.push(c);
                }
            }
        }
        let h = p.project(&y);
        let mut om = Matrix::zeros(n, d);
        for &q in p.q_indices() {
            for b in 0..d {
                let mut r = y[(q, b)];
                for k in 1..order {
                    for a in 0..d {
                        r -= omegas[order - k][(q, a)] * heffs[k][(a, b)];
                    }
                }
                om[(q, b)] = r / (e[b] - s.energy(q));
            }
        }
        omegas.push(om);
        heffs.push(h);
    }
    omegas.into_iter().zip(heffs).skip(1).collect()
}

#[allow(clippy::too_many_arguments)]
fn accumulate_paths<T: Scalar>(
    y: &mut Matrix<T>,
    b: usize,
    comp: &[usize],
    j: usize,
    e: &[T],
    v: &EnergyDependentPotential<T>,
    omegas: &[Matrix<T>],
    heffs: &[Matrix<T>],
) {
    let d = e.len();
    let k = comp.len();
    let total = d.pow(k as u32);
    for code in 0..total {
        // path a0..a(k−1), then a_k = b
        let mut path = Vec::with_capacity(k + 1);
        let mut c = code;
        for _ in 0..k {
            path.push(c % d);
            c /= d;
        }
        path.push(b);
        let mut coef = T::one();
        for (t, &i) in comp.iter().enumerate() {
            coef *= heffs[i][(path[t], path[t + 1])];
        }
        if coef == T::zero() {
            continue;
        }
        let pts: Vec<T> = path.iter().map(|&a| e[a]).collect();
        let vdd = v.divided_difference(&pts).expect("admissible");
        let col = vdd.mul_vec(&omegas[j].column(path[0]));
        for (i, x) in col.into_iter().enumerate() {
            y[(i, b)] += x * coef;
        }
    }
}

/// Dense `H0 + V(E)`.
pub fn full_hamiltonian<T: Scalar>(s: &Spectrum<T>, v: &EnergyDependentPotential<T>, e: T) -> Matrix<T> {
    &s.h0_matrix() + &v.evaluate(e).expect("admissible")
}

/// Symmetric test matrix with a fixed pattern.
pub fn pattern_matrix(n: usize, scale: f64, salt: usize) -> Matrix<f64> {
    let m = Matrix::from_fn(n, n, |i, j| {
        let k = (i * 7 + j * 13 + salt * 5) % 11;
        scale * (k as f64 / 10.0 - 0.5)
    });
    let mt = m.transpose();
    (&m + &mt).scale(0.5)
}

pub fn mixed_potential(n: usize, scale: f64) -> EnergyDependentPotential<f64> {
    EnergyDependentPotential::new(
        n,
        vec![
            PotentialTerm::Constant {
                w: pattern_matrix(n, scale, 1),
            },
            PotentialTerm::Rational {
                w: pattern_matrix(n, scale, 2),
                pole: -2.5,
                power: 1,
            },
            PotentialTerm::Rational {
                w: pattern_matrix(n, scale, 3),
                pole: -3.0,
                power: 2,
            },
        ],
    )
    .unwrap()
}
