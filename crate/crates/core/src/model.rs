//! Zeroth-order systems: orbital spectra, two-particle tensor products,
//! model spaces and (reduced) resolvents in the H0 eigenbasis.

use num_traits::{Float, One};

use crate::diffratio::MatrixFunction;
use crate::error::{Error, Result};
use crate::numerics::{eig_general, EigenSystem, Matrix};
use crate::scalar::{Real, Scalar};

/// Energies closer than this to a zeroth-order level count as a pole.
pub const POLE_TOL: f64 = 1e-12;
/// Largest two-particle basis `tensor_h0` will build.
pub const MAX_BASIS: usize = 4096;

/// Single-particle level. `sign` is +1 for particles, -1 for holes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orbital<R> {
    pub index: usize,
    pub energy: R,
    pub sign: i8,
    /// Set when `sign` disagrees with the sign of `energy`.
    pub sign_overridden: bool,
}

impl<R: Real> Orbital<R> {
    pub fn new(index: usize, energy: R) -> Self {
        Orbital {
            index,
            energy,
            sign: if energy >= R::zero() { 1 } else { -1 },
            sign_overridden: false,
        }
    }

    pub fn with_sign(index: usize, energy: R, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidInput(format!("orbital {index}: sign must be +1 or -1, got {sign}")));
        }
        let natural = Self::new(index, energy);
        Ok(Orbital {
            sign,
            sign_overridden: sign != natural.sign,
            ..natural
        })
    }

    pub fn is_particle(&self) -> bool {
        self.sign > 0
    }

    pub fn sign_real(&self) -> R {
        if self.sign > 0 {
            R::one()
        } else {
            -R::one()
        }
    }
}

/// Zeroth-order two-particle spectrum (diagonal H0).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Scalar> {
    labels: Vec<String>,
    h0: Vec<T>,
    pairs: Option<Vec<(Orbital<T::Real>, Orbital<T::Real>)>>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn from_diagonal(h0: Vec<T>) -> Result<Self> {
        if h0.is_empty() {
            return Err(Error::InvalidInput("spectrum needs at least one basis state".into()));
        }
        if h0.len() > MAX_BASIS {
            return Err(Error::InvalidInput(format!("basis size {} exceeds {MAX_BASIS}", h0.len())));
        }
        if h0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("zeroth-order energies must be finite".into()));
        }
        let labels = (0..h0.len()).map(|i| i.to_string()).collect();
        Ok(Spectrum { labels, h0, pairs: None })
    }

    /// Product basis `|r s>` of two orbital lists, `r` slowest.
    pub fn tensor_h0(h1: &[Orbital<T::Real>], h2: &[Orbital<T::Real>]) -> Result<Self> {
        if h1.is_empty() || h2.is_empty() {
            return Err(Error::InvalidInput("tensor_h0: both orbital lists must be nonempty".into()));
        }
        let n = h1.len().checked_mul(h2.len()).filter(|&n| n <= MAX_BASIS).ok_or_else(|| {
            Error::InvalidInput(format!("tensor_h0: basis {}x{} exceeds {MAX_BASIS}", h1.len(), h2.len()))
        })?;
        let mut h0 = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n);
        for r in h1 {
            for s in h2 {
                if !r.energy.is_finite() || !s.energy.is_finite() {
                    return Err(Error::InvalidInput("orbital energies must be finite".into()));
                }
                h0.push(T::from(r.energy + s.energy));
                labels.push(format!("{},{}", r.index, s.index));
                pairs.push((*r, *s));
            }
        }
        Ok(Spectrum {
            labels,
            h0,
            pairs: Some(pairs),
        })
    }

    /// Diagonalizes a general H0 once and returns the spectrum in its
    /// eigenbasis together with the transformation.
    pub fn from_hamiltonian(h: &Matrix<T>) -> Result<(Self, EigenSystem<T>)> {
        let sys = eig_general(h)?;
        let spec = Self::from_diagonal(sys.values.clone())?;
        Ok((spec, sys))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.h0.len() {
            return Err(Error::dims("Spectrum::with_labels", self.h0.len(), labels.len()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.h0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h0.is_empty()
    }

    pub fn h0_diagonal(&self) -> &[T] {
        &self.h0
    }

    pub fn energy(&self, i: usize) -> T {
        self.h0[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn orbital_pairs(&self) -> Option<&[(Orbital<T::Real>, Orbital<T::Real>)]> {
        self.pairs.as_deref()
    }

    pub fn h0_matrix(&self) -> Matrix<T> {
        Matrix::from_diagonal(&self.h0)
    }

    /// Mask of states with both particles in positive-energy orbitals
    /// (all states when no pair structure is recorded).
    pub fn positive_energy_mask(&self) -> Vec<bool> {
        match &self.pairs {
            Some(p) => p.iter().map(|(r, s)| r.is_particle() && s.is_particle()).collect(),
            None => vec![true; self.h0.len()],
        }
    }

    /// Multiplies every zeroth-order energy (and orbital energy) by `c`.
    pub fn scaled(&self, c: T::Real) -> Self {
        let h0 = self.h0.iter().map(|&x| x * T::from(c)).collect();
        let pairs = self.pairs.as_ref().map(|p| {
            p.iter()
                .map(|(r, s)| {
                    (
                        Orbital {
                            energy: r.energy * c,
                            ..*r
                        },
                        Orbital {
                            energy: s.energy * c,
                            ..*s
                        },
                    )
                })
                .collect()
        });
        Spectrum {
            labels: self.labels.clone(),
            h0,
            pairs,
        }
    }

    /// Replaces the zeroth-order energy of state `i`; orbital pairs are
    /// dropped since they no longer add up.
    pub fn with_energy(&self, i: usize, e: T) -> Result<Self> {
        if i >= self.h0.len() {
            return Err(Error::InvalidInput(format!("state {i} out of range (N = {})", self.h0.len())));
        }
        let mut h0 = self.h0.clone();
        h0[i] = e;
        Ok(Spectrum {
            labels: self.labels.clone(),
            h0,
            pairs: None,
        })
    }
}

/// P/Q split of the zeroth-order basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpace<T: Scalar> {
    p: Vec<usize>,
    q: Vec<usize>,
    energies: Vec<T>,
    degenerate_energy: Option<T>,
    n: usize,
}

impl<T: Scalar> ModelSpace<T> {
    pub fn new(s: &Spectrum<T>, p_indices: &[usize]) -> Result<Self> {
        let n = s.len();
        if p_indices.is_empty() {
            return Err(Error::InvalidInput("model space must contain at least one state".into()));
        }
        let mut seen = vec![false; n];
        for &i in p_indices {
            if i >= n {
                return Err(Error::InvalidInput(format!("model index {i} out of range (N = {n})")));
            }
            if seen[i] {
                return Err(Error::InvalidInput(format!("model index {i} listed twice")));
            }
            seen[i] = true;
        }
        let q: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
        let energies: Vec<T> = p_indices.iter().map(|&i| s.energy(i)).collect();
        let tol = T::Real::lit(POLE_TOL);
        for &qi in &q {
            for (&pi, &e) in p_indices.iter().zip(&energies) {
                if (s.energy(qi) - e).modulus() <= tol {
                    return Err(Error::InvalidInput(format!(
                        "Q state {qi} is degenerate with model state {pi}; include it in the model space"
                    )));
                }
            }
        }
        let e0 = energies[0];
        let degenerate_energy = energies.iter().all(|&e| (e - e0).modulus() <= tol).then_some(e0);
        Ok(ModelSpace {
            p: p_indices.to_vec(),
            q,
            energies,
            degenerate_energy,
            n,
        })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn basis_size(&self) -> usize {
        self.n
    }

    pub fn p_indices(&self) -> &[usize] {
        &self.p
    }

    pub fn q_indices(&self) -> &[usize] {
        &self.q
    }

    /// Zeroth-order energy `E_m` of each model state.
    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn degenerate_energy(&self) -> Option<T> {
        self.degenerate_energy
    }

    pub fn position(&self, basis_index: usize) -> Option<usize> {
        self.p.iter().position(|&i| i == basis_index)
    }

    pub fn contains(&self, basis_index: usize) -> bool {
        self.position(basis_index).is_some()
    }

    /// `N×d` injection of the model space (columns are unit vectors).
    pub fn injection(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.n, self.p.len());
        for (c, &i) in self.p.iter().enumerate() {
            m[(i, c)] = T::one();
        }
        m
    }

    /// Model-space rows of an `N×k` matrix.
    pub fn project(&self, m: &Matrix<T>) -> Matrix<T> {
        m.select_rows(&self.p)
    }

    /// `PH0P` as a `d×d` diagonal matrix.
    pub fn h0_block(&self) -> Matrix<T> {
        Matrix::from_diagonal(&self.energies)
    }

    /// Smallest `|E_m − ε_q|` over model states `m` and Q states `q`.
    pub fn min_pq_gap(&self, s: &Spectrum<T>) -> T::Real {
        let mut gap = T::Real::infinity();
        for &q in &self.q {
            for &e in &self.energies {
                gap = gap.min((s.energy(q) - e).modulus());
            }
        }
        gap
    }

    pub(crate) fn check_spectrum(&self, s: &Spectrum<T>, op: &'static str) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::dims(op, format!("basis size {}", self.n), format!("spectrum of size {}", s.len())));
        }
        Ok(())
    }
}

fn pole_error<T: Scalar>(op: &'static str, e: T, pole: T, index: usize) -> Error {
    Error::PoleHit {
        operation: op,
        energy: e.re().as_f64(),
        pole: pole.re().as_f64(),
        detail: format!("zeroth-order state {index}"),
    }
}

/// `Γ(E) = (E − H0)^(-1)`.
pub fn resolvent<T: Scalar>(s: &Spectrum<T>, e: T) -> Result<Matrix<T>> {
    let tol = T::Real::lit(POLE_TOL);
    let mut d = Vec::with_capacity(s.len());
    for (i, &h) in s.h0_diagonal().iter().enumerate() {
        let den = e - h;
        if den.modulus() <= tol {
            return Err(pole_error("resolvent", e, h, i));
        }
        d.push(T::one() / den);
    }
    Ok(Matrix::from_diagonal(&d))
}

/// Diagonal of `Γ_Q(E)`: zero on the model space, `1/(E − ε_q)` elsewhere.
pub fn reduced_resolvent_diagonal<T: Scalar>(s: &Spectrum<T>, p: &ModelSpace<T>, e: T) -> Result<Vec<T>> {
    p.check_spectrum(s, "reduced_resolvent")?;
    let tol = T::Real::lit(POLE_TOL);
    let mut d = vec![T::zero(); s.len()];
    for &q in p.q_indices() {
        let h = s.energy(q);
        let den = e - h;
        if den.modulus() <= tol {
            return Err(pole_error("reduced_resolvent", e, h, q));
        }
        d[q] = T::one() / den;
    }
    Ok(d)
}

/// `Γ_Q(E) = Q(E − H0)^(-1)Q`; model-space poles are projected out.
pub fn reduced_resolvent<T: Scalar>(s: &Spectrum<T>, p: &ModelSpace<T>, e: T) -> Result<Matrix<T>> {
    Ok(Matrix::from_diagonal(&reduced_resolvent_diagonal(s, p, e)?))
}

/// `Γ_Q(E)` as a function of `E`, with analytic derivatives and the exact
/// divided difference `(−1)ⁿ Π_i 1/(x_i − ε_q)` on each Q diagonal entry.
pub struct ReducedResolvent<'a, T: Scalar> {
    pub spectrum: &'a Spectrum<T>,
    pub model: &'a ModelSpace<T>,
}

impl<'a, T: Scalar> ReducedResolvent<'a, T> {
    pub fn new(spectrum: &'a Spectrum<T>, model: &'a ModelSpace<T>) -> Self {
        ReducedResolvent { spectrum, model }
    }

    fn diagonal_dd(&self, pts: &[T]) -> Result<Matrix<T>> {
        let tol = T::Real::lit(POLE_TOL);
        let sign = if (pts.len() - 1) % 2 == 0 { T::one() } else { -T::one() };
        let mut d = vec![T::zero(); self.spectrum.len()];
        for &q in self.model.q_indices() {
            let eq = self.spectrum.energy(q);
            let mut prod = sign;
            for &x in pts {
                let den = x - eq;
                if den.modulus() <= tol {
                    return Err(pole_error("reduced_resolvent", x, eq, q));
                }
                prod = prod / den;
            }
            d[q] = prod;
        }
        Ok(Matrix::from_diagonal(&d))
    }
}

impl<T: Scalar> MatrixFunction<T> for ReducedResolvent<'_, T> {
    fn shape(&self) -> (usize, usize) {
        (self.spectrum.len(), self.spectrum.len())
    }

    fn value(&self, x: T) -> Result<Matrix<T>> {
        reduced_resolvent(self.spectrum, self.model, x)
    }

    /// `dⁿΓ_Q/dEⁿ = n!·Γ_Q[E, …, E]`.
    fn derivative(&self, x: T, n: usize) -> Option<Result<Matrix<T>>> {
        let f = (1..=n).fold(T::Real::one(), |acc, k| acc * T::Real::lit(k as f64));
        Some(self.diagonal_dd(&vec![x; n + 1]).map(|m| m.scale(T::from(f))))
    }

    fn closed_divided_difference(&self, pts: &[T]) -> Option<Result<Matrix<T>>> {
        Some(self.diagonal_dd(pts))
    }

    fn has_derivative(&self) -> bool {
        true
    }
}
