//! Energy-dependent two-particle interactions `V(E)`.
//!
//! A potential is a sum of terms: constant matrices, rational terms
//! `W/(E − a)^p` and a single-photon kernel discretized on a momentum grid.
//! Every term has analytic derivatives and closed-form divided differences,
//! so no finite differences are ever taken of `V`.

use num_traits::{Float, One, Zero};

use crate::diffratio::{complete_homogeneous, MatrixFunction};
use crate::error::{Error, Result};
use crate::model::{Orbital, Spectrum};
use crate::numerics::{eig_general, EigenSystem, Matrix, QuadratureGrid};
use crate::scalar::{Real, Scalar};

/// Distance to a photon denominator zero that counts as a pole.
pub const PHOTON_POLE_TOL: f64 = 1e-10;
/// Distance to a rational-term pole that counts as a pole.
pub const RATIONAL_POLE_TOL: f64 = 1e-12;

/// Scalar momentum profile `g(k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile<R> {
    Constant { value: R },
    /// `exp(−(k − center)²/(2·width²))`
    Gaussian { center: R, width: R },
    /// `width²/((k − center)² + width²)`
    Lorentzian { center: R, width: R },
}

impl<R: Real> Profile<R> {
    pub fn unit() -> Self {
        Profile::Constant { value: R::one() }
    }

    pub fn eval(&self, k: R) -> R {
        match *self {
            Profile::Constant { value } => value,
            Profile::Gaussian { center, width } => {
                let z = (k - center) / width;
                (-(z * z) / R::lit(2.0)).exp()
            }
            Profile::Lorentzian { center, width } => width * width / ((k - center) * (k - center) + width * width),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Gaussian { center, width } | Profile::Lorentzian { center, width } => {
                center.is_finite() && width.is_finite() && width > R::zero()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("photon profile parameters must be finite with positive width".into()))
        }
    }

    fn scaled(&self, c: R) -> Self {
        match *self {
            Profile::Constant { value } => Profile::Constant { value },
            Profile::Gaussian { center, width } => Profile::Gaussian {
                center: center * c,
                width: width * c,
            },
            Profile::Lorentzian { center, width } => Profile::Lorentzian {
                center: center * c,
                width: width * c,
            },
        }
    }
}

/// Denominator data of one matrix element `(r s|V|t u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct ElementPoles<R> {
    /// `ε_r + ε_u` and `sgn(ε_r)`.
    a1: R,
    s1: R,
    /// `ε_s + ε_t` and `sgn(ε_s)`.
    a2: R,
    s2: R,
}

/// Single transverse-photon exchange on a quadrature grid:
///
/// `(r s|V(E)|t u) = Σ_i w_i g(k_i) W[rs,tu] ·
///     [1/(E − ε_r − ε_u − (k_i − iγ)s_r) + 1/(E − ε_s − ε_t − (k_i − iγ)s_s)]`
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonKernel<T: Scalar> {
    grid: QuadratureGrid<T::Real>,
    profile: Profile<T::Real>,
    coupling: Matrix<T>,
    gamma: T::Real,
    pairs: Vec<(Orbital<T::Real>, Orbital<T::Real>)>,
    poles: Vec<ElementPoles<T::Real>>,
    /// `w_i·g(k_i)` per node.
    strengths: Vec<T::Real>,
}

impl<T: Scalar> PhotonKernel<T> {
    pub fn new(
        spectrum: &Spectrum<T>,
        grid: QuadratureGrid<T::Real>,
        profile: Profile<T::Real>,
        coupling: Matrix<T>,
        gamma: T::Real,
    ) -> Result<Self> {
        let pairs = spectrum
            .orbital_pairs()
            .ok_or_else(|| Error::InvalidInput("photon term needs a tensor-product spectrum with orbital pairs".into()))?
            .to_vec();
        Self::from_pairs(pairs, grid, profile, coupling, gamma)
    }

    pub fn from_pairs(
        pairs: Vec<(Orbital<T::Real>, Orbital<T::Real>)>,
        grid: QuadratureGrid<T::Real>,
        profile: Profile<T::Real>,
        coupling: Matrix<T>,
        gamma: T::Real,
    ) -> Result<Self> {
        let n = pairs.len();
        if coupling.shape() != (n, n) {
            return Err(Error::dims("photon kernel", format!("{n}x{n} coupling"), format!("{:?}", coupling.shape())));
        }
        if !coupling.is_finite() {
            return Err(Error::InvalidInput("photon coupling entries must be finite".into()));
        }
        if !(gamma >= T::Real::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidInput("photon damping gamma must be finite and non-negative".into()));
        }
        if gamma > T::Real::zero() && !T::IS_COMPLEX {
            return Err(Error::RequiresComplex {
                what: "photon kernel with gamma > 0".into(),
            });
        }
        profile.validate()?;
        let mut poles = Vec::with_capacity(n * n);
        for (r, s) in &pairs {
            for (t, u) in &pairs {
                poles.push(ElementPoles {
                    a1: r.energy + u.energy,
                    s1: r.sign_real(),
                    a2: s.energy + t.energy,
                    s2: s.sign_real(),
                });
            }
        }
        let strengths = grid.iter().map(|(k, w)| w * profile.eval(k)).collect();
        Ok(PhotonKernel {
            grid,
            profile,
            coupling,
            gamma,
            pairs,
            poles,
            strengths,
        })
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn grid(&self) -> &QuadratureGrid<T::Real> {
        &self.grid
    }

    pub fn gamma(&self) -> T::Real {
        self.gamma
    }

    pub fn coupling(&self) -> &Matrix<T> {
        &self.coupling
    }

    /// Pole `c` of a denominator `E − c`: `a + (k − iγ)·s`.
    fn pole(&self, a: T::Real, s: T::Real, k: T::Real) -> T {
        let re = a + k * s;
        let im = -self.gamma * s;
        T::from_parts(re, im).unwrap_or_else(|| T::from(re))
    }

    /// Applies `kernel(u_0..u_n)` to every denominator pole, where `u_i =
    /// 1/(x_i − c)`, and sums with weights and couplings. Checks poles.
    fn assemble(&self, op: &'static str, pts: &[T], kernel: impl Fn(&[T]) -> T) -> Result<Matrix<T>> {
        let n = self.dim();
        let tol = T::Real::lit(PHOTON_POLE_TOL);
        let mut out = Matrix::zeros(n, n);
        let mut u = vec![T::zero(); pts.len()];
        for i in 0..n {
            for j in 0..n {
                let w = self.coupling[(i, j)];
                if w == T::zero() {
                    continue;
                }
                let ep = self.poles[i * n + j];
                let mut acc = T::zero();
                for (node, (k, _)) in self.grid.iter().enumerate() {
                    let g = self.strengths[node];
                    for (a, s) in [(ep.a1, ep.s1), (ep.a2, ep.s2)] {
                        let c = self.pole(a, s, k);
                        for (ui, &x) in u.iter_mut().zip(pts) {
                            let den = x - c;
                            if den.modulus() < tol {
                                return Err(Error::PoleHit {
                                    operation: op,
                                    energy: x.re().as_f64(),
                                    pole: c.re().as_f64(),
                                    detail: format!("photon term, element ({i},{j}), node {node} (k = {})", k.as_f64()),
                                });
                            }
                            *ui = T::one() / den;
                        }
                        acc += T::from(g) * kernel(&u);
                    }
                }
                out[(i, j)] = w * acc;
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, e: T) -> Result<Matrix<T>> {
        self.assemble("photon potential", &[e], |u| u[0])
    }

    /// `dⁿ/dEⁿ (E − c)^(-1) = (−1)ⁿ n! (E − c)^(−n−1)`.
    pub fn derivative(&self, e: T, n: usize) -> Result<Matrix<T>> {
        let f = signed_factorial::<T>(n);
        self.assemble("photon potential derivative", &[e], |u| f * pow(u[0], n + 1))
    }

    /// `(E − c)^(-1)[x_0..x_n] = (−1)ⁿ Π u_i`.
    pub fn divided_difference(&self, pts: &[T]) -> Result<Matrix<T>> {
        let sign = if (pts.len() - 1) % 2 == 0 { T::one() } else { -T::one() };
        self.assemble("photon potential difference ratio", pts, |u| {
            sign * u.iter().fold(T::one(), |acc, &x| acc * x)
        })
    }

    /// Real parts of all denominator poles with nonzero coupling.
    pub fn pole_energies(&self) -> Vec<T::Real> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.coupling[(i, j)] == T::zero() {
                    continue;
                }
                let ep = self.poles[i * n + j];
                for (k, _) in self.grid.iter() {
                    out.push(ep.a1 + k * ep.s1);
                    out.push(ep.a2 + k * ep.s2);
                }
            }
        }
        out
    }

    fn coupling_scaled(&self, lambda: T) -> Self {
        PhotonKernel {
            coupling: self.coupling.scale(lambda),
            ..self.clone()
        }
    }

    fn energy_scaled(&self, c: T::Real) -> Result<Self> {
        let grid = QuadratureGrid::from_nodes(
            self.grid.nodes().iter().map(|&k| k * c).collect(),
            self.grid.weights().iter().map(|&w| w * c).collect(),
        )?;
        let pairs = self
            .pairs
            .iter()
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
            .collect();
        Self::from_pairs(pairs, grid, self.profile.scaled(c), self.coupling.scale(T::from(c)), self.gamma * c)
    }
}

fn pow<T: Scalar>(x: T, n: usize) -> T {
    (0..n).fold(T::one(), |acc, _| acc * x)
}

/// `(−1)ⁿ n!`.
fn signed_factorial<T: Scalar>(n: usize) -> T {
    let f = (1..=n).fold(T::Real::one(), |acc, k| acc * T::Real::lit(k as f64));
    if n % 2 == 0 {
        T::from(f)
    } else {
        -T::from(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialTerm<T: Scalar> {
    Constant { w: Matrix<T> },
    /// `W/(E − pole)^power`
    Rational { w: Matrix<T>, pole: T, power: u32 },
    Photon(PhotonKernel<T>),
}

impl<T: Scalar> PotentialTerm<T> {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            PotentialTerm::Constant { w } | PotentialTerm::Rational { w, .. } => {
                if w.shape() != (n, n) {
                    return Err(Error::dims("potential term", format!("{n}x{n}"), format!("{:?}", w.shape())));
                }
                if !w.is_finite() {
                    return Err(Error::InvalidInput("potential term matrix must be finite".into()));
                }
            }
            PotentialTerm::Photon(k) => {
                if k.dim() != n {
                    return Err(Error::dims("photon term", format!("{n}x{n}"), format!("{0}x{0}", k.dim())));
                }
            }
        }
        if let PotentialTerm::Rational { pole, power, .. } = self {
            if *power == 0 {
                return Err(Error::InvalidInput("rational term power must be positive".into()));
            }
            if !pole.is_finite() {
                return Err(Error::InvalidInput("rational term pole must be finite".into()));
            }
        }
        Ok(())
    }

    fn is_constant(&self) -> bool {
        matches!(self, PotentialTerm::Constant { .. })
    }

    /// `(x − a)^(-p)[x_0..x_n] = (−1)ⁿ Π u_i · h_{p−1}(u_0..u_n)`,
    /// `u_i = 1/(x_i − a)`; exact for repeated points as well.
    fn rational_dd(w: &Matrix<T>, pole: T, power: u32, pts: &[T]) -> Result<Matrix<T>> {
        let tol = T::Real::lit(RATIONAL_POLE_TOL);
        let mut u = Vec::with_capacity(pts.len());
        for &x in pts {
            let den = x - pole;
            if den.modulus() <= tol {
                return Err(Error::PoleHit {
                    operation: "rational potential term",
                    energy: x.re().as_f64(),
                    pole: pole.re().as_f64(),
                    detail: format!("power {power}"),
                });
            }
            u.push(T::one() / den);
        }
        let prod = u.iter().fold(T::one(), |acc, &x| acc * x);
        let h = complete_homogeneous(&u, power as usize - 1)[power as usize - 1];
        let sign = if (pts.len() - 1) % 2 == 0 { T::one() } else { -T::one() };
        Ok(w.scale(sign * prod * h))
    }

    fn divided_difference(&self, pts: &[T]) -> Result<Matrix<T>> {
        match self {
            PotentialTerm::Constant { w } => Ok(if pts.len() == 1 {
                w.clone()
            } else {
                Matrix::zeros(w.rows(), w.cols())
            }),
            PotentialTerm::Rational { w, pole, power } => Self::rational_dd(w, *pole, *power, pts),
            PotentialTerm::Photon(k) => k.divided_difference(pts),
        }
    }

    fn derivative(&self, e: T, n: usize) -> Result<Matrix<T>> {
        match self {
            PotentialTerm::Constant { w } => Ok(if n == 0 {
                w.clone()
            } else {
                Matrix::zeros(w.rows(), w.cols())
            }),
            PotentialTerm::Rational { w, pole, power } => {
                // dⁿ/dEⁿ (E−a)^(-p) = (−1)ⁿ p(p+1)…(p+n−1) (E−a)^(−p−n)
                let pts = vec![e; n + 1];
                let f = (0..n).fold(T::Real::one(), |acc, k| acc * T::Real::lit((k + 1) as f64));
                Ok(Self::rational_dd(w, *pole, *power, &pts)?.scale(T::from(f)))
            }
            PotentialTerm::Photon(k) => {
                if n == 0 {
                    k.evaluate(e)
                } else {
                    k.derivative(e, n)
                }
            }
        }
    }

    fn coupling_scaled(&self, lambda: T) -> Self {
        match self {
            PotentialTerm::Constant { w } => PotentialTerm::Constant { w: w.scale(lambda) },
            PotentialTerm::Rational { w, pole, power } => PotentialTerm::Rational {
                w: w.scale(lambda),
                pole: *pole,
                power: *power,
            },
            PotentialTerm::Photon(k) => PotentialTerm::Photon(k.coupling_scaled(lambda)),
        }
    }

    /// The term `c·V(E/c)`, i.e. the same physics in units scaled by `c`.
    fn energy_scaled(&self, c: T::Real) -> Result<Self> {
        let cs = T::from(c);
        Ok(match self {
            PotentialTerm::Constant { w } => PotentialTerm::Constant { w: w.scale(cs) },
            PotentialTerm::Rational { w, pole, power } => PotentialTerm::Rational {
                w: w.scale(pow(cs, *power as usize + 1)),
                pole: *pole * cs,
                power: *power,
            },
            PotentialTerm::Photon(k) => PotentialTerm::Photon(k.energy_scaled(c)?),
        })
    }
}

/// `V(E) = Σ terms`, optionally projected onto positive-energy pair states.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyDependentPotential<T: Scalar> {
    n: usize,
    terms: Vec<PotentialTerm<T>>,
    no_pair: Option<Vec<bool>>,
}

impl<T: Scalar> EnergyDependentPotential<T> {
    pub fn new(n: usize, terms: Vec<PotentialTerm<T>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("potential basis size must be positive".into()));
        }
        for t in &terms {
            t.validate(n)?;
        }
        Ok(EnergyDependentPotential { n, terms, no_pair: None })
    }

    pub fn zero(n: usize) -> Self {
        EnergyDependentPotential {
            n,
            terms: Vec::new(),
            no_pair: None,
        }
    }

    pub fn constant(w: Matrix<T>) -> Result<Self> {
        Self::new(w.rows(), vec![PotentialTerm::Constant { w }])
    }

    pub fn rational(w: Matrix<T>, pole: T, power: u32) -> Result<Self> {
        Self::new(w.rows(), vec![PotentialTerm::Rational { w, pole, power }])
    }

    pub fn photon(kernel: PhotonKernel<T>) -> Result<Self> {
        Self::new(kernel.dim(), vec![PotentialTerm::Photon(kernel)])
    }

    pub fn with_term(mut self, term: PotentialTerm<T>) -> Result<Self> {
        term.validate(self.n)?;
        self.terms.push(term);
        Ok(self)
    }

    /// Restricts `V` to states whose two orbitals both have positive energy:
    /// `V → Λ₊₊ V Λ₊₊`.
    pub fn with_no_pair(mut self, spectrum: &Spectrum<T>) -> Result<Self> {
        if spectrum.len() != self.n {
            return Err(Error::dims("no-pair projection", self.n, spectrum.len()));
        }
        self.no_pair = Some(spectrum.positive_energy_mask());
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PotentialTerm<T>] {
        &self.terms
    }

    pub fn is_energy_independent(&self) -> bool {
        self.terms.iter().all(PotentialTerm::is_constant)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Multiplies every coupling matrix by `lambda`.
    pub fn coupling_scaled(&self, lambda: T) -> Self {
        EnergyDependentPotential {
            n: self.n,
            terms: self.terms.iter().map(|t| t.coupling_scaled(lambda)).collect(),
            no_pair: self.no_pair.clone(),
        }
    }

    /// `c·V(E/c)`: pairs with [`Spectrum::scaled`] for scale-covariance checks.
    pub fn energy_scaled(&self, c: T::Real) -> Result<Self> {
        Ok(EnergyDependentPotential {
            n: self.n,
            terms: self.terms.iter().map(|t| t.energy_scaled(c)).collect::<Result<_>>()?,
            no_pair: self.no_pair.clone(),
        })
    }

    /// Real energies where some term is singular (rational poles and, for
    /// undamped photon terms, every node denominator).
    pub fn pole_energies(&self) -> Vec<T::Real> {
        let mut out = Vec::new();
        for t in &self.terms {
            match t {
                PotentialTerm::Constant { .. } => {}
                PotentialTerm::Rational { pole, .. } => out.push(pole.re()),
                PotentialTerm::Photon(k) if k.gamma() == T::Real::zero() => out.extend(k.pole_energies()),
                PotentialTerm::Photon(_) => {}
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out.dedup();
        out
    }

    fn project(&self, mut m: Matrix<T>) -> Matrix<T> {
        if let Some(mask) = &self.no_pair {
            for i in 0..self.n {
                for j in 0..self.n {
                    if !mask[i] || !mask[j] {
                        m[(i, j)] = T::zero();
                    }
                }
            }
        }
        m
    }

    fn sum_terms(&self, f: impl Fn(&PotentialTerm<T>) -> Result<Matrix<T>>) -> Result<Matrix<T>> {
        let mut acc = Matrix::zeros(self.n, self.n);
        for t in &self.terms {
            acc += &f(t)?;
        }
        Ok(self.project(acc))
    }

    pub fn evaluate(&self, e: T) -> Result<Matrix<T>> {
        self.sum_terms(|t| t.derivative(e, 0))
    }

    /// `dⁿV/dEⁿ`; `n = 0` is `evaluate`.
    pub fn derivative(&self, e: T, n: usize) -> Result<Matrix<T>> {
        self.sum_terms(|t| t.derivative(e, n))
    }

    /// Exact divided difference `V[x_0, …, x_n]`.
    pub fn divided_difference(&self, pts: &[T]) -> Result<Matrix<T>> {
        if pts.is_empty() {
            return Err(Error::InvalidInput("divided difference needs at least one point".into()));
        }
        self.sum_terms(|t| t.divided_difference(pts))
    }
}

impl<T: Scalar> MatrixFunction<T> for EnergyDependentPotential<T> {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }
    fn value(&self, x: T) -> Result<Matrix<T>> {
        self.evaluate(x)
    }
    fn derivative(&self, x: T, n: usize) -> Option<Result<Matrix<T>>> {
        Some(EnergyDependentPotential::derivative(self, x, n))
    }
    fn closed_divided_difference(&self, pts: &[T]) -> Option<Result<Matrix<T>>> {
        Some(self.divided_difference(pts))
    }
    fn has_derivative(&self) -> bool {
        true
    }
}

/// `V⁽ⁿ⁾(H_eff)·B = Σ_α V⁽ⁿ⁾(E^α)·B·r_α·l_α` over the eigenpairs of `H_eff`.
pub fn apply_function_of_heff<T: Scalar>(
    v: &EnergyDependentPotential<T>,
    heff: &Matrix<T>,
    b: &Matrix<T>,
    n_deriv: usize,
) -> Result<Matrix<T>> {
    let sys = eig_general(heff)?;
    apply_with_eigensystem(v, &sys, b, n_deriv)
}

/// As [`apply_function_of_heff`] with a precomputed eigensystem of `H_eff`.
pub fn apply_with_eigensystem<T: Scalar>(
    v: &EnergyDependentPotential<T>,
    sys: &EigenSystem<T>,
    b: &Matrix<T>,
    n_deriv: usize,
) -> Result<Matrix<T>> {
    let d = sys.len();
    if b.cols() != d || b.rows() != v.dim() {
        return Err(Error::dims(
            "apply_function_of_heff",
            format!("{}x{d}", v.dim()),
            format!("{:?}", b.shape()),
        ));
    }
    let mut out = Matrix::zeros(b.rows(), d);
    for alpha in 0..d {
        let va = v.derivative(sys.values[alpha], n_deriv)?;
        let br = b.mul_vec(&sys.right_vector(alpha));
        let col = va.mul_vec(&br);
        for i in 0..b.rows() {
            for j in 0..d {
                out[(i, j)] += col[i] * sys.left[(alpha, j)];
            }
        }
    }
    Ok(out)
}
