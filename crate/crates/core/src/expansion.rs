//! Order-by-order Rayleigh-Schrödinger expansion of the wave operator and
//! the effective Hamiltonian for energy-dependent potentials.
//!
//! Columns are indexed by model states `b` and built at their own
//! zeroth-order energy `E_b`. Model-space contributions (the folded terms)
//! couple columns through difference ratios `X[E_a, E_b]`, which reduce to
//! derivatives when `E_a = E_b`. All difference ratios are evaluated in closed
//! form from `Γ_Q` and `V`, so quasi-degenerate spaces never divide by a small
//! gap.
//!
//! With `F(E) = Γ_Q(E)·V(E)`, `e_a` the unit vector of model state `a` and
//! `H1[a,b] = V(E_b)[p_a, p_b]`:
//!
//! ```text
//! Ω1[:,b]   = F(E_b) e_b
//! Ω2[:,b]   = F(E_b) Ω1[:,b]              + Σ_a F[E_a,E_b] e_a H1[a,b]
//! H2[:,b]   = P V(E_b) Ω1[:,b]            + Σ_a P V[E_a,E_b] e_a H1[a,b]
//! Ω3[:,b]   = F(E_b) Ω̄2[:,b]             + Σ_a (Ω2'[a,b] H1[a,b] + F[E_a,E_b] e_a H̄2[a,b])
//! H3[:,b]   = P V(E_b) Ω̄2[:,b]           + Σ_a (H2'[a,b] H1[a,b] + P V[E_a,E_b] e_a H̄2[a,b])
//! ```
//!
//! where bars mark the parts without folds and `Ω2'`, `H2'` are the
//! difference ratios of the second-order operators with respect to the
//! column energy.

use std::cell::RefCell;
use std::collections::HashMap;

use num_traits::{Float, Zero};

use crate::diffratio::{divided_difference, DiffMode, Product};
use crate::error::{Error, Result};
use crate::model::{ModelSpace, ReducedResolvent, Spectrum, POLE_TOL};
use crate::numerics::Matrix;
use crate::potential::EnergyDependentPotential;
use crate::scalar::{Real, Scalar};

/// Highest order with explicit closed forms.
pub const MAX_EXPANSION_ORDER: usize = 3;

/// `N×d` wave operator in intermediate normalization (`PΩP = P`).
#[derive(Clone, Debug, PartialEq)]
pub struct WaveOperator<T: Scalar> {
    block: Matrix<T>,
}

impl<T: Scalar> WaveOperator<T> {
    /// Validates intermediate normalization within `tol`.
    pub fn new(block: Matrix<T>, p: &ModelSpace<T>, tol: T::Real) -> Result<Self> {
        if block.shape() != (p.basis_size(), p.dim()) {
            return Err(Error::dims(
                "WaveOperator::new",
                format!("{}x{}", p.basis_size(), p.dim()),
                format!("{:?}", block.shape()),
            ));
        }
        if !block.is_finite() {
            return Err(Error::InvalidInput("wave operator has non-finite entries".into()));
        }
        let dev = normalization_error(&block, p);
        if !(dev <= tol) {
            return Err(Error::InvalidInput(format!(
                "wave operator violates P·Ω·P = P by {:.3e}",
                dev.as_f64()
            )));
        }
        Ok(WaveOperator { block })
    }

    /// `P`-injection plus the given Q-space increments.
    pub fn from_increments<'a>(p: &ModelSpace<T>, increments: impl IntoIterator<Item = &'a Matrix<T>>) -> Self
    where
        T: 'a,
    {
        let mut block = p.injection();
        for inc in increments {
            block += inc;
        }
        for (c, &i) in p.p_indices().iter().enumerate() {
            for m in 0..p.dim() {
                block[(i, m)] = if c == m { T::one() } else { T::zero() };
            }
        }
        WaveOperator { block }
    }

    pub(crate) fn from_block_unchecked(block: Matrix<T>) -> Self {
        WaveOperator { block }
    }

    pub fn block(&self) -> &Matrix<T> {
        &self.block
    }

    pub fn into_block(self) -> Matrix<T> {
        self.block
    }

    pub fn column(&self, m: usize) -> Vec<T> {
        self.block.column(m)
    }

    /// `max |(PΩP − P)_{ij}|`.
    pub fn normalization_error(&self, p: &ModelSpace<T>) -> T::Real {
        normalization_error(&self.block, p)
    }
}

pub(crate) fn normalization_error<T: Scalar>(block: &Matrix<T>, p: &ModelSpace<T>) -> T::Real {
    let mut dev = T::Real::zero();
    for (c, &i) in p.p_indices().iter().enumerate() {
        for m in 0..p.dim() {
            let target = if c == m { T::one() } else { T::zero() };
            dev = dev.max((block[(i, m)] - target).modulus());
        }
    }
    dev
}

/// `H_eff = PH0P + H'_eff` on the model space.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian<T: Scalar> {
    h0: Matrix<T>,
    interaction: Matrix<T>,
}

impl<T: Scalar> EffectiveHamiltonian<T> {
    pub fn new(p: &ModelSpace<T>, interaction: Matrix<T>) -> Result<Self> {
        if interaction.shape() != (p.dim(), p.dim()) {
            return Err(Error::dims(
                "EffectiveHamiltonian::new",
                format!("{0}x{0}", p.dim()),
                format!("{:?}", interaction.shape()),
            ));
        }
        Ok(EffectiveHamiltonian {
            h0: p.h0_block(),
            interaction,
        })
    }

    pub fn h0_part(&self) -> &Matrix<T> {
        &self.h0
    }

    pub fn interaction(&self) -> &Matrix<T> {
        &self.interaction
    }

    pub fn matrix(&self) -> Matrix<T> {
        &self.h0 + &self.interaction
    }
}

/// One order of the expansion. `omega` and `heff` include the folded parts,
/// which are repeated in `omega_msc` / `heff_msc`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderTerms<T: Scalar> {
    pub order: usize,
    pub omega: Matrix<T>,
    pub heff: Matrix<T>,
    pub omega_msc: Matrix<T>,
    pub heff_msc: Matrix<T>,
}

impl<T: Scalar> OrderTerms<T> {
    pub fn omega_bar(&self) -> Matrix<T> {
        &self.omega - &self.omega_msc
    }

    pub fn heff_bar(&self) -> Matrix<T> {
        &self.heff - &self.heff_msc
    }

    fn without_msc(order: usize, omega: Matrix<T>, heff: Matrix<T>) -> Self {
        let (n, d) = omega.shape();
        OrderTerms {
            order,
            omega,
            heff,
            omega_msc: Matrix::zeros(n, d),
            heff_msc: Matrix::zeros(d, d),
        }
    }
}

/// Per-order increments `Ω^(n)`, `H^(n)` with their fold parts.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionLedger<T: Scalar> {
    orders: Vec<OrderTerms<T>>,
}

impl<T: Scalar> ExpansionLedger<T> {
    pub fn new() -> Self {
        ExpansionLedger { orders: Vec::new() }
    }

    pub fn max_order(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self, n: usize) -> Option<&OrderTerms<T>> {
        n.checked_sub(1).and_then(|i| self.orders.get(i))
    }

    pub fn orders(&self) -> &[OrderTerms<T>] {
        &self.orders
    }

    fn require(&self, n: usize, op: &'static str) -> Result<&OrderTerms<T>> {
        self.order(n)
            .ok_or_else(|| Error::InvalidInput(format!("{op}: order {n} missing from the ledger")))
    }

    fn push(&mut self, terms: OrderTerms<T>) {
        debug_assert_eq!(terms.order, self.orders.len() + 1);
        self.orders.push(terms);
    }

    /// `Σ_{n ≤ upto} H^(n)` (the interaction part of `H_eff`).
    pub fn heff_sum(&self, upto: usize) -> Matrix<T> {
        let d = self.orders.first().map_or(0, |o| o.heff.rows());
        let mut acc = Matrix::zeros(d, d);
        for o in self.orders.iter().take(upto) {
            acc += &o.heff;
        }
        acc
    }

    /// `P + Σ_{n ≤ upto} Ω^(n)`.
    pub fn wave_operator(&self, p: &ModelSpace<T>, upto: usize) -> WaveOperator<T> {
        WaveOperator::from_increments(p, self.orders.iter().take(upto).map(|o| &o.omega))
    }

    pub fn effective_hamiltonian(&self, p: &ModelSpace<T>, upto: usize) -> Result<EffectiveHamiltonian<T>> {
        EffectiveHamiltonian::new(p, self.heff_sum(upto))
    }

    pub fn is_finite(&self) -> bool {
        self.orders
            .iter()
            .all(|o| o.omega.is_finite() && o.heff.is_finite() && o.omega_msc.is_finite() && o.heff_msc.is_finite())
    }
}

impl<T: Scalar> Default for ExpansionLedger<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Shared state for one expansion: spectrum, model space, potential and a
/// cache of difference ratios keyed by model-state index sequences.
struct Expander<'a, T: Scalar> {
    s: &'a Spectrum<T>,
    p: &'a ModelSpace<T>,
    v: &'a EnergyDependentPotential<T>,
    gamma_q: ReducedResolvent<'a, T>,
    f_cache: RefCell<HashMap<Vec<usize>, Matrix<T>>>,
    v_cache: RefCell<HashMap<Vec<usize>, Matrix<T>>>,
}

impl<'a, T: Scalar> Expander<'a, T> {
    fn new(s: &'a Spectrum<T>, p: &'a ModelSpace<T>, v: &'a EnergyDependentPotential<T>) -> Result<Self> {
        p.check_spectrum(s, "expansion")?;
        if v.dim() != s.len() {
            return Err(Error::dims("expansion", format!("potential of size {}", s.len()), v.dim()));
        }
        let gap = p.min_pq_gap(s);
        if gap <= T::Real::lit(POLE_TOL) {
            return Err(Error::PoleHit {
                operation: "expansion",
                energy: f64::NAN,
                pole: f64::NAN,
                detail: "a Q state is degenerate with the model space".into(),
            });
        }
        Ok(Expander {
            s,
            p,
            v,
            gamma_q: ReducedResolvent::new(s, p),
            f_cache: RefCell::new(HashMap::new()),
            v_cache: RefCell::new(HashMap::new()),
        })
    }

    fn d(&self) -> usize {
        self.p.dim()
    }

    fn n(&self) -> usize {
        self.s.len()
    }

    fn energies(&self, idx: &[usize]) -> Vec<T> {
        idx.iter().map(|&a| self.p.energies()[a]).collect()
    }

    fn pa(&self, a: usize) -> usize {
        self.p.p_indices()[a]
    }

    /// `F[E_{i0}, …, E_{ik}]` with `F = Γ_Q·V`.
    fn f(&self, idx: &[usize]) -> Result<Matrix<T>> {
        if let Some(m) = self.f_cache.borrow().get(idx) {
            return Ok(m.clone());
        }
        let prod = Product::new(&self.gamma_q, self.v);
        let m = divided_difference(&prod, &self.energies(idx), DiffMode::Auto)?;
        self.f_cache.borrow_mut().insert(idx.to_vec(), m.clone());
        Ok(m)
    }

    /// `V[E_{i0}, …, E_{ik}]`.
    fn v(&self, idx: &[usize]) -> Result<Matrix<T>> {
        if let Some(m) = self.v_cache.borrow().get(idx) {
            return Ok(m.clone());
        }
        let m = self.v.divided_difference(&self.energies(idx))?;
        self.v_cache.borrow_mut().insert(idx.to_vec(), m.clone());
        Ok(m)
    }

    /// Model rows of an `N`-vector.
    fn model_rows(&self, x: &[T]) -> Vec<T> {
        self.p.p_indices().iter().map(|&i| x[i]).collect()
    }

    fn omega1(&self) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(self.n(), self.d());
        for b in 0..self.d() {
            out.set_column(b, &self.f(&[b])?.column(self.pa(b)));
        }
        Ok(out)
    }

    fn heff1(&self) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(self.d(), self.d());
        for b in 0..self.d() {
            let vb = self.v(&[b])?;
            for a in 0..self.d() {
                out[(a, b)] = vb[(self.pa(a), self.pa(b))];
            }
        }
        Ok(out)
    }

    fn order1(&self) -> Result<OrderTerms<T>> {
        Ok(OrderTerms::without_msc(1, self.omega1()?, self.heff1()?))
    }

    fn order2(&self, o1: &OrderTerms<T>) -> Result<OrderTerms<T>> {
        let (n, d) = (self.n(), self.d());
        let h1 = &o1.heff;
        let mut omega_bar = Matrix::zeros(n, d);
        let mut omega_msc = Matrix::zeros(n, d);
        let mut heff_bar = Matrix::zeros(d, d);
        let mut heff_msc = Matrix::zeros(d, d);
        for b in 0..d {
            let w1 = o1.omega.column(b);
            omega_bar.set_column(b, &self.f(&[b])?.mul_vec(&w1));
            let hb = self.model_rows(&self.v(&[b])?.mul_vec(&w1));
            let mut om = vec![T::zero(); n];
            let mut hm = vec![T::zero(); d];
            for a in 0..d {
                let h = h1[(a, b)];
                if h == T::zero() {
                    continue;
                }
                let fab = self.f(&[a, b])?;
                let vab = self.v(&[a, b])?;
                for i in 0..n {
                    om[i] += fab[(i, self.pa(a))] * h;
                }
                for (c, hc) in hm.iter_mut().enumerate() {
                    *hc += vab[(self.pa(c), self.pa(a))] * h;
                }
            }
            omega_msc.set_column(b, &om);
            for c in 0..d {
                heff_bar[(c, b)] = hb[c];
                heff_msc[(c, b)] = hm[c];
            }
        }
        Ok(OrderTerms {
            order: 2,
            omega: &omega_bar + &omega_msc,
            heff: &heff_bar + &heff_msc,
            omega_msc,
            heff_msc,
        })
    }

    fn order3(&self, o1: &OrderTerms<T>, o2: &OrderTerms<T>) -> Result<OrderTerms<T>> {
        let (n, d) = (self.n(), self.d());
        let h1 = &o1.heff;
        let omega2_bar = o2.omega_bar();
        let h2_bar = o2.heff_bar();
        let mut omega_bar = Matrix::zeros(n, d);
        let mut omega_msc = Matrix::zeros(n, d);
        let mut heff_bar = Matrix::zeros(d, d);
        let mut heff_msc = Matrix::zeros(d, d);
        for b in 0..d {
            let w2 = omega2_bar.column(b);
            omega_bar.set_column(b, &self.f(&[b])?.mul_vec(&w2));
            let hb = self.model_rows(&self.v(&[b])?.mul_vec(&w2));
            let mut om = vec![T::zero(); n];
            let mut hm = vec![T::zero(); d];
            for a in 0..d {
                let pa = self.pa(a);
                let fab = self.f(&[a, b])?;
                let vab = self.v(&[a, b])?;
                // fold on the barred second order
                let h2 = h2_bar[(a, b)];
                if h2 != T::zero() {
                    for i in 0..n {
                        om[i] += fab[(i, pa)] * h2;
                    }
                    for (c, hc) in hm.iter_mut().enumerate() {
                        *hc += vab[(self.pa(c), pa)] * h2;
                    }
                }
                let h = h1[(a, b)];
                if h == T::zero() {
                    continue;
                }
                // difference ratio of the second-order operators, column a
                let (w2fn, h2fn) = self.second_order_ratio(a, b, o1)?;
                for i in 0..n {
                    om[i] += w2fn[i] * h;
                }
                for c in 0..d {
                    hm[c] += h2fn[self.pa(c)] * h;
                }
            }
            omega_msc.set_column(b, &om);
            for c in 0..d {
                heff_bar[(c, b)] = hb[c];
                heff_msc[(c, b)] = hm[c];
            }
        }
        Ok(OrderTerms {
            order: 3,
            omega: &omega_bar + &omega_msc,
            heff: &heff_bar + &heff_msc,
            omega_msc,
            heff_msc,
        })
    }

    /// `(Ω^(2)[:,a])[E_a, E_b]` and `(V·Ω^(1)-type)[E_a, E_b]` as `N`-vectors:
    ///
    /// `(FF)[E_a,E_b] e_a + Σ_c (F[E_c,E_a,E_b] e_c H1[c,a] + F[E_c,E_b] e_c V[E_a,E_b]_{ca})`
    /// and the same with the leftmost `F` replaced by `V`.
    fn second_order_ratio(&self, a: usize, b: usize, o1: &OrderTerms<T>) -> Result<(Vec<T>, Vec<T>)> {
        let (n, d) = (self.n(), self.d());
        let pa = self.pa(a);
        let fa = self.f(&[a])?;
        let fb = self.f(&[b])?;
        let fab = self.f(&[a, b])?;
        let va = self.v(&[a])?;
        let vab = self.v(&[a, b])?;
        let fab_col = fab.column(pa);
        let fb_col = fb.column(pa);
        // two-point Leibniz: (XF)[x,y] = X(x) F[x,y] + X[x,y] F(y)
        let mut w = fa.mul_vec(&fab_col);
        let mut h = va.mul_vec(&fab_col);
        for (i, x) in fab.mul_vec(&fb_col).into_iter().enumerate() {
            w[i] += x;
        }
        for (i, x) in vab.mul_vec(&fb_col).into_iter().enumerate() {
            h[i] += x;
        }
        for c in 0..d {
            let pc = self.pa(c);
            let h1ca = o1.heff[(c, a)];
            let vca = vab[(pc, pa)];
            if h1ca != T::zero() {
                let fcab = self.f(&[c, a, b])?;
                let vcab = self.v(&[c, a, b])?;
                for i in 0..n {
                    w[i] += fcab[(i, pc)] * h1ca;
                    h[i] += vcab[(i, pc)] * h1ca;
                }
            }
            if vca != T::zero() {
                let fcb = self.f(&[c, b])?;
                let vcb = self.v(&[c, b])?;
                for i in 0..n {
                    w[i] += fcb[(i, pc)] * vca;
                    h[i] += vcb[(i, pc)] * vca;
                }
            }
        }
        Ok((w, h))
    }
}

/// First-order wave-operator increment: column `m` is `Γ_Q(E_m) V(E_m) e_m`.
pub fn omega1<T: Scalar>(s: &Spectrum<T>, p: &ModelSpace<T>, v: &EnergyDependentPotential<T>) -> Result<Matrix<T>> {
    Expander::new(s, p, v)?.omega1()
}

/// First-order effective interaction `(P V(E_m) P)_{m′m}`.
pub fn heff1<T: Scalar>(s: &Spectrum<T>, p: &ModelSpace<T>, v: &EnergyDependentPotential<T>) -> Result<Matrix<T>> {
    Expander::new(s, p, v)?.heff1()
}

/// Second-order terms (wave operator and effective interaction) given order 1.
pub fn order2<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    ledger: &ExpansionLedger<T>,
) -> Result<OrderTerms<T>> {
    let o1 = ledger.require(1, "second order")?;
    Expander::new(s, p, v)?.order2(o1)
}

/// Third-order terms given orders 1 and 2.
pub fn order3<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    ledger: &ExpansionLedger<T>,
) -> Result<OrderTerms<T>> {
    let o1 = ledger.require(1, "third order")?;
    let o2 = ledger.require(2, "third order")?;
    Expander::new(s, p, v)?.order3(o1, o2)
}

pub fn omega2<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    ledger: &ExpansionLedger<T>,
) -> Result<Matrix<T>> {
    Ok(order2(s, p, v, ledger)?.omega)
}

pub fn heff2<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    ledger: &ExpansionLedger<T>,
) -> Result<Matrix<T>> {
    Ok(order2(s, p, v, ledger)?.heff)
}

pub fn omega3<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    ledger: &ExpansionLedger<T>,
) -> Result<Matrix<T>> {
    Ok(order3(s, p, v, ledger)?.omega)
}

pub fn heff3<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    ledger: &ExpansionLedger<T>,
) -> Result<Matrix<T>> {
    Ok(order3(s, p, v, ledger)?.heff)
}

/// Ledger through `max_order ≤ 3`.
pub fn build_ledger<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    max_order: usize,
) -> Result<ExpansionLedger<T>> {
    if max_order == 0 || max_order > MAX_EXPANSION_ORDER {
        return Err(Error::InvalidInput(format!(
            "expansion order must be between 1 and {MAX_EXPANSION_ORDER}, got {max_order}"
        )));
    }
    let ex = Expander::new(s, p, v)?;
    let mut ledger = ExpansionLedger::new();
    let o1 = ex.order1()?;
    ledger.push(o1.clone());
    if max_order >= 2 {
        let o2 = ex.order2(&o1)?;
        ledger.push(o2.clone());
        if max_order >= 3 {
            ledger.push(ex.order3(&o1, &o2)?);
        }
    }
    Ok(ledger)
}

/// Generalized Bloch recursion for an energy-independent potential:
///
/// `Ω^(n)_{qm} = (V Ω^(n−1) − Σ_{k=1}^{n−1} Ω^(n−k) H^(k))_{qm} / (E_m − ε_q)`,
/// `H^(n) = P V Ω^(n−1)`.
pub fn bloch_iterate<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    max_order: usize,
) -> Result<ExpansionLedger<T>> {
    if !v.is_energy_independent() {
        return Err(Error::NotEnergyIndependent);
    }
    p.check_spectrum(s, "bloch_iterate")?;
    if max_order == 0 {
        return Err(Error::InvalidInput("bloch_iterate: max_order must be at least 1".into()));
    }
    let (n, d) = (s.len(), p.dim());
    // constant V: any energy will do
    let vm = v.evaluate(T::zero())?;
    let tol = T::Real::lit(POLE_TOL);
    let mut denom = Matrix::zeros(n, d);
    for &q in p.q_indices() {
        for m in 0..d {
            let gap = p.energies()[m] - s.energy(q);
            if gap.modulus() <= tol {
                return Err(Error::PoleHit {
                    operation: "bloch_iterate",
                    energy: p.energies()[m].re().as_f64(),
                    pole: s.energy(q).re().as_f64(),
                    detail: format!("model state {m} degenerate with Q state {q}"),
                });
            }
            denom[(q, m)] = T::one() / gap;
        }
    }
    let mut omegas: Vec<Matrix<T>> = vec![p.injection()];
    let mut heffs: Vec<Matrix<T>> = vec![Matrix::zeros(d, d)];
    let mut ledger = ExpansionLedger::new();
    for order in 1..=max_order {
        let y = vm.matmul(&omegas[order - 1])?;
        let h = p.project(&y);
        let mut rhs = y;
        for k in 1..order {
            rhs -= &omegas[order - k].matmul(&heffs[k])?;
        }
        let mut om = Matrix::zeros(n, d);
        for &q in p.q_indices() {
            for m in 0..d {
                om[(q, m)] = rhs[(q, m)] * denom[(q, m)];
            }
        }
        ledger.push(OrderTerms::without_msc(order, om.clone(), h.clone()));
        omegas.push(om);
        heffs.push(h);
    }
    Ok(ledger)
}

/// Frobenius norm helper for reports.
pub fn frobenius<T: Scalar>(m: &Matrix<T>) -> f64 {
    m.norm_frobenius().as_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_a() -> (Spectrum<f64>, ModelSpace<f64>, EnergyDependentPotential<f64>) {
        let s = Spectrum::from_diagonal(vec![0.0, 1.0, 1.5, 2.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        let mut w = Matrix::zeros(4, 4);
        w[(1, 0)] = 0.1;
        w[(0, 1)] = 0.1;
        (s, p, EnergyDependentPotential::constant(w).unwrap())
    }

    fn toy_b() -> (Spectrum<f64>, ModelSpace<f64>, EnergyDependentPotential<f64>) {
        let s = Spectrum::from_diagonal(vec![0.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        (s, p, EnergyDependentPotential::rational(Matrix::scalar(0.5), -2.0, 1).unwrap())
    }

    #[test]
    fn toy_a_low_orders() {
        let (s, p, v) = toy_a();
        let o1 = omega1(&s, &p, &v).unwrap();
        assert_eq!(o1.column(0), vec![0.0, -0.1, 0.0, 0.0]);
        assert_eq!(heff1(&s, &p, &v).unwrap()[(0, 0)], 0.0);
        let l = build_ledger(&s, &p, &v, 3).unwrap();
        assert!(l.order(2).unwrap().omega.max_abs() < 1e-18);
        assert!((l.order(2).unwrap().heff[(0, 0)] + 0.01).abs() < 1e-16);
        assert_eq!(l.order(2).unwrap().heff_msc[(0, 0)], 0.0);
    }

    #[test]
    fn zero_potential_gives_zero_increments() {
        let s = Spectrum::from_diagonal(vec![0.0, 0.2, 1.0]).unwrap();
        let p = ModelSpace::new(&s, &[0, 1]).unwrap();
        let v = EnergyDependentPotential::zero(3);
        let l = build_ledger(&s, &p, &v, 3).unwrap();
        for o in l.orders() {
            assert_eq!(o.omega.max_abs(), 0.0);
            assert_eq!(o.heff.max_abs(), 0.0);
        }
    }

    #[test]
    fn toy_b_scalar_series() {
        let (s, p, v) = toy_b();
        let l = build_ledger(&s, &p, &v, 3).unwrap();
        assert_eq!(l.order(1).unwrap().heff[(0, 0)], 0.25);
        assert!((l.order(2).unwrap().heff[(0, 0)] + 0.03125).abs() < 1e-16);
        assert!((l.order(3).unwrap().heff[(0, 0)] - 0.0078125).abs() < 1e-16);
    }

    #[test]
    fn rational_first_order() {
        let (s, p, v) = toy_b();
        assert_eq!(heff1(&s, &p, &v).unwrap()[(0, 0)], 0.25);
    }

    #[test]
    fn constant_degenerate_second_order_fold() {
        let s = Spectrum::from_diagonal(vec![0.0, 0.0, 1.0, 1.7]).unwrap();
        let p = ModelSpace::new(&s, &[0, 1]).unwrap();
        let w = Matrix::from_fn(4, 4, |i, j| 0.05 * (1.0 + i as f64 + j as f64) / (1.0 + (i * j) as f64));
        let v = EnergyDependentPotential::constant(w.clone()).unwrap();
        let l = build_ledger(&s, &p, &v, 2).unwrap();
        let o2 = l.order(2).unwrap();
        assert_eq!(o2.heff_msc.max_abs(), 0.0);
        // −Γ_Q² V P · H1
        let g = reduced_resolvent_sq(&s, &p);
        let fold = &(&(&g * &w) * &p.injection()) * &l.order(1).unwrap().heff;
        assert!(o2.omega_msc.approx_eq(&(-&fold), 1e-14));
    }

    fn reduced_resolvent_sq(s: &Spectrum<f64>, p: &ModelSpace<f64>) -> Matrix<f64> {
        let g = crate::model::reduced_resolvent(s, p, 0.0).unwrap();
        &g * &g
    }

    #[test]
    fn bloch_matches_constant_expansion() {
        let s = Spectrum::from_diagonal(vec![0.0, 0.05, 0.9, 1.4, 2.0]).unwrap();
        let p = ModelSpace::new(&s, &[0, 1]).unwrap();
        let w = Matrix::from_fn(5, 5, |i, j| 0.03 * ((i + 2 * j) % 5) as f64 + 0.01 * (i == j) as u8 as f64);
        let w = &w + &w.transpose();
        let v = EnergyDependentPotential::constant(w).unwrap();
        let a = build_ledger(&s, &p, &v, 3).unwrap();
        let b = bloch_iterate(&s, &p, &v, 3).unwrap();
        for n in 1..=3 {
            let (x, y) = (a.order(n).unwrap(), b.order(n).unwrap());
            assert!(x.omega.approx_eq(&y.omega, 1e-13), "omega order {n}");
            assert!(x.heff.approx_eq(&y.heff, 1e-13), "heff order {n}");
        }
    }

    #[test]
    fn bloch_full_model_space() {
        let s = Spectrum::from_diagonal(vec![0.0, 0.3]).unwrap();
        let p = ModelSpace::new(&s, &[0, 1]).unwrap();
        let w = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.2, -0.1]]).unwrap();
        let v = EnergyDependentPotential::constant(w.clone()).unwrap();
        let l = bloch_iterate(&s, &p, &v, 3).unwrap();
        assert_eq!(l.order(1).unwrap().heff, w);
        assert_eq!(l.heff_sum(3), w);
        assert_eq!(l.wave_operator(&p, 3).block(), &Matrix::identity(2));
    }

    #[test]
    fn bloch_rejects_energy_dependence() {
        let (s, p, v) = toy_b();
        assert!(matches!(bloch_iterate(&s, &p, &v, 2), Err(Error::NotEnergyIndependent)));
    }

    #[test]
    fn wave_operator_normalization_check() {
        let s = Spectrum::from_diagonal(vec![0.0, 1.0]).unwrap();
        let p = ModelSpace::new(&s, &[0]).unwrap();
        assert!(WaveOperator::new(Matrix::column_vector(&[1.0, 0.3]), &p, 1e-12).is_ok());
        assert!(WaveOperator::new(Matrix::column_vector(&[1.1, 0.3]), &p, 1e-12).is_err());
    }
}
