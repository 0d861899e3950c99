use num_traits::{Float, One, Zero};
use rayon::prelude::*;

use super::bw::omega_bar;
use crate::error::{Error, Result};
use crate::model::{ModelSpace, Spectrum};
use crate::numerics::{eig_general, norm2, overlap, EigenSystem};
use crate::potential::EnergyDependentPotential;
use crate::scalar::{Real, Scalar};

/// Continuation fails when the best overlap with the previous vector drops
/// below this.
pub const MIN_OVERLAP: f64 = 0.5;
/// Roots closer than this are reported once.
pub const ROOT_DEDUP_TOL: f64 = 1e-8;
const MAX_SUBDIVISIONS: usize = 12;

/// One point on a tracked eigen-branch of `H0 + V(E)`.
#[derive(Clone, Debug)]
pub struct BranchPoint<T: Scalar> {
    pub energy: T,
    pub value: T,
    /// Unit-norm right eigenvector.
    pub vector: Vec<T>,
}

impl<T: Scalar> BranchPoint<T> {
    /// `Re g(E) − E`.
    pub fn mismatch(&self) -> T::Real {
        self.value.re() - self.energy.re()
    }
}

/// Follows eigen-branches of `H0 + V(E)` by maximal eigenvector overlap.
pub struct BranchTracker<'a, T: Scalar> {
    spectrum: &'a Spectrum<T>,
    potential: &'a EnergyDependentPotential<T>,
    branch: usize,
}

impl<'a, T: Scalar> BranchTracker<'a, T> {
    pub fn new(spectrum: &'a Spectrum<T>, potential: &'a EnergyDependentPotential<T>, branch: usize) -> Self {
        BranchTracker {
            spectrum,
            potential,
            branch,
        }
    }

    pub fn system(&self, e: T) -> Result<EigenSystem<T>> {
        let h = &self.spectrum.h0_matrix() + &self.potential.evaluate(e)?;
        eig_general(&h)
    }

    fn point(sys: &EigenSystem<T>, e: T, k: usize) -> BranchPoint<T> {
        let mut vector = sys.right_vector(k);
        // unit norm, largest component real and positive
        let big = vector
            .iter()
            .copied()
            .fold(T::zero(), |m, x| if x.modulus() > m.modulus() { x } else { m });
        let phase = big.conj() / T::from(big.modulus() * norm2(&vector));
        for x in &mut vector {
            *x *= phase;
        }
        BranchPoint {
            energy: e,
            value: sys.values[k],
            vector,
        }
    }

    /// Branch `self.branch` in the sorted spectrum at `e`.
    pub fn start(&self, e: T) -> Result<BranchPoint<T>> {
        let sys = self.system(e)?;
        if self.branch >= sys.len() {
            return Err(Error::InvalidInput(format!(
                "branch {} out of range (N = {})",
                self.branch,
                sys.len()
            )));
        }
        Ok(Self::point(&sys, e, self.branch))
    }

    /// Best-overlap match of `from` within a precomputed system.
    pub fn best_match(sys: &EigenSystem<T>, from: &BranchPoint<T>) -> (usize, T::Real) {
        let mut best = (0, -T::Real::one());
        for k in 0..sys.len() {
            let o = overlap(&from.vector, &sys.right_vector(k));
            if o > best.1 {
                best = (k, o);
            }
        }
        best
    }

    /// Continues `from` to energy `e`, halving the step while the overlap
    /// stays below [`MIN_OVERLAP`].
    pub fn advance(&self, from: &BranchPoint<T>, e: T) -> Result<BranchPoint<T>> {
        let sys = self.system(e)?;
        self.advance_with(from, e, &sys, 0)
    }

    pub(crate) fn advance_with(
        &self,
        from: &BranchPoint<T>,
        e: T,
        sys: &EigenSystem<T>,
        depth: usize,
    ) -> Result<BranchPoint<T>> {
        let (k, o) = Self::best_match(sys, from);
        if o >= T::Real::lit(MIN_OVERLAP) {
            return Ok(Self::point(sys, e, k));
        }
        if depth >= MAX_SUBDIVISIONS {
            return Err(Error::BranchJump {
                branch: self.branch,
                energy: e.re().as_f64(),
                overlap: o.as_f64(),
            });
        }
        let mid = (from.energy + e) * T::lit(0.5);
        let mid_sys = self.system(mid)?;
        let half = self.advance_with(from, mid, &mid_sys, depth + 1)?;
        self.advance_with(&half, e, sys, depth + 1)
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions<R> {
    /// Uniform tracking steps across the bracket before refinement.
    pub scan_steps: usize,
    /// Bracket width where bisection hands over to the secant phase.
    pub secant_switch: R,
    pub max_iter: usize,
    /// Bound on `|g(E*) − E*|`.
    pub residual_tol: R,
}

impl<R: Real> Default for SolveOptions<R> {
    fn default() -> Self {
        SolveOptions {
            scan_steps: 16,
            secant_switch: R::lit(1e-6),
            max_iter: 200,
            residual_tol: R::lit(1e-10),
        }
    }
}

/// Converged Bethe-Salpeter state on one eigen-branch.
#[derive(Clone, Debug)]
pub struct BranchSolveReport<T: Scalar> {
    pub branch: usize,
    pub energy: T,
    /// Bracket updates after the initial scan.
    pub iterations: usize,
    /// `|g(E*) − E*|`.
    pub residual: T::Real,
    /// `Ω̄(E*)·Ψ0`, intermediate-normalized.
    pub wave_column: Vec<T>,
    /// Unit model vector `Ψ0` (model-space coordinates).
    pub model_vector: Vec<T>,
    /// `‖(E* − H0 − V(E*))·wave_column‖`.
    pub equation_residual: T::Real,
    /// Exact eigenvector of `H0 + V(E*)` at the root, unit norm.
    pub eigenvector: Vec<T>,
}

fn sign_change<R: Real>(a: R, b: R) -> bool {
    (a < R::zero() && b > R::zero()) || (a > R::zero() && b < R::zero())
}

fn at_real<T: Scalar>(e: T::Real) -> T {
    T::from(e)
}

/// Solves `g(E) = E` on one branch with the defaults of [`SolveOptions`].
pub fn solve_bs_state<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    branch: usize,
    bracket: (T::Real, T::Real),
) -> Result<BranchSolveReport<T>> {
    solve_bs_state_with(s, p, v, branch, bracket, &SolveOptions::default())
}

pub fn solve_bs_state_with<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    branch: usize,
    bracket: (T::Real, T::Real),
    opts: &SolveOptions<T::Real>,
) -> Result<BranchSolveReport<T>> {
    p.check_spectrum(s, "solve_bs_state")?;
    if v.dim() != s.len() {
        return Err(Error::dims("solve_bs_state", s.len(), v.dim()));
    }
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!(
            "solve_bs_state: bracket [{lo}, {hi}] must be finite and ordered"
        )));
    }
    let tracker = BranchTracker::new(s, v, branch);
    let no_root = || Error::NoRoot {
        branch,
        lo: lo.as_f64(),
        hi: hi.as_f64(),
    };

    let (root, iterations) = if v.is_energy_independent() {
        // g does not depend on E: the root is the eigenvalue itself
        let pt = tracker.start(at_real(lo))?;
        let e = pt.value;
        if e.re() < lo || e.re() > hi {
            return Err(no_root());
        }
        (tracker.advance(&pt, e)?, 0)
    } else {
        let steps = opts.scan_steps.max(1);
        let width = hi - lo;
        let mut prev = tracker.start(at_real(lo))?;
        let mut found = None;
        if prev.mismatch() == T::Real::zero() {
            found = Some((prev.clone(), prev.clone()));
        }
        let mut i = 1;
        while found.is_none() && i <= steps {
            let e = if i == steps {
                hi
            } else {
                lo + width * T::Real::lit(i as f64 / steps as f64)
            };
            let next = tracker.advance(&prev, at_real(e))?;
            if next.mismatch() == T::Real::zero() {
                found = Some((next.clone(), next));
            } else if sign_change(prev.mismatch(), next.mismatch()) {
                found = Some((prev.clone(), next));
            } else {
                prev = next;
            }
            i += 1;
        }
        let (a, b) = found.ok_or_else(no_root)?;
        refine_root(&tracker, a, b, opts)?
    };

    let root = if T::IS_COMPLEX && root.value.im() != T::Real::zero() {
        polish_complex(&tracker, root, opts)?
    } else {
        root
    };

    let residual = (root.value - root.energy).modulus();
    if !(residual <= opts.residual_tol) {
        return Err(Error::NoConvergence {
            operation: "solve_bs_state",
            iterations,
            residual: residual.as_f64(),
        });
    }
    finish_report(s, p, v, branch, root, iterations, residual)
}

/// Bisection until the bracket is below `secant_switch`, then Illinois
/// false position.
fn refine_root<T: Scalar>(
    tracker: &BranchTracker<'_, T>,
    a: BranchPoint<T>,
    b: BranchPoint<T>,
    opts: &SolveOptions<T::Real>,
) -> Result<(BranchPoint<T>, usize)> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (a.mismatch(), b.mismatch());
    if fa == T::Real::zero() {
        return Ok((a, 0));
    }
    if fb == T::Real::zero() {
        return Ok((b, 0));
    }
    let eps = T::Real::epsilon() * T::Real::lit(4.0);
    let half = T::Real::lit(0.5);
    let mut iterations = 0;
    let mut side = 0i8;
    while iterations < opts.max_iter {
        let (ea, eb) = (a.energy.re(), b.energy.re());
        let scale = T::Real::one() + ea.abs().max(eb.abs());
        if (eb - ea).abs() <= eps * scale {
            break;
        }
        let bisect = (eb - ea).abs() > opts.secant_switch;
        let mut c = if bisect { (ea + eb) * half } else { eb - fb * (eb - ea) / (fb - fa) };
        if !c.is_finite() || c <= ea.min(eb) || c >= ea.max(eb) {
            c = (ea + eb) * half;
        }
        let from = if (c - ea).abs() < (c - eb).abs() { &a } else { &b };
        let pc = tracker.advance(from, at_real(c))?;
        let fc = pc.mismatch();
        iterations += 1;
        if fc == T::Real::zero() {
            return Ok((pc, iterations));
        }
        if sign_change(fc, fb) {
            a = std::mem::replace(&mut b, pc);
            fa = fb;
            fb = fc;
            side = 0;
        } else {
            b = pc;
            fb = fc;
            if !bisect {
                // Illinois: damp the stale endpoint when it is retained twice
                if side == 1 {
                    fa = fa * half;
                }
                side = 1;
            }
        }
    }
    Ok(if fa.abs() < fb.abs() { (a, iterations) } else { (b, iterations) })
}

/// Complex secant on `g(E) − E` starting from the real-axis root.
fn polish_complex<T: Scalar>(
    tracker: &BranchTracker<'_, T>,
    start: BranchPoint<T>,
    opts: &SolveOptions<T::Real>,
) -> Result<BranchPoint<T>> {
    let h = |p: &BranchPoint<T>| p.value - p.energy;
    let mut p0 = start;
    let mut p1 = tracker.advance(&p0, p0.value)?;
    for _ in 0..opts.max_iter {
        let (h0, h1) = (h(&p0), h(&p1));
        if h1.modulus() <= T::Real::epsilon() * T::Real::lit(8.0) * (T::Real::one() + p1.energy.modulus()) {
            break;
        }
        let den = h1 - h0;
        if den == T::zero() {
            break;
        }
        let e2 = p1.energy - h1 * (p1.energy - p0.energy) / den;
        let p2 = tracker.advance(&p1, e2)?;
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

fn finish_report<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    branch: usize,
    root: BranchPoint<T>,
    iterations: usize,
    residual: T::Real,
) -> Result<BranchSolveReport<T>> {
    let pv: Vec<T> = p.p_indices().iter().map(|&i| root.vector[i]).collect();
    let weight = norm2(&pv);
    if weight < T::Real::lit(1e-8) {
        return Err(Error::InvalidInput(format!(
            "solve_bs_state: branch {branch} has no model-space component at E = {}",
            root.energy
        )));
    }
    let model_vector: Vec<T> = pv.iter().map(|&x| x / T::from(weight)).collect();
    let om = omega_bar(s, p, v, root.energy)?;
    let wave_column = om.block().mul_vec(&model_vector);
    let equation_residual = bs_residual(s, v, root.energy, &wave_column)?;
    Ok(BranchSolveReport {
        branch,
        energy: root.energy,
        iterations,
        residual,
        wave_column,
        model_vector,
        equation_residual,
        eigenvector: root.vector,
    })
}

/// `‖(E − H0 − V(E))·ψ‖`.
pub fn bs_residual<T: Scalar>(s: &Spectrum<T>, v: &EnergyDependentPotential<T>, e: T, psi: &[T]) -> Result<T::Real> {
    let vp = v.evaluate(e)?.mul_vec(psi);
    let r: Vec<T> = (0..s.len()).map(|i| (e - s.energy(i)) * psi[i] - vp[i]).collect();
    Ok(norm2(&r))
}

/// Root of `g_j(E) = E` found by the brute-force scan.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRoot<R> {
    /// Sorted position of the branch at the first grid node.
    pub branch: usize,
    pub energy: R,
    /// `‖P·v‖²` of the unit eigenvector at the root.
    pub model_weight: R,
}

/// Tabulates every eigen-branch of `H0 + V(E)` on a uniform grid, bisects
/// each sign change of `Re g_j(E) − E` and returns the deduplicated roots in
/// ascending order. Numerical failures along the grid end a branch instead of
/// raising; only malformed inputs are errors.
pub fn oracle_scan<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    range: (T::Real, T::Real),
    n_grid: usize,
) -> Result<Vec<OracleRoot<T::Real>>> {
    p.check_spectrum(s, "oracle_scan")?;
    if v.dim() != s.len() {
        return Err(Error::dims("oracle_scan", s.len(), v.dim()));
    }
    let (lo, hi) = range;
    if !(lo < hi) || n_grid < 2 {
        return Err(Error::InvalidInput(format!(
            "oracle_scan: need lo < hi and at least two nodes (got [{lo}, {hi}], {n_grid})"
        )));
    }
    let step = (hi - lo) / T::Real::lit((n_grid - 1) as f64);
    let node = |i: usize| if i + 1 == n_grid { hi } else { lo + step * T::Real::lit(i as f64) };
    let probe = BranchTracker::new(s, v, 0);
    let systems: Vec<Option<EigenSystem<T>>> = (0..n_grid)
        .into_par_iter()
        .map(|i| probe.system(at_real(node(i))).ok())
        .collect();

    let mut roots: Vec<OracleRoot<T::Real>> = (0..s.len())
        .into_par_iter()
        .flat_map_iter(|j| scan_branch(s, p, v, j, &systems, &node))
        .collect();

    roots.sort_by(|a, b| {
        a.energy
            .partial_cmp(&b.energy)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.branch.cmp(&b.branch))
    });
    let tol = T::Real::lit(ROOT_DEDUP_TOL);
    let mut out: Vec<OracleRoot<T::Real>> = Vec::with_capacity(roots.len());
    for r in roots {
        if out.last().is_some_and(|l| (r.energy - l.energy).abs() < tol) {
            continue;
        }
        out.push(r);
    }
    Ok(out)
}

fn scan_branch<T: Scalar>(
    s: &Spectrum<T>,
    p: &ModelSpace<T>,
    v: &EnergyDependentPotential<T>,
    j: usize,
    systems: &[Option<EigenSystem<T>>],
    node: &dyn Fn(usize) -> T::Real,
) -> Vec<OracleRoot<T::Real>> {
    let tracker = BranchTracker::new(s, v, j);
    let mut roots = Vec::new();
    let Some(first) = systems.iter().position(Option::is_some) else {
        return roots;
    };
    let Some(sys0) = &systems[first] else { return roots };
    if j >= sys0.len() {
        return roots;
    }
    let weight = |pt: &BranchPoint<T>| {
        p.p_indices()
            .iter()
            .map(|&i| pt.vector[i].modulus_sqr())
            .sum::<T::Real>()
    };
    let mut prev = BranchTracker::point(sys0, at_real(node(first)), j);
    if prev.mismatch() == T::Real::zero() {
        roots.push(OracleRoot {
            branch: j,
            energy: prev.energy.re(),
            model_weight: weight(&prev),
        });
    }
    for (i, sys) in systems.iter().enumerate().skip(first + 1) {
        let Some(sys) = sys else { break };
        let Ok(next) = tracker.advance_with(&prev, at_real(node(i)), sys, 0) else {
            break;
        };
        let fn_ = next.mismatch();
        if fn_ == T::Real::zero() {
            roots.push(OracleRoot {
                branch: j,
                energy: next.energy.re(),
                model_weight: weight(&next),
            });
        } else if sign_change(prev.mismatch(), fn_) {
            if let Ok(r) = bisect(&tracker, prev.clone(), next.clone()) {
                roots.push(OracleRoot {
                    branch: j,
                    energy: r.energy.re(),
                    model_weight: weight(&r),
                });
            }
        }
        prev = next;
    }
    roots
}

/// Plain bisection to a 1e-12 bracket (scaled for f32 precision).
fn bisect<T: Scalar>(tracker: &BranchTracker<'_, T>, a: BranchPoint<T>, b: BranchPoint<T>) -> Result<BranchPoint<T>> {
    let (mut a, mut b) = (a, b);
    let half = T::Real::lit(0.5);
    let tol = T::Real::lit(1e-12).max(T::Real::epsilon() * T::Real::lit(4.0));
    for _ in 0..200 {
        let (ea, eb) = (a.energy.re(), b.energy.re());
        let scale = T::Real::one().max(ea.abs());
        if (eb - ea).abs() <= tol * scale {
            break;
        }
        let c = (ea + eb) * half;
        if c <= ea || c >= eb {
            break;
        }
        let pc = tracker.advance(&a, at_real(c))?;
        if pc.mismatch() == T::Real::zero() {
            return Ok(pc);
        }
        if sign_change(a.mismatch(), pc.mismatch()) {
            b = pc;
        } else {
            a = pc;
        }
    }
    let e = (a.energy + b.energy) * T::lit(0.5);
    tracker.advance(&a, e)
}
