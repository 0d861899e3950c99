//! Difference ratios (divided differences) of matrix-valued functions of one
//! energy variable, with derivative limits for coincident points.
//!
//! Three evaluation paths exist. A function may supply an exact closed form;
//! otherwise separated points go through the Newton recursion and clustered
//! points through a Taylor series in the offsets, which avoids the `1/hⁿ`
//! cancellation of the recursion.

use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::{Real, Scalar};

/// Highest order `diff_ratio` accepts.
pub const MAX_ORDER: usize = 4;

/// Relative spread below which `Auto` prefers the Taylor path.
const TAYLOR_SPREAD: f64 = 0.05;
const TAYLOR_MAX_TERMS: usize = 40;

/// Matrix-valued function of a scalar energy.
pub trait MatrixFunction<T: Scalar> {
    fn shape(&self) -> (usize, usize);

    fn value(&self, x: T) -> Result<Matrix<T>>;

    /// `n`-th derivative, when an analytic channel exists.
    fn derivative(&self, _x: T, _n: usize) -> Option<Result<Matrix<T>>> {
        None
    }

    /// Exact divided difference over `pts` (repeats allowed), when known in
    /// closed form.
    fn closed_divided_difference(&self, _pts: &[T]) -> Option<Result<Matrix<T>>> {
        None
    }

    fn has_derivative(&self) -> bool {
        false
    }
}

impl<T: Scalar, F: MatrixFunction<T> + ?Sized> MatrixFunction<T> for &F {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn value(&self, x: T) -> Result<Matrix<T>> {
        (**self).value(x)
    }
    fn derivative(&self, x: T, n: usize) -> Option<Result<Matrix<T>>> {
        (**self).derivative(x, n)
    }
    fn closed_divided_difference(&self, pts: &[T]) -> Option<Result<Matrix<T>>> {
        (**self).closed_divided_difference(pts)
    }
    fn has_derivative(&self) -> bool {
        (**self).has_derivative()
    }
}

type ValueFn<'a, T> = Box<dyn Fn(T) -> Result<Matrix<T>> + Send + Sync + 'a>;
type DerivFn<'a, T> = Box<dyn Fn(T, usize) -> Result<Matrix<T>> + Send + Sync + 'a>;

/// Closure-backed [`MatrixFunction`].
pub struct FnMatrix<'a, T: Scalar> {
    shape: (usize, usize),
    f: ValueFn<'a, T>,
    df: Option<DerivFn<'a, T>>,
}

impl<'a, T: Scalar> FnMatrix<'a, T> {
    pub fn new(shape: (usize, usize), f: impl Fn(T) -> Result<Matrix<T>> + Send + Sync + 'a) -> Self {
        FnMatrix {
            shape,
            f: Box::new(f),
            df: None,
        }
    }

    /// Scalar function viewed as a 1×1 matrix.
    pub fn scalar(f: impl Fn(T) -> T + Send + Sync + 'a) -> Self {
        Self::new((1, 1), move |x| Ok(Matrix::scalar(f(x))))
    }

    pub fn with_derivative(mut self, df: impl Fn(T, usize) -> Result<Matrix<T>> + Send + Sync + 'a) -> Self {
        self.df = Some(Box::new(df));
        self
    }

    /// Adds a scalar derivative channel `df(x, n) = f⁽ⁿ⁾(x)`.
    pub fn with_scalar_derivative(self, df: impl Fn(T, usize) -> T + Send + Sync + 'a) -> Self {
        self.with_derivative(move |x, n| Ok(Matrix::scalar(df(x, n))))
    }
}

impl<T: Scalar> MatrixFunction<T> for FnMatrix<'_, T> {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }
    fn value(&self, x: T) -> Result<Matrix<T>> {
        (self.f)(x)
    }
    fn derivative(&self, x: T, n: usize) -> Option<Result<Matrix<T>>> {
        if n == 0 {
            return Some(self.value(x));
        }
        self.df.as_ref().map(|df| df(x, n))
    }
    fn has_derivative(&self) -> bool {
        self.df.is_some()
    }
}

/// Anchor `x0` plus offsets `x, x′, x″, …`; the order is the offset count.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoints<T> {
    pub anchor: T,
    pub offsets: Vec<T>,
}

impl<T: Scalar> SamplePoints<T> {
    pub fn new(anchor: T, offsets: Vec<T>) -> Self {
        SamplePoints { anchor, offsets }
    }

    /// `x0, x0 + h, x0 + 2h, …, x0 + n·h`.
    pub fn equispaced(anchor: T, h: T, n: usize) -> Self {
        let offsets = (1..=n).map(|i| anchor + h * T::lit(i as f64)).collect();
        SamplePoints { anchor, offsets }
    }

    pub fn order(&self) -> usize {
        self.offsets.len()
    }

    pub fn all(&self) -> Vec<T> {
        std::iter::once(self.anchor).chain(self.offsets.iter().copied()).collect()
    }

    pub fn has_coincident(&self) -> bool {
        let pts = self.all();
        pts.iter().enumerate().any(|(i, a)| pts[i + 1..].iter().any(|b| a == b))
    }

    /// Largest `|x_i − x0|`.
    pub fn spread(&self) -> T::Real {
        self.offsets
            .iter()
            .map(|&x| (x - self.anchor).modulus())
            .fold(T::Real::zero(), |a, b| a.max(b))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiffMode {
    /// Closed form if available, Taylor for clustered points with a
    /// derivative channel, recursion otherwise.
    #[default]
    Auto,
    /// Newton recursion; coincident slots use derivatives.
    Recursive,
    /// Taylor series about the anchor; needs a derivative channel.
    Taylor,
}

/// Order-`n` difference ratio `f[x0, x, x′, …]` with `n = pts.order()`.
pub fn diff_ratio<T: Scalar, F: MatrixFunction<T> + ?Sized>(f: &F, pts: &SamplePoints<T>) -> Result<Matrix<T>> {
    diff_ratio_with(f, pts, DiffMode::Auto)
}

pub fn diff_ratio_with<T: Scalar, F: MatrixFunction<T> + ?Sized>(
    f: &F,
    pts: &SamplePoints<T>,
    mode: DiffMode,
) -> Result<Matrix<T>> {
    let n = pts.order();
    if n > MAX_ORDER {
        return Err(Error::InvalidInput(format!("difference ratio order {n} exceeds {MAX_ORDER}")));
    }
    divided_difference(f, &pts.all(), mode)
}

/// Divided difference over an arbitrary point list (no order cap).
pub fn divided_difference<T: Scalar, F: MatrixFunction<T> + ?Sized>(f: &F, pts: &[T], mode: DiffMode) -> Result<Matrix<T>> {
    if pts.is_empty() {
        return Err(Error::InvalidInput("divided difference needs at least one point".into()));
    }
    if pts.len() == 1 {
        return f.value(pts[0]);
    }
    match mode {
        DiffMode::Recursive => recursive(f, pts),
        DiffMode::Taylor => taylor(f, pts).unwrap_or_else(|| {
            Err(Error::CoincidentWithoutDerivative { order: pts.len() - 1 })
        }),
        DiffMode::Auto => {
            if let Some(r) = f.closed_divided_difference(pts) {
                return r;
            }
            let x0 = pts[0];
            let spread = pts.iter().map(|&x| (x - x0).modulus()).fold(T::Real::zero(), |a, b| a.max(b));
            if f.has_derivative() && spread <= T::Real::lit(TAYLOR_SPREAD) * (T::Real::one() + x0.modulus()) {
                if let Some(r) = taylor(f, pts) {
                    match r {
                        Ok(m) => return Ok(m),
                        Err(Error::NoConvergence { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            recursive(f, pts)
        }
    }
}

fn sort_points<T: Scalar>(pts: &[T]) -> Vec<T> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| {
        a.re()
            .partial_cmp(&b.re())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im().partial_cmp(&b.im()).unwrap_or(std::cmp::Ordering::Equal))
    });
    p
}

fn factorial<R: Real>(n: usize) -> R {
    (1..=n).fold(R::one(), |acc, k| acc * R::lit(k as f64))
}

/// Newton table on sorted points; a zero-width slot uses `f⁽ᵏ⁾/k!`.
fn recursive<T: Scalar, F: MatrixFunction<T> + ?Sized>(f: &F, pts: &[T]) -> Result<Matrix<T>> {
    let order = pts.len() - 1;
    let p = sort_points(pts);
    let mut cache: Vec<(T, Matrix<T>)> = Vec::new();
    let mut level: Vec<Matrix<T>> = Vec::with_capacity(p.len());
    for &x in &p {
        let v = match cache.iter().find(|(y, _)| *y == x) {
            Some((_, m)) => m.clone(),
            None => {
                let m = f.value(x)?;
                cache.push((x, m.clone()));
                m
            }
        };
        level.push(v);
    }
    for k in 1..=order {
        let mut next = Vec::with_capacity(level.len() - 1);
        for i in 0..level.len() - 1 {
            let (a, b) = (p[i], p[i + k]);
            if a == b {
                let d = match f.derivative(a, k) {
                    Some(r) => r?,
                    None => return Err(Error::CoincidentWithoutDerivative { order }),
                };
                next.push(d.scale(T::one() / T::from(factorial::<T::Real>(k))));
            } else {
                let diff = &level[i + 1] - &level[i];
                next.push(diff.scale(T::one() / (b - a)));
            }
        }
        level = next;
    }
    Ok(level.pop().expect("one entry left"))
}

/// `h_0..=h_kmax` of the complete homogeneous symmetric polynomials in `u`.
pub fn complete_homogeneous<T: Scalar>(u: &[T], kmax: usize) -> Vec<T> {
    let mut h = vec![T::zero(); kmax + 1];
    h[0] = T::one();
    for &x in u {
        for k in 1..=kmax {
            let prev = h[k - 1];
            h[k] += x * prev;
        }
    }
    h
}

/// `f[x0..xn] = Σ_{k≥n} f⁽ᵏ⁾(x0)/k! · h_{k−n}(x1−x0, …, xn−x0)`.
/// `None` without a derivative channel.
fn taylor<T: Scalar, F: MatrixFunction<T> + ?Sized>(f: &F, pts: &[T]) -> Option<Result<Matrix<T>>> {
    let n = pts.len() - 1;
    let x0 = pts[0];
    let y: Vec<T> = pts[1..].iter().map(|&x| x - x0).collect();
    if y.iter().all(|v| *v == T::zero()) {
        return Some(f.derivative(x0, n)?.map(|d| d.scale(T::one() / T::from(factorial::<T::Real>(n)))));
    }
    if !f.has_derivative() {
        return None;
    }
    let h = complete_homogeneous(&y, TAYLOR_MAX_TERMS);
    let (rows, cols) = f.shape();
    let mut acc = Matrix::zeros(rows, cols);
    let mut small_run = 0;
    let eps = T::Real::epsilon();
    let mut fact = factorial::<T::Real>(n);
    for j in 0..=TAYLOR_MAX_TERMS {
        let k = n + j;
        if j > 0 {
            fact = fact * T::Real::lit(k as f64);
        }
        let d = match f.derivative(x0, k)? {
            Ok(d) => d,
            Err(e) => return Some(Err(e)),
        };
        let term = d.scale(h[j] / T::from(fact));
        let tmax = term.max_abs();
        acc += &term;
        if tmax <= eps * acc.max_abs() * T::Real::lit(0.25) || tmax == T::Real::zero() && j >= 2 {
            small_run += 1;
            if small_run >= 2 {
                return Some(Ok(acc));
            }
        } else {
            small_run = 0;
        }
    }
    Some(Err(Error::NoConvergence {
        operation: "divided difference (Taylor series)",
        iterations: TAYLOR_MAX_TERMS,
        residual: f64::NAN,
    }))
}

/// `|f[x0, x0+h, …, x0+n·h] − f⁽ⁿ⁾(x0)/n!|`, largest over matrix entries.
pub fn taylor_limit_check<T: Scalar, F: MatrixFunction<T> + ?Sized>(f: &F, x0: T, n: usize, h: T) -> Result<T::Real> {
    let pts = SamplePoints::equispaced(x0, h, n);
    // The series in the offsets is exact for polynomials at any spread.
    let dr = match diff_ratio_with(f, &pts, DiffMode::Taylor) {
        Ok(m) => m,
        Err(Error::NoConvergence { .. }) => diff_ratio(f, &pts)?,
        Err(e) => return Err(e),
    };
    let d = match f.derivative(x0, n) {
        Some(r) => r?,
        None => return Err(Error::CoincidentWithoutDerivative { order: n }),
    };
    let limit = d.scale(T::one() / T::from(factorial::<T::Real>(n)));
    Ok(dr.max_abs_diff(&limit))
}

/// Pointwise product `A(x)·B(x)`; divided differences follow the Leibniz
/// rule `(AB)[x0..xn] = Σ_k A[x0..xk]·B[xk..xn]`.
pub struct Product<A, B> {
    pub a: A,
    pub b: B,
}

impl<A, B> Product<A, B> {
    pub fn new(a: A, b: B) -> Self {
        Product { a, b }
    }
}

fn binomial<R: Real>(n: usize, k: usize) -> R {
    let mut c = R::one();
    for i in 0..k {
        c = c * R::lit((n - i) as f64) / R::lit((i + 1) as f64);
    }
    c
}

impl<T: Scalar, A: MatrixFunction<T>, B: MatrixFunction<T>> MatrixFunction<T> for Product<A, B> {
    fn shape(&self) -> (usize, usize) {
        (self.a.shape().0, self.b.shape().1)
    }

    fn value(&self, x: T) -> Result<Matrix<T>> {
        self.a.value(x)?.matmul(&self.b.value(x)?)
    }

    fn derivative(&self, x: T, n: usize) -> Option<Result<Matrix<T>>> {
        if n == 0 {
            return Some(self.value(x));
        }
        if !self.has_derivative() {
            return None;
        }
        let run = || -> Result<Matrix<T>> {
            let mut acc = Matrix::zeros(self.shape().0, self.shape().1);
            for k in 0..=n {
                let da = self.a.derivative(x, k).expect("checked")?;
                let db = self.b.derivative(x, n - k).expect("checked")?;
                acc += &da.matmul(&db)?.scale(T::from(binomial::<T::Real>(n, k)));
            }
            Ok(acc)
        };
        Some(run())
    }

    fn closed_divided_difference(&self, pts: &[T]) -> Option<Result<Matrix<T>>> {
        let run = || -> Result<Matrix<T>> {
            let mut acc = Matrix::zeros(self.shape().0, self.shape().1);
            for k in 0..pts.len() {
                let da = divided_difference(&self.a, &pts[..=k], DiffMode::Auto)?;
                let db = divided_difference(&self.b, &pts[k..], DiffMode::Auto)?;
                acc += &da.matmul(&db)?;
            }
            Ok(acc)
        };
        Some(run())
    }

    fn has_derivative(&self) -> bool {
        self.a.has_derivative() && self.b.has_derivative()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: Vec<f64>) -> FnMatrix<'static, f64> {
        let c2 = c.clone();
        FnMatrix::scalar(move |x: f64| c.iter().rev().fold(0.0, |acc, &a| acc * x + a)).with_scalar_derivative(
            move |x, n| {
                let mut d = c2.clone();
                for _ in 0..n {
                    d = d.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect();
                }
                d.iter().rev().fold(0.0, |acc, &a| acc * x + a)
            },
        )
    }

    fn exp_fn() -> FnMatrix<'static, f64> {
        FnMatrix::scalar(|x: f64| x.exp()).with_scalar_derivative(|x, _| x.exp())
    }

    fn val(m: Matrix<f64>) -> f64 {
        m[(0, 0)]
    }

    #[test]
    fn square_first_order() {
        let f = FnMatrix::scalar(|x: f64| x * x);
        assert_eq!(val(diff_ratio(&f, &SamplePoints::new(1.0, vec![2.0])).unwrap()), 3.0);
    }

    #[test]
    fn square_second_order_is_one() {
        let f = FnMatrix::scalar(|x: f64| x * x);
        for pts in [(0.0, 1.0, 3.0), (-2.0, 0.5, 7.0), (1.0, 1.25, 1.5)] {
            let r = val(diff_ratio(&f, &SamplePoints::new(pts.0, vec![pts.1, pts.2])).unwrap());
            assert!((r - 1.0).abs() < 1e-13, "{pts:?} -> {r}");
        }
    }

    #[test]
    fn cube_third_order() {
        let f = FnMatrix::scalar(|x: f64| x * x * x);
        let r = val(diff_ratio(&f, &SamplePoints::new(0.0, vec![1.0, 2.0, 3.0])).unwrap());
        assert_eq!(r, 1.0);
    }

    #[test]
    fn coincident_without_derivative() {
        let f = FnMatrix::scalar(|x: f64| x * x);
        assert!(matches!(
            diff_ratio(&f, &SamplePoints::new(1.0, vec![1.0])),
            Err(Error::CoincidentWithoutDerivative { order: 1 })
        ));
    }

    #[test]
    fn coincident_uses_derivative() {
        let f = exp_fn();
        let r = val(diff_ratio_with(&f, &SamplePoints::new(0.5, vec![0.5, 0.5]), DiffMode::Recursive).unwrap());
        assert!((r - 0.5f64.exp() / 2.0).abs() < 1e-15);
        // mixed: f[a, a, b]
        let (a, b) = (0.0f64, 1.0f64);
        let r = val(diff_ratio_with(&f, &SamplePoints::new(a, vec![a, b]), DiffMode::Recursive).unwrap());
        let expect = ((b.exp() - a.exp()) / (b - a) - a.exp()) / (b - a);
        assert!((r - expect).abs() < 1e-14);
    }

    #[test]
    fn cube_second_order_identity() {
        let f = poly(vec![0.0, 0.0, 0.0, 1.0]);
        let (x0, x, xp) = (0.3, 0.7, 1.9);
        let r = val(diff_ratio_with(&f, &SamplePoints::new(x0, vec![x, xp]), DiffMode::Recursive).unwrap());
        let expect = 0.5 * 6.0 * x0 + (6.0 / 6.0) * (x + xp - 2.0 * x0);
        assert!((r - expect).abs() < 1e-13);
    }

    #[test]
    fn exp_first_order_deviation() {
        let d = taylor_limit_check(&exp_fn(), 0.0, 1, 1e-4).unwrap();
        assert!((d - 5e-5).abs() < 1e-8, "{d}");
    }

    #[test]
    fn low_degree_polynomial_zero_deviation() {
        let f = poly(vec![1.0, -2.0, 0.5]);
        for n in 3..=4 {
            for h in [1e-1, 1e-3, 0.7] {
                assert_eq!(taylor_limit_check(&f, 0.4, n, h).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn exp_second_order_halving() {
        let f = exp_fn();
        let h = 1e-3;
        let r = taylor_limit_check(&f, 0.0, 2, h).unwrap() / taylor_limit_check(&f, 0.0, 2, h / 2.0).unwrap();
        assert!((r - 2.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn taylor_matches_recursion_for_separated_points() {
        let f = exp_fn();
        let pts = SamplePoints::new(0.1, vec![0.12, 0.13, 0.16]);
        let a = val(diff_ratio_with(&f, &pts, DiffMode::Recursive).unwrap());
        let b = val(diff_ratio_with(&f, &pts, DiffMode::Taylor).unwrap());
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn order_cap() {
        let f = exp_fn();
        assert!(diff_ratio(&f, &SamplePoints::equispaced(0.0, 0.1, 5)).is_err());
    }

    #[test]
    fn complete_homogeneous_small() {
        let h = complete_homogeneous(&[1.0, 2.0], 2);
        assert_eq!(h, vec![1.0, 3.0, 7.0]);
    }

    #[test]
    fn leibniz_product() {
        let a = poly(vec![1.0, 2.0]);
        let b = exp_fn();
        let prod = Product::new(&a, &b);
        let plain = FnMatrix::scalar(|x: f64| (1.0 + 2.0 * x) * x.exp());
        let pts = [0.0, 0.4, 1.1];
        let got = val(divided_difference(&prod, &pts, DiffMode::Auto).unwrap());
        let want = val(divided_difference(&plain, &pts, DiffMode::Recursive).unwrap());
        assert!((got - want).abs() < 1e-13);
        let d2 = val(prod.derivative(0.3, 2).unwrap().unwrap());
        let expect = (1.0 + 2.0 * 0.3 + 4.0) * 0.3f64.exp();
        assert!((d2 - expect).abs() < 1e-13);
    }
}
