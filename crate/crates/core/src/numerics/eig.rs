//! General (non-Hermitian) eigendecomposition with biorthonormal left and
//! right eigenvectors.
//!
//! The matrix is lifted to complex arithmetic, reduced to Hessenberg form by
//! Householder reflections and brought to upper-triangular Schur form by the
//! single-shift QR algorithm with Wilkinson shifts. Right eigenvectors come
//! from back substitution on the triangular factor; the left eigenvectors are
//! the rows of the inverse of the right-vector matrix, so `L·R = I` holds by
//! construction.

use num_complex::Complex;
use num_traits::{Float, One, Zero};

use super::linsolve::Lu;
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Overlap floor `|l·r| / (‖l‖‖r‖)` below which a matrix counts as defective.
pub const DEFECTIVE_OVERLAP: f64 = 1e-8;

/// Eigenvalues with right (columns) and left (rows) eigenvectors,
/// biorthonormal: `left · right = I`.
#[derive(Clone, Debug)]
pub struct EigenSystem<T: Scalar> {
    pub values: Vec<T>,
    pub right: Matrix<T>,
    pub left: Matrix<T>,
}

impl<T: Scalar> EigenSystem<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn right_vector(&self, k: usize) -> Vec<T> {
        self.right.column(k)
    }

    pub fn left_vector(&self, k: usize) -> Vec<T> {
        self.left.row(k).to_vec()
    }

    /// `Σ_k f(λ_k) r_k l_k`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let fk = f(self.values[k]);
            for i in 0..n {
                let ri = self.right[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += ri * self.left[(k, j)];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.reconstruct_with(|x| x)
    }

    /// Smallest `|l_k·r_k| / (‖l_k‖‖r_k‖)` over all pairs.
    pub fn min_overlap(&self) -> T::Real {
        let n = self.values.len();
        (0..n)
            .map(|k| {
                let r = self.right.column(k);
                let l = self.left.row(k);
                let lr: T = l.iter().zip(&r).map(|(&a, &b)| a * b).sum();
                lr.modulus() / (super::matrix::norm2(l) * super::matrix::norm2(&r))
            })
            .fold(T::Real::infinity(), |a, b| a.min(b))
    }
}

/// Eigendecomposition of a square diagonalizable matrix.
///
/// Eigenvalues are sorted by ascending real part, ties by ascending imaginary
/// part. Right vectors have unit 2-norm. For a real scalar the spectrum must
/// be real (imaginary parts up to `1e-10·(1+‖M‖)` are dropped); a genuinely
/// complex pair yields [`Error::ComplexEigenvalue`].
pub fn eig_general<T: Scalar>(m: &Matrix<T>) -> Result<EigenSystem<T>> {
    if !m.is_square() {
        return Err(Error::dims("eig_general", "square matrix", format!("{:?}", m.shape())));
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput("eig_general: non-finite entries".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(EigenSystem {
            values: vec![],
            right: Matrix::zeros(0, 0),
            left: Matrix::zeros(0, 0),
        });
    }
    let a = m.to_complex();
    let (t, z) = schur(a)?;
    let norm = t.max_abs().max(T::Real::min_positive_value());
    let y = triangular_eigenvectors(&t, norm);
    let mut right = z.matmul(&y)?;

    for k in 0..n {
        let col = right.column(k);
        let nrm = super::matrix::norm2(&col);
        let scaled: Vec<_> = col.iter().map(|&x| x / Complex::from(nrm)).collect();
        right.set_column(k, &scaled);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<Complex<T::Real>> = (0..n).map(|k| t[(k, k)]).collect();
    order.sort_by(|&i, &j| {
        vals[i]
            .re
            .partial_cmp(&vals[j].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(vals[i].im.partial_cmp(&vals[j].im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let right = right.select_cols(&order);
    let vals: Vec<_> = order.iter().map(|&k| vals[k]).collect();

    let lu = Lu::factor(&right)?;
    if lu.is_singular() {
        return Err(Error::Defective { min_overlap: 0.0 });
    }
    let left = lu.inverse()?;

    let tol = T::Real::lit(1e-10) * (T::Real::one() + norm);
    let mut values = Vec::with_capacity(n);
    for v in &vals {
        match T::from_complex(*v, tol) {
            Some(x) => values.push(x),
            None => {
                return Err(Error::ComplexEigenvalue {
                    re: v.re.as_f64(),
                    im: v.im.as_f64(),
                })
            }
        }
    }
    let narrow = |mat: &Matrix<Complex<T::Real>>| -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(mat.rows(), mat.cols());
        for i in 0..mat.rows() {
            for j in 0..mat.cols() {
                let z = mat[(i, j)];
                out[(i, j)] = if T::IS_COMPLEX {
                    T::from_complex(z, T::Real::zero()).expect("complex scalar")
                } else {
                    // Real spectrum of a real matrix: the vectors are real up to a phase.
                    T::from_parts(z.re, T::Real::zero()).expect("real part")
                };
            }
        }
        Ok(out)
    };

    let (right, left) = if T::IS_COMPLEX {
        (narrow(&right)?, narrow(&left)?)
    } else {
        let real_right = realify_columns(&right);
        let lu = Lu::factor(&real_right)?;
        if lu.is_singular() {
            return Err(Error::Defective { min_overlap: 0.0 });
        }
        let real_left = lu.inverse()?;
        (narrow(&real_right)?, narrow(&real_left)?)
    };

    let sys = EigenSystem { values, right, left };
    let min_overlap = sys.min_overlap();
    if !(min_overlap >= T::Real::lit(DEFECTIVE_OVERLAP)) || !sys.left.is_finite() {
        return Err(Error::Defective {
            min_overlap: min_overlap.as_f64(),
        });
    }
    Ok(sys)
}

/// Rotates each column by a global phase so that its largest entry is real
/// and positive, then drops the (now negligible) imaginary parts.
fn realify_columns<R: Real>(r: &Matrix<Complex<R>>) -> Matrix<Complex<R>> {
    let mut out = r.clone();
    for k in 0..r.cols() {
        let col = r.column(k);
        let pivot = col
            .iter()
            .copied()
            .fold(Complex::zero(), |best: Complex<R>, x| if x.norm() > best.norm() { x } else { best });
        let phase = if pivot.norm() > R::zero() {
            pivot.conj() / Complex::from(pivot.norm())
        } else {
            Complex::one()
        };
        let rotated: Vec<_> = col.iter().map(|&x| Complex::new((x * phase).re, R::zero())).collect();
        let nrm = super::matrix::norm2(&rotated);
        let rotated: Vec<_> = rotated.iter().map(|&x| x / Complex::from(nrm)).collect();
        out.set_column(k, &rotated);
    }
    out
}

/// Complex Schur form `A = Z T Z^H` with `T` upper triangular.
pub(crate) fn schur<R: Real>(mut a: Matrix<Complex<R>>) -> Result<(Matrix<Complex<R>>, Matrix<Complex<R>>)> {
    let n = a.rows();
    let mut z = Matrix::<Complex<R>>::identity(n);
    hessenberg(&mut a, &mut z);
    let eps = R::epsilon();
    let anorm = a.max_abs().max(R::min_positive_value());
    let max_iter = 60 * n.max(1);
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut its = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let mut s = a[(lo - 1, lo - 1)].norm() + a[(lo, lo)].norm();
            if s == R::zero() {
                s = anorm;
            }
            if a[(lo, lo - 1)].norm() <= eps * s {
                a[(lo, lo - 1)] = Complex::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::EigenNoConvergence { iterations: total });
        }
        let shift = if its % 11 == 0 {
            // exceptional shift
            a[(hi, hi)] + Complex::from(a[(hi, hi - 1)].norm() * R::lit(0.75))
        } else {
            wilkinson_shift(
                a[(hi - 1, hi - 1)],
                a[(hi - 1, hi)],
                a[(hi, hi - 1)],
                a[(hi, hi)],
            )
        };
        qr_step(&mut a, &mut z, lo, hi, shift);
    }
    for i in 0..n {
        for j in 0..i {
            a[(i, j)] = Complex::zero();
        }
    }
    Ok((a, z))
}

fn wilkinson_shift<R: Real>(a: Complex<R>, b: Complex<R>, c: Complex<R>, d: Complex<R>) -> Complex<R> {
    let half = Complex::from(R::lit(0.5));
    let p = (a - d) * half;
    let disc = (p * p + b * c).sqrt();
    let m1 = (a + d) * half + disc;
    let m2 = (a + d) * half - disc;
    if (m1 - d).norm() < (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Givens rotation `[c s; -conj(s) c]` zeroing `y` against `x`.
fn givens<R: Real>(x: Complex<R>, y: Complex<R>) -> (R, Complex<R>) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == R::zero() {
        return (R::one(), Complex::zero());
    }
    if ax == R::zero() {
        return (R::zero(), Complex::one());
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = (x / Complex::from(ax)) * y.conj() / Complex::from(r);
    (c, s)
}

fn qr_step<R: Real>(a: &mut Matrix<Complex<R>>, z: &mut Matrix<Complex<R>>, lo: usize, hi: usize, shift: Complex<R>) {
    let n = a.rows();
    for k in lo..=hi {
        a[(k, k)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(a[(k, k)], a[(k + 1, k)]);
        let cc = Complex::from(c);
        for j in k..n {
            let x = a[(k, j)];
            let y = a[(k + 1, j)];
            a[(k, j)] = cc * x + s * y;
            a[(k + 1, j)] = -s.conj() * x + cc * y;
        }
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        let cc = Complex::from(c);
        let top = (k + 2).min(hi);
        for i in 0..=top {
            let x = a[(i, k)];
            let y = a[(i, k + 1)];
            a[(i, k)] = x * cc + y * s.conj();
            a[(i, k + 1)] = -x * s + y * cc;
        }
        for i in 0..n {
            let x = z[(i, k)];
            let y = z[(i, k + 1)];
            z[(i, k)] = x * cc + y * s.conj();
            z[(i, k + 1)] = -x * s + y * cc;
        }
    }
    for k in lo..=hi {
        a[(k, k)] += shift;
    }
}

fn hessenberg<R: Real>(a: &mut Matrix<Complex<R>>, z: &mut Matrix<Complex<R>>) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<Complex<R>> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = super::matrix::norm2(&x);
        if xnorm == R::zero() {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > R::zero() {
            x0 / Complex::from(x0.norm())
        } else {
            Complex::one()
        };
        let alpha = -phase * Complex::from(xnorm);
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = super::matrix::norm2(&v);
        if vnorm == R::zero() {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= Complex::from(vnorm);
        }
        let two = Complex::from(R::lit(2.0));
        // A <- (I - 2vv^H) A
        for j in 0..n {
            let s: Complex<R> = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + 1 + i, j)]).sum();
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, j)] -= two * *vi * s;
            }
        }
        // A <- A (I - 2vv^H), Z <- Z (I - 2vv^H)
        for mat in [&mut *a, &mut *z] {
            for i in 0..n {
                let s: Complex<R> = v.iter().enumerate().map(|(j, vj)| mat[(i, k + 1 + j)] * *vj).sum();
                for (j, vj) in v.iter().enumerate() {
                    mat[(i, k + 1 + j)] -= two * s * vj.conj();
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Complex::zero();
        }
    }
}

/// Eigenvectors of an upper-triangular matrix by back substitution.
fn triangular_eigenvectors<R: Real>(t: &Matrix<Complex<R>>, norm: R) -> Matrix<Complex<R>> {
    let n = t.rows();
    let small = R::epsilon() * norm * R::lit(64.0);
    let mut y = Matrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex::one();
        for i in (0..k).rev() {
            let mut num: Complex<R> = Complex::zero();
            for j in i + 1..=k {
                num += t[(i, j)] * y[(j, k)];
            }
            let mut den = t[(i, i)] - lambda;
            if den.norm() <= small {
                if num.norm() <= small {
                    // degenerate eigenvalue with an independent direction
                    y[(i, k)] = Complex::zero();
                    continue;
                }
                den = Complex::from(small.max(R::min_positive_value()));
            }
            y[(i, k)] = -num / den;
        }
    }
    y
}
