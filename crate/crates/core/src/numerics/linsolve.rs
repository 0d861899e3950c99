use num_traits::{Float, Zero};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Condition-number ceiling above which a system counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Clone, Debug)]
pub struct Lu<T: Scalar> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("Lu::factor", "square matrix", format!("{:?}", a.shape())));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].modulus()))
                .fold((k, T::Real::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::Real::zero() {
                singular = true;
                continue;
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Lu { lu, perm, singular })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solves `A·X = B` column by column.
    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::dims("Lu::solve", format!("{n} rows"), format!("{} rows", b.rows())));
        }
        if self.singular {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        let mut x = Matrix::zeros(n, b.cols());
        for c in 0..b.cols() {
            let mut y: Vec<T> = self.perm.iter().map(|&p| b[(p, c)]).collect();
            for i in 0..n {
                let mut s = y[i];
                for (j, &yj) in y.iter().enumerate().take(i) {
                    s -= self.lu[(i, j)] * yj;
                }
                y[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in i + 1..n {
                    s -= self.lu[(i, j)] * y[j];
                }
                y[i] = s / self.lu[(i, i)];
            }
            x.set_column(c, &y);
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve(&Matrix::identity(self.lu.rows()))
    }
}

/// One-norm condition number `‖A‖₁‖A⁻¹‖₁`, computed from the explicit
/// inverse (the matrices here are small).
pub fn condition_estimate<T: Scalar>(a: &Matrix<T>) -> Result<T::Real> {
    let lu = Lu::factor(a)?;
    if lu.is_singular() {
        return Ok(T::Real::infinity());
    }
    let inv = lu.inverse()?;
    let c = a.norm_one() * inv.norm_one();
    Ok(if c.is_finite() { c } else { T::Real::infinity() })
}

/// Solves `A·X = B`, rejecting systems whose condition estimate exceeds
/// [`MAX_CONDITION`].
pub fn solve_linear<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::dims("solve_linear", "square matrix", format!("{:?}", a.shape())));
    }
    if b.rows() != a.rows() {
        return Err(Error::dims("solve_linear", format!("{} rows", a.rows()), format!("{} rows", b.rows())));
    }
    let lu = Lu::factor(a)?;
    if lu.is_singular() {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let inv = lu.inverse()?;
    let cond = a.norm_one() * inv.norm_one();
    if !(cond <= T::Real::lit(MAX_CONDITION)) {
        return Err(Error::Singular { condition: cond.as_f64() });
    }
    let x = lu.solve(b)?;
    if !x.is_finite() {
        return Err(Error::Singular { condition: cond.as_f64() });
    }
    Ok(x)
}

/// Inverse of a well-conditioned square matrix.
pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    solve_linear(a, &Matrix::identity(a.rows()))
}
