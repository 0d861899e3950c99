//! Scalar abstraction shared by every numeric module.
//!
//! Real scenarios run in `f64`; scenarios with a damped photon propagator
//! need complex arithmetic and run in [`num_complex::Complex64`]. Both go
//! through the same generic code paths.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive, Zero};

/// Real floating-point field: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field scalar used for matrix entries and energies: real or complex.
pub trait Scalar:
    Copy
    + PartialEq
    + Debug
    + Display
    + NumAssign
    + Neg<Output = Self>
    + Sum
    + From<Self::Real>
    + Send
    + Sync
    + 'static
{
    type Real: Real;

    const IS_COMPLEX: bool;

    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn conj(self) -> Self;
    /// Modulus `|z|`.
    fn modulus(self) -> Self::Real;
    fn is_finite(self) -> bool;
    fn to_complex(self) -> Complex<Self::Real>;
    /// Builds `re + i·im`; `None` for a real scalar with a nonzero imaginary part.
    fn from_parts(re: Self::Real, im: Self::Real) -> Option<Self>;

    fn from_real(r: Self::Real) -> Self {
        Self::from(r)
    }

    fn lit(x: f64) -> Self {
        Self::from(Self::Real::lit(x))
    }

    fn modulus_sqr(self) -> Self::Real {
        let m = self.modulus();
        m * m
    }

    /// Narrows a complex number back to `Self`, accepting an imaginary part
    /// up to `tol` for real scalars.
    fn from_complex(z: Complex<Self::Real>, tol: Self::Real) -> Option<Self> {
        if Self::IS_COMPLEX {
            Self::from_parts(z.re, z.im)
        } else if z.im.abs() <= tol {
            Self::from_parts(z.re, Self::Real::zero())
        } else {
            None
        }
    }
}

macro_rules! real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            const IS_COMPLEX: bool = false;

            fn re(self) -> $t {
                self
            }
            fn im(self) -> $t {
                0.0
            }
            fn conj(self) -> $t {
                self
            }
            fn modulus(self) -> $t {
                self.abs()
            }
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            fn to_complex(self) -> Complex<$t> {
                Complex::new(self, 0.0)
            }
            fn from_parts(re: $t, im: $t) -> Option<$t> {
                (im == 0.0).then_some(re)
            }
        }
    };
}

real_scalar!(f32);
real_scalar!(f64);

impl<R: Real> Scalar for Complex<R> {
    type Real = R;
    const IS_COMPLEX: bool = true;

    fn re(self) -> R {
        self.re
    }
    fn im(self) -> R {
        self.im
    }
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn modulus(self) -> R {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_complex(self) -> Complex<R> {
        self
    }
    fn from_parts(re: R, im: R) -> Option<Self> {
        Some(Complex::new(re, im))
    }
}
