//! Scalar traits shared by the `f64` and double-double code paths.

use std::fmt::Debug;
use std::ops::{AddAssign, DivAssign, MulAssign, Neg, SubAssign};

use num_complex::Complex;
use num_traits::Num;

use crate::wide::Wide;

pub type WideComplex = Complex<Wide>;

/// A field element usable in the dense kernels.
pub trait Field:
    nalgebra::Scalar
    + Copy
    + Num
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
{
    type Real: Real;

    fn from_real(r: Self::Real) -> Self;

    fn from_f64(x: f64) -> Self {
        Self::from_real(<Self::Real as Real>::of(x))
    }

    /// Modulus rounded to `f64`; used for pivoting, norms and reporting.
    fn modulus(self) -> f64;

    fn conj(self) -> Self;

    /// `*acc += a * b` inside dot products, where an error bound relative
    /// to `|a b| + |acc|` is all that is required.
    #[inline]
    fn mul_acc(acc: &mut Self, a: Self, b: Self) {
        *acc += a * b;
    }
}

/// Real scalars: `f64` or [`Wide`].
pub trait Real: Field<Real = Self> + num_traits::NumAssign + PartialOrd + Debug {
    fn of(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
}

impl Field for f64 {
    type Real = f64;
    fn from_real(r: f64) -> Self {
        r
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl Field for Wide {
    type Real = Wide;
    fn from_real(r: Wide) -> Self {
        r
    }
    fn modulus(self) -> f64 {
        self.to_f64().abs()
    }
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn mul_acc(acc: &mut Self, a: Self, b: Self) {
        *acc = acc.add_sloppy(a * b);
    }
}

impl Real for Wide {
    fn of(x: f64) -> Self {
        Wide::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Wide::to_f64(self)
    }
    fn abs(self) -> Self {
        Wide::abs(self)
    }
    fn sqrt(self) -> Self {
        Wide::sqrt(self)
    }
}

impl<R: Real> Field for Complex<R> {
    type Real = R;
    #[inline]
    fn mul_acc(acc: &mut Self, a: Self, b: Self) {
        R::mul_acc(&mut acc.re, a.re, b.re);
        R::mul_acc(&mut acc.re, -a.im, b.im);
        R::mul_acc(&mut acc.im, a.re, b.im);
        R::mul_acc(&mut acc.im, a.im, b.re);
    }
    fn from_real(r: R) -> Self {
        Complex::new(r, R::zero())
    }
    fn modulus(self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }
    fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }
}

pub fn widen_complex(z: num_complex::Complex64) -> WideComplex {
    Complex::new(Wide::from_f64(z.re), Wide::from_f64(z.im))
}

pub fn narrow_complex(z: WideComplex) -> num_complex::Complex64 {
    num_complex::Complex64::new(z.re.to_f64(), z.im.to_f64())
}
