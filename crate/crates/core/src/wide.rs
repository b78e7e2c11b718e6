//! Double-double ("wide") floating point.
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`,
//! giving roughly 106 bits of significand. The power-basis routes work in
//! this precision: the Hankel matrix of power traces and the companion
//! solve have condition numbers far beyond `1 / f64::EPSILON` already at
//! moderate dimension.
//!
//! Arithmetic follows the error-free transformations of Dekker and Knuth
//! with the accurate double-word algorithms of Joldes, Muller and Popescu
//! (add: Alg. 6, mul: Alg. 12, div: Alg. 17).

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Num, One, Zero};

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Wide {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// `a * b + c`, fused when the target has hardware FMA. Without it
/// `f64::mul_add` is a library call, so only [`two_prod`] needs exactness.
#[inline]
fn fma(a: f64, b: f64, c: f64) -> f64 {
    if cfg!(target_feature = "fma") {
        a.mul_add(b, c)
    } else {
        a * b + c
    }
}

#[cfg(target_feature = "fma")]
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Dekker's product with Veltkamp splitting.
#[cfg(not(target_feature = "fma"))]
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    const SPLIT: f64 = 134_217_729.0;
    let split = |x: f64| {
        let t = SPLIT * x;
        let h = t - (t - x);
        (h, x - h)
    };
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Wide {
    /// Unit roundoff bound used for conditioning decisions, `2^-104`.
    pub const EPSILON: f64 = 4.930380657631324e-32;
    pub const ZERO: Wide = Wide { hi: 0.0, lo: 0.0 };
    pub const ONE: Wide = Wide { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Wide { hi: x, lo: 0.0 }
    }

    #[inline]
    fn from_parts((hi, lo): (f64, f64)) -> Self {
        Wide { hi, lo }
    }

    /// Nearest `f64`.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    fn mul_f64(self, y: f64) -> Self {
        let (ch, cl1) = two_prod(self.hi, y);
        let cl3 = fma(self.lo, y, cl1);
        Wide::from_parts(fast_two_sum(ch, cl3))
    }

    /// Addition with error at most a small multiple of `2^-106 (|a| + |b|)`,
    /// cheaper than `+` but without a relative bound under cancellation.
    #[inline]
    pub fn add_sloppy(self, y: Wide) -> Wide {
        let (s, e) = two_sum(self.hi, y.hi);
        Wide::from_parts(fast_two_sum(s, e + (self.lo + y.lo)))
    }

    /// Square root with one Newton correction in wide precision.
    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Wide::from_f64(self.hi.sqrt());
        }
        let s = Wide::from_f64(self.hi.sqrt());
        s + (self - s * s) / (s + s)
    }

    pub fn recip(self) -> Self {
        Wide::ONE / self
    }

    pub fn trunc(self) -> Self {
        let t = self.hi.trunc();
        if t == self.hi {
            Wide::from_parts(fast_two_sum(t, self.lo.trunc()))
        } else {
            Wide::from_f64(t)
        }
    }
}

impl From<f64> for Wide {
    fn from(x: f64) -> Self {
        Wide::from_f64(x)
    }
}

impl From<Wide> for f64 {
    fn from(x: Wide) -> Self {
        x.to_f64()
    }
}

impl fmt::Debug for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Wide({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for Wide {
    type Output = Wide;
    #[inline]
    fn neg(self) -> Wide {
        Wide {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Wide {
    type Output = Wide;
    #[inline]
    fn add(self, y: Wide) -> Wide {
        let (sh, sl) = two_sum(self.hi, y.hi);
        let (th, tl) = two_sum(self.lo, y.lo);
        let c = sl + th;
        let (vh, vl) = fast_two_sum(sh, c);
        let w = tl + vl;
        Wide::from_parts(fast_two_sum(vh, w))
    }
}

impl Sub for Wide {
    type Output = Wide;
    #[inline]
    fn sub(self, y: Wide) -> Wide {
        self + (-y)
    }
}

impl Mul for Wide {
    type Output = Wide;
    #[inline]
    fn mul(self, y: Wide) -> Wide {
        let (ch, cl1) = two_prod(self.hi, y.hi);
        let tl0 = self.lo * y.lo;
        let tl1 = fma(self.hi, y.lo, tl0);
        let cl2 = fma(self.lo, y.hi, tl1);
        Wide::from_parts(fast_two_sum(ch, cl1 + cl2))
    }
}

impl Div for Wide {
    type Output = Wide;
    #[inline]
    fn div(self, y: Wide) -> Wide {
        let th = self.hi / y.hi;
        let r = y.mul_f64(th);
        let dh = self.hi - r.hi;
        let dl = self.lo - r.lo;
        let tl = (dh + dl) / y.hi;
        Wide::from_parts(fast_two_sum(th, tl))
    }
}

impl Rem for Wide {
    type Output = Wide;
    fn rem(self, y: Wide) -> Wide {
        self - (self / y).trunc() * y
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for Wide {
            #[inline]
            fn $m(&mut self, y: Wide) {
                *self = *self $op y;
            }
        }
    )*};
}

assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *,
    DivAssign div_assign /, RemAssign rem_assign %);

impl Sum for Wide {
    fn sum<I: Iterator<Item = Wide>>(iter: I) -> Wide {
        iter.fold(Wide::ZERO, |a, b| a + b)
    }
}

impl Zero for Wide {
    fn zero() -> Self {
        Wide::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for Wide {
    fn one() -> Self {
        Wide::ONE
    }
}

impl Num for Wide {
    type FromStrRadixErr = std::num::ParseFloatError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let _ = radix;
        s.parse::<f64>().map(Wide::from_f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sloppy_addition_error_is_bounded_by_operands() {
        let a = Wide::ONE / Wide::from_f64(3.0);
        let b = Wide::from_f64(2.0) / Wide::from_f64(7.0);
        let exact = a + b;
        let d = (a.add_sloppy(b) - exact).abs().to_f64();
        assert!(d <= 4.0 * Wide::EPSILON * (a.to_f64().abs() + b.to_f64().abs()));
        let c = -(a + Wide::from_f64(1e-20));
        assert!((a.add_sloppy(c) + Wide::from_f64(1e-20)).abs().to_f64() < 1e-30);
    }

    #[test]
    fn division_carries_the_low_word() {
        let third = Wide::ONE / Wide::from(3.0);
        assert!(third.lo() != 0.0);
        let back = third * Wide::from(3.0) - Wide::ONE;
        assert!(back.abs().to_f64() < 1e-31);
    }

    #[test]
    fn addition_keeps_tiny_terms() {
        let x = Wide::from(1.0) + Wide::from(1e-20);
        assert_eq!((x - Wide::ONE).to_f64(), 1e-20);
        let y = Wide::from(0.1) + Wide::from(0.2) - Wide::from(0.3);
        // Exact sum of the three binary fractions.
        assert!((y.to_f64() - 2.7755575615628914e-17).abs() < 1e-32);
    }

    #[test]
    fn sqrt_squares_back() {
        let two = Wide::from(2.0);
        let r = two.sqrt();
        assert!((r * r - two).abs().to_f64() < 1e-31);
    }

    #[test]
    fn ordering_uses_both_words() {
        let a = Wide::from(1.0);
        let b = a + Wide::from(1e-25);
        assert!(b > a);
        assert!(-b < -a);
        assert_eq!(b.abs(), b);
    }

    #[test]
    fn remainder_is_consistent() {
        let r = Wide::from(7.5) % Wide::from(2.0);
        assert_eq!(r.to_f64(), 1.5);
    }
}
