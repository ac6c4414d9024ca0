//! Scalar abstractions shared by the contraction, series, and sweep code.
//!
//! [`Scalar`] is the ring interface the shear-matrix contraction is written
//! against; it is implemented by plain reals, truncated series, and dual
//! numbers so one routine serves numeric evaluation, coefficient extraction,
//! and exact derivatives. [`Real`] adds the field operations needed by the
//! energy formulas and is implemented by `f64` and [`DoubleDouble`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Ring operations plus a way to lift a constant into the same "shape" as an
/// existing value (for series, the same truncation order).
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn lift(&self, c: f64) -> Self;
}

/// Field-like real numbers.
pub trait Real: Scalar + Copy + Div<Output = Self> + PartialOrd + fmt::Debug {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// `(cosh x, sinh x)`.
    fn cosh_sinh(self) -> (Self, Self);
    fn exp(self) -> Self;
    /// `ln(1 + x)`.
    fn ln_1p(self) -> Self;
    /// Unit roundoff of the representation.
    fn unit_roundoff() -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn cosh_sinh(self) -> (Self, Self) {
        (self.cosh(), self.sinh())
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn unit_roundoff() -> f64 {
        f64::EPSILON / 2.0
    }
}

/// Unevaluated sum `hi + lo` of two doubles with `|lo| <= ulp(hi)/2`,
/// giving roughly 106 bits of significand.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renormalized(hi: f64, lo: f64) -> Self {
        let (h, l) = quick_two_sum(hi, lo);
        Self { hi: h, lo: l }
    }

    fn mul_pow2(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Self { hi: self.hi * f, lo: self.lo * f }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.hi, f)
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Self::renormalized(s1, s2 + t2)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        Self::renormalized(p, e)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        // Long division: three quotient digits.
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Self::from(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Self::from(q2);
        let q3 = r.hi / rhs.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Self { hi: h, lo: l } + Self::from(q3)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Scalar for DoubleDouble {
    fn lift(&self, c: f64) -> Self {
        Self::from(c)
    }
}

impl Real for DoubleDouble {
    fn from_f64(x: f64) -> Self {
        Self::from(x)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::from(self.hi.sqrt());
        }
        // One Newton step on the double estimate doubles the precision.
        let x = self.hi.sqrt();
        let (sq_hi, sq_lo) = two_prod(x, x);
        let resid = (self - Self::new(sq_hi, sq_lo)).hi;
        Self::renormalized(x, resid / (2.0 * x))
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn cosh_sinh(self) -> (Self, Self) {
        // Halve until small, sum the Taylor series, then double back up.
        let mut k = 0;
        let mut x = self;
        while x.hi.abs() > 1.0 / 64.0 {
            x = x.mul_pow2(-1);
            k += 1;
        }
        let x2 = x * x;
        let mut term = Self::one();
        let mut c = Self::one();
        let mut s_term = x;
        let mut s = x;
        for j in 1..=12 {
            let j = j as f64;
            term = term * x2 / Self::from((2.0 * j - 1.0) * (2.0 * j));
            c = c + term;
            s_term = s_term * x2 / Self::from((2.0 * j) * (2.0 * j + 1.0));
            s = s + s_term;
        }
        for _ in 0..k {
            let (c2, s2) = (c * c + s * s, (c * s).mul_pow2(1));
            c = c2;
            s = s2;
        }
        (c, s)
    }
    fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Self::from(f64::INFINITY);
        }
        if self.hi < -709.0 {
            return Self::zero();
        }
        if self.hi < 0.0 {
            return Self::one() / (-self).exp();
        }
        let (c, s) = self.cosh_sinh();
        c + s
    }
    fn ln_1p(self) -> Self {
        // One Newton step on exp(y) = 1 + x from the double estimate.
        let y = Self::from(self.to_f64().ln_1p());
        let one_plus = Self::one() + self;
        y + one_plus / y.exp() - Self::one()
    }
    fn unit_roundoff() -> f64 {
        2f64.powi(-104)
    }
}

/// Forward-mode dual number `value + derivative·η`, `η² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub value: T,
    pub deriv: T,
}

impl<T: Real> Dual<T> {
    /// The independent variable at `x`.
    pub fn variable(x: T) -> Self {
        Self { value: x, deriv: T::one() }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { value: self.value + rhs.value, deriv: self.deriv + rhs.deriv }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { value: self.value - rhs.value, deriv: self.deriv - rhs.deriv }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self {
            value: self.value * rhs.value,
            deriv: self.deriv * rhs.value + self.value * rhs.deriv,
        }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { value: -self.value, deriv: -self.deriv }
    }
}

impl<T: Real> Scalar for Dual<T> {
    fn lift(&self, c: f64) -> Self {
        Self { value: T::from_f64(c), deriv: T::zero() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DoubleDouble {
        DoubleDouble::from(x)
    }

    #[test]
    fn division_carries_low_word() {
        let third = dd(1.0) / dd(3.0);
        let back = third * dd(3.0) - dd(1.0);
        assert!(back.to_f64().abs() < 1e-31, "{back:?}");
        assert!(third.lo() != 0.0);
    }

    #[test]
    fn sqrt_squares_back() {
        for &x in &[2.0, 0.125, 7.0, 1e-6] {
            let r = dd(x).sqrt();
            let err = (r * r - dd(x)).to_f64().abs();
            assert!(err < 1e-30 * x.max(1.0), "x={x} err={err}");
        }
    }

    #[test]
    fn hyperbolic_identity_in_extended_precision() {
        for &x in &[0.0, 0.3, 1.0, 2.5, -1.7] {
            let (c, s) = dd(x).cosh_sinh();
            let id = c * c - s * s - dd(1.0);
            assert!(id.to_f64().abs() < 1e-28, "x={x} {id:?}");
            assert!((c.to_f64() - x.cosh()).abs() < 1e-15 * x.cosh());
        }
    }

    #[test]
    fn exp_and_log_round_trip() {
        for &x in &[1e-9, 0.01, 0.5, 3.0, 40.0] {
            let y = dd(x).ln_1p();
            let back = y.exp() - dd(1.0) - dd(x);
            assert!(back.to_f64().abs() < 1e-29 * (1.0 + x), "x={x} {back:?}");
            assert!((y.to_f64() - x.ln_1p()).abs() < 1e-15 * x.ln_1p());
        }
        let e = dd(-2.0).exp() * dd(2.0).exp() - dd(1.0);
        assert!(e.to_f64().abs() < 1e-30);
    }

    #[test]
    fn dual_product_rule() {
        let x = Dual::variable(3.0_f64);
        let y = x * x * x - x.lift(2.0) * x;
        assert_eq!(y.value, 21.0);
        assert_eq!(y.deriv, 25.0);
    }
}
