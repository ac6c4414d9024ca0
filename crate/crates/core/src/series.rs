//! Truncated power series in one formal variable ε.
//!
//! A [`Series`] of order `K` stores the coefficients of ε⁰..ε^K. Every
//! operation truncates at `K`; binary operations on operands of different
//! order truncate to the smaller one, so no reported coefficient is ever
//! undetermined.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::real::{Real, Scalar};

/// Default truncation order: one guard order above ε¹².
pub const DEFAULT_ORDER: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct Series<T = f64> {
    coeffs: Vec<T>,
}

impl<T: Real> Series<T> {
    /// Builds a series of order `order`, zero-padding or truncating `coeffs`.
    pub fn new(mut coeffs: Vec<T>, order: usize) -> Self {
        coeffs.resize(order + 1, T::zero());
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(Vec::new(), order)
    }

    pub fn constant(c: T, order: usize) -> Self {
        Self::new(vec![c], order)
    }

    /// The formal variable ε itself.
    pub fn variable(order: usize) -> Self {
        Self::new(vec![T::zero(), T::one()], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of ε^k; zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.coeffs[..=order.min(self.order())].to_vec(), order.min(self.order()))
    }

    pub fn scale(&self, c: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&a| a * c).collect() }
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
    }

    /// Term-wise derivative; the order drops by one.
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        let coeffs =
            (1..=self.order()).map(|k| self.coeffs[k] * T::from_f64(k as f64)).collect();
        Self::new(coeffs, self.order() - 1)
    }

    /// Antiderivative with zero constant term; the order rises by one.
    pub fn integrate(&self) -> Self {
        let mut coeffs = vec![T::zero()];
        coeffs.extend(
            self.coeffs.iter().enumerate().map(|(k, &c)| c / T::from_f64((k + 1) as f64)),
        );
        let order = self.order() + 1;
        Self::new(coeffs, order)
    }

    /// Divides by ε^k by dropping the first `k` coefficients, which the
    /// caller asserts are zero. The order drops by `k`.
    pub fn drop_leading(&self, k: usize) -> Result<Self> {
        if k > self.order() {
            return Err(Error::TruncationTooShallow { order: self.order(), needed: k });
        }
        Ok(Self { coeffs: self.coeffs[k..].to_vec() })
    }

    pub fn try_div(&self, rhs: &Self) -> Result<Self> {
        let b0 = rhs.coeffs[0];
        if b0 == T::zero() {
            return Err(Error::DivisionBySingularSeries);
        }
        let order = self.order().min(rhs.order());
        let mut q: Vec<T> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc = acc - rhs.coeffs[j] * q[k - j];
            }
            q.push(acc / b0);
        }
        Ok(Self { coeffs: q })
    }

    pub fn recip(&self) -> Result<Self> {
        Self::constant(T::one(), self.order()).try_div(self)
    }

    pub fn sqrt(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if !(a0 > T::zero()) {
            return Err(Error::NegativeLeadingTerm(a0.to_f64()));
        }
        let s0 = a0.sqrt();
        let two_s0 = s0 + s0;
        let mut s: Vec<T> = Vec::with_capacity(self.coeffs.len());
        s.push(s0);
        for k in 1..=self.order() {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc = acc - s[j] * s[k - j];
            }
            s.push(acc / two_s0);
        }
        Ok(Self { coeffs: s })
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Series<U> {
        Series { coeffs: self.coeffs.iter().map(|&c| f(c)).collect() }
    }

    pub fn to_f64(&self) -> Series<f64> {
        self.map(Real::to_f64)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        let order = self.order().min(rhs.order());
        Self { coeffs: (0..=order).map(|k| f(self.coeffs[k], rhs.coeffs[k])).collect() }
    }

    fn product(&self, rhs: &Self) -> Self {
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order)
            .map(|k| (0..=k).fold(T::zero(), |acc, j| acc + self.coeffs[j] * rhs.coeffs[k - j]))
            .collect();
        Self { coeffs }
    }
}

/// Maclaurin series of cosh ε: coefficients 1/(2k)! at even powers.
pub fn series_cosh_ref(order: usize) -> Series<f64> {
    hyperbolic_ref(order, 0)
}

/// Maclaurin series of sinh ε: coefficients 1/(2k+1)! at odd powers.
pub fn series_sinh_ref(order: usize) -> Series<f64> {
    hyperbolic_ref(order, 1)
}

fn hyperbolic_ref(order: usize, parity: usize) -> Series<f64> {
    let mut coeffs = vec![0.0; order + 1];
    let mut inv_fact = 1.0;
    for (k, c) in coeffs.iter_mut().enumerate() {
        if k > 0 {
            inv_fact /= k as f64;
        }
        if k % 2 == parity {
            *c = inv_fact;
        }
    }
    Series { coeffs }
}

/// k! as a float.
pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

impl<T: Real> Add for Series<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for Series<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul for Series<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.product(&rhs)
    }
}

impl<'a, T: Real> Add<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;
    fn add(self, rhs: Self) -> Series<T> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<'a, T: Real> Sub<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;
    fn sub(self, rhs: Self) -> Series<T> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<'a, T: Real> Mul<&'a Series<T>> for &'a Series<T> {
    type Output = Series<T>;
    fn mul(self, rhs: Self) -> Series<T> {
        self.product(rhs)
    }
}

impl<T: Real> Neg for Series<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { coeffs: self.coeffs.into_iter().map(|c| -c).collect() }
    }
}

impl<T: Real> Scalar for Series<T> {
    fn lift(&self, c: f64) -> Self {
        Self::constant(T::from_f64(c), self.order())
    }
}
