//! Dense polynomials and the quintic boundary-value fit.

use crate::error::{invalid, Result};
use crate::scalar::{lit, Scalar};

/// Polynomial in monomial basis, `coeffs[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * x + *c)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| *c * lit::<T>(k as f64))
            .collect();
        Self { coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self { coeffs: Vec::new() };
        }
        let mut coeffs = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += *a * *b;
            }
        }
        Self { coeffs }
    }

    /// Subtracts a constant.
    pub fn shifted(&self, offset: T) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        coeffs[0] -= offset;
        Self { coeffs }
    }

    /// Exact `int_0^b p(x) dx`.
    pub fn integrate_from_zero(&self, b: T) -> T {
        let mut sum = T::zero();
        let mut power = b;
        for (k, c) in self.coeffs.iter().enumerate() {
            sum += *c * power / lit::<T>((k + 1) as f64);
            power *= b;
        }
        sum
    }

    /// Exact `int_0^b p(x)^2 dx`.
    pub fn integral_of_square(&self, b: T) -> T {
        self.mul(self).integrate_from_zero(b)
    }
}

/// Quintic `c0 + c1 s + ... + c5 s^5` on `[0, domain_end]`.
///
/// The independent variable is local: lateral shapes are parameterised by
/// the longitudinal displacement from the manoeuvre start, speed profiles by
/// the time since the manoeuvre start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticPolynomial<T> {
    pub coeffs: [T; 6],
    pub domain_end: T,
}

/// Position, first and second derivative at one end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndConditions<T> {
    pub value: T,
    pub slope: T,
    pub curvature: T,
}

impl<T: Scalar> QuinticPolynomial<T> {
    /// Fits the unique quintic meeting value, first and second derivative at
    /// both `0` and `end`.
    ///
    /// The start conditions fix `c0..c2`; the remaining three coefficients
    /// are the closed-form solution of the end-point system.
    pub fn fit(start: EndConditions<T>, finish: EndConditions<T>, end: T) -> Result<Self> {
        if !(end > T::zero() && end.is_finite()) {
            return invalid("quintic domain end must be positive and finite");
        }
        let inputs = [start.value, start.slope, start.curvature, finish.value, finish.slope, finish.curvature];
        if inputs.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite boundary condition");
        }
        let two = lit::<T>(2.0);
        let c0 = start.value;
        let c1 = start.slope;
        let c2 = start.curvature / two;
        let t = end;
        let t2 = t * t;
        let t3 = t2 * t;
        let dp = finish.value - (c0 + c1 * t + c2 * t2);
        let dv = finish.slope - (c1 + two * c2 * t);
        let da = finish.curvature - two * c2;
        let c3 = (lit::<T>(20.0) * dp - lit::<T>(8.0) * dv * t + da * t2) / (two * t3);
        let c4 = (lit::<T>(-30.0) * dp + lit::<T>(14.0) * dv * t - two * da * t2) / (two * t3 * t);
        let c5 = (lit::<T>(12.0) * dp - lit::<T>(6.0) * dv * t + da * t2) / (two * t3 * t2);
        Ok(Self {
            coeffs: [c0, c1, c2, c3, c4, c5],
            domain_end: end,
        })
    }

    pub fn zero(domain_end: T) -> Self {
        Self {
            coeffs: [T::zero(); 6],
            domain_end,
        }
    }

    pub fn as_polynomial(&self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.to_vec())
    }

    pub fn eval(&self, s: T) -> T {
        let c = &self.coeffs;
        ((((c[5] * s + c[4]) * s + c[3]) * s + c[2]) * s + c[1]) * s + c[0]
    }

    pub fn d1(&self, s: T) -> T {
        let c = &self.coeffs;
        let k = |v: f64| lit::<T>(v);
        (((k(5.0) * c[5] * s + k(4.0) * c[4]) * s + k(3.0) * c[3]) * s + k(2.0) * c[2]) * s + c[1]
    }

    pub fn d2(&self, s: T) -> T {
        let c = &self.coeffs;
        let k = |v: f64| lit::<T>(v);
        ((k(20.0) * c[5] * s + k(12.0) * c[4]) * s + k(6.0) * c[3]) * s + k(2.0) * c[2]
    }

    pub fn d3(&self, s: T) -> T {
        let c = &self.coeffs;
        let k = |v: f64| lit::<T>(v);
        (k(60.0) * c[5] * s + k(24.0) * c[4]) * s + k(6.0) * c[3]
    }

    /// Largest absolute boundary-condition residual.
    pub fn residual(&self, start: &EndConditions<T>, finish: &EndConditions<T>) -> T {
        let e = self.domain_end;
        [
            self.eval(T::zero()) - start.value,
            self.d1(T::zero()) - start.slope,
            self.d2(T::zero()) - start.curvature,
            self.eval(e) - finish.value,
            self.d1(e) - finish.slope,
            self.d2(e) - finish.curvature,
        ]
        .iter()
        .fold(T::zero(), |m, r| m.max(r.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite()) && self.domain_end.is_finite()
    }
}
