//! Candidate scoring: path smoothness, speed tracking and proximity risk.

use super::poly::QuinticPolynomial;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights<T> {
    pub w_yx: T,
    pub w_xt: T,
    pub w_risk: T,
    /// Slope, curvature and curvature-rate terms of the lateral shape.
    pub w_yx_terms: [T; 3],
    /// Speed error, acceleration and jerk terms of the speed profile.
    pub w_xt_terms: [T; 3],
    /// Lateral distance weight, 1/m^2.
    pub p1: T,
    /// Longitudinal distance weight, 1/m^2.
    pub p2: T,
}

impl<T: Scalar> Default for LossWeights<T> {
    fn default() -> Self {
        Self {
            w_yx: T::one(),
            w_xt: T::one(),
            w_risk: lit(10.0),
            w_yx_terms: [T::one(), T::one(), lit(0.1)],
            w_xt_terms: [T::one(), T::one(), lit(0.1)],
            p1: lit(0.5),
            p2: lit(0.05),
        }
    }
}

impl<T: Scalar> LossWeights<T> {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [self.w_yx, self.w_xt, self.w_risk, self.p1, self.p2]
            .into_iter()
            .chain(self.w_yx_terms)
            .chain(self.w_xt_terms);
        if all.into_iter().any(|w| !(w >= T::zero() && w.is_finite())) {
            return crate::error::invalid("loss weights must be finite and non-negative");
        }
        if !(self.w_yx + self.w_xt + self.w_risk > T::zero()) {
            return crate::error::invalid("at least one top-level loss weight must be positive");
        }
        Ok(())
    }

    /// Copy with the three top-level weights multiplied by `k`.
    pub fn scaled(&self, k: T) -> Self {
        Self {
            w_yx: self.w_yx * k,
            w_xt: self.w_xt * k,
            w_risk: self.w_risk * k,
            ..*self
        }
    }

    pub fn combine(&self, u_yx: T, u_xt: T, u_risk: T) -> T {
        self.w_yx * u_yx + self.w_xt * u_xt + self.w_risk * u_risk
    }
}

/// Weighted integrals of the squared first, second and third derivative of
/// the lateral shape over its domain, computed exactly.
pub fn smoothness_loss_yx<T: Scalar>(p: &QuinticPolynomial<T>, weights: &LossWeights<T>) -> T {
    let end = p.domain_end;
    let d1 = p.as_polynomial().derivative();
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    let [w1, w2, w3] = weights.w_yx_terms;
    w1 * d1.integral_of_square(end) + w2 * d2.integral_of_square(end) + w3 * d3.integral_of_square(end)
}

/// Weighted integrals of the squared speed error against `v_des`, the
/// squared acceleration and the squared jerk of the speed profile, exactly.
pub fn tracking_loss_xt<T: Scalar>(p: &QuinticPolynomial<T>, v_des: T, weights: &LossWeights<T>) -> T {
    let end = p.domain_end;
    let d1 = p.as_polynomial().derivative();
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    let [w1, w2, w3] = weights.w_xt_terms;
    w1 * d1.shifted(v_des).integral_of_square(end) + w2 * d2.integral_of_square(end) + w3 * d3.integral_of_square(end)
}

/// Weighted squared distance `p1 dy^2 + p2 dx^2`.
pub fn risk_distance<T: Scalar>(dx: T, dy: T, weights: &LossWeights<T>) -> T {
    weights.p1 * dy * dy + weights.p2 * dx * dx
}

/// One inverse-exponential risk term `1 / (1 - exp(-d))`.
///
/// `d = +inf` gives exactly `1`; `d = 0` gives `+inf`.
pub fn risk_term<T: Scalar>(d: T) -> T {
    if d.is_infinite() && d > T::zero() {
        return T::one();
    }
    let denom = -(-d).exp_m1();
    if denom <= T::zero() {
        T::infinity()
    } else {
        T::one() / denom
    }
}
