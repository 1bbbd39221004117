//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{Matrix6, Vector6};
use rand::Rng;

use ramp_merge::{BoundaryConditions, LossWeights};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Integral of `f` over `[0, b]` with the given rule.
pub fn quad(rule: &[(f64, f64)], b: f64, f: impl Fn(f64) -> f64) -> f64 {
    0.5 * b * rule.iter().map(|&(x, w)| w * f(0.5 * b * (x + 1.0))).sum::<f64>()
}

/// k-th derivative of `sum c_i s^i` by direct expansion.
pub fn deriv(c: &[f64; 6], k: usize, s: f64) -> f64 {
    (k..6)
        .map(|i| {
            let falling: f64 = (0..k).map(|j| (i - j) as f64).product();
            falling * c[i] * s.powi((i - k) as i32)
        })
        .sum()
}

/// Solves the six endpoint equations of a quintic on `[0, t]` with a dense LU.
pub fn quintic_oracle(start: [f64; 3], finish: [f64; 3], t: f64) -> [f64; 6] {
    let row = |s: f64, k: usize| {
        let mut r = [0.0; 6];
        for (i, v) in r.iter_mut().enumerate().skip(k) {
            let falling: f64 = (0..k).map(|j| (i - j) as f64).product();
            *v = falling * s.powi((i - k) as i32);
        }
        r
    };
    let rows = [row(0.0, 0), row(0.0, 1), row(0.0, 2), row(t, 0), row(t, 1), row(t, 2)];
    let a = Matrix6::from_fn(|i, j| rows[i][j]);
    let b = Vector6::new(start[0], start[1], start[2], finish[0], finish[1], finish[2]);
    let x = a.lu().solve(&b).expect("non-singular endpoint system");
    [x[0], x[1], x[2], x[3], x[4], x[5]]
}

/// Random manoeuvre start state in the ranges a merging AV can reach.
pub fn random_bc<R: Rng>(rng: &mut R) -> BoundaryConditions {
    BoundaryConditions {
        y_s: rng.random_range(-5.0..1.0),
        phi_s: rng.random_range(-0.2..0.2),
        delta_s: rng.random_range(-0.1..0.1),
        v_s: rng.random_range(5.0..30.0),
        a_s: rng.random_range(-4.0..2.0),
        lane_offset: if rng.random_bool(0.5) { 3.5 } else { rng.random_range(-4.0..4.0) },
        v_comfort: rng.random_range(5.0..30.0),
        wheelbase: 2.8,
    }
}

pub fn random_weights<R: Rng>(rng: &mut R) -> LossWeights {
    let mut term = || rng.random_range(0.0..5.0);
    LossWeights {
        w_yx_terms: [term(), term(), term()],
        w_xt_terms: [term(), term(), term()],
        ..LossWeights::default()
    }
}

/// Path smoothness loss by quadrature.
pub fn smoothness_by_quadrature(rule: &[(f64, f64)], c: &[f64; 6], end: f64, w: &LossWeights) -> f64 {
    (1..=3).map(|k| w.w_yx_terms[k - 1] * quad(rule, end, |s| deriv(c, k, s).powi(2))).sum()
}

/// Speed tracking loss by quadrature.
pub fn tracking_by_quadrature(rule: &[(f64, f64)], c: &[f64; 6], end: f64, v_des: f64, w: &LossWeights) -> f64 {
    let [w1, w2, w3] = w.w_xt_terms;
    w1 * quad(rule, end, |t| (deriv(c, 1, t) - v_des).powi(2))
        + w2 * quad(rule, end, |t| deriv(c, 2, t).powi(2))
        + w3 * quad(rule, end, |t| deriv(c, 3, t).powi(2))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
