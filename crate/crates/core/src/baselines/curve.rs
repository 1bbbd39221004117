//! Comparison lane-change curves and curvature profiling.

use crate::error::{invalid, Result};
use crate::planner::QuinticPolynomial;
use crate::scalar::{lit, Scalar};

pub type Point<T> = (T, T);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Quintic,
    Bezier,
    BSpline,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::Quintic => "quintic",
            CurveKind::Bezier => "bezier",
            CurveKind::BSpline => "bspline",
        }
    }
}

/// Planar curve on the parameter interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParametricCurve<T> {
    /// Graph `y = p(x - x0)` over `[x0, x0 + p.domain_end]`.
    Quintic { poly: QuinticPolynomial<T>, x0: T },
    Bezier { control_points: Vec<Point<T>> },
    /// Clamped B-spline.
    BSpline {
        control_points: Vec<Point<T>>,
        knots: Vec<T>,
        degree: usize,
    },
}

fn sub<T: Scalar>(a: Point<T>, b: Point<T>) -> Point<T> {
    (a.0 - b.0, a.1 - b.1)
}

fn scale<T: Scalar>(a: Point<T>, k: T) -> Point<T> {
    (a.0 * k, a.1 * k)
}

fn bezier_eval<T: Scalar>(points: &[Point<T>], u: T) -> Point<T> {
    // de Casteljau
    let mut work = points.to_vec();
    let v = T::one() - u;
    for level in 1..work.len() {
        for i in 0..work.len() - level {
            work[i] = (v * work[i].0 + u * work[i + 1].0, v * work[i].1 + u * work[i + 1].1);
        }
    }
    work.first().copied().unwrap_or((T::zero(), T::zero()))
}

fn bezier_hodograph<T: Scalar>(points: &[Point<T>]) -> Vec<Point<T>> {
    let n = lit::<T>((points.len() - 1) as f64);
    points.windows(2).map(|w| scale(sub(w[1], w[0]), n)).collect()
}

fn find_span<T: Scalar>(knots: &[T], degree: usize, n_points: usize, u: T) -> usize {
    let last = n_points - 1;
    if u >= knots[last + 1] {
        return last;
    }
    let mut span = degree;
    while span < last && u >= knots[span + 1] {
        span += 1;
    }
    span
}

fn de_boor<T: Scalar>(points: &[Point<T>], knots: &[T], degree: usize, u: T) -> Point<T> {
    if points.is_empty() {
        return (T::zero(), T::zero());
    }
    if degree == 0 {
        return points[find_span(knots, 0, points.len(), u)];
    }
    let k = find_span(knots, degree, points.len(), u);
    let mut d: Vec<Point<T>> = (0..=degree).map(|j| points[j + k - degree]).collect();
    for r in 1..=degree {
        for j in (r..=degree).rev() {
            let i = j + k - degree;
            let denom = knots[i + degree + 1 - r] - knots[i];
            let alpha = if denom > T::zero() { (u - knots[i]) / denom } else { T::zero() };
            d[j] = (
                (T::one() - alpha) * d[j - 1].0 + alpha * d[j].0,
                (T::one() - alpha) * d[j - 1].1 + alpha * d[j].1,
            );
        }
    }
    d[degree]
}

fn bspline_derivative<T: Scalar>(points: &[Point<T>], knots: &[T], degree: usize) -> (Vec<Point<T>>, Vec<T>) {
    let p = lit::<T>(degree as f64);
    let pts = (0..points.len() - 1)
        .map(|i| {
            let denom = knots[i + degree + 1] - knots[i + 1];
            if denom > T::zero() {
                scale(sub(points[i + 1], points[i]), p / denom)
            } else {
                (T::zero(), T::zero())
            }
        })
        .collect();
    (pts, knots[1..knots.len() - 1].to_vec())
}

impl<T: Scalar> ParametricCurve<T> {
    pub fn kind(&self) -> CurveKind {
        match self {
            ParametricCurve::Quintic { .. } => CurveKind::Quintic,
            ParametricCurve::Bezier { .. } => CurveKind::Bezier,
            ParametricCurve::BSpline { .. } => CurveKind::BSpline,
        }
    }

    /// Control polygon; for the quintic graph, its two end points.
    pub fn control_points(&self) -> Vec<Point<T>> {
        match self {
            ParametricCurve::Quintic { poly, x0 } => {
                vec![(*x0, poly.eval(T::zero())), (*x0 + poly.domain_end, poly.eval(poly.domain_end))]
            }
            ParametricCurve::Bezier { control_points } | ParametricCurve::BSpline { control_points, .. } => {
                control_points.clone()
            }
        }
    }

    /// Position, first and second parameter derivative at `u` in `[0, 1]`.
    pub fn derivatives(&self, u: T) -> [Point<T>; 3] {
        let u = u.max(T::zero()).min(T::one());
        match self {
            ParametricCurve::Quintic { poly, x0 } => {
                let l = poly.domain_end;
                let s = u * l;
                [
                    (*x0 + s, poly.eval(s)),
                    (l, poly.d1(s) * l),
                    (T::zero(), poly.d2(s) * l * l),
                ]
            }
            ParametricCurve::Bezier { control_points } => {
                let h1 = bezier_hodograph(control_points);
                let h2 = if h1.len() > 1 { bezier_hodograph(&h1) } else { vec![(T::zero(), T::zero())] };
                [bezier_eval(control_points, u), bezier_eval(&h1, u), bezier_eval(&h2, u)]
            }
            ParametricCurve::BSpline { control_points, knots, degree } => {
                let p0 = de_boor(control_points, knots, *degree, u);
                if *degree == 0 {
                    return [p0, (T::zero(), T::zero()), (T::zero(), T::zero())];
                }
                let (q1, k1) = bspline_derivative(control_points, knots, *degree);
                let p1 = de_boor(&q1, &k1, degree - 1, u);
                let p2 = if *degree >= 2 {
                    let (q2, k2) = bspline_derivative(&q1, &k1, degree - 1);
                    de_boor(&q2, &k2, degree - 2, u)
                } else {
                    (T::zero(), T::zero())
                };
                [p0, p1, p2]
            }
        }
    }

    pub fn eval(&self, u: T) -> Point<T> {
        self.derivatives(u)[0]
    }
}

/// Quintic lane-change path as a parametric curve.
pub fn quintic_curve<T: Scalar>(poly: QuinticPolynomial<T>, x0: T) -> ParametricCurve<T> {
    ParametricCurve::Quintic { poly, x0 }
}

fn check_chord<T: Scalar>(start: Point<T>, end: Point<T>) -> Result<T> {
    let l = end.0 - start.0;
    if !(l > T::zero()) || !l.is_finite() || !start.1.is_finite() || !end.1.is_finite() {
        return invalid("lane-change chord must advance in x");
    }
    Ok(l)
}

/// Degree-5 Bezier lane change.
///
/// Control points sit at chord fractions `0, .15, .35, .65, .85, 1`. The
/// first two lie on the start centreline, extended along `heading_s`; the
/// last two lie on the target centreline; the middle two lie on the chord.
pub fn bezier_lane_change<T: Scalar>(start: Point<T>, end: Point<T>, heading_s: T) -> Result<ParametricCurve<T>> {
    let l = check_chord(start, end)?;
    let dy = end.1 - start.1;
    let f = |v: f64| lit::<T>(v);
    let control_points = vec![
        start,
        (start.0 + f(0.15) * l, start.1 + f(0.15) * l * heading_s.tan()),
        (start.0 + f(0.35) * l, start.1 + f(0.35) * dy),
        (start.0 + f(0.65) * l, start.1 + f(0.65) * dy),
        (start.0 + f(0.85) * l, end.1),
        end,
    ];
    Ok(ParametricCurve::Bezier { control_points })
}

/// Clamped cubic B-spline over six control points on a smoothed step.
///
/// Abscissas at fractions `0, .2, .4, .6, .8, 1` of the chord; ordinates
/// follow `0, 0, s(.4), s(.6), 1, 1` of the lateral offset with
/// `s(f) = 3f^2 - 2f^3`.
pub fn bspline_lane_change<T: Scalar>(start: Point<T>, end: Point<T>) -> Result<ParametricCurve<T>> {
    let l = check_chord(start, end)?;
    let dy = end.1 - start.1;
    let smooth = |f: f64| lit::<T>(3.0 * f * f - 2.0 * f * f * f);
    let fr = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    let ys = [T::zero(), T::zero(), smooth(0.4), smooth(0.6), T::one(), T::one()];
    let control_points = fr
        .iter()
        .zip(ys)
        .map(|(f, s)| (start.0 + lit::<T>(*f) * l, start.1 + s * dy))
        .collect();
    let third = T::one() / lit(3.0);
    let knots = vec![
        T::zero(),
        T::zero(),
        T::zero(),
        T::zero(),
        third,
        third + third,
        T::one(),
        T::one(),
        T::one(),
        T::one(),
    ];
    Ok(ParametricCurve::BSpline { control_points, knots, degree: 3 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample<T> {
    pub arclength: T,
    pub kappa: T,
    /// Parameter speed vanished; `kappa` was reported as zero.
    pub degenerate: bool,
}

/// Signed curvature at `samples` uniform parameter values with cumulative
/// chord-length arclength.
pub fn curvature_profile<T: Scalar>(curve: &ParametricCurve<T>, samples: usize) -> Result<Vec<CurvatureSample<T>>> {
    if samples < 2 {
        return invalid("curvature profile needs at least two samples");
    }
    let denom = lit::<T>((samples - 1) as f64);
    let mut out = Vec::with_capacity(samples);
    let mut s = T::zero();
    let mut prev: Option<Point<T>> = None;
    for i in 0..samples {
        let u = lit::<T>(i as f64) / denom;
        let [p, d1, d2] = curve.derivatives(u);
        if let Some(q) = prev {
            s += ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
        }
        prev = Some(p);
        let speed2 = d1.0 * d1.0 + d1.1 * d1.1;
        let (kappa, degenerate) = if speed2 <= T::epsilon() * T::epsilon() {
            (T::zero(), true)
        } else {
            ((d1.0 * d2.1 - d1.1 * d2.0) / speed2.powf(lit(1.5)), false)
        };
        out.push(CurvatureSample { arclength: s, kappa, degenerate });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureStats<T> {
    pub max_abs: T,
    /// Arclength-weighted mean of `|kappa|`.
    pub mean_abs: T,
    pub length: T,
}

pub fn curvature_stats<T: Scalar>(profile: &[CurvatureSample<T>]) -> CurvatureStats<T> {
    let max_abs = profile.iter().fold(T::zero(), |m, s| m.max(s.kappa.abs()));
    let length = profile.last().map_or(T::zero(), |s| s.arclength);
    let half = lit::<T>(0.5);
    let area = profile
        .windows(2)
        .map(|w| (w[1].arclength - w[0].arclength) * (w[0].kappa.abs() + w[1].kappa.abs()) * half)
        .sum::<T>();
    let mean_abs = if length > T::zero() { area / length } else { T::zero() };
    CurvatureStats { max_abs, mean_abs, length }
}
