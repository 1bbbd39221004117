//! Comparison methods: Bezier and B-spline lane-change curves, and a
//! reactive potential-field controller.

pub mod apf;
pub mod curve;

pub use apf::{apf_force, apf_step, ApfGains};
pub use curve::{
    bezier_lane_change, bspline_lane_change, curvature_profile, curvature_stats, quintic_curve, CurvatureSample,
    CurvatureStats, CurveKind, ParametricCurve, Point,
};
