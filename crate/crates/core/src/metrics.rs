//! Evaluation quantities extracted from episode traces.

use crate::baselines::{curvature_profile, curvature_stats, quintic_curve};
use crate::error::{invalid, Result};
use crate::model::VehicleState;
use crate::scalar::Scalar;
use crate::sim::{Outcome, Role, SimulationTrace};

/// Time-to-collision of `follower` behind `leader`, ignoring lateral offset.
///
/// Uses the bumper gap `(x_lead - x_follow) - body_length`; negative gaps
/// give negative values. An opening or constant gap gives `+inf`.
pub fn ttc<T: Scalar>(follower: &VehicleState<T>, leader: &VehicleState<T>, body_length: T) -> T {
    let gap = leader.x - follower.x - body_length;
    let closing = follower.velocity().0 - leader.velocity().0;
    if closing > T::zero() {
        gap / closing
    } else {
        T::infinity()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub decision_time: Option<f64>,
    pub ttc_at_initiation: Option<f64>,
    pub min_ttc_after_decision: Option<f64>,
    pub mean_velocity: f64,
    pub max_abs_curvature: Option<f64>,
    pub mean_abs_curvature: Option<f64>,
    pub outcome: Outcome,
}

/// Time of the first step with the decision flag raised.
pub fn decision_time(trace: &SimulationTrace) -> Option<f64> {
    trace.records.iter().find(|r| r.decision).map(|r| r.time)
}

/// AV-FV time-to-collision at every step where an FV exists.
pub fn ttc_series(trace: &SimulationTrace) -> Vec<(f64, f64)> {
    trace
        .records
        .iter()
        .filter_map(|r| {
            let av = r.vehicle(Role::Av)?;
            let fv = r.vehicle(Role::Fv)?;
            Some((r.time, ttc(&av.state, &fv.state, trace.body_length)))
        })
        .collect()
}

/// Samples used when profiling the executed lane-change curve.
pub const CURVATURE_SAMPLES: usize = 2001;

pub fn summarize(trace: &SimulationTrace) -> TrialSummary {
    let decision = decision_time(trace);
    let ttc_at = |step: usize| {
        let r = &trace.records[step];
        match (r.vehicle(Role::Av), r.vehicle(Role::Fv)) {
            (Some(av), Some(fv)) => ttc(&av.state, &fv.state, trace.body_length),
            _ => f64::INFINITY,
        }
    };
    let ttc_at_initiation = trace.initiation_step.map(ttc_at);
    let min_ttc_after_decision = trace.decision_step.map(|k| {
        (k..trace.records.len())
            .map(|i| {
                let r = &trace.records[i];
                match (r.vehicle(Role::Av), r.vehicle(Role::Fv)) {
                    (Some(av), Some(fv)) => ttc(&av.state, &fv.state, trace.body_length),
                    _ => f64::INFINITY,
                }
            })
            .fold(f64::INFINITY, f64::min)
    });
    let speeds: Vec<f64> = trace
        .records
        .iter()
        .filter_map(|r| r.vehicle(Role::Av).map(|v| v.state.v))
        .collect();
    let mean_velocity = if speeds.is_empty() { f64::NAN } else { speeds.iter().sum::<f64>() / speeds.len() as f64 };
    let curvature = trace.plan.as_ref().and_then(|p| p.plan.best()).and_then(|c| {
        let profile = curvature_profile(&quintic_curve(c.s_yx, c.x_start), CURVATURE_SAMPLES).ok()?;
        Some(curvature_stats(&profile))
    });
    TrialSummary {
        decision_time: decision,
        ttc_at_initiation,
        min_ttc_after_decision,
        mean_velocity,
        max_abs_curvature: curvature.map(|s| s.max_abs),
        mean_abs_curvature: curvature.map(|s| s.mean_abs),
        outcome: trace.outcome,
    }
}

/// Sample statistics over the finite values of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub count: usize,
    /// Absent or non-finite values left out.
    pub excluded: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 divisor); zero for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Distribution {
    pub fn from_values<I: IntoIterator<Item = Option<f64>>>(values: I) -> Self {
        let mut excluded = 0;
        let mut xs: Vec<f64> = Vec::new();
        for v in values {
            match v {
                Some(x) if x.is_finite() => xs.push(x),
                _ => excluded += 1,
            }
        }
        if xs.is_empty() {
            return Self {
                count: 0,
                excluded,
                mean: f64::NAN,
                median: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) };
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            count: n,
            excluded,
            mean,
            median,
            std,
            min: xs[0],
            max: xs[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub trials: usize,
    pub merged: usize,
    pub timeouts: usize,
    pub collisions: usize,
    pub decision_time: Distribution,
    pub ttc_at_initiation: Distribution,
    pub min_ttc_after_decision: Distribution,
    pub mean_velocity: Distribution,
    pub max_abs_curvature: Distribution,
    pub mean_abs_curvature: Distribution,
}

pub fn aggregate(summaries: &[TrialSummary]) -> Result<AggregateReport> {
    if summaries.is_empty() {
        return invalid("cannot aggregate an empty set of trials");
    }
    let field = |f: fn(&TrialSummary) -> Option<f64>| Distribution::from_values(summaries.iter().map(f));
    let count = |o: Outcome| summaries.iter().filter(|s| s.outcome == o).count();
    Ok(AggregateReport {
        trials: summaries.len(),
        merged: count(Outcome::Merged),
        timeouts: count(Outcome::Timeout),
        collisions: count(Outcome::Collision),
        decision_time: field(|s| s.decision_time),
        ttc_at_initiation: field(|s| s.ttc_at_initiation),
        min_ttc_after_decision: field(|s| s.min_ttc_after_decision),
        mean_velocity: field(|s| Some(s.mean_velocity)),
        max_abs_curvature: field(|s| s.max_abs_curvature),
        mean_abs_curvature: field(|s| s.mean_abs_curvature),
    })
}
