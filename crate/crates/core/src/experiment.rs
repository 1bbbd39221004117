//! Batch protocols: multi-trial runs, parameter sweeps, threshold
//! calibration and the baseline comparison.

use rayon::prelude::*;

use crate::baselines::{bezier_lane_change, bspline_lane_change, curvature_profile, curvature_stats, quintic_curve, CurveKind};
use crate::config;
use crate::error::{invalid, Error, Result};
use crate::metrics::{decision_time, summarize, Distribution, TrialSummary, CURVATURE_SAMPLES};
use crate::sim::{run_trial, Controller, ScenarioConfig, SimulationTrace};

/// Runs trials `0..trials` in parallel; results come back in trial order.
pub fn run_trials(cfg: &ScenarioConfig, trials: usize, controller: Controller) -> Result<Vec<SimulationTrace>> {
    cfg.validate()?;
    (0..trials as u64).into_par_iter().map(|t| run_trial(cfg, t, controller)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Config key, with or without the `scenario.` prefix.
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub trials: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if config::resolve_key(&self.param).is_none() {
            return invalid(format!("unknown sweep parameter `{}`", self.param));
        }
        if !(self.from.is_finite() && self.to.is_finite() && self.step > 0.0 && self.step.is_finite()) {
            return invalid("sweep bounds must be finite and the step positive");
        }
        if self.to < self.from {
            return invalid("sweep range is empty");
        }
        if self.trials == 0 {
            return invalid("sweep needs at least one trial per point");
        }
        Ok(())
    }

    /// `from, from + step, ...` up to `to` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.from + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub traces: Vec<SimulationTrace>,
}

/// Configuration with `param` set to `value`.
pub fn with_param(cfg: &ScenarioConfig, param: &str, value: f64) -> Result<ScenarioConfig> {
    let mut out = cfg.clone();
    config::set(&mut out, param, &format!("{value}"))?;
    out.validate()?;
    Ok(out)
}

pub fn sweep(cfg: &ScenarioConfig, spec: &SweepSpec, controller: Controller) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let configs: Vec<(f64, ScenarioConfig)> = spec
        .values()
        .into_iter()
        .map(|v| with_param(cfg, &spec.param, v).map(|c| (v, c)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..configs.len()).flat_map(|i| (0..spec.trials as u64).map(move |t| (i, t))).collect();
    let traces: Vec<SimulationTrace> = jobs
        .par_iter()
        .map(|&(i, t)| run_trial(&configs[i].1, t, controller))
        .collect::<Result<_>>()?;
    let mut traces = traces.into_iter();
    Ok(configs
        .into_iter()
        .map(|(value, _)| SweepPoint { value, traces: traces.by_ref().take(spec.trials).collect() })
        .collect())
}

/// The protocol sweep: initial FV offset from -15 to 15 m in 3 m steps.
pub fn default_sweep(trials: usize) -> SweepSpec {
    SweepSpec {
        param: "initial_fv_relative_distance".into(),
        from: -15.0,
        to: 15.0,
        step: 3.0,
        trials,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub target: f64,
    pub lower: f64,
    pub upper: f64,
    /// Stop once the bracket is narrower than this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            target: 1.24,
            lower: 1e-3,
            upper: 2.0,
            tolerance: 1e-4,
            max_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub mean_decision_time: f64,
    pub iterations: usize,
}

/// Mean decision time over `cfg.trial_count` trials; trials that never
/// decide count as the timeout.
pub fn mean_decision_time(cfg: &ScenarioConfig) -> Result<f64> {
    let traces = run_trials(cfg, cfg.trial_count, Controller::Planner)?;
    let total: f64 = traces.iter().map(|t| decision_time(t).unwrap_or(cfg.timeout_s)).sum();
    Ok(total / traces.len() as f64)
}

/// Bisects the decision threshold so the mean decision time approaches
/// `opts.target`, returning whichever bracket end lands closest.
pub fn calibrate(cfg: &ScenarioConfig, opts: &CalibrationOptions) -> Result<Calibration> {
    if !(opts.lower > 0.0 && opts.upper > opts.lower && opts.target > 0.0 && opts.tolerance > 0.0) {
        return invalid("calibration needs 0 < lower < upper, a positive target and tolerance");
    }
    let eval = |threshold: f64| {
        let mut c = cfg.clone();
        c.decision.threshold = threshold;
        mean_decision_time(&c)
    };
    let (mut lo, mut hi) = (opts.lower, opts.upper);
    let (mut t_lo, mut t_hi) = (eval(lo)?, eval(hi)?);
    let mut iterations = 0;
    if t_lo < opts.target && t_hi > opts.target {
        while hi - lo > opts.tolerance && iterations < opts.max_iterations {
            let mid = 0.5 * (lo + hi);
            let t_mid = eval(mid)?;
            iterations += 1;
            if t_mid < opts.target {
                lo = mid;
                t_lo = t_mid;
            } else {
                hi = mid;
                t_hi = t_mid;
            }
        }
    }
    let (threshold, mean_decision_time) =
        if (t_lo - opts.target).abs() <= (t_hi - opts.target).abs() { (lo, t_lo) } else { (hi, t_hi) };
    Ok(Calibration { threshold, mean_decision_time, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureRow {
    pub kind: CurveKind,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineComparison {
    /// Quintic, Bezier and B-spline over the executed manoeuvre's endpoints.
    pub curvature: Vec<CurvatureRow>,
    pub planner: Vec<TrialSummary>,
    pub apf: Vec<TrialSummary>,
    pub planner_velocity: Distribution,
    pub apf_velocity: Distribution,
}

/// Curvature of the three lane-change curves sharing the endpoints of the
/// manoeuvre executed in trial 0 of `cfg`.
pub fn curvature_table(cfg: &ScenarioConfig) -> Result<Vec<CurvatureRow>> {
    let trace = run_trial(cfg, 0, Controller::Planner)?;
    let record = trace.plan.ok_or_else(|| Error::Validation("the scenario never executed a lane change".into()))?;
    let c = *record.plan.best().expect("executed plans carry a selection");
    let start = (c.x_start, c.s_yx.eval(0.0));
    let end = (c.x_e, c.s_yx.eval(c.displacement()));
    let curves = [
        quintic_curve(c.s_yx, c.x_start),
        bezier_lane_change(start, end, record.context.av.phi)?,
        bspline_lane_change(start, end)?,
    ];
    curves
        .iter()
        .map(|curve| {
            let stats = curvature_stats(&curvature_profile(curve, CURVATURE_SAMPLES)?);
            Ok(CurvatureRow {
                kind: curve.kind(),
                max_abs: stats.max_abs,
                mean_abs: stats.mean_abs,
                length: stats.length,
            })
        })
        .collect()
}

pub fn compare_baselines(cfg: &ScenarioConfig, trials: usize) -> Result<BaselineComparison> {
    let curvature = curvature_table(cfg)?;
    let planner: Vec<TrialSummary> = run_trials(cfg, trials, Controller::Planner)?.iter().map(summarize).collect();
    let apf: Vec<TrialSummary> = run_trials(cfg, trials, Controller::Apf)?.iter().map(summarize).collect();
    let velocity = |s: &[TrialSummary]| Distribution::from_values(s.iter().map(|t| Some(t.mean_velocity)));
    Ok(BaselineComparison {
        curvature,
        planner_velocity: velocity(&planner),
        apf_velocity: velocity(&apf),
        planner,
        apf,
    })
}
