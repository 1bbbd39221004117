//! Unsatisfactory-level lane-change trigger.
//!
//! The AV accumulates its normalised speed deficit `(v_des - v) / v_des`
//! once per simulation step, weighted by the step length. A second
//! accumulator tracks the same quantity for a virtual twin driving in the
//! main lane. The lane change is requested once the accumulated level
//! crosses a threshold.

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Instantaneous discomfort `((v_des - v) / v_des) * t`.
///
/// This weights by absolute time `t`, unlike the accumulator; it is kept as a
/// diagnostic only.
pub fn instantaneous_discomfort<T: Scalar>(v_des: T, v: T, t: T) -> Result<T> {
    if !(v_des > T::zero()) {
        return invalid("v_des must be positive");
    }
    if !(t >= T::zero()) {
        return invalid("time must be non-negative");
    }
    Ok((v_des - v) / v_des * t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsatisfactoryAccumulator<T> {
    v_des: T,
    dt: T,
    c_av: T,
    c_vir: T,
    elapsed: T,
}

impl<T: Scalar> UnsatisfactoryAccumulator<T> {
    pub fn new(v_des: T, dt: T) -> Result<Self> {
        if !(v_des > T::zero() && v_des.is_finite()) {
            return invalid("v_des must be positive and finite");
        }
        if !(dt > T::zero() && dt.is_finite()) {
            return invalid("dt must be positive and finite");
        }
        Ok(Self {
            v_des,
            dt,
            c_av: T::zero(),
            c_vir: T::zero(),
            elapsed: T::zero(),
        })
    }

    pub fn v_des(&self) -> T {
        self.v_des
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Accumulated AV level.
    pub fn c_av(&self) -> T {
        self.c_av
    }

    /// Accumulated level of the virtual main-lane vehicle.
    pub fn c_vir(&self) -> T {
        self.c_vir
    }

    pub fn elapsed(&self) -> T {
        self.elapsed
    }

    /// One Riemann-sum step. Speeds above `v_des` give negative increments.
    pub fn accumulate(&self, v_av: T, v_vir: T) -> Self {
        Self {
            c_av: self.c_av + self.increment(v_av),
            c_vir: self.c_vir + self.increment(v_vir),
            elapsed: self.elapsed + self.dt,
            ..*self
        }
    }

    fn increment(&self, v: T) -> T {
        (self.v_des - v) / self.v_des * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TriggerMode {
    /// `c_av > threshold`
    #[default]
    Absolute,
    /// `c_av - c_vir > threshold`
    Relative,
}

impl TriggerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TriggerMode::Absolute => "absolute",
            TriggerMode::Relative => "relative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "absolute" => Some(TriggerMode::Absolute),
            "relative" => Some(TriggerMode::Relative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig<T> {
    pub threshold: T,
    pub mode: TriggerMode,
}

impl<T: Scalar> DecisionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > T::zero() && self.threshold.is_finite()) {
            return invalid("decision threshold must be positive");
        }
        Ok(())
    }

    fn level(&self, acc: &UnsatisfactoryAccumulator<T>) -> T {
        match self.mode {
            TriggerMode::Absolute => acc.c_av,
            TriggerMode::Relative => acc.c_av - acc.c_vir,
        }
    }
}

/// Stateless threshold test, strict crossing.
pub fn should_change_lane<T: Scalar>(acc: &UnsatisfactoryAccumulator<T>, cfg: &DecisionConfig<T>) -> bool {
    cfg.level(acc) > cfg.threshold
}

/// Per-episode trigger that latches on first crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneChangeTrigger<T> {
    cfg: DecisionConfig<T>,
    fired_at: Option<T>,
}

impl<T: Scalar> LaneChangeTrigger<T> {
    pub fn new(cfg: DecisionConfig<T>) -> Self {
        Self { cfg, fired_at: None }
    }

    pub fn config(&self) -> &DecisionConfig<T> {
        &self.cfg
    }

    pub fn fired(&self) -> bool {
        self.fired_at.is_some()
    }

    /// Elapsed accumulator time at which the trigger first fired.
    pub fn fired_at(&self) -> Option<T> {
        self.fired_at
    }

    /// Evaluates the trigger against the configured threshold.
    pub fn update(&mut self, acc: &UnsatisfactoryAccumulator<T>) -> bool {
        let threshold = self.cfg.threshold;
        self.update_with_threshold(acc, threshold, false)
    }

    /// Evaluates against an overridden threshold, e.g. one decayed near the
    /// end of the ramp. With `inclusive` the crossing test is `>=`.
    pub fn update_with_threshold(&mut self, acc: &UnsatisfactoryAccumulator<T>, threshold: T, inclusive: bool) -> bool {
        if self.fired_at.is_none() {
            let level = self.cfg.level(acc);
            let crossed = if inclusive { level >= threshold } else { level > threshold };
            if crossed {
                self.fired_at = Some(acc.elapsed);
            }
        }
        self.fired()
    }
}
