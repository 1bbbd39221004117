//! Vehicle kinematics and longitudinal car-following.
//!
//! The kinematic model is the standard rear-axle bicycle:
//! `x' = v cos(phi)`, `y' = v sin(phi)`, `phi' = v tan(delta) / L`,
//! with speed and steering as the control inputs. It is integrated with a
//! single explicit Euler step per call.

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams<T> {
    pub wheelbase: T,
    pub body_length: T,
    pub body_width: T,
    pub v_max: T,
    pub v_min: T,
    pub a_max: T,
    /// Braking limit, negative.
    pub a_min: T,
    pub delta_max: T,
}

impl<T: Scalar> Default for VehicleParams<T> {
    fn default() -> Self {
        Self {
            wheelbase: lit(2.7),
            body_length: lit(4.5),
            body_width: lit(2.0),
            v_max: lit(33.0),
            v_min: T::zero(),
            a_max: lit(3.0),
            a_min: lit(-8.0),
            delta_max: lit(0.6),
        }
    }
}

impl<T: Scalar> VehicleParams<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.wheelbase,
            self.body_length,
            self.body_width,
            self.v_max,
            self.v_min,
            self.a_max,
            self.a_min,
            self.delta_max,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return invalid("vehicle parameters must be finite");
        }
        if self.wheelbase <= T::zero() || self.body_length <= T::zero() || self.body_width <= T::zero() {
            return invalid("wheelbase, body length and body width must be positive");
        }
        if self.v_min > self.v_max {
            return invalid("v_min exceeds v_max");
        }
        if !(self.a_min < T::zero() && T::zero() < self.a_max) {
            return invalid("acceleration limits must satisfy a_min < 0 < a_max");
        }
        if !(self.delta_max > T::zero() && self.delta_max < T::FRAC_PI_2()) {
            return invalid("delta_max must lie in (0, pi/2)");
        }
        Ok(())
    }

    pub fn clamp_speed(&self, v: T) -> T {
        v.max(self.v_min).min(self.v_max)
    }

    pub fn clamp_steering(&self, delta: T) -> T {
        delta.max(-self.delta_max).min(self.delta_max)
    }

    pub fn clamp_accel(&self, a: T) -> T {
        a.max(self.a_min).min(self.a_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState<T> {
    pub x: T,
    pub y: T,
    /// Heading relative to the x axis.
    pub phi: T,
    pub v: T,
    pub delta: T,
    pub a: T,
}

impl<T: Scalar> VehicleState<T> {
    pub fn new(x: T, y: T, phi: T, v: T) -> Self {
        Self {
            x,
            y,
            phi,
            v,
            delta: T::zero(),
            a: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.phi, self.v, self.delta, self.a]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Velocity vector `(v cos phi, v sin phi)`.
    pub fn velocity(&self) -> (T, T) {
        (self.v * self.phi.cos(), self.v * self.phi.sin())
    }
}

/// Advances `state` by one explicit Euler step of the kinematic bicycle.
///
/// Commands are clamped to the vehicle limits first; the integration uses the
/// clamped speed and steering together with the pre-step heading. The
/// returned `a` is the realised speed change divided by `dt`.
pub fn step_kinematics<T: Scalar>(
    state: &VehicleState<T>,
    v_cmd: T,
    delta_cmd: T,
    dt: T,
    params: &VehicleParams<T>,
) -> Result<VehicleState<T>> {
    if !state.is_finite() || !v_cmd.is_finite() || !delta_cmd.is_finite() || !dt.is_finite() {
        return invalid("non-finite kinematic input");
    }
    if dt <= T::zero() {
        return invalid("dt must be positive");
    }
    let v = params.clamp_speed(v_cmd);
    let delta = params.clamp_steering(delta_cmd);
    let (s, c) = state.phi.sin_cos();
    Ok(VehicleState {
        x: state.x + v * c * dt,
        y: state.y + v * s * dt,
        phi: state.phi + v * delta.tan() / params.wheelbase * dt,
        v,
        delta,
        a: (v - state.v) / dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams<T> {
    pub v0: T,
    pub time_headway: T,
    pub min_gap: T,
    pub accel: T,
    /// Comfortable deceleration, positive magnitude.
    pub decel: T,
    pub exponent: T,
}

impl<T: Scalar> Default for IdmParams<T> {
    fn default() -> Self {
        Self {
            v0: lit(26.4),
            time_headway: lit(1.5),
            min_gap: lit(2.0),
            accel: lit(1.5),
            decel: lit(2.0),
            exponent: lit(4.0),
        }
    }
}

impl<T: Scalar> IdmParams<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.v0, self.time_headway, self.min_gap, self.accel, self.decel, self.exponent];
        if all.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
            return invalid("IDM parameters must be finite and strictly positive");
        }
        Ok(())
    }

    pub fn with_v0(mut self, v0: T) -> Self {
        self.v0 = v0;
        self
    }

    /// Desired dynamic gap `s*`, never below `min_gap`.
    ///
    /// The dynamic part is floored at zero so a fast-receding leader cannot
    /// drive `s*` negative; this keeps the acceleration monotone in `ego_v`.
    pub fn desired_gap(&self, ego_v: T, lead_v: T) -> T {
        let dv = ego_v - lead_v;
        let interaction = ego_v * dv / (lit::<T>(2.0) * (self.accel * self.decel).sqrt());
        self.min_gap + (ego_v * self.time_headway + interaction).max(T::zero())
    }
}

/// Intelligent Driver Model acceleration, clamped to the vehicle limits.
///
/// `gap` is the bumper-to-bumper distance; pass `+inf` for a free road.
/// A non-positive gap returns [`Error::Collision`].
pub fn idm_acceleration<T: Scalar>(
    ego_v: T,
    gap: T,
    lead_v: T,
    idm: &IdmParams<T>,
    vehicle: &VehicleParams<T>,
) -> Result<T> {
    if gap.is_nan() || !ego_v.is_finite() || lead_v.is_nan() {
        return invalid("non-finite IDM input");
    }
    if gap <= T::zero() {
        return Err(Error::Collision {
            gap: gap.to_f64_lossy(),
        });
    }
    let free = (ego_v / idm.v0).powf(idm.exponent);
    let interaction = if gap.is_infinite() {
        T::zero()
    } else {
        let ratio = idm.desired_gap(ego_v, lead_v) / gap;
        ratio * ratio
    };
    let a = idm.accel * (T::one() - free - interaction);
    Ok(vehicle.clamp_accel(a))
}
