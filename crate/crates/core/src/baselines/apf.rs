//! Reactive artificial-potential-field lane changer used as a speed baseline.

use crate::model::{VehicleParams, VehicleState};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApfGains<T> {
    pub attractive: T,
    /// Repulsive strength, m^2.
    pub repulsive: T,
    pub influence_radius: T,
    pub lookahead: T,
    /// Repulsion saturates below this centre distance.
    pub min_distance: T,
    /// Heading-error to steering gain.
    pub steer_gain: T,
    /// Cruise speed reached when the field points straight down the lane.
    pub v_des: T,
}

impl<T: Scalar> Default for ApfGains<T> {
    fn default() -> Self {
        Self {
            attractive: T::one(),
            repulsive: lit(50.0),
            influence_radius: lit(20.0),
            lookahead: lit(10.0),
            min_distance: lit(0.5),
            steer_gain: lit(0.5),
            v_des: lit(26.4),
        }
    }
}

/// Net field force on the AV.
pub fn apf_force<T: Scalar>(
    av: &VehicleState<T>,
    obstacles: &[&VehicleState<T>],
    goal_lane_y: T,
    gains: &ApfGains<T>,
) -> (T, T) {
    let gx = gains.lookahead;
    let gy = goal_lane_y - av.y;
    let gnorm = (gx * gx + gy * gy).sqrt();
    let mut fx = gains.attractive * gx / gnorm;
    let mut fy = gains.attractive * gy / gnorm;
    for o in obstacles {
        let dx = av.x - o.x;
        let dy = av.y - o.y;
        let d = (dx * dx + dy * dy).sqrt();
        if d >= gains.influence_radius {
            continue;
        }
        let magnitude = gains.repulsive / d.max(gains.min_distance).powi(2);
        let (ux, uy) = if d > T::zero() { (dx / d, dy / d) } else { (-T::one(), T::zero()) };
        fx += magnitude * ux;
        fy += magnitude * uy;
    }
    (fx, fy)
}

/// One APF control step: speed and steering commands.
///
/// The target speed is `v_des` scaled by the longitudinal share of the field,
/// reached at the vehicle's acceleration limits; steering is proportional to
/// the error between the field direction and the heading.
pub fn apf_step<T: Scalar>(
    av: &VehicleState<T>,
    fv: Option<&VehicleState<T>>,
    rv: Option<&VehicleState<T>>,
    goal_lane_y: T,
    gains: &ApfGains<T>,
    vehicle: &VehicleParams<T>,
    dt: T,
) -> (T, T) {
    let obstacles: Vec<&VehicleState<T>> = fv.into_iter().chain(rv).collect();
    let (fx, fy) = apf_force(av, &obstacles, goal_lane_y, gains);
    let share = (fx / gains.attractive).max(T::zero()).min(T::one());
    let target = gains.v_des * share;
    let v_cmd = vehicle.clamp_speed(target.max(av.v + vehicle.a_min * dt).min(av.v + vehicle.a_max * dt));
    let half_pi = T::FRAC_PI_2();
    let desired_heading = fy.atan2(fx.max(T::zero())).max(-half_pi).min(half_pi);
    let delta_cmd = vehicle.clamp_steering(gains.steer_gain * (desired_heading - av.phi));
    (v_cmd, delta_cmd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_on_goal_lane() {
        let g = ApfGains::<f64>::default();
        let p = VehicleParams::default();
        let av = VehicleState::new(50.0, 0.0, 0.0, g.v_des);
        let far = VehicleState::new(150.0, 0.0, 0.0, 20.0);
        let (v, d) = apf_step(&av, Some(&far), None, 0.0, &g, &p, 0.1);
        assert!((v - g.v_des).abs() < 1e-12);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn obstacle_ahead_slows() {
        let g = ApfGains::<f64>::default();
        let p = VehicleParams::default();
        let av = VehicleState::new(50.0, 0.0, 0.0, g.v_des);
        let ahead = VehicleState::new(60.0, 0.0, 0.0, 20.0);
        let (v, _) = apf_step(&av, Some(&ahead), None, 0.0, &g, &p, 0.1);
        assert!(v < av.v);
    }

    #[test]
    fn forces_stay_finite_at_zero_distance() {
        let g = ApfGains::<f64>::default();
        let av = VehicleState::new(50.0, 0.0, 0.0, 20.0);
        let (fx, fy) = apf_force(&av, &[&av], 0.0, &g);
        assert!(fx.is_finite() && fy.is_finite());
        assert!((fx - (1.0 - 50.0 / 0.25)).abs() < 1e-9);
    }

    #[test]
    fn steers_toward_goal_lane() {
        let g = ApfGains::<f64>::default();
        let p = VehicleParams::default();
        let av = VehicleState::new(50.0, -3.5, 0.0, 22.0);
        let (_, d) = apf_step(&av, None, None, 0.0, &g, &p, 0.1);
        assert!(d > 0.0);
    }

    #[test]
    fn deterministic() {
        let g = ApfGains::<f64>::default();
        let p = VehicleParams::default();
        let av = VehicleState::new(50.0, -3.5, 0.05, 22.0);
        let fv = VehicleState::new(58.0, 0.0, 0.0, 20.0);
        let rv = VehicleState::new(40.0, -3.5, 0.0, 20.0);
        let a = apf_step(&av, Some(&fv), Some(&rv), 0.0, &g, &p, 0.1);
        let b = apf_step(&av, Some(&fv), Some(&rv), 0.0, &g, &p, 0.1);
        assert_eq!(a, b);
    }
}
