//! Oriented vehicle footprints and overlap tests.

use crate::model::{VehicleParams, VehicleState};
use crate::scalar::{lit, Scalar};

/// Heading-aligned rectangle centred on the vehicle reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint<T> {
    pub cx: T,
    pub cy: T,
    pub heading: T,
    pub half_length: T,
    pub half_width: T,
}

impl<T: Scalar> Footprint<T> {
    pub fn of(state: &VehicleState<T>, params: &VehicleParams<T>) -> Self {
        let half = lit::<T>(0.5);
        Self {
            cx: state.x,
            cy: state.y,
            heading: state.phi,
            half_length: params.body_length * half,
            half_width: params.body_width * half,
        }
    }

    /// Grows the rectangle by `long` along its heading and `lat` across it on each side.
    pub fn inflated(mut self, long: T, lat: T) -> Self {
        self.half_length += long;
        self.half_width += lat;
        self
    }

    fn axes(&self) -> [(T, T); 2] {
        let (s, c) = self.heading.sin_cos();
        [(c, s), (-s, c)]
    }

    fn projected_radius(&self, axis: (T, T)) -> T {
        let [u, v] = self.axes();
        self.half_length * (u.0 * axis.0 + u.1 * axis.1).abs() + self.half_width * (v.0 * axis.0 + v.1 * axis.1).abs()
    }

    /// Separating-axis test; touching edges do not count as overlap.
    pub fn overlaps(&self, other: &Self) -> bool {
        let d = (other.cx - self.cx, other.cy - self.cy);
        for axis in self.axes().into_iter().chain(other.axes()) {
            let dist = (d.0 * axis.0 + d.1 * axis.1).abs();
            if dist >= self.projected_radius(axis) + other.projected_radius(axis) {
                return false;
            }
        }
        true
    }

    /// Point containment, used by test oracles.
    pub fn contains(&self, px: T, py: T) -> bool {
        let [u, v] = self.axes();
        let d = (px - self.cx, py - self.cy);
        (d.0 * u.0 + d.1 * u.1).abs() <= self.half_length && (d.0 * v.0 + d.1 * v.1).abs() <= self.half_width
    }
}

/// True iff the two heading-aligned vehicle bodies overlap.
pub fn check_collision<T: Scalar>(
    a: &VehicleState<T>,
    a_params: &VehicleParams<T>,
    b: &VehicleState<T>,
    b_params: &VehicleParams<T>,
) -> bool {
    Footprint::of(a, a_params).overlaps(&Footprint::of(b, b_params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(x: f64, y: f64, phi: f64) -> VehicleState<f64> {
        VehicleState::new(x, y, phi, 0.0)
    }

    #[test]
    fn identical_poses_collide() {
        let p = VehicleParams::default();
        assert!(check_collision(&state(1.0, 2.0, 0.3), &p, &state(1.0, 2.0, 0.3), &p));
    }

    #[test]
    fn just_past_contact_is_clear() {
        let p = VehicleParams::default();
        assert!(!check_collision(&state(0.0, 0.0, 0.0), &p, &state(4.6, 0.0, 0.0), &p));
        assert!(check_collision(&state(0.0, 0.0, 0.0), &p, &state(4.4, 0.0, 0.0), &p));
        assert!(!check_collision(&state(0.0, 0.0, 0.0), &p, &state(0.0, 2.1, 0.0), &p));
    }

    /// Overlap oracle: sample points of `a` densely and test containment in `b`.
    fn sampled_overlap(a: &Footprint<f64>, b: &Footprint<f64>, rng: &mut ChaCha8Rng, n: usize) -> bool {
        let (s, c) = a.heading.sin_cos();
        (0..n).any(|_| {
            let u = rng.random_range(-a.half_length..=a.half_length);
            let v = rng.random_range(-a.half_width..=a.half_width);
            b.contains(a.cx + u * c - v * s, a.cy + u * s + v * c)
        })
    }

    #[test]
    fn rotated_near_contact_matches_sampling_oracle() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = state(0.0, 0.0, 0.0);
        let mut checked = 0;
        for i in 0..400 {
            let dx = 3.0 + 0.01 * i as f64;
            let b = state(dx, 1.2, 0.3);
            let fa = Footprint::of(&a, &p);
            let fb = Footprint::of(&b, &p);
            let sat = fa.overlaps(&fb);
            let sampled = sampled_overlap(&fa, &fb, &mut rng, 20_000) || sampled_overlap(&fb, &fa, &mut rng, 20_000);
            // sampling can miss slivers thinner than its resolution; skip those
            let margin = fa.inflated(0.02, 0.02).overlaps(&fb) != fa.inflated(-0.02, -0.02).overlaps(&fb);
            if !margin {
                assert_eq!(sat, sampled, "dx={dx}");
                checked += 1;
            }
        }
        assert!(checked > 350);
    }

    #[test]
    fn inflation_extends_reach() {
        let p = VehicleParams::default();
        let a = Footprint::of(&state(0.0, 0.0, 0.0), &p);
        let b = Footprint::of(&state(6.0, 0.0, 0.0), &p);
        assert!(!a.overlaps(&b));
        assert!(a.inflated(2.0, 0.0).overlaps(&b));
    }
}
