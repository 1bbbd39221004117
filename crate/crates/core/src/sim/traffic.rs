//! Seeded background traffic arrivals.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::Lane;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    /// Simulation step (counted from the start of warm-up) at which the vehicle asks to enter.
    pub step: usize,
    pub lane: Lane,
    pub speed: f64,
}

/// Every arrival for one episode, ordered by step then lane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrivalSchedule {
    pub arrivals: Vec<Arrival>,
}

impl ArrivalSchedule {
    pub fn at_step(&self, step: usize) -> impl Iterator<Item = &Arrival> {
        let start = self.arrivals.partition_point(|a| a.step < step);
        self.arrivals[start..].iter().take_while(move |a| a.step == step)
    }

    pub fn count(&self, lane: Lane) -> usize {
        self.arrivals.iter().filter(|a| a.lane == lane).count()
    }
}

/// Poisson arrivals at hourly rates per lane over `steps` steps of `dt`.
///
/// Entry speeds are uniform in `[0.8, 1.0] * v_des`.
pub fn spawn_traffic<R: Rng>(
    ramp_flow: f64,
    main_flow: f64,
    v_des: f64,
    dt: f64,
    steps: usize,
    rng: &mut R,
) -> ArrivalSchedule {
    let lanes = [(Lane::Main, main_flow), (Lane::Ramp, ramp_flow)];
    let dists: Vec<Option<Poisson<f64>>> = lanes
        .iter()
        .map(|(_, flow)| {
            let rate = flow / 3600.0 * dt;
            (rate > 0.0).then(|| Poisson::new(rate).expect("positive finite rate"))
        })
        .collect();
    let mut arrivals = Vec::new();
    for step in 0..steps {
        for ((lane, _), dist) in lanes.iter().zip(&dists) {
            let Some(dist) = dist else { continue };
            let count = dist.sample(rng) as usize;
            for _ in 0..count {
                let speed = v_des * rng.random_range(0.8..=1.0);
                arrivals.push(Arrival { step, lane: *lane, speed });
            }
        }
    }
    ArrivalSchedule { arrivals }
}
