//! Two-lane ramp scenario: HDV traffic, the AV pipeline and episode traces.
//!
//! The main lane centreline is `y = 0`; the ramp runs parallel at
//! `y = -lane_width` from `x = 0` to `ramp_lane_length`, and the merge region
//! is the last `merge_region_length` metres of it.

pub mod trace;
pub mod traffic;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{apf_step, ApfGains};
use crate::decision::{DecisionConfig, LaneChangeTrigger, TriggerMode, UnsatisfactoryAccumulator};
use crate::error::{invalid, Result};
use crate::geometry::check_collision;
use crate::metrics::ttc;
use crate::model::{idm_acceleration, step_kinematics, IdmParams, VehicleParams, VehicleState};
use crate::planner::{plan, BoundaryConditions, CandidateTrajectory, PlannerConfig, PlanningContext, RoadEnvelope};

pub use trace::{
    LaneTag, Outcome, PlanRecord, PlannerStatus, Role, SelectedRef, SimulationTrace, StepRecord, VehicleRecord,
};
pub use traffic::{spawn_traffic, Arrival, ArrivalSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lane {
    Ramp,
    Main,
}

impl Lane {
    pub fn as_str(&self) -> &'static str {
        match self {
            Lane::Ramp => "ramp",
            Lane::Main => "main",
        }
    }
}

/// Decision threshold produced by calibrating the default scenario.
pub const DEFAULT_THRESHOLD: f64 = 0.1815;

pub const AV_ID: u32 = 0;
pub const FV_ID: u32 = 1;
pub const RV_ID: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub main_lane_length: f64,
    pub ramp_lane_length: f64,
    pub lane_width: f64,
    pub merge_region_length: f64,
    /// Stretch before the ramp end over which the decision threshold decays to zero.
    pub forcing_length: f64,
    /// Vehicles per hour.
    pub ramp_flow: f64,
    pub main_flow: f64,
    pub av_initial_x: f64,
    pub av_initial_v: f64,
    pub v_des: f64,
    pub dt: f64,
    pub rng_seed: u64,
    /// Main-lane FV position relative to the AV at insertion.
    pub initial_fv_relative_distance: f64,
    pub fv_initial_v: f64,
    /// Distance of the ramp RV behind the AV at insertion.
    pub rv_initial_gap: f64,
    pub rv_initial_v: f64,
    /// Half-width of the uniform jitter on FV and RV speeds.
    pub speed_jitter: f64,
    /// HDV-only run-in before the AV is inserted.
    pub warmup_s: f64,
    pub timeout_s: f64,
    pub merge_lateral_tol: f64,
    pub merge_heading_tol: f64,
    /// AV-FV time-to-collision required before a manoeuvre may start.
    pub min_initiation_ttc: f64,
    /// Range within which a main-lane vehicle sets the virtual-twin speed.
    pub virtual_lane_range: f64,
    /// Range within which the FV caps the manoeuvre end speed.
    pub comfort_lookahead: f64,
    /// Range of traffic handed to the planner's conflict check.
    pub planning_range: f64,
    pub trial_count: usize,
    pub vehicle: VehicleParams<f64>,
    pub idm: IdmParams<f64>,
    pub decision: DecisionConfig<f64>,
    pub planner: PlannerConfig<f64>,
    pub apf: ApfGains<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            main_lane_length: 250.0,
            ramp_lane_length: 180.0,
            lane_width: 3.5,
            merge_region_length: 100.0,
            forcing_length: 40.0,
            ramp_flow: 200.0,
            main_flow: 100.0,
            av_initial_x: 60.0,
            av_initial_v: 22.0,
            v_des: 26.4,
            dt: 0.1,
            rng_seed: 42,
            initial_fv_relative_distance: 10.0,
            fv_initial_v: 20.0,
            rv_initial_gap: 15.0,
            rv_initial_v: 20.0,
            speed_jitter: 1.0,
            warmup_s: 20.0,
            timeout_s: 60.0,
            merge_lateral_tol: 0.2,
            merge_heading_tol: 0.05,
            min_initiation_ttc: 3.0,
            virtual_lane_range: 50.0,
            comfort_lookahead: 60.0,
            planning_range: 100.0,
            trial_count: 10,
            vehicle: VehicleParams::default(),
            idm: IdmParams::default(),
            decision: DecisionConfig { threshold: DEFAULT_THRESHOLD, mode: TriggerMode::Absolute },
            planner: PlannerConfig::default(),
            apf: ApfGains::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("main_lane_length", self.main_lane_length),
            ("ramp_lane_length", self.ramp_lane_length),
            ("lane_width", self.lane_width),
            ("merge_region_length", self.merge_region_length),
            ("forcing_length", self.forcing_length),
            ("ramp_flow", self.ramp_flow),
            ("main_flow", self.main_flow),
            ("av_initial_x", self.av_initial_x),
            ("av_initial_v", self.av_initial_v),
            ("v_des", self.v_des),
            ("dt", self.dt),
            ("initial_fv_relative_distance", self.initial_fv_relative_distance),
            ("fv_initial_v", self.fv_initial_v),
            ("rv_initial_gap", self.rv_initial_gap),
            ("rv_initial_v", self.rv_initial_v),
            ("speed_jitter", self.speed_jitter),
            ("warmup_s", self.warmup_s),
            ("timeout_s", self.timeout_s),
            ("merge_lateral_tol", self.merge_lateral_tol),
            ("merge_heading_tol", self.merge_heading_tol),
            ("min_initiation_ttc", self.min_initiation_ttc),
            ("virtual_lane_range", self.virtual_lane_range),
            ("comfort_lookahead", self.comfort_lookahead),
            ("planning_range", self.planning_range),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return invalid(format!("{name} must be finite"));
        }
        self.vehicle.validate()?;
        self.idm.validate()?;
        self.decision.validate()?;
        self.planner.validate()?;
        if self.lane_width <= self.vehicle.body_width {
            return invalid(format!(
                "lane width {} must exceed vehicle width {}",
                self.lane_width, self.vehicle.body_width
            ));
        }
        if !(self.dt > 0.0) {
            return invalid("dt must be positive");
        }
        if self.ramp_flow < 0.0 || self.main_flow < 0.0 {
            return invalid("flows must be non-negative");
        }
        if !(self.ramp_lane_length > 0.0 && self.ramp_lane_length <= self.main_lane_length) {
            return invalid("ramp must be positive and no longer than the main lane");
        }
        if !(self.merge_region_length > 0.0 && self.merge_region_length <= self.ramp_lane_length) {
            return invalid("merge region must lie on the ramp");
        }
        if !(self.forcing_length > 0.0 && self.forcing_length <= self.ramp_lane_length) {
            return invalid("forcing length must lie on the ramp");
        }
        if !(self.av_initial_x >= 0.0 && self.av_initial_x < self.ramp_lane_length) {
            return invalid("AV must start on the ramp");
        }
        if !(self.v_des > 0.0) || self.av_initial_v < 0.0 || self.fv_initial_v < 0.0 || self.rv_initial_v < 0.0 {
            return invalid("speeds must be non-negative and v_des positive");
        }
        if self.speed_jitter < 0.0 || self.rv_initial_gap < 0.0 {
            return invalid("speed jitter and RV gap must be non-negative");
        }
        if self.warmup_s < 0.0 || !(self.timeout_s > 0.0) {
            return invalid("warm-up must be non-negative and timeout positive");
        }
        if self.merge_lateral_tol <= 0.0 || self.merge_heading_tol <= 0.0 {
            return invalid("merge tolerances must be positive");
        }
        if self.trial_count == 0 {
            return invalid("trial_count must be at least 1");
        }
        Ok(())
    }

    pub fn lane_y(&self, lane: Lane) -> f64 {
        match lane {
            Lane::Main => 0.0,
            Lane::Ramp => -self.lane_width,
        }
    }

    pub fn merge_start(&self) -> f64 {
        self.ramp_lane_length - self.merge_region_length
    }

    pub fn road(&self) -> RoadEnvelope<f64> {
        RoadEnvelope {
            source_y: self.lane_y(Lane::Ramp),
            target_y: self.lane_y(Lane::Main),
            lane_width: self.lane_width,
            merge_start: self.merge_start(),
            source_end: self.ramp_lane_length,
        }
    }

    /// True iff the body of `s` overlaps `lane` laterally.
    pub fn occupies(&self, s: &VehicleState<f64>, lane: Lane) -> bool {
        (s.y - self.lane_y(lane)).abs() < 0.5 * (self.lane_width + self.vehicle.body_width)
    }

    pub fn lane_tag(&self, s: &VehicleState<f64>) -> LaneTag {
        match (self.occupies(s, Lane::Ramp), self.occupies(s, Lane::Main)) {
            (true, false) => LaneTag::Ramp,
            (false, true) => LaneTag::Main,
            _ => LaneTag::Transition,
        }
    }

    /// Episode RNG for `trial`: the seed picks the generator, the trial its stream.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(trial);
        rng
    }

    fn steps(&self, seconds: f64) -> usize {
        (seconds / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// A background or designated human-driven vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficVehicle {
    pub id: u32,
    pub lane: Lane,
    pub state: VehicleState<f64>,
    pub idm: IdmParams<f64>,
}

/// FV: nearest main-lane vehicle level with or ahead of the AV. RV: nearest vehicle behind
/// the AV in either lane. `None` stands for a virtual vehicle at infinity.
pub fn identify_fv_rv<'a>(
    av: &VehicleState<f64>,
    traffic: &'a [TrafficVehicle],
) -> (Option<&'a TrafficVehicle>, Option<&'a TrafficVehicle>) {
    let fv = traffic
        .iter()
        .filter(|t| t.lane == Lane::Main && t.state.x >= av.x)
        .min_by(|a, b| a.state.x.total_cmp(&b.state.x).then(a.id.cmp(&b.id)));
    let rv = traffic
        .iter()
        .filter(|t| t.state.x < av.x)
        .min_by(|a, b| (av.x - a.state.x).total_cmp(&(av.x - b.state.x)).then(a.id.cmp(&b.id)));
    (fv, rv)
}

/// Which controller takes over once the lane change is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Controller {
    Planner,
    Apf,
}

impl Controller {
    pub fn as_str(&self) -> &'static str {
        match self {
            Controller::Planner => "planner",
            Controller::Apf => "apf",
        }
    }
}

pub fn run_episode(cfg: &ScenarioConfig) -> Result<SimulationTrace> {
    run_trial(cfg, 0, Controller::Planner)
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    traffic: Vec<TrafficVehicle>,
    pending: [VecDeque<f64>; 2],
    next_id: u32,
}

fn lane_slot(lane: Lane) -> usize {
    match lane {
        Lane::Ramp => 0,
        Lane::Main => 1,
    }
}

impl<'a> World<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        Self {
            cfg,
            traffic: Vec::new(),
            pending: [VecDeque::new(), VecDeque::new()],
            next_id: RV_ID + 1,
        }
    }

    /// Nearest vehicle ahead of `x` in `lane` as `(bumper gap, speed)`.
    fn leader(&self, x: f64, lane: Lane, skip: Option<u32>, av: Option<&VehicleState<f64>>) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |lead_x: f64, lead_v: f64| {
            if lead_x > x && best.is_none_or(|(bx, _)| lead_x < bx) {
                best = Some((lead_x, lead_v));
            }
        };
        for t in self.traffic.iter().filter(|t| t.lane == lane && Some(t.id) != skip) {
            consider(t.state.x, t.state.v);
        }
        if let Some(av) = av {
            if self.cfg.occupies(av, lane) {
                consider(av.x, av.velocity().0);
            }
        }
        best.map(|(lead_x, v)| (lead_x - x - self.cfg.vehicle.body_length, v))
    }

    fn idm_accel(&self, ego_v: f64, lead: Option<(f64, f64)>, idm: &IdmParams<f64>) -> f64 {
        let (gap, lead_v) = lead.unwrap_or((f64::INFINITY, ego_v));
        idm_acceleration(ego_v, gap, lead_v, idm, &self.cfg.vehicle).unwrap_or(self.cfg.vehicle.a_min)
    }

    fn admit(&mut self, arrivals: impl Iterator<Item = Arrival>, av: Option<&VehicleState<f64>>) {
        for a in arrivals {
            self.pending[lane_slot(a.lane)].push_back(a.speed);
        }
        for lane in [Lane::Main, Lane::Ramp] {
            let Some(&speed) = self.pending[lane_slot(lane)].front() else { continue };
            let clear = self
                .leader(-f64::MIN_POSITIVE, lane, None, av)
                .is_none_or(|(gap, _)| gap >= self.cfg.idm.min_gap);
            if clear {
                self.pending[lane_slot(lane)].pop_front();
                let id = self.next_id;
                self.next_id += 1;
                self.traffic.push(TrafficVehicle {
                    id,
                    lane,
                    state: VehicleState::new(0.0, self.cfg.lane_y(lane), 0.0, speed),
                    idm: self.cfg.idm.with_v0(speed),
                });
            }
        }
    }

    fn advance(&mut self, av: Option<&VehicleState<f64>>) -> Result<()> {
        let dt = self.cfg.dt;
        let accels: Vec<f64> = self
            .traffic
            .iter()
            .map(|t| self.idm_accel(t.state.v, self.leader(t.state.x, t.lane, Some(t.id), av), &t.idm))
            .collect();
        for (t, a) in self.traffic.iter_mut().zip(accels) {
            t.state = step_kinematics(&t.state, t.state.v + a * dt, 0.0, dt, &self.cfg.vehicle)?;
        }
        let (ramp_end, main_end) = (self.cfg.ramp_lane_length, self.cfg.main_lane_length);
        self.traffic.retain(|t| match t.lane {
            Lane::Ramp => t.state.x <= ramp_end,
            Lane::Main => t.state.x <= main_end,
        });
        Ok(())
    }

    fn colliding_pair(&self, av: &VehicleState<f64>) -> Option<(u32, u32)> {
        let p = &self.cfg.vehicle;
        for t in &self.traffic {
            if check_collision(av, p, &t.state, p) {
                return Some((AV_ID, t.id));
            }
        }
        for lane in [Lane::Ramp, Lane::Main] {
            let mut in_lane: Vec<&TrafficVehicle> = self.traffic.iter().filter(|t| t.lane == lane).collect();
            in_lane.sort_by(|a, b| a.state.x.total_cmp(&b.state.x).then(a.id.cmp(&b.id)));
            for w in in_lane.windows(2) {
                if check_collision(&w[0].state, p, &w[1].state, p) {
                    return Some((w[0].id.min(w[1].id), w[0].id.max(w[1].id)));
                }
            }
        }
        None
    }
}

// One per episode, so the size spread between variants does not matter.
#[allow(clippy::large_enum_variant)]
enum Phase {
    Following,
    Waiting,
    Executing { candidate: CandidateTrajectory<f64>, start: usize },
    Apf,
}

/// Inserts the AV and the designated FV and RV after the warm-up, clearing
/// background vehicles that would sit on top of them.
fn insert_designated(world: &mut World, rng: &mut ChaCha8Rng) -> VehicleState<f64> {
    let cfg = world.cfg;
    let jitter = cfg.speed_jitter;
    let fv_v = (cfg.fv_initial_v + rng.random_range(-jitter..=jitter)).max(0.0);
    let rv_v = (cfg.rv_initial_v + rng.random_range(-jitter..=jitter)).max(0.0);
    let av = VehicleState::new(cfg.av_initial_x, cfg.lane_y(Lane::Ramp), 0.0, cfg.av_initial_v);
    let fv = TrafficVehicle {
        id: FV_ID,
        lane: Lane::Main,
        state: VehicleState::new(cfg.av_initial_x + cfg.initial_fv_relative_distance, cfg.lane_y(Lane::Main), 0.0, fv_v),
        idm: cfg.idm.with_v0(fv_v.max(1e-3)),
    };
    let rv = TrafficVehicle {
        id: RV_ID,
        lane: Lane::Ramp,
        state: VehicleState::new(cfg.av_initial_x - cfg.rv_initial_gap, cfg.lane_y(Lane::Ramp), 0.0, rv_v),
        idm: cfg.idm.with_v0(rv_v.max(1e-3)),
    };
    let clearance = 2.0 * cfg.vehicle.body_length + cfg.idm.min_gap;
    let anchors = [(Lane::Ramp, av.x), (Lane::Main, fv.state.x), (Lane::Ramp, rv.state.x)];
    world
        .traffic
        .retain(|t| !anchors.iter().any(|&(lane, x)| t.lane == lane && (t.state.x - x).abs() < clearance));
    if rv.state.x >= 0.0 {
        world.traffic.push(rv);
    }
    world.traffic.push(fv);
    world.traffic.sort_by_key(|t| t.id);
    av
}

fn snapshot(world: &World, av: &VehicleState<f64>) -> Vec<VehicleRecord> {
    let (fv, rv) = identify_fv_rv(av, &world.traffic);
    let (fv_id, rv_id) = (fv.map(|t| t.id), rv.map(|t| t.id));
    let mut out = vec![VehicleRecord {
        id: AV_ID,
        role: Role::Av,
        lane: world.cfg.lane_tag(av),
        state: *av,
    }];
    let mut traffic: Vec<&TrafficVehicle> = world.traffic.iter().collect();
    traffic.sort_by_key(|t| t.id);
    out.extend(traffic.into_iter().map(|t| VehicleRecord {
        id: t.id,
        role: if Some(t.id) == fv_id {
            Role::Fv
        } else if Some(t.id) == rv_id {
            Role::Rv
        } else {
            Role::Other
        },
        lane: match t.lane {
            Lane::Ramp => LaneTag::Ramp,
            Lane::Main => LaneTag::Main,
        },
        state: t.state,
    }));
    out
}

/// Speed of the virtual twin: the nearest main-lane vehicle within range, else `v_des`.
fn virtual_speed(cfg: &ScenarioConfig, av: &VehicleState<f64>, traffic: &[TrafficVehicle]) -> f64 {
    traffic
        .iter()
        .filter(|t| t.lane == Lane::Main && (t.state.x - av.x).abs() <= cfg.virtual_lane_range)
        .min_by(|a, b| (a.state.x - av.x).abs().total_cmp(&(b.state.x - av.x).abs()).then(a.id.cmp(&b.id)))
        .map_or(cfg.v_des, |t| t.state.v)
}

fn planning_context(cfg: &ScenarioConfig, av: &VehicleState<f64>, time: f64, traffic: &[TrafficVehicle]) -> PlanningContext<f64> {
    let (fv, rv) = identify_fv_rv(av, traffic);
    let v_comfort = match fv {
        Some(f) if f.state.x - av.x <= cfg.comfort_lookahead => cfg.v_des.min(f.state.v),
        _ => cfg.v_des,
    }
    .max(1e-3);
    PlanningContext {
        av: *av,
        time,
        v_des: cfg.v_des,
        bc: BoundaryConditions {
            y_s: av.y,
            phi_s: av.phi,
            delta_s: av.delta,
            v_s: av.v,
            a_s: av.a,
            lane_offset: cfg.lane_y(Lane::Main) - av.y,
            v_comfort,
            wheelbase: cfg.vehicle.wheelbase,
        },
        fv: fv.map(|t| t.state),
        rv: rv.map(|t| t.state),
        others: traffic
            .iter()
            .filter(|t| (t.state.x - av.x).abs() <= cfg.planning_range)
            .map(|t| t.state)
            .collect(),
        road: Some(cfg.road()),
    }
}

/// AV pose `tau` seconds into an executed manoeuvre; past the end it keeps
/// the end speed along the target centreline.
fn playback(c: &CandidateTrajectory<f64>, tau: f64, prev: &VehicleState<f64>, dt: f64, wheelbase: f64) -> VehicleState<f64> {
    let (x, y, phi, v, kappa) = if tau <= c.duration() {
        let p = c.point_at(tau);
        (p.x, p.y, p.phi, p.v, p.kappa)
    } else {
        let end = c.point_at(c.duration());
        (end.x + end.v * (tau - c.duration()), end.y, end.phi, end.v, 0.0)
    };
    VehicleState {
        x,
        y,
        phi,
        v,
        delta: (wheelbase * kappa).atan(),
        a: (v - prev.v) / dt,
    }
}

/// The FV when its time-to-collision is below the initiation gate.
fn gate_blocked<'a>(cfg: &ScenarioConfig, av: &VehicleState<f64>, traffic: &'a [TrafficVehicle]) -> Option<&'a TrafficVehicle> {
    identify_fv_rv(av, traffic)
        .0
        .filter(|fv| ttc(av, &fv.state, cfg.vehicle.body_length) < cfg.min_initiation_ttc)
}

/// Runs one episode. Trial `trial` draws traffic from its own RNG stream.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64, controller: Controller) -> Result<SimulationTrace> {
    cfg.validate()?;
    let dt = cfg.dt;
    let mut rng = cfg.trial_rng(trial);
    let warmup = cfg.steps(cfg.warmup_s);
    let horizon = cfg.steps(cfg.timeout_s);
    let schedule = spawn_traffic(cfg.ramp_flow, cfg.main_flow, cfg.v_des, dt, warmup + horizon + 1, &mut rng);

    let mut world = World::new(cfg);
    for k in 0..warmup {
        world.admit(schedule.at_step(k).copied(), None);
        world.advance(None)?;
    }
    let mut av = insert_designated(&mut world, &mut rng);
    let av_idm = cfg.idm.with_v0(cfg.v_des);
    let mut acc = UnsatisfactoryAccumulator::new(cfg.v_des, dt)?;
    let mut trigger = LaneChangeTrigger::new(cfg.decision);
    let mut phase = Phase::Following;

    let mut trace = SimulationTrace {
        dt,
        body_length: cfg.vehicle.body_length,
        records: Vec::new(),
        outcome: Outcome::Timeout,
        decision_step: None,
        initiation_step: None,
        plan: None,
        attempts: Vec::new(),
        collision: None,
    };
    let mut v_vir = virtual_speed(cfg, &av, &world.traffic);
    let mut selected: Option<SelectedRef> = None;
    trace.records.push(StepRecord {
        step: 0,
        time: 0.0,
        vehicles: snapshot(&world, &av),
        c_av: 0.0,
        c_vir: 0.0,
        decision: false,
        status: PlannerStatus::Following,
        selected: None,
    });
    if let Some(pair) = world.colliding_pair(&av) {
        trace.outcome = Outcome::Collision;
        trace.collision = Some(pair);
        return Ok(trace);
    }

    for k in 1..=horizon {
        let time = k as f64 * dt;
        let prev = av;

        av = match &phase {
            Phase::Following | Phase::Waiting => {
                let mut a = world.idm_accel(prev.v, world.leader(prev.x, Lane::Ramp, None, None), &av_idm);
                if matches!(phase, Phase::Waiting) {
                    if let Some(fv) = gate_blocked(cfg, &prev, &world.traffic) {
                        let gap = fv.state.x - prev.x - cfg.vehicle.body_length;
                        let align = if gap > 0.0 { world.idm_accel(prev.v, Some((gap, fv.state.v)), &av_idm) } else { cfg.vehicle.a_min };
                        a = a.min(align);
                    }
                }
                step_kinematics(&prev, prev.v + a * dt, 0.0, dt, &cfg.vehicle)?
            }
            Phase::Executing { candidate, start } => {
                playback(candidate, (k - start) as f64 * dt, &prev, dt, cfg.vehicle.wheelbase)
            }
            Phase::Apf => {
                let (fv, rv) = {
                    let ahead = world
                        .traffic
                        .iter()
                        .filter(|t| t.state.x > prev.x)
                        .min_by(|a, b| a.state.x.total_cmp(&b.state.x).then(a.id.cmp(&b.id)))
                        .map(|t| t.state);
                    (ahead, identify_fv_rv(&prev, &world.traffic).1.map(|t| t.state))
                };
                let gains = ApfGains { v_des: cfg.v_des, ..cfg.apf };
                let (v_cmd, delta_cmd) =
                    apf_step(&prev, fv.as_ref(), rv.as_ref(), cfg.lane_y(Lane::Main), &gains, &cfg.vehicle, dt);
                step_kinematics(&prev, v_cmd, delta_cmd, dt, &cfg.vehicle)?
            }
        };
        world.advance(Some(&prev))?;
        world.admit(schedule.at_step(warmup + k).copied(), Some(&av));

        acc = acc.accumulate(prev.v, v_vir);
        v_vir = virtual_speed(cfg, &av, &world.traffic);

        let mut status = match phase {
            Phase::Following | Phase::Waiting => PlannerStatus::Following,
            Phase::Executing { .. } => PlannerStatus::Executing,
            Phase::Apf => PlannerStatus::Apf,
        };
        if matches!(phase, Phase::Following) {
            let remaining = cfg.ramp_lane_length - av.x;
            let fired = if remaining < cfg.forcing_length {
                let threshold = cfg.decision.threshold * (remaining / cfg.forcing_length).clamp(0.0, 1.0);
                trigger.update_with_threshold(&acc, threshold, true)
            } else {
                trigger.update(&acc)
            };
            if fired {
                trace.decision_step = Some(k);
                phase = match controller {
                    Controller::Planner => Phase::Waiting,
                    Controller::Apf => Phase::Apf,
                };
                if controller == Controller::Apf {
                    status = PlannerStatus::Apf;
                }
            }
        }
        if matches!(phase, Phase::Waiting) {
            if gate_blocked(cfg, &av, &world.traffic).is_some() {
                status = PlannerStatus::DeferredTtc;
            } else {
                let context = planning_context(cfg, &av, time, &world.traffic);
                let p = plan(&context, &cfg.planner, &cfg.vehicle)?;
                match p.best().copied() {
                    Some(c) => {
                        status = PlannerStatus::Initiated;
                        selected = Some(SelectedRef { m: c.m_index, n: c.n_index, u_total: c.u_total });
                        trace.initiation_step = Some(k);
                        phase = Phase::Executing { candidate: c, start: k };
                        trace.plan = Some(PlanRecord { step: k, context: context.clone(), plan: p.clone() });
                    }
                    None => status = PlannerStatus::DeferredNoGap,
                }
                trace.attempts.push(PlanRecord { step: k, context, plan: p });
            }
        }

        let merged = matches!(phase, Phase::Executing { .. } | Phase::Apf)
            && (av.y - cfg.lane_y(Lane::Main)).abs() <= cfg.merge_lateral_tol
            && av.phi.abs() <= cfg.merge_heading_tol;
        if merged {
            status = PlannerStatus::Merged;
        }
        trace.records.push(StepRecord {
            step: k,
            time,
            vehicles: snapshot(&world, &av),
            c_av: acc.c_av(),
            c_vir: acc.c_vir(),
            decision: trigger.fired(),
            status,
            selected,
        });

        if let Some(pair) = world.colliding_pair(&av) {
            trace.outcome = Outcome::Collision;
            trace.collision = Some(pair);
            return Ok(trace);
        }
        if merged {
            trace.outcome = Outcome::Merged;
            return Ok(trace);
        }
        let stuck = match phase {
            Phase::Following | Phase::Waiting => av.x >= cfg.ramp_lane_length,
            Phase::Apf => av.x >= cfg.ramp_lane_length && !cfg.occupies(&av, Lane::Main),
            Phase::Executing { .. } => false,
        };
        if stuck {
            break;
        }
    }
    trace.outcome = Outcome::Timeout;
    Ok(trace)
}
