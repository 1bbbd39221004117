//! Arrow-cluster lane-change planner.
//!
//! Candidate manoeuvres are sampled on a grid of end displacements and
//! durations. Each grid point fixes two quintics: a lateral shape `y(x)` over
//! the longitudinal displacement and a speed profile `x(t)` over the
//! duration, coupled through the shared end displacement. The AV pose at
//! time `t` is the composition `(x(t), y(x(t)))`. Candidates are scored by a
//! weighted sum of shape smoothness, speed tracking and proximity risk, and
//! the feasible minimiser is selected.

pub mod loss;
pub mod poly;

use std::cmp::Ordering;

pub use loss::{risk_distance, risk_term, smoothness_loss_yx, tracking_loss_xt, LossWeights};
pub use poly::{EndConditions, Polynomial, QuinticPolynomial};

use crate::error::{invalid, Error, Result};
use crate::geometry::Footprint;
use crate::model::{VehicleParams, VehicleState};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid<T> {
    pub x_start: T,
    pub t_start: T,
    pub d_min: T,
    pub d_max: T,
    pub d_step: T,
    pub duration_min: T,
    pub duration_max: T,
    pub t_step: T,
}

impl<T: Scalar> Default for SamplingGrid<T> {
    fn default() -> Self {
        Self {
            x_start: T::zero(),
            t_start: T::zero(),
            d_min: lit(30.0),
            d_max: lit(80.0),
            d_step: lit(10.0),
            duration_min: lit(3.0),
            duration_max: lit(6.0),
            t_step: lit(0.5),
        }
    }
}

fn steps_in<T: Scalar>(lo: T, hi: T, step: T) -> usize {
    // tolerate representation error in (hi - lo) / step
    let k = ((hi - lo) / step + lit(1e-9)).floor();
    k.to_usize().unwrap_or(0) + 1
}

impl<T: Scalar> SamplingGrid<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.x_start,
            self.t_start,
            self.d_min,
            self.d_max,
            self.d_step,
            self.duration_min,
            self.duration_max,
            self.t_step,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return invalid("sampling grid values must be finite");
        }
        if !(T::zero() < self.d_min && self.d_min <= self.d_max) {
            return invalid("sampling grid requires 0 < d_min <= d_max");
        }
        if !(T::zero() < self.duration_min && self.duration_min <= self.duration_max) {
            return invalid("sampling grid requires 0 < T_min <= T_max");
        }
        if !(self.d_step > T::zero() && self.t_step > T::zero()) {
            return invalid("sampling grid steps must be positive");
        }
        Ok(())
    }

    /// Same shape, re-anchored at a manoeuvre start.
    pub fn anchored(&self, x_start: T, t_start: T) -> Self {
        Self {
            x_start,
            t_start,
            ..*self
        }
    }

    /// Number of end displacements, `M`.
    pub fn endpoint_count(&self) -> usize {
        steps_in(self.d_min, self.d_max, self.d_step)
    }

    /// Number of durations, `N`.
    pub fn duration_count(&self) -> usize {
        steps_in(self.duration_min, self.duration_max, self.t_step)
    }

    pub fn displacement(&self, m: usize) -> T {
        self.d_min + lit::<T>(m as f64) * self.d_step
    }

    pub fn duration(&self, n: usize) -> T {
        self.duration_min + lit::<T>(n as f64) * self.t_step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint<T> {
    pub m: usize,
    pub n: usize,
    /// Absolute end abscissa.
    pub x_e: T,
    /// Absolute end time.
    pub t_e: T,
}

/// Full `M x N` product of end abscissas and end times, row-major in `(m, n)`.
pub fn build_grid<T: Scalar>(grid: &SamplingGrid<T>) -> Result<Vec<GridPoint<T>>> {
    grid.validate()?;
    let (mm, nn) = (grid.endpoint_count(), grid.duration_count());
    let mut out = Vec::with_capacity(mm * nn);
    for m in 0..mm {
        for n in 0..nn {
            out.push(GridPoint {
                m,
                n,
                x_e: grid.x_start + grid.displacement(m),
                t_e: grid.t_start + grid.duration(n),
            });
        }
    }
    Ok(out)
}

/// Manoeuvre start state shared by every candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions<T> {
    pub y_s: T,
    pub phi_s: T,
    pub delta_s: T,
    pub v_s: T,
    pub a_s: T,
    /// Signed lateral offset to the target centreline.
    pub lane_offset: T,
    /// Longitudinal speed at the end of the manoeuvre.
    pub v_comfort: T,
    pub wheelbase: T,
}

impl<T: Scalar> BoundaryConditions<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.y_s, self.phi_s, self.delta_s, self.v_s, self.a_s, self.lane_offset, self.v_comfort, self.wheelbase];
        if all.iter().any(|v| !v.is_finite()) {
            return invalid("boundary conditions must be finite");
        }
        if self.lane_offset == T::zero() {
            return invalid("lane offset must be non-zero");
        }
        if !(self.v_comfort > T::zero()) {
            return invalid("comfort speed must be positive");
        }
        if !(self.wheelbase > T::zero()) {
            return invalid("wheelbase must be positive");
        }
        Ok(())
    }

    /// Start and end conditions of the lateral shape.
    pub fn yx_conditions(&self) -> (EndConditions<T>, EndConditions<T>) {
        let slope = self.phi_s.tan();
        let curvature = (T::one() + slope * slope).powf(lit(1.5)) * self.delta_s.tan() / self.wheelbase;
        (
            EndConditions { value: self.y_s, slope, curvature },
            EndConditions { value: self.y_s + self.lane_offset, slope: T::zero(), curvature: T::zero() },
        )
    }

    /// Start and end conditions of the speed profile with end displacement `displacement`.
    pub fn xt_conditions(&self, displacement: T) -> (EndConditions<T>, EndConditions<T>) {
        let (s, c) = self.phi_s.sin_cos();
        let accel = self.a_s * c + self.v_s * self.v_s * self.delta_s.tan() * s / self.wheelbase;
        (
            EndConditions { value: T::zero(), slope: self.v_s * c, curvature: accel },
            EndConditions { value: displacement, slope: self.v_comfort, curvature: T::zero() },
        )
    }
}

/// Lateral shape over longitudinal displacement `[0, displacement]`.
pub fn fit_yx<T: Scalar>(bc: &BoundaryConditions<T>, displacement: T) -> Result<QuinticPolynomial<T>> {
    if !(displacement > T::zero()) {
        return invalid("end displacement must be positive");
    }
    let (start, finish) = bc.yx_conditions();
    QuinticPolynomial::fit(start, finish, displacement)
}

/// Longitudinal displacement over time `[0, duration]`.
pub fn fit_xt<T: Scalar>(bc: &BoundaryConditions<T>, displacement: T, duration: T) -> Result<QuinticPolynomial<T>> {
    if !(displacement > T::zero()) {
        return invalid("end displacement must be positive");
    }
    if !(duration > T::zero()) {
        return invalid("manoeuvre duration must be positive");
    }
    let (start, finish) = bc.xt_conditions(displacement);
    QuinticPolynomial::fit(start, finish, duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// A risk distance is exactly zero.
    Overlap,
    /// Predicted footprint conflict with another vehicle.
    Conflict,
    /// Speed, acceleration or curvature outside vehicle limits.
    Kinematics,
    /// Leaves the drivable envelope.
    Road,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Feasibility::Feasible => "feasible",
            Feasibility::Overlap => "overlap",
            Feasibility::Conflict => "conflict",
            Feasibility::Kinematics => "kinematics",
            Feasibility::Road => "road",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateTrajectory<T> {
    pub m_index: usize,
    pub n_index: usize,
    pub s_yx: QuinticPolynomial<T>,
    pub s_xt: QuinticPolynomial<T>,
    pub x_start: T,
    pub t_start: T,
    /// Absolute end abscissa.
    pub x_e: T,
    /// Absolute end time.
    pub t_e: T,
    pub u_yx: T,
    pub u_xt: T,
    pub u_risk: T,
    pub u_total: T,
    pub feasibility: Feasibility,
}

/// Pose along a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub x: T,
    pub y: T,
    pub phi: T,
    pub v: T,
    /// Longitudinal acceleration of the speed profile.
    pub ax: T,
    /// Path curvature at this point.
    pub kappa: T,
}

impl<T: Scalar> CandidateTrajectory<T> {
    pub fn displacement(&self) -> T {
        self.s_yx.domain_end
    }

    pub fn duration(&self) -> T {
        self.s_xt.domain_end
    }

    pub fn is_feasible(&self) -> bool {
        self.feasibility.is_feasible()
    }

    /// Pose `tau` seconds after the manoeuvre start, clamped to the domain.
    pub fn point_at(&self, tau: T) -> TrajectoryPoint<T> {
        let tau = tau.max(T::zero()).min(self.duration());
        let s = self.s_xt.eval(tau);
        let xdot = self.s_xt.d1(tau);
        let slope = self.s_yx.d1(s);
        let norm = (T::one() + slope * slope).sqrt();
        TrajectoryPoint {
            x: self.x_start + s,
            y: self.s_yx.eval(s),
            phi: slope.atan(),
            v: xdot * norm,
            ax: self.s_xt.d2(tau),
            kappa: self.s_yx.d2(s) / (norm * norm * norm),
        }
    }

    /// Sampling instants `0, dt, 2 dt, ...` up to and including the duration.
    pub fn sample_times(&self, dt: T) -> Vec<T> {
        sample_times(self.duration(), dt)
    }

    /// Total order used for selection: loss, then duration, then displacement.
    pub fn selection_order(&self, other: &Self) -> Ordering {
        self.u_total
            .partial_cmp(&other.u_total)
            .unwrap_or(Ordering::Equal)
            .then(self.t_e.partial_cmp(&other.t_e).unwrap_or(Ordering::Equal))
            .then(self.x_e.partial_cmp(&other.x_e).unwrap_or(Ordering::Equal))
    }
}

pub(crate) fn sample_times<T: Scalar>(duration: T, dt: T) -> Vec<T> {
    let n = (duration / dt + lit(1e-9)).floor().to_usize().unwrap_or(0);
    let mut out: Vec<T> = (0..=n).map(|j| lit::<T>(j as f64) * dt).collect();
    if let Some(last) = out.last().copied() {
        if duration - last > dt * lit(1e-6) {
            out.push(duration);
        }
    }
    out
}

/// Drivable envelope for a two-lane merge.
///
/// Lateral motion into the target lane is only allowed from `merge_start`
/// on, and the source lane ends at `source_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadEnvelope<T> {
    pub source_y: T,
    pub target_y: T,
    pub lane_width: T,
    pub merge_start: T,
    pub source_end: T,
}

impl<T: Scalar> RoadEnvelope<T> {
    /// Signed lateral progress of `y` past the lane boundary, positive towards the target.
    fn progress(&self, y: T) -> T {
        let boundary = (self.source_y + self.target_y) * lit(0.5);
        (self.target_y - self.source_y).signum() * (y - boundary)
    }

    pub fn admits(&self, x: T, y: T, half_width: T) -> bool {
        let q = self.progress(y);
        if q + half_width > self.lane_width || q - half_width < -self.lane_width {
            return false;
        }
        if x < self.merge_start && q + half_width > T::zero() {
            return false;
        }
        if x > self.source_end && q - half_width < T::zero() {
            return false;
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig<T> {
    pub grid: SamplingGrid<T>,
    pub weights: LossWeights<T>,
    /// Evaluation step for risk and feasibility checks.
    pub eval_dt: T,
    /// Evaluate the rear-vehicle risk term as a minimum over the horizon
    /// with a constant-velocity prediction instead of at the start only.
    pub rv_time_indexed: bool,
    pub margin_long: T,
    pub margin_lat: T,
    /// Also reject candidates whose longitudinal acceleration leaves
    /// `[a_min, a_max]`. Speed and curvature limits always apply.
    pub accel_limits: bool,
}

impl<T: Scalar> Default for PlannerConfig<T> {
    fn default() -> Self {
        Self {
            grid: SamplingGrid::default(),
            weights: LossWeights::default(),
            eval_dt: lit(0.1),
            rv_time_indexed: false,
            margin_long: lit(2.0),
            margin_lat: lit(0.25),
            accel_limits: false,
        }
    }
}

impl<T: Scalar> PlannerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.weights.validate()?;
        if !(self.eval_dt > T::zero() && self.eval_dt.is_finite()) {
            return invalid("planner evaluation step must be positive");
        }
        if !(self.margin_long >= T::zero() && self.margin_lat >= T::zero()) {
            return invalid("planner safety margins must be non-negative");
        }
        Ok(())
    }
}

/// Everything the planner sees at the moment it is invoked.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningContext<T> {
    pub av: VehicleState<T>,
    pub time: T,
    pub v_des: T,
    pub bc: BoundaryConditions<T>,
    /// Front vehicle; `None` stands for a virtual vehicle at infinity.
    pub fv: Option<VehicleState<T>>,
    /// Rear vehicle; `None` stands for a virtual vehicle at infinity.
    pub rv: Option<VehicleState<T>>,
    /// Every other vehicle, for the conflict check.
    pub others: Vec<VehicleState<T>>,
    pub road: Option<RoadEnvelope<T>>,
}

fn predict<T: Scalar>(s: &VehicleState<T>, tau: T) -> VehicleState<T> {
    let (vx, vy) = s.velocity();
    VehicleState {
        x: s.x + vx * tau,
        y: s.y + vy * tau,
        ..*s
    }
}

/// Sum of the front- and rear-vehicle risk terms for one candidate.
///
/// The rear term uses the AV and RV positions at the manoeuvre start unless
/// `rv_time_indexed` is set. The front term is the minimum over the horizon,
/// with the FV moving at constant speed on its current lateral position.
pub fn risk_loss<T: Scalar>(
    candidate: &CandidateTrajectory<T>,
    av_start: &VehicleState<T>,
    rv: Option<&VehicleState<T>>,
    fv: Option<&VehicleState<T>>,
    weights: &LossWeights<T>,
    dt: T,
    rv_time_indexed: bool,
) -> T {
    let times = candidate.sample_times(dt);
    let min_over = |other: &VehicleState<T>| {
        times.iter().fold(T::infinity(), |best, &tau| {
            let p = candidate.point_at(tau);
            let o = predict(other, tau);
            best.min(risk_distance(p.x - o.x, p.y - other.y, weights))
        })
    };
    let d_rear = match rv {
        None => T::infinity(),
        Some(rv) if rv_time_indexed => min_over(rv),
        Some(rv) => risk_distance(av_start.x - rv.x, av_start.y - rv.y, weights),
    };
    let d_front = fv.map_or(T::infinity(), min_over);
    risk_term(d_rear) + risk_term(d_front)
}

fn check_feasibility<T: Scalar>(
    c: &CandidateTrajectory<T>,
    ctx: &PlanningContext<T>,
    cfg: &PlannerConfig<T>,
    vehicle: &VehicleParams<T>,
) -> Feasibility {
    if !c.u_risk.is_finite() {
        return Feasibility::Overlap;
    }
    let tol = lit::<T>(1e-9);
    let kappa_max = vehicle.delta_max.tan() / vehicle.wheelbase;
    let half_width = vehicle.body_width * lit(0.5);
    let mut verdict = Feasibility::Feasible;
    for tau in c.sample_times(cfg.eval_dt) {
        let p = c.point_at(tau);
        let xdot = c.s_xt.d1(tau);
        let accel_out = cfg.accel_limits && (p.ax < vehicle.a_min - tol || p.ax > vehicle.a_max + tol);
        if xdot < vehicle.v_min - tol || p.v > vehicle.v_max + tol || accel_out || p.kappa.abs() > kappa_max {
            return Feasibility::Kinematics;
        }
        if let Some(road) = &ctx.road {
            if !road.admits(p.x, p.y, half_width) {
                verdict = Feasibility::Road;
            }
        }
        let pose = VehicleState::new(p.x, p.y, p.phi, p.v);
        let ego = Footprint::of(&pose, vehicle).inflated(cfg.margin_long, cfg.margin_lat);
        let conflict = ctx
            .others
            .iter()
            .any(|o| ego.overlaps(&Footprint::of(&predict(o, tau), vehicle)));
        if conflict && verdict.is_feasible() {
            verdict = Feasibility::Conflict;
        }
    }
    verdict
}

/// Fits and scores the candidate for one `(m, n)` grid point.
pub fn evaluate_candidate<T: Scalar>(
    point: &GridPoint<T>,
    ctx: &PlanningContext<T>,
    cfg: &PlannerConfig<T>,
    vehicle: &VehicleParams<T>,
) -> Result<CandidateTrajectory<T>> {
    let x_start = ctx.av.x;
    let t_start = ctx.time;
    let displacement = point.x_e - x_start;
    let duration = point.t_e - t_start;
    let s_yx = fit_yx(&ctx.bc, displacement)?;
    let s_xt = fit_xt(&ctx.bc, displacement, duration)?;
    let w = &cfg.weights;
    let mut c = CandidateTrajectory {
        m_index: point.m,
        n_index: point.n,
        s_yx,
        s_xt,
        x_start,
        t_start,
        x_e: point.x_e,
        t_e: point.t_e,
        u_yx: smoothness_loss_yx(&s_yx, w),
        u_xt: tracking_loss_xt(&s_xt, ctx.v_des, w),
        u_risk: T::zero(),
        u_total: T::zero(),
        feasibility: Feasibility::Feasible,
    };
    c.u_risk = risk_loss(&c, &ctx.av, ctx.rv.as_ref(), ctx.fv.as_ref(), w, cfg.eval_dt, cfg.rv_time_indexed);
    c.u_total = w.combine(c.u_yx, c.u_xt, c.u_risk);
    c.feasibility = check_feasibility(&c, ctx, cfg, vehicle);
    Ok(c)
}

/// The whole candidate cluster for `ctx`, in grid order.
pub fn plan_cluster<T: Scalar>(
    ctx: &PlanningContext<T>,
    cfg: &PlannerConfig<T>,
    vehicle: &VehicleParams<T>,
) -> Result<Vec<CandidateTrajectory<T>>> {
    cfg.validate()?;
    ctx.bc.validate()?;
    if !ctx.av.is_finite() {
        return invalid("AV state must be finite");
    }
    let grid = cfg.grid.anchored(ctx.av.x, ctx.time);
    build_grid(&grid)?
        .iter()
        .map(|p| evaluate_candidate(p, ctx, cfg, vehicle))
        .collect()
}

/// Index of the feasible candidate with the smallest loss.
///
/// Ties go to the shorter duration, then to the shorter displacement.
pub fn select_best<T: Scalar>(candidates: &[CandidateTrajectory<T>]) -> Result<usize> {
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_feasible() && c.u_total.is_finite())
        .min_by(|a, b| a.1.selection_order(b.1))
        .map(|(i, _)| i)
        .ok_or(Error::NoSafeGap)
}

/// A scored cluster and its selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan<T> {
    pub candidates: Vec<CandidateTrajectory<T>>,
    pub selected: Option<usize>,
}

impl<T: Scalar> Plan<T> {
    pub fn best(&self) -> Option<&CandidateTrajectory<T>> {
        self.selected.map(|i| &self.candidates[i])
    }
}

pub fn plan<T: Scalar>(ctx: &PlanningContext<T>, cfg: &PlannerConfig<T>, vehicle: &VehicleParams<T>) -> Result<Plan<T>> {
    let candidates = plan_cluster(ctx, cfg, vehicle)?;
    let selected = match select_best(&candidates) {
        Ok(i) => Some(i),
        Err(Error::NoSafeGap) => None,
        Err(e) => return Err(e),
    };
    Ok(Plan { candidates, selected })
}
