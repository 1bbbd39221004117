//! Per-step episode records.

use crate::model::VehicleState;
use crate::planner::{Plan, PlanningContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Av,
    Fv,
    Rv,
    Other,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Av => "av",
            Role::Fv => "fv",
            Role::Rv => "rv",
            Role::Other => "other",
        }
    }
}

/// Lane annotation of a recorded vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaneTag {
    Ramp,
    Main,
    /// Body straddles the lane boundary.
    Transition,
}

impl LaneTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            LaneTag::Ramp => "ramp",
            LaneTag::Main => "main",
            LaneTag::Transition => "transition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerStatus {
    /// Car following, no trigger yet.
    Following,
    /// Triggered but held back because the FV time-to-collision is below the gate.
    DeferredTtc,
    /// Triggered, planner ran, no feasible candidate.
    DeferredNoGap,
    /// A candidate was selected on this step.
    Initiated,
    Executing,
    /// Reactive baseline controller in charge.
    Apf,
    Merged,
}

impl PlannerStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerStatus::Following => "following",
            PlannerStatus::DeferredTtc => "deferred_ttc",
            PlannerStatus::DeferredNoGap => "deferred_no_gap",
            PlannerStatus::Initiated => "initiated",
            PlannerStatus::Executing => "executing",
            PlannerStatus::Apf => "apf",
            PlannerStatus::Merged => "merged",
        }
    }

    pub fn is_deferred(&self) -> bool {
        matches!(self, PlannerStatus::DeferredTtc | PlannerStatus::DeferredNoGap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Merged,
    Timeout,
    Collision,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Merged => "merged",
            Outcome::Timeout => "timeout",
            Outcome::Collision => "collision",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleRecord {
    pub id: u32,
    pub role: Role,
    pub lane: LaneTag,
    pub state: VehicleState<f64>,
}

/// Grid indices and loss of the candidate being executed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedRef {
    pub m: usize,
    pub n: usize,
    pub u_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// AV first, then traffic by id.
    pub vehicles: Vec<VehicleRecord>,
    pub c_av: f64,
    pub c_vir: f64,
    pub decision: bool,
    pub status: PlannerStatus,
    pub selected: Option<SelectedRef>,
}

impl StepRecord {
    pub fn vehicle(&self, role: Role) -> Option<&VehicleRecord> {
        self.vehicles.iter().find(|v| v.role == role)
    }

    pub fn av(&self) -> &VehicleRecord {
        self.vehicle(Role::Av).expect("every record holds the AV")
    }
}

/// The planning problem and cluster that produced the executed manoeuvre.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRecord {
    pub step: usize,
    pub context: PlanningContext<f64>,
    pub plan: Plan<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub dt: f64,
    pub body_length: f64,
    pub records: Vec<StepRecord>,
    pub outcome: Outcome,
    /// First step with the decision flag raised.
    pub decision_step: Option<usize>,
    /// Step on which the executed candidate was selected.
    pub initiation_step: Option<usize>,
    pub plan: Option<PlanRecord>,
    /// Every cluster evaluated during the episode, in order.
    pub attempts: Vec<PlanRecord>,
    /// Ids of the first colliding pair.
    pub collision: Option<(u32, u32)>,
}

impl SimulationTrace {
    pub fn final_record(&self) -> &StepRecord {
        self.records.last().expect("traces are never empty")
    }

    pub fn duration(&self) -> f64 {
        self.final_record().time
    }
}
