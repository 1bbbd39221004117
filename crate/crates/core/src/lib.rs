//! Ramp-merging simulation kit.
//!
//! An accumulated-discomfort lane-change trigger, a quintic-polynomial
//! sampling planner, HDV traffic, baseline curve generators and metrics.
//! The numeric core is generic over `f32`/`f64`; the simulator runs in `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod decision;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod model;
pub mod planner;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type VehicleParams = model::VehicleParams<f64>;
pub type VehicleState = model::VehicleState<f64>;
pub type IdmParams = model::IdmParams<f64>;
pub type DecisionConfig = decision::DecisionConfig<f64>;
pub type UnsatisfactoryAccumulator = decision::UnsatisfactoryAccumulator<f64>;
pub type LaneChangeTrigger = decision::LaneChangeTrigger<f64>;
pub type SamplingGrid = planner::SamplingGrid<f64>;
pub type LossWeights = planner::LossWeights<f64>;
pub type BoundaryConditions = planner::BoundaryConditions<f64>;
pub type QuinticPolynomial = planner::QuinticPolynomial<f64>;
pub type CandidateTrajectory = planner::CandidateTrajectory<f64>;
pub type PlannerConfig = planner::PlannerConfig<f64>;
pub type PlanningContext = planner::PlanningContext<f64>;
pub type Plan = planner::Plan<f64>;
pub type ApfGains = baselines::ApfGains<f64>;
pub type ParametricCurve = baselines::ParametricCurve<f64>;

pub use decision::TriggerMode;
pub use sim::{run_episode, run_trial, Controller, Outcome, ScenarioConfig, SimulationTrace};
