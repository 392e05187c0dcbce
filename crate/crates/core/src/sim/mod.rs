//! Desk-scale scenarios: walking on the point-mass plant, the planar-arm
//! tracking experiment and a standing planar biped under whole-body control.

mod biped;
mod manipulator;
mod sweep;
mod swing;
mod walk;

pub use biped::{
    fixture_biped_loop, planar_biped_spec, BipedSample, BipedScenario, BipedTrace, TrunkPush,
};
pub use manipulator::{manipulator_tracking, ManipulatorConfig, TrackingResult};
pub use sweep::{compass, push_sweep, run_batch, Exec, PushOutcome};
pub use swing::{retarget, SwingSpline};
pub use walk::{
    plan_ahead, push_delta_v, replan, walk_scenario, ComState, ConstantPolicy, Disturbance, Fall,
    PlanAhead, PlannedStep, ReplanOutcome, ReplanPolicy, Side, StanceFrame, StepPolicy, StepRecord,
    WalkSample, WalkScenario, WalkTrace, REPLAN_HORIZON, SAMPLE_DT,
};

use thiserror::Error;

use crate::spatial::ChainError;
use crate::wblc::WblcError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("fall detected at step {step} (t = {time:.3} s)")]
    FallDetected {
        step: usize,
        time: f64,
        trace: Box<WalkTrace>,
    },
    #[error("replanning failed: {0}")]
    ReplanFailed(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Wblc(#[from] WblcError),
}
