//! Linear inverted pendulum dynamics and the analytic phase-space planner.
//!
//! The CoM is a point mass at constant height `h` over a massless leg, so each
//! horizontal axis obeys `ẍ = ω²(x − p)` with `ω = sqrt(g / h)`. All quantities
//! here are expressed in the local frame of the stance foot. The lateral axis
//! is mirrored so that positive `y` always points towards the side the next
//! foot is placed on; a step therefore flips the lateral sign.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients smaller than this (relative to the state scale) are treated as
/// zero when inverting the closed-form trajectory.
pub const DEGENERATE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LipmError {
    #[error("invalid pendulum parameters: {0}")]
    InvalidParams(&'static str),
    /// The trajectory has no exponentially growing component, or the target is
    /// not on the same branch, so time cannot be recovered from the state.
    #[error("degenerate trajectory: target state is not reachable in time")]
    DegenerateTrajectory,
    #[error("position {0} lies inside the excluded region of the phase parabola")]
    UnreachablePosition(f64),
    #[error("phase parabolas do not intersect with forward velocity")]
    NoIntersection,
    #[error("non-positive timing {0} s")]
    DegenerateTiming(f64),
}

/// Stage of the planner that rejected a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStage {
    SwitchPosition,
    SwitchTime,
    ApexTime,
    LateralPlacement,
    ApexProjection,
}

impl std::fmt::Display for PlanStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PlanStage::SwitchPosition => "switch position",
            PlanStage::SwitchTime => "switch time",
            PlanStage::ApexTime => "apex time",
            PlanStage::LateralPlacement => "lateral placement",
            PlanStage::ApexProjection => "apex projection",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("plan infeasible at {stage}: {cause}")]
pub struct PlanInfeasible {
    pub stage: PlanStage,
    pub cause: LipmError,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LipmSpec {
    height: f64,
    #[serde(default = "default_gravity")]
    gravity: f64,
}

fn default_gravity() -> f64 {
    9.81
}

/// Pendulum height and gravity; `omega` is derived and cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LipmSpec", into = "LipmSpec")]
pub struct LipmParams {
    height: f64,
    gravity: f64,
    omega: f64,
}

impl TryFrom<LipmSpec> for LipmParams {
    type Error = LipmError;
    fn try_from(spec: LipmSpec) -> Result<Self, Self::Error> {
        LipmParams::new(spec.height, spec.gravity)
    }
}

impl From<LipmParams> for LipmSpec {
    fn from(p: LipmParams) -> Self {
        LipmSpec {
            height: p.height,
            gravity: p.gravity,
        }
    }
}

impl Default for LipmParams {
    fn default() -> Self {
        LipmParams::new(1.0, 9.81).expect("default pendulum is valid")
    }
}

impl LipmParams {
    pub fn new(height: f64, gravity: f64) -> Result<Self, LipmError> {
        if !(height.is_finite() && height > 0.0) {
            return Err(LipmError::InvalidParams("height must be positive"));
        }
        if !(gravity.is_finite() && gravity > 0.0) {
            return Err(LipmError::InvalidParams("gravity must be positive"));
        }
        Ok(LipmParams {
            height,
            gravity,
            omega: (gravity / height).sqrt(),
        })
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// Position and velocity along one horizontal axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PendulumState {
    pub x: f64,
    pub xdot: f64,
}

impl PendulumState {
    pub fn new(x: f64, xdot: f64) -> Self {
        PendulumState { x, xdot }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.xdot.is_finite()
    }

    /// `ẋ² − ω²(x − p)²`, constant along any trajectory about pivot `p`.
    pub fn orbital_energy(&self, pivot: f64, params: &LipmParams) -> f64 {
        let w = params.omega;
        self.xdot * self.xdot - w * w * (self.x - pivot) * (self.x - pivot)
    }
}

/// CoM state at the sagittal apex (`x = 0` over the stance foot). This is the
/// learning state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ApexState {
    pub y: f64,
    pub xdot: f64,
    pub ydot: f64,
}

impl ApexState {
    pub fn new(y: f64, xdot: f64, ydot: f64) -> Self {
        ApexState { y, xdot, ydot }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.y, self.xdot, self.ydot]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        ApexState {
            y: a[0],
            xdot: a[1],
            ydot: a[2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.xdot.is_finite() && self.ydot.is_finite()
    }
}

/// Next sagittal foot placement and the apex velocities wanted at the next step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepAction {
    pub p_x: f64,
    pub xdot_apex: f64,
    pub ydot_apex: f64,
}

impl StepAction {
    pub fn new(p_x: f64, xdot_apex: f64, ydot_apex: f64) -> Self {
        StepAction {
            p_x,
            xdot_apex,
            ydot_apex,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.p_x, self.xdot_apex, self.ydot_apex]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        StepAction {
            p_x: a[0],
            xdot_apex: a[1],
            ydot_apex: a[2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p_x.is_finite() && self.xdot_apex.is_finite() && self.ydot_apex.is_finite()
    }
}

/// Output of one planner step. Times are measured from the state the plan was
/// computed from; `next_apex` is expressed in the next stance frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub t_switch: f64,
    pub t_apex: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub switch_state_x: PendulumState,
    pub switch_state_y: PendulumState,
    pub next_apex: ApexState,
}

/// Branch of the phase parabola.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Forward,
    Backward,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Forward => 1.0,
            Branch::Backward => -1.0,
        }
    }
}

fn coefficients(s0: PendulumState, pivot: f64, w: f64) -> (f64, f64) {
    let d = s0.x - pivot;
    let v = s0.xdot / w;
    (0.5 * (d + v), 0.5 * (d - v))
}

/// Closed-form state after `t` seconds (negative `t` propagates backwards).
pub(crate) fn propagate(
    s0: PendulumState,
    pivot: f64,
    t: f64,
    params: &LipmParams,
) -> PendulumState {
    let w = params.omega;
    let (a, b) = coefficients(s0, pivot, w);
    let ep = (w * t).exp();
    let em = (-w * t).exp();
    PendulumState {
        x: a * ep + b * em + pivot,
        xdot: w * (a * ep - b * em),
    }
}

/// CoM state `t ≥ 0` seconds after `s0` for a pendulum pivoted at `p_x`.
pub fn com_state_at(s0: PendulumState, p_x: f64, t: f64, params: &LipmParams) -> PendulumState {
    debug_assert!(t >= 0.0, "com_state_at expects t >= 0");
    propagate(s0, p_x, t, params)
}

/// Time at which the trajectory through `s0` reaches `target`.
pub fn time_to_state(
    s0: PendulumState,
    target: PendulumState,
    p_x: f64,
    params: &LipmParams,
) -> Result<f64, LipmError> {
    let w = params.omega;
    let (a, _) = coefficients(s0, p_x, w);
    let scale = 1.0 + (s0.x - p_x).abs() + (s0.xdot / w).abs();
    if !a.is_finite() || a.abs() <= DEGENERATE_EPS * scale {
        return Err(LipmError::DegenerateTrajectory);
    }
    let arg = (target.x + target.xdot / w - p_x) / (2.0 * a);
    if !(arg.is_finite() && arg > 0.0) {
        return Err(LipmError::DegenerateTrajectory);
    }
    Ok(arg.ln() / w)
}

/// Signed velocity on the phase parabola through `s0` at position `x`.
pub fn velocity_at_position(
    s0: PendulumState,
    x: f64,
    p_x: f64,
    params: &LipmParams,
    branch: Branch,
) -> Result<f64, LipmError> {
    let w2 = params.omega * params.omega;
    let rad = w2 * ((x - p_x).powi(2) - (s0.x - p_x).powi(2)) + s0.xdot * s0.xdot;
    if !rad.is_finite() || rad < 0.0 {
        return Err(LipmError::UnreachablePosition(x));
    }
    Ok(branch.sign() * rad.sqrt())
}

/// Position where the parabola through `s1` (pivot `p_x1`) meets the parabola
/// whose apex speed over pivot `p_x2` is `s2_apex_speed`.
pub fn switching_position(
    s1: PendulumState,
    p_x1: f64,
    s2_apex_speed: f64,
    p_x2: f64,
    params: &LipmParams,
) -> Result<f64, LipmError> {
    let s2 = PendulumState::new(p_x2, s2_apex_speed);
    switching_position_general(s1, p_x1, s2, p_x2, params)
}

/// General form: both parabolas given by an arbitrary state on them.
pub fn switching_position_general(
    s1: PendulumState,
    p_x1: f64,
    s2: PendulumState,
    p_x2: f64,
    params: &LipmParams,
) -> Result<f64, LipmError> {
    let gap = p_x2 - p_x1;
    let scale = 1.0 + p_x1.abs() + p_x2.abs();
    if !gap.is_finite() || gap.abs() <= DEGENERATE_EPS * scale {
        return Err(LipmError::NoIntersection);
    }
    let w2 = params.omega * params.omega;
    let c =
        (s1.x - p_x1).powi(2) - (s2.x - p_x2).powi(2) + (s2.xdot.powi(2) - s1.xdot.powi(2)) / w2;
    let x = 0.5 * (c / gap + (p_x1 + p_x2));
    // Forward walking: the switching velocity must be strictly positive.
    let rad = w2 * ((x - p_x1).powi(2) - (s1.x - p_x1).powi(2)) + s1.xdot * s1.xdot;
    if !(x.is_finite() && rad > 0.0) {
        return Err(LipmError::NoIntersection);
    }
    Ok(x)
}

/// Lateral foot position that brings the lateral velocity to `ydot_target`
/// after `t_apex` seconds, starting from `y_switch`.
pub fn lateral_placement(
    y_switch: PendulumState,
    ydot_target: f64,
    t_apex: f64,
    params: &LipmParams,
) -> Result<f64, LipmError> {
    if !(t_apex.is_finite() && t_apex > 0.0) {
        return Err(LipmError::DegenerateTiming(t_apex));
    }
    let w = params.omega;
    let ep = (w * t_apex).exp();
    let em = (-w * t_apex).exp();
    let c =
        0.5 * w * ((y_switch.x + y_switch.xdot / w) * ep - (y_switch.x - y_switch.xdot / w) * em);
    let d = 0.5 * w * (em - ep);
    if d == 0.0 {
        return Err(LipmError::DegenerateTiming(t_apex));
    }
    Ok((ydot_target - c) / d)
}

/// One planner step from an apex state.
pub fn psp_step(
    apex: ApexState,
    action: StepAction,
    params: &LipmParams,
) -> Result<StepPlan, PlanInfeasible> {
    plan_from_state(
        PendulumState::new(0.0, apex.xdot),
        PendulumState::new(apex.y, apex.ydot),
        action,
        params,
    )
}

/// One planner step from an arbitrary stance-phase state (pivot at the local
/// origin). Used after steering re-projection and replanning, where the CoM is
/// not at the apex.
pub fn plan_from_state(
    sagittal: PendulumState,
    lateral: PendulumState,
    action: StepAction,
    params: &LipmParams,
) -> Result<StepPlan, PlanInfeasible> {
    let fail = |stage| move |cause| PlanInfeasible { stage, cause };

    let x_switch = switching_position(sagittal, 0.0, action.xdot_apex, action.p_x, params)
        .map_err(fail(PlanStage::SwitchPosition))?;
    let v_switch = velocity_at_position(sagittal, x_switch, 0.0, params, Branch::Forward)
        .map_err(fail(PlanStage::SwitchPosition))?;
    let switch_x = PendulumState::new(x_switch, v_switch);

    let t_switch =
        time_to_state(sagittal, switch_x, 0.0, params).map_err(fail(PlanStage::SwitchTime))?;
    if t_switch <= 0.0 {
        return Err(PlanInfeasible {
            stage: PlanStage::SwitchTime,
            cause: LipmError::DegenerateTiming(t_switch),
        });
    }
    let apex_target = PendulumState::new(action.p_x, action.xdot_apex);
    let t_apex = time_to_state(switch_x, apex_target, action.p_x, params)
        .map_err(fail(PlanStage::ApexTime))?;
    if t_apex <= 0.0 {
        return Err(PlanInfeasible {
            stage: PlanStage::ApexTime,
            cause: LipmError::DegenerateTiming(t_apex),
        });
    }

    let switch_y = com_state_at(lateral, 0.0, t_switch, params);
    // The commanded lateral apex velocity lives in the next (mirrored) frame.
    let p_y = lateral_placement(switch_y, -action.ydot_apex, t_apex, params)
        .map_err(fail(PlanStage::LateralPlacement))?;
    let end_y = com_state_at(switch_y, p_y, t_apex, params);

    Ok(StepPlan {
        t_switch,
        t_apex,
        p_x: action.p_x,
        p_y,
        switch_state_x: switch_x,
        switch_state_y: switch_y,
        next_apex: ApexState {
            y: p_y - end_y.x,
            xdot: action.xdot_apex,
            ydot: -end_y.xdot,
        },
    })
}

/// Action that repeats the apex `(y, ẋ, 0)` with lateral foot spacing
/// `step_width`: a symmetric periodic gait.
pub fn symmetric_gait_action(
    apex: ApexState,
    step_width: f64,
    params: &LipmParams,
) -> Result<StepAction, LipmError> {
    if !(apex.y > 0.0 && apex.xdot > 0.0 && step_width > 2.0 * apex.y) {
        return Err(LipmError::InvalidParams(
            "symmetric gait needs 0 < 2y < step width and forward speed",
        ));
    }
    let w = params.omega;
    let half = (step_width / (2.0 * apex.y)).acosh();
    Ok(StepAction::new(
        2.0 * apex.xdot * half.sinh() / w,
        apex.xdot,
        0.0,
    ))
}

/// Apex state of the parabola through a stance-phase state, and the signed
/// time from the current instant to that apex (negative if already past it).
pub fn apex_of(
    sagittal: PendulumState,
    lateral: PendulumState,
    params: &LipmParams,
) -> Result<(ApexState, f64), PlanInfeasible> {
    let fail = PlanInfeasible {
        stage: PlanStage::ApexProjection,
        cause: LipmError::DegenerateTrajectory,
    };
    let energy = sagittal.orbital_energy(0.0, params);
    if !(sagittal.xdot > 0.0 && energy > 0.0) {
        return Err(fail);
    }
    let w = params.omega;
    let (a, b) = coefficients(sagittal, 0.0, w);
    let ratio = -b / a;
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(fail);
    }
    let tau = ratio.ln() / (2.0 * w);
    let lat = propagate(lateral, 0.0, tau, params);
    Ok((
        ApexState {
            y: lat.x,
            xdot: energy.sqrt(),
            ydot: lat.xdot,
        },
        tau,
    ))
}

/// Stance frame in the world: origin at the stance foot, x axis along the
/// walking direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame2D {
    pub origin: [f64; 2],
    heading: f64,
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

impl LocalFrame2D {
    pub fn new(origin: [f64; 2], heading: f64) -> Self {
        LocalFrame2D {
            origin,
            heading: normalize_angle(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn rotated(&self, delta: f64) -> Self {
        LocalFrame2D::new(self.origin, self.heading + delta)
    }

    pub fn point_to_world(&self, local: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        [
            self.origin[0] + c * local[0] - s * local[1],
            self.origin[1] + s * local[0] + c * local[1],
        ]
    }

    pub fn vector_to_world(&self, local: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        [c * local[0] - s * local[1], s * local[0] + c * local[1]]
    }

    pub fn point_to_local(&self, world: [f64; 2]) -> [f64; 2] {
        self.vector_to_local([world[0] - self.origin[0], world[1] - self.origin[1]])
    }

    pub fn vector_to_local(&self, world: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        [c * world[0] + s * world[1], -s * world[0] + c * world[1]]
    }
}

/// Projects a world CoM state into a stance frame (sagittal, lateral).
pub fn reproject_frame(
    position: [f64; 2],
    velocity: [f64; 2],
    frame: &LocalFrame2D,
) -> (PendulumState, PendulumState) {
    let p = frame.point_to_local(position);
    let v = frame.vector_to_local(velocity);
    (
        PendulumState::new(p[0], v[0]),
        PendulumState::new(p[1], v[1]),
    )
}

/// Inverse of [`reproject_frame`].
pub fn frame_to_world(
    sagittal: PendulumState,
    lateral: PendulumState,
    frame: &LocalFrame2D,
) -> ([f64; 2], [f64; 2]) {
    (
        frame.point_to_world([sagittal.x, lateral.x]),
        frame.vector_to_world([sagittal.xdot, lateral.xdot]),
    )
}
