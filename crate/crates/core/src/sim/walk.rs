//! Walking on the point-mass plant: one pendulum per stance, exact closed-form
//! propagation, frame steering at touch-down, velocity-jump pushes and
//! error-triggered replanning.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::learning::StepEnvironment;
use crate::lipm::{
    apex_of, propagate, psp_step, ApexState, LipmParams, LocalFrame2D, PendulumState, StepAction,
    StepPlan,
};
use crate::policy::PolicyNet;

use super::swing::{retarget, SwingSpline};
use super::SimError;

/// Plant sampling period.
pub const SAMPLE_DT: f64 = 1e-3;
/// Steps rolled out by each replan.
pub const REPLAN_HORIZON: usize = 15;

/// Anything that picks a step action at an apex.
pub trait StepPolicy: Sync {
    fn action(&self, apex: &ApexState) -> StepAction;
}

impl StepPolicy for PolicyNet {
    fn action(&self, apex: &ApexState) -> StepAction {
        self.mean_action(apex)
    }
}

/// Same action at every apex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPolicy(pub StepAction);

impl StepPolicy for ConstantPolicy {
    fn action(&self, _apex: &ApexState) -> StepAction {
        self.0
    }
}

/// Instantaneous change of the CoM velocity (world frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub time: f64,
    pub delta_v: [f64; 2],
}

impl Disturbance {
    /// Velocity jump equivalent to a constant force held for `duration` on a
    /// body of `mass`, applied along `direction` (radians, world frame).
    pub fn from_impulse(time: f64, force: f64, duration: f64, mass: f64, direction: f64) -> Self {
        let dv = push_delta_v(force, duration, mass);
        Disturbance {
            time,
            delta_v: [dv * direction.cos(), dv * direction.sin()],
        }
    }
}

pub fn push_delta_v(force: f64, duration: f64, mass: f64) -> f64 {
    force * duration / mass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplanPolicy {
    /// Trigger level on the tracking-error norm (m).
    pub error_threshold: f64,
    /// How long the error must stay above the threshold (s).
    pub persistence: f64,
    /// Weight of the desired state in the blended goal.
    pub blend_gamma: f64,
    /// Weight of the velocity error in the error vector.
    pub velocity_weight: f64,
}

impl Default for ReplanPolicy {
    fn default() -> Self {
        ReplanPolicy {
            error_threshold: 0.05,
            persistence: 0.02,
            blend_gamma: 0.8,
            velocity_weight: 0.5,
        }
    }
}

impl ReplanPolicy {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.error_threshold > 0.0
            && self.persistence >= 0.0
            && (0.0..=1.0).contains(&self.blend_gamma)
            && self.velocity_weight.is_finite()
            && self.velocity_weight >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidScenario(format!(
                "bad replan policy {self:?}"
            )))
        }
    }

    /// 2-norm of `[p_d − p; w (v_d − v)]`.
    pub fn error(&self, current: &ComState, desired: &ComState) -> f64 {
        let mut acc = 0.0;
        for d in 0..2 {
            acc += (desired.position[d] - current.position[d]).powi(2);
            acc += (self.velocity_weight * (desired.velocity[d] - current.velocity[d])).powi(2);
        }
        acc.sqrt()
    }

    /// `γ desired + (1 − γ) current`.
    pub fn blend(&self, current: &ComState, desired: &ComState) -> ComState {
        let g = self.blend_gamma;
        let mix =
            |a: [f64; 2], b: [f64; 2]| [g * b[0] + (1.0 - g) * a[0], g * b[1] + (1.0 - g) * a[1]];
        ComState {
            position: mix(current.position, desired.position),
            velocity: mix(current.velocity, desired.velocity),
        }
    }
}

/// Horizontal CoM position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

/// Stance frame with the lateral axis pointing toward the next foot. `side`
/// is +1 when that is the world-left of the heading, −1 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceFrame {
    pub frame: LocalFrame2D,
    pub side: f64,
}

impl StanceFrame {
    pub fn new(origin: [f64; 2], heading: f64, side: f64) -> Self {
        StanceFrame {
            frame: LocalFrame2D::new(origin, heading),
            side: side.signum(),
        }
    }

    pub fn origin(&self) -> [f64; 2] {
        self.frame.origin
    }

    pub fn heading(&self) -> f64 {
        self.frame.heading()
    }

    pub fn point_to_world(&self, p: [f64; 2]) -> [f64; 2] {
        self.frame.point_to_world([p[0], self.side * p[1]])
    }

    pub fn to_local(&self, s: &ComState) -> (PendulumState, PendulumState) {
        let p = self.frame.point_to_local(s.position);
        let v = self.frame.vector_to_local(s.velocity);
        (
            PendulumState::new(p[0], v[0]),
            PendulumState::new(self.side * p[1], self.side * v[1]),
        )
    }

    pub fn to_world(&self, sag: PendulumState, lat: PendulumState) -> ComState {
        ComState {
            position: self.frame.point_to_world([sag.x, self.side * lat.x]),
            velocity: self.frame.vector_to_world([sag.xdot, self.side * lat.xdot]),
        }
    }

    /// Frame of the next stance: origin at the planned foot, heading turned
    /// by `turn`, lateral axis mirrored.
    pub fn next(&self, p_x: f64, p_y: f64, turn: f64) -> StanceFrame {
        StanceFrame::new(
            self.point_to_world([p_x, p_y]),
            self.heading() + turn,
            -self.side,
        )
    }
}

/// One planned step in a multi-step rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlannedStep {
    /// Apex (or virtual apex) the action was chosen at.
    pub apex: ApexState,
    pub action: StepAction,
    pub plan: StepPlan,
    /// Foot placement, world frame.
    pub foot: [f64; 2],
    /// Touch-down time measured from the start of the rollout.
    pub touchdown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanAhead {
    pub steps: Vec<PlannedStep>,
    /// True when a step came out terminal before the requested count.
    pub terminated: bool,
}

/// First step from an arbitrary stance state: virtual apex, action there,
/// plan. Returns the signed time to that apex alongside.
fn plan_from_stance(
    policy: &dyn StepPolicy,
    env: &StepEnvironment,
    sag: PendulumState,
    lat: PendulumState,
) -> Option<(ApexState, StepAction, StepPlan, f64)> {
    let (apex, tau) = apex_of(sag, lat, &env.lipm).ok()?;
    let action = policy.action(&apex);
    let plan = psp_step(apex, action, &env.lipm).ok()?;
    let ok =
        !env.terminal.is_terminal(&plan) && plan.next_apex.is_finite() && tau + plan.t_switch > 0.0;
    ok.then_some((apex, action, plan, tau))
}

/// Rolls the policy forward `n` steps from a stance state expressed in
/// `frame`, straight ahead.
pub fn plan_ahead(
    policy: &dyn StepPolicy,
    env: &StepEnvironment,
    frame: &StanceFrame,
    sag: PendulumState,
    lat: PendulumState,
    n: usize,
) -> PlanAhead {
    let mut out = PlanAhead {
        steps: Vec::with_capacity(n),
        terminated: false,
    };
    if n == 0 {
        return out;
    }
    let Some((apex, action, plan, tau)) = plan_from_stance(policy, env, sag, lat) else {
        out.terminated = true;
        return out;
    };
    let mut frame = *frame;
    let mut t = tau + plan.t_switch;
    out.steps.push(PlannedStep {
        apex,
        action,
        plan,
        foot: frame.point_to_world([plan.p_x, plan.p_y]),
        touchdown: t,
    });
    let mut last = plan;
    while out.steps.len() < n {
        frame = frame.next(last.p_x, last.p_y, 0.0);
        let apex = last.next_apex;
        let action = policy.action(&apex);
        match psp_step(apex, action, &env.lipm) {
            Ok(plan) if !env.terminal.is_terminal(&plan) && plan.next_apex.is_finite() => {
                t += last.t_apex + plan.t_switch;
                let foot = frame.point_to_world([plan.p_x, plan.p_y]);
                out.steps.push(PlannedStep {
                    apex,
                    action,
                    plan,
                    foot,
                    touchdown: t,
                });
                last = plan;
            }
            _ => {
                out.terminated = true;
                break;
            }
        }
    }
    out
}

/// Result of a replan: the blended goal and the rollout planned from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplanOutcome {
    pub goal: ComState,
    pub rollout: PlanAhead,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Blends the goal state, re-projects it into the stance frame and rolls the
/// policy forward [`REPLAN_HORIZON`] steps.
pub fn replan(
    current: &ComState,
    desired: &ComState,
    frame: &StanceFrame,
    policy: &dyn StepPolicy,
    env: &StepEnvironment,
    rp: &ReplanPolicy,
) -> Result<ReplanOutcome, SimError> {
    let goal = rp.blend(current, desired);
    let (sag, lat) = frame.to_local(&goal);
    let start = Instant::now();
    let rollout = plan_ahead(policy, env, frame, sag, lat, REPLAN_HORIZON);
    let wall_time = start.elapsed();
    if rollout.steps.is_empty() {
        return Err(SimError::ReplanFailed(format!(
            "blended state {goal:?} is terminal under the policy"
        )));
    }
    Ok(ReplanOutcome {
        goal,
        rollout,
        wall_time,
    })
}

/// World side of a foot relative to the heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Left,
    Right,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkScenario {
    /// Initial apex in the first stance frame (foot at the origin, heading 0).
    pub start: ApexState,
    /// Side the first swing foot lands on.
    #[serde(default)]
    pub first_swing: Side,
    pub n_steps: usize,
    /// Heading change applied at each touch-down; missing entries are 0.
    #[serde(default)]
    pub turns: Vec<f64>,
    #[serde(default)]
    pub disturbances: Vec<Disturbance>,
    #[serde(default)]
    pub replan: ReplanPolicy,
    /// Keep the 1 kHz samples (sweeps turn this off).
    #[serde(default = "yes")]
    pub record_samples: bool,
    #[serde(default = "default_swing_height")]
    pub swing_height: f64,
}

fn yes() -> bool {
    true
}

fn default_swing_height() -> f64 {
    0.1
}

impl WalkScenario {
    pub fn straight(start: ApexState, n_steps: usize) -> Self {
        WalkScenario {
            start,
            first_swing: Side::Left,
            n_steps,
            turns: Vec::new(),
            disturbances: Vec::new(),
            replan: ReplanPolicy::default(),
            record_samples: true,
            swing_height: default_swing_height(),
        }
    }

    /// `runs` is a list of `(steps, turn per step)` segments.
    pub fn steering(start: ApexState, runs: &[(usize, f64)]) -> Self {
        let turns: Vec<f64> = runs
            .iter()
            .flat_map(|&(n, a)| std::iter::repeat_n(a, n))
            .collect();
        WalkScenario {
            n_steps: turns.len(),
            turns,
            ..WalkScenario::straight(start, 0)
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.replan.validate()?;
        if !self.start.is_finite() {
            return Err(SimError::InvalidScenario("non-finite start state".into()));
        }
        for d in &self.disturbances {
            if !(d.time.is_finite() && d.time >= 0.0 && d.delta_v.iter().all(|v| v.is_finite())) {
                return Err(SimError::InvalidScenario(format!("bad disturbance {d:?}")));
            }
        }
        if self.turns.iter().any(|t| !t.is_finite()) || !(self.swing_height >= 0.0) {
            return Err(SimError::InvalidScenario(
                "non-finite turn or swing height".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkSample {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    pub y: f64,
    pub ydot: f64,
    pub stance: [f64; 2],
    pub heading: f64,
    /// `;`-separated event names (touchdown, push, replan).
    pub events: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub index: usize,
    pub start_time: f64,
    pub frame: StanceFrame,
    /// (Virtual) apex the step was planned at and the signed time to it.
    pub apex: ApexState,
    pub time_to_apex: f64,
    pub action: StepAction,
    pub plan: StepPlan,
    pub foot: [f64; 2],
    pub touchdown: f64,
    pub replans: usize,
    pub swing: SwingSpline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fall {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkTrace {
    pub steps: Vec<StepRecord>,
    pub samples: Vec<WalkSample>,
    pub fall: Option<Fall>,
    /// Slowest replan rollout, seconds (0 when none ran).
    pub max_replan_time: f64,
}

impl WalkTrace {
    /// Completed steps.
    pub fn survived(&self) -> usize {
        self.steps.len()
    }
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// Stance-local state relative to an anchor time.
#[derive(Debug, Clone, Copy)]
struct Anchor {
    time: f64,
    sag: PendulumState,
    lat: PendulumState,
}

impl Anchor {
    fn at(&self, t: f64, p: &LipmParams) -> (PendulumState, PendulumState) {
        (
            propagate(self.sag, 0.0, t - self.time, p),
            propagate(self.lat, 0.0, t - self.time, p),
        )
    }
}

/// Walks `scenario.n_steps` steps. A fall returns
/// [`SimError::FallDetected`] carrying the partial trace.
pub fn walk_scenario(
    policy: &dyn StepPolicy,
    env: &StepEnvironment,
    scenario: &WalkScenario,
) -> Result<WalkTrace, SimError> {
    scenario.validate()?;
    let p = &env.lipm;
    let rp = &scenario.replan;
    let mut pushes = scenario.disturbances.clone();
    pushes.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next_push = 0;

    let mut trace = WalkTrace {
        steps: Vec::new(),
        samples: Vec::new(),
        fall: None,
        max_replan_time: 0.0,
    };
    let side = scenario.first_swing.sign();
    let mut frame = StanceFrame::new([0.0, 0.0], 0.0, side);
    let start = scenario.start;
    let mut state = frame.to_world(
        PendulumState::new(0.0, start.xdot),
        PendulumState::new(start.y, start.ydot),
    );
    let mut t0 = 0.0;
    let mut n_sample: u64 = 0;
    let mut prev_foot = [0.0, -0.3 * side];

    let fall = |trace: WalkTrace, step: usize, time: f64, reason: String| {
        let mut trace = trace;
        trace.fall = Some(Fall { step, time, reason });
        Err(SimError::FallDetected {
            step,
            time,
            trace: Box::new(trace),
        })
    };

    for k in 0..scenario.n_steps {
        let mut events: Vec<&'static str> = if k > 0 { vec!["touchdown"] } else { Vec::new() };
        // Pushes landing exactly on the touch-down act before planning.
        while next_push < pushes.len() && pushes[next_push].time <= t0 {
            state.velocity = add(state.velocity, pushes[next_push].delta_v);
            next_push += 1;
            events.push("push");
        }
        let (sag, lat) = frame.to_local(&state);
        let Some((apex, action, plan, tau)) = plan_from_stance(policy, env, sag, lat) else {
            return fall(
                trace,
                k,
                t0,
                format!("no viable step from {sag:?}, {lat:?}"),
            );
        };
        let mut foot_local = [plan.p_x, plan.p_y];
        let mut t_end = t0 + tau + plan.t_switch;
        let mut actual = Anchor { time: t0, sag, lat };
        let mut desired = actual;
        let mut swing = SwingSpline::new(
            prev_foot,
            frame.point_to_world(foot_local),
            scenario.swing_height,
            t_end - t0,
        );
        let mut record = StepRecord {
            index: k,
            start_time: t0,
            frame,
            apex,
            time_to_apex: tau,
            action,
            plan,
            foot: frame.point_to_world(foot_local),
            touchdown: t_end,
            replans: 0,
            swing: swing.clone(),
        };
        let mut over_since: Option<f64> = None;

        loop {
            let t = n_sample as f64 * SAMPLE_DT;
            if t >= t_end {
                break;
            }
            while next_push < pushes.len() && pushes[next_push].time <= t {
                let d = pushes[next_push];
                let (s, l) = actual.at(d.time.max(actual.time), p);
                let mut w = frame.to_world(s, l);
                w.velocity = add(w.velocity, d.delta_v);
                let (s, l) = frame.to_local(&w);
                actual = Anchor {
                    time: d.time.max(actual.time),
                    sag: s,
                    lat: l,
                };
                next_push += 1;
                events.push("push");
            }
            let (s, l) = actual.at(t, p);
            let now = frame.to_world(s, l);
            let (ds, dl) = desired.at(t, p);
            let want = frame.to_world(ds, dl);
            if rp.error(&now, &want) > rp.error_threshold {
                let since = *over_since.get_or_insert(t);
                if t - since >= rp.persistence - 1e-12 {
                    let outcome = match replan(&now, &want, &frame, policy, env, rp) {
                        Ok(o) => o,
                        Err(e) => return fall(trace, k, t, e.to_string()),
                    };
                    trace.max_replan_time =
                        trace.max_replan_time.max(outcome.wall_time.as_secs_f64());
                    let first = outcome.rollout.steps[0];
                    let (gs, gl) = frame.to_local(&outcome.goal);
                    desired = Anchor {
                        time: t,
                        sag: gs,
                        lat: gl,
                    };
                    foot_local = [first.plan.p_x, first.plan.p_y];
                    t_end = t + first.touchdown;
                    swing = retarget(&swing, t - t0, frame.point_to_world(foot_local));
                    record.replans += 1;
                    over_since = None;
                    events.push("replan");
                }
            } else {
                over_since = None;
            }
            if scenario.record_samples {
                trace.samples.push(WalkSample {
                    t,
                    x: now.position[0],
                    xdot: now.velocity[0],
                    y: now.position[1],
                    ydot: now.velocity[1],
                    stance: frame.origin(),
                    heading: frame.heading(),
                    events: events.join(";"),
                });
            }
            events.clear();
            n_sample += 1;
        }

        // Touch-down: switch pivot, steer the next frame.
        while next_push < pushes.len() && pushes[next_push].time < t_end {
            let d = pushes[next_push];
            let (s, l) = actual.at(d.time.max(actual.time), p);
            let mut w = frame.to_world(s, l);
            w.velocity = add(w.velocity, d.delta_v);
            let (s, l) = frame.to_local(&w);
            actual = Anchor {
                time: d.time.max(actual.time),
                sag: s,
                lat: l,
            };
            next_push += 1;
        }
        let (s, l) = actual.at(t_end, p);
        state = frame.to_world(s, l);
        record.foot = frame.point_to_world(foot_local);
        record.touchdown = t_end;
        record.swing = swing;
        trace.steps.push(record);
        prev_foot = frame.origin();
        let turn = scenario.turns.get(k).copied().unwrap_or(0.0);
        frame = frame.next(foot_local[0], foot_local[1], turn);
        t0 = t_end;
    }
    Ok(trace)
}
