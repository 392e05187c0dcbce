//! Episodic actor-critic with eligibility traces over the apex-to-apex
//! transition of the phase-space planner.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lipm::{psp_step, ApexState, LipmParams, StepAction, StepPlan};
use crate::policy::{
    ActionSpace, PolicyError, PolicyNet, RbfGrid, SparseFeatures, ValueNet, N_OUTPUTS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearningError {
    #[error("invalid learning configuration: {0}")]
    InvalidConfig(String),
    #[error("weights diverged (non-finite) at iteration {iteration}")]
    DivergenceDetected { iteration: usize },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Box the learning state is sampled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Default for StateBox {
    fn default() -> Self {
        StateBox {
            lo: [-0.14, 0.03, -0.55],
            hi: [0.2, 0.61, 0.55],
        }
    }
}

impl StateBox {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ApexState {
        ApexState::from_array(std::array::from_fn(|a| {
            rng.random_range(self.lo[a]..=self.hi[a])
        }))
    }

    pub fn contains(&self, s: &ApexState) -> bool {
        let v = s.to_array();
        (0..3).all(|a| v[a] >= self.lo[a] && v[a] <= self.hi[a])
    }

    /// `n` points per axis including both bounds.
    pub fn lattice(&self, n: usize) -> Vec<ApexState> {
        let at = |a: usize, i: usize| {
            if n == 1 {
                0.5 * (self.lo[a] + self.hi[a])
            } else {
                self.lo[a] + (self.hi[a] - self.lo[a]) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(ApexState::new(at(0, i), at(1, j), at(2, k)));
                }
            }
        }
        out
    }
}

/// Reward shaping around the nominal gait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    pub nominal_xdot: f64,
    pub nominal_step_width: f64,
    pub step_width_weight: f64,
    pub lateral_velocity_weight: f64,
    pub terminal_reward: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            nominal_xdot: 0.2,
            nominal_step_width: 0.3,
            step_width_weight: 15.0,
            lateral_velocity_weight: 1.0,
            terminal_reward: -5.0,
        }
    }
}

/// Conditions under which a planned step counts as a fall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalSpec {
    pub min_t_apex: f64,
    pub min_t_switch: f64,
    pub step_width_lo: f64,
    pub step_width_hi: f64,
}

impl Default for TerminalSpec {
    fn default() -> Self {
        TerminalSpec {
            min_t_apex: 0.12,
            min_t_switch: 0.12,
            step_width_lo: 0.1,
            step_width_hi: 0.5,
        }
    }
}

impl TerminalSpec {
    pub fn is_terminal(&self, plan: &StepPlan) -> bool {
        !(plan.t_apex > self.min_t_apex
            && plan.t_switch > self.min_t_switch
            && plan.p_y > self.step_width_lo
            && plan.p_y < self.step_width_hi)
    }
}

/// Result of applying one action at an apex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// `None` when the step is terminal.
    pub next: Option<ApexState>,
    pub reward: f64,
    pub plan: Option<StepPlan>,
}

/// Everything that defines the learning problem apart from the learner.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepEnvironment {
    pub lipm: LipmParams,
    pub states: StateBox,
    pub reward: RewardSpec,
    pub terminal: TerminalSpec,
}

impl StepEnvironment {
    pub fn transition(&self, s: &ApexState, a: &StepAction) -> Transition {
        let r = &self.reward;
        match psp_step(*s, *a, &self.lipm) {
            Ok(plan) if !self.terminal.is_terminal(&plan) && plan.next_apex.is_finite() => {
                let n = plan.next_apex;
                let reward = -(r.nominal_xdot - n.xdot).powi(2)
                    - r.step_width_weight * (r.nominal_step_width - plan.p_y).powi(2)
                    - r.lateral_velocity_weight * n.ydot * n.ydot;
                Transition {
                    next: Some(n),
                    reward,
                    plan: Some(plan),
                }
            }
            Ok(plan) => Transition {
                next: None,
                reward: r.terminal_reward,
                plan: Some(plan),
            },
            Err(_) => Transition {
                next: None,
                reward: r.terminal_reward,
                plan: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningConfig {
    /// Actor step size.
    pub alpha: f64,
    /// Critic step size.
    pub beta: f64,
    pub gamma: f64,
    pub lambda_theta: f64,
    pub lambda_w: f64,
    /// Episodes.
    pub max_iterations: usize,
    pub max_episode_steps: usize,
    /// Converged once the mean std over the probe lattice drops below this.
    pub convergence_std: f64,
    /// Points per axis of the convergence probe lattice.
    pub probe_lattice: usize,
    pub probe_every: usize,
    pub survival_every: usize,
    pub survival_probes: usize,
    pub survival_horizon: usize,
    /// Trace entries below this magnitude are dropped.
    pub trace_prune: f64,
    pub seed: u64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            alpha: 5e-3,
            beta: 5e-2,
            gamma: 0.96,
            lambda_theta: 0.5,
            lambda_w: 0.5,
            max_iterations: 60_000,
            max_episode_steps: 500,
            convergence_std: 0.07,
            probe_lattice: 5,
            probe_every: 250,
            survival_every: 1000,
            survival_probes: 50,
            survival_horizon: 100,
            trace_prune: 1e-20,
            seed: 5,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<(), LearningError> {
        let bad = |m: &str| Err(LearningError::InvalidConfig(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha.is_finite())
            || !(self.beta > 0.0 && self.beta.is_finite())
        {
            return bad("step sizes must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda_theta) || !(0.0..=1.0).contains(&self.lambda_w) {
            return bad("trace decays must lie in [0, 1]");
        }
        if self.max_episode_steps == 0
            || self.probe_every == 0
            || self.survival_every == 0
            || self.probe_lattice == 0
        {
            return bad("step and probe counts must be positive");
        }
        if !(self.convergence_std > 0.0) {
            return bad("convergence threshold must be positive");
        }
        Ok(())
    }
}

/// Eligibility trace with `width` entries per feature, touching only features
/// that were active recently.
#[derive(Debug, Clone)]
struct SparseTrace {
    width: usize,
    values: Vec<f64>,
    active: Vec<u32>,
    is_active: Vec<bool>,
}

impl SparseTrace {
    fn new(n_features: usize, width: usize) -> Self {
        SparseTrace {
            width,
            values: vec![0.0; n_features * width],
            active: Vec::new(),
            is_active: vec![false; n_features],
        }
    }

    fn reset(&mut self) {
        for &i in &self.active {
            let i = i as usize;
            self.values[i * self.width..(i + 1) * self.width].fill(0.0);
            self.is_active[i] = false;
        }
        self.active.clear();
    }

    fn decay(&mut self, lambda: f64, prune: f64) {
        let w = self.width;
        let values = &mut self.values;
        let is_active = &mut self.is_active;
        self.active.retain(|&i| {
            let row = &mut values[i as usize * w..(i as usize + 1) * w];
            let mut keep = false;
            for v in row.iter_mut() {
                *v *= lambda;
                keep |= v.abs() >= prune;
            }
            if !keep {
                row.fill(0.0);
                is_active[i as usize] = false;
            }
            keep
        });
    }

    /// `e += scale · φ ⊗ g`.
    fn accumulate(&mut self, f: &SparseFeatures, scale: f64, g: &[f64]) {
        for (&i, &v) in f.indices.iter().zip(&f.values) {
            let iu = i as usize;
            if !self.is_active[iu] {
                self.is_active[iu] = true;
                self.active.push(i);
            }
            let row = &mut self.values[iu * self.width..(iu + 1) * self.width];
            for (r, gj) in row.iter_mut().zip(g) {
                *r += scale * v * gj;
            }
        }
    }

    /// `w += step · e`; false if any touched weight became non-finite.
    fn apply(&self, weights: &mut [f64], step: f64) -> bool {
        let mut ok = true;
        for &i in &self.active {
            let i = i as usize;
            let lo = i * self.width;
            for k in lo..lo + self.width {
                weights[k] += step * self.values[k];
                ok &= weights[k].is_finite();
            }
        }
        ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub iterations: usize,
    pub total_steps: usize,
    pub converged: bool,
    pub final_probe_std: f64,
    pub wall_time_s: f64,
    /// (iteration, mean policy std over the probe lattice)
    pub probe_std_curve: Vec<(usize, f64)>,
    /// (iteration, mean steps survived by the mean policy from fixed probe states)
    pub survival_curve: Vec<(usize, f64)>,
    pub seed: u64,
}

/// Learner state: value and policy approximators plus their traces.
pub struct ActorCritic {
    pub env: StepEnvironment,
    pub config: LearningConfig,
    pub value: ValueNet,
    pub policy: PolicyNet,
    e_w: SparseTrace,
    e_theta: SparseTrace,
    rng: ChaCha8Rng,
    iterations: usize,
    total_steps: usize,
}

impl ActorCritic {
    pub fn new(
        env: StepEnvironment,
        config: LearningConfig,
        grid: RbfGrid,
        actions: ActionSpace,
    ) -> Result<Self, LearningError> {
        config.validate()?;
        let value = ValueNet::zeros(grid.clone())?;
        let policy = PolicyNet::zeros(grid, actions)?;
        Self::from_parts(env, config, value, policy)
    }

    /// Continue training from existing approximators.
    pub fn from_parts(
        env: StepEnvironment,
        config: LearningConfig,
        value: ValueNet,
        policy: PolicyNet,
    ) -> Result<Self, LearningError> {
        config.validate()?;
        if value.grid != policy.grid {
            return Err(LearningError::InvalidConfig(
                "value and policy grids differ".into(),
            ));
        }
        let n = value.grid.dim();
        Ok(ActorCritic {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            env,
            config,
            value,
            policy,
            e_w: SparseTrace::new(n, 1),
            e_theta: SparseTrace::new(n, N_OUTPUTS),
            iterations: 0,
            total_steps: 0,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// One episode from a uniformly sampled start state; returns its length.
    pub fn run_episode(&mut self) -> Result<usize, LearningError> {
        let s0 = self.env.states.sample(&mut self.rng);
        self.run_episode_from(s0)
    }

    pub fn run_episode_from(&mut self, s0: ApexState) -> Result<usize, LearningError> {
        let cfg = &self.config;
        self.e_w.reset();
        self.e_theta.reset();
        let mut discount = 1.0;
        let mut s = s0;
        let mut f = self.policy.grid.sparse_features(&s);
        let mut steps = 0;
        let diverged = LearningError::DivergenceDetected {
            iteration: self.iterations,
        };
        while steps < cfg.max_episode_steps {
            let action = self.policy.distribution_with(&f).sample(&mut self.rng);
            let tr = self.env.transition(&s, &action);
            let v_s = self.value.value_with(&f);
            let next_f = tr.next.map(|n| self.policy.grid.sparse_features(&n));
            let v_next = next_f.as_ref().map_or(0.0, |nf| self.value.value_with(nf));
            let delta = tr.reward + cfg.gamma * v_next - v_s;
            if !delta.is_finite() {
                return Err(diverged);
            }
            let g = self.policy.output_grad(&f, &action)?;

            self.e_w.decay(cfg.lambda_w, cfg.trace_prune);
            self.e_w.accumulate(&f, discount, &[1.0]);
            self.e_theta.decay(cfg.lambda_theta, cfg.trace_prune);
            self.e_theta.accumulate(&f, discount, &g);
            let ok_w = self.e_w.apply(&mut self.value.weights, cfg.beta * delta);
            let ok_t = self
                .e_theta
                .apply(&mut self.policy.theta, cfg.alpha * delta);
            if !(ok_w && ok_t) {
                return Err(diverged);
            }
            discount *= cfg.gamma;
            steps += 1;
            match (tr.next, next_f) {
                (Some(n), Some(nf)) => {
                    s = n;
                    f = nf;
                }
                _ => break,
            }
        }
        self.iterations += 1;
        self.total_steps += steps;
        Ok(steps)
    }

    /// Mean policy std over the probe lattice.
    pub fn probe_std(&self) -> f64 {
        let pts = self.env.states.lattice(self.config.probe_lattice);
        pts.iter()
            .map(|s| self.policy.distribution(s).mean_std())
            .sum::<f64>()
            / pts.len() as f64
    }

    fn survival_probes(&self) -> Vec<ApexState> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x5eed_5eed_5eed_5eed);
        (0..self.config.survival_probes)
            .map(|_| self.env.states.sample(&mut rng))
            .collect()
    }

    fn mean_survival(&self, probes: &[ApexState]) -> f64 {
        if probes.is_empty() {
            return 0.0;
        }
        let h = self.config.survival_horizon;
        let total: usize = probes
            .iter()
            .map(|s| evaluate_policy(&self.policy, &self.env, *s, h).survived)
            .sum();
        total as f64 / probes.len() as f64
    }

    /// Runs episodes until convergence or the iteration budget.
    pub fn train(&mut self) -> Result<TrainingReport, LearningError> {
        let start = Instant::now();
        let probes = self.survival_probes();
        let mut report = TrainingReport {
            iterations: 0,
            total_steps: 0,
            converged: false,
            final_probe_std: self.probe_std(),
            wall_time_s: 0.0,
            probe_std_curve: vec![(self.iterations, self.probe_std())],
            survival_curve: vec![(self.iterations, self.mean_survival(&probes))],
            seed: self.config.seed,
        };
        while self.iterations < self.config.max_iterations {
            self.run_episode()?;
            let it = self.iterations;
            if it % self.config.survival_every == 0 {
                report
                    .survival_curve
                    .push((it, self.mean_survival(&probes)));
            }
            if it % self.config.probe_every == 0 {
                let std = self.probe_std();
                report.probe_std_curve.push((it, std));
                if std < self.config.convergence_std {
                    report.converged = true;
                    break;
                }
            }
        }
        if self
            .value
            .weights
            .iter()
            .chain(&self.policy.theta)
            .any(|w| !w.is_finite())
        {
            return Err(LearningError::DivergenceDetected {
                iteration: self.iterations,
            });
        }
        report.iterations = self.iterations;
        report.total_steps = self.total_steps;
        report.final_probe_std = self.probe_std();
        report.converged |= report.final_probe_std < self.config.convergence_std;
        report.wall_time_s = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

/// Convenience wrapper: train from zero weights.
pub fn train(
    env: &StepEnvironment,
    config: &LearningConfig,
    grid: RbfGrid,
    actions: ActionSpace,
) -> Result<(ValueNet, PolicyNet, TrainingReport), LearningError> {
    let mut ac = ActorCritic::new(env.clone(), config.clone(), grid, actions)?;
    let report = ac.train()?;
    Ok((ac.value, ac.policy, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    pub state: ApexState,
    pub action: StepAction,
    pub reward: f64,
    pub plan: Option<StepPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub steps: Vec<RolloutStep>,
    /// Non-terminal steps taken.
    pub survived: usize,
    pub terminated: bool,
}

/// Greedy rollout using the policy means.
pub fn evaluate_policy(
    policy: &PolicyNet,
    env: &StepEnvironment,
    s0: ApexState,
    n_steps: usize,
) -> Rollout {
    let mut out = Rollout {
        steps: Vec::with_capacity(n_steps),
        survived: 0,
        terminated: false,
    };
    let mut s = s0;
    for _ in 0..n_steps {
        let action = policy.mean_action(&s);
        let tr = env.transition(&s, &action);
        out.steps.push(RolloutStep {
            state: s,
            action,
            reward: tr.reward,
            plan: tr.plan,
        });
        match tr.next {
            Some(n) => {
                out.survived += 1;
                s = n;
            }
            None => {
                out.terminated = true;
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grid() -> RbfGrid {
        RbfGrid {
            lo: [-0.14, 0.03, -0.55],
            counts: [3, 4, 5],
            spacing: [0.17, 0.19, 0.275],
            widths: [0.17, 0.19, 0.275],
            cutoff: 3.0,
        }
    }

    /// Straight-line dense implementation of the episodic update used as the
    /// oracle for the sparse trainer.
    struct DenseReference {
        w: Vec<f64>,
        theta: Vec<f64>,
    }

    impl DenseReference {
        fn episode(
            &mut self,
            grid: &RbfGrid,
            actions: &ActionSpace,
            env: &StepEnvironment,
            cfg: &LearningConfig,
            rng: &mut ChaCha8Rng,
        ) {
            let n = grid.dim();
            let mut ew = vec![0.0; n];
            let mut et = vec![0.0; n * N_OUTPUTS];
            let mut discount = 1.0;
            let mut s = env.states.sample(rng);
            for _ in 0..cfg.max_episode_steps {
                let pol = PolicyNet::from_theta(grid.clone(), actions.clone(), self.theta.clone())
                    .unwrap();
                let a = pol.sample(&s, rng);
                let tr = env.transition(&s, &a);
                let phi = grid.features(&s);
                let v = |x: &[f64]| x.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>();
                let v_next = tr.next.map_or(0.0, |n| v(&grid.features(&n)));
                let delta = tr.reward + cfg.gamma * v_next - v(&phi);
                let grad = pol.log_prob_grad(&s, &a).unwrap();
                for i in 0..n {
                    ew[i] = cfg.lambda_w * ew[i] + discount * phi[i];
                }
                for k in 0..n * N_OUTPUTS {
                    et[k] = cfg.lambda_theta * et[k] + discount * grad[k];
                }
                for i in 0..n {
                    self.w[i] += cfg.beta * delta * ew[i];
                }
                for k in 0..n * N_OUTPUTS {
                    self.theta[k] += cfg.alpha * delta * et[k];
                }
                discount *= cfg.gamma;
                match tr.next {
                    Some(nx) => s = nx,
                    None => break,
                }
            }
        }
    }

    fn compare_with_reference(lambda: f64) {
        let grid = tiny_grid();
        // Dense reference uses every feature; the sparse cutoff must not drop any.
        let grid = RbfGrid {
            cutoff: 1e3,
            ..grid
        };
        let actions = ActionSpace::default();
        let env = StepEnvironment::default();
        let cfg = LearningConfig {
            alpha: 0.05,
            beta: 0.1,
            lambda_theta: lambda,
            lambda_w: lambda,
            max_episode_steps: 30,
            trace_prune: 0.0,
            seed: 3,
            ..LearningConfig::default()
        };
        let mut ac =
            ActorCritic::new(env.clone(), cfg.clone(), grid.clone(), actions.clone()).unwrap();
        let mut reference = DenseReference {
            w: vec![0.0; grid.dim()],
            theta: vec![0.0; grid.dim() * N_OUTPUTS],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..20 {
            ac.run_episode().unwrap();
            reference.episode(&grid, &actions, &env, &cfg, &mut rng);
        }
        let dw = ac
            .value
            .weights
            .iter()
            .zip(&reference.w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dt = ac
            .policy
            .theta
            .iter()
            .zip(&reference.theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dw < 1e-9 && dt < 1e-9, "lambda {lambda}: dw {dw} dt {dt}");
        assert!(ac.value.weights.iter().any(|&w| w != 0.0));
    }

    #[test]
    fn sparse_trainer_matches_dense_reference() {
        compare_with_reference(0.5);
    }

    #[test]
    fn zero_lambda_is_one_step_actor_critic() {
        compare_with_reference(0.0);
    }

    #[test]
    fn single_step_hand_trace() {
        // One terminal step from zero weights: δ = R, w += β R φ.
        let grid = RbfGrid {
            cutoff: 1e3,
            ..tiny_grid()
        };
        let env = StepEnvironment::default();
        let cfg = LearningConfig {
            beta: 0.5,
            max_episode_steps: 1,
            ..LearningConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut ac =
            ActorCritic::new(env.clone(), cfg, grid.clone(), ActionSpace::default()).unwrap();
        let s = ApexState::new(0.05, 0.2, 0.0);
        let a = ac.policy.sample(&s, &mut rng);
        let tr = env.transition(&s, &a);
        ac.run_episode_from(s).unwrap();
        let phi = grid.features(&s);
        for (w, p) in ac.value.weights.iter().zip(&phi) {
            assert!((w - 0.5 * tr.reward * p).abs() < 1e-12);
        }
    }

    #[test]
    fn terminal_reward_and_predicates() {
        let env = StepEnvironment::default();
        // Nearly stalled and stepping far ahead: no feasible switch.
        let tr = env.transition(
            &ApexState::new(0.0, 0.03, 0.0),
            &StepAction::new(0.5, 0.37, 0.0),
        );
        assert!(tr.next.is_none());
        assert_eq!(tr.reward, -5.0);
    }

    #[test]
    fn nominal_step_reward_is_near_zero() {
        let env = StepEnvironment::default();
        let action =
            crate::lipm::symmetric_gait_action(ApexState::new(0.056, 0.2, 0.0), 0.3, &env.lipm)
                .unwrap();
        let tr = env.transition(&ApexState::new(0.056, 0.2, 0.0), &action);
        assert!(tr.next.is_some());
        assert!(tr.reward.abs() < 1e-9, "{}", tr.reward);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = LearningConfig {
            gamma: 1.5,
            ..LearningConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(LearningError::InvalidConfig(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let grid = tiny_grid();
        let cfg = LearningConfig {
            beta: 1e300,
            alpha: 1e300,
            max_episode_steps: 50,
            ..LearningConfig::default()
        };
        let mut ac = ActorCritic::new(
            StepEnvironment::default(),
            cfg,
            grid,
            ActionSpace::default(),
        )
        .unwrap();
        let mut res = Ok(0);
        for _ in 0..50 {
            res = ac.run_episode();
            if res.is_err() {
                break;
            }
        }
        assert!(matches!(res, Err(LearningError::DivergenceDetected { .. })));
    }

    #[test]
    fn training_is_deterministic_under_seed() {
        let cfg = LearningConfig {
            max_iterations: 30,
            seed: 9,
            ..LearningConfig::default()
        };
        let env = StepEnvironment::default();
        let (v1, p1, r1) = train(&env, &cfg, tiny_grid(), ActionSpace::default()).unwrap();
        let (v2, p2, r2) = train(&env, &cfg, tiny_grid(), ActionSpace::default()).unwrap();
        assert_eq!(v1.weights, v2.weights);
        assert_eq!(p1.theta, p2.theta);
        assert_eq!(r1.total_steps, r2.total_steps);
    }

    #[test]
    fn lattice_covers_bounds() {
        let b = StateBox::default();
        let l = b.lattice(5);
        assert_eq!(l.len(), 125);
        assert_eq!(l[0].to_array(), b.lo);
        assert_eq!(l[124].to_array(), b.hi);
    }
}
