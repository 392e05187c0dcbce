//! Operational-space tracking on a three-link planar arm in a vertical plane,
//! with and without the `J̇ q̇` drift term.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::spatial::{planar_arm_spec, KinematicChain};
use crate::wblc::{pinv, resolve_hierarchy, Task, TaskHierarchy, DEFAULT_RANK_TOL};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManipulatorConfig {
    pub lengths: [f64; 3],
    pub masses: [f64; 3],
    /// Fixed horizontal coordinate of the line (m).
    pub line_x: f64,
    /// Vertical amplitude (m) and frequency (Hz) of the reference.
    pub amplitude: f64,
    pub frequency: f64,
    pub kp: f64,
    pub kd: f64,
    pub posture_kp: f64,
    pub posture_kd: f64,
    pub gravity: f64,
    pub duration: f64,
    pub control_dt: f64,
    pub plant_dt: f64,
}

impl Default for ManipulatorConfig {
    fn default() -> Self {
        ManipulatorConfig {
            lengths: [0.4, 0.35, 0.25],
            masses: [2.0, 1.5, 1.0],
            line_x: 0.62,
            amplitude: 0.23,
            frequency: 2.0,
            kp: 100.0,
            kd: 20.0,
            posture_kp: 25.0,
            posture_kd: 10.0,
            gravity: 9.81,
            duration: 2.0,
            control_dt: 1e-3,
            plant_dt: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingResult {
    pub use_jdot: bool,
    pub times: Vec<f64>,
    /// Norm of the end-point position error at each control tick.
    pub errors: Vec<f64>,
    pub rms: f64,
    pub max: f64,
}

struct Arm {
    chain: KinematicChain,
    tip: Vector3<f64>,
    gravity: Vector3<f64>,
}

impl Arm {
    fn new(cfg: &ManipulatorConfig) -> Result<Self, SimError> {
        let chain = KinematicChain::from_spec(&planar_arm_spec(&cfg.lengths, &cfg.masses))?;
        Ok(Arm {
            chain,
            tip: Vector3::new(cfg.lengths[2], 0.0, 0.0),
            gravity: Vector3::new(0.0, -cfg.gravity, 0.0),
        })
    }

    fn tip(&self, q: &DVector<f64>) -> Result<[f64; 2], SimError> {
        let p = self.chain.point_position(q, 2, &self.tip)?;
        Ok([p.x, p.y])
    }

    /// Planar rows (x, y) of the tip's linear Jacobian.
    fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>, SimError> {
        Ok(self
            .chain
            .point_jacobian(q, 2, &self.tip)?
            .rows(3, 2)
            .into_owned())
    }

    fn jdot_qdot(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>, SimError> {
        let jd = self.chain.point_jacobian_dot(q, qd, 2, &self.tip)?;
        Ok((jd * qd).rows(3, 2).into_owned())
    }

    fn accel(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        tau: &DVector<f64>,
    ) -> Result<DVector<f64>, SimError> {
        Ok(self.chain.forward_dynamics(q, qd, tau, &self.gravity)?)
    }

    /// Damped Newton inverse kinematics from `guess`.
    fn solve_ik(&self, target: [f64; 2], guess: DVector<f64>) -> Result<DVector<f64>, SimError> {
        let mut q = guess;
        for _ in 0..100 {
            let p = self.tip(&q)?;
            let e = DVector::from_vec(vec![target[0] - p[0], target[1] - p[1]]);
            if e.norm() < 1e-14 {
                break;
            }
            q += pinv(&self.jacobian(&q)?, DEFAULT_RANK_TOL) * e;
        }
        Ok(q)
    }
}

fn reference(cfg: &ManipulatorConfig, t: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let w = 2.0 * std::f64::consts::PI * cfg.frequency;
    let a = cfg.amplitude;
    (
        [cfg.line_x, a * (w * t).sin()],
        [0.0, a * w * (w * t).cos()],
        [0.0, -a * w * w * (w * t).sin()],
    )
}

/// Runs the tracking experiment. Control runs every `control_dt` with the
/// torque held while the plant is RK4-integrated at `plant_dt`.
pub fn manipulator_tracking(
    cfg: &ManipulatorConfig,
    use_jdot: bool,
) -> Result<TrackingResult, SimError> {
    let arm = Arm::new(cfg)?;
    let substeps = (cfg.control_dt / cfg.plant_dt).round().max(1.0) as usize;
    let h = cfg.control_dt / substeps as f64;
    let n_ticks = (cfg.duration / cfg.control_dt).round() as usize;

    let (x0, v0, _) = reference(cfg, 0.0);
    let mut q = arm.solve_ik(x0, DVector::from_vec(vec![-0.3, 1.2, 0.9]))?;
    let posture = q.clone();
    let mut qd = pinv(&arm.jacobian(&q)?, DEFAULT_RANK_TOL) * DVector::from_vec(v0.to_vec());

    let mut out = TrackingResult {
        use_jdot,
        times: Vec::with_capacity(n_ticks),
        errors: Vec::with_capacity(n_ticks),
        rms: 0.0,
        max: 0.0,
    };
    for tick in 0..n_ticks {
        let t = tick as f64 * cfg.control_dt;
        let (xd, vd, ad) = reference(cfg, t);
        let p = arm.tip(&q)?;
        let j = arm.jacobian(&q)?;
        let v = &j * &qd;
        let err = [xd[0] - p[0], xd[1] - p[1]];
        out.times.push(t);
        out.errors.push(err[0].hypot(err[1]));

        let dyn_ = arm.chain.joint_space_dynamics(&q, &qd, &arm.gravity)?;
        let target = DVector::from_fn(2, |r, _| ad[r] + cfg.kp * err[r] + cfg.kd * (vd[r] - v[r]));
        let drift = if use_jdot {
            arm.jdot_qdot(&q, &qd)?
        } else {
            DVector::zeros(2)
        };
        let hold = cfg.posture_kp * (&posture - &q) - cfg.posture_kd * &qd;
        let tasks = TaskHierarchy::new(vec![
            Task::new("tip", j, drift, target)?,
            Task::new("posture", DMatrix::identity(3, 3), DVector::zeros(3), hold)?,
        ])?;
        let sol = resolve_hierarchy(&tasks, &dyn_.mass)?;
        let tau = &dyn_.mass * &sol.qdd + &dyn_.bias + &dyn_.gravity;

        for _ in 0..substeps {
            let k1v = arm.accel(&q, &qd, &tau)?;
            let k1q = qd.clone();
            let (q2, v2) = (&q + &k1q * (h / 2.0), &qd + &k1v * (h / 2.0));
            let k2v = arm.accel(&q2, &v2, &tau)?;
            let (q3, v3) = (&q + &v2 * (h / 2.0), &qd + &k2v * (h / 2.0));
            let k3v = arm.accel(&q3, &v3, &tau)?;
            let (q4, v4) = (&q + &v3 * h, &qd + &k3v * h);
            let k4v = arm.accel(&q4, &v4, &tau)?;
            q += (k1q + &v2 * 2.0 + &v3 * 2.0 + v4) * (h / 6.0);
            qd += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        }
    }
    let n = out.errors.len().max(1) as f64;
    out.rms = (out.errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    out.max = out.errors.iter().copied().fold(0.0, f64::max);
    Ok(out)
}
