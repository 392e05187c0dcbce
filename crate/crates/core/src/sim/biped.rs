//! Planar five-link biped standing in double support, driven by the
//! whole-body controller: contact constraints first, then the centroidal task
//! built from the contact-force QP.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::spatial::{
    BaseKind, ChainSpec, JointKind, JointSpec, KinematicChain, LinkSpec, OriginSpec,
};
use crate::wblc::{
    cm_task_from_forces, pinv, reaction_force_qp, resolve_hierarchy, torque_solve, ContactPoint,
    ContactSet, ForceQpSettings, Task, TaskHierarchy, WblcError, DEFAULT_RANK_TOL,
};

use super::SimError;

const THIGH: f64 = 0.4;
const SHIN: f64 = 0.4;
/// Rows of a point Jacobian (`[ω; v]`) that move in the sagittal plane:
/// linear x and z.
const PLANE_ROWS: [usize; 2] = [3, 5];
/// Centroidal rows that move in the plane: angular y, linear x, linear z.
const CM_ROWS: [usize; 3] = [1, 3, 5];

/// Trunk plus two legs of thigh and shin, hinged about the world y axis, on a
/// planar (x, z, pitch) base.
pub fn planar_biped_spec() -> ChainSpec {
    let hinge = Some(JointSpec {
        kind: JointKind::Revolute,
        axis: [0.0, 1.0, 0.0],
    });
    let rod = |name: &str, parent: usize, offset: f64, mass: f64, len: f64| LinkSpec {
        name: name.into(),
        parent: Some(parent),
        joint: hinge,
        origin: OriginSpec {
            xyz: [0.0, 0.0, offset],
            rpy: [0.0; 3],
        },
        mass,
        com: [0.0, 0.0, -len / 2.0],
        inertia: [
            [mass * len * len / 12.0, 0.0, 0.0],
            [0.0, mass * len * len / 12.0, 0.0],
            [0.0, 0.0, 1e-3 * mass],
        ],
    };
    ChainSpec {
        base: BaseKind::Planar,
        links: vec![
            LinkSpec {
                name: "trunk".into(),
                parent: None,
                joint: None,
                origin: OriginSpec::default(),
                mass: 20.0,
                com: [0.0, 0.0, 0.25],
                inertia: [[0.6, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.2]],
            },
            rod("thigh_left", 0, 0.0, 4.0, THIGH),
            rod("shin_left", 1, -THIGH, 2.5, SHIN),
            rod("thigh_right", 0, 0.0, 4.0, THIGH),
            rod("shin_right", 3, -THIGH, 2.5, SHIN),
        ],
    }
}

/// Horizontal force on the trunk over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrunkPush {
    pub start: f64,
    pub duration: f64,
    /// World (x, z) force, N.
    pub force: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BipedScenario {
    pub duration: f64,
    /// CoM setpoint relative to the initial CoM, (x, z).
    pub com_offset: [f64; 2],
    pub push: Option<TrunkPush>,
    pub gravity: f64,
    pub stance_width: f64,
    pub hip_height: f64,
    pub mu: f64,
    pub com_kp: f64,
    pub com_kd: f64,
    pub pitch_kp: f64,
    pub pitch_kd: f64,
    pub qp: ForceQpSettings,
    pub control_dt: f64,
    pub plant_dt: f64,
    /// Constraint stabilization rate of the plant's contact model (1/s).
    pub contact_stiffness: f64,
}

impl Default for BipedScenario {
    fn default() -> Self {
        BipedScenario {
            duration: 1.5,
            com_offset: [0.0, 0.0],
            push: None,
            gravity: 9.81,
            stance_width: 0.3,
            hip_height: 0.7,
            mu: 0.65,
            com_kp: 100.0,
            com_kd: 20.0,
            pitch_kp: 100.0,
            pitch_kd: 20.0,
            qp: ForceQpSettings::default(),
            control_dt: 1e-3,
            plant_dt: 1e-4,
            contact_stiffness: 50.0,
        }
    }
}

/// One control tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipedSample {
    pub t: f64,
    pub com: [f64; 2],
    /// Distance from the CoM to its setpoint.
    pub com_residual: f64,
    /// Norm of each task's acceleration residual, highest priority first.
    pub task_residuals: Vec<f64>,
    /// Ground-on-robot (x, z) force at the left and right foot.
    pub forces: [[f64; 2]; 2],
    pub relaxed_mu_used: bool,
    pub torques: Vec<f64>,
    /// Unmet part of the equation of motion in the torque solve.
    pub torque_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipedTrace {
    pub samples: Vec<BipedSample>,
    /// Total time the relaxed friction coefficient was in use.
    pub relaxed_time: f64,
}

impl BipedTrace {
    /// Largest CoM residual at or after time `t`.
    pub fn max_com_residual_after(&self, t: f64) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.t >= t)
            .map(|s| s.com_residual)
            .fold(0.0, f64::max)
    }
}

struct Biped {
    chain: KinematicChain,
    feet: [usize; 2],
    trunk: usize,
    sole: Vector3<f64>,
    gravity: Vector3<f64>,
}

impl Biped {
    fn new(gravity: f64) -> Result<Self, SimError> {
        let chain = KinematicChain::from_spec(&planar_biped_spec())?;
        let feet = [chain.link("shin_left")?, chain.link("shin_right")?];
        let trunk = chain.link("trunk")?;
        Ok(Biped {
            chain,
            feet,
            trunk,
            sole: Vector3::new(0.0, 0.0, -SHIN),
            gravity: Vector3::new(0.0, 0.0, -gravity),
        })
    }

    fn foot(&self, q: &DVector<f64>, i: usize) -> Result<Vector3<f64>, SimError> {
        Ok(self.chain.point_position(q, self.feet[i], &self.sole)?)
    }

    /// In-plane contact Jacobian (4 × dof) and its drift.
    fn contact_rows(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DVector<f64>), SimError> {
        let n = self.chain.dof();
        let mut j = DMatrix::zeros(4, n);
        let mut drift = DVector::zeros(4);
        for i in 0..2 {
            let ji = self.chain.point_jacobian(q, self.feet[i], &self.sole)?;
            let di = self
                .chain
                .point_jacobian_dot(q, qd, self.feet[i], &self.sole)?
                * qd;
            for (r, &row) in PLANE_ROWS.iter().enumerate() {
                j.row_mut(2 * i + r).copy_from(&ji.row(row));
                drift[2 * i + r] = di[row];
            }
        }
        Ok((j, drift))
    }

    /// Standing configuration with the hips at `(0, height)`, feet at
    /// `±width/2` on the ground and knees bent forward.
    fn stance(&self, width: f64, height: f64) -> Result<DVector<f64>, SimError> {
        let mut q = DVector::from_vec(vec![0.0, height, 0.0, -0.4, 0.8, -0.4, 0.8]);
        let targets = [[-width / 2.0, 0.0], [width / 2.0, 0.0]];
        for _ in 0..100 {
            let mut e = DVector::zeros(4);
            let mut jac = DMatrix::zeros(4, 4);
            for i in 0..2 {
                let p = self.foot(&q, i)?;
                e[2 * i] = targets[i][0] - p.x;
                e[2 * i + 1] = targets[i][1] - p.z;
                let ji = self.chain.point_jacobian(&q, self.feet[i], &self.sole)?;
                for (r, &row) in PLANE_ROWS.iter().enumerate() {
                    for c in 0..4 {
                        jac[(2 * i + r, c)] = ji[(row, 3 + c)];
                    }
                }
            }
            if e.norm() < 1e-14 {
                break;
            }
            let dq = pinv(&jac, DEFAULT_RANK_TOL) * e;
            for c in 0..4 {
                q[3 + c] += dq[c];
            }
        }
        Ok(q)
    }
}

/// Runs the standing controller at `control_dt` against a constrained plant
/// integrated with RK4 at `plant_dt`.
pub fn fixture_biped_loop(sc: &BipedScenario) -> Result<BipedTrace, SimError> {
    let robot = Biped::new(sc.gravity)?;
    let n = robot.chain.dof();
    let mut q = robot.stance(sc.stance_width, sc.hip_height)?;
    let mut qd = DVector::zeros(n);
    let anchors = [robot.foot(&q, 0)?, robot.foot(&q, 1)?];
    let com0 = robot.chain.center_of_mass(&q)?;
    let setpoint = [com0.x + sc.com_offset[0], com0.z + sc.com_offset[1]];
    let pitch0 = q[2];
    let selection = robot.chain.selection();
    let weight = DMatrix::identity(6, 6) * sc.qp.force_weight;
    let substeps = (sc.control_dt / sc.plant_dt).round().max(1.0) as usize;
    let h = sc.control_dt / substeps as f64;
    let n_ticks = (sc.duration / sc.control_dt).round() as usize;
    let mass = robot.chain.total_mass();

    let mut trace = BipedTrace {
        samples: Vec::with_capacity(n_ticks),
        relaxed_time: 0.0,
    };
    for tick in 0..n_ticks {
        let t = tick as f64 * sc.control_dt;
        let dynamics = robot.chain.joint_space_dynamics(&q, &qd, &robot.gravity)?;
        let feet = [robot.foot(&q, 0)?, robot.foot(&q, 1)?];
        let model = robot.chain.centroidal(&q, &qd, &feet)?;
        let com_vel = model.momentum.fixed_rows::<3>(3) / mass;

        // Centroidal command: PD on the CoM, PD on trunk pitch through the
        // angular momentum rate.
        let acc_x = sc.com_kp * (setpoint[0] - model.com.x) - sc.com_kd * com_vel.x;
        let acc_z = sc.com_kp * (setpoint[1] - model.com.z) - sc.com_kd * com_vel.z;
        let f_lin = mass * (Vector3::new(acc_x, 0.0, acc_z) - robot.gravity);
        let pitch_acc = sc.pitch_kp * (pitch0 - q[2]) - sc.pitch_kd * qd[2];
        let f_ang = Vector3::new(0.0, model.i_cm[(1, 1)] * pitch_acc, 0.0);

        let mut points = Vec::with_capacity(2);
        for (i, p) in feet.iter().enumerate() {
            let jac = robot
                .chain
                .point_jacobian_linear(&q, robot.feet[i], &robot.sole)?;
            points.push(ContactPoint {
                position: *p,
                jacobian: jac,
                mu: sc.mu,
            });
        }
        let contacts = ContactSet::new(points)?;
        let sol = reaction_force_qp(&model, &contacts, &f_lin, &f_ang, &weight, &sc.qp)?;
        let cm_acc = cm_task_from_forces(&sol, &model, &f_lin, &robot.gravity)?;

        let inv = model.i_cm.try_inverse().ok_or(WblcError::SingularInertia)?;
        let inv = DMatrix::from_iterator(6, 6, inv.iter().copied());
        let cm_jac = &inv * &model.j_cm;
        let jdq = robot.chain.cm_jacobian_dot_qdot(&q, &qd)?;
        let cm_drift = &inv * DVector::from_iterator(6, jdq.iter().copied());
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(3, m.ncols(), |r, c| m[(CM_ROWS[r], c)]);
        let (cj, cd) = (
            pick(&cm_jac),
            DVector::from_fn(3, |r, _| cm_drift[CM_ROWS[r]]),
        );
        let ca = DVector::from_fn(3, |r, _| cm_acc[CM_ROWS[r]]);

        let (jc, jc_drift) = robot.contact_rows(&q, &qd)?;
        let tasks = TaskHierarchy::new(vec![
            Task::new("contacts", jc, jc_drift, DVector::zeros(4))?,
            Task::new("centroidal", cj, cd, ca)?,
        ])?;
        let res = resolve_hierarchy(&tasks, &dynamics.mass)?;
        let jr = contacts.stacked_jacobian(n);
        let forces = sol.stacked();
        let torque = torque_solve(
            &dynamics,
            &selection,
            &res.qdd,
            &res.null_space,
            &jr,
            &forces,
        )?;
        let qdd = torque.qdd(&res.qdd, &res.null_space);

        if sol.relaxed_mu_used {
            trace.relaxed_time += sc.control_dt;
        }
        trace.samples.push(BipedSample {
            t,
            com: [model.com.x, model.com.z],
            com_residual: (setpoint[0] - model.com.x).hypot(setpoint[1] - model.com.z),
            task_residuals: tasks
                .tasks()
                .iter()
                .map(|k| k.residual(&qdd).norm())
                .collect(),
            forces: [
                [sol.forces[0].x, sol.forces[0].z],
                [sol.forces[1].x, sol.forces[1].z],
            ],
            relaxed_mu_used: sol.relaxed_mu_used,
            torques: torque.tau.iter().copied().collect(),
            torque_residual: torque.residual,
        });

        let applied = selection.transpose() * &torque.tau;
        for k in 0..substeps {
            let push = sc.push.filter(|p| {
                let s = t + k as f64 * h;
                s >= p.start && s < p.start + p.duration
            });
            let plant = |q: &DVector<f64>, v: &DVector<f64>| -> Result<DVector<f64>, SimError> {
                constrained_accel(&robot, q, v, &applied, push, &anchors, sc.contact_stiffness)
            };
            let k1v = plant(&q, &qd)?;
            let (q2, v2) = (&q + &qd * (h / 2.0), &qd + &k1v * (h / 2.0));
            let k2v = plant(&q2, &v2)?;
            let (q3, v3) = (&q + &v2 * (h / 2.0), &qd + &k2v * (h / 2.0));
            let k3v = plant(&q3, &v3)?;
            let (q4, v4) = (&q + &v3 * h, &qd + &k3v * h);
            let k4v = plant(&q4, &v4)?;
            q += (&qd + &v2 * 2.0 + &v3 * 2.0 + v4) * (h / 6.0);
            qd += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        }
    }
    Ok(trace)
}

/// Joint accelerations with both feet pinned (bilateral contact), contact
/// drift pulled back with critically damped stabilization.
fn constrained_accel(
    robot: &Biped,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    applied: &DVector<f64>,
    push: Option<TrunkPush>,
    anchors: &[Vector3<f64>; 2],
    rate: f64,
) -> Result<DVector<f64>, SimError> {
    let n = robot.chain.dof();
    let dynamics = robot.chain.joint_space_dynamics(q, qd, &robot.gravity)?;
    let mut rhs_top = applied - &dynamics.bias - &dynamics.gravity;
    if let Some(p) = push {
        let com = robot.chain.bodies()[robot.trunk].com;
        let jt = robot.chain.point_jacobian_linear(q, robot.trunk, &com)?;
        rhs_top += jt.transpose() * DVector::from_vec(vec![p.force[0], 0.0, p.force[1]]);
    }
    let (jc, drift) = robot.contact_rows(q, qd)?;
    let mut pos_err = DVector::zeros(4);
    for i in 0..2 {
        let p = robot.foot(q, i)?;
        pos_err[2 * i] = p.x - anchors[i].x;
        pos_err[2 * i + 1] = p.z - anchors[i].z;
    }
    let vel = &jc * qd;
    let rhs_bottom = -drift - vel * (2.0 * rate) - pos_err * (rate * rate);
    let mut kkt = DMatrix::zeros(n + 4, n + 4);
    kkt.view_mut((0, 0), (n, n)).copy_from(&dynamics.mass);
    kkt.view_mut((0, n), (n, 4)).copy_from(&(-jc.transpose()));
    kkt.view_mut((n, 0), (4, n)).copy_from(&jc);
    let mut rhs = DVector::zeros(n + 4);
    rhs.rows_mut(0, n).copy_from(&rhs_top);
    rhs.rows_mut(n, 4).copy_from(&rhs_bottom);
    let sol = kkt.lu().solve(&rhs).ok_or(WblcError::NotPositiveDefinite)?;
    Ok(sol.rows(0, n).into_owned())
}
