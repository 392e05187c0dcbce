//! Reaction-force distribution: match the desired linear momentum rate
//! exactly, track the desired angular momentum rate as closely as the
//! friction pyramids allow.

use super::qp::{solve_qp, KktResiduals, QpProblem, QpResult};
use super::WblcError;
use crate::spatial::CentroidalModel;
use nalgebra::{DMatrix, DVector, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

/// A point contact. `jacobian` is the 3×dof linear Jacobian of the contact
/// point.
#[derive(Debug, Clone)]
pub struct ContactPoint {
    pub position: Vector3<f64>,
    pub jacobian: DMatrix<f64>,
    pub mu: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ContactSet {
    pub contacts: Vec<ContactPoint>,
}

impl ContactSet {
    pub fn new(contacts: Vec<ContactPoint>) -> Result<Self, WblcError> {
        for c in &contacts {
            if !(c.mu.is_finite() && c.mu > 0.0) {
                return Err(WblcError::InvalidContact(format!(
                    "friction coefficient {} must be positive",
                    c.mu
                )));
            }
            if c.jacobian.nrows() != 3 {
                return Err(WblcError::InvalidContact(
                    "contact jacobians must have 3 rows".into(),
                ));
            }
        }
        Ok(ContactSet { contacts })
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.contacts.iter().map(|c| c.position).collect()
    }

    /// Stacked `J_r`, `3·n_contacts × dof`.
    pub fn stacked_jacobian(&self, dof: usize) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(3 * self.len(), dof);
        for (i, c) in self.contacts.iter().enumerate() {
            j.view_mut((3 * i, 0), (3, dof)).copy_from(&c.jacobian);
        }
        j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceQpSettings {
    /// Scalar force regularization; the weight matrix is this times identity.
    pub force_weight: f64,
    /// Friction coefficient used when the nominal one makes the problem
    /// infeasible.
    pub relaxed_mu: f64,
}

impl Default for ForceQpSettings {
    fn default() -> Self {
        ForceQpSettings {
            force_weight: 1e-3,
            relaxed_mu: 1.75,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Ground-on-robot force at each contact, world frame.
    pub forces: Vec<Vector3<f64>>,
    /// `F_ang^d − W_ang F`.
    pub angular_residual: Vector3<f64>,
    pub relaxed_mu_used: bool,
    pub objective: f64,
    pub kkt: KktResiduals,
}

impl QpSolution {
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            3 * self.forces.len(),
            self.forces.iter().flat_map(|f| f.iter().copied()),
        )
    }
}

/// The QP in standard form, for a given friction coefficient per contact.
pub fn force_problem(
    model: &CentroidalModel,
    f_lin: &Vector3<f64>,
    f_ang: &Vector3<f64>,
    weight: &DMatrix<f64>,
    mus: &[f64],
) -> QpProblem {
    let m = mus.len();
    let n = 3 * m;
    let w = &model.w_ang;
    let hessian = (weight + w.transpose() * w) * 2.0;
    let fa = DVector::from_column_slice(f_ang.as_slice());
    let linear = -(w.transpose() * fa) * 2.0;
    let mut ineq = DMatrix::zeros(5 * m, n);
    for (i, &mu) in mus.iter().enumerate() {
        let c = 3 * i;
        let r = 5 * i;
        // μ F_z ± F_x ≥ 0, μ F_z ± F_y ≥ 0, F_z ≥ 0
        ineq[(r, c)] = -1.0;
        ineq[(r, c + 2)] = mu;
        ineq[(r + 1, c)] = 1.0;
        ineq[(r + 1, c + 2)] = mu;
        ineq[(r + 2, c + 1)] = -1.0;
        ineq[(r + 2, c + 2)] = mu;
        ineq[(r + 3, c + 1)] = 1.0;
        ineq[(r + 3, c + 2)] = mu;
        ineq[(r + 4, c + 2)] = 1.0;
    }
    QpProblem {
        hessian,
        linear,
        eq_matrix: model.w_lin.clone(),
        eq_rhs: DVector::from_column_slice(f_lin.as_slice()),
        ineq_matrix: ineq,
        ineq_rhs: DVector::zeros(5 * m),
    }
}

fn finish(
    problem: &QpProblem,
    r: QpResult,
    model: &CentroidalModel,
    f_ang: &Vector3<f64>,
    relaxed: bool,
) -> QpSolution {
    let forces: Vec<Vector3<f64>> = (0..r.x.len() / 3)
        .map(|i| Vector3::new(r.x[3 * i], r.x[3 * i + 1], r.x[3 * i + 2]))
        .collect();
    let ang = &model.w_ang * &r.x;
    QpSolution {
        angular_residual: f_ang - Vector3::new(ang[0], ang[1], ang[2]),
        relaxed_mu_used: relaxed,
        // Add back the constant ‖F_ang‖² dropped from the standard form.
        objective: r.objective + f_ang.norm_squared(),
        kkt: problem.kkt_residuals(&r),
        forces,
    }
}

/// Contact forces minimizing `Fᵀ Q F + ‖F_ang^d − W_ang F‖²` subject to
/// `W_lin F = F_lin^d` and friction pyramids. Retries once with the relaxed
/// friction coefficient if the nominal problem is infeasible.
pub fn reaction_force_qp(
    model: &CentroidalModel,
    contacts: &ContactSet,
    f_lin: &Vector3<f64>,
    f_ang: &Vector3<f64>,
    weight: &DMatrix<f64>,
    settings: &ForceQpSettings,
) -> Result<QpSolution, WblcError> {
    let m = contacts.len();
    if m == 0 {
        return Err(WblcError::InvalidContact(
            "at least one contact is required".into(),
        ));
    }
    if model.w_lin.ncols() != 3 * m || weight.shape() != (3 * m, 3 * m) {
        return Err(WblcError::ShapeMismatch(format!(
            "{m} contacts but contact maps have {} columns and weight is {:?}",
            model.w_lin.ncols(),
            weight.shape()
        )));
    }
    let nominal: Vec<f64> = contacts.contacts.iter().map(|c| c.mu).collect();
    let problem = force_problem(model, f_lin, f_ang, weight, &nominal);
    match solve_qp(&problem) {
        Ok(r) => return Ok(finish(&problem, r, model, f_ang, false)),
        Err(WblcError::Infeasible) => {}
        Err(e) => return Err(e),
    }
    let relaxed: Vec<f64> = nominal
        .iter()
        .map(|&mu| mu.max(settings.relaxed_mu))
        .collect();
    let problem = force_problem(model, f_lin, f_ang, weight, &relaxed);
    let r = solve_qp(&problem)?;
    Ok(finish(&problem, r, model, f_ang, true))
}

/// Desired centroidal acceleration `[angular; linear]` from the chosen forces.
/// `f_lin` includes weight compensation, so gravity is added back to the
/// linear block.
pub fn cm_task_from_forces(
    sol: &QpSolution,
    model: &CentroidalModel,
    f_lin: &Vector3<f64>,
    gravity: &Vector3<f64>,
) -> Result<Vector6<f64>, WblcError> {
    let inv: Matrix6<f64> = model.i_cm.try_inverse().ok_or(WblcError::SingularInertia)?;
    if !inv.iter().all(|v| v.is_finite()) {
        return Err(WblcError::SingularInertia);
    }
    let ang = &model.w_ang * sol.stacked();
    let wrench = Vector6::new(ang[0], ang[1], ang[2], f_lin.x, f_lin.y, f_lin.z);
    let mut acc = inv * wrench;
    acc.fixed_rows_mut::<3>(3).add_assign(gravity);
    Ok(acc)
}

use std::ops::AddAssign;

#[cfg(test)]
mod tests {
    use super::super::qp::tests::exhaustive_oracle;
    use super::*;
    use crate::spatial::skew;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const G: Vector3<f64> = Vector3::new(0.0, 0.0, -9.81);

    /// A synthetic centroidal model: only the contact maps and inertia matter
    /// to the force QP.
    pub(crate) fn model_with(
        mass: f64,
        com: Vector3<f64>,
        contacts: &[Vector3<f64>],
    ) -> CentroidalModel {
        let m = contacts.len();
        let mut w_lin = DMatrix::zeros(3, 3 * m);
        let mut w_ang = DMatrix::zeros(3, 3 * m);
        for (i, p) in contacts.iter().enumerate() {
            w_lin.view_mut((0, 3 * i), (3, 3)).fill_with_identity();
            w_ang
                .view_mut((0, 3 * i), (3, 3))
                .copy_from(&skew(&(p - com)));
        }
        let mut i_cm = Matrix6::identity() * mass;
        i_cm.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(nalgebra::Matrix3::identity() * 0.3 * mass));
        CentroidalModel {
            total_mass: mass,
            com,
            j_cm: DMatrix::zeros(6, 0),
            i_cm,
            w_lin,
            w_ang,
            momentum: Vector6::zeros(),
        }
    }

    fn contact_set(pos: &[Vector3<f64>], mu: f64) -> ContactSet {
        ContactSet::new(
            pos.iter()
                .map(|&p| ContactPoint {
                    position: p,
                    jacobian: DMatrix::zeros(3, 1),
                    mu,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn static_single_contact() {
        let m = 30.0;
        let p = [Vector3::new(0.0, 0.0, 0.0)];
        let model = model_with(m, Vector3::new(0.0, 0.0, 0.9), &p);
        let f_lin = -G * m;
        let sol = reaction_force_qp(
            &model,
            &contact_set(&p, 0.65),
            &f_lin,
            &Vector3::zeros(),
            &(DMatrix::identity(3, 3) * 1e-3),
            &ForceQpSettings::default(),
        )
        .unwrap();
        assert!((sol.forces[0] - f_lin).norm() < 1e-10);
        assert!(sol.angular_residual.norm() < 1e-10);
        assert!(!sol.relaxed_mu_used);
        let acc = cm_task_from_forces(&sol, &model, &f_lin, &G).unwrap();
        assert!(acc.amax() < 1e-12);
    }

    #[test]
    fn pulling_on_ground_is_infeasible() {
        let p = [Vector3::zeros()];
        let model = model_with(10.0, Vector3::new(0.0, 0.0, 1.0), &p);
        let r = reaction_force_qp(
            &model,
            &contact_set(&p, 0.65),
            &Vector3::new(0.0, 0.0, -5.0),
            &Vector3::zeros(),
            &(DMatrix::identity(3, 3) * 1e-3),
            &ForceQpSettings::default(),
        );
        assert!(matches!(r, Err(WblcError::Infeasible)));
    }

    #[test]
    fn steep_push_uses_relaxed_friction() {
        let p = [Vector3::zeros()];
        let model = model_with(10.0, Vector3::new(0.0, 0.0, 1.0), &p);
        let f_lin = Vector3::new(98.1, 0.0, 98.1);
        let sol = reaction_force_qp(
            &model,
            &contact_set(&p, 0.65),
            &f_lin,
            &Vector3::zeros(),
            &(DMatrix::identity(3, 3) * 1e-3),
            &ForceQpSettings::default(),
        )
        .unwrap();
        assert!(sol.relaxed_mu_used);
        assert!((sol.forces[0] - f_lin).norm() < 1e-9);
    }

    #[test]
    fn angular_block_is_what_forces_deliver() {
        let p = [Vector3::new(0.1, 0.1, 0.0), Vector3::new(-0.1, -0.1, 0.0)];
        let model = model_with(10.0, Vector3::new(0.0, 0.0, 1.0), &p);
        let f_lin = -G * 10.0;
        let f_ang = Vector3::new(50.0, -40.0, 5.0);
        let sol = reaction_force_qp(
            &model,
            &contact_set(&p, 0.65),
            &f_lin,
            &f_ang,
            &(DMatrix::identity(6, 6) * 1e-3),
            &ForceQpSettings::default(),
        )
        .unwrap();
        assert!(
            sol.angular_residual.norm() > 1.0,
            "friction should clip this request"
        );
        let acc = cm_task_from_forces(&sol, &model, &f_lin, &G).unwrap();
        let mut torque = Vector3::zeros();
        for (pi, f) in p.iter().zip(&sol.forces) {
            torque += (pi - model.com).cross(f);
        }
        let expect = model.i_cm.fixed_view::<3, 3>(0, 0).try_inverse().unwrap() * torque;
        assert!((acc.fixed_rows::<3>(0) - expect).amax() < 1e-10);
    }

    #[test]
    fn matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [1usize, 2] {
            for _ in 0..200 {
                let mass = rng.random_range(1.0..10.0);
                let pos: Vec<Vector3<f64>> = (0..m)
                    .map(|_| {
                        Vector3::new(
                            rng.random_range(-0.3..0.3),
                            rng.random_range(-0.3..0.3),
                            0.0,
                        )
                    })
                    .collect();
                let model = model_with(
                    mass,
                    Vector3::new(rng.random_range(-0.1..0.1), 0.0, 1.0),
                    &pos,
                );
                let f_lin = Vector3::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    mass * rng.random_range(5.0..15.0),
                );
                let f_ang = Vector3::new(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-1.0..1.0),
                );
                let w = DMatrix::identity(3 * m, 3 * m) * 1e-3;
                let problem = force_problem(&model, &f_lin, &f_ang, &w, &vec![0.65; m]);
                let oracle = exhaustive_oracle(&problem).expect("feasible by construction");
                let sol = reaction_force_qp(
                    &model,
                    &contact_set(&pos, 0.65),
                    &f_lin,
                    &f_ang,
                    &w,
                    &ForceQpSettings::default(),
                )
                .unwrap();
                assert!(!sol.relaxed_mu_used);
                assert!((sol.objective - (oracle.1 + f_ang.norm_squared())).abs() < 1e-8);
                assert!(sol.kkt.max() < 1e-8, "{:?}", sol.kkt);
            }
        }
    }
}
