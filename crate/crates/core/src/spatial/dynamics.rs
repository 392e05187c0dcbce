//! Joint-space dynamics: `A q̈ + b + g = τ`.

use super::chain::{ChainError, ChainKinematics, KinematicChain};
use super::transform::{adjoint, lie_bracket, Twist};
use nalgebra::{DMatrix, DVector, Vector3};

#[derive(Debug, Clone)]
pub struct JointSpaceDynamics {
    /// Mass matrix `A`.
    pub mass: DMatrix<f64>,
    /// Coriolis and centrifugal forces `b`.
    pub bias: DVector<f64>,
    /// Gravity forces `g`.
    pub gravity: DVector<f64>,
}

impl KinematicChain {
    /// Recursive Newton-Euler inverse dynamics. `gravity` is the world
    /// gravitational acceleration, e.g. `(0, 0, -9.81)`.
    pub fn inverse_dynamics(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        qdd: &DVector<f64>,
        gravity: &Vector3<f64>,
    ) -> Result<DVector<f64>, ChainError> {
        self.check_len(qdd)?;
        let kin = self.kinematics(q, qd)?;
        let acc = self.body_accelerations(q, qd, qdd, gravity, &kin);
        Ok(self.backward_pass(q, &kin, &acc))
    }

    /// Body-frame spatial accelerations, with gravity folded in as an upward
    /// acceleration of the world.
    pub(crate) fn body_accelerations(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        qdd: &DVector<f64>,
        gravity: &Vector3<f64>,
        kin: &ChainKinematics,
    ) -> Vec<Twist> {
        let world_acc = Twist::new(0.0, 0.0, 0.0, -gravity.x, -gravity.y, -gravity.z);
        let mut acc: Vec<Twist> = Vec::with_capacity(self.dof());
        for k in 0..self.dof() {
            let s = self.bodies()[k].joint.screw();
            let rel = adjoint(&self.local_transform(k, q[k]).inverse());
            let parent = match self.bodies()[k].parent {
                Some(p) => acc[p],
                None => world_acc,
            };
            acc.push(rel * parent + lie_bracket(&kin.twist[k]) * s * qd[k] + s * qdd[k]);
        }
        acc
    }

    /// Net body wrench each body needs, `G V̇ − ad_Vᵀ G V`, in its own frame.
    pub(crate) fn body_wrench(&self, k: usize, twist: &Twist, acc: &Twist) -> Twist {
        let g = self.bodies()[k].spatial_inertia();
        g * acc - lie_bracket(twist).transpose() * (g * twist)
    }

    fn backward_pass(
        &self,
        q: &DVector<f64>,
        kin: &ChainKinematics,
        acc: &[Twist],
    ) -> DVector<f64> {
        let n = self.dof();
        let mut f: Vec<Twist> = (0..n)
            .map(|k| self.body_wrench(k, &kin.twist[k], &acc[k]))
            .collect();
        let mut tau = DVector::zeros(n);
        for k in (0..n).rev() {
            tau[k] = self.bodies()[k].joint.screw().dot(&f[k]);
            if let Some(p) = self.bodies()[k].parent {
                let rel = adjoint(&self.local_transform(k, q[k]).inverse());
                let up = rel.transpose() * f[k];
                f[p] += up;
            }
        }
        tau
    }

    /// Mass matrix by summing `Jᵀ G J` over body Jacobians.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>, ChainError> {
        let world = self.forward_kinematics(q)?;
        let n = self.dof();
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            if self.bodies()[k].mass == 0.0 {
                continue;
            }
            let j = self.body_jacobian_with(&world, k);
            let g =
                DMatrix::from_iterator(6, 6, self.bodies()[k].spatial_inertia().iter().copied());
            a += j.transpose() * g * &j;
        }
        // Symmetrize to remove rounding asymmetry.
        let at = a.transpose();
        Ok((a + at) * 0.5)
    }

    pub fn joint_space_dynamics(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        gravity: &Vector3<f64>,
    ) -> Result<JointSpaceDynamics, ChainError> {
        let zero = DVector::zeros(self.dof());
        Ok(JointSpaceDynamics {
            mass: self.mass_matrix(q)?,
            bias: self.inverse_dynamics(q, qd, &zero, &Vector3::zeros())?,
            gravity: self.inverse_dynamics(q, &zero, &zero, gravity)?,
        })
    }

    /// `q̈ = A⁻¹(τ − b − g)`.
    pub fn forward_dynamics(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        tau: &DVector<f64>,
        gravity: &Vector3<f64>,
    ) -> Result<DVector<f64>, ChainError> {
        self.check_len(tau)?;
        let zero = DVector::zeros(self.dof());
        let rhs = tau - self.inverse_dynamics(q, qd, &zero, gravity)?;
        let chol = self
            .mass_matrix(q)?
            .cholesky()
            .ok_or(ChainError::SingularMass)?;
        Ok(chol.solve(&rhs))
    }

    /// Kinetic plus gravitational potential energy.
    pub fn energy(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        gravity: &Vector3<f64>,
    ) -> Result<f64, ChainError> {
        let kin = self.kinematics(q, qd)?;
        let mut e = 0.0;
        for (k, b) in self.bodies().iter().enumerate() {
            let v = &kin.twist[k];
            e += 0.5 * v.dot(&(b.spatial_inertia() * v));
            e -= b.mass * gravity.dot(&kin.world[k].transform_point(&b.com));
        }
        Ok(e)
    }
}
