//! Centroidal momentum: the chain's total momentum about its center of mass,
//! in a world-aligned frame. Ordered `[angular; linear]`.

use super::chain::{BaseKind, ChainError, KinematicChain};
use super::transform::{adjoint, skew, SpatialTransform, Twist};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};

#[derive(Debug, Clone)]
pub struct CentroidalModel {
    pub total_mass: f64,
    pub com: Vector3<f64>,
    /// Centroidal momentum matrix: `h = J_cm q̇`.
    pub j_cm: DMatrix<f64>,
    /// Composite spatial inertia about the center of mass.
    pub i_cm: Matrix6<f64>,
    /// Maps stacked contact forces to linear momentum rate.
    pub w_lin: DMatrix<f64>,
    /// Maps stacked contact forces to angular momentum rate about the COM.
    pub w_ang: DMatrix<f64>,
    pub momentum: Vector6<f64>,
}

impl KinematicChain {
    pub fn center_of_mass(&self, q: &DVector<f64>) -> Result<Vector3<f64>, ChainError> {
        let world = self.forward_kinematics(q)?;
        Ok(self.com_with(&world))
    }

    fn com_with(&self, world: &[SpatialTransform]) -> Vector3<f64> {
        let mut c = Vector3::zeros();
        for (k, b) in self.bodies().iter().enumerate() {
            c += b.mass * world[k].transform_point(&b.com);
        }
        c / self.total_mass()
    }

    /// Centroidal quantities with contact maps for the given world contact
    /// points.
    pub fn centroidal(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        contacts: &[Vector3<f64>],
    ) -> Result<CentroidalModel, ChainError> {
        self.check_len(qd)?;
        let world = self.forward_kinematics(q)?;
        let com = self.com_with(&world);
        let at_com = SpatialTransform::from_translation(com);
        let n = self.dof();
        let mut j_cm = DMatrix::zeros(6, n);
        let mut i_cm = Matrix6::zeros();
        for (k, b) in self.bodies().iter().enumerate() {
            if b.mass == 0.0 {
                continue;
            }
            // Adᵀ of the COM frame seen from body k moves body wrenches to the COM.
            let x = adjoint(&(world[k].inverse() * at_com));
            let xg = x.transpose() * b.spatial_inertia();
            i_cm += xg * x;
            let jb = self.body_jacobian_with(&world, k);
            let xg = DMatrix::from_iterator(6, 6, xg.iter().copied());
            j_cm += xg * jb;
        }
        let momentum = Vector6::from_iterator((&j_cm * qd).iter().copied());
        let m = contacts.len();
        let mut w_lin = DMatrix::zeros(3, 3 * m);
        let mut w_ang = DMatrix::zeros(3, 3 * m);
        for (i, p) in contacts.iter().enumerate() {
            w_lin
                .view_mut((0, 3 * i), (3, 3))
                .copy_from(&Matrix3::identity());
            w_ang
                .view_mut((0, 3 * i), (3, 3))
                .copy_from(&skew(&(p - com)));
        }
        Ok(CentroidalModel {
            total_mass: self.total_mass(),
            com,
            j_cm,
            i_cm,
            w_lin,
            w_ang,
            momentum,
        })
    }

    /// `J̇_cm q̇`. For a six-dof floating base this is `J_cm A⁻¹ b`, since the
    /// momentum rate of an unforced, unactuated floating system is zero. A
    /// fixed or planar base carries external reaction wrenches, so there the
    /// value comes from the Newton-Euler momentum rate at zero acceleration.
    pub fn cm_jacobian_dot_qdot(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
    ) -> Result<Vector6<f64>, ChainError> {
        match self.base() {
            BaseKind::Floating => self.cm_jacobian_dot_qdot_identity(q, qd),
            _ => self.momentum_rate(q, qd, &DVector::zeros(self.dof())),
        }
    }

    /// `J_cm A⁻¹ b`, regardless of base type.
    pub fn cm_jacobian_dot_qdot_identity(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
    ) -> Result<Vector6<f64>, ChainError> {
        let zero = DVector::zeros(self.dof());
        let b = self.inverse_dynamics(q, qd, &zero, &Vector3::zeros())?;
        let a = self.mass_matrix(q)?;
        let chol = a.clone().cholesky().ok_or(ChainError::SingularMass)?;
        // Cholesky succeeds on nearly singular matrices; guard on conditioning.
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &d| {
            (l.min(d.abs()), h.max(d.abs()))
        });
        if lo <= 1e-7 * hi {
            return Err(ChainError::SingularMass);
        }
        let x = chol.solve(&b);
        let model = self.centroidal(q, qd, &[])?;
        Ok(Vector6::from_iterator((&model.j_cm * x).iter().copied()))
    }

    /// Rate of centroidal momentum for the given `q̈`, with gravity excluded,
    /// summed from each body's Newton-Euler wrench.
    pub fn momentum_rate(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        qdd: &DVector<f64>,
    ) -> Result<Vector6<f64>, ChainError> {
        self.check_len(qdd)?;
        let kin = self.kinematics(q, qd)?;
        let acc = self.body_accelerations(q, qd, qdd, &Vector3::zeros(), &kin);
        let at_com = SpatialTransform::from_translation(self.com_with(&kin.world));
        let mut hdot = Twist::zeros();
        for k in 0..self.dof() {
            if self.bodies()[k].mass == 0.0 {
                continue;
            }
            let x = adjoint(&(kin.world[k].inverse() * at_com));
            hdot += x.transpose() * self.body_wrench(k, &kin.twist[k], &acc[k]);
        }
        Ok(hdot)
    }
}
