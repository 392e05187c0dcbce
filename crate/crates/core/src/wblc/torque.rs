//! Joint torques from the resolved accelerations and contact forces.

use super::pinv::{pinv, DEFAULT_RANK_TOL};
use super::WblcError;
use crate::spatial::JointSpaceDynamics;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct TorqueSolution {
    pub tau: DVector<f64>,
    /// Extra acceleration in the hierarchy's leftover null space.
    pub qdd_residual: DVector<f64>,
    /// Norm of the unmet part of the equation of motion.
    pub residual: f64,
}

impl TorqueSolution {
    /// Total commanded acceleration.
    pub fn qdd(&self, qdd_task: &DVector<f64>, null_space: &DMatrix<f64>) -> DVector<f64> {
        qdd_task + null_space * &self.qdd_residual
    }
}

/// Solves `[Uᵀ, −A N] [τ; q̈_res] = A q̈_task + b + g − J_rᵀ F` in the least
/// squares sense. `forces` are ground-on-robot, so the equation of motion
/// reads `A q̈ + b + g = Uᵀτ + J_rᵀF`.
pub fn torque_solve(
    dynamics: &JointSpaceDynamics,
    selection: &DMatrix<f64>,
    qdd_task: &DVector<f64>,
    null_space: &DMatrix<f64>,
    contact_jacobian: &DMatrix<f64>,
    forces: &DVector<f64>,
) -> Result<TorqueSolution, WblcError> {
    let n = dynamics.mass.nrows();
    let na = selection.nrows();
    if selection.ncols() != n
        || qdd_task.len() != n
        || null_space.shape() != (n, n)
        || contact_jacobian.ncols() != n
        || contact_jacobian.nrows() != forces.len()
    {
        return Err(WblcError::ShapeMismatch(
            "torque solve inputs disagree on dof".into(),
        ));
    }
    let rhs = &dynamics.mass * qdd_task + &dynamics.bias + &dynamics.gravity
        - contact_jacobian.transpose() * forces;
    let mut stacked = DMatrix::zeros(n, na + n);
    stacked
        .view_mut((0, 0), (n, na))
        .copy_from(&selection.transpose());
    stacked
        .view_mut((0, na), (n, n))
        .copy_from(&(-(&dynamics.mass * null_space)));
    let sol = pinv(&stacked, DEFAULT_RANK_TOL) * &rhs;
    let residual = (&stacked * &sol - &rhs).norm();
    if residual > 1e-8 * (1.0 + rhs.norm()) {
        return Err(WblcError::RankDeficientActuation { residual });
    }
    Ok(TorqueSolution {
        tau: sol.rows(0, na).into_owned(),
        qdd_residual: sol.rows(na, n).into_owned(),
        residual,
    })
}
