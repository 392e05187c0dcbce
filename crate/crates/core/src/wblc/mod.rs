//! Whole-body locomotion control: prioritized acceleration tasks, contact
//! force distribution and torque extraction for floating-base chains.

mod force;
mod hierarchy;
mod pinv;
mod qp;
mod torque;

pub use force::{
    cm_task_from_forces, force_problem, reaction_force_qp, ContactPoint, ContactSet,
    ForceQpSettings, QpSolution,
};
pub use hierarchy::{
    hierarchy_equivalence_check, resolve_hierarchy, resolve_with_metric, HierarchySolution, Task,
    TaskHierarchy,
};
pub use pinv::{dyn_consistent_pinv, pinv, pinv_cut, pinv_rank, MassMetric, DEFAULT_RANK_TOL};
pub use qp::{solve_qp, KktResiduals, QpProblem, QpResult};
pub use torque::{torque_solve, TorqueSolution};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WblcError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("task hierarchy is empty")]
    EmptyHierarchy,
    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("QP is infeasible")]
    Infeasible,
    #[error("QP solver made no progress")]
    QpNoProgress,
    #[error("invalid contact: {0}")]
    InvalidContact(String),
    #[error("centroidal inertia is singular")]
    SingularInertia,
    #[error("actuation cannot realize the requested motion (residual {residual:.3e})")]
    RankDeficientActuation { residual: f64 },
}
