//! Strict task priority by successive null-space projection.

use super::pinv::{pinv, pinv_cut, MassMetric, DEFAULT_RANK_TOL};
use super::WblcError;
use nalgebra::{DMatrix, DVector};

/// An acceleration-level task `ẍ = J q̈ + J̇ q̇`.
#[derive(Debug, Clone)]
pub struct Task {
    pub label: String,
    pub jacobian: DMatrix<f64>,
    pub jdot_qdot: DVector<f64>,
    pub desired_acc: DVector<f64>,
}

impl Task {
    pub fn new(
        label: impl Into<String>,
        jacobian: DMatrix<f64>,
        jdot_qdot: DVector<f64>,
        desired_acc: DVector<f64>,
    ) -> Result<Self, WblcError> {
        let label = label.into();
        let k = jacobian.nrows();
        if k == 0 || jdot_qdot.len() != k || desired_acc.len() != k {
            return Err(WblcError::ShapeMismatch(format!(
                "task `{label}`: jacobian has {k} rows, drift {}, target {}",
                jdot_qdot.len(),
                desired_acc.len()
            )));
        }
        Ok(Task {
            label,
            jacobian,
            jdot_qdot,
            desired_acc,
        })
    }

    /// `ẍ^d − J̇ q̇`.
    pub fn reference(&self) -> DVector<f64> {
        &self.desired_acc - &self.jdot_qdot
    }

    /// Achieved task acceleration minus desired.
    pub fn residual(&self, qdd: &DVector<f64>) -> DVector<f64> {
        &self.jacobian * qdd + &self.jdot_qdot - &self.desired_acc
    }
}

/// Tasks in priority order, highest first.
#[derive(Debug, Clone)]
pub struct TaskHierarchy {
    tasks: Vec<Task>,
}

impl TaskHierarchy {
    pub fn new(tasks: Vec<Task>) -> Result<Self, WblcError> {
        let first = tasks.first().ok_or(WblcError::EmptyHierarchy)?;
        let n = first.jacobian.ncols();
        if let Some(t) = tasks.iter().find(|t| t.jacobian.ncols() != n) {
            return Err(WblcError::ShapeMismatch(format!(
                "task `{}` has {} columns, expected {n}",
                t.label,
                t.jacobian.ncols()
            )));
        }
        Ok(TaskHierarchy { tasks })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn dof(&self) -> usize {
        self.tasks[0].jacobian.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct HierarchySolution {
    pub qdd: DVector<f64>,
    /// Projector onto the motions left free by every task.
    pub null_space: DMatrix<f64>,
    /// Each task's contribution to `qdd`.
    pub contributions: Vec<DVector<f64>>,
    /// Numerical rank of each projected task Jacobian.
    pub ranks: Vec<usize>,
}

impl HierarchySolution {
    /// True when some task lost rank after projection, so it was only met in
    /// the least-squares sense.
    pub fn any_conflict(&self, h: &TaskHierarchy) -> bool {
        self.ranks
            .iter()
            .zip(h.tasks())
            .any(|(&r, t)| r < t.jacobian.nrows())
    }
}

/// Joint accelerations for a task hierarchy under mass matrix `A`.
pub fn resolve_hierarchy(
    h: &TaskHierarchy,
    a: &DMatrix<f64>,
) -> Result<HierarchySolution, WblcError> {
    let metric = MassMetric::new(a)?;
    resolve_with_metric(h, &metric)
}

pub fn resolve_with_metric(
    h: &TaskHierarchy,
    metric: &MassMetric,
) -> Result<HierarchySolution, WblcError> {
    let n = h.dof();
    if metric.dim() != n {
        return Err(WblcError::ShapeMismatch(format!(
            "hierarchy has {n} dofs, mass matrix is {}",
            metric.dim()
        )));
    }
    let mut qdd = DVector::zeros(n);
    let mut null = DMatrix::identity(n, n);
    let mut contributions = Vec::with_capacity(h.tasks.len());
    let mut ranks = Vec::with_capacity(h.tasks.len());
    for t in &h.tasks {
        let projected = &t.jacobian * &null;
        let reference = metric.weighted_norm(&t.jacobian);
        let (jbar, rank) = metric.weighted_pinv_scaled(&projected, DEFAULT_RANK_TOL, reference);
        let dq = &jbar * (t.reference() - &t.jacobian * &qdd);
        qdd += &dq;
        null = &null * (DMatrix::identity(n, n) - &jbar * &projected);
        contributions.push(dq);
        ranks.push(rank);
    }
    Ok(HierarchySolution {
        qdd,
        null_space: null,
        contributions,
        ranks,
    })
}

/// Two-task check with plain pseudo-inverses: the recursive solution against
/// the closed form `J₁⁺e₁ + (J₂N₁)⁺(e₂ − J₂J₁⁺e₁)`, which omits the leading
/// `N₁` the recursion applies. Returns the largest componentwise deviation.
pub fn hierarchy_equivalence_check(t1: &Task, t2: &Task) -> Result<f64, WblcError> {
    let h = TaskHierarchy::new(vec![t1.clone(), t2.clone()])?;
    let n = h.dof();
    let recursive = resolve_with_metric(&h, &MassMetric::identity(n))?.qdd;

    let j1p = pinv(&t1.jacobian, DEFAULT_RANK_TOL);
    let n1 = DMatrix::identity(n, n) - &j1p * &t1.jacobian;
    let first = &j1p * t1.reference();
    let x = &t2.desired_acc - &t2.jdot_qdot - &t2.jacobian * &first;
    let (p21, _) = pinv_cut(
        &(&t2.jacobian * &n1),
        DEFAULT_RANK_TOL,
        DEFAULT_RANK_TOL * t2.jacobian.norm(),
    );
    let closed = &first + p21 * x;
    Ok((recursive - closed).amax())
}
