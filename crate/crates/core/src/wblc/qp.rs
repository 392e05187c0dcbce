//! Dense dual active-set quadratic programming (Goldfarb-Idnani) for small
//! problems:
//!
//! ```text
//! min ½ xᵀ G x + aᵀ x   s.t.   C_eq x = b_eq,   C_in x ≥ b_in
//! ```
//!
//! Starts from the unconstrained minimum and adds violated constraints one at
//! a time, lowest index first, so results are deterministic.

use super::WblcError;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct QpResult {
    pub x: DVector<f64>,
    /// Multipliers with `G x + a = C_eqᵀ λ_eq + C_inᵀ λ_in`.
    pub eq_multipliers: DVector<f64>,
    pub ineq_multipliers: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Worst violation of each KKT condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }

    fn validate(&self) -> Result<(), WblcError> {
        let n = self.dim();
        let ok = self.hessian.shape() == (n, n)
            && self.eq_matrix.ncols() == n
            && self.eq_matrix.nrows() == self.eq_rhs.len()
            && self.ineq_matrix.ncols() == n
            && self.ineq_matrix.nrows() == self.ineq_rhs.len();
        if !ok {
            return Err(WblcError::ShapeMismatch(
                "inconsistent QP dimensions".into(),
            ));
        }
        Ok(())
    }

    pub fn kkt_residuals(&self, r: &QpResult) -> KktResiduals {
        let grad = &self.hessian * &r.x + &self.linear
            - self.eq_matrix.transpose() * &r.eq_multipliers
            - self.ineq_matrix.transpose() * &r.ineq_multipliers;
        let eq = &self.eq_matrix * &r.x - &self.eq_rhs;
        let slack = &self.ineq_matrix * &r.x - &self.ineq_rhs;
        let primal = eq.amax().max(slack.iter().fold(0.0f64, |m, &s| m.max(-s)));
        let dual = r.ineq_multipliers.iter().fold(0.0f64, |m, &l| m.max(-l));
        let comp = slack
            .iter()
            .zip(r.ineq_multipliers.iter())
            .fold(0.0f64, |m, (s, l)| m.max((s * l).abs()));
        KktResiduals {
            stationarity: grad.amax(),
            primal,
            dual,
            complementarity: comp,
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Eq(usize),
    In(usize),
}

struct Active {
    kind: Kind,
    normal: DVector<f64>,
    mult: f64,
}

const MAX_ITER_FACTOR: usize = 50;

pub fn solve_qp(p: &QpProblem) -> Result<QpResult, WblcError> {
    p.validate()?;
    let n = p.dim();
    let chol: Cholesky<f64, Dyn> = p
        .hessian
        .clone()
        .cholesky()
        .ok_or(WblcError::NotPositiveDefinite)?;
    let scale = 1.0 + p.eq_rhs.amax().max(p.ineq_rhs.amax()).max(p.linear.amax());
    let tol = 1e-12 * scale;
    let mut x = chol.solve(&(-&p.linear));
    let mut active: Vec<Active> = Vec::new();
    let mut iterations = 0;
    let limit = MAX_ITER_FACTOR * (n + p.eq_rhs.len() + p.ineq_rhs.len() + 1);

    // Adds constraint `normal·x ≥ rhs` (currently violated) to the active set.
    let add = |kind: Kind,
               normal: DVector<f64>,
               rhs: f64,
               x: &mut DVector<f64>,
               active: &mut Vec<Active>,
               iterations: &mut usize|
     -> Result<(), WblcError> {
        let mut mult = 0.0;
        loop {
            *iterations += 1;
            if *iterations > limit {
                return Err(WblcError::QpNoProgress);
            }
            let ginv_np = chol.solve(&normal);
            let (z, r) = if active.is_empty() {
                (ginv_np, DVector::zeros(0))
            } else {
                let nmat = DMatrix::from_columns(
                    &active.iter().map(|a| a.normal.clone()).collect::<Vec<_>>(),
                );
                let ginv_n = chol.solve(&nmat);
                let m = nmat.transpose() * &ginv_n;
                let r = m
                    .lu()
                    .solve(&(nmat.transpose() * &ginv_np))
                    .ok_or(WblcError::QpNoProgress)?;
                (ginv_np - ginv_n * &r, r)
            };
            let slack = normal.dot(x) - rhs;
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, a) in active.iter().enumerate() {
                if matches!(a.kind, Kind::In(_)) && r[j] > 1e-14 {
                    let ratio = a.mult / r[j];
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(j);
                    }
                }
            }
            // z·n is the Schur complement of the new normal against the active
            // set; near zero means the normal is dependent.
            let zn = z.dot(&normal);
            let full = normal.dot(&chol.solve(&normal));
            let t2 = if zn > 1e-11 * full {
                -slack / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(WblcError::Infeasible);
            }
            for (j, a) in active.iter_mut().enumerate() {
                a.mult -= t * r[j];
            }
            mult += t;
            if t2.is_finite() {
                *x += &z * t;
            }
            if t2 <= t1 {
                active.push(Active { kind, normal, mult });
                return Ok(());
            }
            active.remove(drop.expect("finite t1 has an index"));
        }
    };

    for i in 0..p.eq_rhs.len() {
        let row = p.eq_matrix.row(i).transpose();
        let slack = row.dot(&x) - p.eq_rhs[i];
        let (normal, rhs) = if slack > 0.0 {
            (-row, -p.eq_rhs[i])
        } else {
            (row, p.eq_rhs[i])
        };
        if slack.abs() <= tol {
            // Already satisfied. Still hold it active unless it is redundant.
            if !active.is_empty() {
                let nmat = DMatrix::from_columns(
                    &active.iter().map(|a| a.normal.clone()).collect::<Vec<_>>(),
                );
                let coef = super::pinv::pinv(&nmat, 1e-12) * &normal;
                if (&nmat * coef - &normal).amax() < 1e-10 * (1.0 + normal.amax()) {
                    continue;
                }
            }
            active.push(Active {
                kind: Kind::Eq(i),
                normal,
                mult: 0.0,
            });
            continue;
        }
        add(
            Kind::Eq(i),
            normal,
            rhs,
            &mut x,
            &mut active,
            &mut iterations,
        )?;
    }

    loop {
        let slack = &p.ineq_matrix * &x - &p.ineq_rhs;
        let is_active = |i: usize| {
            active
                .iter()
                .any(|a| matches!(a.kind, Kind::In(j) if j == i))
        };
        let Some(i) = (0..slack.len()).find(|&i| slack[i] < -tol && !is_active(i)) else {
            break;
        };
        let row = p.ineq_matrix.row(i).transpose();
        add(
            Kind::In(i),
            row,
            p.ineq_rhs[i],
            &mut x,
            &mut active,
            &mut iterations,
        )?;
    }

    let mut eq_mult = DVector::zeros(p.eq_rhs.len());
    let mut in_mult = DVector::zeros(p.ineq_rhs.len());
    for a in &active {
        match a.kind {
            Kind::Eq(i) => {
                let sign = if a.normal.dot(&p.eq_matrix.row(i).transpose()) >= 0.0 {
                    1.0
                } else {
                    -1.0
                };
                eq_mult[i] = sign * a.mult;
            }
            Kind::In(i) => in_mult[i] = a.mult,
        }
    }
    Ok(QpResult {
        objective: p.objective(&x),
        x,
        eq_multipliers: eq_mult,
        ineq_multipliers: in_mult,
        iterations,
    })
}
