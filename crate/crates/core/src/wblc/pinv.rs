//! Pseudo-inverses used by the task hierarchy.

use super::WblcError;
use nalgebra::DMatrix;

/// Singular values below `rel_tol · σ_max` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Moore-Penrose pseudo-inverse by truncated SVD.
pub fn pinv(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    pinv_rank(m, rel_tol).0
}

/// Pseudo-inverse plus numerical rank.
pub fn pinv_rank(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    pinv_cut(m, rel_tol, 0.0)
}

/// Pseudo-inverse from a complete orthogonal decomposition: a column-pivoted
/// QR reveals the rank, a second QR of the kept rows gives the minimum-norm
/// inverse. Directions with pivots below `rel_tol · |r₁₁|` or `abs_cut` are
/// dropped. The absolute cut matters for projected Jacobians whose entries
/// collapse to round-off, since their own largest pivot is then noise.
///
/// nalgebra's SVD is avoided here: on rank-deficient inputs it sometimes
/// returns factors that do not reconstruct the matrix.
pub fn pinv_cut(m: &DMatrix<f64>, rel_tol: f64, abs_cut: f64) -> (DMatrix<f64>, usize) {
    let (k, n) = m.shape();
    if k == 0 || n == 0 {
        return (DMatrix::zeros(n, k), 0);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let cut = (rel_tol * r[(0, 0)].abs()).max(abs_cut);
    let rank = (0..k.min(n)).take_while(|&i| r[(i, i)].abs() > cut).count();
    if rank == 0 {
        return (DMatrix::zeros(n, k), 0);
    }
    let q1 = qr.q().columns(0, rank).into_owned();
    let inner = r.rows(0, rank).transpose().qr();
    let t_inv_t = inner
        .r()
        .transpose()
        .solve_lower_triangular(&DMatrix::identity(rank, rank))
        .expect("pivots above the cut are nonzero");
    let mut out = inner.q() * t_inv_t * q1.transpose();
    qr.p().inv_permute_rows(&mut out);
    (out, rank)
}

/// Cholesky factor of the mass matrix, kept so repeated weighted inverses
/// share one factorization.
#[derive(Debug, Clone)]
pub struct MassMetric {
    /// `L⁻ᵀ` with `A = L Lᵀ`.
    l_inv_t: DMatrix<f64>,
    a_inv: DMatrix<f64>,
}

impl MassMetric {
    pub fn new(a: &DMatrix<f64>) -> Result<Self, WblcError> {
        if !a.is_square() {
            return Err(WblcError::ShapeMismatch(format!(
                "mass matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let chol = a.clone().cholesky().ok_or(WblcError::NotPositiveDefinite)?;
        let n = a.nrows();
        let l_inv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(WblcError::NotPositiveDefinite)?;
        let a_inv = l_inv.transpose() * &l_inv;
        Ok(MassMetric {
            l_inv_t: l_inv.transpose(),
            a_inv,
        })
    }

    pub fn identity(n: usize) -> Self {
        MassMetric {
            l_inv_t: DMatrix::identity(n, n),
            a_inv: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.a_inv.nrows()
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    /// `J̄ = L⁻ᵀ (J L⁻ᵀ)⁺`. Equals `A⁻¹Jᵀ(JA⁻¹Jᵀ)⁻¹` when `J` has full row
    /// rank; otherwise it is the minimum kinetic-energy least-squares inverse.
    pub fn weighted_pinv(&self, j: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
        self.weighted_pinv_scaled(j, rel_tol, 0.0)
    }

    /// As [`weighted_pinv`](Self::weighted_pinv), also dropping directions
    /// weaker than `rel_tol · reference`.
    pub fn weighted_pinv_scaled(
        &self,
        j: &DMatrix<f64>,
        rel_tol: f64,
        reference: f64,
    ) -> (DMatrix<f64>, usize) {
        let (p, rank) = pinv_cut(&(j * &self.l_inv_t), rel_tol, rel_tol * reference);
        (&self.l_inv_t * p, rank)
    }

    /// Norm of `J` in this metric, `‖J L⁻ᵀ‖_F`.
    pub fn weighted_norm(&self, j: &DMatrix<f64>) -> f64 {
        (j * &self.l_inv_t).norm()
    }
}

/// Dynamically consistent inverse of `J` under mass matrix `A`. The returned
/// rank is below `J.nrows()` when the task is singular.
pub fn dyn_consistent_pinv(
    j: &DMatrix<f64>,
    a: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, usize), WblcError> {
    let metric = MassMetric::new(a)?;
    if j.ncols() != metric.dim() {
        return Err(WblcError::ShapeMismatch(format!(
            "jacobian has {} columns, mass matrix is {}",
            j.ncols(),
            metric.dim()
        )));
    }
    Ok(metric.weighted_pinv(j, DEFAULT_RANK_TOL))
}
