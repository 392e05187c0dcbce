//! Independent reference computations for the acceptance checks. Nothing here
//! calls the closed forms or solvers under test.

use locomotion::spatial::{BaseKind, ChainSpec, JointKind, JointSpec, KinematicChain, LinkSpec, OriginSpec};
use locomotion::wblc::{QpProblem, Task};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Pendulum `ẍ = ω²(x − pivot)` integrated with fixed-step RK4.
#[derive(Clone, Copy)]
pub struct Pendulum {
    pub omega: f64,
    pub pivot: f64,
}

impl Pendulum {
    fn deriv(&self, s: [f64; 2]) -> [f64; 2] {
        [s[1], self.omega * self.omega * (s[0] - self.pivot)]
    }

    pub fn rk4(&self, s: [f64; 2], h: f64) -> [f64; 2] {
        let add = |a: [f64; 2], k: [f64; 2], c: f64| [a[0] + c * k[0], a[1] + c * k[1]];
        let k1 = self.deriv(s);
        let k2 = self.deriv(add(s, k1, h / 2.0));
        let k3 = self.deriv(add(s, k2, h / 2.0));
        let k4 = self.deriv(add(s, k3, h));
        [
            s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    /// State after `t` seconds: whole steps of `dt`, then one partial step.
    pub fn advance(&self, s: [f64; 2], t: f64, dt: f64) -> [f64; 2] {
        let n = (t / dt).floor() as usize;
        let mut s = s;
        for _ in 0..n {
            s = self.rk4(s, dt);
        }
        let rest = t - n as f64 * dt;
        if rest > 0.0 {
            s = self.rk4(s, rest);
        }
        s
    }

    /// First time in `(0, t_max]` where `g` changes sign along the
    /// trajectory, scanned on the `dt` grid and refined by bisection.
    pub fn first_crossing(
        &self,
        s0: [f64; 2],
        dt: f64,
        t_max: f64,
        g: impl Fn([f64; 2]) -> f64,
    ) -> Option<f64> {
        let g0 = g(s0);
        let mut s = s0;
        let mut t = 0.0;
        while t < t_max {
            let next = self.rk4(s, dt);
            if g(next).signum() != g0.signum() {
                let (mut lo, mut hi) = (0.0, dt);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if g(self.rk4(s, mid)).signum() == g0.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(t + 0.5 * (lo + hi));
            }
            s = next;
            t += dt;
        }
        None
    }
}

/// Residual norm of each task at the lexicographic least-squares optimum:
/// every stage minimizes its own error over the minimizers of the stages
/// above it, computed from an eigendecomposition of the reduced normal
/// matrix.
pub fn lexicographic_residuals(tasks: &[Task]) -> Vec<f64> {
    let n = tasks[0].jacobian.ncols();
    let mut x = DVector::zeros(n);
    let mut z = DMatrix::identity(n, n);
    let mut out = Vec::new();
    for t in tasks {
        let r = t.reference() - &t.jacobian * &x;
        if z.ncols() > 0 {
            let m = &t.jacobian * &z;
            let eig = (m.transpose() * &m).symmetric_eigen();
            let cut = 1e-12 * t.jacobian.norm_squared();
            let kept: Vec<usize> = (0..z.ncols()).filter(|&i| eig.eigenvalues[i] > cut).collect();
            let solve = |rhs: &DVector<f64>| {
                let mut y = DVector::zeros(z.ncols());
                for &i in &kept {
                    let v = eig.eigenvectors.column(i);
                    y += v * (v.dot(&(m.transpose() * rhs)) / eig.eigenvalues[i]);
                }
                y
            };
            // The normal equations square the conditioning; a few rounds of
            // refinement on the true residual recover full accuracy.
            let mut y = solve(&r);
            for _ in 0..3 {
                y += solve(&(&r - &m * &y));
            }
            let kernel: Vec<DVector<f64>> = (0..z.ncols())
                .filter(|i| !kept.contains(i))
                .map(|i| eig.eigenvectors.column(i).into_owned())
                .collect();
            x += &z * y;
            z = if kernel.is_empty() {
                DMatrix::zeros(n, 0)
            } else {
                &z * DMatrix::from_columns(&kernel)
            };
        }
        out.push((&t.jacobian * &x - t.reference()).norm());
    }
    out
}

/// Minimum over every active set: solve the equality-constrained KKT system,
/// keep primal- and dual-feasible points, take the lowest objective.
pub fn exhaustive_qp(p: &QpProblem) -> Option<(DVector<f64>, f64)> {
    let n = p.dim();
    let mi = p.ineq_rhs.len();
    let me = p.eq_rhs.len();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1 << mi) {
        let rows: Vec<usize> = (0..mi).filter(|i| mask & (1 << i) != 0).collect();
        let m = me + rows.len();
        if m > n {
            continue;
        }
        let mut c = DMatrix::zeros(m, n);
        let mut d = DVector::zeros(m);
        c.view_mut((0, 0), (me, n)).copy_from(&p.eq_matrix);
        d.rows_mut(0, me).copy_from(&p.eq_rhs);
        for (k, &i) in rows.iter().enumerate() {
            c.row_mut(me + k).copy_from(&p.ineq_matrix.row(i));
            d[me + k] = p.ineq_rhs[i];
        }
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
        kkt.view_mut((0, n), (n, m)).copy_from(&(-c.transpose()));
        kkt.view_mut((n, 0), (m, n)).copy_from(&c);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-&p.linear));
        rhs.rows_mut(n, m).copy_from(&d);
        let lu = kkt.full_piv_lu();
        if !lu.is_invertible() {
            continue;
        }
        let Some(sol) = lu.solve(&rhs) else { continue };
        if !sol.iter().all(|v| v.is_finite() && v.abs() < 1e12) {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let lam = sol.rows(n, m);
        let feasible = (&p.ineq_matrix * &x - &p.ineq_rhs).iter().all(|&s| s > -1e-9)
            && (me..m).all(|k| lam[k] > -1e-9);
        if feasible {
            let f = p.objective(&x);
            if best.as_ref().is_none_or(|(_, b)| f < *b) {
                best = Some((x, f));
            }
        }
    }
    best
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn rand_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn rand_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = rand_matrix(rng, n, n);
    &m * m.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Random tree of `n` links: random parents, joint axes, origins, masses and
/// positive-definite inertias. The root has no joint on a moving base.
pub fn random_chain(rng: &mut ChaCha8Rng, base: BaseKind, n: usize) -> ChainSpec {
    let mut links = Vec::new();
    for i in 0..n {
        let parent = (i > 0).then(|| rng.random_range(0..i));
        let joint = if i == 0 && base != BaseKind::Fixed {
            None
        } else {
            let axis = [uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)];
            let kind = if rng.random_bool(0.8) { JointKind::Revolute } else { JointKind::Prismatic };
            Some(JointSpec { kind, axis })
        };
        let a = Matrix3::from_fn(|_, _| rng.random_range(-0.3..0.3));
        let inertia = a * a.transpose() + Matrix3::identity() * 0.02;
        let mut v3 = |s: f64| [uniform(rng, -s, s), uniform(rng, -s, s), uniform(rng, -s, s)];
        let xyz = v3(0.5);
        let rpy = v3(1.0);
        let com = v3(0.2);
        links.push(LinkSpec {
            name: format!("l{i}"),
            parent,
            joint,
            origin: OriginSpec { xyz, rpy },
            mass: rng.random_range(0.5..3.0),
            com,
            inertia: std::array::from_fn(|r| std::array::from_fn(|c| inertia[(r, c)])),
        });
    }
    ChainSpec { base, links }
}

/// Random configuration; the floating-base pitch stays clear of its
/// singularity.
pub fn random_configuration(rng: &mut ChaCha8Rng, chain: &KinematicChain) -> DVector<f64> {
    DVector::from_fn(chain.dof(), |i, _| match (chain.base(), i) {
        (BaseKind::Floating, 0..=2) => uniform(rng, -1.0, 1.0),
        (BaseKind::Floating, 4) => uniform(rng, -0.8, 0.8),
        _ => uniform(rng, -3.0, 3.0),
    })
}

/// Derivative of `f` along the direction `v`: Richardson-extrapolated
/// central differences, fourth-order accurate in `h`.
pub fn directional_derivative(
    f: impl Fn(&DVector<f64>) -> DMatrix<f64>,
    q: &DVector<f64>,
    v: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let central = |h: f64| (f(&(q + v * h)) - f(&(q - v * h))) / (2.0 * h);
    (central(h / 2.0) * 4.0 - central(h)) / 3.0
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}
