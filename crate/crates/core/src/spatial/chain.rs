//! Tree-structured rigid-body chains with single-axis joints.
//!
//! Chains are loaded from JSON:
//!
//! ```json
//! {
//!   "base": "fixed",
//!   "links": [
//!     {
//!       "name": "upper",
//!       "parent": null,
//!       "joint": { "type": "revolute", "axis": [0, 0, 1] },
//!       "origin": { "xyz": [0, 0, 0], "rpy": [0, 0, 0] },
//!       "mass": 1.0,
//!       "com": [0.5, 0, 0],
//!       "inertia": [[0.01, 0, 0], [0, 0.01, 0], [0, 0, 0.01]]
//!     }
//!   ]
//! }
//! ```
//!
//! * `base`: `fixed`, `floating` (x, y, z slides then yaw, pitch, roll) or
//!   `planar` (x and z slides then pitch about y).
//! * `parent`: index of an earlier link, or `null` for the root.
//! * `joint`: the joint between the parent and this link. Omitted for the root
//!   of a floating or planar chain, which is carried by the virtual joints.
//! * `origin`: pose of the joint frame in the parent link frame, translation
//!   in meters and fixed-axis roll/pitch/yaw in radians.
//! * `mass` (kg), `com` (m, link frame), `inertia` (kg m², about the COM, link
//!   axes). Inertia must be symmetric positive definite.
//!
//! Generalized coordinates put the virtual base joints first, then one
//! coordinate per link in file order.

use super::transform::{
    adjoint, lie_bracket, spatial_inertia, Joint, JointKind, SpatialTransform, Twist,
};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("chain description could not be parsed: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("expected a vector of length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("no link named `{0}`")]
    UnknownLink(String),
    #[error("mass matrix is numerically singular")]
    SingularMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    #[default]
    Fixed,
    Floating,
    Planar,
}

impl BaseKind {
    pub fn virtual_dofs(self) -> usize {
        match self {
            BaseKind::Fixed => 0,
            BaseKind::Floating => 6,
            BaseKind::Planar => 3,
        }
    }

    fn virtual_joints(self) -> Vec<(&'static str, Joint)> {
        let (x, y, z) = (Vector3::x(), Vector3::y(), Vector3::z());
        match self {
            BaseKind::Fixed => vec![],
            BaseKind::Floating => vec![
                ("base_x", Joint::prismatic(x)),
                ("base_y", Joint::prismatic(y)),
                ("base_z", Joint::prismatic(z)),
                ("base_yaw", Joint::revolute(z)),
                ("base_pitch", Joint::revolute(y)),
                ("base_roll", Joint::revolute(x)),
            ],
            BaseKind::Planar => vec![
                ("base_x", Joint::prismatic(x)),
                ("base_z", Joint::prismatic(z)),
                ("base_pitch", Joint::revolute(y)),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OriginSpec {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    #[serde(rename = "type")]
    pub kind: JointKind,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub name: String,
    pub parent: Option<usize>,
    #[serde(default)]
    pub joint: Option<JointSpec>,
    #[serde(default)]
    pub origin: OriginSpec,
    pub mass: f64,
    #[serde(default)]
    pub com: [f64; 3],
    pub inertia: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(default)]
    pub base: BaseKind,
    pub links: Vec<LinkSpec>,
}

/// One body per degree of freedom. Virtual base bodies are massless.
#[derive(Debug, Clone)]
pub struct Body {
    pub name: String,
    pub parent: Option<usize>,
    pub joint: Joint,
    /// Joint frame in the parent body frame at zero displacement.
    pub origin: SpatialTransform,
    pub mass: f64,
    pub com: Vector3<f64>,
    pub inertia: Matrix3<f64>,
    pub is_virtual: bool,
    spatial: Matrix6<f64>,
}

impl Body {
    /// Spatial inertia about the body frame origin.
    pub fn spatial_inertia(&self) -> &Matrix6<f64> {
        &self.spatial
    }
}

/// World-frame poses and body-frame twists of every body.
#[derive(Debug, Clone)]
pub struct ChainKinematics {
    pub world: Vec<SpatialTransform>,
    pub twist: Vec<Twist>,
}

#[derive(Debug, Clone)]
pub struct KinematicChain {
    bodies: Vec<Body>,
    base: BaseKind,
}

fn validate_inertia(name: &str, mass: f64, inertia: &Matrix3<f64>) -> Result<(), ChainError> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(ChainError::InvalidChain(format!(
            "link `{name}` must have positive mass"
        )));
    }
    if (inertia - inertia.transpose()).amax() > 1e-12 * inertia.amax().max(1.0) {
        return Err(ChainError::InvalidChain(format!(
            "link `{name}` inertia is not symmetric"
        )));
    }
    if inertia.cholesky().is_none() {
        return Err(ChainError::InvalidChain(format!(
            "link `{name}` inertia is not positive definite"
        )));
    }
    Ok(())
}

impl KinematicChain {
    pub fn from_spec(spec: &ChainSpec) -> Result<Self, ChainError> {
        if spec.links.is_empty() {
            return Err(ChainError::InvalidChain("chain has no links".into()));
        }
        let mut bodies = Vec::new();
        let virt = spec.base.virtual_joints();
        let nv = virt.len();
        for (i, (name, joint)) in virt.iter().enumerate() {
            if i + 1 == nv {
                break; // the last virtual joint moves the root link itself
            }
            bodies.push(Body {
                name: (*name).to_string(),
                parent: i.checked_sub(1),
                joint: *joint,
                origin: SpatialTransform::identity(),
                mass: 0.0,
                com: Vector3::zeros(),
                inertia: Matrix3::zeros(),
                is_virtual: true,
                spatial: Matrix6::zeros(),
            });
        }
        let shift = nv.saturating_sub(1);
        let mut seen = std::collections::HashSet::new();
        for (k, l) in spec.links.iter().enumerate() {
            if !seen.insert(l.name.as_str()) {
                return Err(ChainError::InvalidChain(format!(
                    "duplicate link name `{}`",
                    l.name
                )));
            }
            let inertia = Matrix3::from_fn(|r, c| l.inertia[r][c]);
            validate_inertia(&l.name, l.mass, &inertia)?;
            let com = Vector3::from(l.com);
            let origin = SpatialTransform::from_xyz_rpy(l.origin.xyz, l.origin.rpy);
            if !(l
                .origin
                .xyz
                .iter()
                .chain(&l.origin.rpy)
                .chain(&l.com)
                .all(|v| v.is_finite()))
            {
                return Err(ChainError::InvalidChain(format!(
                    "link `{}` has non-finite geometry",
                    l.name
                )));
            }
            let (parent, joint, is_virtual) = match (l.parent, k, spec.base) {
                (None, 0, BaseKind::Fixed) => {
                    let j = l.joint.ok_or_else(|| {
                        ChainError::InvalidChain("root of a fixed chain needs a joint".into())
                    })?;
                    (None, joint_from_spec(&l.name, &j)?, false)
                }
                (None, 0, base) => {
                    if l.joint.is_some() {
                        return Err(ChainError::InvalidChain(
                            "root of a floating chain must not declare a joint".into(),
                        ));
                    }
                    (shift.checked_sub(1), base.virtual_joints()[nv - 1].1, true)
                }
                (None, _, _) => {
                    return Err(ChainError::InvalidChain(format!(
                        "link `{}` has no parent; only link 0 may be root",
                        l.name
                    )))
                }
                (Some(p), _, _) if p >= k => {
                    return Err(ChainError::InvalidChain(format!(
                        "link `{}` has parent {p}, which is not an earlier link",
                        l.name
                    )))
                }
                (Some(p), _, _) => {
                    let j = l.joint.ok_or_else(|| {
                        ChainError::InvalidChain(format!("link `{}` needs a joint", l.name))
                    })?;
                    (Some(p + shift), joint_from_spec(&l.name, &j)?, false)
                }
            };
            if k == 0 && l.parent.is_some() {
                return Err(ChainError::InvalidChain("link 0 must be the root".into()));
            }
            bodies.push(Body {
                name: l.name.clone(),
                parent,
                joint,
                origin,
                mass: l.mass,
                com,
                inertia,
                is_virtual,
                spatial: spatial_inertia(l.mass, &com, &inertia),
            });
        }
        Ok(KinematicChain {
            bodies,
            base: spec.base,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ChainError> {
        let spec: ChainSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn dof(&self) -> usize {
        self.bodies.len()
    }

    pub fn base(&self) -> BaseKind {
        self.base
    }

    pub fn n_virtual(&self) -> usize {
        self.base.virtual_dofs()
    }

    pub fn n_actuated(&self) -> usize {
        self.dof() - self.n_virtual()
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.mass).sum()
    }

    /// Body index of a user link name.
    pub fn link(&self, name: &str) -> Result<usize, ChainError> {
        self.bodies
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| ChainError::UnknownLink(name.to_string()))
    }

    /// Actuation selection matrix `U`, mapping generalized forces to the
    /// actuated coordinates.
    pub fn selection(&self) -> DMatrix<f64> {
        let nv = self.n_virtual();
        DMatrix::from_fn(self.n_actuated(), self.dof(), |r, c| {
            if c == r + nv {
                1.0
            } else {
                0.0
            }
        })
    }

    /// True when coordinate `j` moves body `k`.
    pub fn supports(&self, j: usize, k: usize) -> bool {
        let mut cur = Some(k);
        while let Some(c) = cur {
            if c == j {
                return true;
            }
            if c < j {
                return false;
            }
            cur = self.bodies[c].parent;
        }
        false
    }

    /// Coordinates on the path from the root to body `k`, root first.
    pub fn path(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = Some(k);
        while let Some(c) = cur {
            out.push(c);
            cur = self.bodies[c].parent;
        }
        out.reverse();
        out
    }

    pub(crate) fn check_len(&self, v: &DVector<f64>) -> Result<(), ChainError> {
        if v.len() != self.dof() {
            return Err(ChainError::ShapeMismatch {
                expected: self.dof(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Pose of body `k` relative to its parent at displacement `q`.
    pub(crate) fn local_transform(&self, k: usize, q: f64) -> SpatialTransform {
        let b = &self.bodies[k];
        b.origin * b.joint.motion(q)
    }

    pub fn forward_kinematics(
        &self,
        q: &DVector<f64>,
    ) -> Result<Vec<SpatialTransform>, ChainError> {
        self.check_len(q)?;
        let mut world: Vec<SpatialTransform> = Vec::with_capacity(self.dof());
        for k in 0..self.dof() {
            let local = self.local_transform(k, q[k]);
            let t = match self.bodies[k].parent {
                Some(p) => world[p] * local,
                None => local,
            };
            world.push(t);
        }
        Ok(world)
    }

    /// World poses and body twists.
    pub fn kinematics(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
    ) -> Result<ChainKinematics, ChainError> {
        self.check_len(qd)?;
        let world = self.forward_kinematics(q)?;
        let mut twist: Vec<Twist> = Vec::with_capacity(self.dof());
        for k in 0..self.dof() {
            let s = self.bodies[k].joint.screw() * qd[k];
            let v = match self.bodies[k].parent {
                Some(p) => {
                    let rel = self.local_transform(k, q[k]).inverse();
                    adjoint(&rel) * twist[p] + s
                }
                None => s,
            };
            twist.push(v);
        }
        Ok(ChainKinematics { world, twist })
    }

    /// World position of a point fixed in body `k`.
    pub fn point_position(
        &self,
        q: &DVector<f64>,
        k: usize,
        local: &Vector3<f64>,
    ) -> Result<Vector3<f64>, ChainError> {
        Ok(self.forward_kinematics(q)?[k].transform_point(local))
    }

    /// Body Jacobian of body `k`: maps `q̇` to the twist of body `k` in its own
    /// frame.
    pub fn body_jacobian(&self, q: &DVector<f64>, k: usize) -> Result<DMatrix<f64>, ChainError> {
        let world = self.forward_kinematics(q)?;
        Ok(self.body_jacobian_with(&world, k))
    }

    pub(crate) fn body_jacobian_with(&self, world: &[SpatialTransform], k: usize) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(6, self.dof());
        let inv = world[k].inverse();
        for i in self.path(k) {
            let col = adjoint(&(inv * world[i])) * self.bodies[i].joint.screw();
            j.fixed_view_mut::<6, 1>(0, i).copy_from(&col);
        }
        j
    }

    /// Jacobian of a point fixed in body `k`, expressed in a frame located at
    /// the point with world orientation. Rows are `[ω; v_point]`.
    pub fn point_jacobian(
        &self,
        q: &DVector<f64>,
        k: usize,
        local: &Vector3<f64>,
    ) -> Result<DMatrix<f64>, ChainError> {
        let world = self.forward_kinematics(q)?;
        Ok(self.point_jacobian_with(&world, k, local))
    }

    pub(crate) fn point_jacobian_with(
        &self,
        world: &[SpatialTransform],
        k: usize,
        local: &Vector3<f64>,
    ) -> DMatrix<f64> {
        let at_point =
            SpatialTransform::from_translation(world[k].transform_point(local)).inverse();
        let mut j = DMatrix::zeros(6, self.dof());
        for i in self.path(k) {
            let col = adjoint(&(at_point * world[i])) * self.bodies[i].joint.screw();
            j.fixed_view_mut::<6, 1>(0, i).copy_from(&col);
        }
        j
    }

    /// Linear rows of [`point_jacobian`](Self::point_jacobian).
    pub fn point_jacobian_linear(
        &self,
        q: &DVector<f64>,
        k: usize,
        local: &Vector3<f64>,
    ) -> Result<DMatrix<f64>, ChainError> {
        Ok(self.point_jacobian(q, k, local)?.rows(3, 3).into_owned())
    }

    /// Time derivative of [`point_jacobian`](Self::point_jacobian) along `q̇`.
    ///
    /// Column `i` is `Ad_{p,i} ad_{V_i} S_i − ad_{V_p} J_i`, where `V_i` is the
    /// body twist of joint frame `i` and `V_p = [0; ṗ]` is the twist of the
    /// world-aligned frame riding on the point.
    pub fn point_jacobian_dot(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        k: usize,
        local: &Vector3<f64>,
    ) -> Result<DMatrix<f64>, ChainError> {
        let kin = self.kinematics(q, qd)?;
        Ok(self.point_jacobian_dot_with(&kin, qd, k, local))
    }

    pub(crate) fn point_jacobian_dot_with(
        &self,
        kin: &ChainKinematics,
        qd: &DVector<f64>,
        k: usize,
        local: &Vector3<f64>,
    ) -> DMatrix<f64> {
        let j = self.point_jacobian_with(&kin.world, k, local);
        let pdot = (&j * qd).rows(3, 3).into_owned();
        let vp = Twist::new(0.0, 0.0, 0.0, pdot[0], pdot[1], pdot[2]);
        let ad_p = lie_bracket(&vp);
        let at_point =
            SpatialTransform::from_translation(kin.world[k].transform_point(local)).inverse();
        let mut jd = DMatrix::zeros(6, self.dof());
        for i in self.path(k) {
            let s = self.bodies[i].joint.screw();
            let moving = adjoint(&(at_point * kin.world[i])) * (lie_bracket(&kin.twist[i]) * s);
            let col = moving - ad_p * j.fixed_view::<6, 1>(0, i);
            jd.fixed_view_mut::<6, 1>(0, i).copy_from(&col);
        }
        jd
    }
}

fn joint_from_spec(name: &str, j: &JointSpec) -> Result<Joint, ChainError> {
    let a = Vector3::from(j.axis);
    if !(a.iter().all(|v| v.is_finite()) && a.norm() > 1e-9) {
        return Err(ChainError::InvalidChain(format!(
            "link `{name}` joint axis is degenerate"
        )));
    }
    Ok(match j.kind {
        JointKind::Revolute => Joint::revolute(a),
        JointKind::Prismatic => Joint::prismatic(a),
    })
}

/// A serial chain of `lengths.len()` revolute links about +z, each a uniform
/// rod along +x. Handy for planar arm fixtures.
pub fn planar_arm_spec(lengths: &[f64], masses: &[f64]) -> ChainSpec {
    let links = lengths
        .iter()
        .zip(masses)
        .enumerate()
        .map(|(i, (&l, &m))| {
            let izz = m * l * l / 12.0;
            let ixx = 1e-4 * m;
            LinkSpec {
                name: format!("link{}", i + 1),
                parent: i.checked_sub(1),
                joint: Some(JointSpec {
                    kind: JointKind::Revolute,
                    axis: [0.0, 0.0, 1.0],
                }),
                origin: OriginSpec {
                    xyz: [if i == 0 { 0.0 } else { lengths[i - 1] }, 0.0, 0.0],
                    rpy: [0.0; 3],
                },
                mass: m,
                com: [l / 2.0, 0.0, 0.0],
                inertia: [[ixx, 0.0, 0.0], [0.0, izz + ixx, 0.0], [0.0, 0.0, izz]],
            }
        })
        .collect();
    ChainSpec {
        base: BaseKind::Fixed,
        links,
    }
}
