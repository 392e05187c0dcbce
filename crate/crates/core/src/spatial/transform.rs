//! Rigid transforms, adjoints and spatial inertia. Twists are ordered
//! `[ω; v]` and wrenches `[n; f]`.

use nalgebra::{Matrix3, Matrix4, Matrix6, Rotation3, Unit, Vector3, Vector6};
use serde::{Deserialize, Serialize};

pub type Twist = Vector6<f64>;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpatialVelocity {
    pub angular: Vector3<f64>,
    pub linear: Vector3<f64>,
}

impl SpatialVelocity {
    pub fn to_vector(&self) -> Twist {
        Twist::new(
            self.angular.x,
            self.angular.y,
            self.angular.z,
            self.linear.x,
            self.linear.y,
            self.linear.z,
        )
    }

    pub fn from_vector(v: &Twist) -> Self {
        SpatialVelocity {
            angular: v.fixed_rows::<3>(0).into(),
            linear: v.fixed_rows::<3>(3).into(),
        }
    }
}

/// Pose of a child frame in its parent: `p_parent = R p_child + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for SpatialTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SpatialTransform {
    pub fn identity() -> Self {
        SpatialTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        SpatialTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        SpatialTransform {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn from_rotation(r: Matrix3<f64>) -> Self {
        SpatialTransform {
            rotation: r,
            translation: Vector3::zeros(),
        }
    }

    /// Roll about x, then pitch about y, then yaw about z (fixed axes).
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        let r = Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]);
        SpatialTransform {
            rotation: *r.matrix(),
            translation: Vector3::from(xyz),
        }
    }

    pub fn compose(&self, other: &SpatialTransform) -> SpatialTransform {
        SpatialTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> SpatialTransform {
        let rt = self.rotation.transpose();
        SpatialTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn adjoint(&self) -> Matrix6<f64> {
        adjoint(self)
    }
}

impl std::ops::Mul for SpatialTransform {
    type Output = SpatialTransform;
    fn mul(self, rhs: SpatialTransform) -> SpatialTransform {
        self.compose(&rhs)
    }
}

/// Maps a twist expressed in the child frame to the parent frame.
pub fn adjoint(t: &SpatialTransform) -> Matrix6<f64> {
    let r = t.rotation;
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    m.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(skew(&t.translation) * r));
    m
}

/// Small adjoint: `ad_V W` is the Lie bracket `[V, W]`.
pub fn lie_bracket(v: &Twist) -> Matrix6<f64> {
    let w = skew(&v.fixed_rows::<3>(0).into());
    let u = skew(&v.fixed_rows::<3>(3).into());
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&u);
    m
}

/// Spatial inertia about the frame origin of a body with mass `m`, center of
/// mass `com` and rotational inertia `inertia` about the center of mass.
pub fn spatial_inertia(mass: f64, com: &Vector3<f64>, inertia: &Matrix3<f64>) -> Matrix6<f64> {
    let c = skew(com);
    let mut g = Matrix6::zeros();
    g.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(inertia - mass * c * c));
    g.fixed_view_mut::<3, 3>(0, 3).copy_from(&(mass * c));
    g.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-mass * c));
    g.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(mass * Matrix3::identity()));
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// Single-axis joint with its screw axis in the joint frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    pub axis: Unit<Vector3<f64>>,
}

impl Joint {
    pub fn revolute(axis: Vector3<f64>) -> Self {
        Joint {
            kind: JointKind::Revolute,
            axis: Unit::new_normalize(axis),
        }
    }

    pub fn prismatic(axis: Vector3<f64>) -> Self {
        Joint {
            kind: JointKind::Prismatic,
            axis: Unit::new_normalize(axis),
        }
    }

    pub fn screw(&self) -> Twist {
        let a = self.axis.into_inner();
        match self.kind {
            JointKind::Revolute => Twist::new(a.x, a.y, a.z, 0.0, 0.0, 0.0),
            JointKind::Prismatic => Twist::new(0.0, 0.0, 0.0, a.x, a.y, a.z),
        }
    }

    /// `exp(S q)`.
    pub fn motion(&self, q: f64) -> SpatialTransform {
        match self.kind {
            JointKind::Revolute => {
                SpatialTransform::from_rotation(*Rotation3::from_axis_angle(&self.axis, q).matrix())
            }
            JointKind::Prismatic => SpatialTransform::from_translation(self.axis.into_inner() * q),
        }
    }
}
