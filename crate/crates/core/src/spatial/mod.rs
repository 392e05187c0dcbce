//! Rigid-body kinematics and dynamics on tree-structured chains.

mod centroidal;
mod chain;
mod dynamics;
mod transform;

pub use centroidal::CentroidalModel;
pub use chain::{
    planar_arm_spec, BaseKind, Body, ChainError, ChainKinematics, ChainSpec, JointSpec,
    KinematicChain, LinkSpec, OriginSpec,
};
pub use dynamics::JointSpaceDynamics;
pub use transform::{
    adjoint, lie_bracket, skew, spatial_inertia, Joint, JointKind, SpatialTransform,
    SpatialVelocity, Twist,
};
