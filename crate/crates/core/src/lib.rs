//! Bipedal locomotion planning and control.
//!
//! * [`lipm`]: linear inverted pendulum closed forms and the phase-space step planner.
//! * [`policy`]: radial-basis value and policy approximators over the apex state.
//! * [`checkpoint`]: binary storage of a trained critic/actor pair.
//! * [`learning`]: eligibility-trace actor-critic training of the step policy.
//! * [`spatial`]: rigid-body kinematics, dynamics and centroidal momentum.
//! * [`wblc`]: prioritized whole-body control with a reaction-force QP.
//! * [`sim`]: closed-loop walking, replanning, swing trajectories and test fixtures.

pub mod checkpoint;
pub mod learning;
pub mod lipm;
pub mod policy;
pub mod sim;
pub mod spatial;
pub mod wblc;
