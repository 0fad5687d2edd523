//! Inverse kinematics on kinematic trees by semidefinite relaxation.
//!
//! The crate compiles an IK instance (a one-DOF [`Skeleton`] plus observed joint
//! positions) into a block-diagonal semidefinite program, solves it with an
//! embedded primal-dual interior-point method, rounds the relaxed rotations
//! back onto SO(3) and refines the extracted angles with a local trust-region
//! solver. Local-only baselines and an experiment harness are included.

pub mod error;
pub mod kinematics;
pub mod local_ik;
pub mod sdp;
pub mod conic;
pub mod rounding;
pub mod harness;

pub use error::{Error, Result};
pub use kinematics::{Joint, JointLimits, Observation, ObservedJoint, ParamVector, Skeleton};
