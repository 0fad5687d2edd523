//! Convex relaxation of the IK problem as a block-diagonal conic program.

mod build;
mod constraints;
mod embed;
mod layout;
mod program;

pub use build::{build_sdp, rotation_value};
pub use constraints::{
    canonical_constraints, canonical_pattern, conjugation_constraints, epigraph_block, joint_limit_constraints,
    lifted_rotation_constraints, multiplication_block, HalfSpace, FREE_WIDTH,
};
pub use embed::{embed_ground_truth, Embedding, ResidualReport};
pub use layout::{lift_index, vec_index, JointVars, LiftedRotation, RevoluteVars, RotationRef, VariableLayout, LIFT_LEN};
pub use program::{Affine, BlockCensus, BlockKind, ConeBlock, ConicProgram, LinearEquality};
