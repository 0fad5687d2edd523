//! Kinematic skeletons, forward kinematics and one-DOF normalization.

mod forward;
mod normalize;
mod rotation;
pub mod schema;
mod skeleton;

pub use forward::{
    fk_jacobian, forward_kinematics, forward_kinematics_product, global_rotations, joint_rotation,
    local_transform, pose, Pose,
};
pub(crate) use forward::jacobian_from_pose;
pub use normalize::{
    normalize, normalize_skeleton, JointSource, Normalization, RawDof, RawJoint, RawSkeleton,
};
pub use rotation::{axis_frame, rodrigues, skew};
pub use skeleton::{
    interval_distance, Joint, JointLimits, Observation, ObservedJoint, ParamVector, Skeleton,
};
