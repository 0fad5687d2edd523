//! Shipped synthetic skeletons with fixed pose sets.
//!
//! Both skeletons are multi-DOF files normalized on load. Each ships 100
//! poses drawn by [`sample_poses`] from a fixed seed and frozen as JSON, so
//! the pose files can be regenerated and checked.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kinematics::schema::{poses_from_json, raw_skeleton_from_json};
use crate::kinematics::{normalize, JointLimits, Normalization, ParamVector, Skeleton};

const MINI_HAND: &str = include_str!("../../assets/mini_hand.json");
const MINI_HAND_POSES: &str = include_str!("../../assets/mini_hand_poses.json");
const MINI_BODY: &str = include_str!("../../assets/mini_body.json");
const MINI_BODY_POSES: &str = include_str!("../../assets/mini_body_poses.json");

/// Number of poses shipped per asset.
pub const POSES_PER_ASSET: usize = 100;

/// Fraction of each joint interval, centered, that sampled poses stay within.
const POSE_INTERVAL_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Asset {
    /// 17 revolute joints: 3 at the wrist, 3 in the thumb, 3 in each of the
    /// index, middle and ring fingers and 2 in the little finger. Meters.
    MiniHand,
    /// 21 revolute joints: 3 each at the pelvis, spine and hips, 2 per
    /// shoulder, 1 per elbow and knee and 1 at the neck. Meters.
    MiniBody,
}

impl Asset {
    pub const ALL: [Asset; 2] = [Asset::MiniHand, Asset::MiniBody];

    pub fn name(self) -> &'static str {
        match self {
            Asset::MiniHand => "mini-hand",
            Asset::MiniBody => "mini-body",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    /// The multi-DOF skeleton file.
    pub fn raw_json(self) -> &'static str {
        match self {
            Asset::MiniHand => MINI_HAND,
            Asset::MiniBody => MINI_BODY,
        }
    }

    pub fn normalization(self) -> Normalization {
        normalize(&raw_skeleton_from_json(self.raw_json()).expect("shipped skeleton parses"))
            .expect("shipped skeleton normalizes")
    }

    pub fn skeleton(self) -> Skeleton {
        self.normalization().skeleton
    }

    /// The shipped poses, as parameter vectors of [`Asset::skeleton`].
    pub fn poses(self) -> Vec<ParamVector> {
        let text = match self {
            Asset::MiniHand => MINI_HAND_POSES,
            Asset::MiniBody => MINI_BODY_POSES,
        };
        poses_from_json(text).expect("shipped poses parse")
    }

    /// Default noise radius: 10 mm for the hand, 100 mm for the body.
    pub fn noise_radius(self) -> f64 {
        match self {
            Asset::MiniHand => 0.01,
            Asset::MiniBody => 0.1,
        }
    }

    /// Half-width of the root translation cube used when sampling poses.
    pub fn translation_half_width(self) -> f64 {
        match self {
            Asset::MiniHand => 0.05,
            Asset::MiniBody => 0.5,
        }
    }

    /// Seed the shipped poses were drawn from.
    pub fn pose_seed(self) -> u64 {
        match self {
            Asset::MiniHand => 1701,
            Asset::MiniBody => 1702,
        }
    }
}

impl std::str::FromStr for Asset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s).ok_or_else(|| Error::Config(format!("unknown asset `{s}`")))
    }
}

/// Poses with angles uniform in the central 90% of each joint interval and
/// the root translation uniform in a cube of half-width `half_width`.
pub fn sample_poses(skeleton: &Skeleton, count: usize, half_width: f64, seed: u64) -> Vec<ParamVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let translation = Vector3::from_fn(|_, _| rng.random_range(-half_width..=half_width));
            let angles = skeleton
                .joints()
                .iter()
                .map(|j| match j.limits {
                    JointLimits::Fixed => 0.0,
                    JointLimits::Range { lower, upper } => {
                        let margin = 0.5 * (1.0 - POSE_INTERVAL_FRACTION) * (upper - lower);
                        rng.random_range(lower + margin..=upper - margin)
                    }
                })
                .collect();
            ParamVector::new(translation, angles)
        })
        .collect()
}
