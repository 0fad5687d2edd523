//! Synthetic observations: which joints are seen, and noise on their targets.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, Observation, ParamVector, Skeleton};

/// Which joints are observed in a synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationMode {
    All,
    /// Leaves, the root joint and the last joint of the root cluster.
    EndEffectorsPlusRoot,
}

impl std::str::FromStr for ObservationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "end-effectors-plus-root" | "end" => Ok(Self::EndEffectorsPlusRoot),
            other => Err(Error::Config(format!("unknown observation mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for ObservationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::EndEffectorsPlusRoot => "end-effectors-plus-root",
        })
    }
}

/// Last joint of the zero-bone single-child run starting at the root: the
/// joint that carries the root's full orientation after normalization.
pub fn root_cluster_end(skeleton: &Skeleton) -> usize {
    let mut cur = 0;
    while let [only] = skeleton.children(cur) {
        if skeleton.joints()[*only].bone != Vector3::zeros() {
            break;
        }
        cur = *only;
    }
    cur
}

/// Sorted 1-based ids of the joints observed under `mode`.
pub fn observed_joints(skeleton: &Skeleton, mode: ObservationMode) -> Vec<usize> {
    match mode {
        ObservationMode::All => (1..=skeleton.len()).collect(),
        ObservationMode::EndEffectorsPlusRoot => {
            let mut ids: Vec<usize> = skeleton.leaves().iter().map(|l| l + 1).collect();
            ids.push(1);
            ids.push(root_cluster_end(skeleton) + 1);
            ids.sort_unstable();
            ids.dedup();
            ids
        }
    }
}

/// Targets at the forward-kinematics positions of the listed joints.
pub fn observe(skeleton: &Skeleton, theta: &ParamVector, ids: &[usize]) -> Result<Observation> {
    if let Some(&bad) = ids.iter().find(|&&id| id == 0 || id > skeleton.len()) {
        return Err(Error::InvalidObservation(format!("joint id {bad} out of range 1..={}", skeleton.len())));
    }
    let x = forward_kinematics(skeleton, theta)?;
    Observation::from_pairs(ids.iter().map(|&id| (id, x[id - 1])))
}

/// Noise-free observation of `theta` under `mode`.
pub fn generate_observations(skeleton: &Skeleton, theta: &ParamVector, mode: ObservationMode) -> Result<Observation> {
    observe(skeleton, theta, &observed_joints(skeleton, mode))
}

/// Offsets every target by `r * d` with `d` uniform on the unit sphere and
/// `r` uniform on `[0, r_max]`, independently per joint.
pub fn add_noise_rng<R: Rng + ?Sized>(obs: &Observation, r_max: f64, rng: &mut R) -> Result<Observation> {
    if !(r_max >= 0.0 && r_max.is_finite()) {
        return Err(Error::Config(format!("noise radius must be non-negative, got {r_max}")));
    }
    let targets: Vec<Vector3<f64>> = obs
        .entries()
        .iter()
        .map(|e| {
            let d = Vector3::from(UnitSphere.sample(rng));
            let r = rng.random_range(0.0..=r_max);
            e.target + d * r
        })
        .collect();
    Ok(obs.with_targets(targets))
}

/// [`add_noise_rng`] seeded deterministically.
pub fn add_noise(obs: &Observation, r_max: f64, seed: u64) -> Result<Observation> {
    add_noise_rng(obs, r_max, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{normalize_skeleton, Joint, RawDof, RawJoint, RawSkeleton};
    use crate::JointLimits;

    fn two_chain() -> Skeleton {
        Skeleton::new(
            "two",
            vec![
                Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -1.0, 1.0),
                Joint::revolute(2, 1, Vector3::z(), Vector3::x(), -1.0, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn two_joint_chain_modes() {
        let s = two_chain();
        let theta = ParamVector::zeros(2);
        assert_eq!(generate_observations(&s, &theta, ObservationMode::All).unwrap().len(), 2);
        assert_eq!(observed_joints(&s, ObservationMode::EndEffectorsPlusRoot), vec![1, 2]);
    }

    #[test]
    fn root_cluster_of_normalized_ball_joint() {
        let dof = |axis| RawDof { axis, limits: JointLimits::range(-1.0, 1.0) };
        let raw = RawSkeleton {
            name: "ball".into(),
            joints: vec![
                RawJoint {
                    id: 1,
                    parent: 0,
                    bone: Vector3::zeros(),
                    dofs: vec![dof(Vector3::x()), dof(Vector3::y()), dof(Vector3::z())],
                    name: "root".into(),
                },
                RawJoint { id: 2, parent: 1, bone: Vector3::y(), dofs: vec![dof(Vector3::x())], name: "a".into() },
                RawJoint { id: 3, parent: 2, bone: Vector3::y(), dofs: vec![], name: "tip".into() },
                RawJoint { id: 4, parent: 1, bone: Vector3::x(), dofs: vec![], name: "side".into() },
            ],
        };
        let s = normalize_skeleton(&raw).unwrap();
        assert_eq!(root_cluster_end(&s), 2);
        let ids = observed_joints(&s, ObservationMode::EndEffectorsPlusRoot);
        let leaves: Vec<usize> = s.leaves().iter().map(|l| l + 1).collect();
        assert_eq!(ids, [vec![1, 3], leaves].concat());
    }

    #[test]
    fn zero_radius_is_identity() {
        let s = two_chain();
        let obs = generate_observations(&s, &ParamVector::zeros(2), ObservationMode::All).unwrap();
        assert_eq!(add_noise(&obs, 0.0, 5).unwrap(), obs);
        assert!(add_noise(&obs, -1.0, 5).is_err());
    }

    #[test]
    fn offsets_are_bounded_and_seeded() {
        let s = two_chain();
        let obs = generate_observations(&s, &ParamVector::zeros(2), ObservationMode::All).unwrap();
        for seed in 0..200 {
            let noisy = add_noise(&obs, 0.01, seed).unwrap();
            for (a, b) in noisy.entries().iter().zip(obs.entries()) {
                assert!((a.target - b.target).norm() <= 0.01 + 1e-15);
            }
        }
        assert_eq!(add_noise(&obs, 0.01, 9).unwrap(), add_noise(&obs, 0.01, 9).unwrap());
    }
}
