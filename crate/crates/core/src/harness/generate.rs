//! Random skeletons and poses for tests and experiments.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::kinematics::{Joint, ParamVector, Skeleton};
use crate::local_ik::random_init_with;

/// Bone lengths of generated skeletons are drawn from this range.
const BONE_LENGTH: std::ops::Range<f64> = 0.2..0.4;

fn unit<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    Vector3::from(UnitSphere.sample(rng))
}

fn random_revolute<R: Rng + ?Sized>(id: usize, parent: usize, bone: Vector3<f64>, rng: &mut R) -> Joint {
    let lower = rng.random_range(-2.5..-0.3);
    let upper = rng.random_range(0.3..2.5);
    Joint::revolute(id, parent, unit(rng), bone, lower, upper)
}

fn random_bone<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    unit(rng) * rng.random_range(BONE_LENGTH)
}

/// Serial chain of `revolute` joints with random axes, limits and bones,
/// ending in a fixed end-effector. The root joint has a zero bone.
pub fn chain<R: Rng + ?Sized>(revolute: usize, rng: &mut R) -> Skeleton {
    assert!(revolute >= 1, "a chain needs at least one revolute joint");
    let mut joints = Vec::with_capacity(revolute + 1);
    for id in 1..=revolute {
        let bone = if id == 1 { Vector3::zeros() } else { random_bone(rng) };
        joints.push(random_revolute(id, id - 1, bone, rng));
    }
    joints.push(Joint::fixed(revolute + 1, revolute, random_bone(rng)));
    Skeleton::new(format!("chain-{revolute}"), joints).expect("generated chains are valid")
}

/// Root revolute joint with `arms` chains of `arm_len` revolute joints, each
/// ending in a fixed end-effector.
pub fn star<R: Rng + ?Sized>(arms: usize, arm_len: usize, rng: &mut R) -> Skeleton {
    let mut joints = vec![random_revolute(1, 0, Vector3::zeros(), rng)];
    for _ in 0..arms {
        let mut parent = 1;
        for _ in 0..arm_len {
            let id = joints.len() + 1;
            joints.push(random_revolute(id, parent, random_bone(rng), rng));
            parent = id;
        }
        let id = joints.len() + 1;
        joints.push(Joint::fixed(id, parent, random_bone(rng)));
    }
    Skeleton::new(format!("star-{arms}x{arm_len}"), joints).expect("generated stars are valid")
}

/// Random tree of `revolute` revolute joints (each parent drawn uniformly
/// among earlier joints) with a fixed end-effector under every leaf.
pub fn random_tree<R: Rng + ?Sized>(revolute: usize, rng: &mut R) -> Skeleton {
    assert!(revolute >= 1, "a tree needs at least one revolute joint");
    let mut joints = vec![random_revolute(1, 0, Vector3::zeros(), rng)];
    for id in 2..=revolute {
        let parent = rng.random_range(1..id);
        joints.push(random_revolute(id, parent, random_bone(rng), rng));
    }
    let mut has_child = vec![false; revolute + 1];
    for j in &joints {
        has_child[j.parent] = true;
    }
    for leaf in (1..=revolute).filter(|&k| !has_child[k]) {
        let id = joints.len() + 1;
        joints.push(Joint::fixed(id, leaf, random_bone(rng)));
    }
    Skeleton::new(format!("tree-{revolute}"), joints).expect("generated trees are valid")
}

/// Pose with angles uniform within the joint limits and the root translation
/// uniform in a centered cube of half-width `half_width`.
pub fn random_pose<R: Rng + ?Sized>(skeleton: &Skeleton, half_width: f64, rng: &mut R) -> ParamVector {
    random_init_with(skeleton, half_width, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_have_expected_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = chain(6, &mut rng);
        assert_eq!((c.len(), c.revolute_count(), c.leaves()), (7, 6, vec![6]));
        let s = star(3, 2, &mut rng);
        assert_eq!((s.len(), s.revolute_count(), s.leaves().len()), (10, 7, 3));
        let t = random_tree(8, &mut rng);
        assert_eq!(t.revolute_count(), 8);
        assert!(t.leaves().iter().all(|&l| t.joints()[l].is_fixed()));
    }

    #[test]
    fn poses_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let s = random_tree(5, &mut rng);
            let p = random_pose(&s, 0.5, &mut rng);
            assert!(p.respects_limits(&s));
            assert!(p.translation.amax() <= 0.5);
        }
    }
}
