//! Rewriting multi-DOF skeletons as chains of one-DOF joints.
//!
//! A raw joint with `k` rotational DOF becomes `k` chained one-DOF joints (one
//! fixed joint when `k == 0`). The first joint of the chain carries the raw
//! bone offset; the auxiliary joints that follow have zero bones, so the whole
//! chain sits at the raw joint's position. Raw children attach to the last
//! joint of the chain, and DOFs are applied parent-to-child in declaration
//! order.

use std::collections::HashMap;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use super::rotation::rotation_about;
use super::skeleton::{Joint, JointLimits, ParamVector, Skeleton};
use crate::error::{Error, Result};

/// Axes shorter than this cannot be renormalized.
pub const MIN_AXIS_NORM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RawDof {
    pub axis: Vector3<f64>,
    pub limits: JointLimits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawJoint {
    pub id: usize,
    pub parent: usize,
    pub bone: Vector3<f64>,
    pub dofs: Vec<RawDof>,
    pub name: String,
}

/// Skeleton whose joints may carry 0 to 3 rotational DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSkeleton {
    pub name: String,
    pub joints: Vec<RawJoint>,
}

/// Which raw joint (and which of its DOFs) a normalized joint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointSource {
    /// Position of the raw joint in `RawSkeleton::joints`.
    pub raw_index: usize,
    /// DOF index within the raw joint; `None` for a fixed joint.
    pub dof: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Normalization {
    pub skeleton: Skeleton,
    pub sources: Vec<JointSource>,
}

impl Normalization {
    /// Maps per-raw-joint DOF angles onto the normalized parameter vector.
    pub fn params_from_raw(&self, translation: Vector3<f64>, raw_angles: &[Vec<f64>]) -> ParamVector {
        let angles = self
            .sources
            .iter()
            .map(|s| s.dof.map_or(0.0, |d| raw_angles[s.raw_index][d]))
            .collect();
        ParamVector::new(translation, angles)
    }

    /// Normalized 0-based index of the last joint emitted for each raw joint.
    pub fn raw_to_last(&self) -> Vec<usize> {
        let mut last = vec![usize::MAX; self.sources.len()];
        for (k, s) in self.sources.iter().enumerate() {
            if s.raw_index >= last.len() {
                last.resize(s.raw_index + 1, usize::MAX);
            }
            last[s.raw_index] = k;
        }
        last
    }
}

impl RawSkeleton {
    /// Wraps an already one-DOF skeleton.
    pub fn from_skeleton(skeleton: &Skeleton) -> Self {
        RawSkeleton {
            name: skeleton.name().to_string(),
            joints: skeleton
                .joints()
                .iter()
                .map(|j| RawJoint {
                    id: j.id,
                    parent: j.parent,
                    bone: j.bone,
                    dofs: match j.limits {
                        JointLimits::Fixed => vec![],
                        limits => vec![RawDof {
                            axis: j.axis,
                            limits,
                        }],
                    },
                    name: j.name.clone(),
                })
                .collect(),
        }
    }

    /// Positions of the raw joints, evaluated directly on the multi-DOF
    /// transform chain (`raw_angles[k]` holds one angle per DOF of joint `k`).
    pub fn forward_kinematics(&self, translation: Vector3<f64>, raw_angles: &[Vec<f64>]) -> Result<Vec<Vector3<f64>>> {
        let order = self.topological_order()?;
        let index_of: HashMap<usize, usize> =
            self.joints.iter().enumerate().map(|(k, j)| (j.id, k)).collect();
        let mut frames: Vec<Option<Matrix4<f64>>> = vec![None; self.joints.len()];
        for k in order {
            let joint = &self.joints[k];
            let mut rotation = Matrix3::identity();
            for (dof, &angle) in joint.dofs.iter().zip(&raw_angles[k]) {
                rotation *= rotation_about(&dof.axis.normalize(), angle);
            }
            let mut local = Matrix4::identity();
            local.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
            local.fixed_view_mut::<3, 1>(0, 3).copy_from(&joint.bone);
            let parent = match joint.parent {
                0 => Matrix4::identity(),
                p => frames[index_of[&p]].expect("parents precede children"),
            };
            frames[k] = Some(parent * local);
        }
        let origin = Vector4::new(0.0, 0.0, 0.0, 1.0);
        Ok(frames
            .into_iter()
            .map(|f| translation + (f.expect("all joints reached") * origin).xyz())
            .collect())
    }

    /// Depth-first order from the root, siblings in declaration order.
    fn topological_order(&self) -> Result<Vec<usize>> {
        let mut index_of = HashMap::new();
        for (k, j) in self.joints.iter().enumerate() {
            if j.id == 0 {
                return Err(Error::InvalidSkeleton("joint id 0 is reserved for the anchor".into()));
            }
            if index_of.insert(j.id, k).is_some() {
                return Err(Error::InvalidSkeleton(format!("duplicate joint id {}", j.id)));
            }
        }
        let mut children = vec![Vec::new(); self.joints.len()];
        let mut roots = Vec::new();
        for (k, j) in self.joints.iter().enumerate() {
            if j.parent == 0 {
                roots.push(k);
            } else {
                match index_of.get(&j.parent) {
                    Some(&p) => children[p].push(k),
                    None => {
                        return Err(Error::InvalidSkeleton(format!(
                            "joint {} references missing parent {}",
                            j.id, j.parent
                        )))
                    }
                }
            }
        }
        let root = match roots.as_slice() {
            [r] => *r,
            [] => {
                // Every joint has a parent: the graph must contain a cycle.
                return Err(Error::Cycle(self.joints[0].id));
            }
            _ => {
                return Err(Error::InvalidSkeleton(
                    "more than one joint hangs from the anchor".into(),
                ))
            }
        };
        let mut order = Vec::with_capacity(self.joints.len());
        let mut stack = vec![root];
        while let Some(k) = stack.pop() {
            order.push(k);
            stack.extend(children[k].iter().rev());
        }
        if order.len() != self.joints.len() {
            let mut seen = vec![false; self.joints.len()];
            order.iter().for_each(|&k| seen[k] = true);
            let stuck = seen.iter().position(|s| !s).unwrap();
            return Err(Error::Cycle(self.joints[stuck].id));
        }
        Ok(order)
    }
}

/// Rewrites a multi-DOF skeleton as a one-DOF skeleton.
pub fn normalize_skeleton(raw: &RawSkeleton) -> Result<Skeleton> {
    Ok(normalize(raw)?.skeleton)
}

/// Like [`normalize_skeleton`], also reporting where each output joint came from.
pub fn normalize(raw: &RawSkeleton) -> Result<Normalization> {
    let order = raw.topological_order()?;
    let mut last_of: HashMap<usize, usize> = HashMap::new();
    let mut joints = Vec::new();
    let mut sources = Vec::new();
    for k in order {
        let rj = &raw.joints[k];
        if rj.dofs.len() > 3 {
            return Err(Error::TooManyDofs {
                joint: rj.id,
                count: rj.dofs.len(),
            });
        }
        let mut parent = match rj.parent {
            0 => 0,
            p => last_of[&p],
        };
        if rj.dofs.is_empty() {
            let id = joints.len() + 1;
            joints.push(Joint::fixed(id, parent, rj.bone).with_name(rj.name.clone()));
            sources.push(JointSource {
                raw_index: k,
                dof: None,
            });
            parent = id;
        }
        for (d, dof) in rj.dofs.iter().enumerate() {
            let norm = dof.axis.norm();
            if !(norm >= MIN_AXIS_NORM) {
                return Err(Error::DegenerateAxis {
                    joint: rj.id,
                    axis: [dof.axis.x, dof.axis.y, dof.axis.z],
                });
            }
            if dof.limits.is_fixed() {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {}: a rotational DOF needs an angle interval",
                    rj.id
                )));
            }
            let id = joints.len() + 1;
            let bone = if d == 0 { rj.bone } else { Vector3::zeros() };
            let name = if rj.dofs.len() == 1 {
                rj.name.clone()
            } else {
                format!("{}/{}", rj.name, d)
            };
            joints.push(Joint {
                id,
                parent,
                axis: if (norm - 1.0).abs() <= super::skeleton::AXIS_NORM_TOLERANCE {
                    dof.axis
                } else {
                    dof.axis / norm
                },
                bone,
                limits: dof.limits,
                name,
            });
            sources.push(JointSource {
                raw_index: k,
                dof: Some(d),
            });
            parent = id;
        }
        last_of.insert(rj.id, parent);
    }
    Ok(Normalization {
        skeleton: Skeleton::new(raw.name.clone(), joints)?,
        sources,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::forward::forward_kinematics;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dof(axis: Vector3<f64>, lower: f64, upper: f64) -> RawDof {
        RawDof {
            axis,
            limits: JointLimits::range(lower, upper),
        }
    }

    fn raw_joint(id: usize, parent: usize, bone: Vector3<f64>, dofs: Vec<RawDof>) -> RawJoint {
        RawJoint {
            id,
            parent,
            bone,
            dofs,
            name: format!("r{id}"),
        }
    }

    // Root with 3 rotational DOF, a 2-DOF knuckle, a hinge and a fixed tip.
    fn hand_like() -> RawSkeleton {
        RawSkeleton {
            name: "hand-like".into(),
            joints: vec![
                raw_joint(
                    1,
                    0,
                    Vector3::zeros(),
                    vec![dof(Vector3::x(), -PI, PI), dof(Vector3::y(), -PI, PI), dof(Vector3::z(), -PI, PI)],
                ),
                raw_joint(
                    2,
                    1,
                    Vector3::new(0.0, 0.08, 0.01),
                    vec![dof(Vector3::z(), -0.3, 0.3), dof(Vector3::new(1.0, 0.0, 0.2), -0.2, 1.6)],
                ),
                raw_joint(3, 2, Vector3::new(0.0, 0.04, 0.0), vec![dof(Vector3::x(), 0.0, 1.8)]),
                raw_joint(4, 3, Vector3::new(0.0, 0.03, 0.0), vec![]),
            ],
        }
    }

    #[test]
    fn three_dof_joint_becomes_chain() {
        let v = Vector3::new(0.1, 0.2, 0.3);
        let raw = RawSkeleton {
            name: "one".into(),
            joints: vec![raw_joint(
                1,
                0,
                v,
                vec![dof(Vector3::x(), -1.0, 1.0), dof(Vector3::y(), -1.0, 1.0), dof(Vector3::z(), -1.0, 1.0)],
            )],
        };
        let skel = normalize_skeleton(&raw).unwrap();
        assert_eq!(skel.len(), 3);
        assert_eq!(skel.joints()[0].bone, v);
        assert_eq!(skel.joints()[1].bone, Vector3::zeros());
        assert_eq!(skel.joints()[2].bone, Vector3::zeros());
        assert_eq!(skel.joints()[1].parent, 1);
        assert_eq!(skel.joints()[2].parent, 2);
        assert_eq!(skel.joints()[2].axis, Vector3::z());
    }

    #[test]
    fn one_dof_skeleton_is_unchanged() {
        let skel = normalize_skeleton(&hand_like()).unwrap();
        let again = normalize_skeleton(&RawSkeleton::from_skeleton(&skel)).unwrap();
        assert_eq!(skel, again);
    }

    #[test]
    fn hand_like_preserves_forward_kinematics() {
        let raw = hand_like();
        let norm = normalize(&raw).unwrap();
        assert_eq!(norm.skeleton.len(), 7);
        let last = norm.raw_to_last();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let raw_angles: Vec<Vec<f64>> = raw
                .joints
                .iter()
                .map(|j| {
                    j.dofs
                        .iter()
                        .map(|d| match d.limits {
                            JointLimits::Range { lower, upper } => rng.random_range(lower..=upper),
                            JointLimits::Fixed => 0.0,
                        })
                        .collect()
                })
                .collect();
            let oracle = raw.forward_kinematics(t, &raw_angles).unwrap();
            let params = norm.params_from_raw(t, &raw_angles);
            let x = forward_kinematics(&norm.skeleton, &params).unwrap();
            for (k, xo) in oracle.iter().enumerate() {
                assert!((x[last[k]] - xo).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn error_paths() {
        let mut cyc = hand_like();
        cyc.joints[0].parent = 4;
        assert!(matches!(normalize_skeleton(&cyc), Err(Error::Cycle(_))));

        let mut too_many = hand_like();
        too_many.joints[2].dofs = vec![dof(Vector3::x(), -1.0, 1.0); 4];
        assert!(matches!(normalize_skeleton(&too_many), Err(Error::TooManyDofs { count: 4, .. })));

        let mut tiny = hand_like();
        tiny.joints[2].dofs[0].axis = Vector3::new(1e-7, 0.0, 0.0);
        assert!(matches!(normalize_skeleton(&tiny), Err(Error::DegenerateAxis { .. })));

        let mut loose = hand_like();
        loose.joints[2].dofs[0].axis = Vector3::new(2.0, 0.0, 0.0);
        let skel = normalize_skeleton(&loose).unwrap();
        assert_eq!(skel.joints()[5].axis, Vector3::x());
    }
}
