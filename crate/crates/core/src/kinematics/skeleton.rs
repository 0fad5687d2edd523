use std::f64::consts::PI;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a rotational axis from unit length.
pub const AXIS_NORM_TOLERANCE: f64 = 1e-12;

/// Angle interval of a one-DOF joint, or `Fixed` for end-effectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JointLimits {
    Fixed,
    Range { lower: f64, upper: f64 },
}

impl JointLimits {
    pub fn range(lower: f64, upper: f64) -> Self {
        JointLimits::Range { lower, upper }
    }

    /// The full turn `[-pi, pi]`.
    pub fn free() -> Self {
        JointLimits::Range {
            lower: -PI,
            upper: PI,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, JointLimits::Fixed)
    }

    pub fn contains(&self, angle: f64) -> bool {
        match *self {
            JointLimits::Fixed => true,
            JointLimits::Range { lower, upper } => (lower..=upper).contains(&angle),
        }
    }

    /// Distance of `angle` from the interval; zero for fixed joints, whose angle is ignored.
    pub fn distance(&self, angle: f64) -> f64 {
        match *self {
            JointLimits::Fixed => 0.0,
            JointLimits::Range { lower, upper } => interval_distance(angle, lower, upper),
        }
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        match *self {
            JointLimits::Fixed => 0.0,
            JointLimits::Range { lower, upper } => angle.clamp(lower, upper),
        }
    }

    pub fn midpoint(&self) -> f64 {
        match *self {
            JointLimits::Fixed => 0.0,
            JointLimits::Range { lower, upper } => 0.5 * (lower + upper),
        }
    }

    fn validate(&self, id: usize) -> Result<()> {
        if let JointLimits::Range { lower, upper } = *self {
            if !(lower.is_finite() && upper.is_finite()) {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {id}: non-finite limits"
                )));
            }
            if lower > upper {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {id}: lower limit {lower} exceeds upper limit {upper}"
                )));
            }
            if upper - lower > 2.0 * PI + 1e-12 {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {id}: interval wider than a full turn"
                )));
            }
        }
        Ok(())
    }
}

/// Plain (non-periodic) distance of `angle` from `[lower, upper]`.
pub fn interval_distance(angle: f64, lower: f64, upper: f64) -> f64 {
    if angle < lower {
        lower - angle
    } else if angle > upper {
        angle - upper
    } else {
        0.0
    }
}

/// A joint with at most one rotational DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    /// 1-based id; equals the position in the skeleton plus one.
    pub id: usize,
    /// Parent id, `0` for the root anchor.
    pub parent: usize,
    pub axis: Vector3<f64>,
    /// Offset of this joint in its parent's frame.
    pub bone: Vector3<f64>,
    pub limits: JointLimits,
    pub name: String,
}

impl Joint {
    pub fn revolute(
        id: usize,
        parent: usize,
        axis: Vector3<f64>,
        bone: Vector3<f64>,
        lower: f64,
        upper: f64,
    ) -> Self {
        Joint {
            id,
            parent,
            axis,
            bone,
            limits: JointLimits::range(lower, upper),
            name: format!("joint{id}"),
        }
    }

    pub fn fixed(id: usize, parent: usize, bone: Vector3<f64>) -> Self {
        Joint {
            id,
            parent,
            axis: Vector3::x(),
            bone,
            limits: JointLimits::Fixed,
            name: format!("joint{id}"),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn is_fixed(&self) -> bool {
        self.limits.is_fixed()
    }
}

/// Immutable tree of one-DOF joints in topological order, rooted at joint 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    name: String,
    joints: Vec<Joint>,
    children: Vec<Vec<usize>>,
}

impl Skeleton {
    pub fn new(name: impl Into<String>, joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidSkeleton("no joints".into()));
        }
        let mut children = vec![Vec::new(); joints.len()];
        for (k, joint) in joints.iter().enumerate() {
            let id = k + 1;
            if joint.id != id {
                return Err(Error::InvalidSkeleton(format!(
                    "joint at position {k} has id {} (ids must be 1..J in order)",
                    joint.id
                )));
            }
            if id == 1 {
                if joint.parent != 0 {
                    return Err(Error::InvalidSkeleton(
                        "joint 1 must hang from the root anchor (parent 0)".into(),
                    ));
                }
            } else if joint.parent == 0 || joint.parent >= id {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {id} has parent {} (must satisfy 1 <= parent < id)",
                    joint.parent
                )));
            } else {
                children[joint.parent - 1].push(k);
            }
            if !joint.is_fixed() && (joint.axis.norm() - 1.0).abs() > AXIS_NORM_TOLERANCE {
                return Err(Error::InvalidSkeleton(format!(
                    "joint {id}: axis is not unit length"
                )));
            }
            if !joint.bone.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidSkeleton(format!("joint {id}: non-finite bone")));
            }
            joint.limits.validate(id)?;
        }
        Ok(Skeleton {
            name: name.into(),
            joints,
            children,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    /// Number of joints `J`.
    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Dimension `3 + J` of the parameter vector.
    pub fn param_dim(&self) -> usize {
        3 + self.joints.len()
    }

    /// Joint by 1-based id.
    pub fn joint(&self, id: usize) -> &Joint {
        &self.joints[id - 1]
    }

    /// 0-based index of the parent, `None` for the root joint.
    pub fn parent_index(&self, index: usize) -> Option<usize> {
        match self.joints[index].parent {
            0 => None,
            p => Some(p - 1),
        }
    }

    /// 0-based indices of the children of joint `index`.
    pub fn children(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    pub fn is_leaf(&self, index: usize) -> bool {
        self.children[index].is_empty()
    }

    /// 0-based indices from the root joint down to `index` inclusive.
    pub fn path_from_root(&self, index: usize) -> Vec<usize> {
        let mut path = vec![index];
        let mut cur = index;
        while let Some(p) = self.parent_index(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Whether `ancestor` lies on the path from the root to `index` (inclusive).
    pub fn is_ancestor(&self, ancestor: usize, index: usize) -> bool {
        let mut cur = Some(index);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            if c < ancestor {
                return false;
            }
            cur = self.parent_index(c);
        }
        false
    }

    pub fn revolute_count(&self) -> usize {
        self.joints.iter().filter(|j| !j.is_fixed()).count()
    }

    pub fn total_bone_length(&self) -> f64 {
        self.joints.iter().map(|j| j.bone.norm()).sum()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_leaf(i)).collect()
    }
}

/// Root translation plus one angle per joint (fixed joints carry a pinned 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub translation: Vector3<f64>,
    pub angles: Vec<f64>,
}

impl ParamVector {
    pub fn new(translation: Vector3<f64>, angles: Vec<f64>) -> Self {
        ParamVector {
            translation,
            angles,
        }
    }

    pub fn zeros(joints: usize) -> Self {
        ParamVector::new(Vector3::zeros(), vec![0.0; joints])
    }

    /// Builds from the flat layout `[t_x, t_y, t_z, theta_1, ..., theta_J]`.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: values.len(),
            });
        }
        Ok(ParamVector::new(
            Vector3::new(values[0], values[1], values[2]),
            values[3..].to_vec(),
        ))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 + self.angles.len());
        v.extend_from_slice(self.translation.as_slice());
        v.extend_from_slice(&self.angles);
        v
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_vec(self.to_flat())
    }

    pub fn dim(&self) -> usize {
        3 + self.angles.len()
    }

    pub fn check_dim(&self, skeleton: &Skeleton) -> Result<()> {
        if self.dim() != skeleton.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: skeleton.param_dim(),
                got: self.dim(),
            });
        }
        Ok(())
    }

    /// Whether every angle lies within its joint interval.
    pub fn respects_limits(&self, skeleton: &Skeleton) -> bool {
        skeleton
            .joints()
            .iter()
            .zip(&self.angles)
            .all(|(j, &a)| j.limits.contains(a))
    }
}

/// A target position for one joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedJoint {
    /// 1-based joint id.
    pub joint: usize,
    pub target: Vector3<f64>,
}

/// Non-empty set of observed joints with distinct ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    entries: Vec<ObservedJoint>,
}

impl Observation {
    pub fn new(entries: Vec<ObservedJoint>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidObservation("no observed joints".into()));
        }
        let mut ids: Vec<usize> = entries.iter().map(|e| e.joint).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidObservation("duplicate joint id".into()));
        }
        if ids[0] == 0 {
            return Err(Error::InvalidObservation("joint ids are 1-based".into()));
        }
        Ok(Observation { entries })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Vector3<f64>)>) -> Result<Self> {
        Observation::new(
            pairs
                .into_iter()
                .map(|(joint, target)| ObservedJoint { joint, target })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[ObservedJoint] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self, skeleton: &Skeleton) -> Result<()> {
        for e in &self.entries {
            if e.joint == 0 || e.joint > skeleton.len() {
                return Err(Error::InvalidObservation(format!(
                    "joint id {} out of range 1..={}",
                    e.joint,
                    skeleton.len()
                )));
            }
            if !e.target.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidObservation(format!(
                    "non-finite target for joint {}",
                    e.joint
                )));
            }
        }
        Ok(())
    }

    pub fn with_targets(&self, targets: impl IntoIterator<Item = Vector3<f64>>) -> Self {
        let entries = self
            .entries
            .iter()
            .zip(targets)
            .map(|(e, target)| ObservedJoint {
                joint: e.joint,
                target,
            })
            .collect();
        Observation { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_distance_cases() {
        assert_eq!(interval_distance(0.0, -1.0, 1.0), 0.0);
        assert_eq!(interval_distance(2.0, -1.0, 1.0), 1.0);
        assert_eq!(interval_distance(-3.0, -1.0, 1.0), 2.0);
        assert_eq!(JointLimits::Fixed.distance(5.0), 0.0);
    }

    #[test]
    fn rejects_bad_topology() {
        let bad_parent = vec![
            Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -1.0, 1.0),
            Joint::revolute(2, 2, Vector3::z(), Vector3::x(), -1.0, 1.0),
        ];
        assert!(Skeleton::new("bad", bad_parent).is_err());
        let two_roots = vec![
            Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -1.0, 1.0),
            Joint::revolute(2, 0, Vector3::z(), Vector3::x(), -1.0, 1.0),
        ];
        assert!(Skeleton::new("bad", two_roots).is_err());
    }

    #[test]
    fn rejects_bad_limits_and_axes() {
        let inverted = vec![Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), 1.0, -1.0)];
        assert!(Skeleton::new("bad", inverted).is_err());
        let too_wide = vec![Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -4.0, 4.0)];
        assert!(Skeleton::new("bad", too_wide).is_err());
        let long_axis = vec![Joint::revolute(
            1,
            0,
            Vector3::new(1.0, 1e-5, 0.0),
            Vector3::zeros(),
            -1.0,
            1.0,
        )];
        assert!(Skeleton::new("bad", long_axis).is_err());
    }

    #[test]
    fn observation_rules() {
        assert!(Observation::new(vec![]).is_err());
        assert!(Observation::from_pairs([(1, Vector3::zeros()), (1, Vector3::x())]).is_err());
        let skel = Skeleton::new(
            "one",
            vec![Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -1.0, 1.0)],
        )
        .unwrap();
        let obs = Observation::from_pairs([(2, Vector3::zeros())]).unwrap();
        assert!(obs.validate(&skel).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let p = ParamVector::new(Vector3::new(1.0, 2.0, 3.0), vec![0.5, -0.5]);
        assert_eq!(ParamVector::from_flat(&p.to_flat()).unwrap(), p);
        assert_eq!(p.dim(), 5);
    }
}
