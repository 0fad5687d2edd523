//! JSON files: skeletons (one-DOF and multi-DOF), target observations and pose lists.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::normalize::{normalize_skeleton, RawDof, RawJoint, RawSkeleton};
use super::skeleton::{Joint, JointLimits, Observation, ObservedJoint, ParamVector, Skeleton};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LimitsRecord {
    Range([f64; 2]),
    Keyword(String),
}

impl LimitsRecord {
    fn to_limits(&self, id: usize) -> Result<JointLimits> {
        match self {
            LimitsRecord::Range([lo, hi]) => Ok(JointLimits::range(*lo, *hi)),
            LimitsRecord::Keyword(k) if k == "fixed" => Ok(JointLimits::Fixed),
            LimitsRecord::Keyword(k) => Err(Error::InvalidSkeleton(format!(
                "joint {id}: unknown limits keyword {k:?}"
            ))),
        }
    }

    fn from_limits(limits: &JointLimits) -> Self {
        match *limits {
            JointLimits::Fixed => LimitsRecord::Keyword("fixed".into()),
            JointLimits::Range { lower, upper } => LimitsRecord::Range([lower, upper]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DofRecord {
    axis: [f64; 3],
    limits: LimitsRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JointRecord {
    id: usize,
    parent: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis: Option<[f64; 3]>,
    bone: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    limits: Option<LimitsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dofs: Option<Vec<DofRecord>>,
    #[serde(default)]
    name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SkeletonRecord {
    name: String,
    joints: Vec<JointRecord>,
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn a3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Parses a skeleton file. Files using the multi-DOF `"dofs"` form are normalized.
pub fn skeleton_from_json(text: &str) -> Result<Skeleton> {
    let record: SkeletonRecord = serde_json::from_str(text)?;
    if record.joints.iter().any(|j| j.dofs.is_some()) {
        return normalize_skeleton(&raw_from_record(record)?);
    }
    let joints = record
        .joints
        .iter()
        .map(|j| {
            let limits = j
                .limits
                .as_ref()
                .ok_or_else(|| Error::InvalidSkeleton(format!("joint {}: missing limits", j.id)))?
                .to_limits(j.id)?;
            let axis = match (j.axis, limits) {
                (_, JointLimits::Fixed) => j.axis.map(v3).unwrap_or_else(Vector3::x),
                (Some(a), _) => {
                    let a = v3(a);
                    let n = a.norm();
                    if !(n >= super::normalize::MIN_AXIS_NORM) {
                        return Err(Error::DegenerateAxis { joint: j.id, axis: a3(&a) });
                    }
                    if (n - 1.0).abs() <= super::skeleton::AXIS_NORM_TOLERANCE {
                        a
                    } else {
                        a / n
                    }
                }
                (None, _) => {
                    return Err(Error::InvalidSkeleton(format!("joint {}: missing axis", j.id)))
                }
            };
            Ok(Joint {
                id: j.id,
                parent: j.parent,
                axis,
                bone: v3(j.bone),
                limits,
                name: j.name.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Skeleton::new(record.name, joints)
}

/// Parses a multi-DOF skeleton file without normalizing it.
pub fn raw_skeleton_from_json(text: &str) -> Result<RawSkeleton> {
    raw_from_record(serde_json::from_str(text)?)
}

fn raw_from_record(record: SkeletonRecord) -> Result<RawSkeleton> {
    let joints = record
        .joints
        .into_iter()
        .map(|j| {
            let dofs = match (&j.dofs, &j.limits, j.axis) {
                (Some(d), _, _) => d
                    .iter()
                    .map(|d| {
                        Ok(RawDof {
                            axis: v3(d.axis),
                            limits: d.limits.to_limits(j.id)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
                (None, Some(l), axis) => match l.to_limits(j.id)? {
                    JointLimits::Fixed => vec![],
                    limits => vec![RawDof {
                        axis: axis.map(v3).ok_or_else(|| {
                            Error::InvalidSkeleton(format!("joint {}: missing axis", j.id))
                        })?,
                        limits,
                    }],
                },
                (None, None, _) => vec![],
            };
            Ok(RawJoint {
                id: j.id,
                parent: j.parent,
                bone: v3(j.bone),
                dofs,
                name: j.name,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawSkeleton {
        name: record.name,
        joints,
    })
}

/// Serializes a one-DOF skeleton.
pub fn skeleton_to_json(skeleton: &Skeleton) -> String {
    let record = SkeletonRecord {
        name: skeleton.name().to_string(),
        joints: skeleton
            .joints()
            .iter()
            .map(|j| JointRecord {
                id: j.id,
                parent: j.parent,
                axis: Some(a3(&j.axis)),
                bone: a3(&j.bone),
                limits: Some(LimitsRecord::from_limits(&j.limits)),
                dofs: None,
                name: j.name.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&record).expect("skeleton records always serialize")
}

/// Serializes a multi-DOF skeleton in the `"dofs"` form.
pub fn raw_skeleton_to_json(raw: &RawSkeleton) -> String {
    let record = SkeletonRecord {
        name: raw.name.clone(),
        joints: raw
            .joints
            .iter()
            .map(|j| JointRecord {
                id: j.id,
                parent: j.parent,
                axis: None,
                bone: a3(&j.bone),
                limits: None,
                dofs: Some(
                    j.dofs
                        .iter()
                        .map(|d| DofRecord {
                            axis: a3(&d.axis),
                            limits: LimitsRecord::from_limits(&d.limits),
                        })
                        .collect(),
                ),
                name: j.name.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&record).expect("skeleton records always serialize")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TargetRecord {
    joint: usize,
    y: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TargetsRecord {
    observations: Vec<TargetRecord>,
}

pub fn observation_from_json(text: &str) -> Result<Observation> {
    let record: TargetsRecord = serde_json::from_str(text)?;
    Observation::new(
        record
            .observations
            .into_iter()
            .map(|o| ObservedJoint {
                joint: o.joint,
                target: v3(o.y),
            })
            .collect(),
    )
}

pub fn observation_to_json(obs: &Observation) -> String {
    let record = TargetsRecord {
        observations: obs
            .entries()
            .iter()
            .map(|e| TargetRecord {
                joint: e.joint,
                y: a3(&e.target),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&record).expect("targets always serialize")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PosesRecord {
    skeleton: String,
    /// Flat `[t_x, t_y, t_z, theta_1, ..., theta_J]` rows.
    poses: Vec<Vec<f64>>,
}

pub fn poses_from_json(text: &str) -> Result<Vec<ParamVector>> {
    let record: PosesRecord = serde_json::from_str(text)?;
    record.poses.iter().map(|p| ParamVector::from_flat(p)).collect()
}

pub fn poses_to_json(skeleton: &Skeleton, poses: &[ParamVector]) -> String {
    let record = PosesRecord {
        skeleton: skeleton.name().to_string(),
        poses: poses.iter().map(ParamVector::to_flat).collect(),
    };
    serde_json::to_string(&record).expect("poses always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_DOF: &str = r#"{
        "name": "arm",
        "joints": [
            {"id": 1, "parent": 0, "axis": [0, 0, 2], "bone": [0, 0, 0], "limits": [-3.0, 3.0], "name": "base"},
            {"id": 2, "parent": 1, "axis": [0, 0, 1], "bone": [1, 0, 0], "limits": [-1.5, 1.5], "name": "elbow"},
            {"id": 3, "parent": 2, "bone": [1, 0, 0], "limits": "fixed", "name": "tip"}
        ]
    }"#;

    const MULTI_DOF: &str = r#"{
        "name": "ball",
        "joints": [
            {"id": 1, "parent": 0, "bone": [0, 0, 0], "name": "root",
             "dofs": [{"axis": [1,0,0], "limits": [-3,3]}, {"axis": [0,1,0], "limits": [-3,3]}]},
            {"id": 2, "parent": 1, "bone": [0, 1, 0], "dofs": [], "name": "tip"}
        ]
    }"#;

    #[test]
    fn parses_one_dof_file() {
        let skel = skeleton_from_json(ONE_DOF).unwrap();
        assert_eq!(skel.len(), 3);
        assert_eq!(skel.joints()[0].axis, Vector3::z());
        assert!(skel.joints()[2].is_fixed());
        let again = skeleton_from_json(&skeleton_to_json(&skel)).unwrap();
        assert_eq!(skel, again);
    }

    #[test]
    fn multi_dof_file_is_normalized() {
        let skel = skeleton_from_json(MULTI_DOF).unwrap();
        assert_eq!(skel.len(), 3);
        let raw = raw_skeleton_from_json(MULTI_DOF).unwrap();
        let again = skeleton_from_json(&raw_skeleton_to_json(&raw)).unwrap();
        assert_eq!(skel, again);
    }

    #[test]
    fn unknown_limits_keyword_fails() {
        let text = ONE_DOF.replace("\"fixed\"", "\"locked\"");
        assert!(skeleton_from_json(&text).is_err());
    }

    #[test]
    fn targets_round_trip() {
        let obs = observation_from_json(r#"{"observations": [{"joint": 2, "y": [0.5, 1, -1]}]}"#).unwrap();
        assert_eq!(obs.entries()[0].target, Vector3::new(0.5, 1.0, -1.0));
        assert_eq!(observation_from_json(&observation_to_json(&obs)).unwrap(), obs);
    }
}
