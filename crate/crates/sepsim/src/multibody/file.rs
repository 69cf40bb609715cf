//! Literal on-disk form of a rigid-body model: explicit joint and frame
//! tables, for hand-built mechanisms. Joints reference parents by name and
//! must be listed parents-first, mirroring the in-memory construction rule.

use crate::error::{SimError, SimResult};
use crate::multibody::{FrameDef, Joint, JointKind, LinkParams, RobotModel};
use serde::{Deserialize, Serialize};

fn default_gravity() -> f64 {
    9.81
}

#[derive(Debug, Serialize, Deserialize)]
struct RawJoint {
    name: String,
    kind: String,
    parent: Option<String>,
    #[serde(default)]
    anchor: f64,
    #[serde(default)]
    mount: f64,
    mass: f64,
    length: f64,
    com_offset: f64,
    inertia: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gear: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFrame {
    name: String,
    joint: String,
    offset: f64,
    #[serde(default)]
    rel_rot: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawLiteral {
    #[serde(default = "default_gravity")]
    gravity: f64,
    joint: Vec<RawJoint>,
    #[serde(default)]
    frame: Vec<RawFrame>,
}

fn kind_from_str(s: &str, joint: &str) -> SimResult<JointKind> {
    match s {
        "planar_base" => Ok(JointKind::PlanarBase),
        "revolute" => Ok(JointKind::Revolute),
        "fixed3" => Ok(JointKind::Fixed3),
        other => Err(SimError::Schema(format!(
            "joint `{joint}`: unknown kind `{other}` \
             (expected planar_base, revolute, or fixed3)"
        ))),
    }
}

fn kind_to_str(k: JointKind) -> &'static str {
    match k {
        JointKind::PlanarBase => "planar_base",
        JointKind::Revolute => "revolute",
        JointKind::Fixed3 => "fixed3",
    }
}

/// Builds a model from a parsed literal-form table.
pub fn model_from_table(table: toml::Table) -> SimResult<RobotModel> {
    let raw: RawLiteral = table
        .try_into()
        .map_err(|e| SimError::Schema(format!("literal model: {e}")))?;

    let mut joints = Vec::with_capacity(raw.joint.len());
    for rj in &raw.joint {
        let parent = match &rj.parent {
            None => None,
            Some(pname) => {
                let idx = joints
                    .iter()
                    .position(|j: &Joint| j.name == *pname)
                    .ok_or_else(|| {
                        SimError::Schema(format!(
                            "joint `{}`: parent `{pname}` not defined earlier in the file",
                            rj.name
                        ))
                    })?;
                Some(idx)
            }
        };
        joints.push(Joint {
            name: rj.name.clone(),
            kind: kind_from_str(&rj.kind, &rj.name)?,
            parent,
            anchor: rj.anchor,
            mount: rj.mount,
            link: LinkParams {
                mass: rj.mass,
                length: rj.length,
                com_offset: rj.com_offset,
                inertia: rj.inertia,
            },
            actuation: rj.gear,
        });
    }

    let mut frames = Vec::with_capacity(raw.frame.len());
    for rf in &raw.frame {
        let joint = joints
            .iter()
            .position(|j| j.name == rf.joint)
            .ok_or_else(|| {
                SimError::Schema(format!(
                    "frame `{}`: unknown joint `{}`",
                    rf.name, rf.joint
                ))
            })?;
        frames.push(FrameDef {
            name: rf.name.clone(),
            joint,
            offset: rf.offset,
            rel_rot: rf.rel_rot,
        });
    }

    RobotModel::new(joints, frames, raw.gravity)
}

/// Serializes a model to the literal TOML form. Only explicitly added frames
/// are written; the per-joint default frames are reconstructed on load.
pub fn model_to_toml(model: &RobotModel) -> SimResult<String> {
    let joints = model.joints();
    let raw = RawLiteral {
        gravity: model.gravity,
        joint: joints
            .iter()
            .map(|j| RawJoint {
                name: j.name.clone(),
                kind: kind_to_str(j.kind).into(),
                parent: j.parent.map(|p| joints[p].name.clone()),
                anchor: j.anchor,
                mount: j.mount,
                mass: j.link.mass,
                length: j.link.length,
                com_offset: j.link.com_offset,
                inertia: j.link.inertia,
                gear: j.actuation,
            })
            .collect(),
        frame: model.frames()[joints.len()..]
            .iter()
            .map(|f| RawFrame {
                name: f.name.clone(),
                joint: joints[f.joint].name.clone(),
                offset: f.offset,
                rel_rot: f.rel_rot,
            })
            .collect(),
    };
    toml::to_string(&raw).map_err(|e| SimError::Config(format!("model serialization: {e}")))
}
