//! Planar rigid-body model description: links, joint tree, frames, actuation.
//!
//! Conventions, fixed once for the whole crate:
//! - The plane is (x, z) with z up; rotations are measured counterclockwise,
//!   `R(phi) = [[cos, -sin], [sin, cos]]` acting on `(x, z)` column vectors.
//! - Each joint carries exactly one link. The link frame sits at the joint
//!   origin, and the link body extends along the local `-z` axis, so a chain
//!   of links with all coordinates and mount rotations zero hangs straight
//!   down. A `mount` rotation (fixed offset between the parent attachment and
//!   the link) lets e.g. a torso point up or a foot lie flat at zero pose.
//! - A child joint attaches to its parent link at `anchor` meters along the
//!   parent link axis (measured from the parent joint origin).

use nalgebra::{DMatrix, DVector};

use crate::error::{SimError, SimResult};

/// Inertial and geometric parameters of one rigid link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    /// Mass in kg, > 0.
    pub mass: f64,
    /// Length in m, >= 0 (a point mass link may have zero length).
    pub length: f64,
    /// Center-of-mass offset from the joint origin along the link axis, m.
    pub com_offset: f64,
    /// Rotational inertia about the center of mass, kg m^2, >= 0.
    pub inertia: f64,
}

impl LinkParams {
    pub fn validate(&self, name: &str) -> SimResult<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(SimError::InvalidModel(format!(
                "link `{name}`: mass must be positive and finite, got {}",
                self.mass
            )));
        }
        if !(self.length >= 0.0 && self.length.is_finite()) {
            return Err(SimError::InvalidModel(format!(
                "link `{name}`: length must be non-negative, got {}",
                self.length
            )));
        }
        if !(self.inertia >= 0.0 && self.inertia.is_finite()) {
            return Err(SimError::InvalidModel(format!(
                "link `{name}`: inertia must be non-negative, got {}",
                self.inertia
            )));
        }
        if !self.com_offset.is_finite() {
            return Err(SimError::InvalidModel(format!(
                "link `{name}`: com_offset must be finite"
            )));
        }
        Ok(())
    }
}

/// Kind of joint connecting a link to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    /// Free planar base: 3 coordinates (x, z, phi). Root only.
    PlanarBase,
    /// One rotational coordinate.
    Revolute,
    /// Three explicitly modeled coordinates (local dx, local dz, dphi),
    /// normally pinned by a 3-row constraint. The local displacement is
    /// expressed in the parent link frame.
    Fixed3,
}

impl JointKind {
    pub fn dof(self) -> usize {
        match self {
            JointKind::PlanarBase | JointKind::Fixed3 => 3,
            JointKind::Revolute => 1,
        }
    }
}

/// What one generalized coordinate does. Used to assemble Jacobians.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CoordKind {
    /// World x translation (base only).
    WorldX,
    /// World z translation (base only).
    WorldZ,
    /// Translation along the parent-frame local x axis (fixed joints).
    LocalX,
    /// Translation along the parent-frame local z axis (fixed joints).
    LocalZ,
    /// Rotation about the owning joint's origin.
    Rot,
}

/// One joint plus the link it carries.
#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    /// Parent joint index; `None` for the root.
    pub parent: Option<usize>,
    /// Attachment distance along the parent link axis, m. Ignored at the root.
    pub anchor: f64,
    /// Fixed rotation between parent attachment and this link's frame, rad.
    pub mount: f64,
    pub link: LinkParams,
    /// Gear ratio if this joint is actuated (`None` = passive). Only
    /// single-coordinate joints can be actuated.
    pub actuation: Option<f64>,
}

/// A named frame rigidly attached to a link: `offset` meters along the link
/// axis from the joint origin, rotated by `rel_rot` relative to the link.
#[derive(Debug, Clone)]
pub struct FrameDef {
    pub name: String,
    pub joint: usize,
    pub offset: f64,
    pub rel_rot: f64,
}

/// Index of a registered frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameId(pub usize);

/// Static per-coordinate info derived from the joint list.
#[derive(Debug, Clone)]
pub(crate) struct CoordInfo {
    pub joint: usize,
    pub kind: CoordKind,
}

/// Planar rigid-body tree with actuation map and gravity.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct RobotModel {
    joints: Vec<Joint>,
    frames: Vec<FrameDef>,
    /// Gravity magnitude, m/s^2 (acts along -z).
    pub gravity: f64,
    // Derived structure:
    coords: Vec<CoordInfo>,
    /// First coordinate index of each joint.
    coord_start: Vec<usize>,
    /// Bitmask over coordinate indices affecting each joint's link frame.
    path_mask: Vec<u64>,
    /// Bitmask over rotational coordinates affecting each joint's PARENT link
    /// frame orientation (empty at the root).
    parent_rot_mask: Vec<u64>,
    /// Actuation matrix eta x m.
    b_matrix: DMatrix<f64>,
    /// Actuated joint indices in input order.
    actuated: Vec<usize>,
}

impl RobotModel {
    /// Builds and validates a model. Joints must be listed parents-first.
    pub fn new(joints: Vec<Joint>, extra_frames: Vec<FrameDef>, gravity: f64) -> SimResult<Self> {
        if joints.is_empty() {
            return Err(SimError::InvalidModel("no joints".into()));
        }
        if joints[0].parent.is_some() || joints[0].kind != JointKind::PlanarBase {
            return Err(SimError::InvalidModel(
                "the first joint must be the planar base at the tree root".into(),
            ));
        }
        for (j, joint) in joints.iter().enumerate() {
            joint.link.validate(&joint.name)?;
            match joint.parent {
                Some(p) if p >= j => {
                    return Err(SimError::InvalidModel(format!(
                        "joint `{}`: parent index {p} is not earlier in the list",
                        joint.name
                    )));
                }
                None if j != 0 => {
                    return Err(SimError::InvalidModel(format!(
                        "joint `{}`: only the first joint may be the root",
                        joint.name
                    )));
                }
                _ => {}
            }
            if j > 0 && joint.kind == JointKind::PlanarBase {
                return Err(SimError::InvalidModel(format!(
                    "joint `{}`: planar base allowed only at the root",
                    joint.name
                )));
            }
            if joint.actuation.is_some() && joint.kind != JointKind::Revolute {
                return Err(SimError::InvalidModel(format!(
                    "joint `{}`: only revolute joints can be actuated",
                    joint.name
                )));
            }
            if let Some(r) = joint.actuation {
                if r == 0.0 || !r.is_finite() {
                    return Err(SimError::InvalidModel(format!(
                        "joint `{}`: gear ratio must be nonzero and finite",
                        joint.name
                    )));
                }
            }
        }
        for (a, ja) in joints.iter().enumerate() {
            for jb in joints.iter().skip(a + 1) {
                if ja.name == jb.name {
                    return Err(SimError::InvalidModel(format!(
                        "duplicate joint name `{}`",
                        ja.name
                    )));
                }
            }
        }

        // Per-coordinate table.
        let mut coords = Vec::new();
        let mut coord_start = Vec::with_capacity(joints.len());
        for (j, joint) in joints.iter().enumerate() {
            coord_start.push(coords.len());
            match joint.kind {
                JointKind::PlanarBase => {
                    coords.push(CoordInfo { joint: j, kind: CoordKind::WorldX });
                    coords.push(CoordInfo { joint: j, kind: CoordKind::WorldZ });
                    coords.push(CoordInfo { joint: j, kind: CoordKind::Rot });
                }
                JointKind::Revolute => {
                    coords.push(CoordInfo { joint: j, kind: CoordKind::Rot });
                }
                JointKind::Fixed3 => {
                    coords.push(CoordInfo { joint: j, kind: CoordKind::LocalX });
                    coords.push(CoordInfo { joint: j, kind: CoordKind::LocalZ });
                    coords.push(CoordInfo { joint: j, kind: CoordKind::Rot });
                }
            }
        }
        let eta = coords.len();
        if eta > 64 {
            return Err(SimError::InvalidModel(format!(
                "at most 64 coordinates supported, got {eta}"
            )));
        }

        // Path masks.
        let mut path_mask = vec![0u64; joints.len()];
        let mut parent_rot_mask = vec![0u64; joints.len()];
        let own_mask = |j: usize| -> u64 {
            let start = coord_start[j];
            let n = joints[j].kind.dof();
            let mut m = 0u64;
            for k in start..start + n {
                m |= 1 << k;
            }
            m
        };
        let own_rot_mask = |j: usize| -> u64 {
            let start = coord_start[j];
            let n = joints[j].kind.dof();
            let mut m = 0u64;
            for (k, c) in coords[start..start + n].iter().enumerate() {
                if c.kind == CoordKind::Rot {
                    m |= 1 << (start + k);
                }
            }
            m
        };
        let mut rot_path_mask = vec![0u64; joints.len()];
        for j in 0..joints.len() {
            match joints[j].parent {
                None => {
                    path_mask[j] = own_mask(j);
                    rot_path_mask[j] = own_rot_mask(j);
                    parent_rot_mask[j] = 0;
                }
                Some(p) => {
                    path_mask[j] = path_mask[p] | own_mask(j);
                    rot_path_mask[j] = rot_path_mask[p] | own_rot_mask(j);
                    parent_rot_mask[j] = rot_path_mask[p];
                }
            }
        }

        // Actuation matrix.
        let actuated: Vec<usize> = (0..joints.len())
            .filter(|&j| joints[j].actuation.is_some())
            .collect();
        let m = actuated.len();
        let mut b_matrix = DMatrix::zeros(eta, m);
        for (col, &j) in actuated.iter().enumerate() {
            b_matrix[(coord_start[j], col)] = joints[j].actuation.unwrap();
        }
        // Full column rank holds by construction (distinct rows, nonzero
        // ratios); assert it anyway so config mistakes surface here.
        if m > 0 {
            let svd = b_matrix.clone().svd(false, false);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smin <= 1e-10 * smax {
                return Err(SimError::InvalidModel(
                    "actuation matrix lost full column rank".into(),
                ));
            }
        }

        // Frame registry: one default frame per joint (its link frame), then
        // the extra frames.
        let mut frames: Vec<FrameDef> = joints
            .iter()
            .enumerate()
            .map(|(j, joint)| FrameDef {
                name: joint.name.clone(),
                joint: j,
                offset: 0.0,
                rel_rot: 0.0,
            })
            .collect();
        for f in extra_frames {
            if f.joint >= joints.len() {
                return Err(SimError::InvalidModel(format!(
                    "frame `{}`: joint index {} out of range",
                    f.name, f.joint
                )));
            }
            if frames.iter().any(|g| g.name == f.name) {
                return Err(SimError::InvalidModel(format!(
                    "duplicate frame name `{}`",
                    f.name
                )));
            }
            frames.push(f);
        }

        if !(gravity.is_finite() && gravity >= 0.0) {
            return Err(SimError::InvalidModel(format!(
                "gravity must be finite and non-negative, got {gravity}"
            )));
        }

        Ok(RobotModel {
            joints,
            frames,
            gravity,
            coords,
            coord_start,
            path_mask,
            parent_rot_mask,
            b_matrix,
            actuated,
        })
    }

    /// Number of generalized coordinates.
    pub fn dof(&self) -> usize {
        self.coords.len()
    }

    /// Number of actuators.
    pub fn num_inputs(&self) -> usize {
        self.actuated.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn frames(&self) -> &[FrameDef] {
        &self.frames
    }

    /// Actuation matrix (eta x m of gear ratios).
    pub fn actuation_matrix(&self) -> &DMatrix<f64> {
        &self.b_matrix
    }

    /// Actuated joint indices in input-column order.
    pub fn actuated_joints(&self) -> &[usize] {
        &self.actuated
    }

    /// First generalized-coordinate index of a joint.
    pub fn joint_coord(&self, joint: usize) -> usize {
        self.coord_start[joint]
    }

    pub fn joint_index(&self, name: &str) -> SimResult<usize> {
        self.joints
            .iter()
            .position(|j| j.name == name)
            .ok_or_else(|| SimError::UnknownJoint(name.into()))
    }

    pub fn frame(&self, name: &str) -> SimResult<FrameId> {
        self.frames
            .iter()
            .position(|f| f.name == name)
            .map(FrameId)
            .ok_or_else(|| SimError::UnknownFrame(name.into()))
    }

    pub fn frame_def(&self, id: FrameId) -> &FrameDef {
        &self.frames[id.0]
    }

    pub(crate) fn coord_infos(&self) -> &[CoordInfo] {
        &self.coords
    }

    pub(crate) fn path_mask_of(&self, joint: usize) -> u64 {
        self.path_mask[joint]
    }

    pub(crate) fn parent_rot_mask_of(&self, joint: usize) -> u64 {
        self.parent_rot_mask[joint]
    }

    /// Total mass of all links, kg.
    pub fn total_mass(&self) -> f64 {
        self.joints.iter().map(|j| j.link.mass).sum()
    }

    /// Checks that a state vector has dimension 2*eta and is finite.
    pub fn check_state(&self, x: &DVector<f64>) -> SimResult<()> {
        if x.len() != 2 * self.dof() {
            return Err(SimError::DimensionMismatch {
                what: "state vector",
                expected: 2 * self.dof(),
                got: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite("state vector"));
        }
        Ok(())
    }
}

/// Planar pose (x, z, phi) of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub z: f64,
    pub phi: f64,
}

impl Pose {
    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_vec(vec![self.x, self.z, self.phi])
    }
}

/// 2x2 counterclockwise rotation.
pub fn rot2(phi: f64) -> nalgebra::Matrix2<f64> {
    let (s, c) = phi.sin_cos();
    nalgebra::Matrix2::new(c, -s, s, c)
}

/// Derivative direction of a rotating point: perp((x, z)) = (-z, x).
pub fn perp(v: nalgebra::Vector2<f64>) -> nalgebra::Vector2<f64> {
    nalgebra::Vector2::new(-v.y, v.x)
}
