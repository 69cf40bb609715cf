//! Builds the amputee walker: a 12-coordinate planar biped whose right leg
//! is transfemoral hardware, plus the matching 5-coordinate prosthesis-side
//! model used by the separated controller.
//!
//! Full model tree and coordinate layout (fixed):
//!
//! ```text
//! index joint  kind         coords    link
//! 0     base   planar base  0,1,2     head-arms-trunk (points up)
//! 1     lh     revolute     3         left thigh
//! 2     lk     revolute     4         left shank
//! 3     la     revolute     5         left foot (lies forward)
//! 4     rh     revolute     6         residual right thigh
//! 5     sock   fixed3       7,8,9     prosthesis upper segment
//! 6     pk     revolute     10        prosthesis shank
//! 7     pa     revolute     11        prosthesis foot
//! ```
//!
//! The socket joint models the physical human/prosthesis interface: its
//! three coordinates are pinned by a rigid attachment constraint during
//! simulation, and the constraint multiplier is the interaction wrench the
//! controller treats as a measured signal. The prosthesis-side model is the
//! same upper/shank/foot hardware on a free planar base placed at the socket
//! frame.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{SimError, SimResult};
use crate::multibody::{FrameDef, FrameId, Joint, JointKind, LinkParams, RobotModel};
use crate::prosthesis::AnthroTable;
use serde::{Deserialize, Serialize};

/// Body-level description of the human.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumanParams {
    pub total_mass: f64,
    pub height: f64,
    /// Fraction of the thigh kept after truncation, in (0, 1).
    pub residual_thigh_fraction: f64,
    #[serde(default)]
    pub anthro: AnthroTable,
}

/// Inertial parameters of one prosthesis segment. Segment lengths are
/// derived from the wearer's anthropometry so both legs match geometrically;
/// only the hardware's mass distribution is free.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SegmentInertia {
    pub mass: f64,
    pub com_offset: f64,
    pub inertia: f64,
}

impl SegmentInertia {
    fn link(&self, length: f64) -> LinkParams {
        LinkParams {
            mass: self.mass,
            length,
            com_offset: self.com_offset,
            inertia: self.inertia,
        }
    }
}

/// The transfemoral hardware: upper segment (socket body), shank, foot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProsthesisParams {
    pub upper: SegmentInertia,
    pub shank: SegmentInertia,
    pub foot: SegmentInertia,
}

/// Everything needed to build the walker.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkerParams {
    pub human: HumanParams,
    pub prosthesis: ProsthesisParams,
    pub gravity: f64,
}

impl WalkerParams {
    /// Same wearer, heavier by `delta` kilograms. The hardware is untouched,
    /// so the prosthesis-side model is bit-identical to the original's.
    pub fn with_added_human_mass(&self, delta: f64) -> SimResult<WalkerParams> {
        let mut p = self.clone();
        p.human.total_mass += delta;
        if p.human.total_mass <= 0.0 {
            return Err(SimError::Config(format!(
                "human mass must stay positive (delta {delta} leaves {})",
                p.human.total_mass
            )));
        }
        Ok(p)
    }
}

/// Named coordinate indices of the full model.
#[derive(Debug, Clone, Copy)]
pub struct CoordLayout {
    pub base: [usize; 3],
    pub lh: usize,
    pub lk: usize,
    pub la: usize,
    pub rh: usize,
    pub sock: [usize; 3],
    pub pk: usize,
    pub pa: usize,
}

impl CoordLayout {
    /// Prosthesis-side coordinates (knee, ankle) of the full model.
    pub fn s_coords(&self) -> [usize; 2] {
        [self.pk, self.pa]
    }

    /// State-vector indices (positions then velocities, dim 24) of all
    /// components the prosthesis-side outputs may depend on.
    pub fn s_state_indices(&self) -> [usize; 4] {
        [self.pk, self.pa, 12 + self.pk, 12 + self.pa]
    }
}

/// Frame handles used throughout the simulation.
#[derive(Debug, Clone, Copy)]
pub struct FrameLayout {
    /// Sole of the intact-side foot (full model).
    pub l_sole: FrameId,
    /// Sole of the prosthetic foot (full model).
    pub r_sole: FrameId,
    /// Socket child frame: the prosthesis upper segment (full model).
    pub sock_child: FrameId,
    /// Socket anchor frame on the residual thigh (full model).
    pub sock_anchor: FrameId,
    /// Sole of the prosthetic foot (prosthesis-side model).
    pub sub_sole: FrameId,
}

/// The built pair of models plus bookkeeping.
#[derive(Debug, Clone)]
pub struct Walker {
    pub full: RobotModel,
    pub sub: RobotModel,
    pub params: WalkerParams,
    pub coords: CoordLayout,
    pub frames: FrameLayout,
    /// Hip-to-ground distance with the leg straight; fall detection
    /// references this.
    pub leg_length: f64,
    /// Input indices of the human-side actuators (lh, lk, la, rh).
    pub r_inputs: [usize; 4],
    /// Input indices of the prosthesis actuators (pk, pa).
    pub s_inputs: [usize; 2],
}

fn revolute(
    name: &str,
    parent: usize,
    anchor: f64,
    mount: f64,
    link: LinkParams,
    actuated: bool,
) -> Joint {
    Joint {
        name: name.into(),
        kind: JointKind::Revolute,
        parent: Some(parent),
        anchor,
        mount,
        link,
        actuation: actuated.then_some(1.0),
    }
}

/// Builds the full and prosthesis-side models from body and hardware
/// parameters, with layout audits.
pub fn build_walker(params: WalkerParams) -> SimResult<Walker> {
    let h = &params.human;
    h.anthro.validate()?;
    if !(h.total_mass > 0.0 && h.total_mass.is_finite()) || !(h.height > 0.0) {
        return Err(SimError::Config(
            "human total mass and height must be positive".into(),
        ));
    }
    if !(0.05..=0.95).contains(&h.residual_thigh_fraction) {
        return Err(SimError::Config(format!(
            "residual thigh fraction {} outside the buildable range [0.05, 0.95]",
            h.residual_thigh_fraction
        )));
    }

    let thigh = h.anthro.thigh(h.total_mass, h.height);
    let shank = h.anthro.shank(h.total_mass, h.height);
    let foot = h.anthro.foot(h.total_mass, h.height);
    let hat = h.anthro.hat(h.total_mass, h.height);
    let residual = h
        .anthro
        .residual_thigh(h.total_mass, h.height, h.residual_thigh_fraction);
    let upper_len = thigh.length - residual.length;
    if upper_len <= 1e-3 {
        return Err(SimError::Config(
            "residual thigh leaves no room for the upper segment".into(),
        ));
    }

    let p = &params.prosthesis;
    let upper = p.upper.link(upper_len);
    let p_shank = p.shank.link(shank.length);
    let p_foot = p.foot.link(foot.length);
    for (name, link) in [("upper", &upper), ("shank", &p_shank), ("foot", &p_foot)] {
        link.validate(name)?;
        if link.com_offset > link.length {
            return Err(SimError::Config(format!(
                "prosthesis {name}: com_offset {} exceeds segment length {:.4}",
                link.com_offset, link.length
            )));
        }
    }

    let sole_offset = 0.5 * foot.length;

    // Full model. The base sits at the hip point carrying the trunk (mount
    // pi points it up); hip joints undo that rotation so legs hang down at
    // the zero pose; ankle mounts lay the feet forward; sole frames carry
    // rel_rot -pi/2 so a flat foot reads frame angle zero.
    let joints = vec![
        Joint {
            name: "base".into(),
            kind: JointKind::PlanarBase,
            parent: None,
            anchor: 0.0,
            mount: PI,
            link: hat,
            actuation: None,
        },
        revolute("lh", 0, 0.0, -PI, thigh.clone(), true),
        revolute("lk", 1, thigh.length, 0.0, shank.clone(), true),
        revolute("la", 2, shank.length, FRAC_PI_2, foot.clone(), true),
        revolute("rh", 0, 0.0, -PI, residual.clone(), true),
        Joint {
            name: "sock".into(),
            kind: JointKind::Fixed3,
            parent: Some(4),
            anchor: residual.length,
            mount: 0.0,
            link: upper.clone(),
            actuation: None,
        },
        revolute("pk", 5, upper_len, 0.0, p_shank.clone(), true),
        revolute("pa", 6, p_shank.length, FRAC_PI_2, p_foot.clone(), true),
    ];
    let frames = vec![
        FrameDef {
            name: "l_sole".into(),
            joint: 3,
            offset: sole_offset,
            rel_rot: -FRAC_PI_2,
        },
        FrameDef {
            name: "r_sole".into(),
            joint: 7,
            offset: sole_offset,
            rel_rot: -FRAC_PI_2,
        },
        FrameDef {
            name: "sock_anchor".into(),
            joint: 4,
            offset: residual.length,
            rel_rot: 0.0,
        },
    ];
    let full = RobotModel::new(joints, frames, params.gravity)?;

    // Prosthesis-side model: the same hardware on a free planar base located
    // at the socket child frame.
    let sub_joints = vec![
        Joint {
            name: "base".into(),
            kind: JointKind::PlanarBase,
            parent: None,
            anchor: 0.0,
            mount: 0.0,
            link: upper,
            actuation: None,
        },
        revolute("pk", 0, upper_len, 0.0, p_shank.clone(), true),
        revolute("pa", 1, p_shank.length, FRAC_PI_2, p_foot, true),
    ];
    let sub_frames = vec![FrameDef {
        name: "r_sole".into(),
        joint: 2,
        offset: sole_offset,
        rel_rot: -FRAC_PI_2,
    }];
    let sub = RobotModel::new(sub_joints, sub_frames, params.gravity)?;

    // Layout audits: the rest of the crate hard-codes these index maps.
    let coords = CoordLayout {
        base: [0, 1, 2],
        lh: 3,
        lk: 4,
        la: 5,
        rh: 6,
        sock: [7, 8, 9],
        pk: 10,
        pa: 11,
    };
    let audit = [
        (full.dof() == 12, "full model must have 12 coordinates"),
        (full.num_inputs() == 6, "full model must have 6 inputs"),
        (sub.dof() == 5, "prosthesis-side model must have 5 coordinates"),
        (sub.num_inputs() == 2, "prosthesis-side model must have 2 inputs"),
        (
            full.joint_coord(full.joint_index("pk")?) == coords.pk
                && full.joint_coord(full.joint_index("pa")?) == coords.pa
                && full.joint_coord(full.joint_index("sock")?) == coords.sock[0],
            "full model coordinate layout drifted",
        ),
        (
            sub.joint_coord(sub.joint_index("pk")?) == 3
                && sub.joint_coord(sub.joint_index("pa")?) == 4,
            "prosthesis-side coordinate layout drifted",
        ),
    ];
    for (ok, msg) in audit {
        if !ok {
            return Err(SimError::InvalidModel(msg.into()));
        }
    }

    let frames = FrameLayout {
        l_sole: full.frame("l_sole")?,
        r_sole: full.frame("r_sole")?,
        sock_child: full.frame("sock")?,
        sock_anchor: full.frame("sock_anchor")?,
        sub_sole: sub.frame("r_sole")?,
    };

    Ok(Walker {
        leg_length: thigh.length + shank.length,
        full,
        sub,
        params,
        coords,
        frames,
        r_inputs: [0, 1, 2, 3],
        s_inputs: [4, 5],
    })
}

/// Reference wearer and hardware used by the shipped model files and tests:
/// a 65.8 kg, 1.73 m person with a mid-thigh amputation and a 5 kg
/// transfemoral prosthesis.
pub fn reference_params() -> WalkerParams {
    WalkerParams {
        human: HumanParams {
            total_mass: 65.8,
            height: 1.73,
            residual_thigh_fraction: 0.5,
            anthro: AnthroTable::default(),
        },
        prosthesis: ProsthesisParams {
            upper: SegmentInertia {
                mass: 1.4,
                com_offset: 0.09,
                inertia: 0.008,
            },
            shank: SegmentInertia {
                mass: 2.6,
                com_offset: 0.16,
                inertia: 0.025,
            },
            foot: SegmentInertia {
                mass: 1.0,
                com_offset: 0.10,
                inertia: 0.006,
            },
        },
        gravity: 9.81,
    }
}
