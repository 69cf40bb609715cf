//! Builds the controller outputs for a domain from gait data.
//!
//! The six outputs live in one fixed, canonical order everywhere (trace
//! columns, gain rows, theorem checks):
//!
//! 0. hip advance rate minus its target (velocity form);
//! 1. stance ankle angle minus its reference curve;
//! 2. stance hip angle minus its reference curve;
//! 3. swing hip angle minus its reference curve;
//! 4. swing knee angle minus its reference curve;
//! 5. swing ankle angle minus its reference curve.
//!
//! Which physical joints fill the stance/swing roles depends on the domain.
//! The position rows drive their joints along curves in a phase variable:
//! the linearized hip advance over the stance foot,
//! `dp = (r_sk + r_sa) * q_ankle + r_sk * q_knee`, with lever arms read off
//! the model's zero pose (ankle rotation swings the whole leg, knee rotation
//! swings the thigh). In the prosthesis-stance domain that phase depends only
//! on prosthesis-side coordinates.

use nalgebra::DVector;

use crate::ctrl::{MechOutput, PhaseSource, PositionOutput, RowGains, StatePhase, VelocityOutput};
use crate::error::{SimError, SimResult};
use crate::gait::{Bezier, Domain, DomainGait, Gains, NUM_TRACKED};
use crate::multibody::{KinCache, RobotModel};

/// Joint names filling each role in a given domain.
#[derive(Debug, Clone, Copy)]
pub struct Roles {
    pub stance_hip: &'static str,
    pub stance_knee: &'static str,
    pub stance_ankle: &'static str,
    pub swing_hip: &'static str,
    pub swing_knee: &'static str,
    pub swing_ankle: &'static str,
}

impl Roles {
    /// Tracked joint for each canonical position row.
    pub fn tracked(&self, row: usize) -> &'static str {
        match row {
            0 => self.stance_ankle,
            1 => self.stance_hip,
            2 => self.swing_hip,
            3 => self.swing_knee,
            4 => self.swing_ankle,
            _ => unreachable!("tracked row out of range"),
        }
    }
}

pub fn roles(domain: Domain) -> Roles {
    match domain {
        Domain::ProsthesisStance => Roles {
            stance_hip: "rh",
            stance_knee: "pk",
            stance_ankle: "pa",
            swing_hip: "lh",
            swing_knee: "lk",
            swing_ankle: "la",
        },
        Domain::ProsthesisSwing => Roles {
            stance_hip: "lh",
            stance_knee: "lk",
            stance_ankle: "la",
            swing_hip: "rh",
            swing_knee: "pk",
            swing_ankle: "pa",
        },
    }
}

/// Lever arms of the stance leg read from the zero pose: hip-to-knee and
/// knee-to-ankle pivot distances.
pub fn stance_lever_arms(model: &RobotModel, r: &Roles) -> SimResult<(f64, f64)> {
    let zero = DVector::zeros(model.dof());
    let kin = KinCache::new(model, &zero);
    let hip = model.joint_index(r.stance_hip)?;
    let knee = model.joint_index(r.stance_knee)?;
    let ankle = model.joint_index(r.stance_ankle)?;
    let r_sk = (kin.origins[knee] - kin.origins[hip]).norm();
    let r_sa = (kin.origins[ankle] - kin.origins[knee]).norm();
    if r_sk < 1e-9 || r_sa < 1e-9 {
        return Err(SimError::InvalidModel(
            "stance leg has coincident pivots; hip advance weights degenerate".into(),
        ));
    }
    Ok((r_sk, r_sa))
}

fn coord_of(model: &RobotModel, joint: &str) -> SimResult<usize> {
    let j = model.joint_index(joint)?;
    Ok(model.joint_coord(j))
}

fn unit(dim: usize, k: usize) -> DVector<f64> {
    let mut e = DVector::zeros(dim);
    e[k] = 1.0;
    e
}

/// Hip advance weights `(r_sk + r_sa) e_ankle + r_sk e_knee` in `model`'s
/// coordinates, with joints looked up by name so the same routine serves the
/// full model and the prosthesis-side model.
pub fn hip_advance_weights(
    model: &RobotModel,
    knee: &str,
    ankle: &str,
    r_sk: f64,
    r_sa: f64,
) -> SimResult<DVector<f64>> {
    let mut w = DVector::zeros(model.dof());
    w[coord_of(model, ankle)?] = r_sk + r_sa;
    w[coord_of(model, knee)?] = r_sk;
    Ok(w)
}

/// Everything the controller needs about a domain's outputs.
pub struct OutputPlan {
    /// Outputs in canonical order.
    pub outputs: Vec<MechOutput>,
    /// Per-row feedback gains, same order.
    pub gains: Vec<RowGains>,
    /// Rows whose outputs depend only on prosthesis-side quantities.
    pub s_rows: Vec<usize>,
    /// Hip advance weights in this model's coordinates.
    pub phase_weights: DVector<f64>,
    /// Phase normalization shared by all position rows.
    pub phase: StatePhase,
    /// Stance leg lever arms used for the weights.
    pub r_sk: f64,
    pub r_sa: f64,
}

/// Inputs shared by the full-model and prosthesis-side plan builders.
pub struct PlanInputs<'a> {
    pub domain: Domain,
    pub dgait: &'a DomainGait,
    /// Reference curves in canonical tracked order, typically the nominal
    /// gait curves respliced onto the entry state.
    pub curves: &'a [Bezier],
    /// Hip advance at domain entry; the phase is anchored here so it starts
    /// at zero on the measured entry state.
    pub phase_start: f64,
    pub gains: Gains,
}

fn check_curves(curves: &[Bezier]) -> SimResult<()> {
    if curves.len() != NUM_TRACKED {
        return Err(SimError::DimensionMismatch {
            what: "reference curves",
            expected: NUM_TRACKED,
            got: curves.len(),
        });
    }
    Ok(())
}

/// Builds the six-output plan for the full walker model. All position rows
/// use the configuration phase.
pub fn full_plan(model: &RobotModel, inp: &PlanInputs) -> SimResult<OutputPlan> {
    check_curves(inp.curves)?;
    let r = roles(inp.domain);
    let (r_sk, r_sa) = stance_lever_arms(model, &r)?;
    let weights = hip_advance_weights(model, r.stance_knee, r.stance_ankle, r_sk, r_sa)?;
    let phase = StatePhase::new(weights.clone(), inp.phase_start, inp.dgait.dp_end)?;

    let mut outputs = Vec::with_capacity(1 + NUM_TRACKED);
    let mut gains = Vec::with_capacity(1 + NUM_TRACKED);
    outputs.push(MechOutput::Velocity(VelocityOutput {
        w: weights.clone(),
        target: inp.dgait.v_hip,
    }));
    gains.push(RowGains {
        kp: 0.0,
        kd: inp.gains.kd_velocity,
    });
    for row in 0..NUM_TRACKED {
        let coord = coord_of(model, r.tracked(row))?;
        outputs.push(MechOutput::Position(PositionOutput {
            w: unit(model.dof(), coord),
            curve: Box::new(inp.curves[row].clone()),
            phase: PhaseSource::State(phase.clone()),
        }));
        gains.push(RowGains {
            kp: inp.gains.kp,
            kd: inp.gains.kd,
        });
    }

    let s_rows = match inp.domain {
        // Hip advance rate and stance ankle are prosthesis-side when the
        // prosthetic foot is the stance foot.
        Domain::ProsthesisStance => vec![0, 1],
        // Swing knee and swing ankle are prosthesis-side during swing.
        Domain::ProsthesisSwing => vec![4, 5],
    };

    Ok(OutputPlan {
        outputs,
        gains,
        s_rows,
        phase_weights: weights,
        phase,
        r_sk,
        r_sa,
    })
}

/// Builds the prosthesis-side output rows against the prosthesis-side model.
/// The rows correspond one-to-one (same order) with the full plan's `s_rows`.
///
/// In the stance domain the phase is a function of the subsystem's own
/// coordinates, so the rows are self-contained. In the swing domain the
/// tracked prosthesis joints follow curves in an exogenous phase signal, so
/// the rows are time-based and each evaluation takes a phase sample.
pub fn subsystem_plan(
    sub: &RobotModel,
    r_sk: f64,
    r_sa: f64,
    inp: &PlanInputs,
) -> SimResult<OutputPlan> {
    check_curves(inp.curves)?;
    let weights = hip_advance_weights(sub, "pk", "pa", r_sk, r_sa)?;
    let phase = StatePhase::new(weights.clone(), inp.phase_start, inp.dgait.dp_end)?;

    let mut outputs = Vec::new();
    let mut gains = Vec::new();
    match inp.domain {
        Domain::ProsthesisStance => {
            outputs.push(MechOutput::Velocity(VelocityOutput {
                w: weights.clone(),
                target: inp.dgait.v_hip,
            }));
            gains.push(RowGains {
                kp: 0.0,
                kd: inp.gains.kd_velocity,
            });
            // Stance ankle row, phased by the subsystem's own configuration.
            outputs.push(MechOutput::Position(PositionOutput {
                w: unit(sub.dof(), coord_of(sub, "pa")?),
                curve: Box::new(inp.curves[0].clone()),
                phase: PhaseSource::State(phase.clone()),
            }));
            gains.push(RowGains {
                kp: inp.gains.kp,
                kd: inp.gains.kd,
            });
        }
        Domain::ProsthesisSwing => {
            // Swing knee and swing ankle rows, phased by a measured signal.
            for (joint, row) in [("pk", 3), ("pa", 4)] {
                outputs.push(MechOutput::Position(PositionOutput {
                    w: unit(sub.dof(), coord_of(sub, joint)?),
                    curve: Box::new(inp.curves[row].clone()),
                    phase: PhaseSource::Time,
                }));
                gains.push(RowGains {
                    kp: inp.gains.kp,
                    kd: inp.gains.kd,
                });
            }
        }
    }

    let s_rows = (0..outputs.len()).collect();
    Ok(OutputPlan {
        outputs,
        gains,
        s_rows,
        phase_weights: weights,
        phase,
        r_sk,
        r_sa,
    })
}
