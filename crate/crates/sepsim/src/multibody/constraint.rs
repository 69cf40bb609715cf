//! Holonomic constraints and constrained forward dynamics.
//!
//! Two constraint kinds cover everything the walker needs:
//!
//! * `PosePin` pins a frame's planar pose to a fixed world target (stance
//!   foot on the ground). Rows are world-frame, so the multiplier is the
//!   world wrench the ground applies to the pinned body.
//! * `WeldLocal` rigidly joins a child frame to an anchor frame, with the
//!   translation rows resolved in the child frame's instantaneous axes.
//!   The multiplier is then the body-frame wrench applied to the child at
//!   the joint, with the equal-and-opposite reaction on the anchor side.
//!   That is exactly what a load cell bolted across the joint would read,
//!   which is why the rows are rotated instead of left in world axes.
//!
//! Forward dynamics eliminates the multiplier by substitution. With
//! `D qdd = -H + B u + tau_ext + J^T lambda` and `J qdd + Jdot qd = 0`,
//!
//! `S lambda = J D^-1 (H - tau_ext) - Jdot qd - J D^-1 B u`,  `S = J D^-1 J^T`
//!
//! so both the acceleration and the multiplier split into a drift part and a
//! part linear in `u`:
//!
//! `qdd = a_eff + G_eff u`, `lambda = lambda_f + lambda_g u`.
//!
//! The split is the quantity of interest for control design, so it is the
//! primary API; plain forward dynamics is a thin wrapper. A KKT-form solver
//! is kept as an independent cross-check path.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{SimError, SimResult};
use crate::multibody::kinematics::KinCache;
use crate::multibody::model::{rot2, FrameId, Pose, RobotModel};

/// Matrix of the planar cross operator: `P v = perp(v)`.
fn perp_matrix() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

#[derive(Debug, Clone)]
pub enum Constraint {
    /// Hold `frame` at a fixed world pose.
    PosePin { frame: FrameId, target: Pose },
    /// Weld `child` onto `anchor`, rows in child-frame axes.
    WeldLocal { child: FrameId, anchor: FrameId },
}

impl Constraint {
    pub fn rows(&self) -> usize {
        3
    }
}

/// An ordered stack of constraints with fixed row offsets.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
    offsets: Vec<usize>,
    rows: usize,
}

impl ConstraintSet {
    pub fn new(model: &RobotModel, constraints: Vec<Constraint>) -> SimResult<ConstraintSet> {
        let check = |f: &FrameId| -> SimResult<()> {
            if f.0 >= model.frames().len() {
                return Err(SimError::UnknownFrame(format!("frame id {}", f.0)));
            }
            Ok(())
        };
        for c in &constraints {
            match c {
                Constraint::PosePin { frame, .. } => check(frame)?,
                Constraint::WeldLocal { child, anchor } => {
                    check(child)?;
                    check(anchor)?;
                    if child == anchor {
                        return Err(SimError::InvalidModel(
                            "weld child and anchor frames must differ".into(),
                        ));
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(constraints.len());
        let mut rows = 0;
        for c in &constraints {
            offsets.push(rows);
            rows += c.rows();
        }
        Ok(ConstraintSet {
            constraints,
            offsets,
            rows,
        })
    }

    pub fn empty() -> ConstraintSet {
        ConstraintSet {
            constraints: Vec::new(),
            offsets: Vec::new(),
            rows: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Row range occupied by constraint `i` in the stacked system.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.constraints[i].rows()
    }

    /// Position residual, velocity-map Jacobian, and its drift `Jdot qd`.
    ///
    /// For `WeldLocal` the velocity map is `V = R(phi_c)^T (pdot_c - pdot_a)`
    /// stacked with the relative spin, so the drift picks up the frame-spin
    /// term: `Vdot = J qdd + R^T [(Jdot_c - Jdot_a) qd - omega_c P (J_c - J_a) qd]`.
    pub fn data(&self, kin: &KinCache, theta_dot: &DVector<f64>) -> SimResult<ConstraintData> {
        let model = kin.model;
        let eta = model.dof();
        if theta_dot.len() != eta {
            return Err(SimError::DimensionMismatch {
                what: "theta_dot",
                expected: eta,
                got: theta_dot.len(),
            });
        }
        let mut jac = DMatrix::zeros(self.rows, eta);
        let mut jdot_qdot = DVector::zeros(self.rows);
        let mut residual = DVector::zeros(self.rows);

        for (i, c) in self.constraints.iter().enumerate() {
            let r0 = self.offsets[i];
            match c {
                Constraint::PosePin { frame, target } => {
                    let pose = kin.frame_pose(*frame);
                    let j = kin.frame_jacobian(*frame);
                    let jd_qd = kin.frame_jac_dot_qdot(*frame, theta_dot);
                    residual[r0] = pose.x - target.x;
                    residual[r0 + 1] = pose.z - target.z;
                    residual[r0 + 2] = pose.phi - target.phi;
                    jac.view_mut((r0, 0), (3, eta)).copy_from(&j);
                    jdot_qdot.rows_mut(r0, 3).copy_from(&jd_qd);
                }
                Constraint::WeldLocal { child, anchor } => {
                    let pc = kin.frame_pose(*child);
                    let pa = kin.frame_pose(*anchor);
                    let jc = kin.frame_jacobian(*child);
                    let ja = kin.frame_jacobian(*anchor);
                    let dj = jc - ja;
                    let rt = rot2(pc.phi).transpose();

                    // Residual in child axes.
                    let dp = rt * Vector2::new(pc.x - pa.x, pc.z - pa.z);
                    residual[r0] = dp.x;
                    residual[r0 + 1] = dp.y;
                    residual[r0 + 2] = pc.phi - pa.phi;

                    // Rows: rotate the translation block, keep the spin row.
                    for k in 0..eta {
                        let col = rt * Vector2::new(dj[(0, k)], dj[(1, k)]);
                        jac[(r0, k)] = col.x;
                        jac[(r0 + 1, k)] = col.y;
                        jac[(r0 + 2, k)] = dj[(2, k)];
                    }

                    // Drift with the rotating-axes correction.
                    let djd = kin.frame_jac_dot_qdot(*child, theta_dot)
                        - kin.frame_jac_dot_qdot(*anchor, theta_dot);
                    let child_joint = model.frame_def(*child).joint;
                    let omega = kin.frame_angle_rate(child_joint, theta_dot);
                    let rel_v3 = dj * theta_dot;
                    let rel_v = Vector2::new(rel_v3[0], rel_v3[1]);
                    let xy_drift =
                        rt * (Vector2::new(djd[0], djd[1]) - perp_matrix() * rel_v * omega);
                    jdot_qdot[r0] = xy_drift.x;
                    jdot_qdot[r0 + 1] = xy_drift.y;
                    jdot_qdot[r0 + 2] = djd[2];
                }
            }
        }

        Ok(ConstraintData {
            jac,
            jdot_qdot,
            residual,
        })
    }
}

/// Constraint geometry at one state.
pub struct ConstraintData {
    /// c x eta velocity-map Jacobian.
    pub jac: DMatrix<f64>,
    /// Drift term `Jdot qd` (c).
    pub jdot_qdot: DVector<f64>,
    /// Position-level residual (c), zero on the constraint surface.
    pub residual: DVector<f64>,
}

/// Affine decomposition of the constrained dynamics in the input.
pub struct ConstrainedDynamics {
    /// Drift acceleration `a_eff` (eta).
    pub a_eff: DVector<f64>,
    /// Input-to-acceleration map `G_eff` (eta x m).
    pub g_eff: DMatrix<f64>,
    /// Multiplier drift (c).
    pub lambda_f: DVector<f64>,
    /// Multiplier input map (c x m).
    pub lambda_g: DMatrix<f64>,
}

impl ConstrainedDynamics {
    pub fn accel(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.a_eff + &self.g_eff * u
    }

    pub fn multiplier(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.lambda_f + &self.lambda_g * u
    }
}

/// Input-affine form of the constrained dynamics at one state.
///
/// `tau_ext` is an optional extra generalized force (used by the subsystem
/// model to inject a measured joint wrench); it folds into the drift.
pub fn constrained_dynamics(
    model: &RobotModel,
    set: &ConstraintSet,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
    tau_ext: Option<&DVector<f64>>,
) -> SimResult<ConstrainedDynamics> {
    let eta = model.dof();
    if theta.len() != eta {
        return Err(SimError::DimensionMismatch {
            what: "theta",
            expected: eta,
            got: theta.len(),
        });
    }
    let terms = crate::multibody::dynamics::DynTerms::new(model, theta);
    let h = terms.bias(theta_dot);
    let b = model.actuation_matrix();
    let m = model.num_inputs();

    let chol = nalgebra::Cholesky::new(terms.d.clone()).ok_or(SimError::RankDeficient {
        what: "mass matrix",
        detail: "Cholesky factorization failed".into(),
    })?;

    // Drift force: -H plus any external generalized force.
    let mut f_drift = -&h;
    if let Some(ext) = tau_ext {
        if ext.len() != eta {
            return Err(SimError::DimensionMismatch {
                what: "tau_ext",
                expected: eta,
                got: ext.len(),
            });
        }
        f_drift += ext;
    }

    let dinv_f = chol.solve(&f_drift);
    let dinv_b = chol.solve(b);

    if set.rows() == 0 {
        return Ok(ConstrainedDynamics {
            a_eff: dinv_f,
            g_eff: dinv_b,
            lambda_f: DVector::zeros(0),
            lambda_g: DMatrix::zeros(0, m),
        });
    }

    let data = set.data(&terms.kin, theta_dot)?;
    let j = &data.jac;
    let dinv_jt = chol.solve(&j.transpose());
    let s = j * &dinv_jt;
    let s_chol = nalgebra::Cholesky::new(s).ok_or(SimError::RankDeficient {
        what: "constraint Schur complement",
        detail: "constraint rows are dependent at this configuration".into(),
    })?;

    // S lambda_f = -(J a_free + Jdot qd), S lambda_g = -J D^-1 B.
    let lambda_f = s_chol.solve(&(-(j * &dinv_f) - &data.jdot_qdot));
    let lambda_g = s_chol.solve(&(-(j * &dinv_b)));

    let a_eff = &dinv_f + &dinv_jt * &lambda_f;
    let g_eff = &dinv_b + &dinv_jt * &lambda_g;

    Ok(ConstrainedDynamics {
        a_eff,
        g_eff,
        lambda_f,
        lambda_g,
    })
}

/// Constrained acceleration and multiplier for a concrete input.
pub fn forward_dynamics(
    model: &RobotModel,
    set: &ConstraintSet,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
    u: &DVector<f64>,
    tau_ext: Option<&DVector<f64>>,
) -> SimResult<(DVector<f64>, DVector<f64>)> {
    if u.len() != model.num_inputs() {
        return Err(SimError::DimensionMismatch {
            what: "u",
            expected: model.num_inputs(),
            got: u.len(),
        });
    }
    let dyn_ = constrained_dynamics(model, set, theta, theta_dot, tau_ext)?;
    Ok((dyn_.accel(u), dyn_.multiplier(u)))
}

/// Same quantities through the saddle-point system
/// `[[D, -J^T], [J, 0]] [qdd; lambda] = [-H + B u + tau_ext; -Jdot qd]`,
/// solved by LU with full pivoting. Kept as an independent path for tests.
pub fn forward_dynamics_kkt(
    model: &RobotModel,
    set: &ConstraintSet,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
    u: &DVector<f64>,
    tau_ext: Option<&DVector<f64>>,
) -> SimResult<(DVector<f64>, DVector<f64>)> {
    let eta = model.dof();
    if theta.len() != eta || theta_dot.len() != eta {
        return Err(SimError::DimensionMismatch {
            what: "state",
            expected: eta,
            got: theta.len().max(theta_dot.len()),
        });
    }
    if u.len() != model.num_inputs() {
        return Err(SimError::DimensionMismatch {
            what: "u",
            expected: model.num_inputs(),
            got: u.len(),
        });
    }
    let terms = crate::multibody::dynamics::DynTerms::new(model, theta);
    let h = terms.bias(theta_dot);
    let c = set.rows();
    let n = eta + c;

    let mut kkt = DMatrix::zeros(n, n);
    kkt.view_mut((0, 0), (eta, eta)).copy_from(&terms.d);
    let mut rhs = DVector::zeros(n);
    let mut force = model.actuation_matrix() * u - &h;
    if let Some(ext) = tau_ext {
        force += ext;
    }
    rhs.rows_mut(0, eta).copy_from(&force);

    if c > 0 {
        let data = set.data(&terms.kin, theta_dot)?;
        kkt.view_mut((0, eta), (eta, c))
            .copy_from(&(-data.jac.transpose()));
        kkt.view_mut((eta, 0), (c, eta)).copy_from(&data.jac);
        rhs.rows_mut(eta, c).copy_from(&(-&data.jdot_qdot));
    }

    let lu = kkt.full_piv_lu();
    let sol = lu.solve(&rhs).ok_or(SimError::RankDeficient {
        what: "constrained dynamics KKT system",
        detail: "saddle-point matrix is singular".into(),
    })?;
    Ok((
        sol.rows(0, eta).into_owned(),
        sol.rows(eta, c).into_owned(),
    ))
}

/// Project a state onto the constraint surface (position by Gauss-Newton,
/// velocity by least-squares annihilation of `J theta_dot`).
///
/// Intended for cleanup after integration steps, where the state is within
/// integrator tolerance of the surface already.
pub fn project_state(
    model: &RobotModel,
    set: &ConstraintSet,
    theta: &mut DVector<f64>,
    theta_dot: &mut DVector<f64>,
) -> SimResult<()> {
    if set.rows() == 0 {
        return Ok(());
    }
    const POS_TOL: f64 = 1e-13;
    let mut converged = false;
    for _ in 0..20 {
        let kin = KinCache::new(model, theta);
        let data = set.data(&kin, theta_dot)?;
        if data.residual.amax() <= POS_TOL {
            converged = true;
            break;
        }
        let jjt = &data.jac * data.jac.transpose();
        let chol = nalgebra::Cholesky::new(jjt).ok_or(SimError::RankDeficient {
            what: "constraint projection",
            detail: "J J^T singular during projection".into(),
        })?;
        let corr = data.jac.transpose() * chol.solve(&data.residual);
        *theta -= corr;
    }
    if !converged {
        let kin = KinCache::new(model, theta);
        let data = set.data(&kin, theta_dot)?;
        if data.residual.amax() > 1e-8 {
            return Err(SimError::IntegrationFailure(format!(
                "constraint projection stalled at residual {:.3e}",
                data.residual.amax()
            )));
        }
    }
    let kin = KinCache::new(model, theta);
    let data = set.data(&kin, theta_dot)?;
    let jv = &data.jac * &*theta_dot;
    if jv.amax() > 0.0 {
        let jjt = &data.jac * data.jac.transpose();
        let chol = nalgebra::Cholesky::new(jjt).ok_or(SimError::RankDeficient {
            what: "constraint projection",
            detail: "J J^T singular during velocity projection".into(),
        })?;
        *theta_dot -= data.jac.transpose() * chol.solve(&jv);
    }
    Ok(())
}
