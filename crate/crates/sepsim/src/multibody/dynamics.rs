//! Mass matrix, bias forces, and energy for planar trees.
//!
//! The mass matrix is assembled from per-link center-of-mass Jacobians,
//! `D = sum_i m_i Jc_i^T Jc_i + I_i jw_i^T jw_i`, with `jw_i` the constant
//! rotation-indicator row. Its configuration partials are analytic (see
//! `KinCache::com_jacobian_partial`), which keeps the Coriolis matrix exact:
//! with `P_k = dD/dtheta_k`,
//!
//! `C[i][j] = 1/2 sum_k (P_k[i][j] + P_j[i][k] - P_i[j][k]) theta_dot_k`
//!
//! is the Christoffel convention, so `Ddot - 2C` is skew-symmetric and the
//! unforced dynamics conserve energy exactly up to integration error.

use nalgebra::{DMatrix, DVector, Matrix2xX};

use crate::error::{SimError, SimResult};
use crate::multibody::kinematics::KinCache;
use crate::multibody::model::{CoordKind, RobotModel};

/// Mass matrix and everything derived from one configuration.
pub struct DynTerms<'m> {
    pub kin: KinCache<'m>,
    /// eta x eta mass matrix.
    pub d: DMatrix<f64>,
    /// Partials dD/dtheta_k, one per coordinate.
    pub d_partials: Vec<DMatrix<f64>>,
    /// Gravity vector dV/dtheta.
    pub g_vec: DVector<f64>,
}

impl<'m> DynTerms<'m> {
    pub fn new(model: &'m RobotModel, theta: &DVector<f64>) -> DynTerms<'m> {
        let kin = KinCache::new(model, theta);
        let eta = model.dof();
        let nj = model.joints().len();

        // Rotation indicator rows per link.
        let mut jw: Vec<DVector<f64>> = Vec::with_capacity(nj);
        for j in 0..nj {
            let mut row = DVector::zeros(eta);
            let mask = model.path_mask_of(j);
            for (k, info) in model.coord_infos().iter().enumerate() {
                if mask & (1 << k) != 0 && info.kind == CoordKind::Rot {
                    row[k] = 1.0;
                }
            }
            jw.push(row);
        }

        let mut d = DMatrix::zeros(eta, eta);
        for (j, joint) in model.joints().iter().enumerate() {
            let jc = &kin.com_jac[j];
            d.gemm_tr(joint.link.mass, jc, jc, 1.0);
            let w = &jw[j];
            d.ger(joint.link.inertia, w, w, 1.0);
        }

        // Analytic partials.
        let mut d_partials = Vec::with_capacity(eta);
        for k in 0..eta {
            let mut pk = DMatrix::zeros(eta, eta);
            for (j, joint) in model.joints().iter().enumerate() {
                if model.path_mask_of(j) & (1 << k) == 0 {
                    continue;
                }
                let a: Matrix2xX<f64> = kin.com_jacobian_partial(j, k);
                let jc = &kin.com_jac[j];
                // m * (A^T Jc + Jc^T A)
                pk.gemm_tr(joint.link.mass, &a, jc, 1.0);
                pk.gemm_tr(joint.link.mass, jc, &a, 1.0);
            }
            d_partials.push(pk);
        }

        // Gravity: V = g * sum_i m_i z_i, so dV/dtheta = g * sum m_i Jc_i[z-row].
        let mut g_vec = DVector::zeros(eta);
        for (j, joint) in model.joints().iter().enumerate() {
            let jc = &kin.com_jac[j];
            for k in 0..eta {
                g_vec[k] += model.gravity * joint.link.mass * jc[(1, k)];
            }
        }

        DynTerms {
            kin,
            d,
            d_partials,
            g_vec,
        }
    }

    /// Christoffel Coriolis matrix for the given velocity.
    pub fn coriolis(&self, theta_dot: &DVector<f64>) -> DMatrix<f64> {
        let eta = self.d.nrows();
        let mut c = DMatrix::zeros(eta, eta);
        // 1/2 (Ddot + M2 - M3), see module docs.
        for k in 0..eta {
            if theta_dot[k] != 0.0 {
                c += &self.d_partials[k] * (0.5 * theta_dot[k]);
            }
        }
        // M2[i][j] = (P_j qd)_i, M3[i][j] = (P_i qd)_j = M2^T[i][j].
        let mut m2 = DMatrix::zeros(eta, eta);
        for j in 0..eta {
            let col = &self.d_partials[j] * theta_dot;
            m2.column_mut(j).copy_from(&col);
        }
        c += &m2 * 0.5;
        c -= m2.transpose() * 0.5;
        c
    }

    /// Bias forces H = C(theta, theta_dot) theta_dot + G(theta).
    pub fn bias(&self, theta_dot: &DVector<f64>) -> DVector<f64> {
        let eta = self.d.nrows();
        // C qd = Ddot qd - 1/2 grad(qd^T D qd): cheaper than forming C.
        let mut h = DVector::zeros(eta);
        for k in 0..eta {
            if theta_dot[k] != 0.0 {
                h += &self.d_partials[k] * theta_dot * theta_dot[k];
            }
        }
        for i in 0..eta {
            h[i] -= 0.5 * theta_dot.dot(&(&self.d_partials[i] * theta_dot));
        }
        h += &self.g_vec;
        h
    }

    /// Kinetic and potential energy at this configuration.
    pub fn energy(&self, theta_dot: &DVector<f64>) -> (f64, f64) {
        let t = 0.5 * theta_dot.dot(&(&self.d * theta_dot));
        let model = self.kin.model;
        let v: f64 = model
            .joints()
            .iter()
            .enumerate()
            .map(|(j, joint)| model.gravity * joint.link.mass * self.kin.coms[j].y)
            .sum();
        (t, v)
    }
}

fn check_dims(model: &RobotModel, theta: &DVector<f64>) -> SimResult<()> {
    if theta.len() != model.dof() {
        return Err(SimError::DimensionMismatch {
            what: "theta",
            expected: model.dof(),
            got: theta.len(),
        });
    }
    Ok(())
}

/// Symmetric positive-definite mass matrix at `theta`.
pub fn mass_matrix(model: &RobotModel, theta: &DVector<f64>) -> SimResult<DMatrix<f64>> {
    check_dims(model, theta)?;
    Ok(DynTerms::new(model, theta).d)
}

/// Coriolis/centrifugal plus gravity bias H(theta, theta_dot).
pub fn bias_forces(
    model: &RobotModel,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> SimResult<DVector<f64>> {
    check_dims(model, theta)?;
    check_dims(model, theta_dot)?;
    Ok(DynTerms::new(model, theta).bias(theta_dot))
}

/// Christoffel Coriolis matrix (for structural tests; the simulation uses the
/// contracted form inside `DynTerms::bias`).
pub fn coriolis_matrix(
    model: &RobotModel,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> SimResult<DMatrix<f64>> {
    check_dims(model, theta)?;
    check_dims(model, theta_dot)?;
    Ok(DynTerms::new(model, theta).coriolis(theta_dot))
}

/// Gravity vector dV/dtheta.
pub fn gravity_vector(model: &RobotModel, theta: &DVector<f64>) -> SimResult<DVector<f64>> {
    check_dims(model, theta)?;
    Ok(DynTerms::new(model, theta).g_vec)
}

/// (kinetic, potential) energy.
pub fn energy(
    model: &RobotModel,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> SimResult<(f64, f64)> {
    check_dims(model, theta)?;
    check_dims(model, theta_dot)?;
    Ok(DynTerms::new(model, theta).energy(theta_dot))
}
