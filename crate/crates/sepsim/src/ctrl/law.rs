//! Input-output linearization over a constrained mechanical system.
//!
//! The law is provider-agnostic: it consumes any `ConstrainedDynamics`
//! (acceleration drift plus input map) and assembles, for its output list,
//!
//! `A[i][:] = grad_i' G_eff`, `L[i] = grad_i' a_eff + bias_i`,
//!
//! then solves `A u = mu - L` with `mu` the stabilizing feedback. Running the
//! full model, the measured-wrench arrangement of its distal rows, or the
//! standalone subsystem model through this one code path is what makes their
//! agreement a structural fact rather than a numerical coincidence.

use nalgebra::{DMatrix, DVector};

use crate::ctrl::output::{MechOutput, RowEval, TimePhase};
use crate::error::{SimError, SimResult};
use crate::multibody::constraint::ConstrainedDynamics;

/// Feedback gains for one output row. Velocity rows use only `kd`
/// (`mu = -kd y`); position rows use `mu = -kp y - kd ydot`.
#[derive(Debug, Clone, Copy)]
pub struct RowGains {
    pub kp: f64,
    pub kd: f64,
}

impl RowGains {
    pub fn critical(kp: f64) -> RowGains {
        RowGains {
            kp,
            kd: 2.0 * kp.sqrt(),
        }
    }
}

/// Condition-number ceiling past which the decoupling matrix is treated as
/// singular.
pub const COND_LIMIT: f64 = 1e12;

/// An output list with gains, ready to evaluate against a dynamics provider.
pub struct LinearizingLaw {
    pub outputs: Vec<MechOutput>,
    pub gains: Vec<RowGains>,
}

/// Everything one control evaluation produced, kept for tracing and checks.
#[derive(Debug, Clone)]
pub struct ControlEval {
    pub y: DVector<f64>,
    /// Derivatives for degree-two rows, zero for degree-one rows.
    pub ydot: DVector<f64>,
    /// Decoupling matrix (rows x inputs).
    pub a: DMatrix<f64>,
    /// Drift terms L (rows).
    pub drift: DVector<f64>,
    /// Stabilizing feedback (rows).
    pub mu: DVector<f64>,
    /// Solved input (inputs).
    pub u: DVector<f64>,
    /// 2-norm condition number of the decoupling matrix.
    pub cond: f64,
    /// Phase of the first state-phased output row, if any (for tracing).
    pub tau: f64,
}

impl LinearizingLaw {
    pub fn new(outputs: Vec<MechOutput>, gains: Vec<RowGains>) -> SimResult<LinearizingLaw> {
        if outputs.len() != gains.len() {
            return Err(SimError::DimensionMismatch {
                what: "gain rows",
                expected: outputs.len(),
                got: gains.len(),
            });
        }
        Ok(LinearizingLaw { outputs, gains })
    }

    /// Stabilizing feedback for evaluated rows.
    fn mu_for(&self, rows: &[RowEval]) -> DVector<f64> {
        DVector::from_fn(rows.len(), |i, _| {
            let g = self.gains[i];
            match rows[i].ydot {
                Some(yd) => -g.kp * rows[i].y - g.kd * yd,
                None => -g.kd * rows[i].y,
            }
        })
    }

    /// Evaluate the law against a dynamics provider. The number of outputs
    /// must equal the provider's input count (square decoupling).
    pub fn eval(
        &self,
        dynamics: &ConstrainedDynamics,
        theta: &DVector<f64>,
        theta_dot: &DVector<f64>,
        time_phase: Option<&TimePhase>,
    ) -> SimResult<ControlEval> {
        let m = dynamics.g_eff.ncols();
        if self.outputs.len() != m {
            return Err(SimError::DimensionMismatch {
                what: "output rows vs input columns",
                expected: m,
                got: self.outputs.len(),
            });
        }

        let mut rows = Vec::with_capacity(m);
        for out in &self.outputs {
            rows.push(out.eval(theta, theta_dot, time_phase)?);
        }

        let mut a = DMatrix::zeros(m, m);
        let mut drift = DVector::zeros(m);
        for (i, row) in rows.iter().enumerate() {
            let arow = row.grad.transpose() * &dynamics.g_eff;
            a.row_mut(i).copy_from(&arow);
            drift[i] = row.grad.dot(&dynamics.a_eff) + row.bias;
        }

        let svd = a.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        log::trace!("decoupling matrix condition number {cond:.3e}");
        if !cond.is_finite() || cond > COND_LIMIT {
            return Err(SimError::SingularDecoupling { cond });
        }

        let mu = self.mu_for(&rows);
        let rhs = &mu - &drift;
        let u = a
            .clone()
            .full_piv_lu()
            .solve(&rhs)
            .ok_or(SimError::SingularDecoupling { cond })?;

        let tau = rows
            .iter()
            .find(|r| r.tau.is_finite())
            .map(|r| r.tau)
            .unwrap_or(f64::NAN);

        Ok(ControlEval {
            y: DVector::from_fn(m, |i, _| rows[i].y),
            ydot: DVector::from_fn(m, |i, _| rows[i].ydot.unwrap_or(0.0)),
            a,
            drift,
            mu,
            u,
            cond,
            tau,
        })
    }
}
