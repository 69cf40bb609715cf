//! Splices reference curves onto the measured state at domain entry.
//!
//! At a transition the new domain's position outputs should start at zero
//! value and zero rate, otherwise every step begins with a tracking
//! transient. Both properties are set by the first two control coefficients
//! of each curve: the curve value at phase zero is the first coefficient,
//! and its slope is proportional to the difference of the first two. This
//! module recomputes those two coefficients from the post-transition state
//! and anchors the phase variable so it reads exactly zero on entry.

use nalgebra::DVector;

use crate::error::{SimError, SimResult};
use crate::gait::outputs::{hip_advance_weights, roles, stance_lever_arms};
use crate::gait::{Bezier, Domain, DomainGait, NUM_TRACKED};
use crate::multibody::RobotModel;

/// Result of matching a domain's references to its entry state.
pub struct EntryMatch {
    /// Respliced curves in canonical tracked order.
    pub curves: Vec<Bezier>,
    /// Hip advance at entry; the phase variable is anchored here.
    pub phase_start: f64,
    /// Phase rate at entry.
    pub tau_rate_plus: f64,
}

/// Adjusts each tracked curve so that at the entry state `(theta, theta_dot)`
/// the output value and output rate are both exactly zero, and anchors the
/// phase at the measured hip advance.
pub fn match_entry(
    model: &RobotModel,
    domain: Domain,
    dgait: &DomainGait,
    nominal: &[Bezier],
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> SimResult<EntryMatch> {
    if nominal.len() != NUM_TRACKED {
        return Err(SimError::DimensionMismatch {
            what: "nominal curves",
            expected: NUM_TRACKED,
            got: nominal.len(),
        });
    }
    let r = roles(domain);
    let (r_sk, r_sa) = stance_lever_arms(model, &r)?;
    let w = hip_advance_weights(model, r.stance_knee, r.stance_ankle, r_sk, r_sa)?;

    let phase_start = w.dot(theta);
    let span = dgait.dp_end - phase_start;
    if span.abs() < 1e-6 {
        return Err(SimError::Config(format!(
            "hip advance at entry ({phase_start:.4}) already at the domain end \
             value ({:.4}); phase span degenerate",
            dgait.dp_end
        )));
    }
    let tau_rate_plus = w.dot(theta_dot) / span;
    if tau_rate_plus <= 1e-9 {
        return Err(SimError::PhaseNotAdvancing {
            tau_dot: tau_rate_plus,
        });
    }

    let order = nominal[0].order() as f64;
    let mut curves = Vec::with_capacity(NUM_TRACKED);
    for (row, base) in nominal.iter().enumerate() {
        let j = model.joint_index(r.tracked(row))?;
        let coord = model.joint_coord(j);
        let alpha0 = theta[coord];
        let alpha1 = alpha0 + theta_dot[coord] / (order * tau_rate_plus);
        curves.push(base.with_start(alpha0, alpha1)?);
    }

    Ok(EntryMatch {
        curves,
        phase_start,
        tau_rate_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn respliced_curves_zero_the_outputs_at_entry() {
        // Check the coefficient arithmetic directly on one curve: after the
        // resplice, value(0) equals the joint angle and slope(0) matches the
        // joint rate divided by the phase rate.
        let base = Bezier::new(vec![0.2, 0.3, 0.1, 0.4, 0.0, 0.5, 0.6]).unwrap();
        let (q, qd, tau_rate) = (0.37, -0.8, 2.5);
        let matched = base
            .with_start(q, q + qd / (6.0 * tau_rate))
            .unwrap();
        assert!((matched.value(0.0) - q).abs() < 1e-15);
        assert!((matched.deriv1(0.0) * tau_rate - qd).abs() < 1e-12);
        // Later coefficients are untouched.
        assert_eq!(matched.coeffs()[2..], base.coeffs()[2..]);
    }
}
