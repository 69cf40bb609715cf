//! Plastic impact map for touchdown transitions.
//!
//! At touchdown the incoming velocity is mapped through a perfectly plastic
//! (no-slip, no-bounce) impulsive contact: positions are continuous, and the
//! post-impact velocity is the closest velocity (in the kinetic-energy
//! metric) compatible with the new constraint stack. That is the KKT system
//!
//! ```text
//! [ D  -J' ] [ qd+      ]   [ D qd- ]
//! [ J   0  ] [ impulse  ] = [ 0     ]
//! ```
//!
//! solved monolithically. Kinetic energy never increases across this map.

use nalgebra::{DMatrix, DVector};

use crate::error::{SimError, SimResult};
use crate::multibody::{mass_matrix, ConstraintSet, KinCache, RobotModel};

/// Result of one impact: post-impact velocities and the constraint impulse.
#[derive(Debug, Clone)]
pub struct ImpactOutcome {
    pub theta_dot_plus: DVector<f64>,
    pub impulse: DVector<f64>,
    pub ke_before: f64,
    pub ke_after: f64,
}

/// Applies the plastic impact map for the constraint stack `set` at
/// configuration `theta` with incoming velocity `theta_dot_minus`.
pub fn plastic_impact(
    model: &RobotModel,
    set: &ConstraintSet,
    theta: &DVector<f64>,
    theta_dot_minus: &DVector<f64>,
) -> SimResult<ImpactOutcome> {
    let eta = model.dof();
    let c = set.rows();
    let d = mass_matrix(model, theta)?;
    let kin = KinCache::new(model, theta);
    let data = set.data(&kin, theta_dot_minus)?;

    let mut kkt = DMatrix::zeros(eta + c, eta + c);
    kkt.view_mut((0, 0), (eta, eta)).copy_from(&d);
    kkt.view_mut((0, eta), (eta, c))
        .copy_from(&(-data.jac.transpose()));
    kkt.view_mut((eta, 0), (c, eta)).copy_from(&data.jac);
    let mut rhs = DVector::zeros(eta + c);
    rhs.rows_mut(0, eta).copy_from(&(&d * theta_dot_minus));

    let lu = kkt.full_piv_lu();
    let sol = lu.solve(&rhs).ok_or_else(|| SimError::RankDeficient {
        what: "impact KKT system",
        detail: "new contact stack is kinematically inconsistent".into(),
    })?;

    let theta_dot_plus = sol.rows(0, eta).into_owned();
    let impulse = sol.rows(eta, c).into_owned();
    let ke = |v: &DVector<f64>| 0.5 * (&d * v).dot(v);
    Ok(ImpactOutcome {
        ke_before: ke(theta_dot_minus),
        ke_after: ke(&theta_dot_plus),
        theta_dot_plus,
        impulse,
    })
}
