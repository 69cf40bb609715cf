//! Output functions for input-output linearization of mechanical systems.
//!
//! Every output the walker uses fits one of two shapes:
//!
//! * velocity form, `y = w' theta_dot - target`, relative degree one;
//! * position form, `y = w' theta - curve(tau)`, relative degree two, where
//!   `tau` either comes from a monotone configuration functional (state
//!   phase) or is supplied externally as a measured signal (time phase).
//!
//! Each output reduces, at acceleration level, to the contract
//! `y_acc = grad' theta_ddot + bias` where `y_acc` is the highest derivative
//! of `y` (second for position form, first for velocity form). The gradient
//! and bias are analytic; no finite differences anywhere in the control path.

use nalgebra::DVector;

use crate::error::{SimError, SimResult};

/// A scalar curve with two derivatives, the shape of an output target.
pub trait ScalarCurve {
    /// (value, first derivative, second derivative) at `tau`.
    fn eval2(&self, tau: f64) -> (f64, f64, f64);
}

/// Constant target (used by velocity outputs and tests).
#[derive(Debug, Clone, Copy)]
pub struct ConstantTarget(pub f64);

impl ScalarCurve for ConstantTarget {
    fn eval2(&self, _tau: f64) -> (f64, f64, f64) {
        (self.0, 0.0, 0.0)
    }
}

/// Monotone configuration functional normalized over one domain:
/// `tau = (c' theta - start) / (end - start)`.
#[derive(Debug, Clone)]
pub struct StatePhase {
    pub c: DVector<f64>,
    pub start: f64,
    pub end: f64,
}

impl StatePhase {
    pub fn new(c: DVector<f64>, start: f64, end: f64) -> SimResult<StatePhase> {
        if (end - start).abs() < 1e-12 {
            return Err(SimError::Config(
                "state phase has coincident start and end values".into(),
            ));
        }
        Ok(StatePhase { c, start, end })
    }

    pub fn tau(&self, theta: &DVector<f64>) -> f64 {
        (self.c.dot(theta) - self.start) / (self.end - self.start)
    }

    pub fn tau_rate(&self, theta_dot: &DVector<f64>) -> f64 {
        self.c.dot(theta_dot) / (self.end - self.start)
    }

    /// d(tau)/d(theta).
    pub fn grad(&self) -> DVector<f64> {
        &self.c / (self.end - self.start)
    }
}

/// Where a position output's phase comes from.
pub enum PhaseSource {
    /// Phase is a function of configuration; derivatives chain through it.
    State(StatePhase),
    /// Phase is an exogenous measured signal supplied per evaluation.
    Time,
}

/// Exogenous phase sample for time-based outputs.
#[derive(Debug, Clone, Copy)]
pub struct TimePhase {
    pub tau: f64,
    pub tau_dot: f64,
    pub tau_ddot: f64,
}

/// Relative-degree-two output `y = w' theta - curve(tau)`.
pub struct PositionOutput {
    pub w: DVector<f64>,
    pub curve: Box<dyn ScalarCurve + Send + Sync>,
    pub phase: PhaseSource,
}

/// Relative-degree-one output `y = w' theta_dot - target`.
pub struct VelocityOutput {
    pub w: DVector<f64>,
    pub target: f64,
}

pub enum MechOutput {
    Velocity(VelocityOutput),
    Position(PositionOutput),
}

/// One output evaluated at a state: value, derivative (degree two only), and
/// the acceleration-level contract `y_acc = grad' theta_ddot + bias`.
#[derive(Debug, Clone)]
pub struct RowEval {
    pub y: f64,
    pub ydot: Option<f64>,
    pub grad: DVector<f64>,
    pub bias: f64,
    /// Phase value used (NaN for velocity outputs).
    pub tau: f64,
}

impl MechOutput {
    pub fn relative_degree(&self) -> usize {
        match self {
            MechOutput::Velocity(_) => 1,
            MechOutput::Position(_) => 2,
        }
    }

    /// Evaluate at `(theta, theta_dot)`. Time-based position outputs require
    /// a `TimePhase`; everything else ignores it.
    pub fn eval(
        &self,
        theta: &DVector<f64>,
        theta_dot: &DVector<f64>,
        time_phase: Option<&TimePhase>,
    ) -> SimResult<RowEval> {
        match self {
            MechOutput::Velocity(v) => {
                if v.w.len() != theta_dot.len() {
                    return Err(SimError::DimensionMismatch {
                        what: "velocity output weights",
                        expected: theta_dot.len(),
                        got: v.w.len(),
                    });
                }
                Ok(RowEval {
                    y: v.w.dot(theta_dot) - v.target,
                    ydot: None,
                    grad: v.w.clone(),
                    bias: 0.0,
                    tau: f64::NAN,
                })
            }
            MechOutput::Position(p) => {
                if p.w.len() != theta.len() {
                    return Err(SimError::DimensionMismatch {
                        what: "position output weights",
                        expected: theta.len(),
                        got: p.w.len(),
                    });
                }
                match &p.phase {
                    PhaseSource::State(sp) => {
                        let tau = sp.tau(theta);
                        let tau_dot = sp.tau_rate(theta_dot);
                        let (b, b1, b2) = p.curve.eval2(tau);
                        let grad = &p.w - sp.grad() * b1;
                        let y = p.w.dot(theta) - b;
                        let ydot = grad.dot(theta_dot);
                        // d/dt(grad)' theta_dot = -b'' tau_dot^2
                        let bias = -b2 * tau_dot * tau_dot;
                        Ok(RowEval {
                            y,
                            ydot: Some(ydot),
                            grad,
                            bias,
                            tau,
                        })
                    }
                    PhaseSource::Time => {
                        let tp = time_phase.ok_or_else(|| {
                            SimError::Config(
                                "time-based output evaluated without a phase sample".into(),
                            )
                        })?;
                        let (b, b1, b2) = p.curve.eval2(tp.tau);
                        let y = p.w.dot(theta) - b;
                        let ydot = p.w.dot(theta_dot) - b1 * tp.tau_dot;
                        let bias = -(b2 * tp.tau_dot * tp.tau_dot + b1 * tp.tau_ddot);
                        Ok(RowEval {
                            y,
                            ydot: Some(ydot),
                            grad: p.w.clone(),
                            bias,
                            tau: tp.tau,
                        })
                    }
                }
            }
        }
    }
}
