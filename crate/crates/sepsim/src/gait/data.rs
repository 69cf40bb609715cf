//! Gait parameterization and its on-disk format.
//!
//! A gait stores, for each of the two step types, a hip advance target, the
//! phase-variable span, and one reference curve per position-tracked joint.
//! Curves are indexed in a fixed row order shared with the controller and
//! the trace writer: stance ankle, stance hip, swing hip, swing knee,
//! swing ankle.

use crate::error::{SimError, SimResult};
use crate::fileio;
use crate::gait::Bezier;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Number of position-tracked joints per domain.
pub const NUM_TRACKED: usize = 5;
/// Control coefficients per reference curve (order-six curves).
pub const CURVE_COEFFS: usize = 7;

/// The two step types of the cycle. The prosthesis side never changes legs,
/// so the cycle alternates between these without relabeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Prosthetic foot on the ground, intact leg swinging.
    ProsthesisStance,
    /// Intact foot on the ground, prosthetic leg swinging.
    ProsthesisSwing,
}

impl Domain {
    pub fn other(self) -> Domain {
        match self {
            Domain::ProsthesisStance => Domain::ProsthesisSwing,
            Domain::ProsthesisSwing => Domain::ProsthesisStance,
        }
    }

    /// Stable small integer used in trace files.
    pub fn index(self) -> usize {
        match self {
            Domain::ProsthesisStance => 0,
            Domain::ProsthesisSwing => 1,
        }
    }

    pub fn from_index(i: usize) -> SimResult<Domain> {
        match i {
            0 => Ok(Domain::ProsthesisStance),
            1 => Ok(Domain::ProsthesisSwing),
            _ => Err(SimError::Schema(format!("unknown domain index {i}"))),
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Domain::ProsthesisStance => "prosthesis_stance",
            Domain::ProsthesisSwing => "prosthesis_swing",
        }
    }
}

/// Gait data for one domain.
#[derive(Debug, Clone)]
pub struct DomainGait {
    /// Hip advance rate target while in this domain, in m/s.
    pub v_hip: f64,
    /// Nominal hip advance at domain entry, in m.
    pub dp_start: f64,
    /// Hip advance at which the phase variable reaches one, in m.
    pub dp_end: f64,
    /// Reference curve coefficients, one row per tracked joint.
    pub alpha: [[f64; CURVE_COEFFS]; NUM_TRACKED],
}

impl DomainGait {
    pub fn validate(&self, key: &str) -> SimResult<()> {
        let all = self
            .alpha
            .iter()
            .flatten()
            .chain([&self.v_hip, &self.dp_start, &self.dp_end]);
        for v in all {
            if !v.is_finite() {
                return Err(SimError::Config(format!("{key}: non-finite gait value")));
            }
        }
        if (self.dp_end - self.dp_start).abs() < 1e-6 {
            return Err(SimError::Config(format!(
                "{key}: dp_start and dp_end must differ (got {} and {})",
                self.dp_start, self.dp_end
            )));
        }
        Ok(())
    }

    /// Nominal reference curves, one per tracked joint.
    pub fn curves(&self) -> Vec<Bezier> {
        self.alpha
            .iter()
            .map(|row| Bezier::new(row.to_vec()).expect("validated coefficients"))
            .collect()
    }
}

/// Feedback gains for the output-zeroing controller. Position-tracked rows
/// use kp and kd; the hip advance rate row uses kd_velocity alone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Gains {
    pub kp: f64,
    pub kd: f64,
    pub kd_velocity: f64,
}

impl Default for Gains {
    fn default() -> Self {
        // Critically damped second-order error dynamics at 10 rad/s.
        Gains {
            kp: 100.0,
            kd: 20.0,
            kd_velocity: 20.0,
        }
    }
}

impl Gains {
    pub fn validate(&self) -> SimResult<()> {
        if self.kp <= 0.0 || self.kd <= 0.0 || self.kd_velocity <= 0.0 {
            return Err(SimError::Config(format!(
                "gains must be positive (kp={}, kd={}, kd_velocity={})",
                self.kp, self.kd, self.kd_velocity
            )));
        }
        Ok(())
    }
}

/// A complete two-domain gait.
#[derive(Debug, Clone)]
pub struct Gait {
    domains: [DomainGait; 2],
    pub gains: Gains,
}

impl Gait {
    pub fn new(stance: DomainGait, swing: DomainGait, gains: Gains) -> SimResult<Gait> {
        stance.validate(Domain::ProsthesisStance.key())?;
        swing.validate(Domain::ProsthesisSwing.key())?;
        gains.validate()?;
        Ok(Gait {
            domains: [stance, swing],
            gains,
        })
    }

    pub fn domain(&self, d: Domain) -> &DomainGait {
        &self.domains[d.index()]
    }

    pub fn domain_mut(&mut self, d: Domain) -> &mut DomainGait {
        &mut self.domains[d.index()]
    }

    pub fn load(path: &Path) -> SimResult<Gait> {
        let body = fileio::read_tagged(path, fileio::GAIT_TAG)?;
        let raw: RawGait = toml::from_str(&body).map_err(|e| fileio::schema_err(path, e))?;
        raw.into_gait()
    }

    pub fn save(&self, path: &Path) -> SimResult<()> {
        let raw = RawGait::from_gait(self);
        let body = toml::to_string(&raw)
            .map_err(|e| SimError::Config(format!("gait serialization: {e}")))?;
        fileio::write_tagged(path, fileio::GAIT_TAG, &body)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDomainGait {
    v_hip: f64,
    dp_start: f64,
    dp_end: f64,
    alpha: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDomains {
    prosthesis_stance: RawDomainGait,
    prosthesis_swing: RawDomainGait,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawGait {
    domains: RawDomains,
    gains: Option<Gains>,
}

impl RawDomainGait {
    fn into_domain(self, key: &str) -> SimResult<DomainGait> {
        if self.alpha.len() != NUM_TRACKED {
            return Err(SimError::Schema(format!(
                "{key}: alpha must have {NUM_TRACKED} rows, found {}",
                self.alpha.len()
            )));
        }
        let mut alpha = [[0.0; CURVE_COEFFS]; NUM_TRACKED];
        for (i, row) in self.alpha.iter().enumerate() {
            if row.len() != CURVE_COEFFS {
                return Err(SimError::Schema(format!(
                    "{key}: alpha row {i} must have {CURVE_COEFFS} entries, found {}",
                    row.len()
                )));
            }
            alpha[i].copy_from_slice(row);
        }
        let dg = DomainGait {
            v_hip: self.v_hip,
            dp_start: self.dp_start,
            dp_end: self.dp_end,
            alpha,
        };
        dg.validate(key)?;
        Ok(dg)
    }

    fn from_domain(d: &DomainGait) -> RawDomainGait {
        RawDomainGait {
            v_hip: d.v_hip,
            dp_start: d.dp_start,
            dp_end: d.dp_end,
            alpha: d.alpha.iter().map(|row| row.to_vec()).collect(),
        }
    }
}

impl RawGait {
    fn into_gait(self) -> SimResult<Gait> {
        let stance = self
            .domains
            .prosthesis_stance
            .into_domain(Domain::ProsthesisStance.key())?;
        let swing = self
            .domains
            .prosthesis_swing
            .into_domain(Domain::ProsthesisSwing.key())?;
        Gait::new(stance, swing, self.gains.unwrap_or_default())
    }

    fn from_gait(g: &Gait) -> RawGait {
        RawGait {
            domains: RawDomains {
                prosthesis_stance: RawDomainGait::from_domain(g.domain(Domain::ProsthesisStance)),
                prosthesis_swing: RawDomainGait::from_domain(g.domain(Domain::ProsthesisSwing)),
            },
            gains: Some(g.gains),
        }
    }
}
