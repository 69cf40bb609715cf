//! Approximate anthropometric scaling for the planar walker.
//!
//! Segment masses, lengths, centers of mass, and gyration radii are taken as
//! fixed fractions of total body mass and height, in the spirit of standard
//! gait-analysis tables. The exact numbers are approximate and only need to
//! produce a plausible sagittal-plane model; nothing downstream depends on
//! their precise values.

use crate::error::{SimError, SimResult};
use crate::multibody::LinkParams;
use serde::{Deserialize, Serialize};

/// Fractional segment table. Mass fractions are per segment (legs count
/// twice); length fractions are of total height; `com_frac` locates the
/// center of mass along the segment from its proximal end; `gyration_frac`
/// scales the segment length into a radius of gyration about the center of
/// mass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnthroTable {
    pub thigh_mass_frac: f64,
    pub shank_mass_frac: f64,
    pub foot_mass_frac: f64,
    pub hat_mass_frac: f64,
    pub thigh_len_frac: f64,
    pub shank_len_frac: f64,
    pub foot_len_frac: f64,
    pub hat_len_frac: f64,
    pub com_frac: f64,
    pub gyration_frac: f64,
}

impl Default for AnthroTable {
    fn default() -> Self {
        AnthroTable {
            thigh_mass_frac: 0.100,
            shank_mass_frac: 0.0465,
            foot_mass_frac: 0.0145,
            hat_mass_frac: 0.678,
            thigh_len_frac: 0.245,
            shank_len_frac: 0.246,
            foot_len_frac: 0.152,
            hat_len_frac: 0.288,
            com_frac: 0.433,
            gyration_frac: 0.32,
        }
    }
}

impl AnthroTable {
    pub fn validate(&self) -> SimResult<()> {
        let fracs = [
            self.thigh_mass_frac,
            self.shank_mass_frac,
            self.foot_mass_frac,
            self.hat_mass_frac,
            self.thigh_len_frac,
            self.shank_len_frac,
            self.foot_len_frac,
            self.hat_len_frac,
            self.com_frac,
            self.gyration_frac,
        ];
        if fracs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(SimError::Config(
                "anthropometric fractions must be positive and finite".into(),
            ));
        }
        let total = self.hat_mass_frac
            + 2.0 * (self.thigh_mass_frac + self.shank_mass_frac + self.foot_mass_frac);
        if (total - 1.0).abs() > 1e-6 {
            return Err(SimError::Config(format!(
                "segment mass fractions must sum to one (got {total:.6})"
            )));
        }
        if self.com_frac >= 1.0 || self.gyration_frac >= 1.0 {
            return Err(SimError::Config(
                "com and gyration fractions must be below one".into(),
            ));
        }
        Ok(())
    }

    /// Link parameters for a segment given its mass and length fractions.
    pub fn segment(
        &self,
        total_mass: f64,
        height: f64,
        mass_frac: f64,
        len_frac: f64,
    ) -> LinkParams {
        let mass = mass_frac * total_mass;
        let length = len_frac * height;
        let com_offset = self.com_frac * length;
        let gyr = self.gyration_frac * length;
        LinkParams {
            mass,
            length,
            com_offset,
            inertia: mass * gyr * gyr,
        }
    }

    pub fn thigh(&self, total_mass: f64, height: f64) -> LinkParams {
        self.segment(total_mass, height, self.thigh_mass_frac, self.thigh_len_frac)
    }

    pub fn shank(&self, total_mass: f64, height: f64) -> LinkParams {
        self.segment(total_mass, height, self.shank_mass_frac, self.shank_len_frac)
    }

    pub fn foot(&self, total_mass: f64, height: f64) -> LinkParams {
        self.segment(total_mass, height, self.foot_mass_frac, self.foot_len_frac)
    }

    /// Head-arms-trunk segment, the single link carried by the floating base.
    pub fn hat(&self, total_mass: f64, height: f64) -> LinkParams {
        self.segment(total_mass, height, self.hat_mass_frac, self.hat_len_frac)
    }

    /// A proximal portion of the thigh left after transfemoral truncation.
    /// Mass scales with the kept fraction; the center of mass and gyration
    /// radius scale with the kept length.
    pub fn residual_thigh(&self, total_mass: f64, height: f64, keep_frac: f64) -> LinkParams {
        let full = self.thigh(total_mass, height);
        let mass = full.mass * keep_frac;
        let length = full.length * keep_frac;
        let com_offset = self.com_frac * length;
        let gyr = self.gyration_frac * length;
        LinkParams {
            mass,
            length,
            com_offset,
            inertia: mass * gyr * gyr,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_is_consistent_and_scales_linearly() {
        let t = AnthroTable::default();
        t.validate().unwrap();
        let thigh = t.thigh(65.8, 1.73);
        assert!((thigh.mass - 6.58).abs() < 1e-12);
        assert!((thigh.length - 0.245 * 1.73).abs() < 1e-12);
        assert!((thigh.com_offset - 0.433 * thigh.length).abs() < 1e-12);
        let gyr = 0.32 * thigh.length;
        assert!((thigh.inertia - thigh.mass * gyr * gyr).abs() < 1e-12);
    }

    #[test]
    fn mass_fraction_bookkeeping_is_enforced() {
        let mut t = AnthroTable::default();
        t.hat_mass_frac = 0.5;
        assert!(t.validate().is_err());
    }

    #[test]
    fn residual_thigh_keeps_the_requested_fraction() {
        let t = AnthroTable::default();
        let full = t.thigh(80.0, 1.8);
        let half = t.residual_thigh(80.0, 1.8, 0.5);
        assert!((half.mass - 0.5 * full.mass).abs() < 1e-12);
        assert!((half.length - 0.5 * full.length).abs() < 1e-12);
        assert!(half.com_offset < half.length);
    }
}
