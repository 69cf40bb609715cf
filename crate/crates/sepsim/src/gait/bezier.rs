//! Bezier curves on the unit interval, used as joint reference profiles.
//!
//! A curve of order n is defined by n+1 control coefficients. Values and the
//! first two derivatives are evaluated with de Casteljau reductions of the
//! coefficient and difference arrays, which stays well conditioned for the
//! orders used here. The reductions are exact affine combinations at any
//! parameter, so outside [0, 1] the curve continues as the same polynomial.
//! That matters at domain transitions: touchdown nominally occurs right at
//! the end of the phase interval, and freezing the reference there would put
//! a derivative kink in the closed loop exactly where the event function
//! crosses zero, stalling the integrator's error control on the crossing.

use crate::ctrl::ScalarCurve;
use crate::error::{SimError, SimResult};

/// Polynomial curve in Bernstein form.
#[derive(Debug, Clone)]
pub struct Bezier {
    coeffs: Vec<f64>,
}

fn de_casteljau(coeffs: &[f64], t: f64) -> f64 {
    let mut work = coeffs.to_vec();
    let n = work.len();
    for level in 1..n {
        for i in 0..n - level {
            work[i] += t * (work[i + 1] - work[i]);
        }
    }
    work[0]
}

impl Bezier {
    pub fn new(coeffs: Vec<f64>) -> SimResult<Bezier> {
        if coeffs.is_empty() {
            return Err(SimError::Config("bezier needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SimError::NonFinite("bezier coefficient"));
        }
        Ok(Bezier { coeffs })
    }

    /// Polynomial order (number of coefficients minus one).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Replaces the first two coefficients, which set the value and slope
    /// at tau = 0. Used to splice a profile onto a measured initial state.
    pub fn with_start(&self, alpha0: f64, alpha1: f64) -> SimResult<Bezier> {
        if self.coeffs.len() < 2 {
            return Err(SimError::Config(
                "bezier must have order >= 1 to adjust its start".into(),
            ));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = alpha0;
        coeffs[1] = alpha1;
        Bezier::new(coeffs)
    }

    /// Value at tau (the polynomial, also outside [0, 1]).
    pub fn value(&self, tau: f64) -> f64 {
        de_casteljau(&self.coeffs, tau)
    }

    /// First derivative with respect to tau.
    pub fn deriv1(&self, tau: f64) -> f64 {
        let n = self.order();
        if n < 1 {
            return 0.0;
        }
        let diff: Vec<f64> = self
            .coeffs
            .windows(2)
            .map(|w| (w[1] - w[0]) * n as f64)
            .collect();
        de_casteljau(&diff, tau)
    }

    /// Second derivative with respect to tau.
    pub fn deriv2(&self, tau: f64) -> f64 {
        let n = self.order();
        if n < 2 {
            return 0.0;
        }
        let scale = (n * (n - 1)) as f64;
        let diff2: Vec<f64> = self
            .coeffs
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]) * scale)
            .collect();
        de_casteljau(&diff2, tau)
    }
}

impl ScalarCurve for Bezier {
    fn eval2(&self, tau: f64) -> (f64, f64, f64) {
        (self.value(tau), self.deriv1(tau), self.deriv2(tau))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn matches_monomial_expansion_for_a_cubic() {
        // Coefficients of t^3 in Bernstein form of order 3: (0, 0, 0, 1).
        let b = Bezier::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        for &t in &[0.0, 0.1, 0.37, 0.5, 0.92, 1.0] {
            assert_relative_eq!(b.value(t), t * t * t, epsilon = 1e-14);
            assert_relative_eq!(b.deriv1(t), 3.0 * t * t, epsilon = 1e-13);
            assert_relative_eq!(b.deriv2(t), 6.0 * t, epsilon = 1e-13);
        }
    }

    #[test]
    fn endpoint_values_and_slopes_follow_the_control_points() {
        let c = vec![0.3, -0.1, 0.5, 0.2, 0.9, -0.4, 0.7];
        let b = Bezier::new(c.clone()).unwrap();
        let n = 6.0;
        assert_relative_eq!(b.value(0.0), c[0], epsilon = 1e-15);
        assert_relative_eq!(b.value(1.0), c[6], epsilon = 1e-15);
        assert_relative_eq!(b.deriv1(0.0), n * (c[1] - c[0]), epsilon = 1e-13);
        assert_relative_eq!(b.deriv1(1.0), n * (c[6] - c[5]), epsilon = 1e-13);
        assert_relative_eq!(
            b.deriv2(0.0),
            n * (n - 1.0) * (c[2] - 2.0 * c[1] + c[0]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn extends_as_the_same_polynomial_outside_the_unit_interval() {
        // t^3 in Bernstein form of order 3 extrapolates as t^3.
        let b = Bezier::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        for &t in &[-0.4, 1.2, 1.8] {
            assert_relative_eq!(b.value(t), t * t * t, epsilon = 1e-13);
            assert_relative_eq!(b.deriv1(t), 3.0 * t * t, epsilon = 1e-12);
            assert_relative_eq!(b.deriv2(t), 6.0 * t, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences_inside_the_interval() {
        let b = Bezier::new(vec![0.1, 0.8, -0.3, 0.4, 0.0, 0.6, -0.2]).unwrap();
        let h = 1e-6;
        for &t in &[0.1, 0.33, 0.5, 0.77, 0.9] {
            let fd1 = (b.value(t + h) - b.value(t - h)) / (2.0 * h);
            let fd2 = (b.value(t + h) - 2.0 * b.value(t) + b.value(t - h)) / (h * h);
            assert_relative_eq!(b.deriv1(t), fd1, epsilon = 1e-7, max_relative = 1e-7);
            assert_relative_eq!(b.deriv2(t), fd2, epsilon = 1e-3, max_relative = 1e-3);
        }
    }

    proptest! {
        /// Bernstein bases sum to one: constant coefficients give a constant
        /// curve with vanishing derivatives everywhere on [0, 1].
        #[test]
        fn constant_coefficients_give_a_constant_curve(
            c in -5.0f64..5.0,
            t in 0.0f64..1.0,
        ) {
            let b = Bezier::new(vec![c; 7]).unwrap();
            prop_assert!((b.value(t) - c).abs() < 1e-13);
            prop_assert!(b.deriv1(t).abs() < 1e-12);
            prop_assert!(b.deriv2(t).abs() < 1e-11);
        }

        /// The curve stays inside the convex hull of its coefficients.
        #[test]
        fn value_stays_in_the_coefficient_hull(
            coeffs in prop::collection::vec(-3.0f64..3.0, 7),
            t in 0.0f64..1.0,
        ) {
            let lo = coeffs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = coeffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let b = Bezier::new(coeffs).unwrap();
            let v = b.value(t);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
