//! Explicit Runge-Kutta integration with error control and dense output.
//!
//! This is the classic Dormand-Prince 5(4) pair. Two deviations from
//! textbook implementations, both deliberate:
//!
//! * no first-same-as-last reuse: the driver projects the state back onto
//!   the constraint surface after every accepted step, which invalidates the
//!   cached end-slope, so each step starts with a fresh derivative;
//! * every accepted step returns its dense interpolant, because the hybrid
//!   driver needs to sample trace rows on a fixed grid and to locate guard
//!   crossings well below step resolution.

use nalgebra::DVector;

use crate::error::{SimError, SimResult};

/// Integration options. The defaults are deliberately tight: the control
/// verification downstream compares trajectories at the 1e-6 level, so the
/// integrator must sit well under that.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Hard step ceiling; also bounds the trace knot spacing.
    pub h_max: f64,
    /// Initial step; `None` selects one automatically.
    pub h_init: Option<f64>,
    /// Safety cap on accepted steps per `integrate` span.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: 0.02,
            h_init: None,
            max_steps: 2_000_000,
        }
    }
}

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Dense interpolant over one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [DVector<f64>; 5],
}

impl DenseStep {
    /// Interpolated state at `t` (clamped to the step interval).
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let s = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        let inner = r4 + r5 * s1;
        let mid = r3 + inner * s;
        r1 + (r2 + mid * s1) * s
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }
}

/// One-step controller-driven integrator with persistent state.
pub struct Dopri5<'a> {
    rhs: Box<dyn FnMut(f64, &DVector<f64>) -> SimResult<DVector<f64>> + 'a>,
    pub opts: OdeOptions,
    t: f64,
    x: DVector<f64>,
    h: f64,
    accepted: usize,
}

fn weighted_rms(err: &DVector<f64>, x: &DVector<f64>, x_new: &DVector<f64>, o: &OdeOptions) -> f64 {
    let n = err.len();
    let mut acc = 0.0;
    for i in 0..n {
        let sk = o.atol + o.rtol * x[i].abs().max(x_new[i].abs());
        let r = err[i] / sk;
        acc += r * r;
    }
    (acc / n as f64).sqrt()
}

impl<'a> Dopri5<'a> {
    pub fn new(
        rhs: impl FnMut(f64, &DVector<f64>) -> SimResult<DVector<f64>> + 'a,
        t0: f64,
        x0: DVector<f64>,
        opts: OdeOptions,
    ) -> SimResult<Dopri5<'a>> {
        if !x0.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite("initial state"));
        }
        let mut s = Dopri5 {
            rhs: Box::new(rhs),
            opts,
            t: t0,
            x: x0,
            h: 0.0,
            accepted: 0,
        };
        s.h = match opts.h_init {
            Some(h) => h.min(opts.h_max),
            None => s.initial_step()?,
        };
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    /// Replaces the current state (used after projection or event handling).
    pub fn set_state(&mut self, t: f64, x: DVector<f64>) {
        self.t = t;
        self.x = x;
    }

    /// Standard two-probe starting step heuristic.
    fn initial_step(&mut self) -> SimResult<f64> {
        let o = self.opts;
        let f0 = (self.rhs)(self.t, &self.x)?;
        let zero = DVector::zeros(self.x.len());
        let d0 = weighted_rms(&self.x, &self.x, &zero, &o);
        let d1 = weighted_rms(&f0, &self.x, &zero, &o);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(o.h_max);
        let probe = &self.x + &f0 * h0;
        let f1 = (self.rhs)(self.t + h0, &probe)?;
        let d2 = weighted_rms(&(&f1 - &f0), &self.x, &zero, &o) / h0;
        let d_max = d1.max(d2);
        let h1 = if d_max <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d_max).powf(0.2)
        };
        Ok(h1.min(100.0 * h0).min(o.h_max))
    }

    /// Takes one accepted step, not crossing `t_limit`, and returns its
    /// dense interpolant. The caller must ensure `t < t_limit`.
    pub fn step(&mut self, t_limit: f64) -> SimResult<DenseStep> {
        let o = self.opts;
        let n = self.x.len();
        let mut rejects = 0usize;
        if self.accepted >= o.max_steps {
            return Err(SimError::IntegrationFailure(format!(
                "step budget {} exhausted at t = {:.6}",
                o.max_steps, self.t
            )));
        }
        loop {
            let h_prop = self.h.min(o.h_max);
            let landing = self.t + h_prop >= t_limit;
            let h = if landing { t_limit - self.t } else { h_prop };
            if h <= f64::EPSILON * 16.0 * self.t.abs().max(1.0) {
                return Err(SimError::IntegrationFailure(format!(
                    "step size underflow at t = {:.9} (h = {h:.3e})",
                    self.t
                )));
            }

            let t = self.t;
            let x = &self.x;
            let k1 = (self.rhs)(t, x)?;
            let k2 = (self.rhs)(t + C[1] * h, &(x + &k1 * (A2[0] * h)))?;
            let k3 = (self.rhs)(t + C[2] * h, &(x + (&k1 * A3[0] + &k2 * A3[1]) * h))?;
            let k4 = (self.rhs)(
                t + C[3] * h,
                &(x + (&k1 * A4[0] + &k2 * A4[1] + &k3 * A4[2]) * h),
            )?;
            let k5 = (self.rhs)(
                t + C[4] * h,
                &(x + (&k1 * A5[0] + &k2 * A5[1] + &k3 * A5[2] + &k4 * A5[3]) * h),
            )?;
            let k6 = (self.rhs)(
                t + C[5] * h,
                &(x + (&k1 * A6[0] + &k2 * A6[1] + &k3 * A6[2] + &k4 * A6[3] + &k5 * A6[4]) * h),
            )?;
            let x_new = x
                + (&k1 * A7[0] + &k3 * A7[2] + &k4 * A7[3] + &k5 * A7[4] + &k6 * A7[5]) * h;
            let k7 = (self.rhs)(t + h, &x_new)?;

            let mut err = DVector::zeros(n);
            for (ki, ei) in [&k1, &k2, &k3, &k4, &k5, &k6, &k7].iter().zip(E) {
                if ei != 0.0 {
                    err += *ki * (ei * h);
                }
            }
            let err_norm = weighted_rms(&err, x, &x_new, &o);

            if !err_norm.is_finite() {
                self.h = h * 0.25;
                rejects += 1;
            } else if err_norm <= 1.0 {
                // Accept: assemble the dense interpolant before moving on.
                let ydiff = &x_new - x;
                let r3 = &k1 * h - &ydiff;
                let r4 = &ydiff - &k7 * h - &r3;
                let mut r5 = DVector::zeros(n);
                for (ki, di) in [&k1, &k2, &k3, &k4, &k5, &k6, &k7].iter().zip(D) {
                    if di != 0.0 {
                        r5 += *ki * (di * h);
                    }
                }
                r5 *= h;
                let dense = DenseStep {
                    t0: t,
                    h,
                    rcont: [x.clone(), ydiff, r3, r4, r5],
                };
                let factor = (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0);
                self.h = (h * factor).min(o.h_max);
                self.t = if landing { t_limit } else { t + h };
                self.x = x_new;
                self.accepted += 1;
                return Ok(dense);
            } else {
                let factor = (0.9 * err_norm.powf(-0.2)).clamp(0.1, 1.0);
                self.h = h * factor;
                rejects += 1;
            }

            if rejects > 60 {
                return Err(SimError::IntegrationFailure(format!(
                    "more than {rejects} rejected attempts at t = {:.6}",
                    self.t
                )));
            }
        }
    }
}

/// Bisects a scalar event function to machine precision on a dense step.
/// Expects `g(lo) > 0` and `g(hi) <= 0`; returns the crossing time and the
/// interpolated state there.
pub fn bisect_event(
    dense: &DenseStep,
    g: impl Fn(f64, &DVector<f64>) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> (f64, DVector<f64>) {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let x = dense.eval(mid);
        if g(mid, &x) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi, dense.eval(hi))
}
