//! Runtime verification checks: structural conditions a separable-subsystem
//! controller relies on, evaluated numerically over sampled states.
//!
//! Each check produces a `CheckReport` with the worst scaled residual seen;
//! the CLI prints one line per report. Residuals are scaled as
//! `|a - b|_inf / (1 + max(|a|_inf, |b|_inf))` so tolerances read the same
//! across quantities of different magnitude.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::ctrl::affine::fd_partial;

/// Outcome of one named check over a sample set.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub max_residual: f64,
    pub tol: f64,
    pub samples: usize,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.samples == 0 || self.max_residual <= self.tol
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check={} status={} max_residual={:.3e} tol={:.1e} samples={}",
            self.name,
            if self.pass() { "PASS" } else { "FAIL" },
            self.max_residual,
            self.tol,
            self.samples
        )
    }
}

/// Scaled infinity-norm disagreement between two vectors.
pub fn scaled_residual(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = 1.0 + a.amax().max(b.amax());
    (a - b).amax() / scale
}

/// Scaled infinity-norm disagreement between two matrices.
pub fn scaled_residual_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = 1.0 + a.amax().max(b.amax());
    (a - b).amax() / scale
}

/// Separability of the input map: rows `s_rows` of `g(x)` must vanish on
/// columns `r_cols`, scaled against the largest entry of `g`.
pub fn check_separability(
    name: &str,
    g: &dyn Fn(&DVector<f64>) -> DMatrix<f64>,
    s_rows: &[usize],
    r_cols: &[usize],
    samples: &[DVector<f64>],
    tol: f64,
) -> CheckReport {
    let mut worst: f64 = 0.0;
    for x in samples {
        let gx = g(x);
        let scale = 1.0 + gx.amax();
        for &r in s_rows {
            for &c in r_cols {
                worst = worst.max(gx[(r, c)].abs() / scale);
            }
        }
    }
    CheckReport {
        name: name.into(),
        max_residual: worst,
        tol,
        samples: samples.len(),
    }
}

/// Locality of a vector-valued map in designated coordinates: central
/// finite-difference sensitivity of `map` to each coordinate in `r_index`
/// must vanish. Used for both the output-locality condition (map = outputs)
/// and its derivative-level counterpart (map = output derivatives).
pub fn check_locality(
    name: &str,
    map: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    r_index: &[usize],
    samples: &[DVector<f64>],
    tol: f64,
) -> CheckReport {
    let mut worst: f64 = 0.0;
    for x in samples {
        let scale = 1.0 + map(x).amax();
        for &k in r_index {
            let h = 1e-4 * (1.0 + x[k].abs());
            let slope = fd_partial(map, x, k, h);
            worst = worst.max(slope.amax() / scale);
        }
    }
    CheckReport {
        name: name.into(),
        max_residual: worst,
        tol,
        samples: samples.len(),
    }
}

/// Pointwise agreement of two vector-valued maps over samples.
pub fn compare_fields(
    name: &str,
    a: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    b: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    samples: &[DVector<f64>],
    tol: f64,
) -> CheckReport {
    let mut worst: f64 = 0.0;
    for x in samples {
        worst = worst.max(scaled_residual(&a(x), &b(x)));
    }
    CheckReport {
        name: name.into(),
        max_residual: worst,
        tol,
        samples: samples.len(),
    }
}
