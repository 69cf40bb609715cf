//! Generic input-affine systems `xdot = f(x) + g(x) u` as closures, plus the
//! finite-difference utilities the test oracles and runtime checks build on.

use nalgebra::{DMatrix, DVector};

/// An input-affine system given by closures. Used by the verification
/// battery to wrap whichever arrangement of the dynamics is under test.
pub struct AffineSystem<'a> {
    pub dim: usize,
    pub num_inputs: usize,
    pub f: Box<dyn Fn(&DVector<f64>) -> DVector<f64> + 'a>,
    pub g: Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + 'a>,
}

impl<'a> AffineSystem<'a> {
    pub fn field(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.f)(x) + (self.g)(x) * u
    }
}

/// Central-difference directional derivative of a vector map along `v`:
/// `(y(x + h v) - y(x - h v)) / 2h` with `h` scaled to the state magnitude.
pub fn directional_derivative(
    map: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> DVector<f64> {
    let h = 1e-6 * (1.0 + x.amax());
    (map(&(x + v * h)) - map(&(x - v * h))) / (2.0 * h)
}

/// Central-difference partial of a vector map with respect to one coordinate.
pub fn fd_partial(
    map: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    k: usize,
    h: f64,
) -> DVector<f64> {
    let mut xp = x.clone();
    let mut xm = x.clone();
    xp[k] += h;
    xm[k] -= h;
    (map(&xp) - map(&xm)) / (2.0 * h)
}
