//! Central finite-difference stencils on flat `f64` buffers.

use crate::error::Result;

/// Step sizes for the nested finite-difference layers of the base geometry.
///
/// The normal connection itself is exact. `connection` is the step used to
/// differentiate it (giving the normal curvature) and `curvature` the step
/// used to differentiate that (giving its covariant derivative). The outer
/// step is the larger one so roundoff amplified by the inner layer stays
/// below its truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub connection: f64,
    pub curvature: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            connection: 1e-3,
            curvature: 2e-3,
        }
    }
}

impl FdConfig {
    /// Largest distance any nested stencil reaches from its centre.
    pub fn reach(&self) -> f64 {
        2.0 * (self.connection + self.curvature)
    }
}

/// Fourth-order five-point central derivative of a vector-valued function
/// along coordinate `i`.
pub fn partial4<F>(f: F, x: &[f64], i: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut y = x.to_vec();
    let mut eval = |shift: f64| {
        y[i] = x[i] + shift;
        f(&y)
    };
    let fm2 = eval(-2.0 * h)?;
    let fm1 = eval(-h)?;
    let fp1 = eval(h)?;
    let fp2 = eval(2.0 * h)?;
    let s = 1.0 / (12.0 * h);
    Ok((0..fm2.len())
        .map(|k| (fm2[k] - 8.0 * fm1[k] + 8.0 * fp1[k] - fp2[k]) * s)
        .collect())
}

/// Second-order three-point central derivative along coordinate `i`.
pub fn partial2<F>(f: F, x: &[f64], i: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut y = x.to_vec();
    y[i] = x[i] - h;
    let fm = f(&y)?;
    y[i] = x[i] + h;
    let fp = f(&y)?;
    Ok(fm.iter().zip(&fp).map(|(a, b)| (b - a) / (2.0 * h)).collect())
}

/// All first partials of `f` with the fourth-order stencil; entry `i` is `∂_i f`.
pub fn gradient4<F>(f: F, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    (0..x.len()).map(|i| partial4(&f, x, i, h)).collect()
}

/// Observed convergence order from errors at step `h` and `h/2`.
pub fn observed_order(err_h: f64, err_half: f64) -> f64 {
    (err_h / err_half).log2()
}
