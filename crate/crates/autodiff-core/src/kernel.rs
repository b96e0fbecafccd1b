//! Squared-exponential kernel on flat parameter vectors:
//! k(a, b) = exp(-||a - b||^2 / (2 l^2)).

use crate::error::{Error, Result};

fn check(a: &[f64], b: &[f64], l: f64) -> Result<()> {
    if l <= 0.0 {
        return Err(Error::InvalidBandwidth(l));
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
    }
    Ok(())
}

pub fn sq_exp_kernel(a: &[f64], b: &[f64], l: f64) -> Result<f64> {
    check(a, b, l)?;
    let sq_dist: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-sq_dist / (2.0 * l * l)).exp())
}

/// Gradient of the kernel w.r.t. its first argument:
/// grad_a k = -(a - b) / l^2 * k(a, b).
pub fn sq_exp_kernel_grad_arg1(a: &[f64], b: &[f64], l: f64) -> Result<Vec<f64>> {
    let k = sq_exp_kernel(a, b, l)?;
    let inv_l2 = 1.0 / (l * l);
    Ok(a.iter().zip(b).map(|(x, y)| -(x - y) * inv_l2 * k).collect())
}
