//! Image quality metrics.

use alloc::format;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::ImageTensor;

/// PSNR in dB; `Infinite` when the images coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    /// Numeric value with `+∞` for identical images.
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

pub fn mse(x: &ImageTensor, reference: &ImageTensor) -> Result<f64> {
    x.check_shape(reference.shape())?;
    Ok(x.dist_sq(reference) / x.len() as f64)
}

/// `10·log10(peak² / MSE)`.
pub fn psnr(x: &ImageTensor, reference: &ImageTensor, peak: f64) -> Result<Psnr> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::invalid(format!("PSNR peak must be positive, got {peak}")));
    }
    let m = mse(x, reference)?;
    if m == 0.0 {
        return Ok(Psnr::Infinite);
    }
    Ok(Psnr::Finite(10.0 * math::log10(peak * peak / m)))
}

/// PSNR of `x` clipped to `[0, peak]`, the convention for restored images.
pub fn psnr_clipped(x: &ImageTensor, reference: &ImageTensor, peak: f64) -> Result<Psnr> {
    psnr(&x.clamp(0.0, peak), reference, peak)
}
