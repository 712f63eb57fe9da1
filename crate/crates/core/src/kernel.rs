//! Convolution kernels with a centered origin.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Odd-sized kernel; tap `(u, v)` sits at offset `(u − h/2, v − w/2)` from
/// the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    height: usize,
    width: usize,
    taps: Vec<f64>,
}

/// Restoration kernel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `size × size` box filter.
    Uniform { size: usize },
    /// Isotropic Gaussian of standard deviation `sigma`, truncated to
    /// `size × size`.
    Gaussian { sigma: f64, size: usize },
}

impl ConvKernel {
    /// Raw taps, not normalized.
    pub fn new(height: usize, width: usize, taps: Vec<f64>) -> Result<Self> {
        if height.is_multiple_of(2) || width.is_multiple_of(2) {
            return Err(Error::dimension(format!("kernel dimensions must be odd, got {height}x{width}")));
        }
        if taps.len() != height * width {
            return Err(Error::dimension(format!(
                "kernel {height}x{width} needs {} taps, got {}",
                height * width,
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("kernel tap".into()));
        }
        Ok(Self { height, width, taps })
    }

    /// Taps rescaled to sum to one.
    pub fn normalized(height: usize, width: usize, taps: Vec<f64>) -> Result<Self> {
        let mut k = Self::new(height, width, taps)?;
        let mass: f64 = k.taps.iter().sum();
        if mass == 0.0 || !mass.is_finite() {
            return Err(Error::invalid("kernel mass must be nonzero to normalize"));
        }
        for t in &mut k.taps {
            *t /= mass;
        }
        Ok(k)
    }

    pub fn identity() -> Self {
        Self { height: 1, width: 1, taps: vec![1.0] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn tap(&self, u: usize, v: usize) -> f64 {
        self.taps[u * self.width + v]
    }

    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    pub fn mass(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Kernel rotated by 180° about its center.
    pub fn flipped(&self) -> Self {
        let mut taps = self.taps.clone();
        taps.reverse();
        Self { height: self.height, width: self.width, taps }
    }

    pub fn is_symmetric(&self) -> bool {
        self.taps.iter().zip(self.taps.iter().rev()).all(|(a, b)| a == b)
    }
}

/// Builds a normalized restoration kernel.
pub fn make_kernel(spec: KernelSpec) -> Result<ConvKernel> {
    match spec {
        KernelSpec::Uniform { size } => {
            check_odd(size)?;
            let n = size * size;
            ConvKernel::new(size, size, vec![1.0 / n as f64; n])
        }
        KernelSpec::Gaussian { sigma, size } => {
            check_odd(size)?;
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::invalid(format!("gaussian sigma must be positive, got {sigma}")));
            }
            let c = (size / 2) as f64;
            let mut taps = Vec::with_capacity(size * size);
            for u in 0..size {
                for v in 0..size {
                    let du = u as f64 - c;
                    let dv = v as f64 - c;
                    taps.push(math::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma)));
                }
            }
            ConvKernel::normalized(size, size, taps)
        }
    }
}

fn check_odd(size: usize) -> Result<()> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::dimension(format!("kernel size must be odd, got {size}")));
    }
    Ok(())
}
