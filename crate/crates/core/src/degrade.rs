//! Degradation models `A = H` (deblurring) and `A = SH` (super-resolution)
//! and noisy observations `y = Ax + ν`.

use alloc::format;

use crate::error::{Error, Result};
use crate::kernel::ConvKernel;
use crate::operator::{Compose, Convolution, Downsample, LinearOperator};
use crate::rng::Gaussian;
use crate::tensor::{ImageTensor, Shape};

#[derive(Debug, Clone, PartialEq)]
pub enum Degradation {
    Blur(Convolution),
    BlurDownsample(Compose<Downsample, Convolution>),
}

impl Degradation {
    pub fn blur(kernel: ConvKernel, shape: Shape) -> Result<Self> {
        Ok(Self::Blur(Convolution::new(kernel, shape)?))
    }

    pub fn blur_downsample(kernel: ConvKernel, factor: usize, shape: Shape) -> Result<Self> {
        let conv = Convolution::new(kernel, shape)?;
        let down = Downsample::new(factor, shape)?;
        Ok(Self::BlurDownsample(Compose::new(down, conv)?))
    }

    pub fn kernel(&self) -> &ConvKernel {
        match self {
            Self::Blur(c) => c.kernel(),
            Self::BlurDownsample(c) => c.inner.kernel(),
        }
    }

    /// Sampling factor (1 for pure blur).
    pub fn scale(&self) -> usize {
        match self {
            Self::Blur(_) => 1,
            Self::BlurDownsample(c) => c.outer.factor(),
        }
    }
}

impl LinearOperator for Degradation {
    fn input_shape(&self) -> Shape {
        match self {
            Self::Blur(c) => c.input_shape(),
            Self::BlurDownsample(c) => c.input_shape(),
        }
    }
    fn output_shape(&self) -> Shape {
        match self {
            Self::Blur(c) => c.output_shape(),
            Self::BlurDownsample(c) => c.output_shape(),
        }
    }
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor> {
        match self {
            Self::Blur(c) => c.apply(x),
            Self::BlurDownsample(c) => c.apply(x),
        }
    }
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor> {
        match self {
            Self::Blur(c) => c.apply_adjoint(y),
            Self::BlurDownsample(c) => c.apply_adjoint(y),
        }
    }
}

/// `A x_clean + ν·n` with `n` i.i.d. standard normal drawn from `seed`.
pub fn degrade(
    x_clean: &ImageTensor,
    operator: &(impl LinearOperator + ?Sized),
    noise_sigma: f64,
    seed: u64,
) -> Result<ImageTensor> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::invalid(format!("noise level must be ≥ 0, got {noise_sigma}")));
    }
    let mut y = operator.apply(x_clean)?;
    if noise_sigma > 0.0 {
        let mut g = Gaussian::new(seed);
        for v in y.data_mut() {
            *v += noise_sigma * g.sample();
        }
    }
    Ok(y)
}
