//! Smooth data-fidelity terms.

use alloc::format;

use crate::error::{Error, Result};
use crate::operator::{spectral_norm, LinearOperator, POWER_ITERATIONS};
use crate::tensor::{ImageTensor, Shape};

/// A differentiable function with `L`-Lipschitz gradient.
pub trait SmoothFunction {
    fn input_shape(&self) -> Shape;
    fn value(&self, x: &ImageTensor) -> Result<f64>;
    fn gradient(&self, x: &ImageTensor) -> Result<ImageTensor>;
    /// Certified Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;
}

impl<T: SmoothFunction + ?Sized> SmoothFunction for &T {
    fn input_shape(&self) -> Shape {
        (**self).input_shape()
    }
    fn value(&self, x: &ImageTensor) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &ImageTensor) -> Result<ImageTensor> {
        (**self).gradient(x)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
}

/// `f(x) = ½‖Ax − y‖²` with `∇f = Aᵀ(Ax − y)` and `L_f = ‖AᵀA‖`.
#[derive(Debug, Clone)]
pub struct QuadraticFidelity<A> {
    operator: A,
    observation: ImageTensor,
    lipschitz: f64,
    estimate: f64,
}

impl<A: LinearOperator> QuadraticFidelity<A> {
    /// Computes `L_f` by power iteration (500 iterations, seed 0).
    pub fn new(operator: A, observation: ImageTensor) -> Result<Self> {
        Self::with_power_iteration(operator, observation, POWER_ITERATIONS, 0)
    }

    pub fn with_power_iteration(
        operator: A,
        observation: ImageTensor,
        iters: usize,
        seed: u64,
    ) -> Result<Self> {
        observation.check_shape(operator.output_shape())?;
        let estimate = spectral_norm(&operator, iters, seed)?;
        Ok(Self { operator, observation, lipschitz: estimate, estimate })
    }

    /// Uses a caller-supplied `L_f`; it must not undercut the power-iteration
    /// estimate.
    pub fn with_lipschitz_override(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz >= self.estimate * (1.0 - 1e-9)) {
            return Err(Error::invalid(format!(
                "Lipschitz override {lipschitz} is below the power-iteration estimate {}",
                self.estimate
            )));
        }
        self.lipschitz = lipschitz;
        Ok(self)
    }

    /// Skips power iteration; for operators whose norm is known exactly.
    pub fn with_known_lipschitz(operator: A, observation: ImageTensor, lipschitz: f64) -> Result<Self> {
        observation.check_shape(operator.output_shape())?;
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::invalid(format!("Lipschitz constant {lipschitz} must be finite and ≥ 0")));
        }
        Ok(Self { operator, observation, lipschitz, estimate: lipschitz })
    }

    pub fn operator(&self) -> &A {
        &self.operator
    }

    pub fn observation(&self) -> &ImageTensor {
        &self.observation
    }

    /// Power-iteration estimate of `‖AᵀA‖` before any override.
    pub fn spectral_estimate(&self) -> f64 {
        self.estimate
    }

    pub fn residual(&self, x: &ImageTensor) -> Result<ImageTensor> {
        Ok(self.operator.apply(x)?.sub(&self.observation))
    }
}

impl<A: LinearOperator> SmoothFunction for QuadraticFidelity<A> {
    fn input_shape(&self) -> Shape {
        self.operator.input_shape()
    }

    fn value(&self, x: &ImageTensor) -> Result<f64> {
        Ok(0.5 * self.residual(x)?.norm_sq())
    }

    fn gradient(&self, x: &ImageTensor) -> Result<ImageTensor> {
        self.operator.apply_adjoint(&self.residual(x)?)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
