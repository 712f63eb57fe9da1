//! Composite objectives `F = λ f + φ`.

use alloc::format;

use crate::denoiser::{GradientStepDenoiser, InducedPotential};
use crate::error::{Error, Result};
use crate::fidelity::SmoothFunction;
use crate::tensor::ImageTensor;

/// A weakly convex regularizer exposed through its proximal map.
pub trait Regularizer {
    /// Weak-convexity constant `M` (0 for convex regularizers).
    fn weak_convexity(&self) -> f64;

    /// Whether `Prox_{τφ}` is available for this `τ`.
    fn supports_step(&self, tau: f64) -> bool;

    /// `Prox_{τφ}(v)`.
    fn prox(&self, v: &ImageTensor, tau: f64) -> Result<ImageTensor>;

    fn value(&self, x: &ImageTensor) -> Result<f64>;

    /// `φ(x)` where `x = Prox_{τφ}(prox_input)`. Regularizers that can only be
    /// evaluated through an inverse map use `prox_input` to skip it.
    fn value_at_prox(&self, x: &ImageTensor, _prox_input: &ImageTensor, _tau: f64) -> Result<f64> {
        self.value(x)
    }
}

impl<T: Regularizer + ?Sized> Regularizer for &T {
    fn weak_convexity(&self) -> f64 {
        (**self).weak_convexity()
    }
    fn supports_step(&self, tau: f64) -> bool {
        (**self).supports_step(tau)
    }
    fn prox(&self, v: &ImageTensor, tau: f64) -> Result<ImageTensor> {
        (**self).prox(v, tau)
    }
    fn value(&self, x: &ImageTensor) -> Result<f64> {
        (**self).value(x)
    }
    fn value_at_prox(&self, x: &ImageTensor, prox_input: &ImageTensor, tau: f64) -> Result<f64> {
        (**self).value_at_prox(x, prox_input, tau)
    }
}

/// `φ = 0`; its prox is the identity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroRegularizer;

impl Regularizer for ZeroRegularizer {
    fn weak_convexity(&self) -> f64 {
        0.0
    }
    fn supports_step(&self, tau: f64) -> bool {
        tau > 0.0
    }
    fn prox(&self, v: &ImageTensor, _tau: f64) -> Result<ImageTensor> {
        Ok(v.clone())
    }
    fn value(&self, _x: &ImageTensor) -> Result<f64> {
        Ok(0.0)
    }
}

/// `φ(x) = (c/2)‖x‖²`, weakly convex with `M = max(0, −c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledQuadratic {
    weight: f64,
}

impl ScaledQuadratic {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > -1.0) {
            return Err(Error::invalid(format!("quadratic weight must be finite and > -1, got {weight}")));
        }
        Ok(Self { weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl Regularizer for ScaledQuadratic {
    fn weak_convexity(&self) -> f64 {
        (-self.weight).max(0.0)
    }
    fn supports_step(&self, tau: f64) -> bool {
        tau > 0.0 && 1.0 + tau * self.weight > 0.0
    }
    fn prox(&self, v: &ImageTensor, tau: f64) -> Result<ImageTensor> {
        if !self.supports_step(tau) {
            return Err(Error::UnsupportedStep(tau));
        }
        Ok(v.scale(1.0 / (1.0 + tau * self.weight)))
    }
    fn value(&self, x: &ImageTensor) -> Result<f64> {
        Ok(0.5 * self.weight * x.norm_sq())
    }
}

/// `φ̂` of a gradient-step denoiser; prox only at `τ = 1`, where it is the
/// denoiser itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedRegularizer {
    potential: InducedPotential,
}

impl InducedRegularizer {
    pub fn new(denoiser: GradientStepDenoiser) -> Self {
        Self { potential: denoiser.induced() }
    }

    pub fn denoiser(&self) -> &GradientStepDenoiser {
        self.potential.denoiser()
    }

    pub fn potential(&self) -> &InducedPotential {
        &self.potential
    }
}

impl Regularizer for InducedRegularizer {
    fn weak_convexity(&self) -> f64 {
        self.potential.weak_convexity()
    }
    fn supports_step(&self, tau: f64) -> bool {
        tau == 1.0
    }
    fn prox(&self, v: &ImageTensor, tau: f64) -> Result<ImageTensor> {
        if !self.supports_step(tau) {
            return Err(Error::UnsupportedStep(tau));
        }
        Ok(self.potential.denoiser().apply(v))
    }
    fn value(&self, x: &ImageTensor) -> Result<f64> {
        self.potential.value(x)
    }
    fn value_at_prox(&self, x: &ImageTensor, prox_input: &ImageTensor, tau: f64) -> Result<f64> {
        if tau != 1.0 {
            return Err(Error::UnsupportedStep(tau));
        }
        Ok(self.potential.value_with_preimage(x, prox_input))
    }
}

/// `F(x) = λ f(x) + φ(x)`.
#[derive(Debug, Clone)]
pub struct CompositeProblem<F, R> {
    pub fidelity: F,
    pub regularizer: R,
    lambda: f64,
}

impl<F: SmoothFunction, R: Regularizer> CompositeProblem<F, R> {
    pub fn new(fidelity: F, regularizer: R, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive and finite, got {lambda}")));
        }
        let m = regularizer.weak_convexity();
        if !(0.0..1.0).contains(&m) {
            return Err(Error::invalid(format!("weak-convexity constant must lie in [0, 1), got {m}")));
        }
        let lf = fidelity.lipschitz();
        if !(lf.is_finite() && lf >= 0.0) {
            return Err(Error::invalid(format!("L_f must be finite and ≥ 0, got {lf}")));
        }
        Ok(Self { fidelity, regularizer, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lipschitz(&self) -> f64 {
        self.fidelity.lipschitz()
    }

    pub fn weak_convexity(&self) -> f64 {
        self.regularizer.weak_convexity()
    }

    /// `λ L_f`.
    pub fn scaled_lipschitz(&self) -> f64 {
        self.lambda * self.fidelity.lipschitz()
    }

    pub fn objective(&self, x: &ImageTensor) -> Result<f64> {
        Ok(self.lambda * self.fidelity.value(x)? + self.regularizer.value(x)?)
    }

    /// `F(x)` for `x = Prox_{τφ}(prox_input)`.
    pub fn objective_at_prox(&self, x: &ImageTensor, prox_input: &ImageTensor, tau: f64) -> Result<f64> {
        Ok(self.lambda * self.fidelity.value(x)? + self.regularizer.value_at_prox(x, prox_input, tau)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::Potential;
    use crate::fidelity::QuadraticFidelity;
    use crate::operator::Identity;
    use crate::tensor::Shape;
    use alloc::vec;

    #[test]
    fn quadratic_prox() {
        let r = ScaledQuadratic::new(1.0).unwrap();
        let v = ImageTensor::from_vector(vec![2.0]).unwrap();
        assert_eq!(r.prox(&v, 1.0).unwrap().data(), &[1.0]);
        let neg = ScaledQuadratic::new(-0.5).unwrap();
        assert_eq!(neg.weak_convexity(), 0.5);
        assert!(neg.prox(&v, 2.0).is_err());
        assert!(ScaledQuadratic::new(-1.0).is_err());
    }

    #[test]
    fn induced_prox_only_at_unit_step() {
        let d = GradientStepDenoiser::new(Potential::cosine(0.6, 0.1).unwrap());
        let r = InducedRegularizer::new(d);
        let v = ImageTensor::from_vector(vec![1.0, -3.0]).unwrap();
        assert_eq!(r.prox(&v, 1.0).unwrap(), d.apply(&v));
        assert!(matches!(r.prox(&v, 0.5), Err(Error::UnsupportedStep(_))));
        let x = r.prox(&v, 1.0).unwrap();
        let direct = r.value(&x).unwrap();
        let hinted = r.value_at_prox(&x, &v, 1.0).unwrap();
        assert!((direct - hinted).abs() < 1e-10);
    }

    #[test]
    fn composite_validation() {
        let y = ImageTensor::zeros(Shape::vector(2));
        let f = QuadraticFidelity::new(Identity { shape: y.shape() }, y).unwrap();
        assert!(CompositeProblem::new(&f, ZeroRegularizer, 0.0).is_err());
        assert!(CompositeProblem::new(&f, ScaledQuadratic::new(-0.99).unwrap(), 1.0).is_ok());
        let p = CompositeProblem::new(&f, ScaledQuadratic::new(2.0).unwrap(), 3.0).unwrap();
        let x = ImageTensor::from_vector(vec![1.0, 1.0]).unwrap();
        // 3·½·2 + ½·2·2
        assert!((p.objective(&x).unwrap() - 5.0).abs() < 1e-12);
    }
}
