//! Gradient-step denoisers `D = Id − γ∇g` built from analytic potentials,
//! and the weakly convex potential `φ̂` whose proximal map they are.
//!
//! For a potential `g` with `L_g`-Lipschitz gradient and `γ L_g < 1`, the map
//! `D^γ = Id − γ∇g` is a bijection and equals `Prox_{φ̂}` for
//!
//! ```text
//! φ̂(x) = γ g(u) − ½‖u − x‖²,   u = (D^γ)⁻¹(x),
//! ```
//!
//! which is `M`-weakly convex with `M = γL_g / (γL_g + 1)` and satisfies
//! `∇φ̂(x) = u − x`. The additive constant left free by that identity is
//! fixed to zero.

use alloc::format;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::ImageTensor;

/// Inversion tolerance used when `φ̂` has to be evaluated without a known
/// pre-image.
pub const INVERT_TOL: f64 = 1e-12;

/// Analytic, separable potentials `g(x) = Σᵢ h(xᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// `(L/2)‖x − c‖²`.
    Quadratic { lipschitz: f64, center: f64 },
    /// `a·Σ(1 − cos xᵢ) + (ε/2)‖x‖²`: nonconvex, coercive, `∇g` is
    /// `(a + ε)`-Lipschitz.
    Cosine { amplitude: f64, eps: f64 },
}

impl Potential {
    pub fn quadratic(lipschitz: f64, center: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz < 1.0) {
            return Err(Error::invalid(format!("quadratic potential needs 0 < L_g < 1, got {lipschitz}")));
        }
        if !center.is_finite() {
            return Err(Error::invalid("quadratic center must be finite"));
        }
        Ok(Self::Quadratic { lipschitz, center })
    }

    pub fn cosine(amplitude: f64, eps: f64) -> Result<Self> {
        if !(amplitude > 0.0 && eps > 0.0 && amplitude + eps < 1.0) {
            return Err(Error::invalid(format!(
                "cosine potential needs a > 0, eps > 0, a + eps < 1, got a = {amplitude}, eps = {eps}"
            )));
        }
        Ok(Self::Cosine { amplitude, eps })
    }

    /// Exact Lipschitz constant of `∇g`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Self::Quadratic { lipschitz, .. } => lipschitz,
            Self::Cosine { amplitude, eps } => amplitude + eps,
        }
    }

    /// Per-coordinate term `h(t)`.
    #[inline]
    pub fn value_scalar(&self, t: f64) -> f64 {
        match *self {
            Self::Quadratic { lipschitz, center } => 0.5 * lipschitz * (t - center) * (t - center),
            Self::Cosine { amplitude, eps } => amplitude * (1.0 - math::cos(t)) + 0.5 * eps * t * t,
        }
    }

    /// `h'(t)`.
    #[inline]
    pub fn derivative_scalar(&self, t: f64) -> f64 {
        match *self {
            Self::Quadratic { lipschitz, center } => lipschitz * (t - center),
            Self::Cosine { amplitude, eps } => amplitude * math::sin(t) + eps * t,
        }
    }

    /// `h''(t)`.
    #[inline]
    pub fn second_derivative_scalar(&self, t: f64) -> f64 {
        match *self {
            Self::Quadratic { lipschitz, .. } => lipschitz,
            Self::Cosine { amplitude, eps } => amplitude * math::cos(t) + eps,
        }
    }

    pub fn value(&self, x: &ImageTensor) -> f64 {
        x.data().iter().map(|&t| self.value_scalar(t)).sum()
    }

    pub fn gradient(&self, x: &ImageTensor) -> ImageTensor {
        x.map(|t| self.derivative_scalar(t))
    }
}

/// `M = ℓ / (ℓ + 1)` for an effective gradient Lipschitz constant `ℓ = γL_g`.
pub fn weak_convexity_from(effective_lipschitz: f64) -> f64 {
    effective_lipschitz / (effective_lipschitz + 1.0)
}

/// `D^γ = Id − γ∇g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientStepDenoiser {
    potential: Potential,
    gamma: f64,
}

impl GradientStepDenoiser {
    pub fn new(potential: Potential) -> Self {
        Self { potential, gamma: 1.0 }
    }

    /// Relaxed denoiser `γD + (1 − γ)Id`.
    pub fn relaxed(potential: Potential, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!("relaxation gamma must lie in [0, 1], got {gamma}")));
        }
        if gamma * potential.lipschitz() >= 1.0 {
            return Err(Error::invalid("gamma * L_g must be < 1"));
        }
        Ok(Self { potential, gamma })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `γ L_g`.
    pub fn effective_lipschitz(&self) -> f64 {
        self.gamma * self.potential.lipschitz()
    }

    /// Weak-convexity constant `γL_g / (γL_g + 1)` of the induced potential.
    pub fn weak_convexity_constant(&self) -> f64 {
        weak_convexity_from(self.effective_lipschitz())
    }

    #[inline]
    pub fn apply_scalar(&self, t: f64) -> f64 {
        t - self.gamma * self.potential.derivative_scalar(t)
    }

    /// `x − γ∇g(x)`.
    pub fn apply(&self, x: &ImageTensor) -> ImageTensor {
        x.map(|t| self.apply_scalar(t))
    }

    fn iteration_cap(&self, tol: f64) -> usize {
        let rate = self.effective_lipschitz();
        50 + math::ceil(math::ln(tol) / math::ln(rate)).max(0.0) as usize
    }

    /// Unique `x` with `x − γ∇g(x) = z`, by the contraction
    /// `x ← z + γ∇g(x)` started at `z`. Stops once the update norm drops
    /// below `tol·(1 + ‖z‖)`.
    pub fn invert(&self, z: &ImageTensor, tol: f64) -> Result<ImageTensor> {
        check_tol(tol)?;
        if self.gamma == 0.0 {
            return Ok(z.clone());
        }
        let threshold = tol * (1.0 + z.norm());
        let mut x = z.clone();
        let mut next = z.clone();
        // The first update can exceed the (1 + ‖z‖) scale for off-center
        // quadratics; give it the iterations needed to shrink back.
        let first = self.gamma * self.potential.gradient(z).norm() / (1.0 + z.norm());
        let extra = if first > 1.0 {
            math::ceil(math::ln(first) / -math::ln(self.effective_lipschitz())) as usize
        } else {
            0
        };
        let cap = self.iteration_cap(tol) + extra;
        for _ in 0..cap {
            let mut step_sq = 0.0;
            for ((n, &xi), &zi) in next.data_mut().iter_mut().zip(x.data()).zip(z.data()) {
                let v = zi + self.gamma * self.potential.derivative_scalar(xi);
                step_sq += (v - xi) * (v - xi);
                *n = v;
            }
            core::mem::swap(&mut x, &mut next);
            if !step_sq.is_finite() {
                return Err(Error::NonFinite("denoiser inversion".into()));
            }
            if math::sqrt(step_sq) < threshold {
                return Ok(x);
            }
        }
        Err(Error::InversionCap { iterations: cap, tol })
    }

    /// Scalar version of [`invert`](Self::invert).
    pub fn invert_scalar(&self, z: f64, tol: f64) -> Result<f64> {
        check_tol(tol)?;
        if self.gamma == 0.0 {
            return Ok(z);
        }
        let threshold = tol * (1.0 + z.abs());
        let first = self.gamma * self.potential.derivative_scalar(z).abs() / (1.0 + z.abs());
        let extra = if first > 1.0 {
            math::ceil(math::ln(first) / -math::ln(self.effective_lipschitz())) as usize
        } else {
            0
        };
        let cap = self.iteration_cap(tol) + extra;
        let mut x = z;
        for _ in 0..cap {
            let next = z + self.gamma * self.potential.derivative_scalar(x);
            let step = (next - x).abs();
            x = next;
            if !x.is_finite() {
                return Err(Error::NonFinite("denoiser inversion".into()));
            }
            if step < threshold {
                return Ok(x);
            }
        }
        Err(Error::InversionCap { iterations: cap, tol })
    }

    pub fn induced(&self) -> InducedPotential {
        InducedPotential { denoiser: *self }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("inversion tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// The potential `φ̂` with `D^γ = Prox_{φ̂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedPotential {
    denoiser: GradientStepDenoiser,
}

impl InducedPotential {
    pub fn denoiser(&self) -> &GradientStepDenoiser {
        &self.denoiser
    }

    pub fn weak_convexity(&self) -> f64 {
        self.denoiser.weak_convexity_constant()
    }

    /// `φ̂(x)` given a pre-image `u` with `D^γ(u) = x`; no inversion.
    pub fn value_with_preimage(&self, x: &ImageTensor, preimage: &ImageTensor) -> f64 {
        self.denoiser.gamma * self.denoiser.potential.value(preimage) - 0.5 * preimage.dist_sq(x)
    }

    pub fn value(&self, x: &ImageTensor) -> Result<f64> {
        let u = self.denoiser.invert(x, INVERT_TOL)?;
        Ok(self.value_with_preimage(x, &u))
    }

    /// `∇φ̂(x) = (D^γ)⁻¹(x) − x`.
    pub fn gradient(&self, x: &ImageTensor) -> Result<ImageTensor> {
        Ok(self.denoiser.invert(x, INVERT_TOL)?.sub(x))
    }

    pub fn value_scalar_with_preimage(&self, x: f64, u: f64) -> f64 {
        self.denoiser.gamma * self.denoiser.potential.value_scalar(u) - 0.5 * (u - x) * (u - x)
    }

    /// One coordinate of the separable `φ̂`.
    pub fn value_scalar(&self, x: f64) -> Result<f64> {
        let u = self.denoiser.invert_scalar(x, INVERT_TOL)?;
        Ok(self.value_scalar_with_preimage(x, u))
    }

    pub fn derivative_scalar(&self, x: f64) -> Result<f64> {
        Ok(self.denoiser.invert_scalar(x, INVERT_TOL)? - x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, uniform_tensor};
    use crate::tensor::Shape;

    fn v(data: &[f64]) -> ImageTensor {
        ImageTensor::from_vector(data.to_vec()).unwrap()
    }

    #[test]
    fn builtin_gradients() {
        let q = Potential::quadratic(0.5, 0.0).unwrap();
        assert_eq!(q.gradient(&v(&[2.0, -4.0])).data(), &[1.0, -2.0]);
        let c = Potential::cosine(0.6, 0.1).unwrap();
        assert_eq!(c.value(&v(&[0.0])), 0.0);
        assert_eq!(c.gradient(&v(&[0.0])).data(), &[0.0]);
        assert!((c.lipschitz() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn parameter_ranges() {
        assert!(Potential::quadratic(1.0, 0.0).is_err());
        assert!(Potential::quadratic(0.0, 0.0).is_err());
        assert!(Potential::cosine(0.6, 0.4).is_err());
        assert!(Potential::cosine(-0.1, 0.1).is_err());
        let q = Potential::quadratic(0.5, 0.0).unwrap();
        assert!(GradientStepDenoiser::relaxed(q, 1.5).is_err());
    }

    #[test]
    fn apply_with_relaxation() {
        let q = Potential::quadratic(0.5, 0.0).unwrap();
        let x = v(&[2.0, -4.0]);
        assert_eq!(GradientStepDenoiser::new(q).apply(&x).data(), &[1.0, -2.0]);
        assert_eq!(GradientStepDenoiser::relaxed(q, 0.0).unwrap().apply(&x), x);
        let half = GradientStepDenoiser::relaxed(q, 0.5).unwrap().apply(&x);
        assert_eq!(half.data(), &[1.5, -3.0]);
    }

    #[test]
    fn weak_convexity_constants() {
        let d = GradientStepDenoiser::new(Potential::quadratic(0.5, 0.0).unwrap());
        assert!((d.weak_convexity_constant() - 1.0 / 3.0).abs() < 1e-15);
        let d = GradientStepDenoiser::relaxed(Potential::quadratic(0.8, 0.0).unwrap(), 0.5).unwrap();
        assert!((d.weak_convexity_constant() - 2.0 / 7.0).abs() < 1e-15);
        let d = GradientStepDenoiser::relaxed(Potential::quadratic(0.8, 0.0).unwrap(), 0.0).unwrap();
        assert_eq!(d.weak_convexity_constant(), 0.0);
    }

    #[test]
    fn invert_closed_form_and_identity() {
        let d = GradientStepDenoiser::new(Potential::quadratic(0.5, 0.0).unwrap());
        let x = d.invert(&v(&[1.0]), 1e-14).unwrap();
        assert!((x.data()[0] - 2.0).abs() < 1e-12);
        // Off-center quadratic: x = (z − γLc)/(1 − γL).
        let d = GradientStepDenoiser::relaxed(Potential::quadratic(0.6, 3.0).unwrap(), 0.5).unwrap();
        let x = d.invert_scalar(1.0, 1e-14).unwrap();
        assert!((x - (1.0 - 0.3 * 3.0) / 0.7).abs() < 1e-12);
        let d0 = GradientStepDenoiser::relaxed(Potential::cosine(0.6, 0.1).unwrap(), 0.0).unwrap();
        assert_eq!(d0.invert(&v(&[0.3, 7.0]), 1e-12).unwrap(), v(&[0.3, 7.0]));
    }

    #[test]
    fn invert_roundtrip_cosine() {
        let d = GradientStepDenoiser::new(Potential::cosine(0.6, 0.1).unwrap());
        let z = uniform_tensor(&mut seeded(0), Shape::image(8, 8), -5.0, 5.0);
        let x = d.invert(&z, 1e-13).unwrap();
        assert!(d.apply(&x).sub(&z).max_abs() < 1e-10);
    }

    #[test]
    fn invert_rejects_bad_tolerance() {
        let d = GradientStepDenoiser::new(Potential::quadratic(0.99, 0.0).unwrap());
        assert!(d.invert(&v(&[1.0]), 0.0).is_err());
        assert!(d.invert_scalar(1.0, f64::NAN).is_err());
        // Slow contraction still converges within the cap.
        let x = d.invert_scalar(1e6, 1e-13).unwrap();
        assert!((d.apply_scalar(x) - 1e6).abs() < 1e-6);
    }

    #[test]
    fn induced_quadratic_closed_form() {
        // γ = 1, c = 0: φ̂(x) = L / (2(1 − L)) ‖x‖².
        let l = 0.5;
        let d = GradientStepDenoiser::new(Potential::quadratic(l, 0.0).unwrap());
        let phi = d.induced();
        for &t in &[-3.0, -0.2, 0.0, 1.7] {
            let want = l / (2.0 * (1.0 - l)) * t * t;
            assert!((phi.value(&v(&[t])).unwrap() - want).abs() < 1e-10);
        }
        // The prox of ½‖·‖² is v/2, which is exactly D.
        assert_eq!(d.apply(&v(&[3.0])).data(), &[1.5]);
    }

    #[test]
    fn induced_value_with_known_preimage() {
        let d = GradientStepDenoiser::new(Potential::cosine(0.6, 0.1).unwrap());
        let u = v(&[1.3, -2.2]);
        let x = d.apply(&u);
        let got = d.induced().value_with_preimage(&x, &u);
        let want = d.potential().value(&u) - 0.5 * u.dist_sq(&x);
        assert_eq!(got, want);
    }

    #[test]
    fn induced_dominates_potential() {
        let d = GradientStepDenoiser::new(Potential::cosine(0.6, 0.1).unwrap());
        let phi = d.induced();
        let mut rng = seeded(8);
        for _ in 0..1000 {
            let x = uniform_tensor(&mut rng, Shape::vector(2), -5.0, 5.0);
            assert!(phi.value(&x).unwrap() >= d.potential().value(&x) - 1e-12);
        }
    }

    #[test]
    fn induced_gradient_matches_finite_difference() {
        let d = GradientStepDenoiser::relaxed(Potential::cosine(0.6, 0.1).unwrap(), 0.5).unwrap();
        let phi = d.induced();
        let h = 1e-5;
        for &t in &[-4.0, -1.0, 0.3, 2.9] {
            let fd = (phi.value_scalar(t + h).unwrap() - phi.value_scalar(t - h).unwrap()) / (2.0 * h);
            assert!((fd - phi.derivative_scalar(t).unwrap()).abs() < 1e-7);
        }
        let x = v(&[0.5, -1.5]);
        assert_eq!(phi.gradient(&x).unwrap().len(), 2);
    }
}
