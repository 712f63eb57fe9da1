//! Seeded random problem instances with parameters inside the convergence
//! region, plus the deterministic closed-form instances.

use crate::bounds::{alpha_pgd_step_limit, pgd_step_limit, BoundPolicy};
use crate::denoiser::{GradientStepDenoiser, Potential};
use crate::error::Result;
use crate::fidelity::QuadraticFidelity;
use crate::operator::{DenseOperator, Identity};
use crate::problem::{CompositeProblem, InducedRegularizer, Regularizer, ScaledQuadratic};
use crate::rng::{trial_stream, uniform, uniform_tensor, StdRng};
use crate::tensor::{ImageTensor, Shape};

use rand::Rng;

/// The regularizers random instances draw from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnyRegularizer {
    Quadratic(ScaledQuadratic),
    Induced(InducedRegularizer),
}

impl Regularizer for AnyRegularizer {
    fn weak_convexity(&self) -> f64 {
        match self {
            Self::Quadratic(r) => r.weak_convexity(),
            Self::Induced(r) => r.weak_convexity(),
        }
    }
    fn supports_step(&self, tau: f64) -> bool {
        match self {
            Self::Quadratic(r) => r.supports_step(tau),
            Self::Induced(r) => r.supports_step(tau),
        }
    }
    fn prox(&self, v: &ImageTensor, tau: f64) -> Result<ImageTensor> {
        match self {
            Self::Quadratic(r) => r.prox(v, tau),
            Self::Induced(r) => r.prox(v, tau),
        }
    }
    fn value(&self, x: &ImageTensor) -> Result<f64> {
        match self {
            Self::Quadratic(r) => r.value(x),
            Self::Induced(r) => r.value(x),
        }
    }
    fn value_at_prox(&self, x: &ImageTensor, prox_input: &ImageTensor, tau: f64) -> Result<f64> {
        match self {
            Self::Quadratic(r) => r.value_at_prox(x, prox_input, tau),
            Self::Induced(r) => r.value_at_prox(x, prox_input, tau),
        }
    }
}

pub type RandomProblem = CompositeProblem<QuadraticFidelity<DenseOperator>, AnyRegularizer>;

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub index: u64,
    pub problem: RandomProblem,
    pub x0: ImageTensor,
    pub tau: f64,
    /// 1 for PGD instances.
    pub alpha: f64,
}

/// Largest dimension drawn by the generators.
pub const MAX_DIM: usize = 64;

/// `A = [I; R]` with `R` a random `r × n` block, so `AᵀA ⪰ I` and
/// `λf + (c/2)‖·‖²` stays bounded below for `c > −λ`.
fn random_fidelity(rng: &mut StdRng, n: usize) -> Result<QuadraticFidelity<DenseOperator>> {
    let extra = rng.gen_range(1..=8usize);
    let rows = n + extra;
    let scale = 1.0 / libm::sqrt(n as f64);
    let mut entries = alloc::vec![0.0; rows * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
    }
    for v in &mut entries[n * n..] {
        *v = uniform(rng, -1.0, 1.0) * scale;
    }
    let a = DenseOperator::new(Shape::vector(n), Shape::vector(rows), entries)?;
    let y = uniform_tensor(rng, Shape::vector(rows), -2.0, 2.0);
    QuadraticFidelity::new(a, y)
}

fn random_denoiser(rng: &mut StdRng) -> Result<GradientStepDenoiser> {
    let potential = if rng.gen_bool(0.5) {
        let a = uniform(rng, 0.1, 0.8);
        let eps = uniform(rng, 0.01, 0.99 - a);
        Potential::cosine(a, eps)?
    } else {
        Potential::quadratic(uniform(rng, 0.05, 0.95), uniform(rng, -1.0, 1.0))?
    };
    GradientStepDenoiser::relaxed(potential, uniform(rng, 0.1, 1.0))
}

/// A PGD instance with `τ` strictly inside the step bound scaled by `safety`.
/// Even indices use a scaled quadratic regularizer with arbitrary `τ`; odd
/// indices use an induced potential at `τ = 1`.
pub fn random_pgd_instance(seed: u64, index: u64, safety: f64) -> Result<RandomInstance> {
    let mut rng = trial_stream(seed, index);
    let n = rng.gen_range(1..=MAX_DIM);
    let f = random_fidelity(&mut rng, n)?;
    let lf = f.spectral_estimate();
    let (problem, tau) = if index.is_multiple_of(2) {
        let lambda = uniform(&mut rng, 0.2, 2.0);
        let c = uniform(&mut rng, -(0.9f64).min(0.5 * lambda), 1.0);
        let reg = AnyRegularizer::Quadratic(ScaledQuadratic::new(c)?);
        let limit = pgd_step_limit(lambda * lf, reg.weak_convexity());
        let tau = uniform(&mut rng, 0.1, 1.0) * safety * limit;
        (CompositeProblem::new(f, reg, lambda)?, tau)
    } else {
        let d = random_denoiser(&mut rng)?;
        let m = d.weak_convexity_constant();
        let lambda = uniform(&mut rng, 0.2, 1.0) * (2.0 * safety - m) / lf;
        let reg = AnyRegularizer::Induced(InducedRegularizer::new(d));
        (CompositeProblem::new(f, reg, lambda)?, 1.0)
    };
    let x0 = uniform_tensor(&mut rng, Shape::vector(n), -5.0, 5.0);
    Ok(RandomInstance { index, problem, x0, tau, alpha: 1.0 })
}

/// An αPGD instance valid under `policy` scaled by `safety`; same
/// regularizer alternation as [`random_pgd_instance`].
pub fn random_alpha_instance(
    seed: u64,
    index: u64,
    safety: f64,
    policy: BoundPolicy,
) -> Result<RandomInstance> {
    let mut rng = trial_stream(seed ^ 0xa1fa, index);
    let n = rng.gen_range(1..=MAX_DIM);
    let f = random_fidelity(&mut rng, n)?;
    let lf = f.spectral_estimate();
    let (problem, tau, alpha) = if index.is_multiple_of(2) {
        let lambda = uniform(&mut rng, 0.2, 2.0);
        let c = uniform(&mut rng, -(0.9f64).min(0.5 * lambda), 1.0);
        let reg = AnyRegularizer::Quadratic(ScaledQuadratic::new(c)?);
        let alpha = uniform(&mut rng, 0.2, 1.0);
        let limit = alpha_pgd_step_limit(lambda * lf, reg.weak_convexity(), alpha, policy);
        let tau = uniform(&mut rng, 0.1, 1.0) * safety * limit;
        (CompositeProblem::new(f, reg, lambda)?, tau, alpha)
    } else {
        // τ = 1 needs M/safety < α and αλL_f < safety.
        let d = random_denoiser(&mut rng)?;
        let m = d.weak_convexity_constant();
        let alpha = uniform(&mut rng, (m / safety) * 1.01, 1.0);
        let lambda = uniform(&mut rng, 0.2, 1.0) * safety / (alpha * lf);
        let reg = AnyRegularizer::Induced(InducedRegularizer::new(d));
        (CompositeProblem::new(f, reg, lambda)?, 1.0, alpha)
    };
    let x0 = uniform_tensor(&mut rng, Shape::vector(n), -5.0, 5.0);
    Ok(RandomInstance { index, problem, x0, tau, alpha })
}

/// `f = ½(x − y)²` in one dimension with `L_f = 1`.
pub fn scalar_fidelity(y: f64) -> QuadraticFidelity<Identity> {
    QuadraticFidelity::with_known_lipschitz(Identity { shape: Shape::vector(1) }, ImageTensor::scalar(y), 1.0)
        .expect("identity fidelity")
}

/// One-dimensional `λ/2 (x − y)² + (c/2) x²`.
pub fn scalar_quadratic_problem(
    y: f64,
    c: f64,
    lambda: f64,
) -> Result<CompositeProblem<QuadraticFidelity<Identity>, ScaledQuadratic>> {
    CompositeProblem::new(scalar_fidelity(y), ScaledQuadratic::new(c)?, lambda)
}

/// Minimizer `λy/(λ + c)` and minimum value of [`scalar_quadratic_problem`].
pub fn scalar_quadratic_optimum(y: f64, c: f64, lambda: f64) -> (f64, f64) {
    let x = lambda * y / (lambda + c);
    let value = 0.5 * lambda * (x - y) * (x - y) + 0.5 * c * x * x;
    (x, value)
}

/// Fixed point `(1 − L)λy / (L + (1 − L)λ)` of PnP-PGD with the quadratic
/// denoiser (`c = 0`, `γ = 1`) and `f = ½(x − y)²`.
pub fn pnp_quadratic_fixed_point(y: f64, lg: f64, lambda: f64) -> f64 {
    (1.0 - lg) * lambda * y / (lg + (1.0 - lg) * lambda)
}
