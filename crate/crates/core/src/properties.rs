//! Sampled checks of the inequalities behind the convergence results.
//!
//! Every check draws its trials from independent streams keyed by
//! `(seed, trial index)`, so a run split into chunks (see
//! [`Trials::split`]) and merged with [`PropertyReport::merge`] gives the
//! same report as a single pass.
//!
//! Margins are normalized: each check reports
//! `slack = (larger side − smaller side) / (1 + |reference side|)` and passes
//! when the most negative slack stays above `−tolerance`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::denoiser::GradientStepDenoiser;
use crate::error::Result;
use crate::prox_oracle::prox_oracle_1d;
use crate::rng::{trial_stream, uniform, StdRng};
use crate::solver::IterTrace;
use crate::tensor::{ImageTensor, Shape};

pub const MAX_WITNESSES: usize = 5;
/// Step for central differences.
pub const FD_STEP: f64 = 1e-5;

pub const TOL_COMBINATION: f64 = 1e-9;
pub const TOL_SUBGRADIENT: f64 = 1e-7;
pub const TOL_THREE_POINTS: f64 = 1e-9;
pub const TOL_DESCENT: f64 = 1e-9;
pub const TOL_SEQUENCE: f64 = 1e-9;
pub const TOL_PROX_IDENTITY: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub trial: u64,
    pub slack: f64,
    /// Sampled inputs, concatenated (first 16 values).
    pub inputs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub id: String,
    pub trials: u64,
    pub worst_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Failing trials with the smallest indices.
    pub witnesses: Vec<Witness>,
}

impl PropertyReport {
    /// An empty, passing report.
    pub fn new(id: &str, tolerance: f64) -> Self {
        Self {
            id: id.into(),
            trials: 0,
            worst_slack: f64::INFINITY,
            tolerance,
            pass: true,
            witnesses: Vec::new(),
        }
    }

    /// Adds one trial; `inputs` is only evaluated for failing trials.
    pub fn record(&mut self, trial: u64, slack: f64, inputs: impl FnOnce() -> Vec<f64>) {
        self.trials += 1;
        // NaN slack counts as a failure.
        let failed = !(slack >= -self.tolerance);
        self.worst_slack = if slack.is_nan() { f64::NEG_INFINITY } else { self.worst_slack.min(slack) };
        if failed {
            self.pass = false;
            if self.witnesses.len() < MAX_WITNESSES {
                let mut v = inputs();
                v.truncate(16);
                self.witnesses.push(Witness { trial, slack, inputs: v });
            }
        }
    }

    /// Combines reports of disjoint trial ranges of the same property.
    pub fn merge(parts: impl IntoIterator<Item = PropertyReport>) -> Option<PropertyReport> {
        let mut iter = parts.into_iter();
        let mut out = iter.next()?;
        for p in iter {
            out.trials += p.trials;
            out.worst_slack = out.worst_slack.min(p.worst_slack);
            out.pass &= p.pass;
            out.witnesses.extend(p.witnesses);
        }
        out.witnesses.sort_by_key(|w| w.trial);
        out.witnesses.truncate(MAX_WITNESSES);
        Some(out)
    }
}

/// A contiguous block of trial indices under one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trials {
    pub seed: u64,
    pub start: u64,
    pub count: u64,
}

impl Trials {
    pub fn new(count: u64, seed: u64) -> Self {
        Self { seed, start: 0, count }
    }

    /// Splits into at most `parts` nonempty consecutive blocks.
    pub fn split(self, parts: usize) -> Vec<Trials> {
        let parts = (parts.max(1) as u64).min(self.count.max(1));
        let base = self.count / parts;
        let extra = self.count % parts;
        let mut start = self.start;
        (0..parts)
            .map(|i| {
                let count = base + u64::from(i < extra);
                let t = Trials { seed: self.seed, start, count };
                start += count;
                t
            })
            .collect()
    }

    fn streams(self) -> impl Iterator<Item = (u64, StdRng)> {
        (self.start..self.start + self.count).map(move |i| (i, trial_stream(self.seed, i)))
    }
}

/// Points in `[−radius, radius]^dim`, drawn as `(1 − w)·b·𝟙 + w·u` with a
/// random level `b`, roughness `w ∈ [0, 1]` and uniform `u`, so that both
/// smooth and oscillating directions are exercised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDomain {
    pub dim: usize,
    pub radius: f64,
}

impl SampleDomain {
    pub const fn new(dim: usize, radius: f64) -> Self {
        Self { dim, radius }
    }

    pub fn shape(&self) -> Shape {
        Shape::vector(self.dim)
    }

    pub fn sample(&self, rng: &mut StdRng) -> ImageTensor {
        self.sample_shaped(rng, self.shape())
    }

    /// Same distribution on an arbitrary shape with `dim` ignored.
    pub fn sample_shaped(&self, rng: &mut StdRng, shape: Shape) -> ImageTensor {
        let r = self.radius;
        let level = uniform(rng, -r, r);
        let w = uniform(rng, 0.0, 1.0);
        let data = (0..shape.len()).map(|_| (1.0 - w) * level + w * uniform(rng, -r, r)).collect();
        ImageTensor::from_vec(shape, data).expect("finite samples")
    }
}

impl Default for SampleDomain {
    fn default() -> Self {
        Self::new(1, 5.0)
    }
}

fn concat(parts: &[&ImageTensor], extra: &[f64]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.data().iter().copied()).chain(extra.iter().copied()).collect()
}

/// `φ(tx + (1−t)y) ≤ tφ(x) + (1−t)φ(y) + (M/2)t(1−t)‖x − y‖²`.
pub fn check_weak_convexity_combination(
    phi: impl Fn(&ImageTensor) -> Result<f64>,
    m: f64,
    domain: SampleDomain,
    trials: Trials,
) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("weak-convexity", TOL_COMBINATION);
    for (i, mut rng) in trials.streams() {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let t = uniform(&mut rng, 0.0, 1.0);
        let lhs = phi(&x.lincomb(t, &y, 1.0 - t))?;
        let rhs = t * phi(&x)? + (1.0 - t) * phi(&y)? + 0.5 * m * t * (1.0 - t) * x.dist_sq(&y);
        report.record(i, (rhs - lhs) / (1.0 + rhs.abs()), || concat(&[&x, &y], &[t]));
    }
    Ok(report)
}

/// `ψ((u+v)/2) ≤ (ψ(u) + ψ(v))/2`, i.e. plain midpoint convexity.
pub fn check_midpoint_convexity(
    psi: impl Fn(&ImageTensor) -> Result<f64>,
    domain: SampleDomain,
    trials: Trials,
) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("midpoint-convexity", TOL_COMBINATION);
    for (i, mut rng) in trials.streams() {
        let u = domain.sample(&mut rng);
        let v = domain.sample(&mut rng);
        let lhs = psi(&u.lincomb(0.5, &v, 0.5))?;
        let rhs = 0.5 * (psi(&u)? + psi(&v)?);
        report.record(i, (rhs - lhs) / (1.0 + rhs.abs()), || concat(&[&u, &v], &[]));
    }
    Ok(report)
}

/// `φ(x) ≥ φ(y) + ⟨∇φ(y), x − y⟩ − (M/2)‖x − y‖²`.
pub fn check_subgradient_lower_bound(
    phi: impl Fn(&ImageTensor) -> Result<f64>,
    subgrad: impl Fn(&ImageTensor) -> Result<ImageTensor>,
    m: f64,
    domain: SampleDomain,
    trials: Trials,
) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("subgradient", TOL_SUBGRADIENT);
    for (i, mut rng) in trials.streams() {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let d = x.sub(&y);
        let lhs = phi(&x)?;
        let rhs = phi(&y)? + subgrad(&y)?.dot(&d) - 0.5 * m * d.norm_sq();
        report.record(i, (lhs - rhs) / (1.0 + lhs.abs()), || concat(&[&x, &y], &[]));
    }
    Ok(report)
}

/// `φ(x) + ½‖x − z‖² ≥ φ(z⁺) + ½‖z⁺ − z‖² + ((1 − M)/2)‖x − z⁺‖²` with
/// `z⁺ = prox(z)`.
pub fn check_three_points(
    phi: impl Fn(&ImageTensor) -> Result<f64>,
    prox: impl Fn(&ImageTensor) -> Result<ImageTensor>,
    m: f64,
    domain: SampleDomain,
    trials: Trials,
) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("three-points", TOL_THREE_POINTS);
    for (i, mut rng) in trials.streams() {
        let x = domain.sample(&mut rng);
        let z = domain.sample(&mut rng);
        let zp = prox(&z)?;
        let lhs = phi(&x)? + 0.5 * x.dist_sq(&z);
        let rhs = phi(&zp)? + 0.5 * zp.dist_sq(&z) + 0.5 * (1.0 - m) * x.dist_sq(&zp);
        report.record(i, (lhs - rhs) / (1.0 + lhs.abs()), || concat(&[&x, &z], &[]));
    }
    Ok(report)
}

/// `f(x) ≤ f(y) + ⟨∇f(y), x − y⟩ + (L/2)‖x − y‖²` on samples of `shape`.
pub fn check_descent_lemma(
    f: impl Fn(&ImageTensor) -> Result<f64>,
    grad: impl Fn(&ImageTensor) -> Result<ImageTensor>,
    lipschitz: f64,
    shape: Shape,
    domain: SampleDomain,
    trials: Trials,
) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("descent-lemma", TOL_DESCENT);
    for (i, mut rng) in trials.streams() {
        let x = domain.sample_shaped(&mut rng, shape);
        let y = domain.sample_shaped(&mut rng, shape);
        let d = x.sub(&y);
        let lhs = f(&x)?;
        let rhs = f(&y)? + grad(&y)?.dot(&d) + 0.5 * lipschitz * d.norm_sq();
        report.record(i, (rhs - lhs) / (1.0 + rhs.abs()), || concat(&[&x, &y], &[]));
    }
    Ok(report)
}

/// For `b_n ≥ 0` and `a_{n+1} + b_n ≤ a_n`: `a` is nonincreasing and
/// `Σ_{n<N} b_n ≤ a_0 − a_N` for every `N`. Checks the recurrence, the sign
/// of `b`, and the partial-sum bound.
pub fn check_sequence_lemma(a: &[f64], b: &[f64]) -> PropertyReport {
    let mut report = PropertyReport::new("sequence-lemma", TOL_SEQUENCE);
    let scale = 1.0 + a.first().map_or(0.0, |v| v.abs());
    if a.len() < b.len() + 1 || a.iter().any(|v| !v.is_finite()) {
        report.record(0, f64::NEG_INFINITY, || a.iter().take(4).copied().collect());
        return report;
    }
    let mut partial = 0.0;
    for (n, &bn) in b.iter().enumerate() {
        partial += bn;
        let recurrence = (a[n] - a[n + 1] - bn) / scale;
        let sign = bn / scale;
        let telescoped = (a[0] - a[n + 1] - partial) / scale;
        let slack = recurrence.min(sign).min(telescoped);
        report.record(n as u64, slack, || alloc::vec![a[n], a[n + 1], bn, partial]);
    }
    report
}

/// Sequences `(a, b)` a solver run must satisfy the sequence lemma with:
/// `a = F(x_k)`, `b_k = (1/τ − (M + λL_f)/2)‖x_{k+1} − x_k‖²` for PGD and
/// `a = Λ_k`, `b_k = (c − δ)‖y_{k+1} − y_k‖²` for αPGD.
pub fn descent_sequences(trace: &IterTrace) -> (Vec<f64>, Vec<f64>) {
    let coefficient = match trace.meta.lyapunov {
        Some(c) => c.margin(),
        None => crate::bounds::pgd_decrease_coefficient(
            trace.meta.tau,
            trace.meta.lambda_lf,
            trace.meta.weak_convexity,
        ),
    };
    let a = trace.lyapunov_values();
    let b = trace.residuals().into_iter().map(|r| coefficient * r).collect();
    (a, b)
}

/// `|D(x) − Prox_{φ̂}(x)|` in one dimension, the proximal map computed by
/// brute force over `[x − radius, x + radius]`.
pub fn check_prox_identity(
    denoiser: &GradientStepDenoiser,
    points: &[f64],
    radius: f64,
    grid: usize,
) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("prox-identity", TOL_PROX_IDENTITY);
    let phi = denoiser.induced();
    for (i, &x) in points.iter().enumerate() {
        let oracle = prox_oracle_1d(|z| phi.value_scalar(z).unwrap_or(f64::NAN), x, radius, grid)?;
        let err = (denoiser.apply_scalar(x) - oracle).abs();
        report.record(i as u64, -err, || alloc::vec![x, oracle]);
    }
    Ok(report)
}

/// Central-difference gradient with step [`FD_STEP`].
pub fn finite_difference_gradient(
    f: impl Fn(&ImageTensor) -> Result<f64>,
    x: &ImageTensor,
) -> Result<ImageTensor> {
    let mut g = ImageTensor::zeros(x.shape());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + FD_STEP;
        let fp = f(&probe)?;
        probe.data_mut()[i] = orig - FD_STEP;
        let fm = f(&probe)?;
        probe.data_mut()[i] = orig;
        g.data_mut()[i] = (fp - fm) / (2.0 * FD_STEP);
    }
    Ok(g)
}
