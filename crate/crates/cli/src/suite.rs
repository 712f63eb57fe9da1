//! Named property checks and a threaded runner for them.

use std::fmt;
use std::str::FromStr;
use std::thread;

use wcprox_core::bounds::{pgd_step_limit, BoundPolicy, DEFAULT_SAFETY};
use wcprox_core::fidelity::{QuadraticFidelity, SmoothFunction};
use wcprox_core::operator::Convolution;
use wcprox_core::properties::{self as props, PropertyReport, SampleDomain, Trials};
use wcprox_core::prox_oracle::{DEFAULT_GRID, DEFAULT_RADIUS};
use wcprox_core::rng::{seeded, trial_stream, uniform, uniform_tensor};
use wcprox_core::scenarios::{
    random_alpha_instance, random_pgd_instance, scalar_quadratic_optimum, scalar_quadratic_problem,
};
use wcprox_core::solver::{residual_rate_check, run_alpha_pgd, run_pgd, RunOptions, SolverConfig};
use wcprox_core::{ImageTensor, Shape};

use crate::error::{CliError, Result};
use crate::specs::{DenoiserSpec, KernelSource};

pub const THREADS_ENV: &str = "WCPROX_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyId {
    ProxIdentity,
    WeakConvexity,
    MidpointConvexity,
    Subgradient,
    ThreePoints,
    DescentLemma,
    PgdDescent,
    Lyapunov,
    RateBound,
}

impl PropertyId {
    pub const ALL: [PropertyId; 9] = [
        Self::ProxIdentity,
        Self::WeakConvexity,
        Self::MidpointConvexity,
        Self::Subgradient,
        Self::ThreePoints,
        Self::DescentLemma,
        Self::PgdDescent,
        Self::Lyapunov,
        Self::RateBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ProxIdentity => "prox-identity",
            Self::WeakConvexity => "weak-convexity",
            Self::MidpointConvexity => "midpoint-convexity",
            Self::Subgradient => "subgradient",
            Self::ThreePoints => "three-points",
            Self::DescentLemma => "descent-lemma",
            Self::PgdDescent => "pgd-descent",
            Self::Lyapunov => "lyapunov",
            Self::RateBound => "rate-bound",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Self::ProxIdentity => "denoiser equals the brute-force prox of its induced potential (1-D)",
            Self::WeakConvexity => "convex-combination inequality for the induced potential with constant M",
            Self::MidpointConvexity => "induced potential plus (M/2)|x|^2 is midpoint convex",
            Self::Subgradient => "gradient lower bound with curvature -M",
            Self::ThreePoints => "three-points inequality of the unit-step prox",
            Self::DescentLemma => "quadratic upper bound of the blur fidelity with constant L_f",
            Self::PgdDescent => "per-iteration decrease of PGD on random instances",
            Self::Lyapunov => "Lyapunov decrease and summable steps of relaxed PGD on random instances",
            Self::RateBound => "min squared step below (F0 - F*)/(cK) on scalar quadratics",
        }
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropertyId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
            CliError::Usage(format!("unknown property {s:?} (known: {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub trials: u64,
    pub seed: u64,
    pub denoiser: DenoiserSpec,
    /// Multiplies the weak-convexity constant handed to the checks.
    pub m_scale: f64,
    /// Multiplies `L_f` in the descent-lemma check.
    pub lf_scale: f64,
    pub dims: Vec<usize>,
    /// Problem instances for the solver-based properties.
    pub instances: u64,
    pub threads: usize,
    pub grid: usize,
    pub kernel: KernelSource,
    /// Side of the square image the descent lemma samples on.
    pub image_size: usize,
    pub safety: f64,
    pub policy: BoundPolicy,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            denoiser: DenoiserSpec::default(),
            m_scale: 1.0,
            lf_scale: 1.0,
            dims: vec![1, 2, 8],
            instances: 50,
            threads: 1,
            grid: DEFAULT_GRID,
            kernel: "gaussian:1.6,9".parse().expect("valid kernel"),
            image_size: 16,
            safety: DEFAULT_SAFETY,
            policy: BoundPolicy::Strict,
        }
    }
}

/// `WCPROX_THREADS` if set, else the available parallelism.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            v.trim().parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| {
                CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))
            })
        }
        Err(_) => Ok(thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `check` on up to `threads` consecutive blocks of `trials` and merges
/// the results; the report does not depend on the thread count.
pub fn run_parallel<F>(trials: Trials, threads: usize, check: F) -> Result<PropertyReport>
where
    F: Fn(Trials) -> wcprox_core::Result<PropertyReport> + Sync,
{
    let parts = trials.split(threads);
    let results: Vec<_> = if parts.len() == 1 {
        vec![check(parts[0])]
    } else {
        let check = &check;
        thread::scope(|s| {
            let handles: Vec<_> = parts.iter().map(|&t| s.spawn(move || check(t))).collect();
            handles.into_iter().map(|h| h.join().expect("property worker panicked")).collect()
        })
    };
    let reports = results.into_iter().collect::<wcprox_core::Result<Vec<_>>>()?;
    PropertyReport::merge(reports).ok_or_else(|| CliError::Usage("no trials requested".into()))
}

fn with_id(mut r: PropertyReport, id: String) -> PropertyReport {
    r.id = id;
    r
}

/// Runs one named property; sampled properties give one report per
/// dimension in `opts.dims`.
pub fn run_property(id: PropertyId, opts: &SuiteOptions) -> Result<Vec<PropertyReport>> {
    if opts.trials == 0 || opts.instances == 0 {
        return Err(CliError::Usage("trial and instance counts must be positive".into()));
    }
    let d = opts.denoiser.build()?;
    let phi = d.induced();
    let m = opts.m_scale * d.weak_convexity_constant();
    let trials = Trials::new(opts.trials, opts.seed);
    let per_dim = |f: &(dyn Fn(SampleDomain, Trials) -> wcprox_core::Result<PropertyReport> + Sync)| {
        opts.dims
            .iter()
            .map(|&n| {
                let domain = SampleDomain::new(n, 5.0);
                let r = run_parallel(trials, opts.threads, |t| f(domain, t))?;
                Ok(with_id(r, format!("{id}[n={n}]")))
            })
            .collect::<Result<Vec<_>>>()
    };
    match id {
        PropertyId::ProxIdentity => {
            let points: Vec<f64> = (0..20).map(|i| -5.0 + 10.0 * i as f64 / 19.0).collect();
            let r = props::check_prox_identity(&d, &points, DEFAULT_RADIUS, opts.grid)?;
            Ok(vec![with_id(r, id.to_string())])
        }
        PropertyId::WeakConvexity => {
            per_dim(&|dom, t| props::check_weak_convexity_combination(|x| phi.value(x), m, dom, t))
        }
        PropertyId::MidpointConvexity => per_dim(&|dom, t| {
            props::check_midpoint_convexity(|z| Ok(phi.value(z)? + 0.5 * m * z.norm_sq()), dom, t)
        }),
        PropertyId::Subgradient => per_dim(&|dom, t| {
            props::check_subgradient_lower_bound(|x| phi.value(x), |x| phi.gradient(x), m, dom, t)
        }),
        PropertyId::ThreePoints => {
            per_dim(&|dom, t| props::check_three_points(|x| phi.value(x), |z| Ok(d.apply(z)), m, dom, t))
        }
        PropertyId::DescentLemma => {
            let shape = Shape::image(opts.image_size, opts.image_size);
            let op = Convolution::new(opts.kernel.load()?, shape)?;
            let y = uniform_tensor(&mut seeded(opts.seed), shape, 0.0, 1.0);
            let f = QuadraticFidelity::new(op, y)?;
            let lf = opts.lf_scale * f.lipschitz();
            let r = run_parallel(trials, opts.threads, |t| {
                props::check_descent_lemma(
                    |x| f.value(x),
                    |x| f.gradient(x),
                    lf,
                    shape,
                    SampleDomain::default(),
                    t,
                )
            })?;
            Ok(vec![with_id(r, id.to_string())])
        }
        PropertyId::PgdDescent | PropertyId::Lyapunov | PropertyId::RateBound => {
            let instances = Trials::new(opts.instances, opts.seed);
            let r = run_parallel(instances, opts.threads, |t| solver_property(id, opts, t))?;
            Ok(vec![with_id(r, id.to_string())])
        }
    }
}

fn solver_property(
    id: PropertyId,
    opts: &SuiteOptions,
    block: Trials,
) -> wcprox_core::Result<PropertyReport> {
    let mut report = PropertyReport::new(id.name(), props::TOL_SEQUENCE);
    for i in block.start..block.start + block.count {
        match id {
            PropertyId::PgdDescent | PropertyId::Lyapunov => {
                let (inst, out) = if id == PropertyId::PgdDescent {
                    let inst = random_pgd_instance(block.seed, i, opts.safety)?;
                    let cfg = SolverConfig { tau: inst.tau, residual_tol: 0.0, ..Default::default() };
                    let out = run_pgd(&inst.problem, &cfg, &inst.x0, RunOptions::default())?;
                    (inst, out)
                } else {
                    let inst = random_alpha_instance(block.seed, i, opts.safety, opts.policy)?;
                    let cfg = SolverConfig {
                        tau: inst.tau,
                        alpha: inst.alpha,
                        residual_tol: 0.0,
                        bound_policy: opts.policy,
                        safety: opts.safety,
                        ..Default::default()
                    };
                    let out = run_alpha_pgd(&inst.problem, &cfg, &inst.x0, RunOptions::default())?;
                    (inst, out)
                };
                let (a, b) = props::descent_sequences(&out.trace);
                let r = props::check_sequence_lemma(&a, &b);
                report.record(i, r.worst_slack, || {
                    vec![i as f64, inst.x0.len() as f64, inst.tau, inst.alpha, inst.problem.lambda()]
                });
            }
            PropertyId::RateBound => {
                let mut rng = trial_stream(block.seed ^ 0x7a7e, i);
                let lambda = uniform(&mut rng, 0.2, 2.0);
                let c = uniform(&mut rng, -0.5 * lambda, 1.0);
                let y = uniform(&mut rng, -3.0, 3.0);
                let p = scalar_quadratic_problem(y, c, lambda)?;
                let m = c.min(0.0).abs();
                let tau = uniform(&mut rng, 0.1, 1.0) * opts.safety * pgd_step_limit(lambda, m);
                let x0 = ImageTensor::scalar(uniform(&mut rng, -5.0, 5.0));
                let cfg = SolverConfig { tau, residual_tol: 0.0, ..Default::default() };
                let out = run_pgd(&p, &cfg, &x0, RunOptions::default())?;
                let (_, f_star) = scalar_quadratic_optimum(y, c, lambda);
                let check = residual_rate_check(&out.trace, f_star)?;
                let scale = 1.0 + out.trace.rows[0].objective.abs();
                report.record(i, check.worst_slack / scale, || vec![y, c, lambda, tau, x0.data()[0]]);
            }
            _ => unreachable!("sampled properties are handled by run_property"),
        }
    }
    Ok(report)
}
