//! The `solve` pipeline: resolve settings, build the problem, run a solver
//! and write its artifacts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use wcprox_core::bounds::{
    alpha_pgd_step_limit, pgd_step_limit, pnp_alpha_interval, pnp_alpha_lambda_limit, pnp_pgd_lambda_limit,
    BoundPolicy, DEFAULT_SAFETY,
};
use wcprox_core::degrade::{degrade, Degradation};
use wcprox_core::denoiser::GradientStepDenoiser;
use wcprox_core::fidelity::{QuadraticFidelity, SmoothFunction};
use wcprox_core::metrics::{psnr_clipped, Psnr};
use wcprox_core::operator::{replicate_upsample, LinearOperator};
use wcprox_core::problem::{
    CompositeProblem, InducedRegularizer, Regularizer, ScaledQuadratic, ZeroRegularizer,
};
use wcprox_core::solver::{
    run_alpha_pgd, run_pgd, run_pnp_alpha_pgd, run_pnp_pgd, Algorithm, RunOptions, SolveOutput, SolverConfig,
    Stopwatch, DEFAULT_MAX_ITERS, DEFAULT_RESIDUAL_TOL,
};
use wcprox_core::synthetic::SyntheticImage;
use wcprox_core::{Error as CoreError, ImageTensor, Shape};

use crate::config::{KeyValues, RunManifest};
use crate::error::{CliError, Result};
use crate::formats;
use crate::specs::{DenoiserSpec, ImageSource, KernelSource, RegularizerSpec};
use crate::trace;

/// Relative slack of the monotonicity check on finished traces.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Deblur,
    SuperResolution,
}

impl FromStr for ProblemKind {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deblur" => Ok(Self::Deblur),
            "sr" => Ok(Self::SuperResolution),
            _ => Err(CliError::Usage(format!("unknown problem {s:?} (expected deblur or sr)"))),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Deblur => "deblur",
            Self::SuperResolution => "sr",
        })
    }
}

/// A number or `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Auto,
    Value(f64),
}

impl Param {
    fn value(self) -> Option<f64> {
        match self {
            Self::Auto => None,
            Self::Value(v) => Some(v),
        }
    }
}

impl FromStr for Param {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Self::Value(v)),
            _ => Err(CliError::Usage(format!("expected a positive number or \"auto\", got {s:?}"))),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Value(v) => write!(f, "{v}"),
        }
    }
}

pub const KEYS: &[&str] = &[
    "algorithm",
    "alpha",
    "bound_policy",
    "denoiser",
    "image",
    "kernel",
    "lambda",
    "lf",
    "max_iters",
    "noise",
    "observation",
    "problem",
    "regularizer",
    "residual_tol",
    "safety",
    "scale",
    "seed",
    "size",
    "tau",
    "timing",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSettings {
    pub problem: ProblemKind,
    pub scale: usize,
    pub kernel: KernelSource,
    pub noise: f64,
    /// Clean image; defaults to the bundled cartoon unless an observation
    /// file is given, in which case it only serves as PSNR reference.
    pub image: Option<ImageSource>,
    /// Side of rendered synthetic images.
    pub size: usize,
    /// Use this observation instead of degrading `image`.
    pub observation: Option<PathBuf>,
    pub algorithm: Algorithm,
    pub denoiser: DenoiserSpec,
    pub regularizer: RegularizerSpec,
    pub lambda: Param,
    pub tau: Param,
    pub alpha: Param,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub bound_policy: BoundPolicy,
    /// Lipschitz override; must not undercut the power-iteration estimate.
    pub lf: Option<f64>,
    pub safety: f64,
    pub seed: u64,
    pub timing: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Deblur,
            scale: 2,
            kernel: KernelSource::default(),
            noise: 0.01,
            image: None,
            size: 64,
            observation: None,
            algorithm: Algorithm::PnpAlphaPgd,
            denoiser: DenoiserSpec::default(),
            regularizer: RegularizerSpec::Induced,
            lambda: Param::Auto,
            tau: Param::Auto,
            alpha: Param::Auto,
            max_iters: DEFAULT_MAX_ITERS,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            bound_policy: BoundPolicy::Strict,
            lf: None,
            safety: DEFAULT_SAFETY,
            seed: 0,
            timing: false,
        }
    }
}

fn core_parse<T: FromStr<Err = CoreError>>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|e| CliError::Usage(format!("{key}: {e}")))
}

impl SolveSettings {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.ensure_known(KEYS)?;
        let mut s = Self::default();
        let num = |key: &str| -> Result<Option<f64>> {
            kv.get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| CliError::Usage(format!("{key}: expected a number, got {v:?}")))
                })
                .transpose()
        };
        let count = |key: &str| -> Result<Option<usize>> {
            kv.get(key)
                .map(|v| {
                    v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
                        CliError::Usage(format!("{key}: expected a positive integer, got {v:?}"))
                    })
                })
                .transpose()
        };
        if let Some(v) = kv.get("problem") {
            s.problem = v.parse()?;
        }
        if let Some(v) = count("scale")? {
            s.scale = v;
        }
        if let Some(v) = kv.get("kernel") {
            s.kernel = v.parse()?;
        }
        if let Some(v) = num("noise")? {
            s.noise = v;
        }
        s.image = kv.get("image").filter(|v| !v.is_empty()).map(str::parse).transpose()?;
        if let Some(v) = count("size")? {
            s.size = v;
        }
        s.observation = kv.get("observation").filter(|v| !v.is_empty()).map(PathBuf::from);
        if let Some(v) = kv.get("algorithm") {
            s.algorithm = core_parse("algorithm", v)?;
        }
        if let Some(v) = kv.get("denoiser") {
            s.denoiser = v.parse()?;
        }
        if let Some(v) = kv.get("regularizer") {
            s.regularizer = v.parse()?;
        }
        for (key, slot) in [("lambda", &mut s.lambda), ("tau", &mut s.tau), ("alpha", &mut s.alpha)] {
            if let Some(v) = kv.get(key) {
                *slot = v.parse().map_err(|e| CliError::Usage(format!("{key}: {e}")))?;
            }
        }
        if let Some(v) = count("max_iters")? {
            s.max_iters = v;
        }
        if let Some(v) = num("residual_tol")? {
            s.residual_tol = v;
        }
        if let Some(v) = kv.get("bound_policy") {
            s.bound_policy = core_parse("bound_policy", v)?;
        }
        s.lf = match kv.get("lf") {
            None | Some("auto") => None,
            Some(_) => num("lf")?,
        };
        if let Some(v) = num("safety")? {
            s.safety = v;
        }
        if let Some(v) = kv.parsed::<u64>("seed")? {
            s.seed = v;
        }
        if let Some(v) = kv.parsed::<bool>("timing")? {
            s.timing = v;
        }
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(CliError::Usage(format!("safety must lie in (0, 1], got {}", self.safety)));
        }
        if self.noise < 0.0 {
            return Err(CliError::Usage(format!("noise must be ≥ 0, got {}", self.noise)));
        }
        if self.residual_tol < 0.0 {
            return Err(CliError::Usage("residual_tol must be ≥ 0".into()));
        }
        if self.problem == ProblemKind::SuperResolution && self.scale < 2 {
            return Err(CliError::Usage("sr needs scale ≥ 2".into()));
        }
        if self.algorithm.is_pnp() && self.regularizer != RegularizerSpec::Induced {
            return Err(CliError::Usage(format!(
                "{} always uses the denoiser; regularizer must be \"induced\"",
                self.algorithm
            )));
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("problem", self.problem);
        if self.problem == ProblemKind::SuperResolution {
            kv.set("scale", self.scale);
        }
        kv.set("kernel", &self.kernel);
        kv.set("noise", self.noise);
        if let Some(img) = &self.image {
            kv.set("image", img);
        }
        kv.set("size", self.size);
        if let Some(p) = &self.observation {
            kv.set("observation", p.display());
        }
        kv.set("algorithm", self.algorithm);
        kv.set("denoiser", self.denoiser);
        kv.set("regularizer", self.regularizer);
        kv.set("lambda", self.lambda);
        kv.set("tau", self.tau);
        kv.set("alpha", self.alpha);
        kv.set("max_iters", self.max_iters);
        kv.set("residual_tol", self.residual_tol);
        kv.set("bound_policy", self.bound_policy);
        if let Some(lf) = self.lf {
            kv.set("lf", lf);
        }
        kv.set("safety", self.safety);
        kv.set("seed", self.seed);
        kv.set("timing", self.timing);
        kv
    }
}

/// Concrete `λ`, `τ`, `α` for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub lambda: f64,
    pub tau: f64,
    pub alpha: f64,
}

/// Weak-convexity constant of the regularizer the run will use.
fn regularizer_m(s: &SolveSettings, d: &GradientStepDenoiser) -> f64 {
    match s.regularizer {
        RegularizerSpec::Zero => 0.0,
        RegularizerSpec::Quadratic(c) => (-c).max(0.0),
        RegularizerSpec::Induced => d.weak_convexity_constant(),
    }
}

/// Fills `auto` parameters with the largest admissible values scaled by
/// the safety factor.
pub fn resolve_parameters(s: &SolveSettings, lf: f64, d: &GradientStepDenoiser) -> Result<Resolved> {
    let sf = s.safety;
    let m = regularizer_m(s, d);
    let policy = match s.bound_policy {
        BoundPolicy::Override => BoundPolicy::Strict,
        p => p,
    };
    let induced = s.regularizer == RegularizerSpec::Induced;
    let fixed_tau = |what: &str| -> Result<f64> {
        match s.tau {
            Param::Value(t) if t != 1.0 => {
                Err(CliError::Usage(format!("{what} uses a unit step; tau must be 1 or auto, got {t}")))
            }
            _ => Ok(1.0),
        }
    };
    let alpha_value = || -> Result<Option<f64>> {
        match s.alpha.value() {
            Some(a) if a > 1.0 => Err(CliError::Usage(format!("alpha must lie in (0, 1], got {a}"))),
            a => Ok(a),
        }
    };
    match s.algorithm {
        Algorithm::PnpPgd => {
            let tau = fixed_tau("pnp-pgd")?;
            let lambda = s.lambda.value().unwrap_or(sf * pnp_pgd_lambda_limit(lf, d.effective_lipschitz()));
            Ok(Resolved { lambda, tau, alpha: 1.0 })
        }
        Algorithm::PnpAlphaPgd => {
            let tau = fixed_tau("pnp-alpha-pgd")?;
            let lambda = match s.lambda {
                Param::Value(l) => l,
                Param::Auto if m == 0.0 => {
                    return Err(CliError::Usage("lambda auto needs a denoiser with M > 0".into()))
                }
                Param::Auto => sf * sf * pnp_alpha_lambda_limit(lf, m),
            };
            let alpha = alpha_value()?.unwrap_or_else(|| (sf / (lambda * lf)).min(1.0));
            Ok(Resolved { lambda, tau, alpha })
        }
        Algorithm::Pgd => {
            let tau = match (s.tau, s.lambda, induced) {
                (_, _, true) => fixed_tau("the induced regularizer")?,
                (Param::Value(t), _, _) => t,
                (Param::Auto, Param::Value(l), _) => sf * pgd_step_limit(l * lf, m),
                (Param::Auto, Param::Auto, _) => 1.0,
            };
            let lambda = match s.lambda {
                Param::Value(l) => l,
                Param::Auto => {
                    let room = 2.0 * sf / tau - m;
                    if room <= 0.0 {
                        return Err(CliError::Rejected {
                            message: format!("no lambda admits tau = {tau} with M = {m}"),
                            limits: format!("tau_max = 2/M = {}", 2.0 / m),
                        });
                    }
                    room / lf
                }
            };
            Ok(Resolved { lambda, tau, alpha: 1.0 })
        }
        Algorithm::AlphaPgd => {
            let alpha_given = alpha_value()?;
            let tau = match (s.tau, s.lambda, induced) {
                (_, _, true) => fixed_tau("the induced regularizer")?,
                (Param::Value(t), _, _) => t,
                (Param::Auto, Param::Value(l), _) => {
                    sf * alpha_pgd_step_limit(l * lf, m, alpha_given.unwrap_or(1.0), policy)
                }
                (Param::Auto, Param::Auto, _) => 1.0,
            };
            let (lambda, alpha) = match (s.lambda, alpha_given) {
                (Param::Value(l), Some(a)) => (l, a),
                (Param::Value(l), None) => (l, (sf / (tau * l * lf)).min(1.0)),
                (Param::Auto, a) => {
                    let a = a.unwrap_or(1.0);
                    (sf / (a * tau * lf), a)
                }
            };
            Ok(Resolved { lambda, tau, alpha })
        }
    }
}

/// Human-readable limits for a rejected configuration.
pub fn limits_report(s: &SolveSettings, lf: f64, d: &GradientStepDenoiser, r: &Resolved) -> String {
    let m = regularizer_m(s, d);
    let lambda_lf = r.lambda * lf;
    let mut lines = vec![format!("L_f = {lf}, M = {m}, lambda = {}, safety = {}", r.lambda, s.safety)];
    match s.algorithm {
        Algorithm::PnpPgd => {
            lines.push(format!(
                "lambda_max = {} (lambda*L_f < (L_g+2)/(L_g+1))",
                pnp_pgd_lambda_limit(lf, d.effective_lipschitz())
            ));
        }
        Algorithm::PnpAlphaPgd => {
            lines.push(format!("lambda_max = {} (lambda*L_f*M < 1)", pnp_alpha_lambda_limit(lf, m)));
            match pnp_alpha_interval(lambda_lf, m) {
                Some((lo, hi)) => lines.push(format!("alpha interval = ({lo}, {hi}); alpha = {}", r.alpha)),
                None => lines.push("alpha interval is empty".into()),
            }
        }
        Algorithm::Pgd => {
            lines.push(format!(
                "tau_max = {} (tau < 2/(lambda*L_f + M)); tau = {}",
                pgd_step_limit(lambda_lf, m),
                r.tau
            ));
        }
        Algorithm::AlphaPgd => {
            let policy = if s.bound_policy == BoundPolicy::Refined {
                BoundPolicy::Refined
            } else {
                BoundPolicy::Strict
            };
            lines.push(format!(
                "tau_max = {} ({} bound at alpha = {}); tau = {}",
                alpha_pgd_step_limit(lambda_lf, m, r.alpha, policy),
                policy,
                r.alpha,
                r.tau
            ));
        }
    }
    lines.join("\n")
}

/// Observation, operator and reference image of a run.
pub struct Scene {
    pub operator: Degradation,
    pub observation: ImageTensor,
    pub clean: Option<ImageTensor>,
    pub x0: ImageTensor,
    /// PSNR of the observation (SR: of its pixel-replication upsample).
    pub baseline_psnr: Option<Psnr>,
}

pub fn build_scene(s: &SolveSettings) -> Result<Scene> {
    let kernel = s.kernel.load()?;
    let observed = s.observation.as_deref().map(formats::load_image).transpose()?;
    let clean = match (&s.image, &observed) {
        (Some(ImageSource::Synthetic(img)), _) => Some(img.render(s.size, s.size)),
        (Some(ImageSource::File(p)), _) => Some(formats::load_image(p)?),
        (None, None) => Some(SyntheticImage::Cartoon.render(s.size, s.size)),
        (None, Some(_)) => None,
    };
    let shape = match (&observed, &clean) {
        (Some(y), _) if s.problem == ProblemKind::SuperResolution => {
            let ys = y.shape();
            Shape::new(ys.planes, ys.height * s.scale, ys.width * s.scale)
        }
        (Some(y), _) => y.shape(),
        (None, Some(c)) => c.shape(),
        (None, None) => unreachable!("a clean image is rendered when no observation is given"),
    };
    if let Some(c) = &clean {
        if c.shape() != shape {
            return Err(CliError::Usage(format!(
                "reference image is {} but the problem needs {shape}",
                c.shape()
            )));
        }
    }
    let operator = match s.problem {
        ProblemKind::Deblur => Degradation::blur(kernel, shape)?,
        ProblemKind::SuperResolution => Degradation::blur_downsample(kernel, s.scale, shape)?,
    };
    let observation = match observed {
        Some(y) => {
            y.check_shape(operator.output_shape())
                .map_err(|e| CliError::Usage(format!("observation does not fit the operator: {e}")))?;
            y
        }
        None => degrade(clean.as_ref().expect("clean image"), &operator, s.noise, s.seed)?,
    };
    let x0 = match s.problem {
        ProblemKind::Deblur => observation.clone(),
        ProblemKind::SuperResolution => replicate_upsample(&observation, s.scale)?,
    };
    let baseline_psnr = clean.as_ref().map(|c| psnr_clipped(&x0, c, 1.0)).transpose()?;
    Ok(Scene { operator, observation, clean, x0, baseline_psnr })
}

struct WallClock(Instant);

impl Stopwatch for WallClock {
    fn elapsed_seconds(&self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64())
    }
}

/// Everything `solve` produced.
pub struct SolveReport {
    pub settings: SolveSettings,
    pub resolved: Resolved,
    pub lipschitz: f64,
    pub weak_convexity: f64,
    pub output: SolveOutput,
    pub baseline_psnr: Option<Psnr>,
    pub restored_psnr: Option<Psnr>,
    pub monotone: bool,
    pub observation: ImageTensor,
}

fn run_with<R: Regularizer>(
    fidelity: &QuadraticFidelity<Degradation>,
    reg: R,
    r: &Resolved,
    cfg: &SolverConfig,
    x0: &ImageTensor,
    opts: RunOptions<'_>,
    relaxed: bool,
) -> wcprox_core::Result<SolveOutput> {
    let problem = CompositeProblem::new(fidelity, reg, r.lambda)?;
    if relaxed {
        run_alpha_pgd(&problem, cfg, x0, opts)
    } else {
        run_pgd(&problem, cfg, x0, opts)
    }
}

/// Runs the configured solver; validator rejections come back as
/// [`CliError::Rejected`] with the relevant limits attached.
pub fn solve(settings: SolveSettings) -> Result<SolveReport> {
    settings.validate()?;
    let scene = build_scene(&settings)?;
    let denoiser = settings.denoiser.build()?;
    let mut fidelity = QuadraticFidelity::new(scene.operator.clone(), scene.observation.clone())?;
    if let Some(lf) = settings.lf {
        fidelity = fidelity.with_lipschitz_override(lf)?;
    }
    let lf = fidelity.lipschitz();
    let resolved = resolve_parameters(&settings, lf, &denoiser)?;
    let cfg = SolverConfig {
        algorithm: settings.algorithm,
        lambda: resolved.lambda,
        tau: resolved.tau,
        alpha: resolved.alpha,
        max_iters: settings.max_iters,
        residual_tol: settings.residual_tol,
        bound_policy: settings.bound_policy,
        safety: settings.safety,
        seed: settings.seed,
    };
    let clock = WallClock(Instant::now());
    let mut opts = RunOptions { reference: scene.clean.as_ref(), ..RunOptions::default() };
    if settings.timing {
        opts.clock = &clock;
    }
    let x0 = &scene.x0;
    let result = match settings.algorithm {
        Algorithm::PnpPgd => run_pnp_pgd(&fidelity, denoiser, resolved.lambda, &cfg, x0, opts),
        Algorithm::PnpAlphaPgd => {
            run_pnp_alpha_pgd(&fidelity, denoiser, resolved.lambda, resolved.alpha, &cfg, x0, opts)
        }
        Algorithm::Pgd | Algorithm::AlphaPgd => {
            let relaxed = settings.algorithm == Algorithm::AlphaPgd;
            match settings.regularizer {
                RegularizerSpec::Zero => {
                    run_with(&fidelity, ZeroRegularizer, &resolved, &cfg, x0, opts, relaxed)
                }
                RegularizerSpec::Quadratic(c) => {
                    run_with(&fidelity, ScaledQuadratic::new(c)?, &resolved, &cfg, x0, opts, relaxed)
                }
                RegularizerSpec::Induced => {
                    run_with(&fidelity, InducedRegularizer::new(denoiser), &resolved, &cfg, x0, opts, relaxed)
                }
            }
        }
    };
    let output = result.map_err(|e| match e {
        CoreError::BoundViolation(_) | CoreError::Infeasible(_) | CoreError::UnsupportedStep(_) => {
            CliError::Rejected {
                message: e.to_string(),
                limits: limits_report(&settings, lf, &denoiser, &resolved),
            }
        }
        other => other.into(),
    })?;
    let restored_psnr = scene.clean.as_ref().map(|c| psnr_clipped(&output.solution, c, 1.0)).transpose()?;
    let monotone = output.trace.is_monotone(MONOTONE_SLACK);
    Ok(SolveReport {
        weak_convexity: regularizer_m(&settings, &denoiser),
        settings,
        resolved,
        lipschitz: lf,
        output,
        baseline_psnr: scene.baseline_psnr,
        restored_psnr,
        monotone,
        observation: scene.observation,
    })
}

/// Resolved settings: `auto` replaced by the values actually used.
pub fn resolved_settings(report: &SolveReport) -> SolveSettings {
    let mut s = report.settings.clone();
    s.lambda = Param::Value(report.resolved.lambda);
    s.tau = Param::Value(report.resolved.tau);
    s.alpha = Param::Value(report.resolved.alpha);
    s
}

/// Writes `restored.wct`, `restored.pgm`, `observation.wct`,
/// `observation.pgm`, `trace.csv` and `manifest.txt` into `out`; returns
/// the manifest.
pub fn write_outputs(report: &SolveReport, out: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let s = resolved_settings(report);
    let mut manifest = RunManifest::new(s.to_key_values(), s.seed);
    if let Some(p) = &s.observation {
        manifest.inputs.push(("observation".into(), p.display().to_string()));
    }
    let image = s.image.clone().unwrap_or(ImageSource::Synthetic(SyntheticImage::Cartoon));
    if s.observation.is_none() || s.image.is_some() {
        manifest.inputs.push(("image".into(), image.to_string()));
    }
    manifest.inputs.push(("kernel".into(), s.kernel.to_string()));
    let planes = report.output.solution.shape().planes;
    let mut files: Vec<(&str, &str, Vec<u8>)> = vec![
        ("restored", "restored.wct", formats::encode_tensor(&report.output.solution)?),
        ("observation", "observation.wct", formats::encode_tensor(&report.observation)?),
        ("trace", "trace.csv", trace::trace_to_string(&report.output.trace)?.into_bytes()),
    ];
    if planes == 1 {
        files.push(("restored_pgm", "restored.pgm", formats::encode_pgm(&report.output.solution)?));
        files.push(("observation_pgm", "observation.pgm", formats::encode_pgm(&report.observation)?));
    }
    for (label, name, bytes) in &files {
        let path = out.join(name);
        formats::write_bytes(&path, bytes)?;
        manifest.outputs.push((label.to_string(), path.display().to_string()));
    }
    let path = out.join("manifest.txt");
    manifest.outputs.push(("manifest".into(), path.display().to_string()));
    formats::write_bytes(&path, manifest.render().as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(algo: &str) -> SolveSettings {
        let mut kv = KeyValues::new();
        kv.set("algorithm", algo);
        kv.set("size", 16);
        kv.set("kernel", "gaussian:1.6,5");
        kv.set("max_iters", 30);
        SolveSettings::from_key_values(&kv).unwrap()
    }

    #[test]
    fn settings_round_trip_through_key_values() {
        let s = quick("alpha-pgd");
        assert_eq!(SolveSettings::from_key_values(&s.to_key_values()).unwrap(), s);
        let mut kv = KeyValues::new();
        kv.set("lamda", 1);
        assert!(SolveSettings::from_key_values(&kv).is_err());
    }

    #[test]
    fn auto_lambda_for_pnp_alpha_sits_inside_the_interval() {
        let s = quick("pnp-alpha-pgd");
        let d = s.denoiser.build().unwrap();
        let m = d.weak_convexity_constant();
        let r = resolve_parameters(&s, 1.0, &d).unwrap();
        assert!((r.lambda - 0.99 * 0.99 / m).abs() < 1e-12);
        assert!(r.alpha > m && r.alpha * r.lambda < 1.0);
    }

    #[test]
    fn every_algorithm_runs_with_auto_parameters() {
        for algo in ["pgd", "alpha-pgd", "pnp-pgd", "pnp-alpha-pgd"] {
            let report = solve(quick(algo)).unwrap();
            assert!(report.monotone, "{algo}");
            assert!(report.output.trace.rows.len() > 1);
        }
    }

    #[test]
    fn resolved_settings_reproduce_the_run() {
        let a = solve(quick("pnp-alpha-pgd")).unwrap();
        let again = SolveSettings::from_key_values(&resolved_settings(&a).to_key_values()).unwrap();
        let b = solve(again).unwrap();
        assert_eq!(
            trace::trace_to_string(&a.output.trace).unwrap(),
            trace::trace_to_string(&b.output.trace).unwrap()
        );
    }

    #[test]
    fn oversized_lambda_is_rejected_with_limits() {
        let mut s = quick("pnp-pgd");
        s.lambda = Param::Value(10.0);
        match solve(s) {
            Err(CliError::Rejected { limits, .. }) => assert!(limits.contains("lambda_max")),
            other => panic!("expected a rejection, got {:?}", other.map(|r| r.resolved)),
        }
    }
}
