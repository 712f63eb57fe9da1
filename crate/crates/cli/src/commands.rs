//! Argument parsing and the four subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wcprox_core::properties::PropertyReport;

use crate::config::KeyValues;
use crate::curves;
use crate::error::{exit, CliError, Result};
use crate::feasibility::{render_table, sweep_csv, BoundsInput, Sweep};
use crate::formats;
use crate::solve::{self, SolveSettings};
use crate::suite::{self, PropertyId, SuiteOptions};

#[derive(Debug, Parser)]
#[command(
    name = "wcprox",
    version,
    about = "Proximal gradient solvers with weakly convex and plug-and-play regularizers"
)]
pub struct Cli {
    /// key=value file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Fraction of each open bound that is accepted.
    #[arg(long, global = true, value_name = "F")]
    pub safety: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Restore an image and write the result, trace and manifest.
    Solve(SolveArgs),
    /// Run sampled property checks.
    Check(CheckArgs),
    /// Print step-size and weight limits.
    Bounds(BoundsArgs),
    /// Turn trace CSVs into gnuplot data and a script.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// deblur | sr
    #[arg(long)]
    problem: Option<String>,
    /// Downsampling factor for sr.
    #[arg(long)]
    scale: Option<usize>,
    /// gaussian:SIGMA,SIZE | uniform:SIZE | file:PATH
    #[arg(long)]
    kernel: Option<String>,
    /// Standard deviation of the added Gaussian noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Clean image: checkerboard | bump | cartoon | tensor or PGM path.
    #[arg(long)]
    image: Option<String>,
    /// Side length of synthetic images.
    #[arg(long)]
    size: Option<usize>,
    /// Observed image; skips the synthetic degradation.
    #[arg(long)]
    observation: Option<PathBuf>,
    /// pgd | alpha-pgd | pnp-pgd | pnp-alpha-pgd
    #[arg(long)]
    algo: Option<String>,
    /// quadratic:Lg=..,c=.. | cosine:a=..,eps=.. with optional gamma=, sigma=
    #[arg(long)]
    denoiser: Option<String>,
    /// zero | quadratic:c=W | induced (pgd and alpha-pgd only)
    #[arg(long)]
    regularizer: Option<String>,
    /// Number or auto.
    #[arg(long)]
    lambda: Option<String>,
    /// Number or auto.
    #[arg(long)]
    tau: Option<String>,
    /// Number or auto.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop once the squared step falls below this value.
    #[arg(long)]
    tol: Option<f64>,
    /// strict | refined | override
    #[arg(long)]
    bound_policy: Option<String>,
    /// Lipschitz constant of the fidelity gradient (at least the estimate).
    #[arg(long)]
    lf: Option<f64>,
    /// Record wall time in the trace (makes traces run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Properties to run.
    names: Vec<String>,
    /// Run every property.
    #[arg(long)]
    all: bool,
    /// List the properties and exit.
    #[arg(long)]
    list: bool,
    #[arg(long)]
    trials: Option<u64>,
    /// Random problem instances for solver properties.
    #[arg(long)]
    instances: Option<u64>,
    #[arg(long)]
    denoiser: Option<String>,
    /// Multiplies the weak-convexity constant.
    #[arg(long)]
    m_scale: Option<f64>,
    /// Multiplies the fidelity Lipschitz constant.
    #[arg(long)]
    lf_scale: Option<f64>,
    /// Comma-separated sample dimensions.
    #[arg(long)]
    dims: Option<String>,
    /// Grid points of the brute-force prox.
    #[arg(long)]
    grid: Option<usize>,
    /// Blur kernel for the descent lemma.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    bound_policy: Option<String>,
    /// Write failing witnesses to this CSV.
    #[arg(long)]
    witnesses: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 1.0)]
    lf: f64,
    #[arg(long, default_value_t = 1.0)]
    lg: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Weak-convexity constant (default gamma*L_g/(gamma*L_g+1)).
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// NAME:LO:HI:N over lf, lg, gamma, m, lambda, alpha or tau.
    #[arg(long)]
    sweep: Option<String>,
    /// Sweep CSV destination (stdout when absent).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Trace CSV files.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8> {
    let config = cli.config.as_deref().map(KeyValues::load).transpose()?.unwrap_or_default();
    match &cli.command {
        Command::Solve(a) => cmd_solve(&cli, a, config, stdout, stderr),
        Command::Check(a) => cmd_check(&cli, a, config, stdout, stderr),
        Command::Bounds(a) => cmd_bounds(&cli, a, stdout),
        Command::Curves(a) => cmd_curves(&cli, a, stdout, stderr),
    }
}

fn out_io(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn overlay(kv: &mut KeyValues, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        kv.set(key, v.to_string());
    }
}

fn cmd_solve(
    cli: &Cli,
    a: &SolveArgs,
    mut kv: KeyValues,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<u8> {
    overlay(&mut kv, "problem", a.problem.as_ref());
    overlay(&mut kv, "scale", a.scale);
    overlay(&mut kv, "kernel", a.kernel.as_ref());
    overlay(&mut kv, "noise", a.noise);
    overlay(&mut kv, "image", a.image.as_ref());
    overlay(&mut kv, "size", a.size);
    overlay(&mut kv, "observation", a.observation.as_ref().map(|p| p.display()));
    overlay(&mut kv, "algorithm", a.algo.as_ref());
    overlay(&mut kv, "denoiser", a.denoiser.as_ref());
    overlay(&mut kv, "regularizer", a.regularizer.as_ref());
    overlay(&mut kv, "lambda", a.lambda.as_ref());
    overlay(&mut kv, "tau", a.tau.as_ref());
    overlay(&mut kv, "alpha", a.alpha.as_ref());
    overlay(&mut kv, "max_iters", a.max_iters);
    overlay(&mut kv, "residual_tol", a.tol);
    overlay(&mut kv, "bound_policy", a.bound_policy.as_ref());
    overlay(&mut kv, "lf", a.lf);
    overlay(&mut kv, "safety", cli.safety);
    overlay(&mut kv, "seed", cli.seed);
    if a.timing {
        kv.set("timing", true);
    }
    let settings = SolveSettings::from_key_values(&kv)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("wcprox-out"));
    let report = solve::solve(settings)?;
    solve::write_outputs(&report, &out)?;
    let r = &report.resolved;
    let trace = &report.output.trace;
    let mut w = |line: String| writeln!(stdout, "{line}").map_err(out_io);
    w(format!("algorithm     {}", report.settings.algorithm))?;
    w(format!("L_f           {}", report.lipschitz))?;
    w(format!("M             {}", report.weak_convexity))?;
    w(format!("lambda        {}", r.lambda))?;
    w(format!("tau           {}", r.tau))?;
    if report.settings.algorithm.is_relaxed() {
        w(format!("alpha         {}", r.alpha))?;
    }
    w(format!("iterations    {} ({})", trace.iterations(), trace.status.name()))?;
    if let Some(last) = trace.rows.last() {
        w(format!("F             {} -> {}", trace.rows[0].objective, last.objective))?;
    }
    if let (Some(b), Some(p)) = (report.baseline_psnr, report.restored_psnr) {
        w(format!("PSNR          {:.2} dB -> {:.2} dB", b.db(), p.db()))?;
    }
    w(format!("outputs       {}", out.display()))?;
    if !report.monotone {
        if report.settings.bound_policy == wcprox_core::bounds::BoundPolicy::Override {
            let _ = writeln!(stderr, "warning: trace is not monotone (bound policy override)");
        } else {
            return Err(CliError::Numerical("trace is not monotone".into()));
        }
    }
    Ok(exit::OK)
}

pub const CHECK_KEYS: &[&str] = &[
    "bound_policy",
    "denoiser",
    "dims",
    "grid",
    "instances",
    "kernel",
    "lf_scale",
    "m_scale",
    "safety",
    "seed",
    "trials",
];

fn suite_options(cli: &Cli, a: &CheckArgs, mut kv: KeyValues) -> Result<SuiteOptions> {
    overlay(&mut kv, "trials", a.trials);
    overlay(&mut kv, "instances", a.instances);
    overlay(&mut kv, "denoiser", a.denoiser.as_ref());
    overlay(&mut kv, "m_scale", a.m_scale);
    overlay(&mut kv, "lf_scale", a.lf_scale);
    overlay(&mut kv, "dims", a.dims.as_ref());
    overlay(&mut kv, "grid", a.grid);
    overlay(&mut kv, "kernel", a.kernel.as_ref());
    overlay(&mut kv, "bound_policy", a.bound_policy.as_ref());
    overlay(&mut kv, "safety", cli.safety);
    overlay(&mut kv, "seed", cli.seed);
    kv.ensure_known(CHECK_KEYS)?;
    let mut o = SuiteOptions { threads: suite::thread_count()?, ..Default::default() };
    let usage = |key: &str, e: &dyn std::fmt::Display| CliError::Usage(format!("{key}: {e}"));
    if let Some(v) = kv.parsed("trials")? {
        o.trials = v;
    }
    if let Some(v) = kv.parsed("instances")? {
        o.instances = v;
    }
    if let Some(v) = kv.get("denoiser") {
        o.denoiser = v.parse()?;
    }
    for (key, slot) in [("m_scale", &mut o.m_scale), ("lf_scale", &mut o.lf_scale), ("safety", &mut o.safety)]
    {
        if let Some(v) = kv.parsed::<f64>(key)? {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("{key} must be positive, got {v}")));
            }
            *slot = v;
        }
    }
    if o.safety > 1.0 {
        return Err(CliError::Usage(format!("safety must lie in (0, 1], got {}", o.safety)));
    }
    if let Some(v) = kv.get("dims") {
        o.dims = v
            .split(',')
            .map(|d| d.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| usage("dims", &d)))
            .collect::<Result<_>>()?;
    }
    if let Some(v) = kv.parsed("grid")? {
        o.grid = v;
    }
    if let Some(v) = kv.get("kernel") {
        o.kernel = v.parse()?;
    }
    if let Some(v) = kv.get("bound_policy") {
        o.policy = v.parse().map_err(|e| usage("bound_policy", &e))?;
    }
    if let Some(v) = kv.parsed("seed")? {
        o.seed = v;
    }
    Ok(o)
}

fn witness_csv(reports: &[PropertyReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Malformed(format!("writing witnesses: {e}"));
    w.write_record(["property", "trial", "slack", "inputs"]).map_err(err)?;
    for r in reports {
        for wit in &r.witnesses {
            let inputs: Vec<String> = wit.inputs.iter().map(|v| crate::trace::format_f64(*v)).collect();
            w.write_record([
                r.id.clone(),
                wit.trial.to_string(),
                crate::trace::format_f64(wit.slack),
                inputs.join(";"),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Malformed(format!("writing witnesses: {e}")))
}

fn cmd_check(
    cli: &Cli,
    a: &CheckArgs,
    kv: KeyValues,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<u8> {
    if a.list {
        for p in PropertyId::ALL {
            writeln!(stdout, "{:<20} {}", p.name(), p.describe()).map_err(out_io)?;
        }
        return Ok(exit::OK);
    }
    let ids: Vec<PropertyId> = if a.all {
        PropertyId::ALL.to_vec()
    } else if a.names.is_empty() {
        return Err(CliError::Usage("name at least one property or pass --all (see --list)".into()));
    } else {
        a.names.iter().map(|n| n.parse()).collect::<Result<_>>()?
    };
    let opts = suite_options(cli, a, kv)?;
    let mut reports = Vec::new();
    writeln!(stdout, "{:<24} {:>8} {:>14} {:>10}  result", "property", "trials", "worst_slack", "tolerance")
        .map_err(out_io)?;
    for id in ids {
        for r in suite::run_property(id, &opts)? {
            writeln!(
                stdout,
                "{:<24} {:>8} {:>14.3e} {:>10.1e}  {}",
                r.id,
                r.trials,
                r.worst_slack,
                r.tolerance,
                if r.pass { "PASS" } else { "FAIL" }
            )
            .map_err(out_io)?;
            reports.push(r);
        }
    }
    let failed: Vec<&PropertyReport> = reports.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        let _ = writeln!(stderr, "{} failed; witnesses:", r.id);
        for w in &r.witnesses {
            let inputs: Vec<String> = w.inputs.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(
                stderr,
                "  trial {:>6}  slack {:.3e}  inputs [{}]",
                w.trial,
                w.slack,
                inputs.join(", ")
            );
        }
    }
    if let Some(path) = &a.witnesses {
        formats::write_bytes(path, &witness_csv(&reports)?)?;
    }
    Ok(if failed.is_empty() { exit::OK } else { exit::NUMERICAL })
}

fn cmd_bounds(cli: &Cli, a: &BoundsArgs, stdout: &mut dyn Write) -> Result<u8> {
    let input = BoundsInput {
        lf: a.lf,
        lg: a.lg,
        gamma: a.gamma,
        m: a.m,
        lambda: a.lambda,
        alpha: a.alpha,
        tau: a.tau,
    };
    let safety = cli.safety.unwrap_or(wcprox_core::bounds::DEFAULT_SAFETY);
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(CliError::Usage(format!("safety must lie in (0, 1], got {safety}")));
    }
    let f = input.evaluate()?;
    stdout.write_all(render_table(&input, &f, safety).as_bytes()).map_err(out_io)?;
    if let Some(spec) = &a.sweep {
        let sweep: Sweep = spec.parse()?;
        let text = sweep_csv(&input, &sweep)?;
        match &a.csv {
            Some(path) => formats::write_bytes(path, text.as_bytes())?,
            None => {
                writeln!(stdout).map_err(out_io)?;
                stdout.write_all(text.as_bytes()).map_err(out_io)?;
            }
        }
    }
    Ok(exit::OK)
}

fn cmd_curves(cli: &Cli, a: &CurvesArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("wcprox-curves"));
    let result = curves::write_curves(&a.traces, &out)?;
    for label in &result.non_monotone {
        let _ = writeln!(stderr, "warning: F is not monotone in {label}");
    }
    for f in &result.files {
        writeln!(stdout, "{}", f.display()).map_err(out_io)?;
    }
    Ok(exit::OK)
}
