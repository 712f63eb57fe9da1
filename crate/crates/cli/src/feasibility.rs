//! Feasibility tables for the `bounds` command.

use std::fmt::Write as _;
use std::str::FromStr;

use wcprox_core::bounds::{alpha_pgd_step_limit, pgd_step_limit, pnp_alpha_interval, BoundPolicy, PnpLimits};

use crate::error::{CliError, Result};
use crate::trace::format_f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsInput {
    pub lf: f64,
    pub lg: f64,
    pub gamma: f64,
    /// Replaces `γL_g/(γL_g+1)` when set.
    pub m: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
}

impl Default for BoundsInput {
    fn default() -> Self {
        Self { lf: 1.0, lg: 1.0, gamma: 1.0, m: None, lambda: None, alpha: None, tau: None }
    }
}

/// Every limit derivable from a [`BoundsInput`]; `None` where an input is
/// missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub lg_eff: f64,
    pub m: f64,
    pub lambda_max_pnp_pgd: f64,
    pub lambda_max_pnp_alpha: f64,
    /// `2/(λL_f + M)`.
    pub tau_max_pgd: Option<f64>,
    /// Largest `λL_f` PGD tolerates at the given `τ`.
    pub lambda_lf_max_pgd: Option<f64>,
    pub alpha_interval: Option<Option<(f64, f64)>>,
    pub tau_max_strict: Option<f64>,
    pub tau_max_refined: Option<f64>,
    /// Largest `λL_f` αPGD tolerates at the given `α`, `τ` (strict, refined);
    /// `0` means no `λ` works.
    pub lambda_lf_max_strict: Option<f64>,
    pub lambda_lf_max_refined: Option<f64>,
}

impl BoundsInput {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(self.lf > 0.0 && self.lf.is_finite()) {
            return bad(format!("L_f must be positive, got {}", self.lf));
        }
        if !(0.0..=1.0).contains(&self.lg) {
            return bad(format!("L_g must lie in [0, 1], got {}", self.lg));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if let Some(m) = self.m {
            if !(0.0..1.0).contains(&m) {
                return bad(format!("M must lie in [0, 1), got {m}"));
            }
        }
        for (name, v) in [("lambda", self.lambda), ("tau", self.tau)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return bad(format!("alpha must lie in (0, 1], got {a}"));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self) -> Result<Feasibility> {
        self.validate()?;
        let pnp = PnpLimits::new(self.lf, self.lg, self.gamma);
        let m = self.m.unwrap_or(pnp.weak_convexity);
        let lambda_lf = self.lambda.map(|l| l * self.lf);
        let lambda_max_pnp_alpha = if m == 0.0 { f64::INFINITY } else { 1.0 / (self.lf * m) };
        let alpha_tau = self.alpha.zip(self.tau);
        Ok(Feasibility {
            lg_eff: pnp.lg_eff,
            m,
            lambda_max_pnp_pgd: pnp.lambda_max_pgd,
            lambda_max_pnp_alpha,
            tau_max_pgd: lambda_lf.map(|x| pgd_step_limit(x, m)),
            lambda_lf_max_pgd: self.tau.map(|t| (2.0 / t - m).max(0.0)),
            alpha_interval: lambda_lf.map(|x| pnp_alpha_interval(x, m)),
            tau_max_strict: lambda_lf
                .zip(self.alpha)
                .map(|(x, a)| alpha_pgd_step_limit(x, m, a, BoundPolicy::Strict)),
            tau_max_refined: lambda_lf
                .zip(self.alpha)
                .map(|(x, a)| alpha_pgd_step_limit(x, m, a, BoundPolicy::Refined)),
            lambda_lf_max_strict: alpha_tau.map(|(a, t)| if t * m < a { 1.0 / (a * t) } else { 0.0 }),
            lambda_lf_max_refined: alpha_tau.map(|(a, t)| {
                let room = (2.0 * a / t - (2.0 - a) * m) / (a * a * a);
                room.min(1.0 / (a * t)).max(0.0)
            }),
        })
    }
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

fn lambda_lf_requirement(v: f64) -> String {
    if v > 0.0 {
        format!("requires lambda*L_f < {}", num(v))
    } else {
        "infeasible for every lambda".into()
    }
}

/// Plain-text table of every limit available for `input`.
pub fn render_table(input: &BoundsInput, f: &Feasibility, safety: f64) -> String {
    let mut out = String::new();
    let mut row = |label: &str, value: String| {
        let _ = writeln!(out, "{label:<38} {value}");
    };
    row("L_f", num(input.lf));
    row("L_g * gamma", num(f.lg_eff));
    row("M (weak convexity)", num(f.m));
    row("PnP-PGD lambda_max", num(f.lambda_max_pnp_pgd));
    row("PnP-alphaPGD lambda_max", num(f.lambda_max_pnp_alpha));
    if let Some(lambda) = input.lambda {
        row("lambda * L_f", num(lambda * input.lf));
    }
    if let Some(t) = f.tau_max_pgd {
        row("PGD tau_max", format!("{} (with safety {})", num(t), num(safety * t)));
    }
    if let Some(v) = f.lambda_lf_max_pgd {
        row("PGD at given tau", lambda_lf_requirement(v));
    }
    if let Some(interval) = f.alpha_interval {
        row(
            "PnP-alphaPGD alpha interval",
            match interval {
                Some((lo, hi)) => format!("({}, {})", num(lo), num(hi)),
                None => "empty (requires lambda*L_f*M < 1)".into(),
            },
        );
    }
    if let Some(t) = f.tau_max_strict {
        row("alphaPGD tau_max (strict)", format!("{} (with safety {})", num(t), num(safety * t)));
    }
    if let Some(t) = f.tau_max_refined {
        row("alphaPGD tau_max (refined)", format!("{} (with safety {})", num(t), num(safety * t)));
    }
    if let Some(v) = f.lambda_lf_max_strict {
        row("alphaPGD at given alpha, tau (strict)", lambda_lf_requirement(v));
    }
    if let Some(v) = f.lambda_lf_max_refined {
        row("alphaPGD at given alpha, tau (refined)", lambda_lf_requirement(v));
    }
    out
}

/// `name:lo:hi:n`, `n ≥ 2` points spaced evenly from `lo` to `hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

pub const SWEEP_PARAMETERS: [&str; 7] = ["lf", "lg", "gamma", "m", "lambda", "alpha", "tau"];

impl FromStr for Sweep {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Usage(format!("sweep must look like name:lo:hi:n, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [name, lo, hi, n] = parts[..] else { return Err(bad()) };
        if !SWEEP_PARAMETERS.contains(&name) {
            return Err(CliError::Usage(format!(
                "cannot sweep {name:?} (expected one of {})",
                SWEEP_PARAMETERS.join(", ")
            )));
        }
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let n: usize = n.parse().map_err(|_| bad())?;
        if n < 2 || !lo.is_finite() || !hi.is_finite() {
            return Err(bad());
        }
        Ok(Self { name: name.to_string(), lo, hi, n })
    }
}

impl Sweep {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
    }

    fn apply(&self, base: &BoundsInput, v: f64) -> BoundsInput {
        let mut b = *base;
        match self.name.as_str() {
            "lf" => b.lf = v,
            "lg" => b.lg = v,
            "gamma" => b.gamma = v,
            "m" => b.m = Some(v),
            "lambda" => b.lambda = Some(v),
            "alpha" => b.alpha = Some(v),
            _ => b.tau = Some(v),
        }
        b
    }
}

pub const SWEEP_HEADER: [&str; 12] = [
    "lg_eff",
    "m",
    "lambda_max_pnp_pgd",
    "lambda_max_pnp_alpha",
    "tau_max_pgd",
    "alpha_lo",
    "alpha_hi",
    "tau_max_strict",
    "tau_max_refined",
    "lambda_lf_max_pgd",
    "lambda_lf_max_strict",
    "lambda_lf_max_refined",
];

/// CSV with the swept parameter first, then [`SWEEP_HEADER`].
pub fn sweep_csv(base: &BoundsInput, sweep: &Sweep) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Malformed(format!("writing sweep: {e}"));
    let mut header = vec![sweep.name.as_str()];
    header.extend(SWEEP_HEADER);
    w.write_record(&header).map_err(csv_err)?;
    for v in sweep.values() {
        let f = sweep.apply(base, v).evaluate()?;
        let cell = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
        let interval = f.alpha_interval.flatten();
        w.write_record([
            format_f64(v),
            format_f64(f.lg_eff),
            format_f64(f.m),
            format_f64(f.lambda_max_pnp_pgd),
            format_f64(f.lambda_max_pnp_alpha),
            cell(f.tau_max_pgd),
            cell(interval.map(|i| i.0)),
            cell(interval.map(|i| i.1)),
            cell(f.tau_max_strict),
            cell(f.tau_max_refined),
            cell(f.lambda_lf_max_pgd),
            cell(f.lambda_lf_max_strict),
            cell(f.lambda_lf_max_refined),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Malformed(format!("writing sweep: {e}")))?;
    Ok(String::from_utf8(bytes).expect("ASCII output"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_denoiser_limits() {
        let f = BoundsInput::default().evaluate().unwrap();
        assert!((f.lambda_max_pnp_pgd - 1.5).abs() < 1e-15);
        assert!((f.lambda_max_pnp_alpha - 2.0).abs() < 1e-15);
    }

    #[test]
    fn relaxed_denoiser_limits() {
        let f = BoundsInput { lg: 0.99, gamma: 0.25, ..Default::default() }.evaluate().unwrap();
        assert!((f.m - 0.2475 / 1.2475).abs() < 1e-15);
        assert!((f.lambda_max_pnp_alpha - 1.2475 / 0.2475).abs() < 1e-12);
    }

    #[test]
    fn unit_step_without_convexity_gap() {
        let input = BoundsInput { alpha: Some(1.0), tau: Some(1.0), m: Some(0.0), ..Default::default() };
        let f = input.evaluate().unwrap();
        assert_eq!(f.lambda_lf_max_strict, Some(1.0));
        assert_eq!(f.lambda_lf_max_refined, Some(1.0));
        assert!(render_table(&input, &f, 0.99).contains("requires lambda*L_f < 1.000000"));
    }

    #[test]
    fn sweep_rows() {
        let sweep: Sweep = "gamma:0.25:1:4".parse().unwrap();
        let text = sweep_csv(&BoundsInput { lambda: Some(1.0), ..Default::default() }, &sweep).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("gamma,lg_eff,m,"));
        assert!(lines[4].starts_with("1,1,0.5,1.5,2,"));
        assert!("gamma:0:1".parse::<Sweep>().is_err());
        assert!("rho:0:1:3".parse::<Sweep>().is_err());
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        assert!(BoundsInput { lg: 1.5, ..Default::default() }.evaluate().is_err());
        assert!(BoundsInput { alpha: Some(0.0), ..Default::default() }.evaluate().is_err());
    }
}
