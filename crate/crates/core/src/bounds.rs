//! Step-size and regularization-weight limits under which PGD and αPGD
//! (plain and plug-and-play) are guaranteed to decrease their objective.
//!
//! All limits are open conditions. A configuration is accepted when it lies
//! within `safety × limit` (default safety 0.99).

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::denoiser::weak_convexity_from;
use crate::error::{Error, Result};
use crate::math::le_rel;

pub const DEFAULT_SAFETY: f64 = 0.99;

/// Which αPGD step bound is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundPolicy {
    /// `τ < min(1/(αλL_f), α/M)`.
    #[default]
    Strict,
    /// `τ < min(1/(αλL_f), 2α/(α³λL_f + (2−α)M))`.
    Refined,
    /// No validation; descent guarantees are void.
    Override,
}

impl BoundPolicy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Strict => "strict",
            Self::Refined => "refined",
            Self::Override => "override",
        }
    }
}

impl FromStr for BoundPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "refined" => Ok(Self::Refined),
            "override" => Ok(Self::Override),
            _ => Err(Error::invalid(format!("unknown bound policy '{s}'"))),
        }
    }
}

impl fmt::Display for BoundPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of a validator. `limit` is the unscaled bound (`τ_max` or
/// `λ_max`).
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Ok { limit: f64 },
    Violation { limit: f64, detail: String },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok { .. })
    }

    pub fn limit(&self) -> f64 {
        match self {
            Verdict::Ok { limit } | Verdict::Violation { limit, .. } => *limit,
        }
    }

    pub fn into_result(self) -> Result<f64> {
        match self {
            Verdict::Ok { limit } => Ok(limit),
            Verdict::Violation { detail, .. } => Err(Error::BoundViolation(detail)),
        }
    }
}

fn check_safety(safety: f64) -> Result<()> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::invalid(format!("safety factor must lie in (0, 1], got {safety}")));
    }
    Ok(())
}

fn judge(value: f64, limit: f64, safety: f64, detail: impl FnOnce() -> String) -> Verdict {
    if value > 0.0 && le_rel(value, safety * limit) {
        Verdict::Ok { limit }
    } else {
        Verdict::Violation { limit, detail: detail() }
    }
}

/// `2 / (λL_f + M)`.
pub fn pgd_step_limit(lambda_lf: f64, m: f64) -> f64 {
    let s = lambda_lf + m;
    if s == 0.0 {
        f64::INFINITY
    } else {
        2.0 / s
    }
}

/// PGD descent condition `τ < 2/(λL_f + M)`.
pub fn validate_pgd(lambda: f64, lf: f64, m: f64, tau: f64, safety: f64) -> Result<Verdict> {
    check_safety(safety)?;
    let limit = pgd_step_limit(lambda * lf, m);
    Ok(judge(tau, limit, safety, || {
        format!("tau = {tau} exceeds {safety} * 2/(lambda*L_f + M) = {} (tau_max = {limit})", safety * limit)
    }))
}

/// `λ_max = (1/L_f)(ℓ + 2)/(ℓ + 1)` for PnP-PGD with effective denoiser
/// constant `ℓ = γL_g`.
pub fn pnp_pgd_lambda_limit(lf: f64, lg_eff: f64) -> f64 {
    (lg_eff + 2.0) / ((lg_eff + 1.0) * lf)
}

/// PnP-PGD condition `λL_f < (ℓ + 2)/(ℓ + 1)`.
pub fn validate_pnp_pgd(lambda: f64, lf: f64, lg_eff: f64, safety: f64) -> Result<Verdict> {
    check_safety(safety)?;
    if !(0.0..1.0).contains(&lg_eff) {
        return Err(Error::invalid(format!("effective L_g must lie in [0, 1), got {lg_eff}")));
    }
    let limit = pnp_pgd_lambda_limit(lf, lg_eff);
    Ok(judge(lambda, limit, safety, || {
        format!(
            "lambda = {lambda} exceeds {safety} * lambda_max = {} where lambda*L_f < (L_g+2)/(L_g+1) gives lambda_max = {limit}",
            safety * limit
        )
    }))
}

/// The αPGD step bound for the given policy; `+∞` where a term has no
/// constraint (`M = 0` or `λL_f = 0`).
pub fn alpha_pgd_step_limit(lambda_lf: f64, m: f64, alpha: f64, policy: BoundPolicy) -> f64 {
    let gradient_term = if lambda_lf == 0.0 { f64::INFINITY } else { 1.0 / (alpha * lambda_lf) };
    let convexity_term = match policy {
        BoundPolicy::Strict | BoundPolicy::Override => {
            if m == 0.0 {
                f64::INFINITY
            } else {
                alpha / m
            }
        }
        BoundPolicy::Refined => {
            let denom = alpha * alpha * alpha * lambda_lf + (2.0 - alpha) * m;
            if denom == 0.0 {
                f64::INFINITY
            } else {
                2.0 * alpha / denom
            }
        }
    };
    gradient_term.min(convexity_term)
}

pub fn validate_alpha_pgd(
    lambda: f64,
    lf: f64,
    m: f64,
    alpha: f64,
    tau: f64,
    policy: BoundPolicy,
    safety: f64,
) -> Result<Verdict> {
    check_safety(safety)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let limit = alpha_pgd_step_limit(lambda * lf, m, alpha, policy);
    if policy == BoundPolicy::Override {
        return Ok(Verdict::Ok { limit });
    }
    Ok(judge(tau, limit, safety, || {
        let formula = match policy {
            BoundPolicy::Refined => "min(1/(alpha*lambda*L_f), 2*alpha/(alpha^3*lambda*L_f + (2-alpha)*M))",
            _ => "min(1/(alpha*lambda*L_f), alpha/M)",
        };
        format!("tau = {tau} exceeds {safety} * {formula} = {} (tau_max = {limit})", safety * limit)
    }))
}

/// `λ_max = 1/(L_f M)` for PnP-αPGD (`+∞` when `M = 0`).
pub fn pnp_alpha_lambda_limit(lf: f64, m: f64) -> f64 {
    if m == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (lf * m)
    }
}

/// Requires `λL_f M < 1`, the condition for a nonempty `α` interval.
pub fn check_pnp_alpha_feasible(lambda: f64, lf: f64, m: f64) -> Result<()> {
    let product = lambda * lf * m;
    if product < 1.0 {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "lambda*L_f*M = {product} violates lambda*L_f*M < 1: no alpha with M < alpha < 1/(lambda*L_f)"
        )))
    }
}

/// Open interval `(M, 1/(λL_f))` of admissible `α` for PnP-αPGD (upper end
/// capped at 1); `None` when empty.
pub fn pnp_alpha_interval(lambda_lf: f64, m: f64) -> Option<(f64, f64)> {
    let hi = if lambda_lf == 0.0 { 1.0 } else { (1.0 / lambda_lf).min(1.0) };
    (m < hi).then_some((m, hi))
}

/// Coefficients of the αPGD descent inequality
/// `Λ_k − Λ_{k+1} ≥ (c − δ)‖y_{k+1} − y_k‖²` with `Λ_k = F(y_k) + δ‖y_k − y_{k−1}‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConstants {
    /// Weight `δ` of the memory term.
    pub delta: f64,
    /// Coefficient `c` of `‖y_{k+1} − y_k‖²`.
    pub descent: f64,
}

impl LyapunovConstants {
    /// `δ = (α/2τ)(1 − 1/α)²`, `c = (1/α)(1/(2τ) − M(2 − α)/2)`.
    pub fn strict(alpha: f64, tau: f64, m: f64) -> Self {
        let r = 1.0 - 1.0 / alpha;
        Self {
            delta: alpha / (2.0 * tau) * r * r,
            descent: (1.0 / (2.0 * tau) - m * (2.0 - alpha) / 2.0) / alpha,
        }
    }

    /// `δ = (1−α)/(2ατ)·(1 − α²τλL_f)`,
    /// `c = (1 − α²τλL_f + α − τM(2−α))/(2ατ)`.
    pub fn refined(alpha: f64, tau: f64, lambda_lf: f64, m: f64) -> Self {
        let a2 = alpha * alpha * tau * lambda_lf;
        Self {
            delta: (1.0 - alpha) / (2.0 * alpha * tau) * (1.0 - a2),
            descent: (1.0 - a2 + alpha - tau * m * (2.0 - alpha)) / (2.0 * alpha * tau),
        }
    }

    pub fn for_policy(policy: BoundPolicy, alpha: f64, tau: f64, lambda_lf: f64, m: f64) -> Self {
        match policy {
            BoundPolicy::Refined => Self::refined(alpha, tau, lambda_lf, m),
            _ => Self::strict(alpha, tau, m),
        }
    }

    /// `c − δ`, positive exactly when the step bound holds.
    pub fn margin(&self) -> f64 {
        self.descent - self.delta
    }
}

/// `1/τ − (M + λL_f)/2`, the PGD per-iteration decrease coefficient.
pub fn pgd_decrease_coefficient(tau: f64, lambda_lf: f64, m: f64) -> f64 {
    1.0 / tau - 0.5 * (m + lambda_lf)
}

/// One line of the feasibility table for a denoiser with gradient constant
/// `L_g` relaxed by `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpLimits {
    pub lg_eff: f64,
    pub weak_convexity: f64,
    pub lambda_max_pgd: f64,
    pub lambda_max_alpha: f64,
}

impl PnpLimits {
    pub fn new(lf: f64, lg: f64, gamma: f64) -> Self {
        let lg_eff = gamma * lg;
        let m = weak_convexity_from(lg_eff);
        Self {
            lg_eff,
            weak_convexity: m,
            lambda_max_pgd: pnp_pgd_lambda_limit(lf, lg_eff),
            lambda_max_alpha: pnp_alpha_lambda_limit(lf, m),
        }
    }
}
