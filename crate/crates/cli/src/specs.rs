//! Spec strings for denoisers, kernels, regularizers and image sources.
//!
//! Every type prints back to a canonical string that parses to the same
//! value, so resolved settings can be written to a manifest and read again.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use wcprox_core::denoiser::{GradientStepDenoiser, Potential};
use wcprox_core::kernel::{make_kernel, ConvKernel, KernelSpec};
use wcprox_core::synthetic::SyntheticImage;

use crate::error::{CliError, Result};
use crate::formats;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Splits `kind:rest` (rest may be empty).
fn split_kind(s: &str) -> (&str, &str) {
    match s.split_once(':') {
        Some((k, r)) => (k.trim(), r.trim()),
        None => (s.trim(), ""),
    }
}

fn parse_number(key: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| usage(format!("{key}: expected a number, got {value:?}")))
}

/// `k=v,k=v` into a map, rejecting keys outside `allowed`.
fn parse_params(spec: &str, body: &str, allowed: &[&str]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) =
            part.split_once('=').ok_or_else(|| usage(format!("{spec}: expected key=value, got {part:?}")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(usage(format!("{spec}: unknown parameter {k:?} (allowed: {})", allowed.join(", "))));
        }
        out.insert(k.to_string(), parse_number(k, v)?);
    }
    Ok(out)
}

/// `quadratic:Lg=0.5,c=0` or `cosine:a=0.6,eps=0.1`, each with an optional
/// `gamma=` relaxation (default 1) and a `sigma=` label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiserSpec {
    pub potential: Potential,
    pub gamma: f64,
    /// Noise-level label; not used numerically.
    pub sigma: Option<f64>,
}

impl DenoiserSpec {
    pub fn build(&self) -> Result<GradientStepDenoiser> {
        Ok(GradientStepDenoiser::relaxed(self.potential, self.gamma)?)
    }
}

impl Default for DenoiserSpec {
    fn default() -> Self {
        Self { potential: Potential::cosine(0.6, 0.1).expect("valid"), gamma: 1.0, sigma: None }
    }
}

impl FromStr for DenoiserSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = split_kind(s);
        let (potential, p) = match kind {
            "quadratic" => {
                let p = parse_params(s, body, &["Lg", "c", "gamma", "sigma"])?;
                let lg = *p.get("Lg").ok_or_else(|| usage(format!("{s}: quadratic needs Lg=")))?;
                (Potential::quadratic(lg, p.get("c").copied().unwrap_or(0.0))?, p)
            }
            "cosine" => {
                let p = parse_params(s, body, &["a", "eps", "gamma", "sigma"])?;
                let a = *p.get("a").ok_or_else(|| usage(format!("{s}: cosine needs a=")))?;
                let eps = *p.get("eps").ok_or_else(|| usage(format!("{s}: cosine needs eps=")))?;
                (Potential::cosine(a, eps)?, p)
            }
            other => return Err(usage(format!("unknown denoiser {other:?} (expected quadratic or cosine)"))),
        };
        let spec =
            Self { potential, gamma: p.get("gamma").copied().unwrap_or(1.0), sigma: p.get("sigma").copied() };
        spec.build()?;
        Ok(spec)
    }
}

impl fmt::Display for DenoiserSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.potential {
            Potential::Quadratic { lipschitz, center } => write!(f, "quadratic:Lg={lipschitz},c={center}")?,
            Potential::Cosine { amplitude, eps } => write!(f, "cosine:a={amplitude},eps={eps}")?,
        }
        write!(f, ",gamma={}", self.gamma)?;
        if let Some(s) = self.sigma {
            write!(f, ",sigma={s}")?;
        }
        Ok(())
    }
}

/// `gaussian:SIGMA,SIZE`, `uniform:SIZE` or `file:PATH`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSource {
    Builtin(KernelSpec),
    File(PathBuf),
}

impl KernelSource {
    pub fn load(&self) -> Result<ConvKernel> {
        match self {
            Self::Builtin(spec) => Ok(make_kernel(*spec)?),
            Self::File(path) => formats::load_kernel(path),
        }
    }
}

impl Default for KernelSource {
    fn default() -> Self {
        Self::Builtin(KernelSpec::Gaussian { sigma: 1.6, size: 25 })
    }
}

impl FromStr for KernelSource {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = split_kind(s);
        let size = |v: &str| -> Result<usize> {
            v.trim().parse().map_err(|_| usage(format!("{s}: kernel size must be a positive integer")))
        };
        let spec = match kind {
            "file" if !body.is_empty() => return Ok(Self::File(PathBuf::from(body))),
            "gaussian" => {
                let (sigma, n) = body
                    .split_once(',')
                    .ok_or_else(|| usage(format!("{s}: expected gaussian:SIGMA,SIZE")))?;
                KernelSpec::Gaussian { sigma: parse_number("sigma", sigma)?, size: size(n)? }
            }
            "uniform" => KernelSpec::Uniform { size: size(body)? },
            _ => {
                return Err(usage(format!(
                    "unknown kernel {s:?} (expected gaussian:S,N, uniform:N or file:PATH)"
                )))
            }
        };
        make_kernel(spec)?;
        Ok(Self::Builtin(spec))
    }
}

impl fmt::Display for KernelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Builtin(KernelSpec::Gaussian { sigma, size }) => write!(f, "gaussian:{sigma},{size}"),
            Self::Builtin(KernelSpec::Uniform { size }) => write!(f, "uniform:{size}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Regularizer of the non plug-and-play solvers: `zero`, `quadratic:c=W`
/// (`φ = (W/2)‖x‖²`) or `induced` (the denoiser's potential, `τ = 1` only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizerSpec {
    Zero,
    Quadratic(f64),
    Induced,
}

impl FromStr for RegularizerSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = split_kind(s);
        match kind {
            "zero" if body.is_empty() => Ok(Self::Zero),
            "induced" if body.is_empty() => Ok(Self::Induced),
            "quadratic" => {
                let p = parse_params(s, body, &["c"])?;
                Ok(Self::Quadratic(*p.get("c").ok_or_else(|| usage(format!("{s}: quadratic needs c=")))?))
            }
            _ => Err(usage(format!("unknown regularizer {s:?} (expected zero, quadratic:c=W or induced)"))),
        }
    }
}

impl fmt::Display for RegularizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("zero"),
            Self::Quadratic(c) => write!(f, "quadratic:c={c}"),
            Self::Induced => f.write_str("induced"),
        }
    }
}

/// A bundled synthetic image by name, or a tensor/PGM path.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    Synthetic(SyntheticImage),
    File(PathBuf),
}

impl FromStr for ImageSource {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.strip_prefix("synthetic:").unwrap_or(s);
        match name.parse::<SyntheticImage>() {
            Ok(img) => Ok(Self::Synthetic(img)),
            Err(_) if s.starts_with("synthetic:") => Err(usage(format!(
                "unknown synthetic image {name:?} (expected checkerboard, bump or cartoon)"
            ))),
            Err(_) => Ok(Self::File(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for ImageSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Synthetic(img) => write!(f, "synthetic:{}", img.name()),
            Self::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip<T: FromStr<Err = CliError> + fmt::Display + PartialEq + fmt::Debug>(s: &str) -> T {
        let v: T = s.parse().unwrap();
        assert_eq!(v.to_string().parse::<T>().unwrap(), v);
        v
    }

    #[test]
    fn denoisers() {
        let d: DenoiserSpec = round_trip("quadratic:Lg=0.5,c=0");
        assert_eq!(d.gamma, 1.0);
        assert_eq!(d.build().unwrap().weak_convexity_constant(), 1.0 / 3.0);
        let d: DenoiserSpec = round_trip("cosine:a=0.6,eps=0.1,gamma=0.5,sigma=25");
        assert_eq!(d.gamma, 0.5);
        assert_eq!(d.sigma, Some(25.0));
        assert!("cosine:a=0.6".parse::<DenoiserSpec>().is_err());
        assert!("cosine:a=0.6,eps=0.5".parse::<DenoiserSpec>().is_err());
        assert!("quadratic:Lg=0.5,gamma=2".parse::<DenoiserSpec>().is_err());
        assert!("quadratic:Lg=0.5,foo=1".parse::<DenoiserSpec>().is_err());
        assert!("tv:w=1".parse::<DenoiserSpec>().is_err());
    }

    #[test]
    fn kernels() {
        let k: KernelSource = round_trip("gaussian:1.6,25");
        assert_eq!(k.load().unwrap().height(), 25);
        let k: KernelSource = round_trip("uniform:9");
        assert_eq!(k.load().unwrap().taps()[0], 1.0 / 81.0);
        let _: KernelSource = round_trip("file:/tmp/k.txt");
        assert!("uniform:8".parse::<KernelSource>().is_err());
        assert!("gaussian:1.6".parse::<KernelSource>().is_err());
        assert!("disk:3".parse::<KernelSource>().is_err());
    }

    #[test]
    fn regularizers_and_images() {
        assert_eq!(round_trip::<RegularizerSpec>("quadratic:c=-0.25"), RegularizerSpec::Quadratic(-0.25));
        round_trip::<RegularizerSpec>("zero");
        round_trip::<RegularizerSpec>("induced");
        assert!("zero:1".parse::<RegularizerSpec>().is_err());
        assert_eq!(round_trip::<ImageSource>("cartoon"), ImageSource::Synthetic(SyntheticImage::Cartoon));
        assert_eq!(round_trip::<ImageSource>("photo.pgm"), ImageSource::File("photo.pgm".into()));
        assert!("synthetic:moon".parse::<ImageSource>().is_err());
    }
}
