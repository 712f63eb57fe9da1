//! Brute-force one-dimensional proximal map, used as an independent check
//! that a denoiser really is the prox of its induced potential.

use alloc::format;

use crate::error::{Error, Result};
use crate::math;

pub const DEFAULT_RADIUS: f64 = 10.0;
pub const DEFAULT_GRID: usize = 100_000;
/// Width at which golden-section refinement stops.
pub const REFINE_WIDTH: f64 = 1e-10;

/// `argmin_z φ(z) + ½(z − x)²` over `[x − radius, x + radius]`.
///
/// Scans `grid + 1` equispaced points, then refines the bracket around the
/// best grid point by golden-section search. An argmin on either end of the
/// window is reported as [`Error::BoundaryArgmin`].
pub fn prox_oracle_1d(phi: impl Fn(f64) -> f64, x: f64, radius: f64, grid: usize) -> Result<f64> {
    if grid < 1000 {
        return Err(Error::invalid(format!("prox oracle grid must be ≥ 1000, got {grid}")));
    }
    if !(radius > 0.0 && radius.is_finite() && x.is_finite()) {
        return Err(Error::invalid("prox oracle needs a positive radius and finite x"));
    }
    let objective = |z: f64| -> Result<f64> {
        let v = phi(z) + 0.5 * (z - x) * (z - x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("prox objective at z = {z}")))
        }
    };
    let lo = x - radius;
    let step = 2.0 * radius / grid as f64;
    let mut best = (0usize, objective(lo)?);
    for i in 1..=grid {
        let v = objective(lo + step * i as f64)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    if best.0 == 0 || best.0 == grid {
        return Err(Error::BoundaryArgmin { radius });
    }
    let center = lo + step * best.0 as f64;
    golden_section(&objective, center - step, center + step)
}

fn golden_section(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let ratio = 0.5 * (math::sqrt(5.0) - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > REFINE_WIDTH {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::{GradientStepDenoiser, Potential};

    #[test]
    fn quadratic_and_zero() {
        let z = prox_oracle_1d(|z| 0.5 * z * z, 1.0, DEFAULT_RADIUS, 10_000).unwrap();
        assert!((z - 0.5).abs() < 1e-8);
        let z = prox_oracle_1d(|_| 0.0, -2.5, DEFAULT_RADIUS, 1000).unwrap();
        assert!((z + 2.5).abs() < 1e-8);
    }

    #[test]
    fn cosine_prox_equals_denoiser() {
        let d = GradientStepDenoiser::new(Potential::cosine(0.6, 0.1).unwrap());
        let phi = d.induced();
        let z =
            prox_oracle_1d(|t| phi.value_scalar(t).unwrap_or(f64::NAN), 2.0, DEFAULT_RADIUS, 10_000).unwrap();
        assert!((z - d.apply_scalar(2.0)).abs() < 1e-4);
    }

    #[test]
    fn boundary_and_bad_inputs() {
        // Linear φ pushes the minimizer to x − 100, outside a radius-1 window.
        let err = prox_oracle_1d(|z| 100.0 * z, 0.0, 1.0, 1000).unwrap_err();
        assert!(matches!(err, Error::BoundaryArgmin { .. }));
        assert!(prox_oracle_1d(|z| z, 0.0, 1.0, 10).is_err());
        assert!(matches!(prox_oracle_1d(|_| f64::NAN, 0.0, 1.0, 1000), Err(Error::NonFinite(_))));
    }
}
