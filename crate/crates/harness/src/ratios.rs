//! Endpoint ratios: the weak-type quotient and its extrapolated variant.

use anyhow::{ensure, Result};
use lacunary_core::grid::iterated_log;
use lacunary_core::maximal::{lacunary_maximal_with, superlevel, ScaleRange};
use lacunary_core::spherical::ConvolutionBackend;
use lacunary_core::GranularFunction;

/// `α |{Mf > α}| / ∫ |f| Log³(|f|/α)`, given `Mf`; `None` for `f = 0`.
pub fn weak_type_ratio_from(mf: &GranularFunction, f: &GranularFunction, alpha: f64) -> Option<f64> {
    let area = f.lattice().cell_area();
    let denom: f64 = f
        .values()
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs() * iterated_log(3, v.abs() / alpha).expect("nonnegative") * area)
        .sum();
    (denom > 0.0).then(|| alpha * superlevel(mf, alpha).measure() / denom)
}

pub fn weak_type_ratio(
    backend: &dyn ConvolutionBackend,
    f: &GranularFunction,
    alpha: f64,
    range: ScaleRange,
) -> Result<Option<f64>> {
    let mf = lacunary_maximal_with(backend, f, range)?;
    Ok(weak_type_ratio_from(&mf, f, alpha))
}

/// `α |{Mf > α}| / ∫ |f| Log³(|f|/α) Log⁴(|f|/α)^{1+ε}`, given `Mf`.
pub fn extrapolation_ratio_from(mf: &GranularFunction, f: &GranularFunction, alpha: f64, eps: f64) -> Result<Option<f64>> {
    ensure!(eps > 0.0, "extrapolation exponent must be positive, got {eps}");
    let area = f.lattice().cell_area();
    let mut denom = 0.0;
    for &v in f.values().iter().filter(|v| **v != 0.0) {
        let t = v.abs() / alpha;
        denom += v.abs() * iterated_log(3, t)? * iterated_log(4, t)?.powf(1.0 + eps) * area;
    }
    Ok((denom > 0.0).then(|| alpha * superlevel(mf, alpha).measure() / denom))
}

pub fn extrapolation_ratio(
    backend: &dyn ConvolutionBackend,
    f: &GranularFunction,
    alpha: f64,
    eps: f64,
    range: ScaleRange,
) -> Result<Option<f64>> {
    ensure!(eps > 0.0, "extrapolation exponent must be positive, got {eps}");
    let mf = lacunary_maximal_with(backend, f, range)?;
    extrapolation_ratio_from(&mf, f, alpha, eps)
}
