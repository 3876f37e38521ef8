//! Empirical constants in the growth-rate inequalities for the running maximum.

use crate::error::{Error, Result};
use crate::solver::interpolate;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthRow {
    pub t_start: f64,
    pub lag: f64,
    /// `(M(T+t) - M(T)) / M(T+t)^q`.
    pub lhs: f64,
    pub order: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    /// Largest ratio, the empirical constant.
    pub sup: f64,
}

fn table(
    times: &[f64],
    maxima: &[f64],
    q: f64,
    starts: usize,
    lags: &[f64],
    order: impl Fn(f64) -> f64,
) -> Result<GrowthTable> {
    if times.len() != maxima.len() || times.len() < 2 {
        return Err(Error::InvalidData("trace too short".into()));
    }
    if lags.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::PreconditionViolated("lags must lie in (0, 1)".into()));
    }
    let t_last = *times.last().unwrap();
    let mut rows = Vec::new();
    for &lag in lags {
        if lag >= t_last {
            continue;
        }
        for k in 0..starts {
            let t0 = (t_last - lag) * k as f64 / starts.max(1) as f64;
            let (Some(a), Some(b)) = (interpolate(times, maxima, t0), interpolate(times, maxima, t0 + lag))
            else {
                continue;
            };
            let lhs = (b - a) / b.powf(q);
            let ord = order(lag);
            rows.push(GrowthRow {
                t_start: t0,
                lag,
                lhs,
                order: ord,
                ratio: lhs / ord,
            });
        }
    }
    let sup = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(GrowthTable { rows, sup })
}

/// Ratios `lhs / (|patch|^alpha t^{(1 - (n-1) alpha) / 2})` over `starts` start times and
/// the given lags.
pub fn growth_rate_check(
    times: &[f64],
    maxima: &[f64],
    q: f64,
    patch_area: f64,
    n: usize,
    alpha: f64,
    starts: usize,
    lags: &[f64],
) -> Result<GrowthTable> {
    let top = 1.0 / (n as f64 - 1.0);
    if !(0.0..=top + 1e-12).contains(&alpha) {
        return Err(Error::PreconditionViolated(format!("alpha = {alpha} outside [0, {top}]")));
    }
    let scale = patch_area.powf(alpha);
    let power = 0.5 * (1.0 - (n as f64 - 1.0) * alpha);
    table(times, maxima, q, starts, lags, |t| scale * t.powf(power))
}

/// The critical form: divides by `|patch| ln(1 + 1/|patch|)` in the plane and by
/// `|patch|^{1/(n-1)}` in space.
pub fn critical_growth_check(
    times: &[f64],
    maxima: &[f64],
    q: f64,
    patch_area: f64,
    n: usize,
    starts: usize,
    lags: &[f64],
) -> Result<GrowthTable> {
    let scale = if n == 2 {
        patch_area * (1.0 / patch_area).ln_1p()
    } else {
        patch_area.powf(1.0 / (n as f64 - 1.0))
    };
    table(times, maxima, q, starts, lags, |_| scale)
}
