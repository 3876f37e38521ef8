//! Blow-up time from the tail of a running-maximum trace.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStatus {
    Fitted,
    UnfittedTail,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupEstimate {
    pub t_star: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Exponent in `M ~ c (T* - t)^(-beta)`.
    pub beta: f64,
    /// Coefficient of determination of the log residuals.
    pub r2: f64,
    pub std_err: f64,
    pub status: FitStatus,
    pub tail_points: usize,
}

struct LineFit {
    slope: f64,
    ss: f64,
}

fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    LineFit {
        slope,
        ss,
    }
}

const MIN_TAIL: usize = 5;
const GRID: usize = 240;
const JACKKNIFE_BLOCKS: usize = 10;

/// Blow-up time minimising the profiled log residual, or `None` when the minimum sits on
/// the edge of the search range.
fn profile_fit(ts: &[f64], ys: &[f64]) -> Option<f64> {
    let span = ts[ts.len() - 1] - ts[0];
    let t_end = *ts.last().unwrap();
    let profile = |z: f64| {
        let big_t = t_end + z.exp();
        let xs: Vec<f64> = ts.iter().map(|t| (big_t - t).ln()).collect();
        line_fit(&xs, ys).ss
    };
    let (z_lo, z_hi) = ((span * 1e-9).ln(), (span * 1e2).ln());
    let zs: Vec<f64> = (0..GRID)
        .map(|i| z_lo + (z_hi - z_lo) * i as f64 / (GRID - 1) as f64)
        .collect();
    let vals: Vec<f64> = zs.iter().map(|z| profile(*z)).collect();
    let best = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if best == 0 || best == GRID - 1 {
        return None;
    }
    // golden-section refinement inside the neighbouring cells
    let (mut a, mut b) = (zs[best - 1], zs[best + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (profile(c), profile(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = profile(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = profile(d);
        }
    }
    let z = 0.5 * (a + b);
    Some(t_end + z.exp())
}

/// Fit `log M = a - beta log(T* - t)` over the tail `M >= m_stop / 100`.
///
/// `T*` is found by profiling out `a` and `beta` (linear least squares for each trial
/// `T*`). The statistical error is the larger of the Gauss-Newton value for all three
/// parameters and a block jackknife over the tail; it is combined in quadrature with the
/// shift caused by moving the tail window down by a factor of two.
pub fn estimate_blowup_time(times: &[f64], maxima: &[f64], m_stop: f64) -> Result<BlowupEstimate> {
    if times.len() != maxima.len() || times.is_empty() {
        return Err(Error::InvalidData("trace times and values differ in length".into()));
    }
    let last_m = *maxima.last().unwrap();
    if !(last_m >= m_stop) {
        return Err(Error::PreconditionViolated(format!(
            "trace stops at M = {last_m} below the threshold {m_stop}"
        )));
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (t, m) in times.iter().zip(maxima) {
        if *m >= m_stop / 100.0 && *m > 0.0 && ts.last().is_none_or(|l| t > l) {
            ts.push(*t);
            ys.push(m.ln());
        }
    }
    let t_last = *times.last().unwrap();
    let unfitted = |tail: usize| BlowupEstimate {
        t_star: t_last,
        bracket_lo: t_last,
        bracket_hi: t_last,
        beta: f64::NAN,
        r2: f64::NAN,
        std_err: f64::NAN,
        status: FitStatus::UnfittedTail,
        tail_points: tail,
    };
    let span = ts.last().unwrap_or(&0.0) - ts.first().unwrap_or(&0.0);
    if ts.len() < MIN_TAIL || !(span > 0.0) {
        return Ok(unfitted(ts.len()));
    }
    let Some(t_star) = profile_fit(&ts, &ys) else {
        return Ok(unfitted(ts.len()));
    };
    let xs: Vec<f64> = ts.iter().map(|t| (t_star - t).ln()).collect();
    let fit = line_fit(&xs, &ys);
    let beta = -fit.slope;
    let m = ts.len();
    let my = ys.iter().sum::<f64>() / m as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - fit.ss / ss_tot } else { 1.0 };

    let mut jtj = Matrix3::<f64>::zeros();
    for t in &ts {
        let gap = t_star - t;
        let row = Vector3::new(1.0, -gap.ln(), -beta / gap);
        jtj += row * row.transpose();
    }
    let dof = (m.saturating_sub(3)).max(1) as f64;
    let sigma2 = fit.ss / dof;
    let model_err = jtj
        .try_inverse()
        .map(|inv| (sigma2 * inv[(2, 2)]).max(0.0).sqrt())
        .unwrap_or(f64::NAN);
    let statistical = model_err.max(block_jackknife(&ts, &ys, t_star));
    let std_err = statistical.hypot(truncation_shift(times, maxima, m_stop, t_star));
    Ok(BlowupEstimate {
        t_star,
        bracket_lo: t_last.min(t_star),
        bracket_hi: t_star + if std_err.is_finite() { std_err } else { 0.0 },
        beta,
        r2,
        std_err,
        status: FitStatus::Fitted,
        tail_points: m,
    })
}

/// Shift of the estimate when the tail window `[m_stop/100, m_stop]` is replaced by
/// `[m_stop/200, m_stop/2]`.
fn truncation_shift(times: &[f64], maxima: &[f64], m_stop: f64, full: f64) -> f64 {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (t, m) in times.iter().zip(maxima) {
        if *m >= m_stop / 200.0 && *m <= m_stop / 2.0 && *m > 0.0 && ts.last().is_none_or(|l| t > l) {
            ts.push(*t);
            ys.push(m.ln());
        }
    }
    if ts.len() < MIN_TAIL || !(ts[ts.len() - 1] > ts[0]) {
        return 0.0;
    }
    profile_fit(&ts, &ys).map_or(0.0, |t| (t - full).abs())
}

/// Delete-one-block jackknife over contiguous blocks of the tail. Residuals along a
/// trace are strongly correlated, so this is the more honest spread when the power law
/// is only approximately right.
fn block_jackknife(ts: &[f64], ys: &[f64], full: f64) -> f64 {
    let m = ts.len();
    let blocks = JACKKNIFE_BLOCKS.min(m / 3);
    if blocks < 2 || m - m.div_ceil(blocks) < MIN_TAIL {
        return 0.0;
    }
    let mut est = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let (lo, hi) = (b * m / blocks, (b + 1) * m / blocks);
        let kt: Vec<f64> = ts[..lo].iter().chain(&ts[hi..]).copied().collect();
        let ky: Vec<f64> = ys[..lo].iter().chain(&ys[hi..]).copied().collect();
        if let Some(t) = profile_fit(&kt, &ky) {
            est.push(t);
        }
    }
    if est.len() < 2 {
        return 0.0;
    }
    let g = est.len() as f64;
    let mean = est.iter().sum::<f64>() / g;
    let var = (g - 1.0) / g * est.iter().map(|t| (t - mean).powi(2)).sum::<f64>();
    var.sqrt().max((mean - full).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64, end: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
        let ts: Vec<f64> = (0..=count).map(|i| end * i as f64 / count as f64).collect();
        let ms = ts.iter().map(|t| f(*t)).collect();
        (ts, ms)
    }

    #[test]
    fn inverse_linear_profile() {
        let (ts, ms) = synthetic(|t| 1.0 / (1.0 - t), 0.999, 20_000);
        let e = estimate_blowup_time(&ts, &ms, 1000.0 - 1e-9).unwrap();
        assert_eq!(e.status, FitStatus::Fitted);
        assert!((e.t_star - 1.0).abs() < 1e-3);
        assert!((e.beta - 1.0).abs() < 1e-2);
        assert!(e.bracket_lo <= e.t_star && e.t_star <= e.bracket_hi);
        assert!(e.r2 > 0.999);
    }

    #[test]
    fn square_root_profile() {
        let (ts, ms) = synthetic(|t| 2.0 / (0.5 - t).sqrt(), 0.5 - 4e-6, 50_000);
        let last = *ms.last().unwrap();
        let e = estimate_blowup_time(&ts, &ms, last).unwrap();
        assert!((e.t_star - 0.5).abs() < 1e-4);
        assert!((e.beta - 0.5).abs() < 1e-2);
    }

    #[test]
    fn short_tail_is_unfitted() {
        let ts = [0.0, 0.1, 0.2];
        let ms = [1.0, 2.0, 100.0];
        let e = estimate_blowup_time(&ts, &ms, 100.0).unwrap();
        assert_eq!(e.status, FitStatus::UnfittedTail);
        assert_eq!(e.bracket_lo, 0.2);
    }

    #[test]
    fn below_threshold_is_rejected() {
        assert!(estimate_blowup_time(&[0.0, 1.0], &[1.0, 2.0], 10.0).is_err());
    }
}
