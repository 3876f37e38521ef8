//! Closed-form lifespan bounds and the discrete constructions behind them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants and problem measures entering the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    /// Constant of the general lower bound.
    pub c_general: f64,
    /// Constant of the growth inequality; fixes the critical-regime threshold.
    pub c_star: f64,
    /// Constant of the critical lower bound.
    pub c_critical: f64,
    /// Critical-regime threshold; the bound applies when `Y <= y0 / q`.
    pub y0: f64,
    pub q: f64,
    pub m0: f64,
    pub gamma1_area: f64,
    pub omega_volume: f64,
    pub n: usize,
    pub min_u0: f64,
}

impl BoundsConfig {
    /// Config whose critical constants all derive from `c_star`:
    /// `c_critical = 1/(40 c_star)` and `y0 = 1/(36 c_star)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_star(
        c_general: f64,
        c_star: f64,
        q: f64,
        m0: f64,
        gamma1_area: f64,
        omega_volume: f64,
        n: usize,
        min_u0: f64,
    ) -> Self {
        BoundsConfig {
            c_general,
            c_star,
            c_critical: 1.0 / (40.0 * c_star),
            y0: 1.0 / (36.0 * c_star),
            q,
            m0,
            gamma1_area,
            omega_volume,
            n,
            min_u0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0) {
            return Err(Error::PreconditionViolated(format!("q = {} must exceed 1", self.q)));
        }
        if !(self.m0 > 0.0 && self.gamma1_area > 0.0 && self.omega_volume > 0.0) {
            return Err(Error::PreconditionViolated("measures and M0 must be positive".into()));
        }
        if !(self.c_general > 0.0 && self.c_star > 0.0 && self.c_critical > 0.0 && self.y0 > 0.0) {
            return Err(Error::PreconditionViolated("constants must be positive".into()));
        }
        if self.n < 2 {
            return Err(Error::PreconditionViolated("dimension must be at least 2".into()));
        }
        if !(self.min_u0 >= 0.0) {
            return Err(Error::PreconditionViolated("min u0 must be nonnegative".into()));
        }
        Ok(())
    }

    /// `delta_1 = 2 c_star |Gamma_1|^{1/(n-1)}`.
    pub fn delta1(&self) -> f64 {
        2.0 * self.c_star * self.gamma1_area.powf(1.0 / (self.n as f64 - 1.0))
    }
}

/// `(1/((q-1)|Gamma_1|)) int u0^{1-q}` by cell-weighted quadrature.
pub fn upper_bound(q: f64, gamma1_area: f64, samples: &[f64], cell_measures: &[f64]) -> Result<f64> {
    if !(q > 1.0) || !(gamma1_area > 0.0) {
        return Err(Error::PreconditionViolated("need q > 1 and positive area".into()));
    }
    if samples.len() != cell_measures.len() || samples.is_empty() {
        return Err(Error::InvalidData("samples and cell measures differ in length".into()));
    }
    if samples.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::PreconditionViolated("upper bound requires min u0 > 0".into()));
    }
    let integral: f64 = samples
        .iter()
        .zip(cell_measures)
        .map(|(u, w)| w * u.powf(1.0 - q))
        .sum();
    Ok(integral / ((q - 1.0) * gamma1_area))
}

/// Upper bound for constant data `M0`: `|Omega| M0^{1-q} / ((q-1)|Gamma_1|)`.
pub fn upper_bound_constant(q: f64, m0: f64, gamma1_area: f64, omega_volume: f64) -> Result<f64> {
    upper_bound(q, gamma1_area, &[m0], &[omega_volume])
}

/// `ln(1 + (2 M0)^{-4(q-1)} |Gamma_1|^{-2/(n-1)}) / (q-1)`, the general bound without its constant.
pub fn general_shape(q: f64, m0: f64, gamma1_area: f64, n: usize) -> f64 {
    let lx = -4.0 * (q - 1.0) * (2.0 * m0).ln() - 2.0 / (n as f64 - 1.0) * gamma1_area.ln();
    ln_1p_exp(lx) / (q - 1.0)
}

/// `ln(1 + e^x)` without overflow.
fn ln_1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

pub fn lower_bound_general(cfg: &BoundsConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.c_general * general_shape(cfg.q, cfg.m0, cfg.gamma1_area, cfg.n))
}

/// `M0^{q-1} |Gamma_1|^{1/(n-1)}` for `n >= 3`, `M0^{q-1} |Gamma_1| ln(1 + 1/|Gamma_1|)` for `n = 2`.
pub fn y_quantity(q: f64, m0: f64, gamma1_area: f64, n: usize) -> f64 {
    let size = if n == 2 {
        gamma1_area * (1.0 / gamma1_area).ln_1p()
    } else {
        gamma1_area.powf(1.0 / (n as f64 - 1.0))
    };
    m0.powf(q - 1.0) * size
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriticalBound {
    Applicable { y: f64, time: f64 },
    RegimeNotApplicable { y: f64 },
}

impl CriticalBound {
    pub fn y(&self) -> f64 {
        match *self {
            CriticalBound::Applicable { y, .. } | CriticalBound::RegimeNotApplicable { y } => y,
        }
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            CriticalBound::Applicable { time, .. } => Some(time),
            CriticalBound::RegimeNotApplicable { .. } => None,
        }
    }
}

/// `c_critical / ((q-1) Y)` when `Y <= y0 / q`.
pub fn lower_bound_critical(cfg: &BoundsConfig) -> Result<CriticalBound> {
    cfg.validate()?;
    let y = y_quantity(cfg.q, cfg.m0, cfg.gamma1_area, cfg.n);
    Ok(if y <= cfg.y0 / cfg.q {
        CriticalBound::Applicable {
            y,
            time: critical_formula(cfg.c_critical, cfg.q, y),
        }
    } else {
        CriticalBound::RegimeNotApplicable { y }
    })
}

pub fn critical_formula(c: f64, q: f64, y: f64) -> f64 {
    c / ((q - 1.0) * y)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesBound {
    pub sum: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Number of leading terms with `lambda^k A >= 1`.
fn saturated_terms(lambda: f64, a: f64) -> u64 {
    if a * lambda < 1.0 {
        return 0;
    }
    let mut k = (a.ln() / (1.0 / lambda).ln()).floor().max(0.0) as u64;
    while k > 0 && lambda.powf(k as f64) * a < 1.0 {
        k -= 1;
    }
    while lambda.powf((k + 1) as f64) * a >= 1.0 {
        k += 1;
    }
    k
}

/// `S = sum_{k>=1} min(1, lambda^k A)` exactly, and `B = ln(1 + lambda A) / (2 ln(1/lambda))`.
pub fn series_lower_bound(lambda: f64, a: f64) -> Result<SeriesBound> {
    if !(lambda > 0.0 && lambda < 1.0) || !(a > 0.0) {
        return Err(Error::PreconditionViolated("need 0 < lambda < 1 and A > 0".into()));
    }
    let k = saturated_terms(lambda, a);
    let sum = k as f64 + lambda.powf((k + 1) as f64) * a / (1.0 - lambda);
    let bound = (lambda * a).ln_1p() / (2.0 * (1.0 / lambda).ln());
    Ok(SeriesBound {
        sum,
        bound,
        holds: sum >= bound,
    })
}

/// `(q-1)^{q-1} / q^q`.
pub fn e_q(q: f64) -> f64 {
    ((q - 1.0) * (q - 1.0).ln() - q * q.ln()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RootResult {
    Root { lambda: f64, increment: f64 },
    NoRoot,
}

/// Unique `lambda` in `(m, q m/(q-1)]` with `(lambda - m)/lambda^q = y`, by bisection on
/// the increment `lambda - m`.
pub fn g_root(q: f64, m: f64, y: f64) -> Result<RootResult> {
    if !(q > 1.0 && m > 0.0 && y > 0.0) {
        return Err(Error::PreconditionViolated("need q > 1, m > 0, y > 0".into()));
    }
    let ymax = m.powf(1.0 - q) * e_q(q);
    let dmax = m / (q - 1.0);
    if y > ymax * (1.0 + 4.0 * f64::EPSILON) {
        return Ok(RootResult::NoRoot);
    }
    let g = |d: f64| d / (m + d).powf(q);
    if y >= ymax || g(dmax) <= y {
        return Ok(RootResult::Root {
            lambda: m + dmax,
            increment: dmax,
        });
    }
    let (mut lo, mut hi) = (0.0, dmax);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = if (g(lo) - y).abs() <= (g(hi) - y).abs() { lo } else { hi };
    Ok(RootResult::Root {
        lambda: m + d,
        increment: d,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoublingBound {
    pub sum: f64,
    /// `min(1, C) ln(1 + lambda A) / (8 (q-1) ln 2)`.
    pub closed_form: f64,
    pub holds: bool,
}

/// Sum of the per-stage time lower bounds `min{1, C (2^k M0)^{-4(q-1)} |Gamma_1|^{-2/(n-1)}}`
/// over the doubling stages `M_k = 2^k M0`, compared with its closed-form minorant.
pub fn doubling_schedule(cfg: &BoundsConfig) -> Result<DoublingBound> {
    cfg.validate()?;
    let lambda = 2f64.powf(-4.0 * (cfg.q - 1.0));
    let a = cfg.m0.powf(-4.0 * (cfg.q - 1.0)) * cfg.gamma1_area.powf(-2.0 / (cfg.n as f64 - 1.0));
    let sum = series_lower_bound(lambda, cfg.c_general * a)?.sum;
    let closed_form = cfg.c_general.min(1.0) * (lambda * a).ln_1p() / (2.0 * (1.0 / lambda).ln());
    Ok(DoublingBound {
        sum,
        closed_form,
        holds: sum >= closed_form,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleResult {
    /// `M_0, M_1, ..., M_L`.
    pub levels: Vec<f64>,
    /// `x_k = M_k^{q-1} delta_1` for the same indices.
    pub x: Vec<f64>,
    pub steps: usize,
    /// Right side of the step-count bound.
    pub step_bound: f64,
}

/// Iterates `(M_k - M_{k-1}) / M_k^q = delta_1` while `M_{k-1}^{q-1} delta_1 <= E_q`.
pub fn critical_schedule(q: f64, m0: f64, delta1: f64) -> Result<ScheduleResult> {
    if !(q > 1.0 && m0 > 0.0 && delta1 > 0.0) {
        return Err(Error::PreconditionViolated("need q > 1, M0 > 0, delta_1 > 0".into()));
    }
    let eq = e_q(q);
    if m0.powf(q - 1.0) * delta1 > eq {
        return Err(Error::ScheduleEmpty);
    }
    let mut levels = vec![m0];
    let mut x = vec![m0.powf(q - 1.0) * delta1];
    const CAP: usize = 50_000_000;
    while *x.last().unwrap() <= eq {
        let prev = *levels.last().unwrap();
        match g_root(q, prev, delta1)? {
            RootResult::Root { lambda, .. } => {
                levels.push(lambda);
                x.push(lambda.powf(q - 1.0) * delta1);
            }
            RootResult::NoRoot => break,
        }
        if levels.len() > CAP {
            return Err(Error::PreconditionViolated("schedule did not terminate".into()));
        }
    }
    let steps = levels.len() - 1;
    let step_bound = (1.0 / (m0.powf(q - 1.0) * delta1) - 9.0 * q) / (10.0 * (q - 1.0));
    Ok(ScheduleResult {
        levels,
        x,
        steps,
        step_bound,
    })
}

/// Worst relative residual of `x_{k-1} = x_k (1 - x_k)^{q-1}` along a schedule.
pub fn recurrence_residual(s: &ScheduleResult, q: f64) -> f64 {
    s.x.windows(2)
        .map(|w| {
            let pred = w[1] * (1.0 - w[1]).powf(q - 1.0);
            ((pred - w[0]) / w[0]).abs()
        })
        .fold(0.0, f64::max)
}

/// One row of a bounds report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsReport {
    pub q: f64,
    pub m0: f64,
    pub gamma1_area: f64,
    pub n: usize,
    pub upper: Option<f64>,
    pub lower_general: f64,
    pub critical: CriticalBound,
    pub c_used: f64,
    pub c_star_used: f64,
    pub y0_used: f64,
}

pub fn bounds_report(cfg: &BoundsConfig) -> Result<BoundsReport> {
    cfg.validate()?;
    let upper = if cfg.min_u0 > 0.0 && cfg.min_u0 == cfg.m0 {
        Some(upper_bound_constant(cfg.q, cfg.m0, cfg.gamma1_area, cfg.omega_volume)?)
    } else {
        None
    };
    Ok(BoundsReport {
        q: cfg.q,
        m0: cfg.m0,
        gamma1_area: cfg.gamma1_area,
        n: cfg.n,
        upper,
        lower_general: lower_bound_general(cfg)?,
        critical: lower_bound_critical(cfg)?,
        c_used: cfg.c_general,
        c_star_used: cfg.c_star,
        y0_used: cfg.y0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(q: f64, m0: f64, area: f64, n: usize) -> BoundsConfig {
        BoundsConfig::from_star(1.0, 1.0, q, m0, area, 1.0, n, m0)
    }

    #[test]
    fn upper_examples() {
        assert!((upper_bound_constant(2.0, 1.0, 0.5, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((upper_bound_constant(3.0, 2.0, 1.0, 1.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(matches!(
            upper_bound(2.0, 0.5, &[1.0, 0.0], &[0.5, 0.5]),
            Err(Error::PreconditionViolated(_))
        ));
        // variable data: two cells
        let v = upper_bound(2.0, 0.5, &[1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
    }

    #[test]
    fn general_example_and_limits() {
        let v = lower_bound_general(&cfg(2.0, 1.0, 1.0, 2)).unwrap();
        assert!((v - 1.0625f64.ln()).abs() < 1e-15);
        assert!((v - 0.06062).abs() < 1e-5);
        let a = lower_bound_general(&cfg(1.001, 1.0, 0.5, 2)).unwrap();
        let b = lower_bound_general(&cfg(1.0001, 1.0, 0.5, 2)).unwrap();
        assert!((a * 0.001 - b * 0.0001).abs() < 1e-2 * a * 0.001);
        // logarithmic growth as the patch shrinks
        let r: Vec<f64> = [1e-6, 1e-9, 1e-12]
            .iter()
            .map(|&g| lower_bound_general(&cfg(2.0, 1.0, g, 2)).unwrap() / (1.0 / g).ln())
            .collect();
        assert!((r[2] - r[1]).abs() < (r[1] - r[0]).abs());
        assert!((r[2] - 2.0).abs() < 0.15);
    }

    #[test]
    fn critical_examples() {
        let y = y_quantity(2.0, 1.0, 0.01, 3);
        assert!((y - 0.1).abs() < 1e-15);
        let mut c = cfg(2.0, 1.0, 0.01, 3);
        c.y0 = 1.0;
        assert!(matches!(lower_bound_critical(&c).unwrap(), CriticalBound::Applicable { .. }));
        c.y0 = 0.1;
        match lower_bound_critical(&c).unwrap() {
            CriticalBound::RegimeNotApplicable { y } => assert!((y - 0.1).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        // n = 2: bound * ln(1/|G|) * |G| tends to a constant
        let c2 = |g: f64| {
            let mut k = cfg(2.0, 1.0, g, 2);
            k.y0 = 10.0;
            lower_bound_critical(&k).unwrap().time().unwrap() * g * (1.0 / g).ln()
        };
        assert!((c2(1e-8) / c2(1e-10) - 1.0).abs() < 0.01);
    }

    #[test]
    fn series_examples() {
        let s = series_lower_bound(0.5, 1.0).unwrap();
        assert!((s.sum - 1.0).abs() < 1e-15);
        assert!((s.bound - 1.5f64.ln() / (2.0 * 2f64.ln())).abs() < 1e-15);
        assert!((s.bound - 0.2925).abs() < 1e-4);
        assert!(s.holds);
        let s = series_lower_bound(0.5, 2.0).unwrap();
        assert!((s.sum - 2.0).abs() < 1e-15 && (s.bound - 0.5).abs() < 1e-15 && s.holds);
        // A <= 1/lambda: S = lambda A / (1 - lambda)
        let s = series_lower_bound(0.3, 2.5).unwrap();
        assert!((s.sum - 0.75 / 0.7).abs() < 1e-15);
        // against brute force
        let s = series_lower_bound(0.9, 1e4).unwrap();
        let brute: f64 = (1..5000).map(|k| (0.9f64.powi(k) * 1e4).min(1.0)).sum();
        assert!((s.sum - brute).abs() < 1e-9);
    }

    #[test]
    fn e_q_values() {
        assert!((e_q(2.0) - 0.25).abs() < 1e-15);
        assert!((e_q(3.0) - 4.0 / 27.0).abs() < 1e-15);
        assert!(e_q(1e4) > 0.0);
    }

    #[test]
    fn root_examples() {
        match g_root(2.0, 1.0, 0.1).unwrap() {
            RootResult::Root { lambda, .. } => {
                assert!((lambda - (1.0 - 0.6f64.sqrt()) / 0.2).abs() < 1e-12);
                assert!((lambda - 1.127017).abs() < 1e-6);
            }
            _ => panic!(),
        }
        assert_eq!(g_root(2.0, 1.0, 0.3).unwrap(), RootResult::NoRoot);
        match g_root(3.0, 2.0, 2f64.powf(-2.0) * e_q(3.0)).unwrap() {
            RootResult::Root { lambda, .. } => assert!((lambda - 3.0).abs() < 1e-7),
            _ => panic!(),
        }
    }

    #[test]
    fn schedule_examples() {
        let s = critical_schedule(2.0, 1.0, 0.01).unwrap();
        assert!(s.steps >= 9);
        assert!((s.step_bound - 8.2).abs() < 1e-12);
        assert!(s.steps as f64 > s.step_bound);
        let s = critical_schedule(2.0, 1.0, 0.1).unwrap();
        assert!((s.levels[1] - 1.127017).abs() < 1e-6);
        assert!(recurrence_residual(&s, 2.0) < 1e-10);
        assert!(matches!(critical_schedule(2.0, 1.0, 0.3), Err(Error::ScheduleEmpty)));
    }

    #[test]
    fn doubling_saturation() {
        let mut c = cfg(2.0, 0.1, 0.01, 2);
        c.c_general = 1.0;
        let d = doubling_schedule(&c).unwrap();
        assert!(d.holds);
        // first stage term C (2 M0)^{-4} |G|^{-2} = 0.2^{-4} * 1e4 > 1
        assert!(d.sum >= 1.0);
    }

    #[test]
    fn report_regime_passthrough() {
        let mut c = cfg(2.0, 1.0, 0.5, 2);
        c.y0 = 1e-3;
        let r = bounds_report(&c).unwrap();
        assert!(r.critical.time().is_none());
        assert_eq!(r.upper, Some(2.0));
    }
}
