//! Numerical checks of the kernel, the radial integrals and the discrete constructions.
//! Each returns a report with the measured quantities and a pass flag.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    critical_schedule, e_q, g_root, recurrence_residual, series_lower_bound, RootResult,
};
use crate::error::Result;
use crate::freespace::{phi_n_sandwich, sharpness_ratio, Sandwich, SharpnessRow};
use crate::geometry::Domain;
use crate::kernel::{gaussian_bound_constant, gaussian_ratio, KernelEvaluator, Truncation};
use crate::quadrature::{integrate, QuadratureControl};

pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelCheck {
    pub n: usize,
    pub samples: usize,
    pub mass_error: f64,
    pub symmetry_error: f64,
    pub min_value: f64,
    pub pass: bool,
}

/// Mass, symmetry and positivity of the kernel over `k` source points, `k` targets and
/// `k` times in `[1e-3, 10]`. The mass integral factorises over the axes.
pub fn kernel_check(domain: &Domain, k: usize) -> Result<KernelCheck> {
    let ev = KernelEvaluator::new(domain)?;
    let n = ev.n();
    let lens = ev.lengths().to_vec();
    let ctrl = QuadratureControl {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        ..Default::default()
    };
    let xs: Vec<Vec<f64>> = (0..k)
        .map(|i| lens.iter().enumerate().map(|(a, l)| l * ((i as f64 + 0.5 + 0.1 * a as f64) / k as f64)).collect())
        .collect();
    let ys: Vec<Vec<f64>> = (0..k)
        .map(|j| lens.iter().enumerate().map(|(a, l)| l * (((j + a) % k) as f64 / (k - 1) as f64)).collect())
        .collect();
    let times = log_grid(1e-3, 10.0, k);
    let (mut mass_error, mut symmetry_error, mut min_value) = (0.0f64, 0.0f64, f64::INFINITY);
    for &t in &times {
        for x in &xs {
            let mut mass = 1.0;
            for a in 0..n {
                let brk = [x[a]];
                mass *= integrate(|y| ev.axis(a, x[a], y, t), 0.0, lens[a], &brk, &ctrl)?.value;
            }
            mass_error = mass_error.max((mass - 1.0).abs());
            for y in &ys {
                let fwd = ev.kernel(x, y, t)?;
                let bwd = ev.kernel(y, x, t)?;
                symmetry_error = symmetry_error.max((fwd - bwd).abs() / fwd.abs().max(1.0));
                min_value = min_value.min(fwd.min(bwd));
            }
        }
    }
    Ok(KernelCheck {
        n,
        samples: k * k * k,
        mass_error,
        symmetry_error,
        min_value,
        pass: mass_error <= 1e-6 && symmetry_error <= 1e-10 && min_value >= -1e-12,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianCheck {
    pub n: usize,
    pub constant: f64,
    pub constant_doubled: f64,
    pub change: f64,
    pub interior_ratio: f64,
    pub interior_limit: f64,
    pub pass: bool,
}

/// Empirical `sup N / Phi(., 2t)` at the default and doubled image counts, and the
/// small-time ratio at an interior diagonal point.
pub fn gaussian_check(domain: &Domain, samples_per_axis: usize) -> Result<GaussianCheck> {
    let base = Truncation::default();
    let ev = KernelEvaluator::with_truncation(domain, base)?;
    let doubled = KernelEvaluator::with_truncation(
        domain,
        Truncation {
            images: 2 * base.images,
            modes: 2 * base.modes,
        },
    )?;
    let times = log_grid(1e-4, 1.0, 9);
    let constant = gaussian_bound_constant(&ev, &times, samples_per_axis)?;
    let constant_doubled = gaussian_bound_constant(&doubled, &times, samples_per_axis)?;
    let change = (constant_doubled - constant).abs() / constant;
    let centre: Vec<f64> = ev.lengths().iter().map(|l| 0.5 * l).collect();
    let interior_ratio = gaussian_ratio(&ev, &centre, &centre, 1e-6)?;
    let n = ev.n();
    let interior_limit = 2f64.powf(n as f64 / 2.0);
    Ok(GaussianCheck {
        n,
        constant,
        constant_doubled,
        change,
        interior_ratio,
        interior_limit,
        pass: constant.is_finite()
            && change < 0.02
            && (interior_ratio / interior_limit - 1.0).abs() <= 0.01,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiCheck {
    pub n: usize,
    pub rows: Vec<(Sandwich, f64)>,
    pub short_anchor_error: f64,
    pub long_anchor_error: f64,
    pub pass: bool,
}

/// Radial integral against its envelopes on a `k x k` log grid over `[1e-3, 1e3]^2`,
/// plus the two closed-form anchors recomputed by nested quadrature.
pub fn phi_check(n: usize, k: usize) -> Result<PhiCheck> {
    let ctrl = QuadratureControl {
        abs_tol: 1e-300,
        rel_tol: 1e-9,
        ..Default::default()
    };
    let grid = log_grid(1e-3, 1e3, k);
    let mut rows = Vec::new();
    for &t_end in &grid {
        for &radius in &grid {
            let s = phi_n_sandwich(t_end, radius, n, &ctrl)?;
            let est = crate::freespace::phi_n(t_end, radius, n, &ctrl)?;
            rows.push((s, est.error / est.value.abs()));
        }
    }
    let tight = QuadratureControl {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        ..Default::default()
    };
    let nf = n as f64;
    let mut short_anchor_error = 0.0f64;
    let mut long_anchor_error = 0.0f64;
    for &t_end in &[1e-3f64, 1.0, 1e3] {
        // int_0^T int_0^sqrt(t) r^{n-2} t^{-n/2} dr dt, outer variable s = sqrt(t)
        let v = integrate(
            |s| {
                let t = s * s;
                let inner = integrate(|r| r.powf(nf - 2.0), 0.0, s, &[], &tight).map(|e| e.value).unwrap_or(f64::NAN);
                2.0 * s * inner * t.powf(-nf / 2.0)
            },
            0.0,
            t_end.sqrt(),
            &[],
            &tight,
        )?
        .value;
        let exact = 2.0 * t_end.sqrt() / (nf - 1.0);
        short_anchor_error = short_anchor_error.max((v - exact).abs() / exact);
        for &radius in &[1e-3, 1.0, 10.0] {
            if t_end < radius * radius {
                continue;
            }
            let v = integrate(
                |r| integrate(|t| 1.0 / t, r * r, t_end, &[], &tight).map(|e| e.value).unwrap_or(f64::NAN),
                0.0,
                radius,
                &[],
                &tight,
            )?
            .value;
            let exact = radius * ((t_end / (radius * radius)).ln() + 2.0);
            long_anchor_error = long_anchor_error.max((v - exact).abs() / exact);
        }
    }
    let pass = rows.iter().all(|(s, e)| s.pass && *e <= 1e-6)
        && short_anchor_error <= 1e-10
        && long_anchor_error <= 1e-10;
    Ok(PhiCheck {
        n,
        rows,
        short_anchor_error,
        long_anchor_error,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessCheck {
    pub n: usize,
    pub rows: Vec<SharpnessRow>,
    pub span: f64,
    pub pass: bool,
}

/// Ratio of the boundary-time integral over a flat ball to its predicted order for
/// radii on a log grid over `[1e-3, 1]`.
pub fn sharpness_check(n: usize, k: usize) -> Result<SharpnessCheck> {
    let ctrl = QuadratureControl::default();
    let rows = log_grid(1e-3, 1.0, k)
        .into_iter()
        .map(|rho| sharpness_ratio(rho, n, &ctrl))
        .collect::<Result<Vec<_>>>()?;
    let hi = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let span = hi / lo;
    Ok(SharpnessCheck {
        n,
        rows,
        span,
        pass: lo > 0.0 && span <= 10.0,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiscreteCheck {
    pub eq_failures: usize,
    pub series_failures: usize,
    pub root_residual: f64,
    pub root_misclassified: usize,
    pub schedule_failures: usize,
    pub recurrence_residual: f64,
    pub pass: bool,
}

/// Randomised checks of `E_q`, the series inequality, the root of `g` and the critical
/// schedule.
pub fn discrete_check(seed: u64) -> Result<DiscreteCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DiscreteCheck::default();
    for _ in 0..1000 {
        let q = 1.0 + 10f64.powf(rng.gen_range(-2.0..2.0));
        let e = e_q(q);
        let upper = (1.0 / q).min(1.0 / ((q - 1.0) * std::f64::consts::E));
        if !(1.0 / (3.0 * q) < e && e < upper) {
            out.eq_failures += 1;
        }
    }
    for _ in 0..1000 {
        let lambda = rng.gen_range(0.01..0.99);
        let a = 10f64.powf(rng.gen_range(-3.0..6.0));
        if !series_lower_bound(lambda, a)?.holds {
            out.series_failures += 1;
        }
    }
    for _ in 0..1000 {
        let q = rng.gen_range(1.05..6.0);
        let m = 10f64.powf(rng.gen_range(-2.0..2.0));
        let ymax = m.powf(1.0 - q) * e_q(q);
        let y = ymax * rng.gen_range(0.01..1.5);
        match g_root(q, m, y)? {
            RootResult::Root { lambda, .. } => {
                if y > ymax * (1.0 + 1e-12) {
                    out.root_misclassified += 1;
                }
                let g = (lambda - m) / lambda.powf(q);
                out.root_residual = out.root_residual.max((g - y).abs() / y);
            }
            RootResult::NoRoot => {
                if y <= ymax {
                    out.root_misclassified += 1;
                }
            }
        }
    }
    for _ in 0..100 {
        let q = rng.gen_range(1.1..5.0);
        let m0 = 10f64.powf(rng.gen_range(-1.0..1.0));
        let x0 = e_q(q) * 10f64.powf(rng.gen_range(-3.0..-0.5));
        let delta1 = x0 / m0.powf(q - 1.0);
        let s = critical_schedule(q, m0, delta1)?;
        if !(s.steps as f64 > s.step_bound) || s.levels.windows(2).any(|w| w[1] <= w[0]) {
            out.schedule_failures += 1;
        }
        out.recurrence_residual = out.recurrence_residual.max(recurrence_residual(&s, q));
    }
    out.pass = out.eq_failures == 0
        && out.series_failures == 0
        && out.root_residual <= 1e-10
        && out.root_misclassified == 0
        && out.schedule_failures == 0
        && out.recurrence_residual <= 1e-10;
    Ok(out)
}
