//! Free-space heat kernel, the radial model integral and boundary-time integrals
//! of the kernel over flat patches.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{make_box, make_patch, BoundaryPatch, Domain, Face, PatchShape};
use crate::quadrature::{integrate, Estimate, QuadratureControl};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Heat kernel `(4 pi t)^{-n/2} exp(-|x|^2 / 4t)` in `n = x.len()` dimensions.
pub fn phi(x: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((4.0 * PI * t).powf(-(x.len() as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
}

/// One-dimensional heat kernel.
#[inline]
pub fn gauss_1d(x: f64, t: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

fn check_radial(t_end: f64, radius: f64, n: usize) -> Result<()> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidTime(t_end));
    }
    if !(radius > 0.0) {
        return Err(Error::PreconditionViolated(format!("radius {radius} must be positive")));
    }
    if !(2..=4).contains(&n) {
        return Err(Error::PreconditionViolated(format!("dimension {n} not supported")));
    }
    Ok(())
}

/// `int_0^T int_0^R r^{n-2} t^{-n/2} exp(-r^2/4t) dr dt` by nested adaptive quadrature.
///
/// The outer integral runs in `s = sqrt(t)`, which makes the integrand bounded, and is
/// split at `s = min(R, sqrt(T))`; the inner radial integral is split along `r = sqrt(t)`.
pub fn phi_n(t_end: f64, radius: f64, n: usize, ctrl: &QuadratureControl) -> Result<Estimate> {
    check_radial(t_end, radius, n)?;
    ctrl.validate()?;
    let inner_ctrl = QuadratureControl {
        abs_tol: 1e-300,
        rel_tol: ctrl.rel_tol * 0.1,
        ..*ctrl
    };
    let p = n as f64 - 2.0;
    let mut failure = None;
    let outer = |s: f64| {
        let t = s * s;
        let rt = s;
        let breaks = [rt, 4.0 * rt, 12.0 * rt];
        let inner = integrate(
            |r| r.powf(p) * (-r * r / (4.0 * t)).exp(),
            0.0,
            radius,
            &breaks,
            &inner_ctrl,
        );
        match inner {
            Ok(e) => 2.0 * s.powf(1.0 - n as f64) * e.value,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let smax = t_end.sqrt();
    let est = integrate(outer, 0.0, smax, &[radius.min(smax)], ctrl)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// `int_1^inf y^{n/2-2} exp(-y/4) dy` in closed form for `n` in 2..=4.
pub fn tail_moment(n: usize) -> Result<f64> {
    match n {
        2 => Ok(exp_integral_e1(0.25)),
        3 => Ok(2.0 * PI.sqrt() * libm::erfc(0.5)),
        4 => Ok(4.0 * (-0.25f64).exp()),
        _ => Err(Error::PreconditionViolated(format!("dimension {n} not supported"))),
    }
}

/// Exponential integral `E_1(x)` for moderate positive `x` by its power series.
pub fn exp_integral_e1(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = -term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SandwichCase {
    /// `T < R^2`: the time horizon limits the spread.
    ShortTime,
    /// `T >= R^2`: the radius limits the spread.
    LongTime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sandwich {
    pub n: usize,
    pub t_end: f64,
    pub radius: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub case: SandwichCase,
    pub pass: bool,
}

/// Explicit lower and upper envelopes for the radial integral, as produced by splitting
/// the integration region along `t = r^2`.
pub fn sandwich_bounds(t_end: f64, radius: f64, n: usize) -> Result<(f64, f64, SandwichCase)> {
    check_radial(t_end, radius, n)?;
    let nf = n as f64;
    let e4 = (-0.25f64).exp();
    if t_end < radius * radius {
        let rt = t_end.sqrt();
        let moment = 2f64.powf(nf - 1.0) * libm::tgamma((nf - 1.0) / 2.0);
        Ok((
            2.0 * e4 * rt / (nf - 1.0),
            (2.0 / (nf - 1.0) + moment) * rt,
            SandwichCase::ShortTime,
        ))
    } else {
        let tail = tail_moment(n)? * radius;
        let (lo, hi) = if n == 2 {
            let l = radius * ((t_end / (radius * radius)).ln() + 2.0);
            (e4 * l, l)
        } else {
            (2.0 * e4 * radius / (nf - 1.0), 2.0 * radius / (nf - 2.0))
        };
        Ok((lo + tail, hi + tail, SandwichCase::LongTime))
    }
}

pub fn phi_n_sandwich(
    t_end: f64,
    radius: f64,
    n: usize,
    ctrl: &QuadratureControl,
) -> Result<Sandwich> {
    let (lower, upper, case) = sandwich_bounds(t_end, radius, n)?;
    let value = phi_n(t_end, radius, n, ctrl)?.value;
    Ok(Sandwich {
        n,
        t_end,
        radius,
        value,
        lower,
        upper,
        case,
        pass: lower <= value && value <= upper,
    })
}

fn erf_segment(x: f64, lo: f64, hi: f64, t: f64) -> f64 {
    let s = 2.0 * t.sqrt();
    0.5 * (libm::erf((hi - x) / s) - libm::erf((lo - x) / s))
}

/// `int_{face rect} Phi(x - y, t) dS(y)` over a rectangle in face coordinates,
/// without the normal factor.
fn tangent_rect_mass(face: &Face, x: &[f64], lo: &[f64], hi: &[f64], t: f64) -> f64 {
    face.tangent_axes
        .iter()
        .enumerate()
        .map(|(k, &a)| erf_segment(x[a], lo[k], hi[k], t))
        .product()
}

/// Tangential mass of the 2-D Gaussian over a disk, by a polar integral about the
/// projection of `x` with the radial part in closed form.
fn tangent_disk_mass(
    px: [f64; 2],
    center: &[f64],
    radius: f64,
    t: f64,
    ctrl: &QuadratureControl,
) -> Result<f64> {
    let dx = center[0] - px[0];
    let dy = center[1] - px[1];
    let d = (dx * dx + dy * dy).sqrt();
    let ray = |th: f64| {
        let (sn, cs) = th.sin_cos();
        let b = -(cs * dx + sn * dy);
        let c0 = d * d - radius * radius;
        let disc = b * b - c0;
        if disc <= 0.0 {
            return 0.0;
        }
        let sq = disc.sqrt();
        let r2 = -b + sq;
        if r2 <= 0.0 {
            return 0.0;
        }
        let r1 = (-b - sq).max(0.0);
        ((-r1 * r1 / (4.0 * t)).exp() - (-r2 * r2 / (4.0 * t)).exp()) / (2.0 * PI)
    };
    let inner_ctrl = QuadratureControl {
        abs_tol: ctrl.abs_tol * 1e-2,
        ..*ctrl
    };
    if d < radius {
        Ok(integrate(ray, 0.0, 2.0 * PI, &[], &inner_ctrl)?.value)
    } else {
        let th0 = dy.atan2(dx);
        let half = (radius / d).min(1.0).asin();
        Ok(integrate(ray, th0 - half, th0 + half, &[th0], &inner_ctrl)?.value)
    }
}

/// `int_{Gamma_1} Phi(x - y, t) dS(y)`.
pub fn patch_surface_integral(
    x: &[f64],
    patch: &BoundaryPatch,
    t: f64,
    ctrl: &QuadratureControl,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let face = &patch.face;
    let normal = gauss_1d(x[face.normal_axis] - face.offset, t);
    let tangential = match &patch.shape {
        PatchShape::Rect { lo, hi } => tangent_rect_mass(face, x, lo, hi, t),
        PatchShape::Disk { center, radius } => {
            if center.len() == 1 {
                let a = face.tangent_axes[0];
                erf_segment(x[a], center[0] - radius, center[0] + radius, t)
            } else {
                let px = [x[face.tangent_axes[0]], x[face.tangent_axes[1]]];
                tangent_disk_mass(px, center, *radius, t, ctrl)?
            }
        }
    };
    Ok(normal * tangential)
}

/// `int_0^T int_{Gamma_1} Phi(x - y, t) dS(y) dt`.
pub fn boundary_time_integral(
    x: &[f64],
    patch: &BoundaryPatch,
    t_end: f64,
    ctrl: &QuadratureControl,
) -> Result<Estimate> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidTime(t_end));
    }
    ctrl.validate()?;
    let face = &patch.face;
    let dn = (x[face.normal_axis] - face.offset).abs();
    let tc = face.tangent_coords(x);
    let (lo, hi) = patch.tangent_bounds();
    let mut scales = vec![dn];
    for k in 0..tc.len() {
        scales.push((tc[k] - lo[k]).abs());
        scales.push((tc[k] - hi[k]).abs());
    }
    let mut failure = None;
    let mut surface = |t: f64| match patch_surface_integral(x, patch, t, ctrl) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let est = if ctrl.sqrt_substitution {
        let smax = t_end.sqrt();
        let breaks: Vec<f64> = scales
            .iter()
            .flat_map(|d| [0.5 * d, *d, 2.0 * d])
            .filter(|s| *s > 0.0 && *s < smax)
            .collect();
        integrate(|s| 2.0 * s * surface(s * s), 0.0, smax, &breaks, ctrl)?
    } else {
        let breaks: Vec<f64> = scales
            .iter()
            .map(|d| d * d)
            .filter(|s| *s > 0.0 && *s < t_end)
            .collect();
        integrate(&mut surface, 0.0, t_end, &breaks, ctrl)?
    };
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// `int_{dOmega} Phi(x - y, t) dS(y)` over the whole boundary of a box.
pub fn whole_boundary_integral(x: &[f64], domain: &Domain, t: f64) -> Result<f64> {
    if !domain.is_box() {
        return Err(Error::InvalidGeometry("whole-boundary integral needs a box".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    Ok(domain
        .faces()
        .iter()
        .map(|f| gauss_1d(x[f.normal_axis] - f.offset, t) * tangent_rect_mass(f, x, &f.lo, &f.hi, t))
        .sum())
}

/// Surface measure of the unit sphere `S^{k}` for `k` in {0, 1, 2}.
pub fn sphere_measure(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Flat ball of radius `rho` centred on the bottom face of `[0,2]^n`, and its centre.
pub fn centred_ball_patch(rho: f64, n: usize) -> Result<(BoundaryPatch, Vec<f64>)> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::PreconditionViolated(format!("radius {rho} outside (0, 1]")));
    }
    let domain = make_box(n, &vec![2.0; n])?;
    let face = if n == 2 { "y-" } else { "z-" };
    let shape = PatchShape::Disk {
        center: vec![1.0; n - 1],
        radius: rho,
    };
    let patch = make_patch(&domain, face, shape)?;
    let mut x = vec![1.0; n];
    x[n - 1] = 0.0;
    Ok((patch, x))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharpnessRow {
    pub n: usize,
    pub rho: f64,
    pub integral: f64,
    pub predicted: f64,
    pub ratio: f64,
}

/// Predicted order of the boundary-time integral over a flat ball of radius `rho`.
pub fn sharpness_order(rho: f64, n: usize) -> f64 {
    if n == 2 {
        rho * (1.0 + 1.0 / rho).ln()
    } else {
        rho
    }
}

/// `I(rho) = int_0^2 int_{B(rho)} Phi dS dt` at the ball centre, divided by its predicted order.
pub fn sharpness_ratio(rho: f64, n: usize, ctrl: &QuadratureControl) -> Result<SharpnessRow> {
    if !(n == 2 || n == 3) {
        return Err(Error::PreconditionViolated(format!("dimension {n} not supported")));
    }
    let (patch, x) = centred_ball_patch(rho, n)?;
    let integral = boundary_time_integral(&x, &patch, 2.0, ctrl)?.value;
    let predicted = sharpness_order(rho, n);
    Ok(SharpnessRow {
        n,
        rho,
        integral,
        predicted,
        ratio: integral / predicted,
    })
}

/// Constant `c` in `I >= c * phi_n(2, rho)` when a fraction `overlap` of every
/// small sphere about `x` meets the patch.
pub fn reduction_constant(n: usize, overlap: f64) -> f64 {
    (4.0 * PI).powf(-(n as f64) / 2.0) * sphere_measure(n - 2) * overlap
}
