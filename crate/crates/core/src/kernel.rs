//! Neumann heat kernel on boxes: image sums for short times, cosine expansions for
//! long times, tensor products across axes, and the representation formula.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::freespace::gauss_1d;
use crate::geometry::{BoundaryPatch, Domain, Grid};
use crate::quadrature::GaussRule;

/// Image count `K` (terms `|k| <= K`) and cosine mode count `M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub images: usize,
    pub modes: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        // at t = L^2/pi^2 the first dropped mode carries exp(-36)
        Truncation {
            images: 6,
            modes: 5,
        }
    }
}

/// Image-sum form: `sum_{|k|<=K} [G(x-y-2kL) + G(x+y-2kL)]`.
pub fn image_sum_1d(x: f64, y: f64, t: f64, len: f64, images: usize) -> f64 {
    let k = images as i64;
    let mut s = 0.0;
    for j in -k..=k {
        let shift = 2.0 * j as f64 * len;
        s += gauss_1d(x - y - shift, t) + gauss_1d(x + y - shift, t);
    }
    s
}

/// Cosine form: `(1/L)(1 + 2 sum_{m<=M} exp(-(m pi/L)^2 t) cos(m pi x/L) cos(m pi y/L))`.
pub fn eigen_sum_1d(x: f64, y: f64, t: f64, len: f64, modes: usize) -> f64 {
    let mut s = 1.0;
    for m in 1..=modes {
        let k = m as f64 * PI / len;
        s += 2.0 * (-k * k * t).exp() * (k * x).cos() * (k * y).cos();
    }
    s / len
}

pub fn default_switch_time(len: f64) -> f64 {
    len * len / (PI * PI)
}

/// Neumann heat kernel of `[0, len]`, choosing the branch by `t_switch`.
pub fn kernel_1d(x: f64, y: f64, t: f64, len: f64, trunc: Truncation, t_switch: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    Ok(if t <= t_switch {
        image_sum_1d(x, y, t, len, trunc.images)
    } else {
        eigen_sum_1d(x, y, t, len, trunc.modes)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelEvaluator {
    lengths: Vec<f64>,
    trunc: Truncation,
    t_switch: Vec<f64>,
}

impl KernelEvaluator {
    pub fn new(domain: &Domain) -> Result<Self> {
        Self::with_truncation(domain, Truncation::default())
    }

    pub fn with_truncation(domain: &Domain, trunc: Truncation) -> Result<Self> {
        if !domain.is_box() {
            return Err(Error::InvalidGeometry(
                "the Neumann kernel is only available on boxes".into(),
            ));
        }
        if trunc.images < 1 || trunc.modes < 1 {
            return Err(Error::PreconditionViolated("truncation counts must be at least 1".into()));
        }
        let lengths = domain.extents().to_vec();
        let t_switch = lengths.iter().map(|l| default_switch_time(*l)).collect();
        Ok(KernelEvaluator {
            lengths,
            trunc,
            t_switch,
        })
    }

    pub fn n(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.t_switch
    }

    /// One axis factor; `t` must be positive.
    #[inline]
    pub fn axis(&self, axis: usize, x: f64, y: f64, t: f64) -> f64 {
        let len = self.lengths[axis];
        if t <= self.t_switch[axis] {
            image_sum_1d(x, y, t, len, self.trunc.images)
        } else {
            eigen_sum_1d(x, y, t, len, self.trunc.modes)
        }
    }

    pub fn kernel(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidTime(t));
        }
        Ok((0..self.n()).map(|a| self.axis(a, x[a], y[a], t)).product())
    }

    /// `int N_axis(x, y, t) psi_j(y) dy` for the piecewise-linear hat basis on `nodes`
    /// (increasing, inside `[0, L]`); the end hats are halves.
    pub fn hat_weights(&self, axis: usize, x: f64, t: f64, nodes: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; nodes.len()];
        if nodes.len() < 2 {
            return w;
        }
        let len = self.lengths[axis];
        if t <= self.t_switch[axis] {
            self.hat_weights_images(x, t, len, nodes, &mut w);
        } else {
            self.hat_weights_modes(x, t, len, nodes, &mut w);
        }
        w
    }

    fn hat_weights_images(&self, x: f64, t: f64, len: f64, nodes: &[f64], w: &mut [f64]) {
        let k = self.trunc.images as i64;
        let rt2 = 2.0 * t.sqrt();
        let reach = 8.0 * rt2;
        let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
        let mut erfs = vec![0.0; nodes.len()];
        let mut gs = vec![0.0; nodes.len()];
        for j in -k..=k {
            let shift = 2.0 * j as f64 * len;
            for c in [x - shift, shift - x] {
                if c < first - reach || c > last + reach {
                    continue;
                }
                for (m, y) in nodes.iter().enumerate() {
                    erfs[m] = libm::erf((y - c) / rt2);
                    gs[m] = gauss_1d(y - c, t);
                }
                for m in 0..nodes.len() - 1 {
                    let (a, b) = (nodes[m], nodes[m + 1]);
                    let i0 = 0.5 * (erfs[m + 1] - erfs[m]);
                    // int_a^b (y - a) G(y - c) dy
                    let j1 = (c - a) * i0 - 2.0 * t * (gs[m + 1] - gs[m]);
                    let r = j1 / (b - a);
                    w[m] += i0 - r;
                    w[m + 1] += r;
                }
            }
        }
    }

    fn hat_weights_modes(&self, x: f64, t: f64, len: f64, nodes: &[f64], w: &mut [f64]) {
        let modes: Vec<(f64, f64)> = (1..=self.trunc.modes)
            .map(|m| {
                let k = m as f64 * PI / len;
                (k, 2.0 * (-k * k * t).exp() * (k * x).cos() / len)
            })
            .collect();
        for m in 0..nodes.len() - 1 {
            let (a, b) = (nodes[m], nodes[m + 1]);
            let d = b - a;
            let mut i0 = d / len;
            let mut j1 = d * d / (2.0 * len);
            for &(k, amp) in &modes {
                let (sa, ca) = (k * a).sin_cos();
                let (sb, cb) = (k * b).sin_cos();
                i0 += amp * (sb - sa) / k;
                j1 += amp * (d * sb / k + (cb - ca) / (k * k));
            }
            let r = j1 / d;
            w[m] += i0 - r;
            w[m + 1] += r;
        }
    }

    /// `int_Omega N(x, y, t) u0(y) dy` for the multilinear interpolant of grid samples.
    pub fn initial_term(&self, x: &[f64], t: f64, grid: &Grid, samples: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidTime(t));
        }
        if samples.len() != grid.len() {
            return Err(Error::InvalidData("sample count does not match grid".into()));
        }
        let weights: Vec<Vec<f64>> = (0..self.n())
            .map(|a| self.hat_weights(a, x[a], t, &grid.axis_nodes(a)))
            .collect();
        Ok(contract(&weights, samples))
    }

    /// `w_j = int_{Gamma_1} N(x, y, sigma) psi_j(y) dS(y)` for the patch hat basis.
    pub fn patch_weights(&self, x: &[f64], sigma: f64, basis: &PatchBasis) -> Vec<f64> {
        let normal = self.axis(basis.normal_axis, x[basis.normal_axis], basis.offset, sigma);
        let per_axis: Vec<Vec<f64>> = basis
            .tangent_axes
            .iter()
            .zip(&basis.nodes)
            .map(|(&a, nodes)| self.hat_weights(a, x[a], sigma, nodes))
            .collect();
        let mut out = outer(&per_axis);
        for v in &mut out {
            *v *= normal;
        }
        out
    }
}

/// Tensor contraction `sum_flat samples[flat] prod_a w_a[i_a]`, axis 0 fastest.
fn contract(weights: &[Vec<f64>], samples: &[f64]) -> f64 {
    let w0 = &weights[0];
    let n0 = w0.len();
    let rest = outer(&weights[1..]);
    samples
        .chunks(n0)
        .zip(rest.iter())
        .map(|(row, r)| r * row.iter().zip(w0).map(|(s, w)| s * w).sum::<f64>())
        .sum()
}

/// Outer product of per-axis vectors, axis 0 fastest.
fn outer(parts: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for p in parts {
        let mut next = Vec::with_capacity(out.len() * p.len());
        for v in p {
            for o in &out {
                next.push(o * v);
            }
        }
        out = next;
    }
    out
}

/// Hat basis on the grid nodes of a rectangular patch.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchBasis {
    pub normal_axis: usize,
    pub offset: f64,
    pub tangent_axes: Vec<usize>,
    pub nodes: Vec<Vec<f64>>,
}

impl PatchBasis {
    pub fn from_grid(grid: &Grid, patch: &BoundaryPatch) -> Result<Self> {
        Ok(PatchBasis {
            normal_axis: patch.face.normal_axis,
            offset: patch.face.offset,
            tangent_axes: patch.face.tangent_axes.clone(),
            nodes: grid.patch_axis_nodes(patch)?,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of basis node `j` (first tangent axis fastest).
    pub fn point(&self, j: usize) -> Vec<f64> {
        let n = self.tangent_axes.len() + 1;
        let mut p = vec![0.0; n];
        p[self.normal_axis] = self.offset;
        let mut rem = j;
        for (k, &a) in self.tangent_axes.iter().enumerate() {
            let c = self.nodes[k].len();
            p[a] = self.nodes[k][rem % c];
            rem /= c;
        }
        p
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes
            .iter()
            .flat_map(|v| v.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Data for evaluating the representation formula.
#[derive(Clone, Debug)]
pub struct RepFormulaInput {
    pub grid: Grid,
    /// Initial data on `grid`.
    pub initial: Vec<f64>,
    pub basis: PatchBasis,
    /// Strictly increasing, starting at 0.
    pub times: Vec<f64>,
    /// `history[k][j]`: boundary value at basis node `j`, time `times[k]`.
    pub history: Vec<Vec<f64>>,
    pub q: f64,
}

impl RepFormulaInput {
    pub fn validate(&self) -> Result<()> {
        if self.times.first() != Some(&0.0) || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData("time mesh must increase strictly from 0".into()));
        }
        if self.history.len() != self.times.len()
            || self.history.iter().any(|h| h.len() != self.basis.len())
        {
            return Err(Error::InvalidData("history does not match mesh and basis".into()));
        }
        if self.history.iter().flatten().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidData("boundary history must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Gauss points per sub-piece in the `s = sqrt(t - tau)` variable.
const TIME_GAUSS_POINTS: usize = 8;

/// `u(x,t) = int N(x,y,t) u0(y) dy + int_0^t int_{Gamma_1} N(x,y,t-tau) u^q(y,tau) dS dtau`,
/// with `u^q` interpolated linearly in time and by hats in space. The time integral is
/// taken in `s = sqrt(t - tau)`.
pub fn rep_formula_eval(
    x: &[f64],
    t: f64,
    input: &RepFormulaInput,
    ev: &KernelEvaluator,
) -> Result<f64> {
    input.validate()?;
    let t_last = *input.times.last().unwrap();
    if !(t > 0.0) || t > t_last * (1.0 + 1e-12) {
        return Err(Error::PreconditionViolated(format!(
            "time {t} outside the boundary history (0, {t_last}]"
        )));
    }
    let initial = ev.initial_term(x, t, &input.grid, &input.initial)?;
    let sources: Vec<Vec<f64>> = input
        .history
        .iter()
        .map(|h| h.iter().map(|v| v.powf(input.q)).collect())
        .collect();
    let rule = GaussRule::new(TIME_GAUSS_POINTS);
    let piece = 0.5 * input.basis.min_spacing();
    let mut boundary = 0.0;
    for k in 0..input.times.len() - 1 {
        let (ta, tb) = (input.times[k], input.times[k + 1]);
        if ta >= t {
            break;
        }
        let hi_tau = tb.min(t);
        let (s_lo, s_hi) = ((t - hi_tau).max(0.0).sqrt(), (t - ta).sqrt());
        let pieces = ((s_hi - s_lo) / piece).ceil().max(1.0) as usize;
        let ds = (s_hi - s_lo) / pieces as f64;
        for p in 0..pieces {
            let a = s_lo + p as f64 * ds;
            for (s, w) in rule.points(a, a + ds) {
                let sigma = s * s;
                let tau = t - sigma;
                let theta = (tau - ta) / (tb - ta);
                let weights = ev.patch_weights(x, sigma, &input.basis);
                let src: f64 = weights
                    .iter()
                    .zip(sources[k].iter().zip(&sources[k + 1]))
                    .map(|(wj, (g0, g1))| wj * ((1.0 - theta) * g0 + theta * g1))
                    .sum();
                boundary += w * 2.0 * s * src;
            }
        }
    }
    Ok(initial + boundary)
}

/// Ratio `N(x,y,t) / Phi(x - y, 2t)`.
pub fn gaussian_ratio(ev: &KernelEvaluator, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(ev.kernel(x, y, t)? / crate::freespace::phi(&d, 2.0 * t)?)
}

/// Supremum of `N / Phi(., 2t)` over a tensor sample of `samples_per_axis` points per
/// axis (both `x` and `y`) and the given times in `(0, 1]`.
pub fn gaussian_bound_constant(
    ev: &KernelEvaluator,
    times: &[f64],
    samples_per_axis: usize,
) -> Result<f64> {
    if times.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::PreconditionViolated("times must lie in (0, 1]".into()));
    }
    let n = ev.n();
    let axis_pts: Vec<Vec<f64>> = ev
        .lengths()
        .iter()
        .map(|l| {
            (0..samples_per_axis)
                .map(|i| l * i as f64 / (samples_per_axis - 1) as f64)
                .collect()
        })
        .collect();
    let total = samples_per_axis.pow(n as u32);
    let point = |flat: usize| -> Vec<f64> {
        let mut rem = flat;
        (0..n)
            .map(|a| {
                let v = axis_pts[a][rem % samples_per_axis];
                rem /= samples_per_axis;
                v
            })
            .collect()
    };
    let mut sup: f64 = 0.0;
    for &t in times {
        for i in 0..total {
            let x = point(i);
            for j in 0..total {
                sup = sup.max(gaussian_ratio(ev, &x, &point(j), t)?);
            }
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_box, make_patch, PatchShape};
    use crate::quadrature::{integrate, QuadratureControl};

    fn unit_square() -> Domain {
        make_box(2, &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn branches_agree_at_switch() {
        let len = 1.3;
        let ts = default_switch_time(len);
        for i in 0..10 {
            for j in 0..10 {
                let x = len * i as f64 / 9.0;
                let y = len * j as f64 / 9.0;
                let a = image_sum_1d(x, y, ts, len, 6);
                let b = eigen_sum_1d(x, y, ts, len, 5);
                assert!((a - b).abs() <= 1e-9, "{x} {y}: {a} {b}");
            }
        }
    }

    #[test]
    fn one_dimensional_mass_symmetry_and_limit() {
        let len = 1.0;
        let tr = Truncation::default();
        let ts = default_switch_time(len);
        let c = QuadratureControl {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            ..Default::default()
        };
        for &t in &[1e-3, 0.05, 0.3, 2.0] {
            for &x in &[0.0, 0.2, 0.5, 1.0] {
                let m = integrate(|y| kernel_1d(x, y, t, len, tr, ts).unwrap(), 0.0, len, &[x], &c)
                    .unwrap()
                    .value;
                assert!((m - 1.0).abs() < 1e-10, "t={t} x={x} m={m}");
                let a = kernel_1d(x, 0.37, t, len, tr, ts).unwrap();
                let b = kernel_1d(0.37, x, t, len, tr, ts).unwrap();
                assert!((a - b).abs() < 1e-12 * a.max(1.0));
            }
        }
        for &(x, y) in &[(0.0, 1.0), (0.3, 0.9), (0.5, 0.5)] {
            let v = kernel_1d(x, y, 10.0, len, tr, ts).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(kernel_1d(0.1, 0.2, 0.0, len, tr, ts).is_err());
    }

    #[test]
    fn truncation_refinement_is_negligible() {
        let d = make_box(2, &[1.0, 2.0]).unwrap();
        let base = KernelEvaluator::new(&d).unwrap();
        let fine = KernelEvaluator::with_truncation(&d, Truncation { images: 12, modes: 10 }).unwrap();
        for &t in &[1e-3, 0.05, 0.1, 0.5, 3.0] {
            let x = [0.1, 1.7];
            let y = [0.8, 0.2];
            let a = base.kernel(&x, &y, t).unwrap();
            let b = fine.kernel(&x, &y, t).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn zero_normal_derivative() {
        let ev = KernelEvaluator::new(&unit_square()).unwrap();
        let y = [0.3, 0.6];
        let t = 0.02;
        for x2 in [0.1, 0.5] {
            let h = 1e-3;
            let c = (ev.kernel(&[h, x2], &y, t).unwrap() - ev.kernel(&[-h, x2], &y, t).unwrap()) / (2.0 * h);
            assert!(c.abs() < 1e-9);
            let one = |h: f64| (ev.kernel(&[h, x2], &y, t).unwrap() - ev.kernel(&[0.0, x2], &y, t).unwrap()) / h;
            assert!(one(h / 2.0).abs() < 0.6 * one(h).abs());
        }
    }

    #[test]
    fn hat_weights_sum_to_mass_and_match_quadrature() {
        let d = make_box(2, &[1.0, 1.0]).unwrap();
        let ev = KernelEvaluator::new(&d).unwrap();
        let nodes: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let c = QuadratureControl {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            ..Default::default()
        };
        for &t in &[2e-4, 1e-2, 0.2, 1.5] {
            for &x in &[0.0, 0.3, 0.55] {
                let w = ev.hat_weights(0, x, t, &nodes);
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12, "t={t} x={x}");
                for j in [0usize, 5, 9, 16] {
                    let hat = |y: f64| (1.0 - (y - nodes[j]).abs() * 16.0).max(0.0);
                    let q = integrate(|y| ev.axis(0, x, y, t) * hat(y), 0.0, 1.0, &nodes, &c)
                        .unwrap()
                        .value;
                    assert!((w[j] - q).abs() < 1e-11, "t={t} x={x} j={j}");
                }
            }
        }
        // sub-interval basis
        let sub: Vec<f64> = (4..=12).map(|i| i as f64 / 16.0).collect();
        let w = ev.hat_weights(0, 0.5, 0.01, &sub);
        let q = integrate(|y| ev.axis(0, 0.5, y, 0.01), 0.25, 0.75, &[0.5], &c).unwrap().value;
        assert!((w.iter().sum::<f64>() - q).abs() < 1e-12);
    }

    #[test]
    fn outer_product_order() {
        let v = outer(&[vec![1.0, 2.0], vec![10.0, 100.0, 1000.0]]);
        assert_eq!(v, vec![10.0, 20.0, 100.0, 200.0, 1000.0, 2000.0]);
    }

    #[test]
    fn initial_term_preserves_constants() {
        let d = make_box(3, &[1.0, 0.5, 2.0]).unwrap();
        let ev = KernelEvaluator::new(&d).unwrap();
        let g = Grid::new(&d, 0.125).unwrap();
        let samples = vec![2.5; g.len()];
        for &t in &[1e-3, 0.1, 4.0] {
            let v = ev.initial_term(&[0.2, 0.5, 1.3], t, &g, &samples).unwrap();
            assert!((v - 2.5).abs() < 1e-11);
        }
    }

    #[test]
    fn initial_term_evolves_cosine_mode() {
        let d = unit_square();
        let ev = KernelEvaluator::new(&d).unwrap();
        let g = Grid::new(&d, 1.0 / 128.0).unwrap();
        let f = |p: &[f64]| 2.0 + (PI * p[0]).cos() * (PI * p[1]).cos();
        let samples: Vec<f64> = (0..g.len()).map(|i| f(&g.coord(i))).collect();
        let x = [0.3, 0.8];
        let mut prev = f64::INFINITY;
        for j in 3..=10 {
            let t = 0.5f64.powi(j);
            let v = ev.initial_term(&x, t, &g, &samples).unwrap();
            let exact = 2.0 + (-2.0 * PI * PI * t).exp() * (PI * x[0]).cos() * (PI * x[1]).cos();
            assert!((v - exact).abs() < 1e-4, "t={t}");
            let recov = (v - f(&x)).abs();
            assert!(recov < prev);
            prev = recov;
        }
    }

    fn constant_history(g: &Grid, basis: &PatchBasis, times: &[f64], c: f64) -> RepFormulaInput {
        RepFormulaInput {
            grid: g.clone(),
            initial: vec![c; g.len()],
            basis: basis.clone(),
            times: times.to_vec(),
            history: vec![vec![0.0; basis.len()]; times.len()],
            q: 2.0,
        }
    }

    #[test]
    fn rep_formula_mass_property() {
        let d = unit_square();
        let ev = KernelEvaluator::new(&d).unwrap();
        let g = Grid::new(&d, 1.0 / 16.0).unwrap();
        let p = make_patch(&d, "y-", PatchShape::Rect { lo: vec![0.25], hi: vec![0.75] }).unwrap();
        let basis = PatchBasis::from_grid(&g, &p).unwrap();
        assert_eq!(basis.len(), 9);
        let times: Vec<f64> = (0..=10).map(|i| 0.01 * i as f64).collect();
        let input = constant_history(&g, &basis, &times, 1.7);
        for x in [[0.5, 0.0], [0.1, 0.9]] {
            let v = rep_formula_eval(&x, 0.1, &input, &ev).unwrap();
            assert!((v - 1.7).abs() < 1e-11);
        }
        assert!(rep_formula_eval(&[0.5, 0.5], 0.2, &input, &ev).is_err());
    }

    #[test]
    fn patch_time_integral_matches_free_space_for_short_times() {
        // far from other walls the Neumann kernel on the wall is twice the free-space one
        let d = make_box(2, &[4.0, 4.0]).unwrap();
        let ev = KernelEvaluator::new(&d).unwrap();
        let g = Grid::new(&d, 1.0 / 32.0).unwrap();
        let p = make_patch(&d, "y-", PatchShape::Rect { lo: vec![1.75], hi: vec![2.25] }).unwrap();
        let basis = PatchBasis::from_grid(&g, &p).unwrap();
        let times = vec![0.0, 0.01, 0.02];
        let mut input = constant_history(&g, &basis, &times, 0.0);
        input.q = 1.0;
        input.history = vec![vec![1.0; basis.len()]; times.len()];
        let x = [2.0, 0.0];
        let v = rep_formula_eval(&x, 0.02, &input, &ev).unwrap();
        let want = 2.0
            * crate::freespace::boundary_time_integral(&x, &p, 0.02, &QuadratureControl::default())
                .unwrap()
                .value;
        assert!((v - want).abs() < 1e-6 * want, "{v} vs {want}");
    }

    #[test]
    fn gaussian_ratio_limits() {
        for n in [2usize, 3] {
            let d = make_box(n, &vec![1.0; n]).unwrap();
            let ev = KernelEvaluator::new(&d).unwrap();
            let c = vec![0.5; n];
            let r = gaussian_ratio(&ev, &c, &c, 1e-3).unwrap();
            assert!((r / 2f64.powf(n as f64 / 2.0) - 1.0).abs() < 1e-2);
            let z = vec![0.0; n];
            let r = gaussian_ratio(&ev, &z, &z, 1e-6).unwrap();
            assert!((r / 2f64.powf(1.5 * n as f64) - 1.0).abs() < 1e-6);
        }
    }
}
