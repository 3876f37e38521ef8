//! Explicit finite-volume stepper on dual cells of a tensor grid.
//!
//! Each node owns the part of its dual cell lying in the domain. Fluxes through dual
//! faces give the five/seven-point Laplacian in the interior and the ghost-node
//! boundary closure on flat faces. The radiation flux enters through the part of the
//! dual cell boundary covered by the patch, so a node on the patch edge receives half
//! the flux of an interior patch node.

use crate::error::{Error, Result};
use crate::geometry::{Grid, NodeClass};
use crate::solver::{
    blowup::estimate_blowup_time, Problem, SolveControl, SolveResult, Snapshot, Termination, TracePoint,
};

#[derive(Clone, Debug)]
pub struct FdOperator {
    pub grid: Grid,
    n: usize,
    /// Padded index of every active node.
    active: Vec<usize>,
    /// `2n` neighbour coefficients per active node: axis-major, minus side first.
    coeff: Vec<f64>,
    /// Padded-array offsets matching the coefficient order.
    offsets: Vec<isize>,
    /// Dual-cell volume per padded index.
    volume: Vec<f64>,
    /// Radiation coefficient `|dual boundary ∩ patch| / volume` per padded index.
    sources: Vec<(usize, f64)>,
    /// Padded index of each grid node.
    padded_of: Vec<usize>,
    padded_len: usize,
    patch_nodes: Vec<usize>,
}

impl FdOperator {
    pub fn new(problem: &Problem, grid: &Grid) -> Result<Self> {
        let domain = &problem.domain;
        let patch = &problem.patch;
        let n = grid.n();
        if n != domain.n() {
            return Err(Error::InvalidGeometry("grid and domain dimensions differ".into()));
        }
        let dims: Vec<usize> = grid.counts.iter().map(|c| c + 2).collect();
        let mut strides = vec![1usize; n];
        for a in 1..n {
            strides[a] = strides[a - 1] * dims[a - 1];
        }
        let padded_len: usize = dims.iter().product();
        let h = &grid.spacing;
        let tol = 1e-9 * grid.min_spacing();
        let quadrants: Vec<Vec<f64>> = (0..1usize << n)
            .map(|mask| (0..n).map(|a| if mask >> a & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        let half_cell: f64 = h.iter().map(|v| 0.5 * v).product();

        let mut active = Vec::new();
        let mut coeff = Vec::new();
        let mut volume = vec![0.0; padded_len];
        let mut sources = Vec::new();
        let mut padded_of = Vec::with_capacity(grid.len());
        let mut offsets = Vec::with_capacity(2 * n);
        for a in 0..n {
            offsets.push(-(strides[a] as isize));
            offsets.push(strides[a] as isize);
        }

        for flat in 0..grid.len() {
            let idx = grid.multi_index(flat);
            let pidx: usize = idx.iter().zip(&strides).map(|(i, s)| (i + 1) * s).sum();
            padded_of.push(pidx);
            let p = grid.coord(flat);
            let inside = |sig: &[f64], shift: Option<(usize, f64)>| {
                let c: Vec<f64> = (0..n)
                    .map(|b| {
                        let base = p[b] + 0.25 * sig[b] * h[b];
                        match shift {
                            Some((a, s)) if a == b => base + s * h[b],
                            _ => base,
                        }
                    })
                    .collect();
                domain.contains_open(&c)
            };
            let ins: Vec<bool> = quadrants.iter().map(|s| inside(s, None)).collect();
            let vol = half_cell * ins.iter().filter(|b| **b).count() as f64;
            if vol == 0.0 {
                continue;
            }
            volume[pidx] = vol;
            active.push(pidx);
            let mut flux_len = 0.0;
            for a in 0..n {
                let face_piece: f64 = (0..n).filter(|b| *b != a).map(|b| 0.5 * h[b]).product();
                for side in [-1.0, 1.0] {
                    let mut area = 0.0;
                    for (qi, sig) in quadrants.iter().enumerate() {
                        if sig[a] != side || !ins[qi] {
                            continue;
                        }
                        let mut nsig = sig.clone();
                        nsig[a] = -side;
                        if inside(&nsig, Some((a, side))) {
                            area += face_piece;
                        }
                    }
                    coeff.push(area / (h[a] * vol));
                }
            }
            // boundary pieces of the dual cell lie on the grid lines through the node
            for (qi, sig) in quadrants.iter().enumerate() {
                if !ins[qi] {
                    continue;
                }
                for a in 0..n {
                    let mut mirror = sig.clone();
                    mirror[a] = -sig[a];
                    let mi = quadrants.iter().position(|s| *s == mirror).unwrap();
                    if ins[mi] {
                        continue;
                    }
                    let face = &patch.face;
                    if face.normal_axis != a
                        || (face.offset - p[a]).abs() > tol
                        || face.outward != -sig[a]
                    {
                        continue;
                    }
                    let (lo, hi): (Vec<f64>, Vec<f64>) = face
                        .tangent_axes
                        .iter()
                        .map(|&b| {
                            let e = p[b] + 0.5 * sig[b] * h[b];
                            (p[b].min(e), p[b].max(e))
                        })
                        .unzip();
                    flux_len += patch.overlap(&lo, &hi)?;
                }
            }
            if flux_len > 0.0 {
                sources.push((pidx, flux_len / vol));
            }
        }
        // neighbours outside the grid never carry weight
        let classes = grid.classify(domain, patch);
        let patch_nodes = (0..grid.len())
            .filter(|&i| matches!(classes[i], NodeClass::Gamma1 | NodeClass::Interface))
            .collect();
        Ok(FdOperator {
            grid: grid.clone(),
            n,
            active,
            coeff,
            offsets,
            volume,
            sources,
            padded_of,
            padded_len,
            patch_nodes,
        })
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Grid flat indices of the closed patch nodes.
    pub fn patch_nodes(&self) -> &[usize] {
        &self.patch_nodes
    }

    /// Total radiating length (area) seen by the scheme, `sum V_i b_i`.
    pub fn radiating_measure(&self) -> f64 {
        self.sources.iter().map(|(i, b)| b * self.volume[*i]).sum()
    }

    pub fn total_volume(&self) -> f64 {
        self.volume.iter().sum()
    }

    pub fn pad(&self, field: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.padded_len];
        for (f, &p) in field.iter().zip(&self.padded_of) {
            u[p] = *f;
        }
        u
    }

    pub fn unpad(&self, u: &[f64]) -> Vec<f64> {
        self.padded_of.iter().map(|&p| u[p]).collect()
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        self.active.iter().map(|&i| self.volume[i] * u[i]).sum()
    }

    /// Largest diagonal stencil weight `sum_j c_ij`.
    pub fn max_diagonal(&self) -> f64 {
        let d = 2 * self.n;
        self.coeff
            .chunks_exact(d)
            .map(|c| c.iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// One explicit Euler step `next = u + dt (L u + b u^q)`.
    pub fn step(&self, u: &[f64], next: &mut [f64], dt: f64, q: f64, radiate: bool) {
        match self.n {
            2 => self.diffuse::<4>(u, next, dt),
            _ => self.diffuse::<6>(u, next, dt),
        }
        if radiate {
            for &(i, b) in &self.sources {
                next[i] += dt * b * u[i].powf(q);
            }
        }
    }

    fn diffuse<const D: usize>(&self, u: &[f64], next: &mut [f64], dt: f64) {
        let mut off = [0isize; D];
        off.copy_from_slice(&self.offsets[..D]);
        for (&i, c) in self.active.iter().zip(self.coeff.chunks_exact(D)) {
            let ui = u[i];
            let mut acc = 0.0;
            for d in 0..D {
                acc += c[d] * (u[(i as isize + off[d]) as usize] - ui);
            }
            next[i] = ui + dt * acc;
        }
    }

    fn extrema(&self, u: &[f64]) -> (f64, f64, bool) {
        let mut mx = f64::NEG_INFINITY;
        let mut mn = f64::INFINITY;
        let mut finite = true;
        for &i in &self.active {
            let v = u[i];
            finite &= v.is_finite();
            mx = mx.max(v);
            mn = mn.min(v);
        }
        (mx, mn, finite)
    }
}

/// Explicit time stepping until the running maximum reaches the threshold, the end time
/// or the step cap.
pub fn solve_fd(problem: &Problem, grid: &Grid, control: &SolveControl) -> Result<SolveResult> {
    let op = FdOperator::new(problem, grid)?;
    let u0 = problem.sample(grid)?;
    solve_with_operator(&op, problem.q, &u0, control)
}

pub fn solve_with_operator(
    op: &FdOperator,
    q: f64,
    u0: &[f64],
    control: &SolveControl,
) -> Result<SolveResult> {
    let grid = &op.grid;
    let m0 = u0.iter().cloned().fold(0.0, f64::max);
    control.validate(m0)?;
    if !control.zero_flux && op.patch_nodes.len() < 4 {
        return Err(Error::PreconditionViolated(format!(
            "grid resolves the patch by {} nodes; at least 4 needed",
            op.patch_nodes.len()
        )));
    }
    let n = grid.n() as f64;
    let h = grid.min_spacing();
    let dt_diff = control.safety * h * h / (2.0 * n);
    let radiate = !control.zero_flux;

    let mut u = op.pad(u0);
    let mut next = u.clone();
    let patch_padded: Vec<usize> = op.patch_nodes.iter().map(|&i| op.padded_of[i]).collect();
    let patch_points: Vec<Vec<f64>> = op.patch_nodes.iter().map(|&i| grid.coord(i)).collect();

    let (mut running, mut min_value, _) = op.extrema(&u);
    running = running.max(0.0);
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut trace = Vec::new();
    let mut boundary_values = Vec::new();
    let mut snapshots = Vec::new();
    let mut samples = control.sample_times.iter().copied().filter(|s| *s > 0.0).peekable();
    if control.sample_times.first() == Some(&0.0) {
        snapshots.push(Snapshot {
            t: 0.0,
            values: u0.to_vec(),
        });
    }

    let record = |u: &[f64], t: f64, dt: f64, m: f64, trace: &mut Vec<TracePoint>, bv: &mut Vec<Vec<f64>>| {
        let vals: Vec<f64> = patch_padded.iter().map(|&i| u[i]).collect();
        let bmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        trace.push(TracePoint {
            t,
            dt,
            m,
            boundary_max: bmax,
            mass: op.mass(u),
        });
        bv.push(vals);
    };
    record(&u, 0.0, 0.0, running, &mut trace, &mut boundary_values);
    let mut last_recorded = running;
    let mut last_step = 0usize;

    let termination = loop {
        if radiate && running >= control.m_stop {
            break Termination::ThresholdReached;
        }
        if let Some(te) = control.t_end {
            if t >= te * (1.0 - 1e-14) {
                break Termination::EndTime;
            }
        }
        if steps >= control.max_steps {
            break Termination::MaxSteps;
        }
        let mut dt = dt_diff;
        if radiate && running > 0.0 {
            dt = dt.min(control.safety * h / (2.0 * q * running.powf(q - 1.0)));
        }
        let mut hit_sample = false;
        if let Some(&s) = samples.peek() {
            if t + dt >= s {
                dt = s - t;
                hit_sample = true;
            }
        }
        if let Some(te) = control.t_end {
            if t + dt > te {
                dt = te - t;
            }
        }
        if dt < control.dt_floor {
            if hit_sample && dt >= 0.0 {
                // sample time already reached up to rounding
                samples.next();
                snapshots.push(Snapshot {
                    t,
                    values: op.unpad(&u),
                });
                continue;
            }
            return Err(Error::StiffnessFailure { t, dt });
        }
        op.step(&u, &mut next, dt, q, radiate);
        std::mem::swap(&mut u, &mut next);
        t += dt;
        steps += 1;
        let (mx, mn, finite) = op.extrema(&u);
        if !finite {
            return Err(Error::NumericalBlowupArtifact { t });
        }
        running = running.max(mx);
        min_value = min_value.min(mn);
        if hit_sample {
            let s = samples.next().unwrap();
            t = s;
            snapshots.push(Snapshot {
                t,
                values: op.unpad(&u),
            });
        }
        if hit_sample
            || steps - last_step >= control.cadence
            || running >= last_recorded * (1.0 + control.record_growth) && running > 0.0
        {
            record(&u, t, dt, running, &mut trace, &mut boundary_values);
            last_recorded = running;
            last_step = steps;
        }
    };
    if trace.last().map(|p| p.t) != Some(t) {
        let dt = trace.last().map(|p| t - p.t).unwrap_or(0.0);
        record(&u, t, dt, running, &mut trace, &mut boundary_values);
    }
    let blowup = if termination == Termination::ThresholdReached {
        let times: Vec<f64> = trace.iter().map(|p| p.t).collect();
        let maxima: Vec<f64> = trace.iter().map(|p| p.m).collect();
        Some(estimate_blowup_time(&times, &maxima, control.m_stop)?)
    } else {
        None
    };
    Ok(SolveResult {
        trace,
        patch_points,
        boundary_values,
        snapshots,
        blowup,
        termination,
        steps,
        min_value,
    })
}
