//! Time marching of the boundary integral equation on the patch nodes.
//!
//! The boundary values solve `u(x,t) = (N * u0)(x,t) + int_0^t int_patch N(x,y,t-tau) u^q dS dtau`
//! for `x` on the patch. With `u^q` linear in `tau` on a uniform mesh and hat functions in
//! space, each lag panel reduces to two fixed matrices applied to consecutive history levels.

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::kernel::{KernelEvaluator, PatchBasis};
use crate::quadrature::GaussRule;
use crate::solver::{
    blowup::estimate_blowup_time, Problem, SolveResult, Termination, TracePoint,
};

const GAUSS_POINTS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct VolterraControl {
    /// Initial uniform step.
    pub dt: f64,
    pub t_end: f64,
    pub m_stop: f64,
    /// How often the whole march may restart with a halved step.
    pub max_restarts: usize,
    /// Drop the boundary source (linear check).
    pub zero_source: bool,
}

impl VolterraControl {
    pub fn new(dt: f64, t_end: f64, m_stop: f64) -> Self {
        VolterraControl {
            dt,
            t_end,
            m_stop,
            max_restarts: 4,
            zero_source: false,
        }
    }
}

/// Panel matrices for lags `[p dt, (p+1) dt]`, row-major `J x J`.
struct Panels {
    dt: f64,
    near: Vec<Vec<f64>>,
    far: Vec<Vec<f64>>,
}

impl Panels {
    fn extend_to(&mut self, lags: usize, targets: &[Vec<f64>], basis: &PatchBasis, ev: &KernelEvaluator) {
        let rule = GaussRule::new(GAUSS_POINTS);
        let piece = 0.5 * basis.min_spacing();
        let j = basis.len();
        while self.near.len() < lags {
            let p = self.near.len() as f64;
            let (lo, hi) = (p * self.dt, (p + 1.0) * self.dt);
            let (s_lo, s_hi) = (lo.sqrt(), hi.sqrt());
            let pieces = ((s_hi - s_lo) / piece).ceil().max(1.0) as usize;
            let ds = (s_hi - s_lo) / pieces as f64;
            let mut near = vec![0.0; j * j];
            let mut far = vec![0.0; j * j];
            for k in 0..pieces {
                let a = s_lo + k as f64 * ds;
                for (s, w) in rule.points(a, a + ds) {
                    let sigma = s * s;
                    let wn = (hi - sigma) / self.dt;
                    let wf = (sigma - lo) / self.dt;
                    for (i, x) in targets.iter().enumerate() {
                        let pw = ev.patch_weights(x, sigma, basis);
                        let row = i * j;
                        for (c, v) in pw.iter().enumerate() {
                            let g = w * 2.0 * s * v;
                            near[row + c] += wn * g;
                            far[row + c] += wf * g;
                        }
                    }
                }
            }
            self.near.push(near);
            self.far.push(far);
        }
    }
}

fn apply(out: &mut [f64], m: &[f64], v: &[f64]) {
    let j = v.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(j)) {
        *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// March the boundary values with a uniform step, restarting with half the step when the
/// single correction pass changes the prediction by more than half.
pub fn solve_volterra(
    problem: &Problem,
    ev: &KernelEvaluator,
    grid: &Grid,
    control: &VolterraControl,
) -> Result<SolveResult> {
    if !problem.domain.is_box() {
        return Err(Error::PreconditionViolated("boundary integral marching needs a box".into()));
    }
    if !(control.dt > 0.0 && control.t_end > 0.0) {
        return Err(Error::PreconditionViolated("step and end time must be positive".into()));
    }
    let basis = PatchBasis::from_grid(grid, &problem.patch)?;
    if basis.len() < 4 {
        return Err(Error::PreconditionViolated("patch resolved by fewer than 4 nodes".into()));
    }
    let u0 = problem.sample(grid)?;
    let mut dt = control.dt;
    for _ in 0..=control.max_restarts {
        match march(problem, ev, grid, &basis, &u0, dt, control) {
            Err(Error::StepRejected { .. }) => dt *= 0.5,
            other => return other,
        }
    }
    Err(Error::StepRejected {
        t: 0.0,
        update: f64::NAN,
    })
}

fn march(
    problem: &Problem,
    ev: &KernelEvaluator,
    grid: &Grid,
    basis: &PatchBasis,
    u0: &[f64],
    dt: f64,
    control: &VolterraControl,
) -> Result<SolveResult> {
    let q = problem.q;
    let j = basis.len();
    let targets: Vec<Vec<f64>> = (0..j).map(|i| basis.point(i)).collect();
    let constant = problem.constant_value();
    let initial_at = |t: f64| -> Result<Vec<f64>> {
        match constant {
            Some(c) => Ok(vec![c; j]),
            None => targets.iter().map(|x| ev.initial_term(x, t, grid, u0)).collect(),
        }
    };
    let start: Vec<f64> = targets
        .iter()
        .map(|x| {
            let idx: Vec<usize> = x
                .iter()
                .zip(&grid.spacing)
                .map(|(c, h)| (c / h).round() as usize)
                .collect();
            u0[grid.flat_index(&idx)]
        })
        .collect();
    let mut panels = Panels {
        dt,
        near: Vec::new(),
        far: Vec::new(),
    };
    let source = |u: &[f64]| -> Vec<f64> {
        if control.zero_source {
            vec![0.0; u.len()]
        } else {
            u.iter().map(|v| v.max(0.0).powf(q)).collect()
        }
    };
    let mut history = vec![start.clone()];
    let mut g = vec![source(&start)];
    let mut running = start.iter().cloned().fold(0.0, f64::max);
    let bmax = |u: &[f64]| u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut trace = vec![TracePoint {
        t: 0.0,
        dt: 0.0,
        m: running,
        boundary_max: bmax(&start),
        mass: f64::NAN,
    }];
    let steps_total = (control.t_end / dt - 1e-9).ceil() as usize;
    let mut termination = Termination::EndTime;
    for k in 1..=steps_total {
        if running >= control.m_stop {
            termination = Termination::ThresholdReached;
            break;
        }
        let t = k as f64 * dt;
        panels.extend_to(k, &targets, basis, ev);
        // everything except the unknown level k
        let mut known = initial_at(t)?;
        apply(&mut known, &panels.far[0], &g[k - 1]);
        for p in 1..k {
            apply(&mut known, &panels.near[p], &g[k - p]);
            apply(&mut known, &panels.far[p], &g[k - p - 1]);
        }
        let mut pred = known.clone();
        apply(&mut pred, &panels.near[0], &g[k - 1]);
        let mut corr = known;
        apply(&mut corr, &panels.near[0], &source(&pred));
        let update = corr
            .iter()
            .zip(&pred)
            .map(|(c, p)| (c - p).abs() / p.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if update > 0.5 {
            return Err(Error::StepRejected { t, update });
        }
        if corr.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowupArtifact { t });
        }
        running = running.max(bmax(&corr));
        trace.push(TracePoint {
            t,
            dt,
            m: running,
            boundary_max: bmax(&corr),
            mass: f64::NAN,
        });
        g.push(source(&corr));
        history.push(corr);
    }
    if termination == Termination::EndTime && running >= control.m_stop {
        termination = Termination::ThresholdReached;
    }
    let blowup = if termination == Termination::ThresholdReached {
        let times: Vec<f64> = trace.iter().map(|p| p.t).collect();
        let maxima: Vec<f64> = trace.iter().map(|p| p.m).collect();
        Some(estimate_blowup_time(&times, &maxima, control.m_stop)?)
    } else {
        None
    };
    let steps = trace.len() - 1;
    Ok(SolveResult {
        trace,
        patch_points: targets,
        boundary_values: history,
        snapshots: Vec::new(),
        blowup,
        termination,
        steps,
        min_value: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_box, make_patch, PatchShape};

    fn setup(m0: f64) -> (Problem, KernelEvaluator, Grid) {
        let d = make_box(2, &[1.0, 1.0]).unwrap();
        let p = make_patch(&d, "y-", PatchShape::Rect { lo: vec![0.25], hi: vec![0.75] }).unwrap();
        let ev = KernelEvaluator::new(&d).unwrap();
        let g = Grid::new(&d, 1.0 / 16.0).unwrap();
        (Problem::constant(d, p, 2.0, m0).unwrap(), ev, g)
    }

    #[test]
    fn zero_source_returns_initial_term() {
        let (pr, ev, g) = setup(1.0);
        let mut c = VolterraControl::new(0.01, 0.05, 1e4);
        c.zero_source = true;
        let r = solve_volterra(&pr, &ev, &g, &c).unwrap();
        for row in &r.boundary_values {
            assert!(row.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn boundary_trace_increases() {
        let (pr, ev, g) = setup(1.0);
        let r = solve_volterra(&pr, &ev, &g, &VolterraControl::new(0.005, 0.2, 1e4)).unwrap();
        assert_eq!(r.termination, Termination::EndTime);
        for w in r.boundary_values.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!(b >= a);
            }
        }
        assert!(r.trace.last().unwrap().m > 1.5);
    }
}
