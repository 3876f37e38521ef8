//! Finite-volume and boundary-integral solvers, blow-up time estimation and
//! growth-rate diagnostics.

pub mod blowup;
pub mod fd;
pub mod growth;
pub mod volterra;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPatch, Domain, Grid};

pub use blowup::{estimate_blowup_time, BlowupEstimate, FitStatus};
pub use fd::{solve_fd, FdOperator};
pub use growth::{critical_growth_check, growth_rate_check, GrowthTable};
pub use volterra::{solve_volterra, VolterraControl};

pub type Profile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum InitialData {
    Constant(f64),
    Profile(Profile),
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Constant(c) => write!(f, "Constant({c})"),
            InitialData::Profile(_) => write!(f, "Profile(..)"),
        }
    }
}

/// One instance of the radiation problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub domain: Domain,
    pub patch: BoundaryPatch,
    pub q: f64,
    pub initial: InitialData,
}

impl Problem {
    pub fn new(domain: Domain, patch: BoundaryPatch, q: f64, initial: InitialData) -> Result<Self> {
        if !(q > 1.0) {
            return Err(Error::PreconditionViolated(format!("exponent q = {q} must exceed 1")));
        }
        if let InitialData::Constant(c) = initial {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::PreconditionViolated(format!("initial value {c} must be >= 0")));
            }
        }
        Ok(Problem {
            domain,
            patch,
            q,
            initial,
        })
    }

    pub fn constant(domain: Domain, patch: BoundaryPatch, q: f64, m0: f64) -> Result<Self> {
        Self::new(domain, patch, q, InitialData::Constant(m0))
    }

    /// Initial data on the grid; zero at nodes outside the domain.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let v: Vec<f64> = (0..grid.len())
            .map(|i| {
                let p = grid.coord(i);
                if !self.domain.contains_closed(&p) {
                    return 0.0;
                }
                match &self.initial {
                    InitialData::Constant(c) => *c,
                    InitialData::Profile(f) => f(&p),
                }
            })
            .collect();
        if v.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::PreconditionViolated("initial data must be nonnegative".into()));
        }
        Ok(v)
    }

    /// `M0`, the largest initial sample.
    pub fn m0(&self, grid: &Grid) -> Result<f64> {
        Ok(self.sample(grid)?.into_iter().fold(0.0, f64::max))
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.initial {
            InitialData::Constant(c) => Some(c),
            InitialData::Profile(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveControl {
    /// Blow-up threshold on the running maximum.
    pub m_stop: f64,
    /// Fraction of the stability limit used for the time step, in (0, 1).
    pub safety: f64,
    pub max_steps: usize,
    pub dt_floor: f64,
    /// Record the trace at least every `cadence` steps.
    pub cadence: usize,
    /// Also record whenever the maximum has grown by this relative amount.
    pub record_growth: f64,
    pub t_end: Option<f64>,
    /// Times at which the full field is stored; the stepper lands on them exactly.
    pub sample_times: Vec<f64>,
    /// Replace the radiation flux by zero (pure Neumann problem).
    pub zero_flux: bool,
}

impl SolveControl {
    pub fn for_m0(m0: f64) -> Self {
        SolveControl {
            m_stop: 1e4 * m0,
            safety: 0.9,
            max_steps: 200_000_000,
            dt_floor: 1e-15,
            cadence: 500,
            record_growth: 0.01,
            t_end: None,
            sample_times: Vec::new(),
            zero_flux: false,
        }
    }

    pub fn validate(&self, m0: f64) -> Result<()> {
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(Error::PreconditionViolated("safety factor must lie in (0, 1)".into()));
        }
        if !(self.m_stop > 10.0 * m0) {
            return Err(Error::PreconditionViolated(format!(
                "threshold {} must exceed 10 M0 = {}",
                self.m_stop,
                10.0 * m0
            )));
        }
        if self.cadence == 0 {
            return Err(Error::PreconditionViolated("cadence must be positive".into()));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::PreconditionViolated("sample times must increase".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub dt: f64,
    /// Running maximum of the solution.
    pub m: f64,
    /// Maximum over the radiating patch nodes.
    pub boundary_max: f64,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    ThresholdReached,
    EndTime,
    MaxSteps,
    StepRejected,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ThresholdReached => "threshold",
            Termination::EndTime => "end_time",
            Termination::MaxSteps => "max_steps",
            Termination::StepRejected => "step_rejected",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// Field on the grid, grid flat order.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub trace: Vec<TracePoint>,
    /// Coordinates of the patch nodes whose values are traced.
    pub patch_points: Vec<Vec<f64>>,
    /// `boundary_values[k]`: patch node values at `trace[k].t`.
    pub boundary_values: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub blowup: Option<BlowupEstimate>,
    pub termination: Termination,
    pub steps: usize,
    /// Smallest value seen over all nodes and steps.
    pub min_value: f64,
}

impl SolveResult {
    pub fn times(&self) -> Vec<f64> {
        self.trace.iter().map(|p| p.t).collect()
    }

    pub fn maxima(&self) -> Vec<f64> {
        self.trace.iter().map(|p| p.m).collect()
    }

    /// Running maximum at time `t` by linear interpolation of the trace.
    pub fn m_at(&self, t: f64) -> Option<f64> {
        interpolate(&self.times(), &self.maxima(), t)
    }

    pub fn t_star(&self) -> Option<f64> {
        self.blowup.as_ref().map(|b| b.t_star)
    }
}

/// Piecewise-linear interpolation on increasing abscissae; `None` outside the range.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if xs.is_empty() || x < xs[0] || x > *xs.last().unwrap() {
        return None;
    }
    let k = xs.partition_point(|v| *v <= x);
    if k == 0 {
        return Some(ys[0]);
    }
    if k >= xs.len() {
        return Some(*ys.last().unwrap());
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x1 == x0 {
        return Some(ys[k]);
    }
    let th = (x - x0) / (x1 - x0);
    Some((1.0 - th) * ys[k - 1] + th * ys[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_box, make_patch, PatchShape};

    #[test]
    fn interpolation() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [0.0, 2.0, 6.0];
        assert_eq!(interpolate(&xs, &ys, 2.0), Some(4.0));
        assert_eq!(interpolate(&xs, &ys, 3.0), Some(6.0));
        assert_eq!(interpolate(&xs, &ys, 3.5), None);
    }

    #[test]
    fn problem_guards() {
        let d = make_box(2, &[1.0, 1.0]).unwrap();
        let p = make_patch(&d, "y-", PatchShape::Rect { lo: vec![0.25], hi: vec![0.75] }).unwrap();
        assert!(Problem::constant(d.clone(), p.clone(), 1.0, 1.0).is_err());
        assert!(Problem::constant(d.clone(), p.clone(), 2.0, -1.0).is_err());
        let pr = Problem::new(d.clone(), p, 2.0, InitialData::Profile(Arc::new(|x: &[f64]| x[0]))).unwrap();
        let g = Grid::new(&d, 0.25).unwrap();
        assert_eq!(pr.m0(&g).unwrap(), 1.0);
        let mut c = SolveControl::for_m0(1.0);
        assert!(c.validate(1.0).is_ok());
        c.m_stop = 5.0;
        assert!(c.validate(1.0).is_err());
    }
}
