//! JSON run configuration with a strict schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_box, make_lshape, make_patch, BoundaryPatch, Domain, PatchShape};
use crate::solver::{Problem, SolveControl};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub domain: DomainConfig,
    pub patch: PatchConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainShape {
    Box,
    Lshape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainShape,
    /// Box side lengths, or the two arm lengths of the L.
    pub extents: Vec<f64>,
    #[serde(default)]
    pub thickness: Option<f64>,
}

/// A rectangle (`lo`, `hi`) or a disk (`center`, `radius`) in face coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub face: String,
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub q: f64,
    pub m0: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig { q: 2.0, m0: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fd,
    Volterra,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: Method,
    /// Grid spacing (the coarsest used by a sweep).
    pub h: f64,
    /// Threshold as a multiple of `M0`.
    pub m_stop_factor: f64,
    pub safety: f64,
    pub max_steps: usize,
    pub cadence: usize,
    pub t_end: Option<f64>,
    /// Uniform step of the boundary integral marcher.
    pub volterra_dt: f64,
    /// Also solve at `2h` to report the grid-convergence increment.
    pub convergence_run: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Fd,
            h: 1.0 / 32.0,
            m_stop_factor: 1e4,
            safety: 0.9,
            max_steps: 200_000_000,
            cadence: 500,
            t_end: None,
            volterra_dt: 1e-3,
            convergence_run: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    /// Fixed general constant; calibrated from the sweep when absent.
    pub c_general: Option<f64>,
    /// Fixed critical constant; calibrated from the sweep when absent.
    pub c_critical: Option<f64>,
    /// Sweep row used for calibration; defaults to the row where each bound is tightest.
    pub baseline: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    M0,
    Gamma1Area,
    Q,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::M0 => "M0",
            SweepVariable::Gamma1Area => "gamma1_area",
            SweepVariable::Q => "q",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Refine `h` by halving until the patch spans this many cells.
    #[serde(default)]
    pub min_patch_cells: Option<usize>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| Error::Config(e.to_string());
        let domain = self.domain().map_err(as_config)?;
        self.patch(&domain).map_err(as_config)?;
        if !(self.problem.q > 1.0) || !(self.problem.m0 > 0.0) {
            return Err(Error::Config("problem needs q > 1 and m0 > 0".into()));
        }
        let s = &self.solver;
        if !(s.h > 0.0 && s.safety > 0.0 && s.safety < 1.0 && s.m_stop_factor > 10.0 && s.volterra_dt > 0.0) {
            return Err(Error::Config("solver settings out of range".into()));
        }
        if let Some(sw) = &self.sweep {
            if sw.values.len() < 4 {
                return Err(Error::Config("a sweep needs at least 4 values".into()));
            }
            let up = sw.values.windows(2).all(|w| w[1] > w[0]);
            let down = sw.values.windows(2).all(|w| w[1] < w[0]);
            if !(up || down) {
                return Err(Error::Config("sweep values must be strictly monotone".into()));
            }
            let valid = |v: f64| match sw.variable {
                SweepVariable::M0 | SweepVariable::Gamma1Area => v > 0.0,
                SweepVariable::Q => v > 1.0,
            };
            if !sw.values.iter().all(|v| valid(*v)) {
                return Err(Error::Config(format!("value out of range for {}", sw.variable.name())));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain> {
        match self.domain.kind {
            DomainShape::Box => make_box(self.domain.extents.len(), &self.domain.extents),
            DomainShape::Lshape => {
                let e = &self.domain.extents;
                if e.len() != 2 {
                    return Err(Error::InvalidGeometry("an L-shape takes two arm lengths".into()));
                }
                let w = self
                    .domain
                    .thickness
                    .ok_or_else(|| Error::InvalidGeometry("an L-shape needs a thickness".into()))?;
                make_lshape([e[0], e[1]], w)
            }
        }
    }

    pub fn patch_shape(&self) -> Result<PatchShape> {
        let p = &self.patch;
        match (&p.lo, &p.hi, &p.center, p.radius) {
            (Some(lo), Some(hi), None, None) => Ok(PatchShape::Rect {
                lo: lo.clone(),
                hi: hi.clone(),
            }),
            (None, None, Some(c), Some(r)) => Ok(PatchShape::Disk {
                center: c.clone(),
                radius: r,
            }),
            _ => Err(Error::InvalidGeometry(
                "patch needs either lo and hi, or center and radius".into(),
            )),
        }
    }

    pub fn patch(&self, domain: &Domain) -> Result<BoundaryPatch> {
        make_patch(domain, &self.patch.face, self.patch_shape()?)
    }

    pub fn problem(&self) -> Result<Problem> {
        let domain = self.domain()?;
        let patch = self.patch(&domain)?;
        Problem::constant(domain, patch, self.problem.q, self.problem.m0)
    }

    pub fn control(&self, m0: f64) -> SolveControl {
        let s = &self.solver;
        SolveControl {
            m_stop: s.m_stop_factor * m0,
            safety: s.safety,
            max_steps: s.max_steps,
            cadence: s.cadence,
            t_end: s.t_end,
            ..SolveControl::for_m0(m0)
        }
    }
}
