//! Parameter sweeps: one solve per value, bounds per row, calibration of the constants.

use rayon::prelude::*;

use crate::bounds::{critical_formula, general_shape, upper_bound_constant, y_quantity};
use crate::error::{Error, Result};
use crate::experiments::config::{Config, Method, SweepVariable};
use crate::geometry::{make_patch, Grid, PatchShape};
use crate::kernel::KernelEvaluator;
use crate::solver::{solve_fd, solve_volterra, Problem, SolveResult, VolterraControl};

/// Finest spacing the grid policy will go to.
const MIN_SPACING: f64 = 1.0 / 1024.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub q: f64,
    pub m0: f64,
    pub gamma1_area: f64,
    pub h: f64,
    pub t_star: Option<f64>,
    pub bracket_lo: Option<f64>,
    pub bracket_hi: Option<f64>,
    pub beta: Option<f64>,
    pub fit_r2: Option<f64>,
    /// `|T*(h) - T*(2h)|` when a convergence run was made.
    pub increment: Option<f64>,
    pub upper_bound: Option<f64>,
    pub lower_general: Option<f64>,
    pub y: f64,
    pub lower_critical: Option<f64>,
    pub regime: &'static str,
    pub termination: String,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.t_star.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub c_general: f64,
    pub c_critical: f64,
    pub c_star: f64,
    pub y0: f64,
    pub baseline_general: Option<usize>,
    pub baseline_critical: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub n: usize,
    pub rows: Vec<SweepRow>,
    pub calibration: Calibration,
}

/// Problem and grid spacing for one sweep value.
pub fn point_problem(cfg: &Config, variable: SweepVariable, value: f64) -> Result<(Problem, f64)> {
    let domain = cfg.domain()?;
    let mut q = cfg.problem.q;
    let mut m0 = cfg.problem.m0;
    let patch = match variable {
        SweepVariable::M0 => {
            m0 = value;
            cfg.patch(&domain)?
        }
        SweepVariable::Q => {
            q = value;
            cfg.patch(&domain)?
        }
        SweepVariable::Gamma1Area => {
            let shape = match cfg.patch_shape()? {
                PatchShape::Rect { lo, hi } => {
                    let side = value.powf(1.0 / lo.len() as f64);
                    let centre: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                    PatchShape::Rect {
                        lo: centre.iter().map(|c| c - 0.5 * side).collect(),
                        hi: centre.iter().map(|c| c + 0.5 * side).collect(),
                    }
                }
                PatchShape::Disk { center, .. } => PatchShape::Disk {
                    center,
                    radius: (value / std::f64::consts::PI).sqrt(),
                },
            };
            make_patch(&domain, &cfg.patch.face, shape)?
        }
    };
    let h = match cfg.sweep.as_ref().and_then(|s| s.min_patch_cells) {
        Some(cells) => resolving_spacing(cfg.solver.h, &Problem::constant(domain.clone(), patch.clone(), q, m0)?, cells)?,
        None => cfg.solver.h,
    };
    Ok((Problem::constant(domain, patch, q, m0)?, h))
}

/// Halve `h` until the patch edges lie on grid lines and every tangent extent spans at
/// least `cells` cells.
pub fn resolving_spacing(h0: f64, problem: &Problem, cells: usize) -> Result<f64> {
    let mut h = h0;
    while h >= MIN_SPACING {
        if let Ok(grid) = Grid::new(&problem.domain, h) {
            if let Ok(nodes) = grid.patch_axis_nodes(&problem.patch) {
                if nodes.iter().all(|v| v.len() > cells) {
                    return Ok(h);
                }
            }
        }
        h *= 0.5;
    }
    Err(Error::PreconditionViolated(format!(
        "no grid down to spacing {MIN_SPACING} resolves the patch by {cells} cells"
    )))
}

/// Solve one problem with the configured method.
pub fn solve_point(cfg: &Config, problem: &Problem, h: f64) -> Result<SolveResult> {
    let grid = Grid::new(&problem.domain, h)?;
    let m0 = problem.m0(&grid)?;
    let control = cfg.control(m0);
    match cfg.solver.method {
        Method::Fd | Method::Both => solve_fd(problem, &grid, &control),
        Method::Volterra => {
            let ev = KernelEvaluator::new(&problem.domain)?;
            let t_end = cfg.solver.t_end.unwrap_or(f64::INFINITY);
            let vc = VolterraControl::new(cfg.solver.volterra_dt, t_end, control.m_stop);
            solve_volterra(problem, &ev, &grid, &vc)
        }
    }
}

fn run_row(cfg: &Config, variable: SweepVariable, index: usize, value: f64) -> SweepRow {
    let mut row = SweepRow {
        index,
        value,
        q: cfg.problem.q,
        m0: cfg.problem.m0,
        gamma1_area: f64::NAN,
        h: cfg.solver.h,
        t_star: None,
        bracket_lo: None,
        bracket_hi: None,
        beta: None,
        fit_r2: None,
        increment: None,
        upper_bound: None,
        lower_general: None,
        y: f64::NAN,
        lower_critical: None,
        regime: "NA",
        termination: "failed".into(),
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let (problem, h) = point_problem(cfg, variable, value)?;
        row.q = problem.q;
        row.m0 = problem.constant_value().unwrap_or(f64::NAN);
        row.gamma1_area = problem.patch.area;
        row.h = h;
        row.y = y_quantity(problem.q, row.m0, row.gamma1_area, problem.domain.n());
        row.upper_bound = upper_bound_constant(problem.q, row.m0, row.gamma1_area, problem.domain.volume()).ok();
        let result = solve_point(cfg, &problem, h)?;
        row.termination = result.termination.as_str().into();
        let b = result
            .blowup
            .ok_or_else(|| Error::SweepFailed(format!("no blow-up ({})", row.termination)))?;
        row.t_star = Some(b.t_star);
        row.bracket_lo = Some(b.bracket_lo);
        row.bracket_hi = Some(b.bracket_hi);
        row.beta = Some(b.beta).filter(|v| v.is_finite());
        row.fit_r2 = Some(b.r2).filter(|v| v.is_finite());
        if cfg.solver.convergence_run {
            if let Ok(coarse) = solve_point(cfg, &problem, 2.0 * h) {
                row.increment = coarse.t_star().map(|t| (t - b.t_star).abs());
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row
}

/// Baseline where `t_star / shape` is smallest, or the configured one.
fn baseline(rows: &[SweepRow], fixed: Option<usize>, shape: impl Fn(&SweepRow) -> f64) -> Option<(usize, f64)> {
    let ratio = |r: &SweepRow| r.t_star.map(|t| t / shape(r));
    match fixed {
        Some(i) => rows.get(i).and_then(|r| ratio(r).map(|c| (i, c))),
        None => rows
            .iter()
            .filter_map(|r| ratio(r).filter(|c| c.is_finite() && *c > 0.0).map(|c| (r.index, c)))
            .min_by(|a, b| a.1.total_cmp(&b.1)),
    }
}

/// Calibrate the constants (unless fixed by the config) and fill the bound columns.
pub fn apply_bounds(cfg: &Config, n: usize, rows: &mut [SweepRow]) -> Result<Calibration> {
    let general = |r: &SweepRow| general_shape(r.q, r.m0, r.gamma1_area, n);
    let critical = |r: &SweepRow| critical_formula(1.0, r.q, r.y);
    let (c_general, baseline_general) = match cfg.bounds.c_general {
        Some(c) => (c, None),
        None => {
            let (i, c) = baseline(rows, cfg.bounds.baseline, general)
                .ok_or_else(|| Error::SweepFailed("no row to calibrate the general constant".into()))?;
            (c, Some(i))
        }
    };
    let (c_critical, baseline_critical) = match cfg.bounds.c_critical {
        Some(c) => (c, None),
        None => {
            let (i, c) = baseline(rows, cfg.bounds.baseline, critical)
                .ok_or_else(|| Error::SweepFailed("no row to calibrate the critical constant".into()))?;
            (c, Some(i))
        }
    };
    let c_star = 1.0 / (40.0 * c_critical);
    let y0 = 1.0 / (36.0 * c_star);
    for r in rows.iter_mut() {
        if !r.gamma1_area.is_finite() {
            continue;
        }
        r.lower_general = Some(c_general * general(r));
        if r.y <= y0 / r.q {
            r.lower_critical = Some(critical_formula(c_critical, r.q, r.y));
            r.regime = "critical";
        } else {
            r.lower_critical = None;
            r.regime = "not_applicable";
        }
    }
    Ok(Calibration {
        c_general,
        c_critical,
        c_star,
        y0,
        baseline_general,
        baseline_critical,
    })
}

/// Run every sweep value (in parallel, rows kept in value order) and attach bounds.
pub fn run_sweep(cfg: &Config) -> Result<SweepTable> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::SweepFailed("config has no sweep section".into()))?;
    if sweep.values.is_empty() {
        return Err(Error::SweepFailed("empty value list".into()));
    }
    let n = cfg.domain()?.n();
    let mut rows: Vec<SweepRow> = sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(i, v)| run_row(cfg, sweep.variable, i, *v))
        .collect();
    if rows.iter().all(|r| !r.ok()) {
        let first = rows[0].error.clone().unwrap_or_default();
        return Err(Error::SweepFailed(format!("every sweep point failed; first: {first}")));
    }
    let calibration = apply_bounds(cfg, n, &mut rows)?;
    Ok(SweepTable {
        variable: sweep.variable,
        n,
        rows,
        calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> Config {
        let text = format!(
            r#"{{
            "domain": {{"kind": "box", "extents": [1.0, 1.0]}},
            "patch": {{"face": "y-", "lo": [0.25], "hi": [0.75]}},
            "solver": {{"h": 0.0625}}
            {extra}
        }}"#
        );
        Config::from_json(&text).unwrap()
    }

    #[test]
    fn grid_policy_resolves_small_patches() {
        let c = cfg(r#", "sweep": {"variable": "Gamma1Area", "values": [0.5, 0.25, 0.125, 0.0625], "min_patch_cells": 8}"#);
        let hs: Vec<f64> = [0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|v| point_problem(&c, SweepVariable::Gamma1Area, *v).unwrap().1)
            .collect();
        assert_eq!(hs, vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]);
        let (p, _) = point_problem(&c, SweepVariable::Gamma1Area, 0.125).unwrap();
        assert!((p.patch.area - 0.125).abs() < 1e-15);
    }

    #[test]
    fn m0_sweep_is_monotone_and_calibrated() {
        let c = cfg(r#", "sweep": {"variable": "M0", "values": [0.5, 1, 2, 4]}"#);
        let t = run_sweep(&c).unwrap();
        assert_eq!(t.rows.len(), 4);
        let ts: Vec<f64> = t.rows.iter().map(|r| r.t_star.unwrap()).collect();
        assert!(ts.windows(2).all(|w| w[1] < w[0]));
        for r in &t.rows {
            assert!(r.lower_general.unwrap() <= r.bracket_hi.unwrap() * (1.0 + 1e-12));
            assert!(r.bracket_lo.unwrap() <= r.upper_bound.unwrap());
        }
        let b = t.calibration.baseline_general.unwrap();
        assert!((t.rows[b].lower_general.unwrap() - ts[b]).abs() < 1e-12 * ts[b]);
    }

    #[test]
    fn missing_sweep_fails() {
        assert!(matches!(run_sweep(&cfg("")), Err(Error::SweepFailed(_))));
    }
}
