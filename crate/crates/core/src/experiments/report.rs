//! CSV and plain-text output. Floats use the shortest round-trip decimal form; missing
//! values are written as `NA`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bounds::BoundsReport;
use crate::error::{Error, Result};
use crate::experiments::config::SweepVariable;
use crate::experiments::fit::FitResult;
use crate::experiments::sweep::SweepTable;
use crate::solver::SolveResult;

pub fn num(v: f64) -> String {
    let a = v.abs();
    if !v.is_finite() {
        "NA".into()
    } else if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), num)
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Report(format!("{}: {e}", dir.display())))?;
    }
    csv::Writer::from_path(path).map_err(|e| Error::Report(format!("{}: {e}", path.display())))
}

pub const SWEEP_HEADER: [&str; 11] = [
    "value",
    "Tstar",
    "bracket_lo",
    "bracket_hi",
    "beta",
    "fit_r2",
    "upper_bound",
    "lower_general",
    "Y",
    "lower_critical",
    "regime",
];

pub fn write_sweep_csv(path: &Path, table: &SweepTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for r in &table.rows {
        w.write_record([
            num(r.value),
            opt(r.t_star),
            opt(r.bracket_lo),
            opt(r.bracket_hi),
            opt(r.beta),
            opt(r.fit_r2),
            opt(r.upper_bound),
            opt(r.lower_general),
            num(r.y),
            opt(r.lower_critical),
            r.regime.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fit_csv(path: &Path, fits: &[(String, FitResult)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sweep_id", "slope", "intercept", "r2"])?;
    for (id, f) in fits {
        w.write_record([id.clone(), num(f.slope), num(f.intercept), num(f.r2)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, result: &SolveResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "dt", "M", "boundary_max", "mass"])?;
    for p in &result.trace {
        w.write_record([num(p.t), num(p.dt), num(p.m), num(p.boundary_max), num(p.mass)])?;
    }
    w.flush()?;
    Ok(())
}

/// One summary row per solve.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub run_id: String,
    pub q: f64,
    pub m0: f64,
    pub gamma1_area: f64,
    pub t_star: Option<f64>,
    pub bracket_lo: Option<f64>,
    pub bracket_hi: Option<f64>,
    pub beta: Option<f64>,
    pub fit_r2: Option<f64>,
    pub termination: String,
}

impl RunSummary {
    pub fn new(run_id: &str, q: f64, m0: f64, gamma1_area: f64, r: &SolveResult) -> Self {
        let b = r.blowup.as_ref();
        RunSummary {
            run_id: run_id.into(),
            q,
            m0,
            gamma1_area,
            t_star: b.map(|b| b.t_star),
            bracket_lo: b.map(|b| b.bracket_lo),
            bracket_hi: b.map(|b| b.bracket_hi),
            beta: b.map(|b| b.beta),
            fit_r2: b.map(|b| b.r2),
            termination: r.termination.as_str().into(),
        }
    }
}

pub fn write_summary_csv(path: &Path, runs: &[RunSummary]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "run_id",
        "q",
        "M0",
        "gamma1_area",
        "Tstar",
        "bracket_lo",
        "bracket_hi",
        "beta",
        "fit_r2",
        "termination",
    ])?;
    for r in runs {
        w.write_record([
            r.run_id.clone(),
            num(r.q),
            num(r.m0),
            num(r.gamma1_area),
            opt(r.t_star),
            opt(r.bracket_lo),
            opt(r.bracket_hi),
            opt(r.beta),
            opt(r.fit_r2),
            r.termination.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds_csv(path: &Path, rows: &[BoundsReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "q",
        "M0",
        "gamma1_area",
        "n",
        "upper_bound",
        "lower_general",
        "Y",
        "lower_critical",
        "regime",
    ])?;
    for r in rows {
        let regime = if r.critical.time().is_some() { "critical" } else { "not_applicable" };
        w.write_record([
            num(r.q),
            num(r.m0),
            num(r.gamma1_area),
            r.n.to_string(),
            opt(r.upper),
            num(r.lower_general),
            num(r.critical.y()),
            opt(r.critical.time()),
            regime.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Slope expected from the bounds for each sweep variable, as text.
pub fn predicted_order(variable: SweepVariable, q: f64, n: usize) -> String {
    match variable {
        SweepVariable::M0 => format!("-(q-1) = {}", num(-(q - 1.0))),
        SweepVariable::Gamma1Area if n == 2 => {
            "between -1 (upper bound) and -1 with a 1/ln(1/|Gamma_1|) correction (lower bound)".into()
        }
        SweepVariable::Gamma1Area => format!("-1/(n-1) = {} (lower), -1 (upper)", num(-1.0 / (n as f64 - 1.0))),
        SweepVariable::Q => "none stated".into(),
    }
}

pub fn summary_text(table: &SweepTable, fit: Option<&FitResult>) -> String {
    let q = table.rows.first().map_or(f64::NAN, |r| r.q);
    let mut s = String::new();
    s.push_str(&format!("sweep variable: {}\n", table.variable.name()));
    s.push_str(&format!("points: {} ({} solved)\n", table.rows.len(), table.rows.iter().filter(|r| r.ok()).count()));
    s.push_str(&format!("predicted slope: {}\n", predicted_order(table.variable, q, table.n)));
    match fit {
        Some(f) => s.push_str(&format!("fitted slope: {} (r2 {})\n", num(f.slope), num(f.r2))),
        None => s.push_str("fitted slope: NA\n"),
    }
    let c = &table.calibration;
    s.push_str(&format!(
        "calibrated constants: C = {}, C_critical = {}, C_star = {}, Y0 = {}\n",
        num(c.c_general),
        num(c.c_critical),
        num(c.c_star),
        num(c.y0)
    ));
    for r in &table.rows {
        if let Some(e) = &r.error {
            s.push_str(&format!("row {} ({}) failed: {e}\n", r.index, num(r.value)));
        }
    }
    s
}

/// Writes `sweep.csv`, `fit.csv` and `summary.txt` into `dir`; returns their paths.
pub fn emit_report(dir: &Path, table: &SweepTable, fit: Option<&FitResult>) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::Report("empty sweep table".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::Report(format!("{}: {e}", dir.display())))?;
    let sweep = dir.join("sweep.csv");
    let fits = dir.join("fit.csv");
    let summary = dir.join("summary.txt");
    write_sweep_csv(&sweep, table)?;
    let fit_rows: Vec<(String, FitResult)> = fit
        .map(|f| vec![(table.variable.name().to_string(), f.clone())])
        .unwrap_or_default();
    write_fit_csv(&fits, &fit_rows)?;
    fs::write(&summary, summary_text(table, fit)).map_err(|e| Error::Report(format!("{}: {e}", summary.display())))?;
    Ok(vec![sweep, fits, summary])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sweep::{Calibration, SweepRow};

    fn row(i: usize, v: f64, crit: Option<f64>) -> SweepRow {
        SweepRow {
            index: i,
            value: v,
            q: 2.0,
            m0: v,
            gamma1_area: 0.5,
            h: 1.0 / 32.0,
            t_star: Some(1.0 / v),
            bracket_lo: Some(0.99 / v),
            bracket_hi: Some(1.01 / v),
            beta: Some(1.0),
            fit_r2: Some(0.999),
            increment: None,
            upper_bound: Some(2.0 / v),
            lower_general: Some(0.1),
            y: 0.3 * v,
            lower_critical: crit,
            regime: if crit.is_some() { "critical" } else { "not_applicable" },
            termination: "threshold".into(),
            error: None,
        }
    }

    #[test]
    fn sweep_report_files() {
        let dir = tempfile::tempdir().unwrap();
        let table = SweepTable {
            variable: SweepVariable::M0,
            n: 2,
            rows: (0..5).map(|i| row(i, 0.25 * 2f64.powi(i as i32), if i < 2 { Some(0.5) } else { None })).collect(),
            calibration: Calibration {
                c_general: 1.0,
                c_critical: 0.5,
                c_star: 0.05,
                y0: 0.55,
                baseline_general: Some(0),
                baseline_critical: Some(0),
            },
        };
        let fit = FitResult {
            slope: -1.0,
            intercept: 0.0,
            r2: 1.0,
            residuals: vec![0.0; 5],
        };
        let files = emit_report(dir.path(), &table, Some(&fit)).unwrap();
        let sweep = fs::read_to_string(&files[0]).unwrap();
        let lines: Vec<&str> = sweep.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], SWEEP_HEADER.join(","));
        assert!(lines[5].ends_with(",NA,not_applicable"));
        assert!(lines[1].starts_with("0.25,4,"));
        let summary = fs::read_to_string(&files[2]).unwrap();
        assert!(summary.contains("predicted slope: -(q-1) = -1"));
        assert!(summary.contains("fitted slope: -1 "));
    }

    #[test]
    fn shortest_round_trip() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(num(f64::NAN), "NA");
        assert_eq!(num(3.25e-135), "3.25e-135");
        assert_eq!(num(1e-3), "0.001");
        assert_eq!(opt(None), "NA");
    }
}
