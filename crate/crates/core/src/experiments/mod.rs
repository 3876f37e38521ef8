//! Run configuration, sweeps, fits, analytic checks and report files.

pub mod checks;
pub mod config;
pub mod fit;
pub mod report;
pub mod sweep;

pub use config::{Config, Method, SweepVariable};
pub use fit::{fit_power_law, FitResult};
pub use report::emit_report;
pub use sweep::{run_sweep, SweepRow, SweepTable};

/// Power-law fit of `T*` against the swept value over the solved rows.
pub fn fit_sweep(table: &SweepTable) -> crate::Result<FitResult> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = table
        .rows
        .iter()
        .filter_map(|r| r.t_star.map(|t| (r.value, t)))
        .unzip();
    fit_power_law(&xs, &ys)
}
