use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lifespan::bounds::{bounds_report, BoundsConfig};
use lifespan::experiments::checks::{
    discrete_check, gaussian_check, kernel_check, phi_check, sharpness_check,
};
use lifespan::experiments::config::{Config, Method};
use lifespan::experiments::report::{num, write_bounds_csv, write_summary_csv, write_trace_csv, RunSummary};
use lifespan::experiments::sweep::solve_point;
use lifespan::experiments::{emit_report, fit_sweep, run_sweep};
use lifespan::geometry::{make_box, Grid};
use lifespan::kernel::KernelEvaluator;
use lifespan::solver::{solve_volterra, VolterraControl};
use lifespan::{Error, Result};

#[derive(Parser)]
#[command(name = "lifespan", version, about = "Blow-up times for the heat equation with a radiating boundary patch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Mass, symmetry, positivity and Gaussian bound of the Neumann kernel.
    KernelCheck(Common),
    /// Radial integral against its envelopes in two and three dimensions.
    PhiCheck(Common),
    /// Boundary-time integral over small flat balls against its predicted order.
    Sharpness(Common),
    /// Solve one problem and write its trace.
    Solve(Common),
    /// Closed-form bounds for the configured problem and the discrete-construction suite.
    Bounds(Common),
    /// Parameter sweep with calibrated bounds and a power-law fit.
    Sweep(Common),
}

enum Outcome {
    Passed,
    Failed,
}

fn load(common: &Common) -> Result<Config> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    Config::load(path)
}

fn write_lines(path: &Path, header: &str, lines: &[String]) -> Result<()> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
    let mut text = String::from(header);
    text.push('\n');
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn verdict(pass: bool) -> Outcome {
    if pass {
        Outcome::Passed
    } else {
        Outcome::Failed
    }
}

fn kernel_cmd(c: &Common) -> Result<Outcome> {
    let domains = match &c.config {
        Some(_) => vec![load(c)?.domain()?],
        None => vec![make_box(2, &[1.0, 1.0])?, make_box(3, &[1.0, 1.0, 1.0])?],
    };
    let mut lines = Vec::new();
    let mut pass = true;
    for d in &domains {
        let k = kernel_check(d, 5)?;
        let g = gaussian_check(d, 5)?;
        println!(
            "n={} mass_error={} symmetry_error={} min={} gaussian_C={} change={} interior={}",
            k.n,
            num(k.mass_error),
            num(k.symmetry_error),
            num(k.min_value),
            num(g.constant),
            num(g.change),
            num(g.interior_ratio)
        );
        lines.push(
            [k.n.to_string(), num(k.mass_error), num(k.symmetry_error), num(k.min_value), num(g.constant), num(g.change), num(g.interior_ratio), num(g.interior_limit)]
                .join(","),
        );
        pass &= k.pass && g.pass;
    }
    write_lines(
        &c.out.join("kernel_check.csv"),
        "n,mass_error,symmetry_error,min_value,gaussian_constant,truncation_change,interior_ratio,interior_limit",
        &lines,
    )?;
    Ok(verdict(pass))
}

fn phi_cmd(c: &Common) -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut pass = true;
    for n in [2, 3] {
        let p = phi_check(n, 7)?;
        for (s, err) in &p.rows {
            lines.push(
                [n.to_string(), num(s.t_end), num(s.radius), num(s.value), num(s.lower), num(s.upper), num(*err), s.pass.to_string()]
                    .join(","),
            );
        }
        println!(
            "n={n} envelopes_hold={} anchors: {} {}",
            p.rows.iter().all(|r| r.0.pass),
            num(p.short_anchor_error),
            num(p.long_anchor_error)
        );
        pass &= p.pass;
    }
    write_lines(&c.out.join("phi_check.csv"), "n,T,R,value,lower,upper,rel_error,within", &lines)?;
    Ok(verdict(pass))
}

fn sharpness_cmd(c: &Common) -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut pass = true;
    for n in [2, 3] {
        let s = sharpness_check(n, 7)?;
        for r in &s.rows {
            lines.push([n.to_string(), num(r.rho), num(r.integral), num(r.predicted), num(r.ratio)].join(","));
        }
        println!("n={n} span={}", num(s.span));
        pass &= s.pass;
    }
    write_lines(&c.out.join("sharpness.csv"), "n,rho,integral,order,ratio", &lines)?;
    Ok(verdict(pass))
}

fn solve_cmd(c: &Common) -> Result<Outcome> {
    let cfg = load(c)?;
    let problem = cfg.problem()?;
    let h = cfg.solver.h;
    let m0 = cfg.problem.m0;
    let area = problem.patch.area;
    let mut runs = Vec::new();
    let primary = solve_point(&cfg, &problem, h)?;
    let name = match cfg.solver.method {
        Method::Volterra => "volterra",
        _ => "fd",
    };
    write_trace_csv(&c.out.join(format!("trace_{name}.csv")), &primary)?;
    runs.push(RunSummary::new(name, problem.q, m0, area, &primary));
    if cfg.solver.method == Method::Both {
        let t_end = cfg
            .solver
            .t_end
            .or(primary.t_star().map(|t| 0.8 * t))
            .ok_or_else(|| Error::PreconditionViolated("no end time for the integral solver".into()))?;
        let grid = Grid::new(&problem.domain, h)?;
        let ev = KernelEvaluator::new(&problem.domain)?;
        let vc = VolterraControl::new(cfg.solver.volterra_dt, t_end, cfg.solver.m_stop_factor * m0);
        let second = solve_volterra(&problem, &ev, &grid, &vc)?;
        write_trace_csv(&c.out.join("trace_volterra.csv"), &second)?;
        runs.push(RunSummary::new("volterra", problem.q, m0, area, &second));
    }
    write_summary_csv(&c.out.join("summary.csv"), &runs)?;
    for r in &runs {
        println!("{} T*={} termination={}", r.run_id, r.t_star.map_or("NA".into(), num), r.termination);
    }
    Ok(Outcome::Passed)
}

fn bounds_cmd(c: &Common) -> Result<Outcome> {
    let cfg = load(c)?;
    let domain = cfg.domain()?;
    let patch = cfg.patch(&domain)?;
    let c_general = cfg.bounds.c_general.unwrap_or(1.0);
    let c_critical = cfg.bounds.c_critical.unwrap_or(1.0);
    let b = BoundsConfig::from_star(
        c_general,
        1.0 / (40.0 * c_critical),
        cfg.problem.q,
        cfg.problem.m0,
        patch.area,
        domain.volume(),
        domain.n(),
        cfg.problem.m0,
    );
    let report = bounds_report(&b)?;
    write_bounds_csv(&c.out.join("bounds.csv"), &[report])?;
    let d = discrete_check(c.seed)?;
    println!(
        "upper={} lower_general={} Y={} lower_critical={}",
        report.upper.map_or("NA".into(), num),
        num(report.lower_general),
        num(report.critical.y()),
        report.critical.time().map_or("NA".into(), num)
    );
    println!("discrete suite: {:?}", d);
    Ok(verdict(d.pass))
}

fn sweep_cmd(c: &Common) -> Result<Outcome> {
    let cfg = load(c)?;
    let table = run_sweep(&cfg)?;
    let fit = fit_sweep(&table).ok();
    let files = emit_report(&c.out, &table, fit.as_ref())?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(Outcome::Passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::KernelCheck(c) => kernel_cmd(c),
        Command::PhiCheck(c) => phi_cmd(c),
        Command::Sharpness(c) => sharpness_cmd(c),
        Command::Solve(c) => solve_cmd(c),
        Command::Bounds(c) => bounds_cmd(c),
        Command::Sweep(c) => sweep_cmd(c),
    };
    match outcome {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
