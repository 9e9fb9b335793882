//! Command dispatch: runs solves, the property battery, sweeps, and
//! optimizations from a config, writing CSV reports to the output directory.

use crate::config::RunConfig;
use crate::control::optimize_control;
use crate::csvout::{check_rows, fmt_f64, sweep_rows, write_csv, CHECK_HEADER, SWEEP_HEADER};
use crate::error::{Error, Result};
use crate::state::{solve_parabolic_vi, ControlField, StateTrajectory};
use crate::verify::{control_convergence_study, run_battery, sweep_eps, sweep_h, BatteryConfig};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    SweepH,
    SweepEps,
    Optimize,
    ConvergeControl,
}

/// Runs one command. Returns whether every executed check passed; hard
/// failures surface as errors (exit code 2 at the binary level).
pub fn run_command(command: Command, cfg: &RunConfig, out_dir: &Path) -> Result<bool> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    match command {
        Command::Solve => {
            let (spec, disc) = cfg.problem()?;
            let g = cfg.control_field(spec.n_steps, disc.ops.n_nodes())?;
            let (traj, _) = solve_parabolic_vi(&spec, &g, &disc)?;
            write_trajectory(&traj, cfg, &out_dir.join("solve.csv"))?;
            Ok(true)
        }
        Command::Verify => {
            let (spec, _) = cfg.problem()?;
            let battery = BatteryConfig {
                seed: cfg.seed,
                n_convexity: cfg.n_random,
                m_cost: cfg.m_cost,
                mu_list: cfg.mu_list.clone(),
                ..BatteryConfig::default()
            };
            let reports = run_battery(&spec, &battery)?;
            let rows = check_rows(&reports, &cfg.config_hash, cfg.seed);
            write_csv(&out_dir.join("checks.csv"), &CHECK_HEADER, &rows)?;
            Ok(reports.iter().all(|r| r.passed))
        }
        Command::SweepH => {
            let (spec, disc) = cfg.problem()?;
            let g = cfg.control_field(spec.n_steps, disc.ops.n_nodes())?;
            let report = sweep_h(&spec, &g, &cfg.h_list)?;
            let rows = sweep_rows(&report, &cfg.config_hash, cfg.seed);
            write_csv(&out_dir.join("sweep_h.csv"), &SWEEP_HEADER, &rows)?;
            Ok(report.passed)
        }
        Command::SweepEps => {
            let (spec, disc) = cfg.problem()?;
            let g = cfg.control_field(spec.n_steps, disc.ops.n_nodes())?;
            let report = sweep_eps(&spec, &g, &cfg.eps_list)?;
            let rows = sweep_rows(&report, &cfg.config_hash, cfg.seed);
            write_csv(&out_dir.join("sweep_eps.csv"), &SWEEP_HEADER, &rows)?;
            Ok(report.passed)
        }
        Command::Optimize => {
            let (spec, disc) = cfg.problem()?;
            let g0 = cfg.control_field(spec.n_steps, disc.ops.n_nodes())?;
            let (g_op, traj, report) =
                optimize_control(&spec, cfg.m_cost, &g0, cfg.grad_tol, cfg.max_iter, &disc)?;
            write_control(&g_op, spec.dt(), cfg, &out_dir.join("optimize_control.csv"))?;
            write_trajectory(&traj, cfg, &out_dir.join("optimize_state.csv"))?;
            let header = [
                "iteration",
                "cost",
                "backtracks",
                "final_gradient_norm",
                "converged",
                "seed",
                "config_hash",
            ];
            let mut rows: Vec<Vec<String>> = report
                .cost_history
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let backtracks = if i == 0 {
                        String::new()
                    } else {
                        report.line_search_backtracks[i - 1].to_string()
                    };
                    vec![
                        i.to_string(),
                        fmt_f64(*c),
                        backtracks,
                        String::new(),
                        String::new(),
                        cfg.seed.to_string(),
                        cfg.config_hash.clone(),
                    ]
                })
                .collect();
            rows.push(vec![
                "final".into(),
                fmt_f64(report.final_cost),
                String::new(),
                fmt_f64(report.final_gradient_norm),
                report.converged.to_string(),
                cfg.seed.to_string(),
                cfg.config_hash.clone(),
            ]);
            write_csv(&out_dir.join("optimize_report.csv"), &header, &rows)?;
            Ok(report.converged)
        }
        Command::ConvergeControl => {
            let (spec, _) = cfg.problem()?;
            let report = control_convergence_study(&spec, cfg.m_cost, &cfg.h_list, cfg.grad_tol)?;
            let rows = sweep_rows(&report, &cfg.config_hash, cfg.seed);
            write_csv(&out_dir.join("converge_control.csv"), &SWEEP_HEADER, &rows)?;
            Ok(report.passed)
        }
    }
}

fn write_trajectory(traj: &StateTrajectory, cfg: &RunConfig, path: &Path) -> Result<()> {
    let header = ["node", "time", "value", "seed", "config_hash"];
    let mut rows = Vec::with_capacity(traj.n_levels() * traj.n_nodes());
    for level in 0..traj.n_levels() {
        let t = level as f64 * traj.dt;
        for (node, &v) in traj.level(level).iter().enumerate() {
            rows.push(vec![
                node.to_string(),
                fmt_f64(t),
                fmt_f64(v),
                cfg.seed.to_string(),
                cfg.config_hash.clone(),
            ]);
        }
    }
    write_csv(path, &header, &rows)
}

fn write_control(g: &ControlField, dt: f64, cfg: &RunConfig, path: &Path) -> Result<()> {
    let header = ["node", "time", "value", "seed", "config_hash"];
    let mut rows = Vec::with_capacity(g.n_steps() * g.n_nodes());
    for step in 0..g.n_steps() {
        let t = (step + 1) as f64 * dt;
        for (node, &v) in g.row(step).iter().enumerate() {
            rows.push(vec![
                node.to_string(),
                fmt_f64(t),
                fmt_f64(v),
                cfg.seed.to_string(),
                cfg.config_hash.clone(),
            ]);
        }
    }
    write_csv(path, &header, &rows)
}
