//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.
//! Desk scale is n = 16, N = 32 in 1D and n = 8, N = 16 on the square.

use std::sync::OnceLock;
use tresca::config::load_config;
use tresca::control::{adjoint_gradient, control_norm, fd_gradient, optimize_control};
use tresca::functionals::cost_j;
use tresca::state::{
    control_load, oracle_minimize_timestep, solve_parabolic_vi, solve_timestep, timestep_energy,
    BcMode, ControlField, Discretization, ProblemSpec,
};
use tresca::verify::{
    control_convergence_study, run_battery, sweep_eps, sweep_h, BatteryConfig, CheckReport,
};

fn report(id: u32, name: &str, passed: bool, detail: String) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id:02} [{verdict}] {name}: {detail}");
    assert!(passed, "criterion {id:02} {name} failed: {detail}");
}

// Null boundary data keeps the friction nodes at the nonsmooth kink, where
// the stick/slide transitions actually exercise the inequality machinery.
fn desk_spec(dim: usize) -> ProblemSpec {
    let (n, n_steps, q) = if dim == 1 { (16, 32, 0.2) } else { (8, 16, 0.15) };
    let spec = ProblemSpec::new(dim, n, n_steps, BcMode::Dirichlet).unwrap();
    let disc = Discretization::build(&spec).unwrap();
    spec.with_constant_q(&disc.mesh, q)
}

static BATTERY_1D: OnceLock<Vec<CheckReport>> = OnceLock::new();
static BATTERY_2D: OnceLock<Vec<CheckReport>> = OnceLock::new();

fn battery_1d() -> &'static [CheckReport] {
    BATTERY_1D.get_or_init(|| run_battery(&desk_spec(1), &BatteryConfig::default()).unwrap())
}

fn battery_2d() -> &'static [CheckReport] {
    BATTERY_2D.get_or_init(|| run_battery(&desk_spec(2), &BatteryConfig::default()).unwrap())
}

/// Pass counts and worst margin for one check name across both geometries.
fn tally(name: &str) -> (usize, usize, f64) {
    let mut total = 0;
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    for rep in battery_1d().iter().chain(battery_2d()) {
        if rep.name == name {
            total += 1;
            passed += rep.passed as usize;
            worst = worst.min(rep.margin);
        }
    }
    (total, passed, worst)
}

#[test]
fn criterion_01_null_soundness() {
    let mut worst: f64 = 0.0;
    for dim in [1, 2] {
        for bc in [BcMode::Dirichlet, BcMode::Robin { h: 10.0 }] {
            let (n, n_steps) = if dim == 1 { (16, 32) } else { (8, 16) };
            let mut spec = ProblemSpec::new(dim, n, n_steps, bc).unwrap();
            let disc = Discretization::build(&spec).unwrap();
            spec = spec.with_constant_q(&disc.mesh, 0.5);
            let nn = disc.ops.n_nodes();
            let g = ControlField::zeros(n_steps, nn);
            let (traj, _) = solve_parabolic_vi(&spec, &g, &disc).unwrap();
            worst = worst.max(traj.max_abs());
            let j = cost_j(&g, &traj, 1.0, &disc.ops);
            worst = worst.max(j.abs());
            let (g_op, _, rep) = optimize_control(&spec, 1.0, &g, 1e-10, 50, &disc).unwrap();
            assert!(rep.converged);
            worst = worst.max(g_op.max_abs());
        }
    }
    report(
        1,
        "null soundness (u = 0, J = 0, g_op = 0, both modes, both geometries)",
        worst <= 1e-12,
        format!("worst deviation {worst:.3e}"),
    );
}

#[test]
fn criterion_02_monotony_battery() {
    let (total, passed, worst) = tally("monotony");
    // 50 pairs x both modes x both geometries
    report(
        2,
        "convex-combination monotony battery",
        total == 200 && passed == total,
        format!("{passed}/{total} instances, worst margin {worst:.3e}"),
    );
}

#[test]
fn criterion_03_comparison_and_squeeze() {
    let (total, passed, worst) = tally("comparison_squeeze");
    report(
        3,
        "comparison and squeeze orderings",
        total == 80 && passed == total,
        format!("{passed}/{total} instances, worst margin {worst:.3e}"),
    );
}

#[test]
fn criterion_04_positivity() {
    let (total, passed, worst) = tally("positivity");
    report(
        4,
        "positivity under nonnegative data",
        total == 80 && passed == total,
        format!("{passed}/{total} instances, worst margin {worst:.3e}"),
    );
}

#[test]
fn criterion_05_lipschitz() {
    let (total, passed, worst) = tally("lipschitz");
    report(
        5,
        "stability bound in the control",
        total == 80 && passed == total,
        format!("{passed}/{total} instances, worst margin {worst:.3e}"),
    );
}

#[test]
fn criterion_06_energy_estimate() {
    let (total, passed, worst) = tally("energy_estimate");
    let (dt, dp, dworst) = tally("energy_estimate_degenerate");
    report(
        6,
        "energy estimate and its degenerate case",
        total == 120 && passed == total && dt == 4 && dp == dt,
        format!(
            "{passed}/{total} random instances (worst {worst:.3e}), {dp}/{dt} degenerate (worst {dworst:.3e})"
        ),
    );
}

#[test]
fn criterion_07_convexity() {
    let (total, passed, worst) = tally("convexity");
    report(
        7,
        "cost convexity: exact gap identity and penalty modulus",
        total == 2 && passed == total,
        format!("{passed}/{total} batteries (20 pairs x 3 mu x both modes each), worst margin {worst:.3e}"),
    );
}

#[test]
fn criterion_08_gradient_check() {
    let mut worst: f64 = 0.0;
    let cases: [(BcMode, u64); 5] = [
        (BcMode::Dirichlet, 42),
        (BcMode::Robin { h: 5.0 }, 43),
        (BcMode::Dirichlet, 44),
        (BcMode::Robin { h: 10.0 }, 45),
        (BcMode::Dirichlet, 46),
    ];
    for (bc, seed) in cases {
        let mut spec = ProblemSpec::new(1, 4, 4, bc).unwrap();
        spec = spec.with_constant_b_and_start(1.0);
        spec.newton_tol = 1e-12;
        let disc = Discretization::build(&spec).unwrap();
        let spec = spec.with_constant_q(&disc.mesh, 0.3);
        let g = ControlField::random(seed, (0.5, 1.5), 4, 5);
        assert!(g.n_steps() * g.n_nodes() <= 200);
        let delta = 1e-4 * (1.0 + g.max_abs());
        let adj = adjoint_gradient(&g, &spec, 1.0, &disc).unwrap();
        let fd = fd_gradient(&g, &spec, 1.0, delta, &disc).unwrap();
        let rel = control_norm(&adj.sub(&fd), &disc, spec.dt())
            / control_norm(&adj, &disc, spec.dt());
        worst = worst.max(rel);
    }
    report(
        8,
        "adjoint gradient vs central differences (5 instances)",
        worst <= 1e-5,
        format!("worst relative discrepancy {worst:.3e}"),
    );
}

#[test]
fn criterion_09_eps_sweep() {
    // negative forcing against a positive datum pins the friction node,
    // keeping the smoothing active through the whole march
    let mut spec = ProblemSpec::new(1, 16, 32, BcMode::Dirichlet).unwrap();
    spec = spec.with_constant_b_and_start(1.0);
    let disc = Discretization::build(&spec).unwrap();
    let spec = spec.with_constant_q(&disc.mesh, 0.5);
    let g = ControlField::constant(-1.0, 32, 17);
    let rep = sweep_eps(&spec, &g, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    let slope = rep.slope.unwrap_or(f64::NAN);
    report(
        9,
        "smoothing sweep: monotone error decay with slope >= 0.4",
        rep.monotone_decrease && slope >= 0.4,
        format!("errors {:?}, slope {slope:.3}", rep.errors),
    );
}

#[test]
fn criterion_10_h_sweep() {
    let mut spec = ProblemSpec::new(1, 16, 32, BcMode::Dirichlet).unwrap();
    spec = spec.with_constant_b_and_start(1.0);
    let disc = Discretization::build(&spec).unwrap();
    let spec = spec.with_constant_q(&disc.mesh, 0.5);
    let g = ControlField::constant(1.0, 32, 17);
    let rep = sweep_h(&spec, &g, &[1.0, 4.0, 16.0, 64.0, 256.0, 1024.0]).unwrap();
    let ratio = rep.errors.last().unwrap() / rep.errors[0];
    let trace_slope = rep.secondary_slope.unwrap_or(f64::NAN);
    let ok = rep.monotone_decrease
        && ratio <= 0.05
        && (-1.2..=-0.3).contains(&trace_slope);
    report(
        10,
        "boundary-penalty sweep to the clamped problem",
        ok,
        format!(
            "state error ratio {ratio:.4}, trace slope {trace_slope:.3}, errors {:?}",
            rep.errors
        ),
    );
}

#[test]
fn criterion_11_control_convergence() {
    // nonzero boundary datum so the optimum is not the null control
    let mut spec = ProblemSpec::new(1, 16, 32, BcMode::Dirichlet).unwrap();
    spec = spec.with_constant_b_and_start(1.0);
    let disc = Discretization::build(&spec).unwrap();
    let spec = spec.with_constant_q(&disc.mesh, 0.5);
    let rep = control_convergence_study(&spec, 1.0, &[1.0, 10.0, 100.0, 1000.0], 1e-6).unwrap();
    let ratio = rep.errors.last().unwrap() / rep.errors[0];
    let state_errors = rep.secondary_errors.clone().unwrap();
    let state_ratio = state_errors.last().unwrap() / state_errors[0];
    report(
        11,
        "optimal controls converge with the transfer coefficient",
        rep.passed && ratio <= 0.1,
        format!(
            "control errors {:?} (ratio {ratio:.4}), state error ratio {state_ratio:.4}",
            rep.errors
        ),
    );
}

#[test]
fn criterion_12_oracle_equivalence() {
    let mut spec = ProblemSpec::new(1, 4, 8, BcMode::Dirichlet).unwrap();
    spec = spec.with_constant_b_and_start(1.0);
    let disc = Discretization::build(&spec).unwrap();
    let spec = spec.with_constant_q(&disc.mesh, 0.3);
    let g = ControlField::random(2024, (0.5, 1.5), 8, 5);

    let (traj, _) = solve_parabolic_vi(&spec, &g, &disc).unwrap();
    let mut prev = spec.u_b.clone();
    let mut max_diff: f64 = 0.0;
    let mut worst_newton_gap = f64::NEG_INFINITY;
    let mut worst_oracle_gap = f64::NEG_INFINITY;
    for step in 1..=8 {
        let load = control_load(g.row(step - 1), &disc.ops);
        let newton = solve_timestep(&prev, &load, &spec, &disc).unwrap();
        let oracle = oracle_minimize_timestep(&prev, &load, &spec, &disc).unwrap();
        let e_newton = timestep_energy(&newton, &prev, &load, &spec, &disc);
        let e_oracle = timestep_energy(&oracle, &prev, &load, &spec, &disc);
        worst_oracle_gap = worst_oracle_gap.max(e_oracle - e_newton);
        worst_newton_gap = worst_newton_gap.max(e_newton - e_oracle);
        for (a, b) in oracle.iter().zip(traj.level(step)) {
            max_diff = max_diff.max((a - b).abs());
        }
        prev = oracle;
    }
    let ok = max_diff <= 1e-3 && worst_oracle_gap <= 1e-12 && worst_newton_gap <= 1e-12;
    report(
        12,
        "stepping path matches the energy-minimization oracle",
        ok,
        format!(
            "state diff {max_diff:.3e}, energy gaps newton-oracle {worst_newton_gap:.3e} / oracle-newton {worst_oracle_gap:.3e}"
        ),
    );
}

#[test]
fn criterion_13_analytic_steady_state() {
    // friction off, unit datum: the state relaxes to cosh(1-x)/cosh(1)
    let mut spec = ProblemSpec::new(1, 16, 256, BcMode::Dirichlet).unwrap();
    spec = spec.with_constant_b_and_start(1.0);
    spec.t_final = 8.0;
    let disc = Discretization::build(&spec).unwrap();
    let g = ControlField::zeros(256, 17);
    let (traj, _) = solve_parabolic_vi(&spec, &g, &disc).unwrap();
    let mut err: f64 = 0.0;
    for (i, &v) in traj.final_level().iter().enumerate() {
        let x = i as f64 / 16.0;
        err = err.max((v - (1.0 - x).cosh() / 1f64.cosh()).abs());
    }
    let dx = 1.0 / 16.0;
    let dt = spec.dt();
    let bound = 2.0 * (dx * dx + dt) + (-spec.t_final).exp();
    report(
        13,
        "analytic steady profile within the discretization bound",
        err <= bound,
        format!("sup error {err:.3e} vs bound {bound:.3e}"),
    );
}

#[test]
fn criterion_14_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, "{\"n\": 8, \"n_steps\": 8}").unwrap();
    let cfg = load_config(&config_path).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let ok_a = tresca::cli::run_command(tresca::cli::Command::Verify, &cfg, &out_a).unwrap();
    let ok_b = tresca::cli::run_command(tresca::cli::Command::Verify, &cfg, &out_b).unwrap();
    let bytes_a = std::fs::read(out_a.join("checks.csv")).unwrap();
    let bytes_b = std::fs::read(out_b.join("checks.csv")).unwrap();
    report(
        14,
        "repeated verify runs are byte-identical",
        ok_a && ok_b && bytes_a == bytes_b,
        format!("{} bytes compared", bytes_a.len()),
    );
}
