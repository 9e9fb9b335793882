//! Distributed optimal control of the state problem: exact discrete adjoint
//! gradient, a finite-difference reference gradient, and gradient descent
//! with Barzilai-Borwein steps and Armijo backtracking.
//!
//! The gradient is that of the smoothed discrete problem (ε fixed by the
//! problem spec). Gradients are returned as Riesz representatives with
//! respect to the dt-weighted lumped-mass inner product on controls, so the
//! adjoint and finite-difference routes are comparable entry by entry.

use crate::error::{Error, Result};
use crate::fem::solve_spd_from;
use crate::functionals::cost_j;
use crate::state::{
    solve_parabolic_vi, ControlField, Discretization, ProblemSpec, StateTrajectory,
    StepSystem,
};

/// Inner product on control fields: Σ_n dt·aᵀM b.
pub fn control_inner(a: &ControlField, b: &ControlField, disc: &Discretization, dt: f64) -> f64 {
    let mass = disc.ops.mass_diag();
    let mut acc = 0.0;
    for step in 0..a.n_steps() {
        let ra = a.row(step);
        let rb = b.row(step);
        for i in 0..ra.len() {
            acc += dt * mass[i] * ra[i] * rb[i];
        }
    }
    acc
}

/// L²(0,T;H) norm of a control field.
pub fn control_norm(a: &ControlField, disc: &Discretization, dt: f64) -> f64 {
    control_inner(a, a, disc, dt).sqrt()
}

/// Gradient of the discrete cost by one forward solve and one backward
/// (adjoint) sweep reusing the stored states. Under Dirichlet conditions the
/// adjoint vanishes on Γ1, so the gradient there reduces to the penalty term.
pub fn adjoint_gradient(
    g: &ControlField,
    spec: &ProblemSpec,
    m_cost: f64,
    disc: &Discretization,
) -> Result<ControlField> {
    let (grad, _, _) = cost_and_gradient(g, spec, m_cost, disc)?;
    Ok(grad)
}

/// Shares the forward solve between the cost value and the gradient.
pub fn cost_and_gradient(
    g: &ControlField,
    spec: &ProblemSpec,
    m_cost: f64,
    disc: &Discretization,
) -> Result<(ControlField, f64, StateTrajectory)> {
    if !(spec.epsilon > 0.0) {
        return Err(Error::invalid("adjoint gradient needs epsilon > 0"));
    }
    let (traj, _) = solve_parabolic_vi(spec, g, disc)?;
    let cost = cost_j(g, &traj, m_cost, &disc.ops);

    let system = StepSystem::new(spec, disc);
    let dt = spec.dt();
    let n_free = system.free.len();
    let mass = disc.ops.mass_diag();
    let eps = spec.epsilon;

    let mut grad = g.map(|v| m_cost * v);
    let mut p_next = vec![0.0; n_free];
    for step in (1..=spec.n_steps).rev() {
        let u = traj.level(step);
        // Jacobian of the step map at the stored state
        let jac_diag: Vec<f64> = system
            .free
            .iter()
            .zip(&system.wq)
            .map(|(&i, &wq)| {
                if wq == 0.0 {
                    0.0
                } else {
                    let d = eps * eps + u[i] * u[i];
                    wq * eps * eps / (d * d.sqrt())
                }
            })
            .collect();
        let jac = system.matrix.add_scaled_diagonal(&jac_diag, 1.0);
        let rhs: Vec<f64> = system
            .free
            .iter()
            .enumerate()
            .map(|(p, &i)| system.m_dt[p] * p_next[p] - dt * mass[i] * u[i])
            .collect();
        let (p, _) = solve_spd_from(&jac, &rhs, None, 1e-13)?;
        let row = grad.row_mut(step - 1);
        for (pos, &i) in system.free.iter().enumerate() {
            row[i] -= p[pos] / dt;
        }
        p_next = p;
    }
    Ok((grad, cost, traj))
}

/// Central finite differences of the discrete cost, rescaled to the same
/// Riesz representation as [`adjoint_gradient`]. Limited to 200 control
/// unknowns.
pub fn fd_gradient(
    g: &ControlField,
    spec: &ProblemSpec,
    m_cost: f64,
    delta: f64,
    disc: &Discretization,
) -> Result<ControlField> {
    let total = g.n_steps() * g.n_nodes();
    if total > 200 {
        return Err(Error::invalid(
            "finite-difference gradient is limited to 200 control unknowns",
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let dt = spec.dt();
    let mass = disc.ops.mass_diag();
    let mut grad = ControlField::zeros(g.n_steps(), g.n_nodes());
    let mut work = g.clone();
    for step in 0..g.n_steps() {
        for i in 0..g.n_nodes() {
            let base = g.row(step)[i];
            work.row_mut(step)[i] = base + delta;
            let (traj_p, _) = solve_parabolic_vi(spec, &work, disc)?;
            let jp = cost_j(&work, &traj_p, m_cost, &disc.ops);
            work.row_mut(step)[i] = base - delta;
            let (traj_m, _) = solve_parabolic_vi(spec, &work, disc)?;
            let jm = cost_j(&work, &traj_m, m_cost, &disc.ops);
            work.row_mut(step)[i] = base;
            // undo the quadrature weight so entries are Riesz representatives
            grad.row_mut(step)[i] = (jp - jm) / (2.0 * delta) / (dt * mass[i]);
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub iterations: usize,
    pub final_cost: f64,
    pub final_gradient_norm: f64,
    pub cost_history: Vec<f64>,
    pub line_search_backtracks: Vec<usize>,
    pub converged: bool,
}

/// Gradient descent on the discrete cost with Armijo backtracking (c = 1e-4,
/// halving) and Barzilai-Borwein initial steps after the first iteration.
/// Stops when the control-space gradient norm drops to `grad_tol`; reaching
/// `max_iter` is reported, not an error.
pub fn optimize_control(
    spec: &ProblemSpec,
    m_cost: f64,
    g0: &ControlField,
    grad_tol: f64,
    max_iter: usize,
    disc: &Discretization,
) -> Result<(ControlField, StateTrajectory, OptimizeReport)> {
    if !(grad_tol > 0.0) {
        return Err(Error::invalid("grad_tol must be positive"));
    }
    if !(m_cost > 0.0) {
        return Err(Error::invalid("M must be positive"));
    }
    let dt = spec.dt();
    let armijo_c = 1e-4;

    let mut g = g0.clone();
    let (mut grad, mut cost, mut traj) = cost_and_gradient(&g, spec, m_cost, disc)?;
    let mut grad_norm_sq = control_inner(&grad, &grad, disc, dt);
    let mut report = OptimizeReport {
        iterations: 0,
        final_cost: cost,
        final_gradient_norm: grad_norm_sq.sqrt(),
        cost_history: vec![cost],
        line_search_backtracks: Vec::new(),
        converged: grad_norm_sq.sqrt() <= grad_tol,
    };
    if report.converged {
        return Ok((g, traj, report));
    }

    let mut step = 1.0 / m_cost;
    let mut prev_g: Option<ControlField> = None;
    let mut prev_grad: Option<ControlField> = None;

    for iter in 0..max_iter {
        // Barzilai-Borwein step from the last accepted move
        if let (Some(pg), Some(pgr)) = (&prev_g, &prev_grad) {
            let s = g.sub(pg);
            let y = grad.sub(pgr);
            let sy = control_inner(&s, &y, disc, dt);
            let ss = control_inner(&s, &s, disc, dt);
            if sy > 0.0 && ss > 0.0 {
                step = (ss / sy).clamp(1e-12 / m_cost, 1e12 / m_cost);
            }
        }

        let mut backtracks = 0usize;
        let mut t = step;
        let accepted = loop {
            let mut candidate = g.clone();
            candidate.axpy(-t, &grad);
            let (cand_traj, _) = solve_parabolic_vi(spec, &candidate, disc)?;
            let cand_cost = cost_j(&candidate, &cand_traj, m_cost, &disc.ops);
            if cand_cost <= cost - armijo_c * t * grad_norm_sq {
                break (candidate, cand_traj, cand_cost);
            }
            t *= 0.5;
            backtracks += 1;
            if t < 1e-16 {
                return Err(Error::LineSearchFailure { step: t });
            }
        };
        report.line_search_backtracks.push(backtracks);
        step = t;

        prev_g = Some(g);
        prev_grad = Some(grad.clone());
        g = accepted.0;
        cost = accepted.2;
        report.cost_history.push(cost);
        report.iterations = iter + 1;

        let (new_grad, new_cost, new_traj) = cost_and_gradient(&g, spec, m_cost, disc)?;
        debug_assert!((new_cost - cost).abs() <= 1e-9 * cost.abs().max(1.0));
        grad = new_grad;
        traj = new_traj;
        grad_norm_sq = control_inner(&grad, &grad, disc, dt);
        if grad_norm_sq.sqrt() <= grad_tol {
            report.converged = true;
            break;
        }
    }
    report.final_cost = cost;
    report.final_gradient_norm = grad_norm_sq.sqrt();
    Ok((g, traj, report))
}
