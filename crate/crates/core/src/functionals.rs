//! Scalar quantities of the model: the friction functional, space-time norms,
//! the tracking cost, and the decomposition terms entering the energy and
//! convexity estimates.
//!
//! Time integrals of trajectories and controls use the right-endpoint rule on
//! the stepping grid, matching the implicit scheme. The H inner product is the
//! lumped mass matrix; the V form is the H¹ Gram matrix.

use crate::error::{Error, Result};
use crate::fem::{dual_norm_sq, FemOperators};
use crate::state::{
    control_load, solve_parabolic_vi, BcMode, ControlField, Discretization, ProblemSpec,
    StateTrajectory,
};

/// Friction functional Σ_{Γ2} w·q·√(ε² + v²); with ε = 0 this is the exact
/// nonsmooth functional Σ w·q·|v|.
pub fn phi(v: &[f64], ops: &FemOperators, q: &[f64], epsilon: f64) -> f64 {
    ops.gamma2_weights
        .iter()
        .zip(q)
        .zip(v)
        .filter(|((w, _), _)| **w > 0.0)
        .map(|((w, qi), vi)| w * qi * (epsilon * epsilon + vi * vi).sqrt())
        .sum()
}

/// Squared L²(0,T;H) norm of a trajectory (levels t_1..t_N).
pub fn norm_l2h_sq(traj: &StateTrajectory, ops: &FemOperators) -> f64 {
    let mut acc = 0.0;
    for level in 1..traj.n_levels() {
        acc += traj.dt * ops.mass_lumped.quadratic_form(traj.level(level));
    }
    acc
}

/// Squared L²(0,T;V) norm of a trajectory (levels t_1..t_N).
pub fn norm_l2v_sq(traj: &StateTrajectory, ops: &FemOperators) -> f64 {
    let mut acc = 0.0;
    for level in 1..traj.n_levels() {
        acc += traj.dt * ops.gram.quadratic_form(traj.level(level));
    }
    acc
}

/// L∞(0,T;H) norm of a trajectory (all levels, t_0 included).
pub fn norm_linf_h(traj: &StateTrajectory, ops: &FemOperators) -> f64 {
    (0..traj.n_levels())
        .map(|level| ops.mass_lumped.quadratic_form(traj.level(level)).sqrt())
        .fold(0.0, f64::max)
}

/// Squared L²(0,T;H) norm of a control field.
pub fn control_norm_l2h_sq(g: &ControlField, ops: &FemOperators, dt: f64) -> f64 {
    let mut acc = 0.0;
    for step in 0..g.n_steps() {
        acc += dt * ops.mass_lumped.quadratic_form(g.row(step));
    }
    acc
}

/// Squared L²(0,T;V') norm of a control, through the Riesz map of the H¹
/// Gram matrix applied to the lumped loads.
pub fn norm_l2vprime_sq(g: &ControlField, ops: &FemOperators, dt: f64) -> Result<f64> {
    let mut acc = 0.0;
    for step in 0..g.n_steps() {
        let load = control_load(g.row(step), ops);
        acc += dt * dual_norm_sq(&load, ops)?;
    }
    Ok(acc)
}

/// Tracking-plus-regularization cost ½‖u‖²_{L²(0,T;H)} + (M/2)‖g‖²_{L²(0,T;H)}.
///
/// The trajectory is taken as given; it is the caller's responsibility that
/// it solves the state problem for `g`.
pub fn cost_j(g: &ControlField, traj: &StateTrajectory, m_cost: f64, ops: &FemOperators) -> f64 {
    assert_eq!(g.n_steps(), traj.n_steps(), "control and state grids differ");
    0.5 * norm_l2h_sq(traj, ops) + 0.5 * m_cost * control_norm_l2h_sq(g, ops, traj.dt)
}

/// Terms of the convex-combination energy estimate.
#[derive(Debug, Clone)]
pub struct EnergyTerms {
    /// time integral of the cross residual of the first state tested with the second
    pub alpha_total: f64,
    /// time integral of the cross residual of the second state tested with the first
    pub beta_total: f64,
    /// time integral of the residual of the first state tested with the combined state
    pub i14: f64,
    /// time integral of the residual of the second state tested with the combined state
    pub i24: f64,
    /// ½‖u4-u3‖²_{L∞H} + λ‖u4-u3‖²_{L²V}
    pub lhs_energy: f64,
    /// time integral of μΦ(u1) + (1-μ)Φ(u2) - Φ(u3)
    pub phi_gap: f64,
}

/// One cross residual at a single time level:
///   ⟨u̇, v-u⟩ + a(u, v-u) + Φ(v) - Φ(u) - ⟨load(g), v-u⟩
/// with the backward difference for u̇ and mode-dependent a-form and load.
#[allow(clippy::too_many_arguments)]
fn cross_residual(
    u_now: &[f64],
    u_prev: &[f64],
    v: &[f64],
    g_row: &[f64],
    spec: &ProblemSpec,
    ops: &FemOperators,
    dt: f64,
) -> f64 {
    let n = u_now.len();
    let mass = ops.mass_diag();
    let mut diff = vec![0.0; n];
    for i in 0..n {
        diff[i] = v[i] - u_now[i];
    }
    let mut acc = 0.0;
    // ⟨u̇, v-u⟩ with the lumped H product
    for i in 0..n {
        acc += mass[i] * (u_now[i] - u_prev[i]) / dt * diff[i];
    }
    // a(u, v-u), plus the boundary part of the Robin form
    acc += ops.stiffness.bilinear(u_now, &diff);
    if let BcMode::Robin { h } = spec.bc_mode {
        let g1 = ops.gamma1_diag();
        for i in 0..n {
            acc += h * g1[i] * u_now[i] * diff[i];
        }
        // Robin load carries the boundary datum
        for i in 0..n {
            acc -= h * g1[i] * spec.b[i] * diff[i];
        }
    }
    acc += phi(v, ops, &spec.q, 0.0) - phi(u_now, ops, &spec.q, 0.0);
    let load = control_load(g_row, ops);
    for i in 0..n {
        acc -= load[i] * diff[i];
    }
    acc
}

/// Evaluates the decomposition terms for states u1, u2 (controls g1, g2) and
/// the state u4 of the combined control; u3 = μu1 + (1-μ)u2 is formed
/// internally.
#[allow(clippy::too_many_arguments)]
pub fn energy_terms(
    u1: &StateTrajectory,
    u2: &StateTrajectory,
    u4: &StateTrajectory,
    g1: &ControlField,
    g2: &ControlField,
    mu: f64,
    spec: &ProblemSpec,
    disc: &Discretization,
) -> Result<EnergyTerms> {
    let ops = &disc.ops;
    let n_levels = u1.n_levels();
    if u2.n_levels() != n_levels
        || u4.n_levels() != n_levels
        || u1.n_nodes() != u2.n_nodes()
        || u1.n_nodes() != u4.n_nodes()
        || g1.n_steps() + 1 != n_levels
        || g2.n_steps() + 1 != n_levels
    {
        return Err(Error::invalid("trajectories and controls must share one grid"));
    }
    let dt = u1.dt;
    let u3 = StateTrajectory::combine(mu, u1, u2);

    let mut alpha_total = 0.0;
    let mut beta_total = 0.0;
    let mut i14 = 0.0;
    let mut i24 = 0.0;
    let mut phi_gap = 0.0;
    for level in 1..n_levels {
        let step = level - 1;
        alpha_total += dt
            * cross_residual(
                u1.level(level),
                u1.level(level - 1),
                u2.level(level),
                g1.row(step),
                spec,
                ops,
                dt,
            );
        beta_total += dt
            * cross_residual(
                u2.level(level),
                u2.level(level - 1),
                u1.level(level),
                g2.row(step),
                spec,
                ops,
                dt,
            );
        i14 += dt
            * cross_residual(
                u1.level(level),
                u1.level(level - 1),
                u4.level(level),
                g1.row(step),
                spec,
                ops,
                dt,
            );
        i24 += dt
            * cross_residual(
                u2.level(level),
                u2.level(level - 1),
                u4.level(level),
                g2.row(step),
                spec,
                ops,
                dt,
            );
        phi_gap += dt
            * (mu * phi(u1.level(level), ops, &spec.q, 0.0)
                + (1.0 - mu) * phi(u2.level(level), ops, &spec.q, 0.0)
                - phi(u3.level(level), ops, &spec.q, 0.0));
    }

    let diff = u4.sub(&u3);
    let lhs_energy = 0.5 * norm_linf_h(&diff, ops).powi(2)
        + ops.lambda_estimate * norm_l2v_sq(&diff, ops);

    Ok(EnergyTerms {
        alpha_total,
        beta_total,
        i14,
        i24,
        lhs_energy,
        phi_gap,
    })
}

/// Decomposition of the convexity gap of the cost along a segment of
/// controls.
#[derive(Debug, Clone)]
pub struct ConvexityGap {
    /// μJ(g1) + (1-μ)J(g2) - J(μg1 + (1-μ)g2)
    pub gap: f64,
    /// ½(‖u3‖² - ‖u4‖²) in L²(0,T;H)
    pub state_term: f64,
    /// ½μ(1-μ)‖u1-u2‖²
    pub u_diff_term: f64,
    /// (M/2)μ(1-μ)‖g1-g2‖²
    pub g_diff_term: f64,
}

/// Solves the state problems at g1, g2, and the combined control, and
/// evaluates the convexity-gap decomposition. The identity
/// gap = state_term + u_diff_term + g_diff_term holds up to rounding for any
/// inputs.
pub fn convexity_gap(
    g1: &ControlField,
    g2: &ControlField,
    mu: f64,
    spec: &ProblemSpec,
    m_cost: f64,
    disc: &Discretization,
) -> Result<ConvexityGap> {
    let ops = &disc.ops;
    let dt = spec.dt();
    let g3 = ControlField::combine(mu, g1, g2);
    let (u1, _) = solve_parabolic_vi(spec, g1, disc)?;
    let (u2, _) = solve_parabolic_vi(spec, g2, disc)?;
    let (u4, _) = solve_parabolic_vi(spec, &g3, disc)?;
    let u3 = StateTrajectory::combine(mu, &u1, &u2);

    let j1 = cost_j(g1, &u1, m_cost, ops);
    let j2 = cost_j(g2, &u2, m_cost, ops);
    let j3 = cost_j(&g3, &u4, m_cost, ops);
    let gap = mu * j1 + (1.0 - mu) * j2 - j3;

    let state_term = 0.5 * (norm_l2h_sq(&u3, ops) - norm_l2h_sq(&u4, ops));
    let u_diff_term = 0.5 * mu * (1.0 - mu) * norm_l2h_sq(&u1.sub(&u2), ops);
    let g_diff_term =
        0.5 * m_cost * mu * (1.0 - mu) * control_norm_l2h_sq(&g1.sub(g2), ops, dt);

    Ok(ConvexityGap {
        gap,
        state_term,
        u_diff_term,
        g_diff_term,
    })
}
