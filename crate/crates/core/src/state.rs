//! Time-discretized solver for the parabolic variational inequality with
//! boundary friction.
//!
//! Each backward-Euler step is a strictly convex minimization whose friction
//! term is smoothed: |v| is replaced by √(ε² + v²) on the friction boundary,
//! and the resulting nonlinear equation is solved by a damped Newton
//! iteration. An ε-continuation ladder (1e-1, 1e-2, … down to the requested
//! ε) restarts the iteration if it stalls. A coordinate-descent oracle
//! minimizes the exact nonsmooth step energy on small instances and serves as
//! the reference the Newton path is tested against.

use crate::error::{Error, Result};
use crate::fem::{assemble, build_mesh, solve_spd_from, FemOperators, Mesh, SparseOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Boundary condition imposed on Γ1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcMode {
    /// u = b on Γ1, enforced by eliminating the Γ1 unknowns.
    Dirichlet,
    /// Heat-transfer law -∂u/∂n = h(u - b) with coefficient h > 0.
    Robin { h: f64 },
}

/// All data of one state problem. `q`, `b`, and `u_b` are nodal vectors on
/// the full mesh; `q` matters on Γ2, `b` on Γ1.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub dim: usize,
    pub n: usize,
    pub c0: f64,
    pub q: Vec<f64>,
    pub b: Vec<f64>,
    pub u_b: Vec<f64>,
    pub t_final: f64,
    pub n_steps: usize,
    pub bc_mode: BcMode,
    pub epsilon: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl ProblemSpec {
    /// Spec with homogeneous data and the default numerical parameters
    /// (c0 = 1, T = 1, ε = 1e-8, newton_tol = 1e-11).
    pub fn new(dim: usize, n: usize, n_steps: usize, bc_mode: BcMode) -> Result<Self> {
        let mesh = build_mesh(dim, n)?;
        let nn = mesh.n_nodes();
        Ok(ProblemSpec {
            dim,
            n,
            c0: 1.0,
            q: vec![0.0; nn],
            b: vec![0.0; nn],
            u_b: vec![0.0; nn],
            t_final: 1.0,
            n_steps,
            bc_mode,
            epsilon: 1e-8,
            newton_tol: 1e-11,
            newton_max_iter: 50,
        })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    /// Sets `q` to a constant on Γ2 nodes (zero elsewhere).
    pub fn with_constant_q(mut self, mesh: &Mesh, q: f64) -> Self {
        self.q = vec![0.0; mesh.n_nodes()];
        for &i in &mesh.gamma2_nodes {
            self.q[i] = q;
        }
        self
    }

    /// Sets `b` and the initial state to the same constant (compatible data).
    pub fn with_constant_b_and_start(mut self, value: f64) -> Self {
        self.b = vec![value; self.b.len()];
        self.u_b = vec![value; self.u_b.len()];
        self
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let nn = mesh.n_nodes();
        if self.q.len() != nn || self.b.len() != nn || self.u_b.len() != nn {
            return Err(Error::invalid("nodal data length does not match the mesh"));
        }
        if self.q.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("q must be nonnegative"));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::invalid("t_final must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps must be at least 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if let BcMode::Robin { h } = self.bc_mode {
            if !(h > 0.0) {
                return Err(Error::invalid("Robin coefficient h must be positive"));
            }
        }
        if self.bc_mode == BcMode::Dirichlet {
            for &i in &mesh.gamma1_nodes {
                if self.u_b[i] != self.b[i] {
                    return Err(Error::invalid(
                        "initial state must equal b on Gamma1 under Dirichlet conditions",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Nodal control values at the time levels t_1..t_N (right endpoints of the
/// stepping scheme), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    n_steps: usize,
    n_nodes: usize,
    values: Vec<f64>,
}

impl ControlField {
    pub fn zeros(n_steps: usize, n_nodes: usize) -> Self {
        ControlField {
            n_steps,
            n_nodes,
            values: vec![0.0; n_steps * n_nodes],
        }
    }

    pub fn constant(c: f64, n_steps: usize, n_nodes: usize) -> Self {
        ControlField {
            n_steps,
            n_nodes,
            values: vec![c; n_steps * n_nodes],
        }
    }

    /// Seeded i.i.d. uniform nodal values on `range`.
    pub fn random(seed: u64, range: (f64, f64), n_steps: usize, n_nodes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n_steps * n_nodes)
            .map(|_| rng.random_range(range.0..=range.1))
            .collect();
        ControlField {
            n_steps,
            n_nodes,
            values,
        }
    }

    /// Seeded random nodal values held constant in time. Sustained loads
    /// drive the state to O(1) amplitudes, which i.i.d.-in-time draws with a
    /// sign-symmetric range would average away.
    pub fn random_steady(seed: u64, range: (f64, f64), n_steps: usize, n_nodes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row: Vec<f64> = (0..n_nodes)
            .map(|_| rng.random_range(range.0..=range.1))
            .collect();
        let mut values = Vec::with_capacity(n_steps * n_nodes);
        for _ in 0..n_steps {
            values.extend_from_slice(&row);
        }
        ControlField {
            n_steps,
            n_nodes,
            values,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_steps = rows.len();
        let n_nodes = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != n_nodes) {
            return Err(Error::invalid("control rows have inconsistent lengths"));
        }
        Ok(ControlField {
            n_steps,
            n_nodes,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Control at time level t_{step+1}, step in 0..n_steps.
    pub fn row(&self, step: usize) -> &[f64] {
        &self.values[step * self.n_nodes..(step + 1) * self.n_nodes]
    }

    pub fn row_mut(&mut self, step: usize) -> &mut [f64] {
        &mut self.values[step * self.n_nodes..(step + 1) * self.n_nodes]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        ControlField {
            n_steps: self.n_steps,
            n_nodes: self.n_nodes,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// mu·a + (1-mu)·b.
    pub fn combine(mu: f64, a: &ControlField, b: &ControlField) -> Self {
        assert_eq!(a.values.len(), b.values.len());
        ControlField {
            n_steps: a.n_steps,
            n_nodes: a.n_nodes,
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| mu * x + (1.0 - mu) * y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ControlField) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        ControlField {
            n_steps: self.n_steps,
            n_nodes: self.n_nodes,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x - y)
                .collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &ControlField) {
        assert_eq!(self.values.len(), other.values.len());
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += alpha * w;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn elementwise_min(a: &ControlField, b: &ControlField) -> Self {
        assert_eq!(a.values.len(), b.values.len());
        ControlField {
            n_steps: a.n_steps,
            n_nodes: a.n_nodes,
            values: a.values.iter().zip(&b.values).map(|(x, y)| x.min(*y)).collect(),
        }
    }

    pub fn elementwise_max(a: &ControlField, b: &ControlField) -> Self {
        assert_eq!(a.values.len(), b.values.len());
        ControlField {
            n_steps: a.n_steps,
            n_nodes: a.n_nodes,
            values: a.values.iter().zip(&b.values).map(|(x, y)| x.max(*y)).collect(),
        }
    }
}

/// Nodal state values at the time levels t_0..t_N.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    n_nodes: usize,
    pub dt: f64,
    values: Vec<f64>,
}

impl StateTrajectory {
    pub fn new(n_steps: usize, n_nodes: usize, dt: f64) -> Self {
        StateTrajectory {
            n_nodes,
            dt,
            values: vec![0.0; (n_steps + 1) * n_nodes],
        }
    }

    pub fn n_levels(&self) -> usize {
        self.values.len() / self.n_nodes
    }

    pub fn n_steps(&self) -> usize {
        self.n_levels() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// State at time level t_level, level in 0..=n_steps.
    pub fn level(&self, level: usize) -> &[f64] {
        &self.values[level * self.n_nodes..(level + 1) * self.n_nodes]
    }

    pub fn level_mut(&mut self, level: usize) -> &mut [f64] {
        &mut self.values[level * self.n_nodes..(level + 1) * self.n_nodes]
    }

    pub fn final_level(&self) -> &[f64] {
        self.level(self.n_levels() - 1)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// mu·a + (1-mu)·b, level by level.
    pub fn combine(mu: f64, a: &StateTrajectory, b: &StateTrajectory) -> Self {
        assert_eq!(a.values.len(), b.values.len());
        StateTrajectory {
            n_nodes: a.n_nodes,
            dt: a.dt,
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| mu * x + (1.0 - mu) * y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &StateTrajectory) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        StateTrajectory {
            n_nodes: self.n_nodes,
            dt: self.dt,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x - y)
                .collect(),
        }
    }

    /// Largest |a - b| over all nodes and levels.
    pub fn max_abs_diff(&self, other: &StateTrajectory) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }
}

/// Per-solve diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub newton_iters: Vec<usize>,
    pub final_residuals: Vec<f64>,
    pub epsilon: f64,
    pub total_cg_iters: usize,
}

/// Mesh plus assembled operators for one problem spec; build once and share
/// across solves.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub ops: FemOperators,
}

impl Discretization {
    pub fn build(spec: &ProblemSpec) -> Result<Self> {
        let mesh = build_mesh(spec.dim, spec.n)?;
        spec.validate(&mesh)?;
        let ops = assemble(&mesh, spec.c0)?;
        Ok(Discretization { mesh, ops })
    }
}

/// Reduced per-step system: unknowns are the non-Γ1 nodes under Dirichlet
/// conditions and all nodes under Robin conditions.
pub(crate) struct StepSystem {
    pub free: Vec<usize>,
    /// system matrix M/dt + stiffness (+ h·Γ1-mass), restricted to free nodes
    pub matrix: SparseOperator,
    /// friction coefficient w_i·q_i per free index (zero off Γ2)
    pub wq: Vec<f64>,
    /// lumped mass / dt per free index
    pub m_dt: Vec<f64>,
    /// constant right-hand side from the boundary datum
    pub base_rhs: Vec<f64>,
    /// Γ1 values to reinstate when expanding (Dirichlet), none for Robin
    dirichlet_values: Option<Vec<f64>>,
    n_nodes: usize,
}

impl StepSystem {
    pub fn new(spec: &ProblemSpec, disc: &Discretization) -> StepSystem {
        let ops = &disc.ops;
        let n = ops.n_nodes();
        let dt = spec.dt();
        let mass = ops.mass_diag();
        let m_over_dt: Vec<f64> = mass.iter().map(|m| m / dt).collect();

        let (free, full_matrix, base_full, dirichlet_values) = match spec.bc_mode {
            BcMode::Dirichlet => {
                let free: Vec<usize> = (0..n).filter(|&i| !ops.is_gamma1(i)).collect();
                let full = ops.stiffness.add_scaled_diagonal(&m_over_dt, 1.0);
                // move the known Γ1 values to the right-hand side
                let mut b_ext = vec![0.0; n];
                for i in 0..n {
                    if ops.is_gamma1(i) {
                        b_ext[i] = spec.b[i];
                    }
                }
                let coupling = ops.stiffness.matvec(&b_ext);
                let base: Vec<f64> = coupling.iter().map(|v| -v).collect();
                (free, full, base, Some(b_ext))
            }
            BcMode::Robin { h } => {
                let free: Vec<usize> = (0..n).collect();
                let g1 = ops.gamma1_diag();
                let full = ops
                    .stiffness
                    .add_scaled_diagonal(&m_over_dt, 1.0)
                    .add_scaled_diagonal(&g1, h);
                let base: Vec<f64> = g1.iter().zip(&spec.b).map(|(w, b)| h * w * b).collect();
                (free, full, base, None)
            }
        };

        let matrix = full_matrix.restrict(&free);
        let wq: Vec<f64> = free
            .iter()
            .map(|&i| ops.gamma2_weights[i] * spec.q[i])
            .collect();
        let m_dt: Vec<f64> = free.iter().map(|&i| m_over_dt[i]).collect();
        let base_rhs: Vec<f64> = free.iter().map(|&i| base_full[i]).collect();
        StepSystem {
            free,
            matrix,
            wq,
            m_dt,
            base_rhs,
            dirichlet_values,
            n_nodes: n,
        }
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Full right-hand side of the step: load + M·prev/dt + boundary part,
    /// restricted to the free nodes.
    pub fn rhs(&self, load_full: &[f64], prev_full: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .enumerate()
            .map(|(p, &i)| load_full[i] + self.m_dt[p] * prev_full[i] + self.base_rhs[p])
            .collect()
    }

    /// Expands a free-node vector back to the full mesh, reinstating the
    /// boundary values under Dirichlet conditions.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = match &self.dirichlet_values {
            Some(b_ext) => b_ext.clone(),
            None => vec![0.0; self.n_nodes],
        };
        for (p, &i) in self.free.iter().enumerate() {
            full[i] = reduced[p];
        }
        full
    }

    /// Friction term N_ε(u) on the free nodes.
    fn friction(&self, u: &[f64], eps: f64) -> Vec<f64> {
        u.iter()
            .zip(&self.wq)
            .map(|(&ui, &wq)| {
                if wq == 0.0 {
                    0.0
                } else {
                    wq * ui / (eps * eps + ui * ui).sqrt()
                }
            })
            .collect()
    }

    fn residual(&self, u: &[f64], rhs: &[f64], eps: f64) -> Vec<f64> {
        let su = self.matrix.matvec(u);
        let nu = self.friction(u, eps);
        su.iter()
            .zip(&nu)
            .zip(rhs)
            .map(|((s, n), r)| s + n - r)
            .collect()
    }

    /// Damped Newton iteration for S·u + N_ε(u) = rhs.
    fn newton(
        &self,
        rhs: &[f64],
        start: &[f64],
        eps: f64,
        tol: f64,
        max_iter: usize,
    ) -> (Vec<f64>, NewtonStats) {
        let mut u = start.to_vec();
        let mut stats = NewtonStats::default();
        for _ in 0..max_iter {
            let r = self.residual(&u, rhs, eps);
            let rnorm = max_abs(&r);
            stats.residual = rnorm;
            if rnorm <= tol {
                stats.converged = true;
                return (u, stats);
            }
            // Jacobian: S + diag(w q ε² / (ε² + u²)^{3/2})
            let jac_diag: Vec<f64> = u
                .iter()
                .zip(&self.wq)
                .map(|(&ui, &wq)| {
                    if wq == 0.0 {
                        0.0
                    } else {
                        let d = eps * eps + ui * ui;
                        wq * eps * eps / (d * d.sqrt())
                    }
                })
                .collect();
            let jac = self.matrix.add_scaled_diagonal(&jac_diag, 1.0);
            let (delta, cg_iters) = match solve_spd_from(&jac, &r, None, 1e-12) {
                Ok(out) => out,
                Err(_) => return (u, stats),
            };
            stats.cg_iters += cg_iters;
            // backtrack on the residual norm if the full step overshoots
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = u
                    .iter()
                    .zip(&delta)
                    .map(|(ui, di)| ui - step * di)
                    .collect();
                let tnorm = max_abs(&self.residual(&trial, rhs, eps));
                if tnorm < rnorm {
                    u = trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            stats.iterations += 1;
            if !accepted {
                return (u, stats);
            }
        }
        stats.residual = max_abs(&self.residual(&u, rhs, eps));
        stats.converged = stats.residual <= tol;
        (u, stats)
    }

    /// Newton with ε-continuation: if the direct solve at `eps` stalls,
    /// restart from the ladder 1e-1, 1e-2, … down to `eps`.
    pub fn solve_step(
        &self,
        rhs: &[f64],
        start: &[f64],
        spec: &ProblemSpec,
        step_index: usize,
    ) -> Result<(Vec<f64>, NewtonStats)> {
        let (u, stats) = self.newton(rhs, start, spec.epsilon, spec.newton_tol, spec.newton_max_iter);
        if stats.converged {
            return Ok((u, stats));
        }
        let mut history = vec![stats.residual];
        let mut u = start.to_vec();
        let mut total = NewtonStats::default();
        let mut k = 1;
        loop {
            let eps_k = (10f64).powi(-k).max(spec.epsilon);
            let (next, s) = self.newton(rhs, &u, eps_k, spec.newton_tol, spec.newton_max_iter);
            history.push(s.residual);
            total.iterations += s.iterations;
            total.cg_iters += s.cg_iters;
            u = next;
            if eps_k <= spec.epsilon {
                if s.converged {
                    total.converged = true;
                    total.residual = s.residual;
                    return Ok((u, total));
                }
                return Err(Error::NewtonFailure {
                    step: step_index,
                    history,
                });
            }
            k += 1;
        }
    }

    /// Step energy ½uᵀSu + Σ w q |u| − rhsᵀu with the exact friction term.
    pub fn energy(&self, u: &[f64], rhs: &[f64]) -> f64 {
        let quad = 0.5 * self.matrix.quadratic_form(u);
        let friction: f64 = u.iter().zip(&self.wq).map(|(ui, wq)| wq * ui.abs()).sum();
        let linear: f64 = u.iter().zip(rhs).map(|(ui, ri)| ui * ri).sum();
        quad + friction - linear
    }

    /// Exact minimizer of the nonsmooth step energy by cyclic coordinate
    /// descent with closed-form (soft-threshold) updates.
    pub fn minimize_energy(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let diag = self.matrix.diag();
        let mut u = vec![0.0; n];
        let mut su = vec![0.0; n];
        let mut energy = self.energy(&u, rhs);
        for _ in 0..500_000 {
            for j in 0..n {
                let c = rhs[j] - (su[j] - diag[j] * u[j]);
                let tau = self.wq[j];
                let new = if c.abs() <= tau {
                    0.0
                } else {
                    (c - tau.copysign(c)) / diag[j]
                };
                let delta = new - u[j];
                if delta != 0.0 {
                    for (col, v) in self.matrix.row(j) {
                        su[col] += v * delta;
                    }
                    u[j] = new;
                }
            }
            let new_energy = self.energy(&u, rhs);
            if energy - new_energy <= 1e-14 {
                break;
            }
            energy = new_energy;
        }
        u
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NewtonStats {
    pub iterations: usize,
    pub cg_iters: usize,
    pub residual: f64,
    pub converged: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Lumped-mass load vector of a nodal control: (M g)ᵢ.
pub fn control_load(g_row: &[f64], ops: &FemOperators) -> Vec<f64> {
    ops.mass_diag()
        .iter()
        .zip(g_row)
        .map(|(m, g)| m * g)
        .collect()
}

/// Marches the regularized problem from the initial state through all time
/// levels.
pub fn solve_parabolic_vi(
    spec: &ProblemSpec,
    g: &ControlField,
    disc: &Discretization,
) -> Result<(StateTrajectory, SolveReport)> {
    spec.validate(&disc.mesh)?;
    let n = disc.ops.n_nodes();
    if g.n_steps() != spec.n_steps || g.n_nodes() != n {
        return Err(Error::invalid("control dimensions do not match the problem"));
    }
    let system = StepSystem::new(spec, disc);
    let mut traj = StateTrajectory::new(spec.n_steps, n, spec.dt());
    traj.level_mut(0).copy_from_slice(&spec.u_b);

    let mut report = SolveReport {
        newton_iters: Vec::with_capacity(spec.n_steps),
        final_residuals: Vec::with_capacity(spec.n_steps),
        epsilon: spec.epsilon,
        total_cg_iters: 0,
    };
    let mut prev_free = system.restrict(&spec.u_b);
    for step in 1..=spec.n_steps {
        let load = control_load(g.row(step - 1), &disc.ops);
        let rhs = system.rhs(&load, traj.level(step - 1));
        let (u_free, stats) = system.solve_step(&rhs, &prev_free, spec, step)?;
        let full = system.expand(&u_free);
        traj.level_mut(step).copy_from_slice(&full);
        report.newton_iters.push(stats.iterations);
        report.final_residuals.push(stats.residual);
        report.total_cg_iters += stats.cg_iters;
        prev_free = u_free;
    }
    Ok((traj, report))
}

/// Solves one implicit step: S·u + N_ε(u) = load + M·prev/dt, returning the
/// full nodal vector.
pub fn solve_timestep(
    prev: &[f64],
    load: &[f64],
    spec: &ProblemSpec,
    disc: &Discretization,
) -> Result<Vec<f64>> {
    let system = StepSystem::new(spec, disc);
    let rhs = system.rhs(load, prev);
    let start = system.restrict(prev);
    let (u_free, _) = system.solve_step(&rhs, &start, spec, 1)?;
    Ok(system.expand(&u_free))
}

/// Reference per-step solve: minimizes the exact (ε = 0) nonsmooth step
/// energy by coordinate descent. Only for small instances.
pub fn oracle_minimize_timestep(
    prev: &[f64],
    load: &[f64],
    spec: &ProblemSpec,
    disc: &Discretization,
) -> Result<Vec<f64>> {
    let system = StepSystem::new(spec, disc);
    if system.free.len() > 50 {
        return Err(Error::invalid(
            "energy-minimization oracle is limited to 50 unknowns",
        ));
    }
    let rhs = system.rhs(load, prev);
    let u_free = system.minimize_energy(&rhs);
    Ok(system.expand(&u_free))
}

/// Step energy of a full nodal vector (restricted internally), with the exact
/// friction term; used to compare solver output against the oracle.
pub fn timestep_energy(
    u_full: &[f64],
    prev: &[f64],
    load: &[f64],
    spec: &ProblemSpec,
    disc: &Discretization,
) -> f64 {
    let system = StepSystem::new(spec, disc);
    let rhs = system.rhs(load, prev);
    system.energy(&system.restrict(u_full), &rhs)
}
