//! P1 finite-element operators on the tagged meshes.
//!
//! Mass matrices are lumped (row sums) throughout, including the boundary
//! masses. This keeps every system matrix used by the time stepper an
//! M-matrix, so the componentwise comparison arguments hold for the discrete
//! problems and not just in the limit. Boundary integrals over Γ2 use the
//! matching nodal quadrature; in 1D the boundary "integral" is a point
//! evaluation with weight 1.

use super::mesh::{Cells, Mesh, NodeTag};
use super::sparse::{solve_spd, SparseOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FemOperators {
    /// Lumped mass matrix (diagonal).
    pub mass_lumped: SparseOperator,
    /// a-form matrix: ∫∇u·∇v + c0·(lumped) ∫uv.
    pub stiffness: SparseOperator,
    /// Pure gradient part of the stiffness (c0 = 0).
    pub stiffness_pure: SparseOperator,
    /// Lumped boundary mass on Γ1 (diagonal).
    pub gamma1_mass: SparseOperator,
    /// Nodal quadrature weights on Γ2 (> 0 exactly on Γ2 nodes).
    pub gamma2_weights: Vec<f64>,
    /// H¹ Gram matrix: stiffness_pure + mass_lumped.
    pub gram: SparseOperator,
    pub c0: f64,
    /// Lower bound for the coercivity constant of the a-form with respect to
    /// the H¹ Gram matrix.
    pub lambda_estimate: f64,
    /// Node tags copied from the mesh, for boundary handling downstream.
    pub tags: Vec<NodeTag>,
}

impl FemOperators {
    pub fn n_nodes(&self) -> usize {
        self.mass_lumped.dimension()
    }

    pub fn mass_diag(&self) -> Vec<f64> {
        self.mass_lumped.diag()
    }

    pub fn gamma1_diag(&self) -> Vec<f64> {
        self.gamma1_mass.diag()
    }

    pub fn is_gamma1(&self, i: usize) -> bool {
        self.tags[i] == NodeTag::Gamma1
    }
}

/// Assembles all operators on the mesh for the a-form ∫∇u·∇v + c0∫uv.
pub fn assemble(mesh: &Mesh, c0: f64) -> Result<FemOperators> {
    if c0 < 0.0 {
        return Err(Error::invalid("c0 must be nonnegative"));
    }
    let n = mesh.n_nodes();
    let mut stiff_triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut mass_diag = vec![0.0; n];

    match &mesh.cells {
        Cells::Segments(segments) => {
            for seg in segments {
                let [a, b] = *seg;
                let l = (mesh.nodes[b][0] - mesh.nodes[a][0]).abs();
                let k = 1.0 / l;
                stiff_triplets.push((a, a, k));
                stiff_triplets.push((b, b, k));
                stiff_triplets.push((a, b, -k));
                stiff_triplets.push((b, a, -k));
                mass_diag[a] += 0.5 * l;
                mass_diag[b] += 0.5 * l;
            }
        }
        Cells::Triangles(triangles) => {
            for tri in triangles {
                let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.nodes[v]).collect();
                let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                    - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
                let area = 0.5 * det.abs();
                // gradient coefficients of the barycentric basis
                let bx = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
                let by = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
                for r in 0..3 {
                    mass_diag[tri[r]] += area / 3.0;
                    for c in 0..3 {
                        let v = (bx[r] * bx[c] + by[r] * by[c]) / (4.0 * area);
                        stiff_triplets.push((tri[r], tri[c], v));
                    }
                }
            }
        }
    }

    let stiffness_pure = SparseOperator::from_triplets(n, &stiff_triplets);
    let mass_lumped = SparseOperator::from_diagonal(&mass_diag);
    let stiffness = stiffness_pure.add_scaled_diagonal(&mass_diag, c0);
    let gram = stiffness_pure.add_scaled_diagonal(&mass_diag, 1.0);

    let (gamma1_diag, gamma2_weights) = boundary_weights(mesh);
    let gamma1_mass = SparseOperator::from_diagonal(&gamma1_diag);

    let lambda_estimate = if c0 > 0.0 {
        smallest_generalized_eigenvalue(&stiffness, &gram)?
    } else {
        // Without the zero-order term the a-form is only coercive on the
        // subspace vanishing on Γ1; estimate there.
        let free: Vec<usize> = (0..n).filter(|&i| mesh.tags[i] != NodeTag::Gamma1).collect();
        smallest_generalized_eigenvalue(&stiffness.restrict(&free), &gram.restrict(&free))?
    };

    Ok(FemOperators {
        mass_lumped,
        stiffness,
        stiffness_pure,
        gamma1_mass,
        gamma2_weights,
        gram,
        c0,
        lambda_estimate,
        tags: mesh.tags.clone(),
    })
}

fn boundary_weights(mesh: &Mesh) -> (Vec<f64>, Vec<f64>) {
    let n = mesh.n_nodes();
    let mut g1 = vec![0.0; n];
    let mut g2 = vec![0.0; n];
    match mesh.dim {
        1 => {
            // point evaluations: counting measure at each end
            for &i in &mesh.gamma1_nodes {
                g1[i] = 1.0;
            }
            for &i in &mesh.gamma2_nodes {
                g2[i] = 1.0;
            }
        }
        _ => {
            let per_axis = (n as f64).sqrt().round() as usize - 1;
            let h = 1.0 / per_axis as f64;
            let np = per_axis + 1;
            let idx = |i: usize, j: usize| j * np + i;
            // boundary segments along the four edges
            let mut add = |a: usize, b: usize| {
                for v in [a, b] {
                    match mesh.tags[v] {
                        NodeTag::Gamma1 => g1[v] += 0.5 * h,
                        NodeTag::Gamma2 => g2[v] += 0.5 * h,
                        NodeTag::Interior => unreachable!("boundary segment endpoint untagged"),
                    }
                }
            };
            for j in 0..per_axis {
                add(idx(0, j), idx(0, j + 1)); // x = 0 (Γ1)
                add(idx(per_axis, j), idx(per_axis, j + 1)); // x = 1
            }
            for i in 0..per_axis {
                add(idx(i, 0), idx(i + 1, 0)); // y = 0
                add(idx(i, per_axis), idx(i + 1, per_axis)); // y = 1
            }
        }
    }
    (g1, g2)
}

/// Squared dual (V') norm of a load vector: fᵀ G⁻¹ f with G the H¹ Gram
/// matrix, i.e. the norm of the Riesz representative.
pub fn dual_norm_sq(f: &[f64], ops: &FemOperators) -> Result<f64> {
    if f.len() != ops.n_nodes() {
        return Err(Error::invalid("load vector length does not match the mesh"));
    }
    let z = solve_spd(&ops.gram, f, 1e-13)?;
    Ok(f.iter().zip(&z).map(|(a, b)| a * b).sum())
}

/// Smallest generalized eigenvalue of (A, G), both SPD, by inverse power
/// iteration on A⁻¹G with G-normalization.
///
/// The Rayleigh quotient approaches the eigenvalue from above, so the
/// residual radius ‖Ax − ρGx‖_{G⁻¹} is subtracted to return a usable lower
/// bound. The start vector is a fixed pseudo-random mix so no eigenvector is
/// missed (the constant vector is itself an eigenvector on these meshes).
pub fn smallest_generalized_eigenvalue(a: &SparseOperator, g: &SparseOperator) -> Result<f64> {
    let n = a.dimension();
    assert_eq!(n, g.dimension());
    let mut state: u64 = 0x9e3779b97f4a7c15;
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            1.0 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let gnorm = g.quadratic_form(&x).sqrt();
    for xi in x.iter_mut() {
        *xi /= gnorm;
    }
    let mut rho = a.quadratic_form(&x);
    let mut rho_prev = f64::INFINITY;
    for _ in 0..500 {
        if (rho_prev - rho).abs() <= 1e-8 * rho.abs() {
            break;
        }
        rho_prev = rho;
        let gx = g.matvec(&x);
        let y = solve_spd(a, &gx, 1e-12)?;
        let ynorm = g.quadratic_form(&y).sqrt();
        if ynorm == 0.0 {
            return Err(Error::invalid("eigenvalue iteration degenerated"));
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ynorm;
        }
        rho = a.quadratic_form(&x);
    }
    // residual radius in the G⁻¹ norm (x is G-normalized)
    let ax = a.matvec(&x);
    let gx = g.matvec(&x);
    let r: Vec<f64> = ax.iter().zip(&gx).map(|(av, gv)| av - rho * gv).collect();
    let ginv_r = solve_spd(g, &r, 1e-12)?;
    let eta = r
        .iter()
        .zip(&ginv_r)
        .map(|(ri, zi)| ri * zi)
        .sum::<f64>()
        .max(0.0)
        .sqrt();
    Ok(rho - eta)
}
