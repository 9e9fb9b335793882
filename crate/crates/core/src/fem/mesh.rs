//! Meshes of the unit interval and unit square with tagged boundary parts.
//!
//! The boundary splits into a clamped part Γ1 (where a Dirichlet or Robin
//! datum acts) and a friction part Γ2. In 1D, Γ1 = {x = 0} and Γ2 = {x = 1}.
//! On the unit square, Γ1 is the x = 0 edge (its corner nodes included) and
//! Γ2 is the remaining three edges. Triangulation uses right triangles cut
//! from a uniform grid along one diagonal, so the assembled stiffness matrix
//! has nonpositive off-diagonal entries, the property the discrete
//! comparison arguments rely on.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    Gamma1,
    Gamma2,
}

/// Element connectivity: segments in 1D, triangles in 2D.
#[derive(Debug, Clone)]
pub enum Cells {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Cells {
    pub fn len(&self) -> usize {
        match self {
            Cells::Segments(v) => v.len(),
            Cells::Triangles(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    /// Node coordinates; y = 0 in 1D.
    pub nodes: Vec<[f64; 2]>,
    pub cells: Cells,
    pub tags: Vec<NodeTag>,
    pub gamma1_nodes: Vec<usize>,
    pub gamma2_nodes: Vec<usize>,
    pub interior_nodes: Vec<usize>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Mesh spacing (elements are uniform along each axis).
    pub fn spacing(&self) -> f64 {
        match self.dim {
            1 => 1.0 / (self.nodes.len() - 1) as f64,
            _ => {
                let per_axis = (self.nodes.len() as f64).sqrt().round() as usize - 1;
                1.0 / per_axis as f64
            }
        }
    }
}

/// Builds the uniform mesh with `n` elements per axis.
///
/// 1D: n+1 equispaced nodes on [0,1]. 2D: (n+1)² nodes and 2n² triangles on
/// the unit square.
pub fn build_mesh(dim: usize, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("mesh resolution n must be at least 1"));
    }
    match dim {
        1 => Ok(build_1d(n)),
        2 => Ok(build_2d(n)),
        d => Err(Error::invalid(format!("mesh dimension must be 1 or 2, got {d}"))),
    }
}

fn build_1d(n: usize) -> Mesh {
    let nodes: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 / n as f64, 0.0]).collect();
    let segments: Vec<[usize; 2]> = (0..n).map(|i| [i, i + 1]).collect();
    let mut tags = vec![NodeTag::Interior; n + 1];
    tags[0] = NodeTag::Gamma1;
    tags[n] = NodeTag::Gamma2;
    finish(1, nodes, Cells::Segments(segments), tags)
}

fn build_2d(n: usize) -> Mesh {
    let np = n + 1;
    let idx = |i: usize, j: usize| j * np + i;
    let h = 1.0 / n as f64;
    let mut nodes = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            nodes.push([i as f64 * h, j as f64 * h]);
        }
    }
    // Each grid cell is split along the southwest-northeast diagonal.
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut tags = vec![NodeTag::Interior; np * np];
    for j in 0..np {
        for i in 0..np {
            let boundary = i == 0 || i == n || j == 0 || j == n;
            if !boundary {
                continue;
            }
            // The x = 0 edge is Γ1, corners included; the rest of the boundary is Γ2.
            tags[idx(i, j)] = if i == 0 { NodeTag::Gamma1 } else { NodeTag::Gamma2 };
        }
    }
    finish(2, nodes, Cells::Triangles(triangles), tags)
}

fn finish(dim: usize, nodes: Vec<[f64; 2]>, cells: Cells, tags: Vec<NodeTag>) -> Mesh {
    let gamma1_nodes: Vec<usize> = tags
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == NodeTag::Gamma1)
        .map(|(i, _)| i)
        .collect();
    let gamma2_nodes: Vec<usize> = tags
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == NodeTag::Gamma2)
        .map(|(i, _)| i)
        .collect();
    let interior_nodes: Vec<usize> = tags
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == NodeTag::Interior)
        .map(|(i, _)| i)
        .collect();
    debug_assert!(!gamma1_nodes.is_empty());
    Mesh {
        dim,
        nodes,
        cells,
        tags,
        gamma1_nodes,
        gamma2_nodes,
        interior_nodes,
    }
}
