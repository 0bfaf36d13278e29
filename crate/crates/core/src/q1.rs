//! Bilinear (Q1) finite elements on square cells.
//!
//! Local node order within a cell is `0 = (0,0)`, `1 = (1,0)`,
//! `2 = (0,1)`, `3 = (1,1)`. Coefficients are constant per cell and the
//! element integrals are exact for such coefficients; the element
//! stiffness does not depend on the cell width in two dimensions.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::sparse::CsrMatrix;

/// Row-major 2×2 matrix `[a11, a12, a21, a22]`.
pub type Mat2 = [f64; 4];

pub const IDENTITY: Mat2 = [1.0, 0.0, 0.0, 1.0];

pub const NO_DOF: u32 = u32::MAX;

struct Tables {
    xx: [[f64; 4]; 4],
    xy: [[f64; 4]; 4],
    yy: [[f64; 4]; 4],
}

fn ref_grad(k: usize, s: f64, t: f64) -> [f64; 2] {
    match k {
        0 => [-(1.0 - t), -(1.0 - s)],
        1 => [1.0 - t, -s],
        2 => [-t, 1.0 - s],
        _ => [t, s],
    }
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let g = 0.5 / 3f64.sqrt();
        let pts = [0.5 - g, 0.5 + g];
        let mut t = Tables { xx: [[0.0; 4]; 4], xy: [[0.0; 4]; 4], yy: [[0.0; 4]; 4] };
        for &s in &pts {
            for &q in &pts {
                for a in 0..4 {
                    let ga = ref_grad(a, s, q);
                    for b in 0..4 {
                        let gb = ref_grad(b, s, q);
                        t.xx[a][b] += 0.25 * ga[0] * gb[0];
                        t.xy[a][b] += 0.25 * ga[0] * gb[1];
                        t.yy[a][b] += 0.25 * ga[1] * gb[1];
                    }
                }
            }
        }
        t
    })
}

/// `K[a][b] = ∫ A∇ψ_b · ∇ψ_a` over one cell.
pub fn element_matrix(a: &Mat2) -> [[f64; 4]; 4] {
    let t = tables();
    let mut k = [[0.0; 4]; 4];
    for p in 0..4 {
        for q in 0..4 {
            k[p][q] = a[0] * t.xx[p][q] + a[1] * t.xy[p][q] + a[2] * t.xy[q][p] + a[3] * t.yy[p][q];
        }
    }
    k
}

/// Gradient of the bilinear interpolant at the cell midpoint.
#[inline]
pub fn midpoint_gradient(u: [f64; 4], h: f64) -> [f64; 2] {
    [
        (u[1] - u[0] + u[3] - u[2]) / (2.0 * h),
        (u[2] - u[0] + u[3] - u[1]) / (2.0 * h),
    ]
}

/// A rectangular node lattice of `nx × ny` cells, optionally periodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub periodic: bool,
}

impl Lattice {
    pub fn open(nx: usize, ny: usize) -> Self {
        Lattice { nx, ny, periodic: false }
    }

    pub fn torus(n: usize) -> Self {
        Lattice { nx: n, ny: n, periodic: true }
    }

    pub fn nodes_x(&self) -> usize {
        if self.periodic { self.nx } else { self.nx + 1 }
    }

    pub fn nodes_y(&self) -> usize {
        if self.periodic { self.ny } else { self.ny + 1 }
    }

    pub fn node_count(&self) -> usize {
        self.nodes_x() * self.nodes_y()
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nodes_x() + i
    }

    #[inline]
    pub fn cell(&self, ci: usize, cj: usize) -> usize {
        cj * self.nx + ci
    }

    /// Global node indices of cell `(ci, cj)` in local order.
    #[inline]
    pub fn cell_nodes(&self, ci: usize, cj: usize) -> [usize; 4] {
        let (i1, j1) = if self.periodic {
            ((ci + 1) % self.nx, (cj + 1) % self.ny)
        } else {
            (ci + 1, cj + 1)
        };
        [self.node(ci, cj), self.node(i1, cj), self.node(ci, j1), self.node(i1, j1)]
    }

    /// 3×3 stencil of the assembled operator at node `(i, j)`, indexed
    /// `(dj + 1) * 3 + (di + 1)`.
    pub fn stencil(&self, coef: &(dyn Fn(usize) -> Mat2 + Sync), i: usize, j: usize) -> [f64; 9] {
        let mut st = [0.0; 9];
        for dcj in 0..2usize {
            for dci in 0..2usize {
                // cell (i - 1 + dci, j - 1 + dcj)
                let (ci, cj) = if self.periodic {
                    ((i + self.nx - 1 + dci) % self.nx, (j + self.ny - 1 + dcj) % self.ny)
                } else {
                    if (i == 0 && dci == 0) || (j == 0 && dcj == 0) || (i + dci > self.nx) || (j + dcj > self.ny) {
                        continue;
                    }
                    (i + dci - 1, j + dcj - 1)
                };
                let a_loc = (1 - dci) + 2 * (1 - dcj);
                let ke = element_matrix(&coef(self.cell(ci, cj)));
                for b in 0..4 {
                    let off_i = (b % 2) as i64 - (1 - dci as i64);
                    let off_j = (b / 2) as i64 - (1 - dcj as i64);
                    st[((off_j + 1) * 3 + off_i + 1) as usize] += ke[a_loc][b];
                }
            }
        }
        st
    }

    /// Neighbour of `(i, j)` at offset `(di, dj)`, if it exists.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<usize> {
        let (a, b) = (i as i64 + di, j as i64 + dj);
        if self.periodic {
            let (nx, ny) = (self.nx as i64, self.ny as i64);
            Some(self.node(a.rem_euclid(nx) as usize, b.rem_euclid(ny) as usize))
        } else if a < 0 || b < 0 || a > self.nx as i64 || b > self.ny as i64 {
            None
        } else {
            Some(self.node(a as usize, b as usize))
        }
    }

    /// Assembles the operator restricted to `free` nodes. Contributions
    /// of fixed nodes with values `fixed` are moved to the right side as
    /// `lifting = −K_fb u_b`.
    pub fn assemble(&self, coef: &(dyn Fn(usize) -> Mat2 + Sync), free: &[bool], fixed: Option<&[f64]>) -> Assembled {
        let n = self.node_count();
        assert_eq!(free.len(), n);
        let mut node_dof = vec![NO_DOF; n];
        let mut dof_nodes = Vec::new();
        for (k, &f) in free.iter().enumerate() {
            if f {
                node_dof[k] = dof_nodes.len() as u32;
                dof_nodes.push(k);
            }
        }
        let built: Vec<(Vec<(usize, f64)>, f64)> = dof_nodes
            .par_iter()
            .map(|&node| {
                let (i, j) = (node % self.nodes_x(), node / self.nodes_x());
                let st = self.stencil(coef, i, j);
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(9);
                let mut lift = 0.0;
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let v = st[((dj + 1) * 3 + di + 1) as usize];
                        if v == 0.0 {
                            continue;
                        }
                        let Some(q) = self.offset(i, j, di, dj) else { continue };
                        if node_dof[q] != NO_DOF {
                            row.push((node_dof[q] as usize, v));
                        } else if let Some(f) = fixed {
                            lift -= v * f[q];
                        }
                    }
                }
                row.sort_by_key(|e| e.0);
                row.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
                (row, lift)
            })
            .collect();
        let (rows, lifting): (Vec<_>, Vec<_>) = built.into_iter().unzip();
        Assembled { matrix: CsrMatrix::from_rows(dof_nodes.len(), rows), dof_nodes, node_dof, lifting }
    }

    /// `(K u)_p` at the requested nodes, with `u` given on all nodes.
    pub fn apply_at(&self, coef: &(dyn Fn(usize) -> Mat2 + Sync), u: &[f64], nodes: &[usize]) -> Vec<f64> {
        nodes
            .iter()
            .map(|&node| {
                let (i, j) = (node % self.nodes_x(), node / self.nodes_x());
                let st = self.stencil(coef, i, j);
                let mut acc = 0.0;
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        if let Some(q) = self.offset(i, j, di, dj) {
                            acc += st[((dj + 1) * 3 + di + 1) as usize] * u[q];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// `Σ_cells u_eᵀ K_e u_e` for a nodal vector on the whole lattice.
    pub fn energy(&self, coef: &(dyn Fn(usize) -> Mat2 + Sync), u: &[f64]) -> f64 {
        let mut total = 0.0;
        for cj in 0..self.ny {
            for ci in 0..self.nx {
                let nodes = self.cell_nodes(ci, cj);
                let ue = nodes.map(|k| u[k]);
                if ue.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let ke = element_matrix(&coef(self.cell(ci, cj)));
                for a in 0..4 {
                    for b in 0..4 {
                        total += ue[a] * ke[a][b] * ue[b];
                    }
                }
            }
        }
        total
    }
}

/// Output of [`Lattice::assemble`].
#[derive(Debug, Clone)]
pub struct Assembled {
    pub matrix: CsrMatrix,
    /// Lattice node of each degree of freedom.
    pub dof_nodes: Vec<usize>,
    /// Degree of freedom of each lattice node, or [`NO_DOF`].
    pub node_dof: Vec<u32>,
    pub lifting: Vec<f64>,
}

impl Assembled {
    pub fn scatter(&self, dofs: &[f64], fixed: Option<&[f64]>) -> Vec<f64> {
        let mut out = match fixed {
            Some(f) => f.to_vec(),
            None => vec![0.0; self.node_dof.len()],
        };
        for (d, &node) in self.dof_nodes.iter().enumerate() {
            out[node] = dofs[d];
        }
        out
    }

    pub fn gather(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_nodes.iter().map(|&k| nodal[k]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_element_is_classical_q1() {
        let k = element_matrix(&IDENTITY);
        let expected = [
            [4.0, -1.0, -1.0, -2.0],
            [-1.0, 4.0, -2.0, -1.0],
            [-1.0, -2.0, 4.0, -1.0],
            [-2.0, -1.0, -1.0, 4.0],
        ];
        for a in 0..4 {
            for b in 0..4 {
                assert!((k[a][b] - expected[a][b] / 6.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn element_rows_sum_to_zero() {
        let k = element_matrix(&[2.0, 0.3, -0.1, 1.5]);
        for a in 0..4 {
            assert!(k[a].iter().sum::<f64>().abs() < 1e-14);
            assert!((0..4).map(|b| k[b][a]).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn interior_stencil_is_nine_point_laplacian() {
        let lat = Lattice::open(4, 4);
        let st = lat.stencil(&|_| IDENTITY, 2, 2);
        let expected = [-1.0, -1.0, -1.0, -1.0, 8.0, -1.0, -1.0, -1.0, -1.0];
        for k in 0..9 {
            assert!((st[k] - expected[k] / 3.0).abs() < 1e-14, "{k}: {}", st[k]);
        }
        // corner node touches one cell
        let corner = lat.stencil(&|_| IDENTITY, 0, 0);
        assert!((corner[4] - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_coefficient_couples_diagonals() {
        let lat = Lattice::torus(8);
        let st = lat.stencil(&|_| [1.0, 0.5, 0.5, 1.0], 3, 3);
        // mixed term −2·a12·∂xy u ≈ −(u_{++} + u_{--} − u_{+-} − u_{-+})·a12/2
        assert!((st[8] - st[0]).abs() < 1e-14);
        assert!((st[8] - (-1.0 / 3.0 - 0.25)).abs() < 1e-14);
        assert!((st[6] - (-1.0 / 3.0 + 0.25)).abs() < 1e-14);
        assert!(st.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn energy_matches_quadratic_form() {
        let lat = Lattice::open(3, 3);
        let coef = |c: usize| [1.0 + c as f64, 0.2, 0.2, 2.0];
        let u: Vec<f64> = (0..lat.node_count()).map(|k| (k as f64 * 0.37).sin()).collect();
        let all = vec![true; lat.node_count()];
        let asm = lat.assemble(&coef, &all, None);
        let mut ku = vec![0.0; u.len()];
        asm.matrix.matvec(&u, &mut ku);
        let quad: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
        assert!((quad - lat.energy(&coef, &u)).abs() < 1e-12);
        let direct = lat.apply_at(&coef, &u, &[5, 6]);
        assert!((direct[0] - ku[5]).abs() < 1e-12 && (direct[1] - ku[6]).abs() < 1e-12);
    }
}
