//! Recovery of `u` from a gradient approximation `z` through the Poisson
//! problem `∫∇u·∇v = ∫z·∇v` for all P1 functions `v` vanishing on `∂Ω`.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{LodError, Result};
use crate::mesh::{LevelPair, Point, TriMesh};
use crate::quadrature::{dunavant7, map_to_triangle};
use crate::sparse::{local_index, CsrMatrix};

/// P1 space with homogeneous Dirichlet conditions.
#[derive(Clone, Debug)]
pub struct ScalarPoissonSpace {
    pub mesh: Arc<TriMesh>,
    pub free: Vec<usize>,
}

impl ScalarPoissonSpace {
    pub fn new(mesh: Arc<TriMesh>) -> Self {
        let free = (0..mesh.n_vertices()).filter(|&v| !mesh.boundary_vertex[v]).collect();
        ScalarPoissonSpace { mesh, free }
    }

    /// Full P1 Laplacian on all vertices.
    pub fn stiffness(&self) -> CsrMatrix {
        laplacian(&self.mesh)
    }
}

pub fn laplacian(mesh: &TriMesh) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let g = mesh.barycentric_gradients(t);
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_vertices(), mesh.n_vertices(), &triplets)
}

/// Solves for `u` on `pair.coarse` given `z` on `pair.fine`; returns nodal
/// values on all vertices of `pair.coarse` (zero on the boundary).
pub fn recover_u(pair: &LevelPair, z: &[f64]) -> Result<Vec<f64>> {
    let (mesh, fine) = (&pair.coarse, &pair.fine);
    if z.len() != 2 * fine.n_vertices() {
        return Err(LodError::Incompatible(format!(
            "gradient has {} entries, fine space has {}",
            z.len(),
            2 * fine.n_vertices()
        )));
    }
    let mut rhs = vec![0.0; mesh.n_vertices()];
    for t in 0..fine.n_triangles() {
        let parent = pair.parent_of(t);
        let tri = fine.triangles[t];
        let area = fine.area(t);
        let mean = [
            (z[2 * tri[0]] + z[2 * tri[1]] + z[2 * tri[2]]) / 3.0,
            (z[2 * tri[0] + 1] + z[2 * tri[1] + 1] + z[2 * tri[2] + 1]) / 3.0,
        ];
        let g = mesh.barycentric_gradients(parent);
        for (k, &v) in mesh.triangles[parent].iter().enumerate() {
            rhs[v] += area * (mean[0] * g[k][0] + mean[1] * g[k][1]);
        }
    }
    let space = ScalarPoissonSpace::new(mesh.clone());
    let block = space.stiffness().submatrix(&space.free, &space.free);
    let llt = block
        .to_faer()?
        .sp_cholesky(Side::Lower)
        .map_err(|e| LodError::Factorization {
            context: "recovery Poisson system".into(),
            reason: format!("{e:?}"),
        })?;
    let b = Mat::<f64>::from_fn(space.free.len(), 1, |i, _| rhs[space.free[i]]);
    let x = llt.solve(&b);
    let local = local_index(mesh.n_vertices(), &space.free);
    Ok((0..mesh.n_vertices())
        .map(|v| if local[v] == usize::MAX { 0.0 } else { x[(local[v], 0)] })
        .collect())
}

/// `‖u_h - u‖_{L²}` for nodal P1 values on `mesh`.
pub fn scalar_l2_error<G: Fn(Point) -> f64>(mesh: &TriMesh, u: &[f64], exact: G) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let corners = mesh.corners(t);
        let tri = mesh.triangles[t];
        let area = mesh.area(t);
        for (lam, w) in dunavant7() {
            let uh: f64 = (0..3).map(|k| lam[k] * u[tri[k]]).sum();
            acc += w * area * (uh - exact(map_to_triangle(&corners, &lam))).powi(2);
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshHierarchy;

    #[test]
    fn laplacian_of_single_square_matches_hand_assembly() {
        let h = MeshHierarchy::new(0);
        let k = laplacian(h.level(0));
        // triangles (0,0)-(1,0)-(1,1) and (0,0)-(1,1)-(0,1): each right
        // triangle contributes [[1,-1,0],[-1,2,-1],[0,-1,1]]/2 at its right angle
        let m = &h.level(0).vertices;
        let idx = |p: [f64; 2]| m.iter().position(|&q| q == p).unwrap();
        let (a, b, c, d) = (idx([0.0, 0.0]), idx([1.0, 0.0]), idx([1.0, 1.0]), idx([0.0, 1.0]));
        let mut reference = [[0.0; 4]; 4];
        for (x, y, z) in [(a, b, c), (a, d, c)] {
            // right angle at y
            let local = [[0.5, -0.5, 0.0], [-0.5, 1.0, -0.5], [0.0, -0.5, 0.5]];
            let ids = [x, y, z];
            for i in 0..3 {
                for j in 0..3 {
                    reference[ids[i]][ids[j]] += local[i][j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert!((k.get(i, j) - reference[i][j]).abs() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn zero_gradient_recovers_zero() {
        let h = MeshHierarchy::new(3);
        let pair = h.pair(2, 3).unwrap();
        let u = recover_u(&pair, &vec![0.0; 2 * pair.fine.n_vertices()]).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));
        assert!(recover_u(&pair, &[0.0; 3]).is_err());
    }

    #[test]
    fn boundary_values_vanish() {
        let h = MeshHierarchy::new(3);
        let pair = h.pair(3, 3).unwrap();
        let z: Vec<f64> = (0..2 * pair.fine.n_vertices())
            .map(|i| (i as f64 * 0.37).cos())
            .collect();
        let u = recover_u(&pair, &z).unwrap();
        for (v, &b) in pair.coarse.boundary_vertex.iter().enumerate() {
            if b {
                assert_eq!(u[v], 0.0);
            }
        }
    }
}
