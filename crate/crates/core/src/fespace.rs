//! P1 vector fields with vanishing tangential trace, facet quantities of
//! interest, bubble functions, the quasi-interpolation `I_H` and scalar
//! Lagrange spaces on the coarse mesh.
//!
//! Vector dofs are numbered `2·vertex + component`.

use std::sync::Arc;

use crate::error::{LodError, Result};
use crate::mesh::{LevelPair, Point, TriMesh};
use crate::sparse::CsrMatrix;

const BOUNDARY_TOL: f64 = 1e-12;
const DET_TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct VectorFESpace {
    pub mesh: Arc<TriMesh>,
    /// Per dof: tangential component on `∂Ω`, fixed to zero.
    pub constrained: Vec<bool>,
    pub free_dofs: Vec<usize>,
    /// Position in `free_dofs`, `usize::MAX` for constrained dofs.
    pub free_index: Vec<usize>,
}

impl VectorFESpace {
    pub fn new(mesh: Arc<TriMesh>) -> Self {
        let mut constrained = vec![false; 2 * mesh.n_vertices()];
        for (v, p) in mesh.vertices.iter().enumerate() {
            let on = |x: f64| x.abs() < BOUNDARY_TOL || (x - 1.0).abs() < BOUNDARY_TOL;
            if on(p[1]) {
                constrained[2 * v] = true;
            }
            if on(p[0]) {
                constrained[2 * v + 1] = true;
            }
        }
        let free_dofs: Vec<usize> = (0..constrained.len()).filter(|&d| !constrained[d]).collect();
        let free_index = crate::sparse::local_index(constrained.len(), &free_dofs);
        VectorFESpace {
            mesh,
            constrained,
            free_dofs,
            free_index,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.constrained.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn dof(vertex: usize, component: usize) -> usize {
        2 * vertex + component
    }

    /// Nodal interpolant of a vector field; constrained dofs are set to zero.
    pub fn interpolate<F: Fn(Point) -> [f64; 2]>(&self, g: F) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (v, &p) in self.mesh.vertices.iter().enumerate() {
            let val = g(p);
            for c in 0..2 {
                if !self.constrained[2 * v + c] {
                    out[2 * v + c] = val[c];
                }
            }
        }
        out
    }

    pub fn restrict_free(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }

    pub fn extend_free(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (&d, &v) in self.free_dofs.iter().zip(free) {
            out[d] = v;
        }
        out
    }

    /// Zeroes the constrained dofs.
    pub fn project(&self, v: &mut [f64]) {
        for (d, x) in v.iter_mut().enumerate() {
            if self.constrained[d] {
                *x = 0.0;
            }
        }
    }

    pub fn value_at(&self, v: &[f64], t: usize, lam: &[f64; 3]) -> [f64; 2] {
        let tri = self.mesh.triangles[t];
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += lam[k] * v[2 * tri[k]];
            out[1] += lam[k] * v[2 * tri[k] + 1];
        }
        out
    }

    /// Constant Jacobian `Dv` on triangle `t` (`[row][col] = ∂_col v_row`).
    pub fn gradient(&self, v: &[f64], t: usize) -> [[f64; 2]; 2] {
        let tri = self.mesh.triangles[t];
        let g = self.mesh.barycentric_gradients(t);
        let mut d = [[0.0; 2]; 2];
        for k in 0..3 {
            for c in 0..2 {
                d[c][0] += v[2 * tri[k] + c] * g[k][0];
                d[c][1] += v[2 * tri[k] + c] * g[k][1];
            }
        }
        d
    }
}

/// One multiplier per facet in `facets`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplierSpace {
    pub facets: Vec<usize>,
}

impl MultiplierSpace {
    pub fn all(mesh: &TriMesh) -> Self {
        MultiplierSpace {
            facets: (0..mesh.n_facets()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }
}

/// The functionals `q_F(v) = ∫_F v·n_F ds` for all coarse facets, as a
/// sparse matrix over the fine vector dofs.
#[derive(Clone, Debug)]
pub struct QoiOperator {
    pub matrix: CsrMatrix,
}

impl QoiOperator {
    pub fn new(pair: &LevelPair) -> Result<Self> {
        let (coarse, fine) = (&pair.coarse, &pair.fine);
        let mut rows = Vec::with_capacity(coarse.n_facets());
        for f in 0..coarse.n_facets() {
            let fine_facets = &pair.coarse_facet_fine_facets[f];
            let total: f64 = fine_facets.iter().map(|&e| fine.facet_length(e)).sum();
            if fine_facets.is_empty() || (total - coarse.facet_length(f)).abs() > 1e-12 {
                return Err(LodError::Incompatible(format!(
                    "coarse facet {f} is not resolved by the fine mesh"
                )));
            }
            let n = coarse.facet_normals[f];
            let mut row = Vec::new();
            for &e in fine_facets {
                let half = 0.5 * fine.facet_length(e);
                for &v in &fine.facets[e] {
                    for c in 0..2 {
                        row.push((2 * v + c, half * n[c]));
                    }
                }
            }
            rows.push(row);
        }
        Ok(QoiOperator {
            matrix: CsrMatrix::from_rows(2 * fine.n_vertices(), &rows),
        })
    }

    pub fn n_facets(&self) -> usize {
        self.matrix.n_rows
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.matvec(v)
    }

    pub fn qoi(&self, facet: usize, v: &[f64]) -> f64 {
        self.matrix.row(facet).map(|(d, w)| w * v[d]).sum()
    }

    pub fn qoi_sparse(&self, facet: usize, v: &[(usize, f64)]) -> f64 {
        let lookup: std::collections::HashMap<usize, f64> = v.iter().copied().collect();
        self.matrix
            .row(facet)
            .map(|(d, w)| w * lookup.get(&d).copied().unwrap_or(0.0))
            .sum()
    }
}

/// Shape of the scalar bump `β_F` underlying a bubble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BubbleProfile {
    /// Hat functions at all fine vertices inside `ω_F` or on the relative
    /// interior of `F`.
    #[default]
    Uniform,
    /// Hat functions at the fine vertices on the relative interior of `F` only.
    FacetOnly,
}

/// `ρ_F = c β_F n_F` with `q_{F'}(ρ_F) = δ_{FF'}`.
#[derive(Clone, Debug)]
pub struct Bubble {
    pub facet: usize,
    /// Sparse fine-space coefficients `(dof, value)`, sorted by dof.
    pub coefficients: Vec<(usize, f64)>,
    /// Coarse elements of `ω_F`.
    pub support: Vec<usize>,
}

impl Bubble {
    pub fn to_dense(&self, n_dofs: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_dofs];
        for &(d, v) in &self.coefficients {
            out[d] = v;
        }
        out
    }
}

pub fn build_bubble(
    pair: &LevelPair,
    space: &VectorFESpace,
    qoi: &QoiOperator,
    facet: usize,
    profile: BubbleProfile,
) -> Result<Bubble> {
    let (coarse, fine) = (&pair.coarse, &pair.fine);
    if facet >= coarse.n_facets() {
        return Err(LodError::InvalidFacet(facet, coarse.n_facets()));
    }
    let support: Vec<usize> = coarse.facet_elements[facet].iter().collect();
    let mut vertices = Vec::new();
    for v in 0..fine.n_vertices() {
        let on_facet = coarse.point_in_facet_interior(facet, fine.vertices[v]);
        let inside = profile == BubbleProfile::Uniform
            && !fine.boundary_vertex[v]
            && fine.vertex_elements[v]
                .iter()
                .all(|&t| support.contains(&pair.parent_of(t)));
        if on_facet || inside {
            vertices.push(v);
        }
    }
    if !vertices
        .iter()
        .any(|&v| coarse.point_in_facet_interior(facet, fine.vertices[v]))
    {
        return Err(LodError::Bubble {
            facet,
            reason: "no fine vertex on the relative interior (h must be at most H/2)".into(),
        });
    }
    let n = coarse.facet_normals[facet];
    let mut coefficients = Vec::with_capacity(2 * vertices.len());
    for &v in &vertices {
        for c in 0..2 {
            if !space.constrained[2 * v + c] && n[c] != 0.0 {
                coefficients.push((2 * v + c, n[c]));
            }
        }
    }
    let flux = qoi.qoi_sparse(facet, &coefficients);
    if flux.abs() < 1e-300 {
        return Err(LodError::Bubble {
            facet,
            reason: "bump has zero flux".into(),
        });
    }
    for (_, val) in coefficients.iter_mut() {
        *val /= flux;
    }
    Ok(Bubble {
        facet,
        coefficients,
        support,
    })
}

pub fn build_bubbles(
    pair: &LevelPair,
    space: &VectorFESpace,
    qoi: &QoiOperator,
    profile: BubbleProfile,
) -> Result<Vec<Bubble>> {
    (0..pair.coarse.n_facets())
        .map(|f| build_bubble(pair, space, qoi, f, profile))
        .collect()
}

/// Quasi-interpolation onto coarse P1 vector fields from the facet mean fluxes
/// of two adjacent facets per node, followed by removal of the tangential
/// component at boundary nodes.
#[derive(Clone, Debug)]
pub struct QuasiInterpolation {
    pub coarse: Arc<TriMesh>,
    /// Facet pair used at each coarse node.
    pub node_facets: Vec<[usize; 2]>,
    /// Inverse of the stacked normal matrix per node.
    pub inverse_normals: Vec<[[f64; 2]; 2]>,
    /// Per node and component: tangential part zeroed.
    pub constrained: Vec<[bool; 2]>,
}

impl QuasiInterpolation {
    pub fn new(coarse: Arc<TriMesh>) -> Result<Self> {
        let mut node_facets = Vec::with_capacity(coarse.n_vertices());
        let mut inverse_normals = Vec::with_capacity(coarse.n_vertices());
        for z in 0..coarse.n_vertices() {
            let mut facets = coarse.vertex_facets[z].clone();
            facets.sort_unstable();
            let mut best: Option<([usize; 2], f64)> = None;
            for i in 0..facets.len() {
                for j in i + 1..facets.len() {
                    let (a, b) = (coarse.facet_normals[facets[i]], coarse.facet_normals[facets[j]]);
                    let det = (a[0] * b[1] - a[1] * b[0]).abs();
                    if best.is_none_or(|(_, d)| det > d + DET_TIE_TOL) {
                        best = Some(([facets[i], facets[j]], det));
                    }
                }
            }
            let (pair, det) = best.ok_or(LodError::DegenerateNode { node: z })?;
            if det < 1e-8 {
                return Err(LodError::DegenerateNode { node: z });
            }
            let (a, b) = (coarse.facet_normals[pair[0]], coarse.facet_normals[pair[1]]);
            let d = a[0] * b[1] - a[1] * b[0];
            node_facets.push(pair);
            inverse_normals.push([[b[1] / d, -a[1] / d], [-b[0] / d, a[0] / d]]);
        }
        let constrained = coarse
            .vertices
            .iter()
            .map(|p| {
                let on = |x: f64| x.abs() < BOUNDARY_TOL || (x - 1.0).abs() < BOUNDARY_TOL;
                [on(p[1]), on(p[0])]
            })
            .collect();
        Ok(QuasiInterpolation {
            coarse,
            node_facets,
            inverse_normals,
            constrained,
        })
    }

    /// Coarse nodal values from the vector of all coarse QoIs.
    pub fn from_qoi(&self, qoi: &[f64]) -> Vec<[f64; 2]> {
        (0..self.node_facets.len())
            .map(|z| {
                let [f1, f2] = self.node_facets[z];
                let m = [
                    qoi[f1] / self.coarse.facet_length(f1),
                    qoi[f2] / self.coarse.facet_length(f2),
                ];
                let inv = &self.inverse_normals[z];
                let mut val = [inv[0][0] * m[0] + inv[0][1] * m[1], inv[1][0] * m[0] + inv[1][1] * m[1]];
                for c in 0..2 {
                    if self.constrained[z][c] {
                        val[c] = 0.0;
                    }
                }
                val
            })
            .collect()
    }

    pub fn apply(&self, qoi_op: &QoiOperator, v: &[f64]) -> Vec<[f64; 2]> {
        self.from_qoi(&qoi_op.apply(v))
    }

    /// Coarse nodes whose value depends on `q_F`.
    pub fn nodes_using(&self, facet: usize) -> Vec<usize> {
        (0..self.node_facets.len())
            .filter(|&z| self.node_facets[z].contains(&facet))
            .collect()
    }
}

/// Coarse P1 vector field evaluated on the fine space.
pub fn prolongate(pair: &LevelPair, nodal: &[[f64; 2]]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * pair.fine.n_vertices()];
    for (v, weights) in pair.prolongation.iter().enumerate() {
        for &(z, w) in weights {
            out[2 * v] += w * nodal[z][0];
            out[2 * v + 1] += w * nodal[z][1];
        }
    }
    out
}

/// Scalar Lagrange space of order 1 or 2 on a mesh. P2 dofs are the vertices
/// followed by the facet midpoints.
#[derive(Clone, Debug)]
pub struct ScalarLagrangeSpace {
    pub mesh: Arc<TriMesh>,
    pub order: usize,
    pub nodes: Vec<Point>,
}

impl ScalarLagrangeSpace {
    pub fn new(mesh: Arc<TriMesh>, order: usize) -> Result<Self> {
        let mut nodes = mesh.vertices.clone();
        match order {
            1 => {}
            2 => nodes.extend((0..mesh.n_facets()).map(|f| mesh.facet_midpoint(f))),
            _ => return Err(LodError::Config(format!("polynomial order {order} not in {{1, 2}}"))),
        }
        Ok(ScalarLagrangeSpace { mesh, order, nodes })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Global dofs of triangle `t` matching [`Self::local_basis`].
    pub fn element_dofs(&self, t: usize) -> Vec<usize> {
        let tri = self.mesh.triangles[t];
        let mut dofs = tri.to_vec();
        if self.order == 2 {
            let nv = self.mesh.n_vertices();
            dofs.extend(self.mesh.triangle_facets[t].iter().map(|&f| nv + f));
        }
        dofs
    }

    /// Local basis values at barycentric coordinates `lam`; for P2 the
    /// facet function `k` belongs to the facet opposite vertex `k`.
    pub fn local_basis(&self, lam: &[f64; 3]) -> Vec<f64> {
        match self.order {
            1 => lam.to_vec(),
            _ => {
                let mut b: Vec<f64> = lam.iter().map(|&l| l * (2.0 * l - 1.0)).collect();
                b.extend((0..3).map(|k| 4.0 * lam[(k + 1) % 3] * lam[(k + 2) % 3]));
                b
            }
        }
    }

    pub fn eval(&self, coeffs: &[f64], t: usize, p: Point) -> f64 {
        let lam = self.mesh.barycentric(t, p);
        self.element_dofs(t)
            .iter()
            .zip(self.local_basis(&lam))
            .map(|(&d, b)| coeffs[d] * b)
            .sum()
    }
}

/// Nodal interpolant `Π_H f`.
pub fn interpolate_rhs<F: Fn(Point) -> f64>(f: F, space: &ScalarLagrangeSpace) -> Vec<f64> {
    space.nodes.iter().map(|&p| f(p)).collect()
}
