//! Localized correctors, the multiscale basis `φ_F^ℓ = ℛ^ℓ ρ_F`, the coarse
//! Galerkin solve and the post-processing correction `𝒬^ℓ(Π_H f)`.
//!
//! Ideal (global) operators are the same code path with a patch order that
//! covers the whole domain; all such patches share one factorization.

use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use rayon::prelude::*;

use crate::assembly::{add_load_yh_element, assemble_load, coefficients_on_mesh, ElementOperator, OperatorMatrix};
use crate::coeffs::{CellCoefficients, CoeffSet};
use crate::error::{LodError, Result};
use crate::fespace::{
    build_bubbles, prolongate, Bubble, BubbleProfile, QoiOperator, QuasiInterpolation, ScalarLagrangeSpace,
    VectorFESpace,
};
use crate::mesh::{build_patch, saturation_order, LevelPair, MeshHierarchy, Patch, Point};
use crate::saddle::SaddleSystem;
use crate::sparse::norm2;

/// Corrector solves with an assembled right-hand side below this norm are
/// skipped.
pub const SKIP_TOL: f64 = 1e-14;

/// Coarse elements processed per parallel batch.
const CHUNK: usize = 64;

/// A coarse Lagrange function `y_H` driving a post-processing corrector.
#[derive(Clone, Copy, Debug)]
pub struct CoarseLoad<'a> {
    pub space: &'a ScalarLagrangeSpace,
    pub coefficients: &'a [f64],
}

/// Everything shared by the corrector problems of one (coarse, fine) pair.
pub struct Lod {
    pub pair: LevelPair,
    pub space: VectorFESpace,
    pub qoi: QoiOperator,
    pub cells: Vec<CellCoefficients>,
    pub elements: ElementOperator,
    pub a: OperatorMatrix,
    pub ih: QuasiInterpolation,
    pub bubbles: Vec<Bubble>,
    pub sigma: f64,
    /// `I_H ρ_F` on the fine space, sparse.
    ih_bubbles: Vec<Vec<(usize, f64)>>,
    /// Coarse elements whose corrector data for `ρ_F` may be nonzero.
    candidates: Vec<Vec<usize>>,
    saturation: usize,
    global: OnceLock<Arc<SaddleSystem>>,
}

impl std::fmt::Debug for Lod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lod")
            .field("coarse_level", &self.pair.coarse_level)
            .field("fine_level", &self.pair.fine_level)
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl Lod {
    pub fn new(
        hierarchy: &MeshHierarchy,
        coarse_level: usize,
        fine_level: usize,
        coeffs: &CoeffSet,
        sigma: f64,
        profile: BubbleProfile,
    ) -> Result<Self> {
        if fine_level <= coarse_level {
            return Err(LodError::Incompatible(format!(
                "fine level {fine_level} must be finer than coarse level {coarse_level} (h <= H/2)"
            )));
        }
        let pair = hierarchy.pair(coarse_level, fine_level)?;
        let space = VectorFESpace::new(pair.fine.clone());
        let qoi = QoiOperator::new(&pair)?;
        let cells = coefficients_on_mesh(&pair.fine, coeffs)?;
        let elements = ElementOperator::new(&space, &cells, sigma)?;
        let a = OperatorMatrix {
            matrix: elements.assemble(&space, 0..pair.fine.n_triangles()),
            sigma,
            tag: coeffs.tag(),
            fine_level_size: pair.fine.level_size,
        };
        let ih = QuasiInterpolation::new(pair.coarse.clone())?;
        let bubbles = build_bubbles(&pair, &space, &qoi, profile)?;
        let nf = pair.coarse.n_facets();
        let mut ih_bubbles = Vec::with_capacity(nf);
        let mut candidates = Vec::with_capacity(nf);
        for f in 0..nf {
            let mut e = vec![0.0; nf];
            e[f] = 1.0;
            let nodal = ih.from_qoi(&e);
            let fine = prolongate(&pair, &nodal);
            ih_bubbles.push(
                fine.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(d, &v)| (d, v))
                    .collect(),
            );
            let mut ts: Vec<usize> = pair.coarse.facet_elements[f].iter().collect();
            for (z, val) in nodal.iter().enumerate() {
                if val[0] != 0.0 || val[1] != 0.0 {
                    ts.extend(&pair.coarse.vertex_elements[z]);
                }
            }
            ts.sort_unstable();
            ts.dedup();
            candidates.push(ts);
        }
        let saturation = saturation_order(&pair.coarse);
        Ok(Lod {
            pair,
            space,
            qoi,
            cells,
            elements,
            a,
            ih,
            bubbles,
            sigma,
            ih_bubbles,
            candidates,
            saturation,
            global: OnceLock::new(),
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    pub fn n_facets(&self) -> usize {
        self.pair.coarse.n_facets()
    }

    /// Smallest oversampling order whose patches cover the domain.
    pub fn saturating_order(&self) -> usize {
        self.saturation
    }

    /// `I_H v` evaluated on the fine space.
    pub fn interpolate(&self, v: &[f64]) -> Vec<f64> {
        prolongate(&self.pair, &self.ih.apply(&self.qoi, v))
    }

    pub fn bubble(&self, f: usize) -> Vec<f64> {
        self.bubbles[f].to_dense(self.n_dofs())
    }

    pub fn global_system(&self) -> Result<Arc<SaddleSystem>> {
        if let Some(s) = self.global.get() {
            return Ok(s.clone());
        }
        let s = Arc::new(SaddleSystem::global(&self.space, &self.a.matrix, &self.qoi)?);
        Ok(self.global.get_or_init(|| s).clone())
    }

    pub fn patch(&self, t: usize, ell: usize) -> Result<Patch> {
        if ell == 0 {
            return Err(LodError::Config("oversampling order must be at least 1".into()));
        }
        build_patch(&self.pair.coarse, t, ell)
    }

    pub fn patch_system(&self, patch: &Patch) -> Result<Arc<SaddleSystem>> {
        if patch.is_full() {
            self.global_system()
        } else {
            Ok(Arc::new(SaddleSystem::patch(
                &self.pair,
                &self.space,
                &self.a.matrix,
                &self.qoi,
                patch,
            )?))
        }
    }

    /// Right-hand sides of `𝒦_T`: `𝔞_T(I_H v, ·)` on all dofs and
    /// `-𝔟_T(v - I_H v, ·)` indexed by coarse facet.
    pub fn corrector_k_rhs(&self, t: usize, qoi_v: &[f64], ihv: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let primal = self.elements.apply(self.pair.fine_triangles_of(t), ihv);
        let mut constraint = vec![0.0; self.n_facets()];
        for &f in &self.pair.coarse.triangle_facets[t] {
            let n = self.pair.coarse.facet_elements[f].count() as f64;
            constraint[f] = -(qoi_v[f] - self.qoi.qoi(f, ihv)) / n;
        }
        (primal, constraint)
    }

    /// `𝒦_T^ℓ v`, extended by zero.
    pub fn corrector_k(&self, t: usize, ell: usize, v: &[f64]) -> Result<Vec<f64>> {
        let ihv = self.interpolate(v);
        let qv = self.qoi.apply(v);
        let (primal, constraint) = self.corrector_k_rhs(t, &qv, &ihv);
        let patch = self.patch(t, ell)?;
        let sys = self.patch_system(&patch).map_err(|e| e.in_stage("corrector K"))?;
        Ok(sys
            .solve_full(&primal, &constraint)
            .map_err(|e| e.in_stage("corrector K"))?
            .0)
    }

    /// `𝒬_T^ℓ y_H`, extended by zero.
    pub fn corrector_q(&self, t: usize, ell: usize, y: CoarseLoad<'_>) -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; self.n_dofs()];
        add_load_yh_element(&self.pair, &self.cells, y.space, y.coefficients, t, &mut rhs);
        let patch = self.patch(t, ell)?;
        let sys = self.patch_system(&patch).map_err(|e| e.in_stage("corrector Q"))?;
        sys.solve_constrained_w(&rhs).map_err(|e| e.in_stage("corrector Q"))
    }

    /// `ℛ^ℓ v = I_H v - Σ_T 𝒦_T^ℓ v`.
    pub fn apply_r(&self, ell: usize, v: &[f64]) -> Result<Vec<f64>> {
        let ihv = self.interpolate(v);
        let qv = self.qoi.apply(v);
        let mut out = ihv.clone();
        for t in 0..self.pair.coarse.n_triangles() {
            let (primal, constraint) = self.corrector_k_rhs(t, &qv, &ihv);
            if norm2(&primal).hypot(norm2(&constraint)) <= SKIP_TOL {
                continue;
            }
            let sys = self.patch_system(&self.patch(t, ell)?)?;
            let (k, _) = sys.solve_full(&primal, &constraint)?;
            for (o, x) in out.iter_mut().zip(&k) {
                *o -= x;
            }
        }
        Ok(out)
    }

    /// `𝒬^ℓ y_H = Σ_T 𝒬_T^ℓ y_H`.
    pub fn apply_q(&self, ell: usize, y: CoarseLoad<'_>) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_dofs()];
        for t in 0..self.pair.coarse.n_triangles() {
            let q = self.corrector_q(t, ell, y)?;
            for (o, x) in out.iter_mut().zip(&q) {
                *o += x;
            }
        }
        Ok(out)
    }

    /// Ideal `ℛv` from one global saddle solve: the `𝔞`-orthogonal
    /// complement of `W` with the QoIs of `v`.
    pub fn ideal_r(&self, v: &[f64]) -> Result<Vec<f64>> {
        let sys = self.global_system()?;
        Ok(sys.solve_full(&vec![0.0; self.n_dofs()], &self.qoi.apply(v))?.0)
    }

    /// Ideal `𝒬 y_H` from one global constrained solve.
    pub fn ideal_q(&self, y: CoarseLoad<'_>) -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; self.n_dofs()];
        for t in 0..self.pair.coarse.n_triangles() {
            add_load_yh_element(&self.pair, &self.cells, y.space, y.coefficients, t, &mut rhs);
        }
        self.global_system()?.solve_constrained_w(&rhs)
    }

    pub fn build_basis(&self, ell: usize) -> Result<MultiscaleBasis> {
        Ok(self.build(ell, &[])?.0)
    }

    /// Multiscale basis together with `𝒬^ℓ y` for every load, sharing one
    /// factorization per patch.
    pub fn build(&self, ell: usize, loads: &[CoarseLoad<'_>]) -> Result<(MultiscaleBasis, Vec<Vec<f64>>)> {
        if ell == 0 {
            return Err(LodError::Config("oversampling order must be at least 1".into()));
        }
        let (nd, nf, nt) = (self.n_dofs(), self.n_facets(), self.pair.coarse.n_triangles());
        let mut per_element: Vec<Vec<usize>> = vec![Vec::new(); nt];
        for (f, ts) in self.candidates.iter().enumerate() {
            for &t in ts {
                per_element[t].push(f);
            }
        }
        let mut phi = Mat::<f64>::zeros(nd, nf);
        for (f, ihb) in self.ih_bubbles.iter().enumerate() {
            for &(d, v) in ihb {
                phi[(d, f)] = v;
            }
        }
        let mut corrections = vec![vec![0.0; nd]; loads.len()];
        let mut support = vec![vec![false; nt]; nf];
        for f in 0..nf {
            for &t in &self.candidates[f] {
                support[f][t] = true;
            }
        }

        let elements: Vec<usize> = (0..nt).collect();
        for chunk in elements.chunks(CHUNK) {
            let results: Vec<Result<ElementSolution>> = chunk
                .par_iter()
                .map(|&t| self.solve_element(t, ell, &per_element[t], loads))
                .collect();
            for r in results {
                let sol = r?;
                for (f, x) in sol.k {
                    for (&d, &v) in sol.dofs.iter().zip(&x) {
                        phi[(d, f)] -= v;
                    }
                    for &s in &sol.patch_elements {
                        support[f][s] = true;
                    }
                }
                for (k, x) in sol.q.into_iter().enumerate() {
                    for (&d, &v) in sol.dofs.iter().zip(&x) {
                        corrections[k][d] += v;
                    }
                }
            }
        }

        let support = support
            .into_iter()
            .map(|m| (0..nt).filter(|&t| m[t]).collect())
            .collect();
        let stiffness = coarse_stiffness(&self.a, &phi);
        Ok((
            MultiscaleBasis {
                ell,
                phi,
                support,
                stiffness,
            },
            corrections,
        ))
    }

    fn solve_element(
        &self,
        t: usize,
        ell: usize,
        facets: &[usize],
        loads: &[CoarseLoad<'_>],
    ) -> Result<ElementSolution> {
        let nf = self.n_facets();
        let mut columns: Vec<(Option<usize>, Vec<f64>, Vec<f64>)> = Vec::new();
        for &f in facets {
            let ihv = self.ih_dense(f);
            let mut qv = vec![0.0; nf];
            qv[f] = 1.0;
            let (primal, constraint) = self.corrector_k_rhs(t, &qv, &ihv);
            if norm2(&primal).hypot(norm2(&constraint)) > SKIP_TOL {
                columns.push((Some(f), primal, constraint));
            }
        }
        for load in loads {
            let mut rhs = vec![0.0; self.n_dofs()];
            add_load_yh_element(&self.pair, &self.cells, load.space, load.coefficients, t, &mut rhs);
            columns.push((None, rhs, vec![0.0; nf]));
        }
        let patch = self.patch(t, ell)?;
        let context = |e: LodError| e.in_stage("corrector solve");
        let sys = self.patch_system(&patch).map_err(context)?;
        let (n, m) = (sys.n_primal(), sys.n_multipliers());
        let mut rhs = Mat::<f64>::zeros(n + m, columns.len());
        for (j, (_, primal, constraint)) in columns.iter().enumerate() {
            for (i, &d) in sys.primal_dofs.iter().enumerate() {
                rhs[(i, j)] = primal[d];
            }
            for (k, &f) in sys.multiplier_facets.iter().enumerate() {
                rhs[(n + k, j)] = constraint[f];
            }
        }
        let x = if columns.is_empty() {
            rhs
        } else {
            sys.solve_block(&rhs).map_err(context)?
        };
        let mut k = Vec::new();
        let mut q = Vec::new();
        for (j, (f, _, _)) in columns.iter().enumerate() {
            let col: Vec<f64> = (0..n).map(|i| x[(i, j)]).collect();
            match f {
                Some(f) => k.push((*f, col)),
                None => q.push(col),
            }
        }
        Ok(ElementSolution {
            dofs: sys.primal_dofs.clone(),
            patch_elements: patch.elements,
            k,
            q,
        })
    }

    fn ih_dense(&self, f: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_dofs()];
        for &(d, x) in &self.ih_bubbles[f] {
            v[d] = x;
        }
        v
    }

    /// Fine load `(f, A:Dφ + b·φ)`.
    pub fn load<F: Fn(Point) -> f64>(&self, f: F) -> Vec<f64> {
        assemble_load(&self.space, &self.cells, f)
    }

    /// Coarse Galerkin solve in the span of the basis for a fine load vector.
    pub fn solve_multiscale(&self, basis: &MultiscaleBasis, load: &[f64]) -> Result<MultiscaleSolution> {
        let nf = basis.n_functions();
        let rhs = Mat::<f64>::from_fn(load.len(), 1, |i, _| load[i]);
        let coarse_rhs = basis.phi.transpose() * &rhs;
        let llt = basis.stiffness.llt(Side::Lower).map_err(|e| LodError::Factorization {
            context: format!("coarse system, order {}", basis.ell),
            reason: format!("{e:?}"),
        })?;
        let c = llt.solve(&coarse_rhs);
        let coefficients: Vec<f64> = (0..nf).map(|i| c[(i, 0)]).collect();
        if coefficients.iter().any(|v| !v.is_finite()) {
            return Err(LodError::Factorization {
                context: format!("coarse system, order {}", basis.ell),
                reason: "non-finite coefficients".into(),
            });
        }
        let z = &basis.phi * &c;
        let z_tilde: Vec<f64> = (0..z.nrows()).map(|i| z[(i, 0)]).collect();
        Ok(MultiscaleSolution {
            coefficients,
            z_hat: z_tilde.clone(),
            z_tilde,
            coarse_size: self.pair.coarse_side(),
            ell: basis.ell,
            p: None,
            sigma: self.sigma,
            tag: self.a.tag.clone(),
        })
    }

    /// Fine reference solution of `𝔞(z, φ) = (f, A:Dφ + b·φ)`.
    pub fn solve_fine(&self, load: &[f64]) -> Result<Vec<f64>> {
        solve_fine(&self.space, &self.a, load)
    }
}

struct ElementSolution {
    dofs: Vec<usize>,
    patch_elements: Vec<usize>,
    k: Vec<(usize, Vec<f64>)>,
    q: Vec<Vec<f64>>,
}

/// `ΦᵀAΦ`
fn coarse_stiffness(a: &OperatorMatrix, phi: &Mat<f64>) -> Mat<f64> {
    let (nd, nf) = (phi.nrows(), phi.ncols());
    let mut aphi = Mat::<f64>::zeros(nd, nf);
    let m = &a.matrix;
    for j in 0..nf {
        for r in 0..nd {
            let mut s = 0.0;
            for (c, v) in m.row(r) {
                s += v * phi[(c, j)];
            }
            aphi[(r, j)] = s;
        }
    }
    let s = phi.transpose() * &aphi;
    // symmetrize rounding noise
    Mat::from_fn(nf, nf, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]))
}

#[derive(Clone, Debug)]
pub struct MultiscaleBasis {
    pub ell: usize,
    /// Column `F` holds `φ_F^ℓ` on the fine space.
    pub phi: Mat<f64>,
    /// Coarse elements touched by each basis function's correctors.
    pub support: Vec<Vec<usize>>,
    /// `𝔞(φ_F, φ_F')`
    pub stiffness: Mat<f64>,
}

impl MultiscaleBasis {
    pub fn n_functions(&self) -> usize {
        self.phi.ncols()
    }

    pub fn function(&self, f: usize) -> Vec<f64> {
        (0..self.phi.nrows()).map(|i| self.phi[(i, f)]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct MultiscaleSolution {
    pub coefficients: Vec<f64>,
    pub z_tilde: Vec<f64>,
    /// Equals `z_tilde` until [`postprocess`] is applied.
    pub z_hat: Vec<f64>,
    pub coarse_size: f64,
    pub ell: usize,
    pub p: Option<usize>,
    pub sigma: f64,
    pub tag: String,
}

/// `ẑ = z̃ + 𝒬^ℓ(Π_H f)` for a precomputed correction of order `p`.
pub fn postprocess(solution: &MultiscaleSolution, correction: &[f64], p: usize) -> MultiscaleSolution {
    let mut out = solution.clone();
    out.z_hat = solution.z_tilde.iter().zip(correction).map(|(a, b)| a + b).collect();
    out.p = Some(p);
    out
}

/// Sparse Cholesky solve of `𝔞` on the free dofs.
pub fn solve_fine(space: &VectorFESpace, a: &OperatorMatrix, load: &[f64]) -> Result<Vec<f64>> {
    let block = a.free_block(space);
    let llt = block
        .to_faer()?
        .sp_cholesky(Side::Lower)
        .map_err(|e| LodError::Factorization {
            context: "fine system".into(),
            reason: format!("{e:?}"),
        })?;
    let rhs = space.restrict_free(load);
    let x = llt.solve(&Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]));
    let free: Vec<f64> = (0..rhs.len()).map(|i| x[(i, 0)]).collect();
    let residual = norm2(
        &block
            .matvec(&free)
            .iter()
            .zip(&rhs)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    let scale = norm2(&rhs);
    if !residual.is_finite() || residual > crate::saddle::RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
        return Err(LodError::Residual {
            context: "fine system".into(),
            residual: residual / scale.max(f64::MIN_POSITIVE),
            tolerance: crate::saddle::RESIDUAL_TOL,
        });
    }
    Ok(space.extend_free(&free))
}
