//! Block systems `[[A, Bᵀ], [B, 0]]` pairing `𝔞` with facet-flux
//! constraints, factorized by sparse LU.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::Mat;

use crate::error::{LodError, Result};
use crate::fespace::{QoiOperator, VectorFESpace};
use crate::mesh::{LevelPair, Patch};
use crate::sparse::{local_index, norm2, CsrMatrix};

pub const RESIDUAL_TOL: f64 = 1e-10;
const SINGULARITY_TOL: f64 = 1e-6;

/// Primal dofs (fine vector dofs) and multiplier facets of one saddle point
/// problem together with its factorization.
pub struct SaddleSystem {
    pub primal_dofs: Vec<usize>,
    pub multiplier_facets: Vec<usize>,
    pub kkt: CsrMatrix,
    pub context: String,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SaddleSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleSystem")
            .field("context", &self.context)
            .field("n_primal", &self.primal_dofs.len())
            .field("n_multipliers", &self.multiplier_facets.len())
            .finish()
    }
}

impl SaddleSystem {
    /// `a` lives on the full fine dof range, `primal_dofs` must be free dofs.
    pub fn new(
        a: &CsrMatrix,
        qoi: &QoiOperator,
        primal_dofs: Vec<usize>,
        multiplier_facets: Vec<usize>,
        context: String,
    ) -> Result<Self> {
        let n = primal_dofs.len();
        let local = local_index(a.n_cols, &primal_dofs);
        let mut triplets = Vec::new();
        for (i, &d) in primal_dofs.iter().enumerate() {
            for (c, v) in a.row(d) {
                if local[c] != usize::MAX {
                    triplets.push((i, local[c], v));
                }
            }
        }
        for (k, &f) in multiplier_facets.iter().enumerate() {
            for (d, v) in qoi.matrix.row(f) {
                if local[d] != usize::MAX && v != 0.0 {
                    triplets.push((n + k, local[d], v));
                    triplets.push((local[d], n + k, v));
                }
            }
        }
        let size = n + multiplier_facets.len();
        let kkt = CsrMatrix::from_triplets(size, size, &triplets);
        let fail = |reason: String| LodError::Factorization {
            context: context.clone(),
            reason,
        };
        let lu = kkt.to_faer()?.sp_lu().map_err(|e| fail(format!("{e:?}")))?;
        let system = SaddleSystem {
            primal_dofs,
            multiplier_facets,
            kkt,
            context,
            lu,
        };
        system.check_nonsingular()?;
        Ok(system)
    }

    /// Full-domain system: all free dofs, all coarse facets.
    pub fn global(space: &VectorFESpace, a: &CsrMatrix, qoi: &QoiOperator) -> Result<Self> {
        Self::new(
            a,
            qoi,
            space.free_dofs.clone(),
            (0..qoi.n_facets()).collect(),
            "global".into(),
        )
    }

    /// Patch system on `V_T^ℓ × M_T^ℓ`: free dofs of fine vertices whose
    /// incident fine triangles all descend from patch elements.
    pub fn patch(
        pair: &LevelPair,
        space: &VectorFESpace,
        a: &CsrMatrix,
        qoi: &QoiOperator,
        patch: &Patch,
    ) -> Result<Self> {
        Self::new(
            a,
            qoi,
            patch_dofs(pair, space, patch),
            patch.active_facets.clone(),
            format!("element {} order {}", patch.center, patch.order),
        )
    }

    pub fn n_primal(&self) -> usize {
        self.primal_dofs.len()
    }

    pub fn n_multipliers(&self) -> usize {
        self.multiplier_facets.len()
    }

    fn check_nonsingular(&self) -> Result<()> {
        // a singular block shows up as a non-finite or inconsistent solve
        // for a generic right-hand side
        let size = self.kkt.n_rows;
        let b: Vec<f64> = (0..size).map(|i| (1.2345 * i as f64 + 0.5).sin()).collect();
        let mut probe = Mat::<f64>::from_fn(size, 1, |i, _| b[i]);
        self.lu.solve_in_place(probe.as_mut());
        let x: Vec<f64> = (0..size).map(|i| probe[(i, 0)]).collect();
        let res = self.residual(&x, &b);
        if !res.is_finite() || res > SINGULARITY_TOL {
            return Err(LodError::Factorization {
                context: self.context.clone(),
                reason: format!("singular block system (probe residual {res:.2e}; redundant constraint rows?)"),
            });
        }
        Ok(())
    }

    /// Solves for several right-hand sides at once; each column of `rhs` is
    /// `[primal; constraint]` in local numbering.
    pub fn solve_block(&self, rhs: &Mat<f64>) -> Result<Mat<f64>> {
        let mut x = rhs.clone();
        self.lu.solve_in_place(x.as_mut());
        for j in 0..rhs.ncols() {
            let b: Vec<f64> = (0..rhs.nrows()).map(|i| rhs[(i, j)]).collect();
            let mut xj: Vec<f64> = (0..rhs.nrows()).map(|i| x[(i, j)]).collect();
            let mut res = self.residual(&xj, &b);
            if res > RESIDUAL_TOL && res.is_finite() {
                // one step of iterative refinement
                let r: Vec<f64> = self.kkt.matvec(&xj).iter().zip(&b).map(|(kx, bi)| bi - kx).collect();
                let mut corr = Mat::<f64>::from_fn(r.len(), 1, |i, _| r[i]);
                self.lu.solve_in_place(corr.as_mut());
                for (i, v) in xj.iter_mut().enumerate() {
                    *v += corr[(i, 0)];
                }
                res = self.residual(&xj, &b);
                for (i, &v) in xj.iter().enumerate() {
                    x[(i, j)] = v;
                }
            }
            if !res.is_finite() {
                return Err(LodError::Factorization {
                    context: self.context.clone(),
                    reason: "non-finite solution".into(),
                });
            }
            if res > RESIDUAL_TOL {
                return Err(LodError::Residual {
                    context: self.context.clone(),
                    residual: res,
                    tolerance: RESIDUAL_TOL,
                });
            }
        }
        Ok(x)
    }

    /// Relative residual `‖Kx - b‖ / ‖b‖` (absolute for `b = 0`).
    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let kx = self.kkt.matvec(x);
        let r: f64 = kx.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        let nb = norm2(b);
        if nb > 0.0 {
            r / nb
        } else {
            r
        }
    }

    /// Solves with local right-hand sides; returns `(primal, multiplier)` in
    /// local numbering.
    pub fn solve(&self, rhs_primal: &[f64], rhs_constraint: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (n, m) = (self.n_primal(), self.n_multipliers());
        if rhs_primal.len() != n || rhs_constraint.len() != m {
            return Err(LodError::Incompatible(format!(
                "rhs sizes ({}, {}) do not match system ({n}, {m})",
                rhs_primal.len(),
                rhs_constraint.len()
            )));
        }
        let rhs = Mat::<f64>::from_fn(
            n + m,
            1,
            |i, _| if i < n { rhs_primal[i] } else { rhs_constraint[i - n] },
        );
        let x = self.solve_block(&rhs)?;
        Ok((
            (0..n).map(|i| x[(i, 0)]).collect(),
            (n..n + m).map(|i| x[(i, 0)]).collect(),
        ))
    }

    /// Like [`Self::solve`] with the primal rhs given on the full fine dof
    /// range and the constraint rhs indexed by coarse facet; the primal result
    /// is extended by zero.
    pub fn solve_full(&self, rhs_primal: &[f64], rhs_constraint: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let rp: Vec<f64> = self.primal_dofs.iter().map(|&d| rhs_primal[d]).collect();
        let rc: Vec<f64> = self.multiplier_facets.iter().map(|&f| rhs_constraint[f]).collect();
        let (x, lambda) = self.solve(&rp, &rc)?;
        Ok((self.extend(&x, rhs_primal.len()), lambda))
    }

    /// Solution in `W` (zero constraint rhs) for a primal rhs on the full
    /// dof range.
    pub fn solve_constrained_w(&self, rhs_primal: &[f64]) -> Result<Vec<f64>> {
        let rp: Vec<f64> = self.primal_dofs.iter().map(|&d| rhs_primal[d]).collect();
        let (x, _) = self.solve(&rp, &vec![0.0; self.n_multipliers()])?;
        Ok(self.extend(&x, rhs_primal.len()))
    }

    pub fn extend(&self, local: &[f64], n_dofs: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_dofs];
        for (&d, &v) in self.primal_dofs.iter().zip(local) {
            out[d] = v;
        }
        out
    }
}

/// Free dofs of fine vertices whose incident fine triangles all descend from
/// elements of the patch.
pub fn patch_dofs(pair: &LevelPair, space: &VectorFESpace, patch: &Patch) -> Vec<usize> {
    let fine = &pair.fine;
    let mut dofs = Vec::new();
    for v in 0..fine.n_vertices() {
        if fine.vertex_elements[v]
            .iter()
            .all(|&t| patch.contains(pair.parent_of(t)))
        {
            for c in 0..2 {
                if !space.constrained[2 * v + c] {
                    dofs.push(2 * v + c);
                }
            }
        }
    }
    dofs
}
