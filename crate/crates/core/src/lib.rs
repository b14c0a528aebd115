//! Localized orthogonal decomposition for elliptic equations in
//! nondivergence form `A:D²u + b·∇u = f` with rough coefficients satisfying a
//! Cordes-type condition.
//!
//! The solver works with the gradient `z = ∇u` in the space of P1 vector
//! fields with vanishing tangential trace and the stabilized symmetric form
//! `𝔞(ψ, φ) = (A:Dψ + b·ψ, A:Dφ + b·φ) + σ (rot ψ, rot φ)`. Coarse information
//! is carried by facet fluxes `q_F(v) = ∫_F v·n_F ds`; the multiscale basis
//! and the load-driven post-processing corrector are computed from local
//! saddle point problems on element patches.

pub mod assembly;
pub mod cli;
pub mod coeffs;
pub mod error;
pub mod fespace;
pub mod lod;
pub mod mesh;
pub mod quadrature;
pub mod recovery;
pub mod saddle;
pub mod sparse;

pub use error::{LodError, Result};
