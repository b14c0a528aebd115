mod common;

use faer::Side;
use nondiv_lod::assembly::{assemble_a, assemble_a_element, assemble_b, norms, Weighting};
use nondiv_lod::coeffs::{CoeffSet, CoeffSpec};
use nondiv_lod::fespace::{BubbleProfile, MultiplierSpace, VectorFESpace};
use nondiv_lod::lod::Lod;
use nondiv_lod::mesh::MeshHierarchy;
use nondiv_lod::sparse::CsrMatrix;
use proptest::prelude::*;

fn coeffs_for(seed: u64, eps_exp: u32, paper: bool) -> CoeffSet {
    if paper {
        CoeffSet::paper(eps_exp, seed).unwrap()
    } else {
        CoeffSet::constant(eps_exp, [[1.5, -0.3], [-0.3, 0.8]], [0.2, -0.4])
    }
}

fn max_diff(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, c, v) in a.triplets() {
        worst = worst.max((v - b.get(r, c)).abs());
    }
    for (r, c, v) in b.triplets() {
        worst = worst.max((v - a.get(r, c)).abs());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn form_is_symmetric_and_positive_definite(seed in 0u64..1000, eps_exp in 1u32..=3, sigma in 0.05f64..5.0, paper in any::<bool>()) {
        let h = MeshHierarchy::new(3);
        let space = VectorFESpace::new(std::sync::Arc::new(h.level(3).clone()));
        let a = assemble_a(&space, &coeffs_for(seed, eps_exp, paper), sigma).unwrap();
        prop_assert!(a.matrix.asymmetry() <= 1e-12 * a.matrix.max_abs());
        let free = a.free_block(&space);
        prop_assert!(free.to_faer().unwrap().sp_cholesky(Side::Lower).is_ok());
        let mut rng = common::rng(seed);
        for _ in 0..5 {
            let v = common::random_field(&space, &mut rng);
            prop_assert!(a.matrix.dot_form(&v, &v) > 0.0);
        }
    }

    #[test]
    fn maxwell_inequality(seed in 0u64..10_000, level in 2usize..=4) {
        let h = MeshHierarchy::new(level);
        let space = VectorFESpace::new(std::sync::Arc::new(h.level(level).clone()));
        let a = assemble_a(&space, &CoeffSet::identity(0), 1.0).unwrap();
        let mut rng = common::rng(seed);
        for _ in 0..10 {
            let v = common::random_field(&space, &mut rng);
            let n = norms(&space, &a, &v);
            let rhs = n.div.powi(2) + n.rot.powi(2);
            prop_assert!(n.h1_semi.powi(2) <= rhs * (1.0 + 1e-10), "{} > {}", n.h1_semi.powi(2), rhs);
        }
    }

    #[test]
    fn element_forms_add_up(seed in 0u64..1000, paper in any::<bool>()) {
        let h = MeshHierarchy::new(3);
        let lod = Lod::new(&h, 1, 3, &coeffs_for(seed, 3, paper), 1.0, BubbleProfile::Uniform).unwrap();
        let coarse = &lod.pair.coarse;
        let mut sum_a = CsrMatrix::from_triplets(lod.n_dofs(), lod.n_dofs(), &[]);
        let mult = MultiplierSpace::all(coarse);
        let mut sum_b = CsrMatrix::from_triplets(mult.len(), lod.n_dofs(), &[]);
        for t in 0..coarse.n_triangles() {
            sum_a = sum_a.add(&assemble_a_element(&lod.pair, &lod.space, &lod.elements, t));
            sum_b = sum_b.add(&assemble_b(coarse, &lod.qoi, &mult, Weighting::Element(t)).unwrap());
        }
        prop_assert!(max_diff(&sum_a, &lod.a.matrix) <= 1e-12 * lod.a.matrix.max_abs());
        let b = assemble_b(coarse, &lod.qoi, &mult, Weighting::None).unwrap();
        prop_assert!(max_diff(&sum_b, &b) <= 1e-12 * b.max_abs());
    }

    #[test]
    fn coefficient_generation_is_deterministic(seed in any::<u64>(), eps_exp in 1u32..=6) {
        let spec = CoeffSpec::paper(eps_exp, seed);
        let (x, y) = (spec.generate().unwrap(), spec.generate().unwrap());
        let (mut bx, mut by) = (Vec::new(), Vec::new());
        x.write_to(&mut bx).unwrap();
        y.write_to(&mut by).unwrap();
        prop_assert_eq!(bx, by);
    }

    #[test]
    fn flux_free_fields_have_zero_interpolant(seed in 0u64..10_000) {
        let h = MeshHierarchy::new(4);
        let lod = Lod::new(&h, 2, 4, &CoeffSet::identity(0), 1.0, BubbleProfile::Uniform).unwrap();
        let mut rng = common::rng(seed);
        let w = common::w_sample(&lod, &mut rng);
        prop_assert!(common::max_abs(&lod.qoi.apply(&w)) <= 1e-10);
        prop_assert!(common::max_abs(&lod.interpolate(&w)) <= 1e-10);
    }

    #[test]
    fn interpolation_factors_through_node_fluxes(seed in 0u64..10_000) {
        let h = MeshHierarchy::new(4);
        let lod = Lod::new(&h, 2, 4, &CoeffSet::identity(0), 1.0, BubbleProfile::Uniform).unwrap();
        let mut rng = common::rng(seed);
        let v = common::random_field(&lod.space, &mut rng);
        let w = common::w_sample(&lod, &mut rng);
        // v and v + w share all coarse fluxes
        let vw: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        let (iv, ivw) = (lod.ih.apply(&lod.qoi, &v), lod.ih.apply(&lod.qoi, &vw));
        for (a, b) in iv.iter().zip(&ivw) {
            prop_assert!((a[0] - b[0]).abs() <= 1e-10 && (a[1] - b[1]).abs() <= 1e-10);
        }
    }
}
