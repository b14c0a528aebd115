//! Error of the post-processed solution against the saturated (ideal) one
//! as the oversampling order grows.

use nondiv_lod::assembly::norms;
use nondiv_lod::coeffs::CoeffSet;
use nondiv_lod::fespace::{interpolate_rhs, BubbleProfile, ScalarLagrangeSpace};
use nondiv_lod::lod::{postprocess, CoarseLoad, Lod};
use nondiv_lod::mesh::MeshHierarchy;

fn main() -> nondiv_lod::Result<()> {
    let f = |p: [f64; 2]| (std::f64::consts::PI * p[0]).cos() * p[1].powi(3);
    let coeffs = CoeffSet::paper(5, 1)?;
    let hierarchy = MeshHierarchy::new(6);
    let lod = Lod::new(&hierarchy, 3, 6, &coeffs, 1.0, BubbleProfile::Uniform)?;
    let y = ScalarLagrangeSpace::new(lod.pair.coarse.clone(), 1)?;
    let coefficients = interpolate_rhs(f, &y);
    let load = lod.load(f);
    let solve = |ell: usize| -> nondiv_lod::Result<Vec<f64>> {
        let (basis, corr) = lod.build(
            ell,
            &[CoarseLoad {
                space: &y,
                coefficients: &coefficients,
            }],
        )?;
        Ok(postprocess(&lod.solve_multiscale(&basis, &load)?, &corr[0], 1).z_hat)
    };
    let reference = solve(lod.saturating_order())?;
    for ell in 1..=4 {
        let z = solve(ell)?;
        let diff: Vec<f64> = z.iter().zip(&reference).map(|(a, b)| a - b).collect();
        println!(
            "ell = {ell}: energy distance to ideal {:.4e}",
            norms(&lod.space, &lod.a, &diff).energy
        );
    }
    Ok(())
}
