//! Builds the localized multiscale basis and inspects its flux moments and
//! supports.

use nondiv_lod::coeffs::CoeffSet;
use nondiv_lod::fespace::BubbleProfile;
use nondiv_lod::lod::Lod;
use nondiv_lod::mesh::MeshHierarchy;

fn main() -> nondiv_lod::Result<()> {
    let coeffs = CoeffSet::paper(4, 7)?;
    let hierarchy = MeshHierarchy::new(5);
    let lod = Lod::new(&hierarchy, 2, 5, &coeffs, 1.0, BubbleProfile::Uniform)?;
    for ell in 1..=3 {
        let basis = lod.build_basis(ell)?;
        let mut worst: f64 = 0.0;
        for f in 0..basis.n_functions() {
            let q = lod.qoi.apply(&basis.function(f));
            for (g, v) in q.iter().enumerate() {
                worst = worst.max((v - if g == f { 1.0 } else { 0.0 }).abs());
            }
        }
        let support: f64 = basis.support.iter().map(|s| s.len() as f64).sum::<f64>() / basis.n_functions() as f64;
        println!(
            "ell = {ell}: {} functions, mean support {support:.1} coarse elements, flux moment defect {worst:.2e}",
            basis.n_functions()
        );
    }
    Ok(())
}
