//! Fine solves of the Laplacian with `u = sin(πx) sin(πy)` on three levels.

use std::f64::consts::PI;
use std::sync::Arc;

use nondiv_lod::assembly::{assemble_a, assemble_load, coefficients_on_mesh, l2_error, norms};
use nondiv_lod::coeffs::CoeffSet;
use nondiv_lod::fespace::VectorFESpace;
use nondiv_lod::lod::solve_fine;
use nondiv_lod::mesh::MeshHierarchy;

fn main() -> nondiv_lod::Result<()> {
    let coeffs = CoeffSet::identity(0);
    let hierarchy = MeshHierarchy::new(6);
    let mut previous: Option<(f64, f64)> = None;
    for level in 4..=6 {
        let mesh = Arc::new(hierarchy.level(level).clone());
        let space = VectorFESpace::new(mesh.clone());
        let a = assemble_a(&space, &coeffs, 1.0)?;
        let cells = coefficients_on_mesh(&mesh, &coeffs)?;
        let load = assemble_load(&space, &cells, |p| {
            -2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin()
        });
        let z = solve_fine(&space, &a, &load)?;
        let err = l2_error(&space, &z, |p| {
            [
                PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
                PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
            ]
        });
        let rot = norms(&space, &a, &z).rot;
        let rate = previous.map(|(e, r)| format!("eoc {:.2} / {:.2}", (e / err).log2(), (r / rot).log2()));
        println!(
            "h = 2^-{level}: |z - grad u| = {err:.4e}  |rot z| = {rot:.4e}  {}",
            rate.unwrap_or_default()
        );
        previous = Some((err, rot));
    }
    Ok(())
}
