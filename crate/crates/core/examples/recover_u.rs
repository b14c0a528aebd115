//! Recovers `u` from the multiscale gradient of the Laplacian test problem.

use nondiv_lod::cli::{cmd_recover_u, CoeffKind, RhsKind, RunConfig};

fn main() -> nondiv_lod::Result<()> {
    for coarse in 2..=4 {
        let config = RunConfig {
            coefficients: CoeffKind::Identity,
            rhs: RhsKind::Manufactured,
            eps_exp: 0,
            fine_exp: 6,
            coarse_exps: vec![coarse],
            ell: vec![3],
            p: vec![1],
            out_dir: std::env::temp_dir().join("ndlod-recover"),
            timing: false,
            ..RunConfig::default()
        };
        let r = cmd_recover_u(&config)?;
        println!("H = 2^-{coarse}: |u - u_H| = {:.4e}", r.l2_error.unwrap_or(f64::NAN));
    }
    Ok(())
}
