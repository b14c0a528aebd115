//! Small convergence sweep written to CSV.

use nondiv_lod::cli::{cmd_convergence, RunConfig};

fn main() -> nondiv_lod::Result<()> {
    let config = RunConfig {
        eps_exp: 4,
        fine_exp: 5,
        coarse_exps: vec![0, 1, 2, 3],
        ell: vec![2, 3],
        out_dir: std::env::temp_dir().join("ndlod-sweep"),
        timing: false,
        ..RunConfig::default()
    };
    let tables = cmd_convergence(&config)?;
    for r in tables.without_postprocessing.iter().chain(&tables.postprocessed) {
        println!(
            "H = {:<7} ell = {} p = {}  energy {:.3e}  eoc {}",
            r.h,
            r.ell,
            r.p,
            r.err_energy,
            r.eoc_energy.map_or("-".into(), |e| format!("{e:.2}"))
        );
    }
    println!("tables in {}", config.out_dir.display());
    Ok(())
}
