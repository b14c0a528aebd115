use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nondiv_lod::cli::{self, CoeffKind, RhsKind, RunConfig};
use nondiv_lod::Result;

#[derive(Parser)]
#[command(
    name = "ndlod",
    version,
    about = "Multiscale solver for nondivergence-form elliptic problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the coefficient field and write it if the Cordes condition holds.
    GenerateCoeff,
    /// Check the Cordes condition for the configured coefficients.
    CheckCordes,
    /// Solve the fine reference problem.
    SolveFine,
    /// Solve with the multiscale method on the first coarse level.
    SolveLod,
    /// Error tables over coarse levels, oversampling orders and polynomial orders.
    Convergence,
    /// Recover the solution from the post-processed gradient.
    RecoverU,
}

#[derive(Args)]
struct Flags {
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    eps_exp: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    fine_exp: Option<usize>,
    /// Comma-separated list, e.g. `0,1,2,3,4`.
    #[arg(long, global = true, value_delimiter = ',')]
    coarse_exps: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    ell: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    #[arg(long, global = true)]
    coeff_file: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    recovery_exp: Option<usize>,
    /// paper, manufactured or zero.
    #[arg(long, global = true)]
    rhs: Option<String>,
    /// paper or identity.
    #[arg(long, global = true)]
    coefficients: Option<String>,
    /// Write zero wall times for byte-reproducible tables.
    #[arg(long, global = true)]
    no_timing: bool,
}

impl Flags {
    fn resolve(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { c.$field = v; })*};
        }
        set!(sigma, delta, eps_exp, seed, fine_exp, coarse_exps, ell, p, out_dir);
        if self.coeff_file.is_some() {
            c.coeff_file = self.coeff_file;
        }
        if self.recovery_exp.is_some() {
            c.recovery_exp = self.recovery_exp;
        }
        if let Some(r) = &self.rhs {
            c.rhs = RhsKind::parse(r)?;
        }
        if let Some(k) = &self.coefficients {
            c.coefficients = CoeffKind::parse(k)?;
        }
        if self.no_timing {
            c.timing = false;
        }
        Ok(c)
    }
}

fn run(args: Cli) -> Result<()> {
    let config = args.flags.resolve()?;
    match args.command {
        Command::GenerateCoeff => {
            let (report, path) = cli::cmd_generate_coeff(&config)?;
            println!("{report}");
            println!("wrote {}", path.display());
        }
        Command::CheckCordes => println!("{}", cli::cmd_check_cordes(&config)?),
        Command::SolveFine => {
            let s = cli::cmd_solve_fine(&config)?;
            println!(
                "energy norm {:.6e}  L2 norm {:.6e}  rot norm {:.6e}",
                s.energy, s.l2, s.rot
            );
            if let Some(e) = s.gradient_error {
                println!("gradient error {e:.6e}");
            }
            println!("wrote {}", s.path.display());
        }
        Command::SolveLod => {
            let run = cli::cmd_solve_lod(&config)?;
            for r in &run.records {
                println!(
                    "H = {:<8} ell = {} p = {}  energy error {:.6e}  L2 error {:.6e}",
                    r.h, r.ell, r.p, r.err_energy, r.err_l2
                );
            }
        }
        Command::Convergence => {
            let t = cli::cmd_convergence(&config)?;
            for (name, rows) in [
                ("without post-processing", &t.without_postprocessing),
                ("post-processed", &t.postprocessed),
            ] {
                println!("{name}:");
                for r in rows.iter() {
                    println!(
                        "  H = {:<8} ell = {} p = {}  energy {:.4e} ({})  L2 {:.4e} ({})",
                        r.h,
                        r.ell,
                        r.p,
                        r.err_energy,
                        r.eoc_energy.map_or("-".into(), |e| format!("{e:.2}")),
                        r.err_l2,
                        r.eoc_l2.map_or("-".into(), |e| format!("{e:.2}"))
                    );
                }
            }
        }
        Command::RecoverU => {
            let r = cli::cmd_recover_u(&config)?;
            if let Some(e) = r.l2_error {
                println!("L2 error {e:.6e}");
            }
            println!("wrote {}", r.path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
