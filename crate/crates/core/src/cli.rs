//! Run configuration, error tables and the command implementations behind
//! the `ndlod` binary.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::norms;
use crate::coeffs::{check_cordes, CoeffSet, CoeffSpec, CordesReport, FieldRange, UNIT_SQUARE_POINCARE};
use crate::error::{LodError, Result};
use crate::fespace::{interpolate_rhs, BubbleProfile, ScalarLagrangeSpace};
use crate::lod::{postprocess, CoarseLoad, Lod};
use crate::mesh::{MeshHierarchy, Point};
use crate::recovery::{recover_u, scalar_l2_error};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RhsKind {
    /// `f = cos(πx) y³`
    #[default]
    Paper,
    /// `f = -2π² sin(πx) sin(πy)`, the Laplacian of `u = sin(πx) sin(πy)`.
    Manufactured,
    Zero,
}

impl RhsKind {
    pub fn eval(self, p: Point) -> f64 {
        match self {
            RhsKind::Paper => (PI * p[0]).cos() * p[1].powi(3),
            RhsKind::Manufactured => -2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin(),
            RhsKind::Zero => 0.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(RhsKind::Paper),
            "manufactured" => Ok(RhsKind::Manufactured),
            "zero" => Ok(RhsKind::Zero),
            _ => Err(LodError::Config(format!("unknown right-hand side `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffKind {
    /// Random background field with a parabolic channel.
    #[default]
    Paper,
    /// `A = I`, `b = 0`.
    Identity,
}

impl CoeffKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(CoeffKind::Paper),
            "identity" => Ok(CoeffKind::Identity),
            _ => Err(LodError::Config(format!("unknown coefficient kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sigma: f64,
    pub delta: f64,
    pub eps_exp: u32,
    pub seed: u64,
    pub fine_exp: usize,
    pub coarse_exps: Vec<usize>,
    pub ell: Vec<usize>,
    pub p: Vec<usize>,
    pub rhs: RhsKind,
    pub coefficients: CoeffKind,
    /// Overrides the `a12` background range of the generated field.
    pub a12_range: Option<[f64; 2]>,
    pub coeff_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Recovery mesh level; defaults to the coarse level.
    pub recovery_exp: Option<usize>,
    /// Write `wall_time_s` as measured (otherwise 0 for byte-stable output).
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sigma: 1.0,
            delta: 0.1,
            eps_exp: 5,
            seed: 1,
            fine_exp: 6,
            coarse_exps: vec![0, 1, 2, 3, 4],
            ell: vec![1, 2, 3, 4],
            p: vec![1, 2],
            rhs: RhsKind::Paper,
            coefficients: CoeffKind::Paper,
            a12_range: None,
            coeff_file: None,
            out_dir: PathBuf::from("out"),
            recovery_exp: None,
            timing: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| LodError::Config(e.to_string()))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(LodError::Config(format!("sigma = {} must be positive", self.sigma)));
        }
        if self.eps_exp > 12 {
            return Err(LodError::Config(format!("eps exponent {} too large", self.eps_exp)));
        }
        if self.coefficients == CoeffKind::Paper && (self.fine_exp as u32) < self.eps_exp {
            return Err(LodError::Config(format!(
                "fine level 2^-{} does not resolve eps = 2^-{}",
                self.fine_exp, self.eps_exp
            )));
        }
        if let Some(&bad) = self.coarse_exps.iter().find(|&&k| k >= self.fine_exp) {
            return Err(LodError::Config(format!(
                "coarse level 2^-{bad} must be coarser than the fine level 2^-{} (h <= H/2)",
                self.fine_exp
            )));
        }
        if let Some(&bad) = self.p.iter().find(|&&p| p != 1 && p != 2) {
            return Err(LodError::Config(format!("polynomial order {bad} not in {{1, 2}}")));
        }
        if self.ell.contains(&0) {
            return Err(LodError::Config("oversampling order must be at least 1".into()));
        }
        if let Some(r) = self.recovery_exp {
            if r > self.fine_exp {
                return Err(LodError::Config(format!(
                    "recovery level 2^-{r} finer than the fine level"
                )));
            }
        }
        Ok(())
    }

    pub fn coeff_spec(&self) -> CoeffSpec {
        let mut spec = match self.coefficients {
            CoeffKind::Paper => CoeffSpec::paper(self.eps_exp, self.seed),
            CoeffKind::Identity => CoeffSpec::constant(self.eps_exp, [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]),
        };
        if let Some([lo, hi]) = self.a12_range {
            spec.a12 = FieldRange { lo, hi, ..spec.a12 };
        }
        spec
    }

    /// Reads the coefficient file if it exists, otherwise generates.
    pub fn load_coefficients(&self) -> Result<CoeffSet> {
        match &self.coeff_file {
            Some(path) if path.exists() => CoeffSet::read_file(path),
            _ => self.coeff_spec().generate(),
        }
    }

    fn coarse_exp(&self) -> Result<usize> {
        self.coarse_exps
            .first()
            .copied()
            .ok_or_else(|| LodError::Config("no coarse level given".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    #[serde(rename = "H")]
    pub h: f64,
    pub ell: usize,
    /// 0 for results without post-processing.
    pub p: usize,
    pub err_energy: f64,
    #[serde(rename = "err_L2")]
    pub err_l2: f64,
    pub eoc_energy: Option<f64>,
    #[serde(rename = "eoc_L2")]
    pub eoc_l2: Option<f64>,
    pub wall_time_s: f64,
}

pub fn eoc(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// Fills the EOC columns between consecutive records of equal `(ell, p)`,
/// ordered by decreasing `H`.
pub fn fill_eocs(records: &mut [ErrorRecord]) {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        (records[a].ell, records[a].p)
            .cmp(&(records[b].ell, records[b].p))
            .then(records[b].h.total_cmp(&records[a].h))
    });
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        if (records[i].ell, records[i].p) == (records[j].ell, records[j].p) {
            let (a, b) = (&records[i], &records[j]);
            let (ee, el) = (
                eoc(a.err_energy, b.err_energy, a.h, b.h),
                eoc(a.err_l2, b.err_l2, a.h, b.h),
            );
            records[j].eoc_energy = Some(ee);
            records[j].eoc_l2 = Some(el);
        }
    }
}

/// Least-squares slope of `log e` against `log H`.
pub fn fitted_eoc(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Writes `# config: {json}` followed by the CSV table.
pub fn write_records(path: &Path, config: &RunConfig, records: &[ErrorRecord]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "# config: {}", config.to_json())?;
    let mut w = csv::Writer::from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<ErrorRecord>> {
    let text = std::fs::read_to_string(path)?;
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.deserialize().map(|x| x.map_err(LodError::from)).collect()
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    Ok(())
}

/// Generates the coefficients, checks the Cordes condition and writes the
/// coefficient file (to `coeff_file` or `out_dir/coeff.bin`).
pub fn cmd_generate_coeff(config: &RunConfig) -> Result<(CordesReport, PathBuf)> {
    config.validate()?;
    let coeffs = config.coeff_spec().generate()?;
    let report = cordes_or_fail(&coeffs, config.delta)?;
    let path = match &config.coeff_file {
        Some(p) => p.clone(),
        None => {
            ensure_out_dir(config)?;
            config.out_dir.join("coeff.bin")
        }
    };
    coeffs.write_file(&path)?;
    Ok((report, path))
}

pub fn cmd_check_cordes(config: &RunConfig) -> Result<CordesReport> {
    config.validate()?;
    cordes_or_fail(&config.load_coefficients()?, config.delta)
}

fn cordes_or_fail(coeffs: &CoeffSet, delta: f64) -> Result<CordesReport> {
    let report = check_cordes(coeffs, delta, UNIT_SQUARE_POINCARE)?;
    if !report.satisfied {
        let cell = coeffs.cell(report.worst_cell);
        return Err(LodError::InvalidCoefficients(format!(
            "Cordes condition violated for delta = {delta}: worst cell {} has ratio {:.6} > {:.6} \
             (A = {:?}, b = {:?}), delta_max = {:.6}, delta_0 = {:.6}",
            report.worst_cell,
            report.per_cell_ratio,
            1.0 / (1.0 + delta),
            cell.a,
            cell.b,
            report.delta_max,
            report.delta_floor
        )));
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct FineSummary {
    pub energy: f64,
    pub l2: f64,
    pub rot: f64,
    /// `‖z_h - ∇u‖_{L²}` for the manufactured case.
    pub gradient_error: Option<f64>,
    pub path: PathBuf,
}

fn exact_gradient(p: Point) -> [f64; 2] {
    [
        PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
        PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
    ]
}

fn exact_u(p: Point) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin()
}

fn exact_known(config: &RunConfig) -> bool {
    config.rhs == RhsKind::Manufactured && config.coefficients == CoeffKind::Identity
}

/// Fine reference solve; writes nodal values `x,y,z1,z2` to
/// `out_dir/fine_solution.csv`.
pub fn cmd_solve_fine(config: &RunConfig) -> Result<FineSummary> {
    config.validate()?;
    let coeffs = config.load_coefficients()?;
    cordes_or_fail(&coeffs, config.delta).map_err(|e| e.in_stage("cordes"))?;
    let h = MeshHierarchy::new(config.fine_exp);
    let mesh = std::sync::Arc::new(h.level(config.fine_exp).clone());
    let space = crate::fespace::VectorFESpace::new(mesh.clone());
    let a = crate::assembly::assemble_a(&space, &coeffs, config.sigma).map_err(|e| e.in_stage("assembly"))?;
    let cells = crate::assembly::coefficients_on_mesh(&mesh, &coeffs)?;
    let load = crate::assembly::assemble_load(&space, &cells, |p| config.rhs.eval(p));
    let z = crate::lod::solve_fine(&space, &a, &load).map_err(|e| e.in_stage("fine solve"))?;
    let n = norms(&space, &a, &z);
    ensure_out_dir(config)?;
    let path = config.out_dir.join("fine_solution.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(file, "# config: {}", config.to_json())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["x", "y", "z1", "z2"])?;
    for (v, p) in mesh.vertices.iter().enumerate() {
        w.serialize((p[0], p[1], z[2 * v], z[2 * v + 1]))?;
    }
    w.flush()?;
    let gradient_error = exact_known(config).then(|| crate::assembly::l2_error(&space, &z, exact_gradient));
    Ok(FineSummary {
        energy: n.energy,
        l2: n.l2,
        rot: n.rot,
        gradient_error,
        path,
    })
}

/// Errors of one multiscale run against the fine reference.
#[derive(Clone, Debug)]
pub struct LodRun {
    pub records: Vec<ErrorRecord>,
    /// `ẑ` for each requested `p` (in order).
    pub z_hat: Vec<Vec<f64>>,
    pub z_fine: Vec<f64>,
}

/// All `(ℓ, p)` combinations on one coarse level. Returns records without
/// post-processing (`p = 0`) first, followed by post-processed ones.
fn run_level(
    lod: &Lod,
    config: &RunConfig,
    z_fine: &[f64],
    load: &[f64],
    ell: usize,
) -> Result<(Vec<ErrorRecord>, Vec<Vec<f64>>)> {
    let start = Instant::now();
    let spaces = config
        .p
        .iter()
        .map(|&p| ScalarLagrangeSpace::new(lod.pair.coarse.clone(), p))
        .collect::<Result<Vec<_>>>()?;
    let interpolants: Vec<Vec<f64>> = spaces
        .iter()
        .map(|s| interpolate_rhs(|x| config.rhs.eval(x), s))
        .collect();
    let loads: Vec<CoarseLoad> = spaces
        .iter()
        .zip(&interpolants)
        .map(|(s, c)| CoarseLoad {
            space: s,
            coefficients: c,
        })
        .collect();
    let (basis, corrections) = lod.build(ell, &loads).map_err(|e| e.in_stage("basis"))?;
    let sol = lod
        .solve_multiscale(&basis, load)
        .map_err(|e| e.in_stage("coarse solve"))?;
    let elapsed = if config.timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let err = |z: &[f64]| {
        let diff: Vec<f64> = z_fine.iter().zip(z).map(|(a, b)| a - b).collect();
        let n = norms(&lod.space, &lod.a, &diff);
        (n.energy, n.l2)
    };
    let record = |p: usize, (e, l): (f64, f64)| ErrorRecord {
        h: lod.pair.coarse_side(),
        ell,
        p,
        err_energy: e,
        err_l2: l,
        eoc_energy: None,
        eoc_l2: None,
        wall_time_s: elapsed,
    };
    let mut records = vec![record(0, err(&sol.z_tilde))];
    let mut z_hat = Vec::new();
    for (&p, corr) in config.p.iter().zip(&corrections) {
        let pp = postprocess(&sol, corr, p);
        records.push(record(p, err(&pp.z_hat)));
        z_hat.push(pp.z_hat);
    }
    Ok((records, z_hat))
}

fn fine_reference(config: &RunConfig, coeffs: &CoeffSet, h: &MeshHierarchy) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = config.coarse_exp()?;
    let lod = Lod::new(h, first, config.fine_exp, coeffs, config.sigma, BubbleProfile::Uniform)?;
    let load = lod.load(|p| config.rhs.eval(p));
    let z = lod.solve_fine(&load).map_err(|e| e.in_stage("fine solve"))?;
    Ok((z, load))
}

/// Multiscale solve at the first coarse level and first `ℓ`, post-processing
/// for every `p`, and recovery of `u`. Writes `out_dir/lod_errors.csv`.
pub fn cmd_solve_lod(config: &RunConfig) -> Result<LodRun> {
    config.validate()?;
    let coeffs = config.load_coefficients()?;
    cordes_or_fail(&coeffs, config.delta).map_err(|e| e.in_stage("cordes"))?;
    let coarse = config.coarse_exp()?;
    let ell = *config
        .ell
        .first()
        .ok_or_else(|| LodError::Config("no oversampling order given".into()))?;
    let h = MeshHierarchy::new(config.fine_exp);
    let (z_fine, load) = fine_reference(config, &coeffs, &h)?;
    let lod = Lod::new(
        &h,
        coarse,
        config.fine_exp,
        &coeffs,
        config.sigma,
        BubbleProfile::Uniform,
    )
    .map_err(|e| e.in_stage("setup"))?;
    let (records, z_hat) = run_level(&lod, config, &z_fine, &load, ell)?;
    ensure_out_dir(config)?;
    write_records(&config.out_dir.join("lod_errors.csv"), config, &records)?;
    Ok(LodRun { records, z_hat, z_fine })
}

#[derive(Clone, Debug)]
pub struct ConvergenceTables {
    pub without_postprocessing: Vec<ErrorRecord>,
    pub postprocessed: Vec<ErrorRecord>,
}

/// Sweeps coarse levels × `ℓ` × `p`; writes
/// `out_dir/convergence_nopp.csv` and `out_dir/convergence_pp.csv`.
pub fn cmd_convergence(config: &RunConfig) -> Result<ConvergenceTables> {
    config.validate()?;
    if config.coarse_exps.len() < 3 {
        return Err(LodError::Config(
            "a convergence sweep needs at least 3 coarse levels".into(),
        ));
    }
    let coeffs = config.load_coefficients()?;
    cordes_or_fail(&coeffs, config.delta).map_err(|e| e.in_stage("cordes"))?;
    let h = MeshHierarchy::new(config.fine_exp);
    let (z_fine, load) = fine_reference(config, &coeffs, &h)?;
    let mut nopp = Vec::new();
    let mut pp = Vec::new();
    for &k in &config.coarse_exps {
        let lod = Lod::new(&h, k, config.fine_exp, &coeffs, config.sigma, BubbleProfile::Uniform)
            .map_err(|e| e.in_stage("setup"))?;
        for &ell in &config.ell {
            let (records, _) = run_level(&lod, config, &z_fine, &load, ell)?;
            for r in records {
                if r.p == 0 {
                    nopp.push(r);
                } else {
                    pp.push(r);
                }
            }
        }
    }
    fill_eocs(&mut nopp);
    fill_eocs(&mut pp);
    ensure_out_dir(config)?;
    write_records(&config.out_dir.join("convergence_nopp.csv"), config, &nopp)?;
    write_records(&config.out_dir.join("convergence_pp.csv"), config, &pp)?;
    Ok(ConvergenceTables {
        without_postprocessing: nopp,
        postprocessed: pp,
    })
}

#[derive(Clone, Debug)]
pub struct Recovery {
    pub u: Vec<f64>,
    pub level: usize,
    /// `‖u - û‖_{L²}` for the manufactured case.
    pub l2_error: Option<f64>,
    pub path: PathBuf,
}

/// Recovers `u` from the post-processed multiscale gradient (first coarse
/// level, `ℓ` and `p`) on the recovery level; writes `out_dir/u.csv`.
pub fn cmd_recover_u(config: &RunConfig) -> Result<Recovery> {
    let run = cmd_solve_lod(config)?;
    let level = config.recovery_exp.unwrap_or(config.coarse_exp()?);
    let z = run.z_hat.first().unwrap_or(&run.z_fine);
    let h = MeshHierarchy::new(config.fine_exp);
    let pair = h.pair(level, config.fine_exp)?;
    let u = recover_u(&pair, z).map_err(|e| e.in_stage("recovery"))?;
    let path = config.out_dir.join("u.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(file, "# config: {}", config.to_json())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["x", "y", "u"])?;
    for (v, p) in pair.coarse.vertices.iter().enumerate() {
        w.serialize((p[0], p[1], u[v]))?;
    }
    w.flush()?;
    let l2_error = exact_known(config).then(|| scalar_l2_error(&pair.coarse, &u, exact_u));
    Ok(Recovery {
        u,
        level,
        l2_error,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_formula() {
        assert!((eoc(1.0, 0.25, 0.5, 0.25) - 2.0).abs() < 1e-15);
        let h = [1.0, 0.5, 0.25, 0.125];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(3)).collect();
        assert!((fitted_eoc(&h, &e) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eocs_follow_decreasing_h_per_series() {
        let rec = |h: f64, ell: usize, e: f64| ErrorRecord {
            h,
            ell,
            p: 1,
            err_energy: e,
            err_l2: e * h,
            eoc_energy: None,
            eoc_l2: None,
            wall_time_s: 0.0,
        };
        let mut r = vec![
            rec(0.5, 1, 1.0),
            rec(0.5, 2, 1.0),
            rec(0.25, 1, 0.25),
            rec(0.25, 2, 0.5),
        ];
        fill_eocs(&mut r);
        assert_eq!(r[0].eoc_energy, None);
        assert!((r[2].eoc_energy.unwrap() - 2.0).abs() < 1e-14);
        assert!((r[2].eoc_l2.unwrap() - 3.0).abs() < 1e-14);
        assert!((r[3].eoc_energy.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn config_from_toml_and_validation() {
        let c = RunConfig::from_toml_str("sigma = 2.0\ncoarse_exps = [1, 2, 3]\nrhs = \"manufactured\"\n").unwrap();
        assert_eq!(c.sigma, 2.0);
        assert_eq!(c.coarse_exps, vec![1, 2, 3]);
        assert_eq!(c.rhs, RhsKind::Manufactured);
        assert_eq!(c.delta, 0.1);
        assert!(c.validate().is_ok());
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
        let bad = RunConfig {
            p: vec![3],
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            coarse_exps: vec![6],
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            fine_exp: 4,
            coarse_exps: vec![1],
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn records_roundtrip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let records = vec![ErrorRecord {
            h: 0.25,
            ell: 2,
            p: 1,
            err_energy: 1.5e-3,
            err_l2: 2.0e-4,
            eoc_energy: None,
            eoc_l2: Some(2.5),
            wall_time_s: 0.0,
        }];
        write_records(&path, &RunConfig::default(), &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert_eq!(
            lines.next().unwrap(),
            "H,ell,p,err_energy,err_L2,eoc_energy,eoc_L2,wall_time_s"
        );
        assert_eq!(read_records(&path).unwrap(), records);
    }
}
