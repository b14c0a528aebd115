//! Piecewise constant coefficient fields on an `ε`-grid, the Cordes-type
//! condition and the renormalization `γ = tr(A) / (A:A + b·b)`.
//!
//! Random fields are drawn from Marsaglia's xorshift128 generator
//! (`rand_xorshift::XorShiftRng`, seeded with `seed_from_u64`). Each `u64`
//! output `r` becomes `u = (r >> 11) · 2^-53 ∈ [0, 1)` and a cell value
//! `lo + (hi - lo) · u`. Cells are visited in row-major order (`values[j·n + i]`
//! for the cell `[iε, (i+1)ε] × [jε, (j+1)ε]`), one draw per cell, before the
//! channel overwrite. The `b1` field uses `seed + 1`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xorshift::XorShiftRng;
use serde::{Deserialize, Serialize};

use crate::error::{LodError, Result};
use crate::mesh::Point;

/// Spatial dimension.
pub const DIM: f64 = 2.0;

/// Optimal Poincaré constant of the tangential-trace space on the unit square.
pub const UNIT_SQUARE_POINCARE: f64 = PI;

/// Slack on the per-cell Cordes inequality; equality cases sit exactly on the
/// bound and are admitted.
pub const CORDES_SLACK: f64 = 1e-12;

/// Parabola `y = curvature · (x - vertex_x)² + vertex_y`; cells whose
/// midpoints are closer than `width_cells · ε` belong to the channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelGeometry {
    pub curvature: f64,
    pub vertex_x: f64,
    pub vertex_y: f64,
    pub width_cells: f64,
}

impl Default for ChannelGeometry {
    fn default() -> Self {
        ChannelGeometry {
            curvature: 4.0,
            vertex_x: 0.5,
            vertex_y: 0.0,
            width_cells: 4.0,
        }
    }
}

impl ChannelGeometry {
    /// Euclidean distance from `p` to the (unbounded) parabola.
    pub fn distance(&self, p: Point) -> f64 {
        let a = self.curvature;
        let qx = p[0] - self.vertex_x;
        let qy = p[1] - self.vertex_y;
        if a == 0.0 {
            return qy.abs();
        }
        // stationary points of |(s, a s²) - (qx, qy)|²: 2a² s³ + (1 - 2a qy) s - qx = 0
        let pc = (1.0 - 2.0 * a * qy) / (2.0 * a * a);
        let qc = -qx / (2.0 * a * a);
        let dist = |s: f64| (s - qx).hypot(a * s * s - qy);
        depressed_cubic_roots(pc, qc)
            .into_iter()
            .map(dist)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Real roots of `s³ + p s + q = 0`.
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let r = disc.sqrt();
        vec![(-q / 2.0 + r).cbrt() + (-q / 2.0 - r).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos()).collect()
    }
}

/// Value range of a random field plus an optional channel value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldRange {
    pub lo: f64,
    pub hi: f64,
    pub channel: Option<f64>,
}

impl FieldRange {
    pub fn constant(c: f64) -> Self {
        FieldRange {
            lo: c,
            hi: c,
            channel: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    /// `ε = 2^-eps_exp`.
    pub eps_exp: u32,
    pub n_cells_per_side: usize,
    /// Row-major, `values[j·n + i]`.
    pub values: Vec<f64>,
    pub seed: u64,
}

impl CellField {
    pub fn constant(eps_exp: u32, value: f64) -> Self {
        let n = 1usize << eps_exp;
        CellField {
            eps_exp,
            n_cells_per_side: n,
            values: vec![value; n * n],
            seed: 0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        0.5f64.powi(self.eps_exp as i32)
    }

    pub fn cell_midpoint(&self, i: usize, j: usize) -> Point {
        let eps = self.epsilon();
        [(i as f64 + 0.5) * eps, (j as f64 + 0.5) * eps]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn unit_uniform(rng: &mut XorShiftRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// I.i.d. uniform cell values in `[lo, hi]`; cells whose midpoints lie
/// closer than `width_cells · ε` to the parabola take the channel value.
pub fn generate_field(seed: u64, eps_exp: u32, range: FieldRange, geometry: &ChannelGeometry) -> Result<CellField> {
    if !(range.lo <= range.hi) {
        return Err(LodError::Config(format!(
            "empty value range [{}, {}]",
            range.lo, range.hi
        )));
    }
    let n = 1usize << eps_exp;
    let mut rng = XorShiftRng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..n * n)
        .map(|_| range.lo + (range.hi - range.lo) * unit_uniform(&mut rng))
        .collect();
    let mut field = CellField {
        eps_exp,
        n_cells_per_side: n,
        values: Vec::new(),
        seed,
    };
    if let Some(c) = range.channel {
        let width = geometry.width_cells * field.epsilon();
        for j in 0..n {
            for i in 0..n {
                if geometry.distance(field.cell_midpoint(i, j)) < width {
                    values[j * n + i] = c;
                }
            }
        }
    }
    field.values = values;
    Ok(field)
}

/// Full description of a generated coefficient set; also the coefficient
/// file header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffSpec {
    pub eps_exp: u32,
    pub seed: u64,
    pub a11: f64,
    pub a22: f64,
    pub b2: f64,
    pub a12: FieldRange,
    pub b1: FieldRange,
    pub channel: ChannelGeometry,
}

impl CoeffSpec {
    /// The multiscale coefficients of the reference experiment.
    pub fn paper(eps_exp: u32, seed: u64) -> Self {
        let s11 = 11f64.sqrt();
        CoeffSpec {
            eps_exp,
            seed,
            a11: s11 / 4.0,
            a22: 3.0 * s11 / 4.0,
            b2: 1.0,
            a12: FieldRange {
                lo: -1.0,
                hi: -0.9,
                channel: Some(1.0),
            },
            b1: FieldRange {
                lo: -1.0 / 8f64.sqrt(),
                hi: 0.0,
                channel: Some(1.0 / 8f64.sqrt()),
            },
            channel: ChannelGeometry::default(),
        }
    }

    pub fn constant(eps_exp: u32, a: [[f64; 2]; 2], b: [f64; 2]) -> Self {
        CoeffSpec {
            eps_exp,
            seed: 0,
            a11: a[0][0],
            a22: a[1][1],
            b2: b[1],
            a12: FieldRange::constant(a[0][1]),
            b1: FieldRange::constant(b[0]),
            channel: ChannelGeometry::default(),
        }
    }

    pub fn generate(&self) -> Result<CoeffSet> {
        let a12 = generate_field(self.seed, self.eps_exp, self.a12, &self.channel)?;
        let b1 = generate_field(self.seed.wrapping_add(1), self.eps_exp, self.b1, &self.channel)?;
        Ok(CoeffSet {
            spec: self.clone(),
            a12,
            b1,
        })
    }
}

/// Coefficient values of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellCoefficients {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl CellCoefficients {
    pub fn trace(&self) -> f64 {
        self.a[0][0] + self.a[1][1]
    }

    /// `A:A + b·b`
    pub fn frobenius_plus_drift(&self) -> f64 {
        let a = &self.a;
        a[0][0] * a[0][0]
            + a[0][1] * a[0][1]
            + a[1][0] * a[1][0]
            + a[1][1] * a[1][1]
            + self.b[0] * self.b[0]
            + self.b[1] * self.b[1]
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace();
        let r = (0.5 * (self.a[0][0] - self.a[1][1])).hypot(self.a[0][1]);
        (mean - r, mean + r)
    }
}

/// Diffusion `A = [[a11, a12], [a12, a22]]` and drift `b = (b1, b2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSet {
    pub spec: CoeffSpec,
    pub a12: CellField,
    pub b1: CellField,
}

impl CoeffSet {
    pub fn paper(eps_exp: u32, seed: u64) -> Result<Self> {
        CoeffSpec::paper(eps_exp, seed).generate()
    }

    pub fn constant(eps_exp: u32, a: [[f64; 2]; 2], b: [f64; 2]) -> Self {
        CoeffSpec::constant(eps_exp, a, b)
            .generate()
            .expect("degenerate range is valid")
    }

    pub fn identity(eps_exp: u32) -> Self {
        Self::constant(eps_exp, [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    }

    pub fn eps_exp(&self) -> u32 {
        self.spec.eps_exp
    }

    pub fn epsilon(&self) -> f64 {
        self.a12.epsilon()
    }

    pub fn n_cells(&self) -> usize {
        self.a12.values.len()
    }

    pub fn cell(&self, index: usize) -> CellCoefficients {
        let a12 = self.a12.values[index];
        CellCoefficients {
            a: [[self.spec.a11, a12], [a12, self.spec.a22]],
            b: [self.b1.values[index], self.spec.b2],
        }
    }

    pub fn tag(&self) -> String {
        format!("eps=2^-{} seed={}", self.spec.eps_exp, self.spec.seed)
    }

    /// Index of the cell containing `p`; points on cell boundaries belong to
    /// the lower-indexed cell.
    pub fn cell_index_of(&self, p: Point) -> Result<usize> {
        let inside = |x: f64| (0.0..=1.0).contains(&x);
        if !inside(p[0]) || !inside(p[1]) {
            return Err(LodError::OutsideDomain(p[0], p[1]));
        }
        let n = self.a12.n_cells_per_side;
        let idx = |x: f64| ((x * n as f64).ceil() as usize).saturating_sub(1).min(n - 1);
        Ok(idx(p[1]) * n + idx(p[0]))
    }

    pub fn eval_at(&self, p: Point) -> Result<CellCoefficients> {
        Ok(self.cell(self.cell_index_of(p)?))
    }

    pub fn has_drift(&self) -> bool {
        self.spec.b2 != 0.0 || self.b1.values.iter().any(|&v| v != 0.0)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        let s = &self.spec;
        out.write_all(COEFF_MAGIC)?;
        out.write_all(&s.eps_exp.to_le_bytes())?;
        out.write_all(&s.seed.to_le_bytes())?;
        let chan = |c: Option<f64>| c.unwrap_or(f64::NAN);
        let header = [
            s.a11,
            s.a22,
            s.b2,
            s.a12.lo,
            s.a12.hi,
            chan(s.a12.channel),
            s.b1.lo,
            s.b1.hi,
            chan(s.b1.channel),
            s.channel.curvature,
            s.channel.vertex_x,
            s.channel.vertex_y,
            s.channel.width_cells,
        ];
        for v in header.iter().chain(&self.a12.values).chain(&self.b1.values) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut input)
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != COEFF_MAGIC {
            return Err(LodError::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4)?;
        let eps_exp = u32::from_le_bytes(b4);
        if eps_exp > 14 {
            return Err(LodError::Format(format!("unsupported eps exponent {eps_exp}")));
        }
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        let mut read_f64 = |input: &mut R| -> Result<f64> {
            input.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let mut h = [0.0; 13];
        for v in h.iter_mut() {
            *v = read_f64(input)?;
        }
        let chan = |v: f64| if v.is_nan() { None } else { Some(v) };
        let spec = CoeffSpec {
            eps_exp,
            seed,
            a11: h[0],
            a22: h[1],
            b2: h[2],
            a12: FieldRange {
                lo: h[3],
                hi: h[4],
                channel: chan(h[5]),
            },
            b1: FieldRange {
                lo: h[6],
                hi: h[7],
                channel: chan(h[8]),
            },
            channel: ChannelGeometry {
                curvature: h[9],
                vertex_x: h[10],
                vertex_y: h[11],
                width_cells: h[12],
            },
        };
        let n = 1usize << eps_exp;
        let mut field = |s: u64| -> Result<CellField> {
            let values = (0..n * n).map(|_| read_f64(input)).collect::<Result<Vec<_>>>()?;
            Ok(CellField {
                eps_exp,
                n_cells_per_side: n,
                values,
                seed: s,
            })
        };
        let a12 = field(seed)?;
        let b1 = field(seed.wrapping_add(1))?;
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(LodError::Format(format!("{} trailing bytes", rest.len())));
        }
        Ok(CoeffSet { spec, a12, b1 })
    }
}

pub const COEFF_MAGIC: &[u8; 8] = b"NDLODCF1";

#[derive(Clone, Debug)]
pub struct CordesReport {
    pub delta: f64,
    /// Maximum over cells of `(A:A + b·b) / (tr A)²`.
    pub per_cell_ratio: f64,
    pub worst_cell: usize,
    /// `(tr A)² / (A:A + b·b) - (d - 1)` at the worst cell.
    pub delta_max: f64,
    pub eta: f64,
    pub poincare: f64,
    /// `η / (1 + C_P²)`
    pub delta_floor: f64,
    pub satisfied: bool,
    pub gamma_field: CellField,
}

impl std::fmt::Display for CordesReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "requested delta     {:.6}", self.delta)?;
        writeln!(
            f,
            "worst cell ratio    {:.15} (cell {})",
            self.per_cell_ratio, self.worst_cell
        )?;
        writeln!(f, "delta_max           {:.15}", self.delta_max)?;
        writeln!(f, "eta                 {}", self.eta)?;
        writeln!(f, "delta_0             {:.15}", self.delta_floor)?;
        writeln!(
            f,
            "gamma range         [{:.6}, {:.6}]",
            self.gamma_field.min(),
            self.gamma_field.max()
        )?;
        write!(f, "satisfied           {}", self.satisfied)
    }
}

/// Checks `(A:A + b·b)/(tr A)² ≤ 1/(d - 1 + δ)` in every cell and `δ > δ₀`.
pub fn check_cordes(coeffs: &CoeffSet, delta: f64, poincare: f64) -> Result<CordesReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LodError::Config(format!("delta = {delta} not in (0, 1]")));
    }
    let mut worst = (f64::NEG_INFINITY, 0usize);
    for c in 0..coeffs.n_cells() {
        let cell = coeffs.cell(c);
        let tr = cell.trace();
        if tr <= 0.0 {
            return Err(LodError::InvalidCoefficients(format!("tr(A) = {tr} <= 0 in cell {c}")));
        }
        let ratio = cell.frobenius_plus_drift() / (tr * tr);
        if ratio > worst.0 {
            worst = (ratio, c);
        }
    }
    let (ratio, worst_cell) = worst;
    let eta = if coeffs.has_drift() { 1.0 } else { 0.0 };
    let delta_floor = eta / (1.0 + poincare * poincare);
    let satisfied = ratio <= (1.0 + CORDES_SLACK) / (DIM - 1.0 + delta) && delta > delta_floor;
    Ok(CordesReport {
        delta,
        per_cell_ratio: ratio,
        worst_cell,
        delta_max: 1.0 / ratio - (DIM - 1.0),
        eta,
        poincare,
        delta_floor,
        satisfied,
        gamma_field: gamma(coeffs)?,
    })
}

/// Per-cell `γ = tr(A) / (A:A + b·b)`.
pub fn gamma(coeffs: &CoeffSet) -> Result<CellField> {
    let values = (0..coeffs.n_cells())
        .map(|c| {
            let cell = coeffs.cell(c);
            let tr = cell.trace();
            if tr <= 0.0 {
                return Err(LodError::InvalidCoefficients(format!("tr(A) = {tr} <= 0 in cell {c}")));
            }
            Ok(tr / cell.frobenius_plus_drift())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellField {
        values,
        ..coeffs.a12.clone()
    })
}

/// Minimum and maximum eigenvalue of `A` over all cells.
pub fn ellipticity_bounds(coeffs: &CoeffSet) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in 0..coeffs.n_cells() {
        let (l, h) = coeffs.cell(c).eigenvalues();
        lo = lo.min(l);
        hi = hi.max(h);
    }
    if lo <= 0.0 {
        return Err(LodError::InvalidCoefficients(format!(
            "A not uniformly elliptic: nu1 = {lo}"
        )));
    }
    Ok((lo, hi))
}
