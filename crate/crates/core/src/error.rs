use thiserror::Error;

#[derive(Debug, Error)]
pub enum LodError {
    #[error("invalid element id {0} (mesh has {1} elements)")]
    InvalidElement(usize, usize),

    #[error("invalid facet id {0} (mesh has {1} facets)")]
    InvalidFacet(usize, usize),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("point ({0}, {1}) lies outside the unit square")]
    OutsideDomain(f64, f64),

    #[error("coefficient grid misaligned: {0}")]
    MisalignedGrid(String),

    #[error("incompatible discretization: {0}")]
    Incompatible(String),

    #[error("facet {facet}: {reason}")]
    Bubble { facet: usize, reason: String },

    #[error("node {node}: facet normals are not linearly independent")]
    DegenerateNode { node: usize },

    #[error("factorization failed ({context}): {reason}")]
    Factorization { context: String, reason: String },

    #[error("solver residual {residual:.3e} exceeds tolerance {tolerance:.1e} ({context})")]
    Residual {
        context: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<LodError>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("coefficient file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LodError>;

impl LodError {
    pub fn in_stage(self, stage: &'static str) -> Self {
        LodError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
