use thiserror::Error;

/// Errors raised by the kernel, solver and validation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix piece {piece} is not symmetric")]
    NotSymmetric { piece: usize },

    #[error("matrix piece {piece} is not elliptic (smallest eigenvalue {min_eig})")]
    NotElliptic { piece: usize, min_eig: f64 },

    #[error("breakpoints must be strictly increasing")]
    BreakpointsNotIncreasing,

    #[error("invalid time interval: need s < t, got s={s}, t={t}")]
    InvalidInterval { s: f64, t: f64 },

    #[error("derivative in s undefined at coefficient breakpoint s={0}")]
    DerivativeAtBreakpoint(f64),

    #[error("empty sample set")]
    EmptySamples,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("cone has no graph representation over the x1 axis")]
    NotAGraph,

    #[error("point lies on the vertex axis (x' = 0)")]
    VertexAxis,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("linear solve failed: zero pivot at row {0}")]
    SingularMatrix(usize),

    #[error("mollifier unresolved: width {width} below {min} (3 local cells)")]
    UnresolvedBump { width: f64, min: f64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("truncation too short: tail bound {tail} exceeds tolerance {tol}")]
    Truncation { tail: f64, tol: f64 },

    #[error("differencing stencil leaves the mesh")]
    StencilOutsideMesh,

    #[error("degenerate ratio: denominator is zero")]
    ZeroDenominator,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Failures of a numerical method on valid input, as opposed to invalid
    /// input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SingularMatrix(_) | Error::Quadrature(_) | Error::Truncation { .. } | Error::StencilOutsideMesh)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
