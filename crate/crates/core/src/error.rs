use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid argument to a constructor or generator.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("singularity: {0}")]
    Singularity(String),

    /// Generated or loaded geometry violates a mesh invariant.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("degenerate element {index}: {message}")]
    Element { index: usize, message: String },

    /// A factorization was singular or too ill-conditioned to trust.
    #[error("singular {what} at f = {freq_hz} Hz (rcond = {rcond:.3e})")]
    Singular {
        what: String,
        freq_hz: f64,
        rcond: f64,
    },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("degenerate eigenvector basis (condition estimate {condition:.3e})")]
    DegenerateBasis { condition: f64 },

    #[error("solvent residual {residual:.3e} exceeds tolerance")]
    SolventResidual { residual: f64 },

    #[error("probe {index} at ({x}, {y}) lies outside the region mesh")]
    ProbeOutside { index: usize, x: f64, y: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Innermost error after peeling stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors that signal a near-singular linear system (resonances,
    /// degenerate couplings), as opposed to invalid input.
    pub fn is_singular(&self) -> bool {
        matches!(self.root(), Error::Singular { .. })
    }
}
