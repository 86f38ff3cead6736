use thiserror::Error;

/// Errors raised by the library. The CLI maps `Configuration` and `Parameter`
/// to exit code 2 and everything numerical to exit code 1.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("grid mismatch: field has {field} samples, grid has {grid} nodes")]
    GridMismatch { field: usize, grid: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical consistency error: {0}")]
    NumericalConsistency(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("admissibility error: {0}")]
    Admissibility(String),

    #[error("near-singular division by g* at {} node(s), first {:?}", nodes.len(), nodes.first())]
    NearSingular { nodes: Vec<usize> },

    #[error("holomorphy certificate failed: {0}")]
    Certificate(String),

    #[error("io error: {0}")]
    Io(String),
}

impl LabError {
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            LabError::Parameter(_) | LabError::Configuration(_) | LabError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
