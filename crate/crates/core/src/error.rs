use thiserror::Error;

use crate::graph::{DartId, EdgeId, VertexId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("not trivalent: {0}")]
    NotTrivalent(String),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("malformed dart pairing: {0}")]
    MalformedPairing(String),
    #[error("unknown catalog graph `{0}`")]
    UnknownName(String),
    #[error("random generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },
    #[error("scalar domain mismatch: expected {expected}, found {found}")]
    ScalarDomainMismatch { expected: String, found: String },
    #[error("matching violated across edge {edge} (difference {difference:e})")]
    MatchingViolated { edge: EdgeId, difference: f64 },
    #[error("bundle is not on the representation variety (vertex residual {residual:e})")]
    NotOnVariety { residual: f64 },
    #[error("matrix is not in SL(2): determinant off by {0:e}")]
    NotUnimodular(f64),
    #[error("determinant at vertex {vertex} is irregular: {condition}")]
    IrregularDeterminant { vertex: VertexId, condition: String },
    #[error("degenerate node on edge {edge}: residue matrix has zero determinant")]
    DegenerateNode { edge: EdgeId },
    #[error("inconsistent spectral data: {0}")]
    InconsistentSpectralData(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dart {0} out of range")]
    DartOutOfRange(DartId),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 for invalid input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotOnVariety { .. }
            | Error::IrregularDeterminant { .. }
            | Error::DegenerateNode { .. }
            | Error::InconsistentSpectralData(_)
            | Error::NumericalFailure(_)
            | Error::GenerationFailed { .. } => 3,
            _ => 2,
        }
    }
}
