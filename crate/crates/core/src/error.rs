use std::path::PathBuf;

use thiserror::Error;

use crate::impact::Phase;

pub type Result<T, E = LcaError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LcaError {
    #[error("flow `{0}` is declared more than once")]
    DuplicateFlow(String),

    #[error("process `{0}` is declared more than once")]
    DuplicateProcess(String),

    #[error("product `{product}` is produced by both `{first}` and `{second}`")]
    DuplicateProducer {
        product: String,
        first: String,
        second: String,
    },

    #[error("process `{process}` references unknown flow `{flow}`")]
    DanglingFlow { process: String, flow: String },

    #[error("intermediate flow `{0}` has no producing process")]
    NoProducer(String),

    #[error("process `{process}`: {reason}")]
    InvalidProcess { process: String, reason: String },

    #[error("flow `{flow}`: {reason}")]
    InvalidFlow { flow: String, reason: String },

    #[error("no processes")]
    NoProcesses,

    #[error("technosphere matrix is singular at pivot {pivot} (product `{product}`)")]
    Singular { pivot: usize, product: String },

    #[error("technosphere matrix is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("solve residual {residual:.3e} exceeds tolerance")]
    Residual { residual: f64 },

    #[error("demand references `{0}`, which is not an intermediate product of this system")]
    UnknownProduct(String),

    #[error("vector of length {got} does not match system dimension {expected}")]
    IndexMismatch { expected: usize, got: usize },

    #[error("non-finite amount {value} for `{flow}`")]
    NonFinite { flow: String, value: f64 },

    #[error("invalid argument `{name}` = {value}: {reason}")]
    InvalidArgument {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("phase `{0}` appears more than once")]
    DuplicatePhase(Phase),

    #[error("dataset has no process for role `{0}`")]
    MissingRole(String),

    #[error("hour grid must be sorted, nonnegative and finite")]
    UnsortedGrid,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<LcaError>,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("nothing to chart")]
    EmptySeries,
}

impl LcaError {
    pub(crate) fn parse(file: &str, line: u64, message: impl Into<String>) -> Self {
        LcaError::Parse {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_scenario(self, scenario: &str) -> Self {
        LcaError::Scenario {
            scenario: scenario.to_string(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn ensure_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(LcaError::InvalidArgument {
            name,
            value,
            reason: "must be finite",
        });
    }
    if value < 0.0 {
        return Err(LcaError::InvalidArgument {
            name,
            value,
            reason: "must be nonnegative",
        });
    }
    Ok(())
}
