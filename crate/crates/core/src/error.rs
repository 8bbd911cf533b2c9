use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage that rejected a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Coverage,
    Graph,
    Relaxation,
    Rounding,
    Refinement,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Coverage => "coverage",
            Stage::Graph => "graph",
            Stage::Relaxation => "relaxation",
            Stage::Rounding => "rounding",
            Stage::Refinement => "refinement",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("model regime error: {0}")]
    ModelRegime(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible at {stage} stage: {detail}")]
    Infeasible { stage: Stage, detail: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("path enumeration guard exceeded: more than {0} simple paths")]
    PathGuard(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn infeasible(stage: Stage, detail: impl Into<String>) -> Self {
        Error::Infeasible {
            stage,
            detail: detail.into(),
        }
    }
}
