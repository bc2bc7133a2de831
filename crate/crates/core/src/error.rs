use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("energy-harvesting floor {floor:.6e} W exceeds peak power {peak:.6e} W in slot {slot}")]
    InfeasibleHarvest { slot: usize, floor: f64, peak: f64 },

    #[error("harvesting floors need {needed:.6e} W in total but the budget is {budget:.6e} W")]
    InfeasibleBudget { needed: f64, budget: f64 },

    #[error("infeasible mission: {0}")]
    InfeasibleMission(String),

    #[error("{block}: expansion point is not feasible ({detail})")]
    InfeasibleExpansion { block: &'static str, detail: String },

    #[error("{block}: {detail}")]
    BlockFailure { block: &'static str, detail: String },

    #[error("config parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for the infeasibility family (harvest, budget, mission, expansion).
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleHarvest { .. }
                | Error::InfeasibleBudget { .. }
                | Error::InfeasibleMission(_)
                | Error::InfeasibleExpansion { .. }
        )
    }
}
