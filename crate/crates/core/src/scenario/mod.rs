//! Scenario files, experiment commands and result emission.

pub mod config;
pub mod experiment;
pub mod output;

use thiserror::Error;

use crate::chains::ChainError;
use crate::compression::CompressionError;
use crate::economics::EconError;
use crate::grid::GridError;
use crate::routing::RoutingError;

pub use config::{load_scenario, parse_scenario, CellRef, Experiment, NamedOverlay, NamedTraffic, Scenario, ScenarioFile};
pub use experiment::{run_experiment, Command, RunOptions};
pub use output::{emit_csv, emit_plotdata, ResultTable, Value};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("table `{0}` has no rows")]
    EmptyTable(String),
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<ScenarioError>,
    },
}

impl ScenarioError {
    pub fn context(self, context: String) -> Self {
        match self {
            e @ ScenarioError::Context { .. } => e,
            e => ScenarioError::Context { context, source: Box::new(e) },
        }
    }
}

impl From<RoutingError> for ScenarioError {
    fn from(e: RoutingError) -> Self {
        ScenarioError::Econ(e.into())
    }
}

impl From<ChainError> for ScenarioError {
    fn from(e: ChainError) -> Self {
        ScenarioError::Econ(e.into())
    }
}

impl From<GridError> for ScenarioError {
    fn from(e: GridError) -> Self {
        ScenarioError::Econ(e.into())
    }
}

impl From<CompressionError> for ScenarioError {
    fn from(e: CompressionError) -> Self {
        ScenarioError::Econ(e.into())
    }
}
