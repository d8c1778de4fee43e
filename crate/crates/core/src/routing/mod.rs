//! Route-discovery protocols.
//!
//! Two views coexist. [`chain`] models relay availability probabilistically
//! and maps MDR and LIR onto absorbing chains. [`routes`] and [`schedule`]
//! model availability deterministically (explicit unavailable sets) and
//! produce concrete routes and slot assignments for mMDR, mLIR and LAR.

pub mod chain;
pub mod routes;
pub mod schedule;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::chains::ChainError;
use crate::grid::{GridError, SubcellId, DEFAULT_CLUSTER};

pub use chain::{
    build_lir_chain, build_mdr_chain, lir_transition_rows, mdr_transition_row, Mode, RoutingChain, Sink,
    Transition,
};
pub use routes::{extract_routes, ideal_routes, lar_route, Route, RouteSet, ScenarioOverlay};
pub use schedule::{schedule, Link, Schedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid overlay: {0}")]
    InvalidOverlay(String),
    #[error("no relay colour connects every source (best colour strands {stranded} of {sources})")]
    NoFeasibleK0 { stranded: usize, sources: usize },
    #[error("{0} is a destination, not a transient subcell")]
    NotTransient(SubcellId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    Mdr,
    Lir,
    MMdr,
    MLir,
    Lar,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Mdr => "MDR",
            ProtocolKind::Lir => "LIR",
            ProtocolKind::MMdr => "mMDR",
            ProtocolKind::MLir => "mLIR",
            ProtocolKind::Lar => "LAR",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = RoutingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mdr" => Ok(ProtocolKind::Mdr),
            "lir" => Ok(ProtocolKind::Lir),
            "mmdr" => Ok(ProtocolKind::MMdr),
            "mlir" => Ok(ProtocolKind::MLir),
            "lar" => Ok(ProtocolKind::Lar),
            other => Err(RoutingError::InvalidConfig(format!("unknown protocol `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Aggregated relay availability.
    pub p: f64,
    pub cluster: u32,
    /// Slots per hop in MDR mode.
    pub dwell_mdr: f64,
    /// Slots per hop in simultaneous (ss1) mode.
    pub dwell_lir: f64,
    /// Links may share a slot only if every cross distance exceeds this (in `d_r`).
    pub interference_threshold: f64,
    /// mLIR: fall back to plain greedy relaying when the first-hop colour is blocked.
    pub allow_fallback: bool,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind, p: f64) -> Self {
        ProtocolConfig {
            kind,
            p,
            cluster: DEFAULT_CLUSTER,
            dwell_mdr: DEFAULT_CLUSTER as f64,
            dwell_lir: 1.0,
            interference_threshold: 1.0,
            allow_fallback: true,
        }
    }

    pub fn validate(&self) -> Result<(), RoutingError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(RoutingError::InvalidConfig(format!("p = {} outside [0, 1]", self.p)));
        }
        if !(self.dwell_mdr >= 1.0 && self.dwell_lir >= 1.0) {
            return Err(RoutingError::InvalidConfig("dwell times must be >= 1".into()));
        }
        if !(self.interference_threshold >= 0.0 && self.interference_threshold.is_finite()) {
            return Err(RoutingError::InvalidConfig("interference threshold must be >= 0".into()));
        }
        if self.cluster != DEFAULT_CLUSTER {
            return Err(RoutingError::Grid(GridError::UnsupportedCluster(self.cluster)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_names_round_trip() {
        for k in [ProtocolKind::Mdr, ProtocolKind::Lir, ProtocolKind::MMdr, ProtocolKind::MLir, ProtocolKind::Lar] {
            assert_eq!(k.name().parse::<ProtocolKind>().unwrap(), k);
        }
        assert!("xyz".parse::<ProtocolKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::new(ProtocolKind::Mdr, 0.5).validate().is_ok());
        assert!(ProtocolConfig::new(ProtocolKind::Mdr, 1.5).validate().is_err());
        let mut c = ProtocolConfig::new(ProtocolKind::Lir, 0.5);
        c.dwell_lir = 0.5;
        assert!(c.validate().is_err());
    }
}
