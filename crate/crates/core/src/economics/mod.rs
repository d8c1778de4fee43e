//! Utility, tessellation optimisation and MNO/SSO offloading economics.

pub mod negotiation;
pub mod offload;
pub mod tessellation;
pub mod utility;

use thiserror::Error;

use crate::chains::ChainError;
use crate::compression::CompressionError;
use crate::grid::{GridError, SubcellId};
use crate::radio::RadioError;
use crate::routing::RoutingError;

pub use negotiation::{negotiate, NegotiationMode, NegotiationOutcome, NegotiationStep, Verdict};
pub use offload::{apply_traffic_step, OffloadModel, OffsetEvaluator, TrafficState};
pub use tessellation::{optimize_tessellation, TessellationPoint, TessellationSurface};
pub use utility::{
    network_capacity_throughput, network_utility, route_capacity, route_cost, route_delay, user_utility, UserMetrics,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Compression(#[from] CompressionError),
    #[error("link {tx} -> {rx} has no slot")]
    Unscheduled { tx: SubcellId, rx: SubcellId },
    #[error("degenerate utility term: {0}")]
    Degenerate(String),
    #[error("invalid economic parameters: {0}")]
    InvalidParams(String),
    #[error("invalid traffic state: {0}")]
    InvalidTraffic(String),
    #[error("price {0} outside the negotiation range")]
    PriceOutOfBounds(f64),
    #[error("negotiation did not converge after {iterations} iterations (last price {last_price})")]
    NonConvergence { iterations: usize, last_price: f64, trace: Vec<NegotiationStep> },
}

/// Revenues, price grid and stopping rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EconParams {
    /// MNO revenue per utility unit.
    pub rho: f64,
    /// SSO revenue per utility unit.
    pub rho1: f64,
    /// Reward proportionality constant.
    pub gamma: f64,
    /// Price step.
    pub price_step: f64,
    /// Starting offer.
    pub initial_price: f64,
    /// Equilibrium tolerance on `|ΔU − ΔU₁|`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Upper end of the price search. Offers stay within `[0, price_cap]`.
    pub price_cap: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        EconParams {
            rho: 2.0,
            rho1: 2.0,
            gamma: 1.0,
            price_step: 0.01,
            initial_price: 1.0,
            tol: 1e-9,
            max_iterations: 10_000,
            price_cap: 6.0,
        }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<(), EconError> {
        let bad = |m: &str| Err(EconError::InvalidParams(m.into()));
        if !(self.rho1 > 0.0 && self.rho >= self.rho1) {
            return bad("require rho >= rho1 > 0");
        }
        if self.price_step.is_nan() || self.price_step <= 0.0 {
            return bad("price step must be > 0");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tolerance must be > 0");
        }
        if !(self.price_cap > 0.0 && (0.0..=self.price_cap).contains(&self.initial_price)) {
            return bad("initial price must lie in [0, price_cap]");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(EconParams::default().validate().is_ok());
        assert!(EconParams { rho: 1.0, rho1: 2.0, ..Default::default() }.validate().is_err());
        assert!(EconParams { price_step: 0.0, ..Default::default() }.validate().is_err());
        assert!(EconParams { initial_price: 7.0, ..Default::default() }.validate().is_err());
    }
}
