//! Route capacity, delay, cost and the per-user utility `ρC/(D·cost)`.

use super::EconError;
use crate::grid::{SubcellGrid, SubcellId};
use crate::radio::{link_capacity, link_sinr, LinkContext, RadioParams};
use crate::routing::{Link, Route, RouteSet, Schedule};

/// Capacity of one scheduled link against its co-slot transmitters.
pub fn scheduled_link_capacity(
    grid: &SubcellGrid,
    link: Link,
    schedule: &Schedule,
    radio: &RadioParams,
) -> Result<f64, EconError> {
    let ctx = LinkContext::new(grid, link.tx, link.rx, schedule.co_slot_transmitters(link))?;
    Ok(link_capacity(link_sinr(&ctx, radio, grid)?, radio)?)
}

/// Bottleneck capacity along a route; `None` for an unrouted user.
pub fn route_capacity(
    grid: &SubcellGrid,
    route: &Route,
    schedule: &Schedule,
    radio: &RadioParams,
) -> Result<Option<f64>, EconError> {
    if !route.is_routed() {
        return Ok(None);
    }
    let mut cap = f64::INFINITY;
    for (tx, rx) in route.links() {
        let link = Link::new(tx, rx);
        if schedule.slot_of(link).is_none() {
            return Err(EconError::Unscheduled { tx, rx });
        }
        cap = cap.min(scheduled_link_capacity(grid, link, schedule, radio)?);
    }
    Ok(Some(cap))
}

/// Chain-view delay under MDR: `K·τ_i` with unit-dwell `τ_i`.
pub fn mdr_delay(tau_unit: f64, cluster: u32) -> f64 {
    cluster as f64 * tau_unit
}

/// Deterministic delay: hops × slots waited per hop. Unrouted users get
/// `f64::INFINITY`.
pub fn route_delay(route: &Route, schedule: &Schedule) -> f64 {
    if route.is_routed() {
        route.hops() as f64 * schedule.hop_wait()
    } else {
        f64::INFINITY
    }
}

/// `cost = P·h_e`, with at least one transmission.
pub fn route_cost(power: f64, effective_hops: f64) -> f64 {
    power * effective_hops.max(1.0)
}

/// `U_i = ρ·C/(D·cost)`.
pub fn user_utility(rho: f64, capacity: f64, delay: f64, cost: f64) -> Result<f64, EconError> {
    if delay.is_nan() || cost.is_nan() || delay <= 0.0 || cost <= 0.0 {
        return Err(EconError::Degenerate(format!("delay {delay}, cost {cost}")));
    }
    Ok(rho * capacity / (delay * cost))
}

/// Per-user figures of merit.
#[derive(Debug, Clone, PartialEq)]
pub struct UserMetrics {
    pub user: SubcellId,
    pub capacity: f64,
    pub delay: f64,
    pub cost: f64,
    /// Utility per unit of revenue, `C/(D·cost)`.
    pub merit: f64,
    pub routed: bool,
}

/// Metrics of every route in a set (unrouted users have zero merit).
pub fn route_metrics(
    grid: &SubcellGrid,
    routes: &RouteSet,
    schedule: &Schedule,
    radio: &RadioParams,
) -> Result<Vec<UserMetrics>, EconError> {
    routes
        .routes
        .iter()
        .map(|r| {
            let cap = route_capacity(grid, r, schedule, radio)?;
            let delay = route_delay(r, schedule);
            let cost = route_cost(radio.power, r.hops() as f64);
            Ok(match cap {
                Some(c) => UserMetrics {
                    user: r.source,
                    capacity: c,
                    delay,
                    cost,
                    merit: user_utility(1.0, c, delay, cost)?,
                    routed: true,
                },
                None => UserMetrics { user: r.source, capacity: 0.0, delay, cost, merit: 0.0, routed: false },
            })
        })
        .collect()
}

/// `U = Σ ρ·merit_i` over routed users.
pub fn network_utility(metrics: &[UserMetrics], rho: f64) -> f64 {
    metrics.iter().filter(|m| m.routed).map(|m| rho * m.merit).sum()
}

/// `C = Σ C_R` and `Thr = C/T`.
pub fn network_capacity_throughput(
    grid: &SubcellGrid,
    routes: &RouteSet,
    schedule: &Schedule,
    radio: &RadioParams,
) -> Result<(f64, f64), EconError> {
    let mut c = 0.0;
    for r in &routes.routes {
        if let Some(cap) = route_capacity(grid, r, schedule, radio)? {
            c += cap;
        }
    }
    let thr = if schedule.cycle_length == 0 { 0.0 } else { c / schedule.cycle_length as f64 };
    Ok((c, thr))
}
