//! Utility of a tessellation `U(H, P)` and its optimisation.
//!
//! Every ring subcell is a user relaying to the base station along its
//! minimum-distance route. Delay and path cost come from the unit-dwell MDR
//! chain (`D = K·τ_i`, `cost = P·τ_i`); route capacity is the bottleneck link
//! capacity when every subcell of the transmitter's colour transmits in the
//! same slot. `U` is the average of `ρC/(D·cost)` over users.

use rayon::prelude::*;

use super::utility::{mdr_delay, route_cost, user_utility};
use super::{EconError, EconParams};
use crate::compression::{
    aggregate_availability, availability_from_traffic, presence_from_terminals, visibility_from_beamwidth,
    CompressedStateVector, FullStateVector, LinkInterference,
};
use crate::grid::{Destinations, GridParams, SubcellGrid, SubcellId};
use crate::radio::{link_capacity, min_power, sinr_from_distances, sinr_gain_form, RadioParams};
use crate::routing::chain::{build_mdr_chain, Sink};
use crate::routing::ideal_routes;

/// Where the relay availability `p` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AvailabilitySpec {
    Direct(f64),
    /// Operator terminal counts, traffic ratio ζ and beamwidth φ.
    Compressed { n_o: Vec<f64>, zeta: f64, phi: f64 },
}

impl AvailabilitySpec {
    pub fn availability(&self, rings: u32) -> Result<f64, EconError> {
        match self {
            AvailabilitySpec::Direct(p) => {
                if (0.0..=1.0).contains(p) {
                    Ok(*p)
                } else {
                    Err(EconError::InvalidParams(format!("p = {p} outside [0, 1]")))
                }
            }
            AvailabilitySpec::Compressed { n_o, zeta, phi } => {
                let p_o = presence_from_terminals(n_o, rings)?;
                let p_a = availability_from_traffic(*zeta)?;
                let p_phi = visibility_from_beamwidth(*phi)?;
                Ok(aggregate_availability(p_a, p_phi, &p_o)?)
            }
        }
    }
}

/// A user's minimum-distance route with the links' interference distances.
#[derive(Debug, Clone)]
struct UserRoute {
    links: Vec<RouteLink>,
}

/// `(tx, rx, Z of every co-colour transmitter)`.
type RouteLink = (SubcellId, SubcellId, Vec<(SubcellId, f64)>);

fn full_reuse_routes(grid: &SubcellGrid) -> Result<Vec<UserRoute>, EconError> {
    let dest = Destinations::base_station();
    let users: Vec<SubcellId> = grid.ring_ids().collect();
    let set = ideal_routes(grid, &dest, &users)?;
    set.routes
        .iter()
        .map(|r| {
            let links = r
                .links()
                .map(|(tx, rx)| {
                    let color = grid.cluster_color(tx);
                    let z = grid
                        .ring_ids()
                        .filter(|k| *k != tx && *k != rx && grid.cluster_color(*k) == color)
                        .map(|k| Ok((k, grid.interference_distance(k, rx)?)))
                        .collect::<Result<Vec<_>, EconError>>()?;
                    Ok((tx, rx, z))
                })
                .collect::<Result<Vec<_>, EconError>>()?;
            Ok(UserRoute { links })
        })
        .collect()
}

/// Unit-dwell hop counts `τ_i` of every ring subcell.
fn unit_tau(grid: &SubcellGrid, p: f64) -> Result<Vec<f64>, EconError> {
    let chain = build_mdr_chain(grid, &Destinations::base_station(), p, 1.0)?;
    let stats = chain.statistics()?;
    grid.ring_ids()
        .map(|id| {
            chain
                .start_state(id)
                .map(|s| stats.tau[s])
                .ok_or_else(|| EconError::Degenerate(format!("{id} has no chain state")))
        })
        .collect()
}

fn average_utility(
    caps: &[f64],
    tau: &[f64],
    power: f64,
    cluster: u32,
    rho: f64,
) -> Result<f64, EconError> {
    let mut total = 0.0;
    for (c, t) in caps.iter().zip(tau) {
        total += user_utility(rho, *c, mdr_delay(*t, cluster), route_cost(power, *t))?;
    }
    Ok(total / caps.len() as f64)
}

/// Bottleneck capacity of every ring subcell's minimum-distance route to the
/// base station under full colour reuse, in ring order.
pub fn full_reuse_capacities(grid: &SubcellGrid, radio: &RadioParams) -> Result<Vec<f64>, EconError> {
    let routes = full_reuse_routes(grid)?;
    routes
        .iter()
        .map(|u| {
            u.links
                .iter()
                .map(|(_, rx, z)| {
                    let zs: Vec<f64> = z.iter().map(|(_, d)| *d).collect();
                    let s = sinr_from_distances(&zs, radio.noise_at(grid.ring(*rx)), grid.relay_distance(), radio);
                    link_capacity(s, radio)
                })
                .try_fold(f64::INFINITY, |m, c| c.map(|c| m.min(c)))
                .map_err(EconError::from)
        })
        .collect()
}

/// Expected network capacity under MDR relaying at availability `p`:
/// `Σ_i (1 − B_nr,i)·C_i` over ring subcells, with `C_i` the full-reuse
/// route capacity.
pub fn expected_mdr_capacity(grid: &SubcellGrid, p: f64, radio: &RadioParams) -> Result<f64, EconError> {
    let caps = full_reuse_capacities(grid, radio)?;
    let chain = build_mdr_chain(grid, &Destinations::base_station(), p, 1.0)?;
    let stats = chain.statistics()?;
    let nr = chain
        .sink_position(Sink::NoRoute)
        .ok_or_else(|| EconError::Degenerate("chain has no no-route state".into()))?;
    grid.ring_ids()
        .zip(caps)
        .map(|(id, c)| {
            let s = chain
                .start_state(id)
                .ok_or_else(|| EconError::Degenerate(format!("{id} has no chain state")))?;
            Ok((1.0 - stats.b[s][nr]) * c)
        })
        .sum()
}

/// `U(H, P)` from the compressed description: interference from `Z` in
/// relay-distance units, `p` aggregated from the compressed parameters.
pub fn utility_compressed(
    params: &GridParams,
    compressed: &CompressedStateVector,
    radio: &RadioParams,
    econ: &EconParams,
) -> Result<f64, EconError> {
    let grid = SubcellGrid::new(*params)?;
    let radio = RadioParams { power: compressed.power, ..radio.clone() };
    let caps = full_reuse_capacities(&grid, &radio)?;
    let tau = unit_tau(&grid, compressed.p)?;
    average_utility(&caps, &tau, radio.power, params.cluster, econ.rho)
}

/// Build the full state vector by observing the network in metres: explicit
/// gain and per-link interference powers, explicit probabilities.
pub fn observe_full_state(
    params: &GridParams,
    n_o: &[f64],
    zeta: f64,
    phi: f64,
    gamma: f64,
    radio: &RadioParams,
) -> Result<FullStateVector, EconError> {
    let grid = SubcellGrid::new(*params)?;
    let alpha = radio.path_loss_exponent;
    let n = grid.subcell_count();
    let routes = full_reuse_routes(&grid)?;
    let mut interference = Vec::new();
    let mut gain = 0.0;
    for u in &routes {
        for (tx, rx, z) in &u.links {
            let rx_pos = grid.center_position(*rx);
            gain = grid.center_position(*tx).distance(rx_pos).powf(-alpha);
            let powers = z
                .iter()
                .map(|(k, _)| radio.power * grid.center_position(*k).distance(rx_pos).powf(-alpha))
                .collect();
            interference.push(LinkInterference { tx: *tx, rx: *rx, powers });
        }
    }
    Ok(FullStateVector {
        rings: params.rings,
        n,
        n_o: n_o.to_vec(),
        p_o: n_o.iter().map(|k| k / n as f64).collect(),
        p_a: 1.0 - zeta,
        gain,
        interference,
        zeta,
        phi,
        p_phi: phi / 360.0,
        reward: gamma * zeta,
    })
}

/// `U(H, P)` from the full state vector: SINR in gain form with the observed
/// interference, `p` from the explicit probabilities.
pub fn utility_full(
    params: &GridParams,
    full: &FullStateVector,
    radio: &RadioParams,
    econ: &EconParams,
) -> Result<f64, EconError> {
    full.validate()?;
    let grid = SubcellGrid::new(*params)?;
    let routes = full_reuse_routes(&grid)?;
    let mut links = full.interference.iter();
    let mut caps = Vec::with_capacity(routes.len());
    for u in &routes {
        let mut cap = f64::INFINITY;
        for (tx, rx, _) in &u.links {
            let obs = links
                .next()
                .filter(|l| l.tx == *tx && l.rx == *rx)
                .ok_or_else(|| EconError::InvalidParams("interference observations do not match the routes".into()))?;
            let s = sinr_gain_form(full.gain, radio.power, &obs.powers, radio.noise_at(grid.ring(*rx)));
            cap = cap.min(link_capacity(s, radio)?);
        }
        caps.push(cap);
    }
    let p = full.availability()?;
    let tau = unit_tau(&grid, p)?;
    average_utility(&caps, &tau, radio.power, params.cluster, econ.rho)
}

/// One evaluated `(H, P)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct TessellationPoint {
    pub rings: u32,
    pub power: f64,
    pub p: f64,
    pub utility: f64,
    /// `P ≥ P_min(H)`.
    pub feasible: bool,
    pub min_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TessellationSurface {
    /// Points ordered by power, then ring count.
    pub points: Vec<TessellationPoint>,
}

impl TessellationSurface {
    /// Best feasible point overall.
    pub fn argmax(&self) -> Option<&TessellationPoint> {
        self.points
            .iter()
            .filter(|p| p.feasible)
            .fold(None, |best: Option<&TessellationPoint>, x| match best {
                Some(b) if b.utility >= x.utility => Some(b),
                _ => Some(x),
            })
    }

    /// Best feasible `H` for a given power.
    pub fn argmax_rings(&self, power: f64) -> Option<u32> {
        self.points
            .iter()
            .filter(|p| p.feasible && p.power == power)
            .fold(None, |best: Option<&TessellationPoint>, x| match best {
                Some(b) if b.utility >= x.utility => Some(b),
                _ => Some(x),
            })
            .map(|p| p.rings)
    }

    pub fn utility(&self, rings: u32, power: f64) -> Option<f64> {
        self.points.iter().find(|p| p.rings == rings && p.power == power).map(|p| p.utility)
    }
}

/// Single-point tessellation utility.
pub fn tessellation_utility(
    rings: u32,
    power: f64,
    radius: f64,
    availability: &AvailabilitySpec,
    radio: &RadioParams,
    econ: &EconParams,
) -> Result<TessellationPoint, EconError> {
    let params = GridParams::new(rings, radius)?;
    let p = availability.availability(rings)?;
    let compressed = CompressedStateVector { rings, n_o: Vec::new(), p, zeta: 0.0, phi: 360.0, gamma: econ.gamma, power };
    let utility = utility_compressed(&params, &compressed, radio, econ)?;
    let pmin = min_power(&params, radio.sensitivity, radio.path_loss_exponent);
    Ok(TessellationPoint { rings, power, p, utility, feasible: power >= pmin, min_power: pmin })
}

/// Exhaustive evaluation over `H × P`, in parallel.
pub fn optimize_tessellation(
    rings: &[u32],
    powers: &[f64],
    radius: f64,
    availability: &AvailabilitySpec,
    radio: &RadioParams,
    econ: &EconParams,
) -> Result<TessellationSurface, EconError> {
    if rings.is_empty() || powers.is_empty() {
        return Err(EconError::InvalidParams("empty H or P range".into()));
    }
    let grid_points: Vec<(u32, f64)> = powers.iter().flat_map(|p| rings.iter().map(move |h| (*h, *p))).collect();
    let points = grid_points
        .par_iter()
        .map(|&(h, p)| tessellation_utility(h, p, radius, availability, radio, econ))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TessellationSurface { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::{absorb, hill_climb};
    use approx::assert_relative_eq;

    #[test]
    fn expected_capacity_grows_with_availability() {
        let grid = SubcellGrid::new(GridParams::new(3, 1000.0).unwrap()).unwrap();
        let radio = RadioParams::default();
        let full: f64 = full_reuse_capacities(&grid, &radio).unwrap().iter().sum();
        assert_relative_eq!(expected_mdr_capacity(&grid, 1.0, &radio).unwrap(), full, max_relative = 1e-12);
        assert_eq!(expected_mdr_capacity(&grid, 0.0, &radio).unwrap(), 0.0);
        let mut last = 0.0;
        for k in 1..=20 {
            let c = expected_mdr_capacity(&grid, k as f64 / 20.0, &radio).unwrap();
            assert!(c >= last - 1e-12, "p = {}", k as f64 / 20.0);
            last = c;
        }
    }

    #[test]
    fn single_point_surface() {
        let radio = RadioParams::default();
        let econ = EconParams::default();
        let s = optimize_tessellation(&[4], &[0.15], 1000.0, &AvailabilitySpec::Direct(1.0), &radio, &econ).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.argmax().unwrap().rings, 4);
    }

    #[test]
    fn hill_climb_agrees_with_exhaustive_search() {
        let radio = RadioParams::default();
        let econ = EconParams::default();
        let rings: Vec<u32> = (1..=14).collect();
        let avail = AvailabilitySpec::Direct(1.0);
        let s = optimize_tessellation(&rings, &[0.2], 1000.0, &avail, &radio, &econ).unwrap();
        let best = s.points.iter().max_by(|a, b| a.utility.total_cmp(&b.utility)).unwrap().rings;
        let climbed = hill_climb(1, |h| s.utility(h.min(14), 0.2).unwrap(), 50);
        assert_eq!(climbed, best);
    }

    #[test]
    fn full_and_compressed_paths_agree() {
        let radio = RadioParams::with_power(0.2);
        let econ = EconParams::default();
        let params = GridParams::new(3, 1000.0).unwrap();
        let full = observe_full_state(&params, &[20.0, 10.0], 0.2, 270.0, 1.0, &radio).unwrap();
        let compressed = absorb(&full, &params, 1.0, 0.2).unwrap();
        let a = utility_full(&params, &full, &radio, &econ).unwrap();
        let b = utility_compressed(&params, &compressed, &radio, &econ).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn availability_spec() {
        assert_eq!(AvailabilitySpec::Direct(0.4).availability(3).unwrap(), 0.4);
        assert!(AvailabilitySpec::Direct(1.4).availability(3).is_err());
        let c = AvailabilitySpec::Compressed { n_o: vec![36.0], zeta: 0.0, phi: 360.0 };
        assert_relative_eq!(c.availability(3).unwrap(), 1.0);
    }
}
