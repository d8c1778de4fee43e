//! Concrete routes under explicit unavailable-user sets.

use std::collections::{BTreeMap, BTreeSet};

use super::chain::{Mode, Sink};
use super::{ProtocolConfig, ProtocolKind, RoutingError};
use crate::grid::{Destinations, SubcellGrid, SubcellId};

/// Users that cannot relay, the transmitting sources, and an optional forced
/// first-hop colour for mLIR.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOverlay {
    pub unavailable: BTreeSet<SubcellId>,
    pub sources: Vec<SubcellId>,
    pub k0: Option<u32>,
}

impl ScenarioOverlay {
    pub fn new(sources: Vec<SubcellId>) -> Self {
        ScenarioOverlay { sources, ..Default::default() }
    }

    pub fn with_unavailable(mut self, unavailable: impl IntoIterator<Item = SubcellId>) -> Self {
        self.unavailable = unavailable.into_iter().collect();
        self
    }

    pub fn validate(&self, grid: &SubcellGrid, dest: &Destinations) -> Result<(), RoutingError> {
        if self.sources.is_empty() {
            return Err(RoutingError::InvalidOverlay("no sources".into()));
        }
        for s in self.sources.iter().chain(&self.unavailable) {
            if !grid.contains(*s) {
                return Err(RoutingError::InvalidOverlay(format!("{s} is off-grid")));
            }
        }
        if let Some(s) = self.sources.iter().find(|s| self.unavailable.contains(s)) {
            return Err(RoutingError::InvalidOverlay(format!("source {s} is also unavailable")));
        }
        if let Some(s) = self.sources.iter().find(|s| dest.is_destination(**s)) {
            return Err(RoutingError::InvalidOverlay(format!("source {s} is a destination")));
        }
        if let Some(d) = dest.targets().find(|d| self.unavailable.contains(d)) {
            return Err(RoutingError::InvalidOverlay(format!("destination {d} marked unavailable")));
        }
        if let Some(k) = self.k0 {
            if k >= grid.params().cluster {
                return Err(RoutingError::InvalidOverlay(format!("k0 colour {k} out of range")));
            }
        }
        Ok(())
    }
}

/// One source's route. `path` starts at the source; when routed it ends at
/// the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub source: SubcellId,
    pub path: Vec<SubcellId>,
    /// Mode of each hop: `Ss1` for the common-colour first hop of mLIR.
    pub modes: Vec<Mode>,
    pub sink: Option<Sink>,
}

impl Route {
    pub fn is_routed(&self) -> bool {
        self.sink.is_some()
    }

    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }

    /// `(tx, rx)` pairs along the route.
    pub fn links(&self) -> impl Iterator<Item = (SubcellId, SubcellId)> + '_ {
        self.path.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Routes for every source of an overlay.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteSet {
    pub protocol: ProtocolKind,
    pub routes: Vec<Route>,
    /// Relay colour used for the first hop (mLIR).
    pub k0: Option<u32>,
    /// Neighbour probes performed while building the routes.
    pub probes: usize,
}

impl RouteSet {
    pub fn routed(&self) -> impl Iterator<Item = &Route> {
        self.routes.iter().filter(|r| r.is_routed())
    }

    pub fn unrouted(&self) -> usize {
        self.routes.iter().filter(|r| !r.is_routed()).count()
    }
}

fn sink_of(dest: &Destinations, id: SubcellId) -> Option<Sink> {
    if dest.bs == Some(id) {
        Some(Sink::Bs)
    } else if dest.aps.contains(&id) {
        Some(Sink::Ap(id))
    } else {
        None
    }
}

/// Greedy relaying from `path.last()`: each hop goes to the first ranked
/// neighbour that is available and not yet on the path, chosen by `pick`.
fn continue_route<F>(
    grid: &SubcellGrid,
    dest: &Destinations,
    unavailable: &BTreeSet<SubcellId>,
    mut path: Vec<SubcellId>,
    mut modes: Vec<Mode>,
    probes: &mut usize,
    mut pick: F,
) -> Route
where
    F: FnMut(SubcellId, &[SubcellId]) -> Option<SubcellId>,
{
    let source = path[0];
    let limit = grid.len();
    loop {
        let here = *path.last().expect("non-empty path");
        if let Some(sink) = sink_of(dest, here) {
            return Route { source, path, modes, sink: Some(sink) };
        }
        if path.len() > limit {
            return Route { source, path, modes, sink: None };
        }
        let candidates: Vec<SubcellId> = grid
            .neighbors_ranked(here, dest)
            .into_iter()
            .inspect(|_| *probes += 1)
            .filter(|n| !unavailable.contains(n) && !path.contains(n))
            .collect();
        match pick(here, &candidates) {
            Some(next) => {
                path.push(next);
                modes.push(Mode::Ss2);
            }
            None => return Route { source, path, modes, sink: None },
        }
    }
}

fn greedy(
    grid: &SubcellGrid,
    dest: &Destinations,
    unavailable: &BTreeSet<SubcellId>,
    path: Vec<SubcellId>,
    modes: Vec<Mode>,
    probes: &mut usize,
) -> Route {
    continue_route(grid, dest, unavailable, path, modes, probes, |_, c| c.first().copied())
}

/// Minimum-distance routes with every user available.
pub fn ideal_routes(grid: &SubcellGrid, dest: &Destinations, sources: &[SubcellId]) -> Result<RouteSet, RoutingError> {
    let overlay = ScenarioOverlay::new(sources.to_vec());
    overlay.validate(grid, dest)?;
    let mut probes = 0;
    let none = BTreeSet::new();
    let routes = sources
        .iter()
        .map(|&s| greedy(grid, dest, &none, vec![s], Vec::new(), &mut probes))
        .collect();
    Ok(RouteSet { protocol: ProtocolKind::MMdr, routes, k0: None, probes })
}

fn mmdr(grid: &SubcellGrid, dest: &Destinations, overlay: &ScenarioOverlay) -> RouteSet {
    let mut probes = 0;
    let routes = overlay
        .sources
        .iter()
        .map(|&s| greedy(grid, dest, &overlay.unavailable, vec![s], Vec::new(), &mut probes))
        .collect();
    RouteSet { protocol: ProtocolKind::MMdr, routes, k0: None, probes }
}

/// Route every source with a first hop to its neighbour of colour `k0`,
/// then greedy relaying. The `k0` hop is taken only when it moves closer to
/// the destination; otherwise the source relays greedily from the start.
fn mlir_with(
    grid: &SubcellGrid,
    dest: &Destinations,
    overlay: &ScenarioOverlay,
    k0: u32,
    fallback: bool,
    probes: &mut usize,
) -> Vec<Route> {
    overlay
        .sources
        .iter()
        .map(|&s| {
            let first = grid
                .neighbors_ranked(s, dest)
                .into_iter()
                .inspect(|_| *probes += 1)
                .find(|n| {
                    grid.cluster_color(*n) == k0
                        && !overlay.unavailable.contains(n)
                        && grid.destination_distance_sq(*n, dest) < grid.destination_distance_sq(s, dest)
                });
            let attempt = first.map(|n| greedy(grid, dest, &overlay.unavailable, vec![s, n], vec![Mode::Ss1], probes));
            match attempt {
                Some(r) if r.is_routed() => r,
                Some(r) if !fallback => r,
                None if !fallback => Route { source: s, path: vec![s], modes: Vec::new(), sink: None },
                _ => greedy(grid, dest, &overlay.unavailable, vec![s], Vec::new(), probes),
            }
        })
        .collect()
}

fn first_hop_completions(grid: &SubcellGrid, dest: &Destinations, overlay: &ScenarioOverlay, k0: u32) -> usize {
    let mut probes = 0;
    mlir_with(grid, dest, overlay, k0, false, &mut probes).iter().filter(|r| r.is_routed()).count()
}

fn mlir(
    grid: &SubcellGrid,
    dest: &Destinations,
    overlay: &ScenarioOverlay,
    config: &ProtocolConfig,
) -> Result<RouteSet, RoutingError> {
    let k0 = match overlay.k0 {
        Some(k) => k,
        None => {
            let (best, routed) = (0..config.cluster)
                .map(|k| (k, first_hop_completions(grid, dest, overlay, k)))
                .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if routed < overlay.sources.len() && !config.allow_fallback {
                return Err(RoutingError::NoFeasibleK0 {
                    stranded: overlay.sources.len() - routed,
                    sources: overlay.sources.len(),
                });
            }
            best
        }
    };
    let mut probes = 0;
    let routes = mlir_with(grid, dest, overlay, k0, config.allow_fallback, &mut probes);
    Ok(RouteSet { protocol: ProtocolKind::MLir, routes, k0: Some(k0), probes })
}

/// Concrete routes for the overlay under `config.kind`. MDR behaves like
/// mMDR and LIR like mLIR here; the probabilistic variants live in the chain
/// view.
pub fn extract_routes(
    grid: &SubcellGrid,
    dest: &Destinations,
    overlay: &ScenarioOverlay,
    config: &ProtocolConfig,
) -> Result<RouteSet, RoutingError> {
    config.validate()?;
    dest.validate(grid)?;
    overlay.validate(grid, dest)?;
    match config.kind {
        ProtocolKind::Mdr | ProtocolKind::MMdr => {
            let mut set = mmdr(grid, dest, overlay);
            set.protocol = config.kind;
            Ok(set)
        }
        ProtocolKind::Lir | ProtocolKind::MLir => {
            let mut set = mlir(grid, dest, overlay, config)?;
            set.protocol = config.kind;
            Ok(set)
        }
        ProtocolKind::Lar => lar_route(grid, dest, overlay),
    }
}

/// Load-aware baseline: hop cost `(1 + load) × rank`, sources routed in
/// order with loads updated after each route. Ties go to the lower load, then
/// the better rank.
pub fn lar_route(grid: &SubcellGrid, dest: &Destinations, overlay: &ScenarioOverlay) -> Result<RouteSet, RoutingError> {
    dest.validate(grid)?;
    overlay.validate(grid, dest)?;
    let mut load: BTreeMap<SubcellId, usize> = BTreeMap::new();
    let mut probes = 0;
    let mut routes = Vec::with_capacity(overlay.sources.len());
    for &s in &overlay.sources {
        let route = {
            let load = &load;
            continue_route(grid, dest, &overlay.unavailable, vec![s], Vec::new(), &mut probes, |here, cands| {
                let ranked = grid.neighbors_ranked(here, dest);
                cands
                    .iter()
                    .map(|c| {
                        let rank = ranked.iter().position(|r| r == c).expect("candidate is a neighbour") + 1;
                        let l = if dest.is_destination(*c) { 0 } else { load.get(c).copied().unwrap_or(0) };
                        ((1 + l) * rank, l, rank, *c)
                    })
                    .min()
                    .map(|(_, _, _, c)| c)
            })
        };
        if route.is_routed() {
            for relay in &route.path[1..route.path.len() - 1] {
                *load.entry(*relay).or_insert(0) += 1;
            }
        }
        routes.push(route);
    }
    Ok(RouteSet { protocol: ProtocolKind::Lar, routes, k0: None, probes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;

    fn grid(h: u32) -> SubcellGrid {
        SubcellGrid::new(GridParams::new(h, 1000.0).unwrap()).unwrap()
    }

    fn type1_sources(g: &SubcellGrid) -> Vec<SubcellId> {
        g.ring_ids().filter(|id| g.ring(*id) == 3 && g.cluster_color(*id) == 0).collect()
    }

    fn check_route(g: &SubcellGrid, r: &Route, unavailable: &BTreeSet<SubcellId>) {
        for (a, b) in r.links() {
            assert!(g.are_adjacent(a, b));
            assert!(!unavailable.contains(&b));
        }
        let distinct: BTreeSet<_> = r.path.iter().collect();
        assert_eq!(distinct.len(), r.path.len());
        assert_eq!(r.modes.len(), r.hops());
    }

    #[test]
    fn ideal_routes_are_shortest() {
        let g = grid(4);
        let dest = Destinations::base_station();
        let sources = type1_sources(&g);
        assert_eq!(sources.len(), 6);
        let set = ideal_routes(&g, &dest, &sources).unwrap();
        for r in &set.routes {
            assert!(r.is_routed());
            assert_eq!(r.hops(), 3);
        }
        let cfg = ProtocolConfig::new(ProtocolKind::MMdr, 1.0);
        let m = extract_routes(&g, &dest, &ScenarioOverlay::new(sources), &cfg).unwrap();
        assert_eq!(m.routes, set.routes);
    }

    #[test]
    fn surrounded_source_has_no_route() {
        let g = grid(3);
        let dest = Destinations::base_station();
        let far = g.ring_ids().find(|id| g.ring(*id) == 3).unwrap();
        let blocked = ScenarioOverlay::new(vec![far]).with_unavailable(g.neighbors(far));
        for kind in [ProtocolKind::MMdr, ProtocolKind::MLir, ProtocolKind::Lar] {
            let cfg = ProtocolConfig::new(kind, 1.0);
            let set = extract_routes(&g, &dest, &blocked, &cfg).unwrap();
            assert!(!set.routes[0].is_routed(), "{kind}");
        }
    }

    #[test]
    fn mlir_first_hop_uses_common_colour() {
        let g = grid(4);
        let dest = Destinations::base_station();
        let overlay = ScenarioOverlay { k0: Some(3), ..ScenarioOverlay::new(type1_sources(&g)) };
        let set = extract_routes(&g, &dest, &overlay, &ProtocolConfig::new(ProtocolKind::MLir, 1.0)).unwrap();
        assert_eq!(set.k0, Some(3));
        let mut common = 0;
        for r in &set.routes {
            assert!(r.is_routed());
            let closer = g.destination_distance_sq(r.path[1], &dest) < g.destination_distance_sq(r.source, &dest);
            assert!(closer);
            if g.cluster_color(r.path[1]) == 3 {
                assert_eq!(r.modes[0], Mode::Ss1);
                common += 1;
            } else {
                assert_eq!(r.modes[0], Mode::Ss2);
            }
            check_route(&g, r, &overlay.unavailable);
        }
        assert!(common >= 1);
    }

    #[test]
    fn mlir_chooses_smallest_feasible_colour() {
        let g = grid(4);
        let dest = Destinations::base_station();
        let overlay = ScenarioOverlay::new(type1_sources(&g));
        let set = extract_routes(&g, &dest, &overlay, &ProtocolConfig::new(ProtocolKind::MLir, 1.0)).unwrap();
        // colour 0 cannot be a neighbour of a colour-0 source
        assert_eq!(set.k0, Some(1));
    }

    #[test]
    fn no_feasible_colour_without_fallback() {
        let g = grid(4);
        let dest = Destinations::base_station();
        let sources = type1_sources(&g);
        let mut blocked = BTreeSet::new();
        for s in &sources {
            blocked.extend(g.neighbors(*s).into_iter().filter(|n| g.ring(*n) < 3));
        }
        let overlay = ScenarioOverlay::new(sources).with_unavailable(blocked);
        let mut cfg = ProtocolConfig::new(ProtocolKind::MLir, 1.0);
        cfg.allow_fallback = false;
        assert!(matches!(extract_routes(&g, &dest, &overlay, &cfg), Err(RoutingError::NoFeasibleK0 { .. })));
    }

    #[test]
    fn lar_diverts_around_loaded_relay() {
        let g = grid(2);
        let dest = Destinations::base_station();
        let a = g.index_of(2, 0.0).unwrap();
        let b = g.index_of(2, 60.0).unwrap();
        let overlay = ScenarioOverlay::new(vec![a, b]);
        let greedy = extract_routes(&g, &dest, &overlay, &ProtocolConfig::new(ProtocolKind::MMdr, 1.0)).unwrap();
        let lar = lar_route(&g, &dest, &overlay).unwrap();
        assert_eq!(lar.routes[0], greedy.routes[0]);
        let shared = greedy.routes[0].path[1];
        if greedy.routes[1].path.contains(&shared) {
            assert!(!lar.routes[1].path.contains(&shared));
        }
        assert!(lar.routes.iter().all(|r| r.is_routed()));
        let single = lar_route(&g, &dest, &ScenarioOverlay::new(vec![b])).unwrap();
        let single_greedy = extract_routes(&g, &dest, &ScenarioOverlay::new(vec![b]), &ProtocolConfig::new(ProtocolKind::MMdr, 1.0)).unwrap();
        assert_eq!(single.routes, single_greedy.routes);
    }

    #[test]
    fn overlay_validation() {
        let g = grid(2);
        let dest = Destinations::base_station();
        assert!(ScenarioOverlay::new(vec![]).validate(&g, &dest).is_err());
        let s = SubcellId(8);
        assert!(ScenarioOverlay::new(vec![s]).with_unavailable([s]).validate(&g, &dest).is_err());
        assert!(ScenarioOverlay::new(vec![SubcellId::CENTER]).validate(&g, &dest).is_err());
        let bad_k0 = ScenarioOverlay { k0: Some(7), ..ScenarioOverlay::new(vec![s]) };
        assert!(bad_k0.validate(&g, &dest).is_err());
    }
}
