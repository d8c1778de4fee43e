//! Slot assignment for concrete route sets.

use std::collections::{BTreeMap, BTreeSet};

use super::{ProtocolConfig, ProtocolKind, RouteSet};
use crate::grid::{SubcellGrid, SubcellId};

/// A directed relaying link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub tx: SubcellId,
    pub rx: SubcellId,
}

impl Link {
    pub fn new(tx: SubcellId, rx: SubcellId) -> Self {
        Link { tx, rx }
    }
}

/// How slots were assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discipline {
    /// One slot per cluster colour of the transmitter; cycle `K`.
    RoundRobin,
    /// Greedy conflict-graph colouring.
    Conflict,
    /// All links whose transmitters share a colour go together; one slot per
    /// colour in use.
    ColorGroups,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub discipline: Discipline,
    pub slots: Vec<BTreeSet<Link>>,
    pub cycle_length: usize,
    slot_of: BTreeMap<Link, usize>,
}

impl Schedule {
    fn from_assignment(discipline: Discipline, assignment: BTreeMap<Link, usize>, cycle_length: usize) -> Self {
        let mut slots = vec![BTreeSet::new(); cycle_length];
        for (l, s) in &assignment {
            slots[*s].insert(*l);
        }
        Schedule { discipline, slots, cycle_length, slot_of: assignment }
    }

    pub fn empty(discipline: Discipline) -> Self {
        Schedule { discipline, slots: Vec::new(), cycle_length: 0, slot_of: BTreeMap::new() }
    }

    pub fn slot_of(&self, link: Link) -> Option<usize> {
        self.slot_of.get(&link).copied()
    }

    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.slot_of.keys().copied()
    }

    /// Transmitters active in the same slot as `link`, other than its own,
    /// and excluding its receiver.
    pub fn co_slot_transmitters(&self, link: Link) -> BTreeSet<SubcellId> {
        match self.slot_of(link) {
            Some(s) => self.slots[s]
                .iter()
                .map(|l| l.tx)
                .filter(|tx| *tx != link.tx && *tx != link.rx)
                .collect(),
            None => BTreeSet::new(),
        }
    }

    /// Slots a message waits per hop.
    pub fn hop_wait(&self) -> f64 {
        match self.discipline {
            Discipline::ColorGroups => 1.0,
            _ => self.cycle_length as f64,
        }
    }
}

/// Distinct links of all routed paths, in first-use order.
pub fn route_links(routes: &RouteSet) -> Vec<Link> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in routes.routed() {
        for (tx, rx) in r.links() {
            let l = Link::new(tx, rx);
            if seen.insert(l) {
                out.push(l);
            }
        }
    }
    out
}

/// Whether two links may not share a slot.
pub fn conflicts(grid: &SubcellGrid, a: Link, b: Link, threshold: f64) -> bool {
    if a.tx == b.tx || a.tx == b.rx || a.rx == b.tx || a.rx == b.rx {
        return true;
    }
    let limit = threshold * threshold + 1e-9;
    (grid.distance_sq(b.tx, a.rx) as f64) <= limit || (grid.distance_sq(a.tx, b.rx) as f64) <= limit
}

pub fn round_robin(grid: &SubcellGrid, links: &[Link]) -> Schedule {
    let k = grid.params().cluster as usize;
    let assignment = links.iter().map(|l| (*l, grid.cluster_color(l.tx) as usize)).collect();
    Schedule::from_assignment(Discipline::RoundRobin, assignment, k)
}

pub fn color_groups(grid: &SubcellGrid, links: &[Link]) -> Schedule {
    let colors: BTreeSet<u32> = links.iter().map(|l| grid.cluster_color(l.tx)).collect();
    let order: BTreeMap<u32, usize> = colors.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let assignment = links.iter().map(|l| (*l, order[&grid.cluster_color(l.tx)])).collect();
    Schedule::from_assignment(Discipline::ColorGroups, assignment, colors.len())
}

/// Greedy first-fit colouring of the conflict graph; falls back to round
/// robin if more than `K` slots would be needed.
pub fn conflict_coloring(grid: &SubcellGrid, links: &[Link], threshold: f64) -> Schedule {
    let mut slots: Vec<Vec<Link>> = Vec::new();
    let mut assignment = BTreeMap::new();
    for &l in links {
        let slot = slots
            .iter()
            .position(|members| members.iter().all(|m| !conflicts(grid, l, *m, threshold)))
            .unwrap_or_else(|| {
                slots.push(Vec::new());
                slots.len() - 1
            });
        slots[slot].push(l);
        assignment.insert(l, slot);
    }
    if slots.len() > grid.params().cluster as usize {
        return round_robin(grid, links);
    }
    Schedule::from_assignment(Discipline::Conflict, assignment, slots.len())
}

/// Schedule for a set of links under a protocol.
pub fn schedule_links(grid: &SubcellGrid, links: &[Link], config: &ProtocolConfig) -> Schedule {
    match config.kind {
        ProtocolKind::Mdr | ProtocolKind::Lar => round_robin(grid, links),
        ProtocolKind::MMdr => conflict_coloring(grid, links, config.interference_threshold),
        ProtocolKind::Lir | ProtocolKind::MLir => color_groups(grid, links),
    }
}

/// Schedule every link of a route set under the protocol's discipline.
pub fn schedule(grid: &SubcellGrid, routes: &RouteSet, config: &ProtocolConfig) -> Schedule {
    schedule_links(grid, &route_links(routes), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Destinations, GridParams};
    use crate::routing::{extract_routes, ScenarioOverlay};

    fn grid(h: u32) -> SubcellGrid {
        SubcellGrid::new(GridParams::new(h, 1000.0).unwrap()).unwrap()
    }

    fn routes(g: &SubcellGrid, sources: Vec<SubcellId>, kind: ProtocolKind) -> RouteSet {
        extract_routes(g, &Destinations::base_station(), &ScenarioOverlay::new(sources), &ProtocolConfig::new(kind, 1.0))
            .unwrap()
    }

    #[test]
    fn single_route_mmdr_one_slot_per_hop_group() {
        let g = grid(4);
        let s = g.index_of(1, 30.0).unwrap();
        let set = routes(&g, vec![s], ProtocolKind::MMdr);
        let sched = schedule(&g, &set, &ProtocolConfig::new(ProtocolKind::MMdr, 1.0));
        assert_eq!(sched.cycle_length, 1);
    }

    #[test]
    fn round_robin_cycle_is_k() {
        let g = grid(4);
        let set = routes(&g, vec![SubcellId(20), SubcellId(40)], ProtocolKind::Mdr);
        let sched = schedule(&g, &set, &ProtocolConfig::new(ProtocolKind::Mdr, 1.0));
        assert_eq!(sched.cycle_length, 7);
        assert_eq!(sched.hop_wait(), 7.0);
        for l in sched.links() {
            assert_eq!(sched.slot_of(l), Some(g.cluster_color(l.tx) as usize));
        }
    }

    #[test]
    fn distant_parallel_links_share_a_slot() {
        let g = grid(4);
        let a = Link::new(g.index_of(1, 30.0).unwrap(), SubcellId::CENTER);
        let far_tx = g.ring_ids().find(|id| g.ring(*id) == 4).unwrap();
        let far_rx = g.neighbors_ranked(far_tx, &Destinations::base_station())[0];
        let b = Link::new(far_tx, far_rx);
        assert!(!conflicts(&g, a, b, 1.0));
        let sched = conflict_coloring(&g, &[a, b], 1.0);
        assert_eq!(sched.cycle_length, 1);
    }

    #[test]
    fn conflict_slots_respect_threshold() {
        let g = grid(4);
        let sources: Vec<SubcellId> = g.ring_ids().filter(|id| g.ring(*id) >= 3).step_by(5).collect();
        let set = routes(&g, sources, ProtocolKind::MMdr);
        let sched = schedule(&g, &set, &ProtocolConfig::new(ProtocolKind::MMdr, 1.0));
        assert!(sched.cycle_length <= 7);
        if sched.discipline == Discipline::Conflict {
            for slot in &sched.slots {
                let v: Vec<Link> = slot.iter().copied().collect();
                for i in 0..v.len() {
                    for j in i + 1..v.len() {
                        assert!(!conflicts(&g, v[i], v[j], 1.0));
                    }
                }
            }
        }
        let covered: BTreeSet<Link> = route_links(&set).into_iter().collect();
        let scheduled: BTreeSet<Link> = sched.links().collect();
        assert_eq!(covered, scheduled);
    }

    #[test]
    fn color_groups_use_distinct_transmitter_colours() {
        let g = grid(4);
        let sources: Vec<SubcellId> = g.ring_ids().filter(|id| g.ring(*id) == 3 && g.cluster_color(*id) == 0).collect();
        let set = routes(&g, sources, ProtocolKind::MLir);
        let sched = schedule(&g, &set, &ProtocolConfig::new(ProtocolKind::MLir, 1.0));
        let colours: BTreeSet<u32> = route_links(&set).iter().map(|l| g.cluster_color(l.tx)).collect();
        assert_eq!(sched.cycle_length, colours.len());
        assert_eq!(sched.hop_wait(), 1.0);
        for l in sched.links() {
            assert!(!sched.co_slot_transmitters(l).contains(&l.tx));
        }
    }
}
