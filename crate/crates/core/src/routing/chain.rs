//! MDR and LIR as absorbing chains over the tessellation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{ProtocolConfig, RoutingError};
use crate::chains::{absorption_statistics, simulate_walks, AbsorbingChain, ChainStatistics, WalkStatistics};
use crate::grid::{Destinations, SubcellGrid, SubcellId};

/// Protocol mode of a transient state. MDR chains only use `Ss2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Simultaneous same-colour relaying.
    Ss1,
    /// Minimum-distance relaying.
    Ss2,
}

/// An absorbing state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sink {
    Ap(SubcellId),
    Bs,
    NoRoute,
}

impl Sink {
    pub fn label(self) -> String {
        match self {
            Sink::Ap(id) => format!("ap{}", id.index()),
            Sink::Bs => "bs".into(),
            Sink::NoRoute => "nr".into(),
        }
    }
}

/// One outgoing transition: to another state or into a sink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transition {
    To(SubcellId, Mode, f64),
    Absorb(Sink, f64),
}

impl Transition {
    pub fn probability(&self) -> f64 {
        match *self {
            Transition::To(_, _, p) | Transition::Absorb(_, p) => p,
        }
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

fn target(dest: &Destinations, id: SubcellId, mode: Mode, p: f64) -> Transition {
    match sink_of(dest, id) {
        Some(s) => Transition::Absorb(s, p),
        None => Transition::To(id, mode, p),
    }
}

fn check_transient(grid: &SubcellGrid, dest: &Destinations, id: SubcellId) -> Result<(), RoutingError> {
    if !grid.contains(id) {
        return Err(RoutingError::Grid(crate::grid::GridError::IndexOutOfRange { index: id.index(), count: grid.len() }));
    }
    if dest.is_destination(id) {
        return Err(RoutingError::NotTransient(id));
    }
    Ok(())
}

/// Geometric relaying row: the n-th ranked neighbour gets `p(1−p)^{n−1}`
/// and the remainder goes to the no-route sink.
pub fn mdr_transition_row(
    grid: &SubcellGrid,
    dest: &Destinations,
    id: SubcellId,
    p: f64,
) -> Result<Vec<Transition>, RoutingError> {
    check_transient(grid, dest, id)?;
    Ok(geometric_row(grid, dest, id, p, Mode::Ss2))
}

fn geometric_row(grid: &SubcellGrid, dest: &Destinations, id: SubcellId, p: f64, mode: Mode) -> Vec<Transition> {
    let mut row = Vec::with_capacity(7);
    let mut miss = 1.0;
    for n in grid.neighbors_ranked(id, dest) {
        row.push(target(dest, n, mode, p * miss));
        miss *= 1.0 - p;
    }
    row.push(Transition::Absorb(Sink::NoRoute, miss));
    row
}

/// Population of the colour class used by the ss1 availability test at `id`.
fn class_population(grid: &SubcellGrid, id: SubcellId) -> usize {
    grid.color_population(grid.cluster_color(id)).max(1)
}

/// Rows of the doubled LIR state space for subcell `id` in `mode`.
pub fn lir_transition_rows(
    grid: &SubcellGrid,
    dest: &Destinations,
    id: SubcellId,
    mode: Mode,
    p: f64,
) -> Result<Vec<Transition>, RoutingError> {
    check_transient(grid, dest, id)?;
    let q = p.powi(class_population(grid, id) as i32);
    let ranked = grid.neighbors_ranked(id, dest);
    let mut miss1 = 1.0;
    let mut p1 = Vec::with_capacity(ranked.len());
    for _ in &ranked {
        p1.push(q * miss1);
        miss1 *= 1.0 - q;
    }
    // probability that no ss1 relay is available
    let p0 = miss1;
    let mut row = Vec::with_capacity(2 * ranked.len() + 1);
    match mode {
        Mode::Ss1 => {
            for (n, &nb) in ranked.iter().enumerate() {
                row.push(target(dest, nb, Mode::Ss1, p1[n] * (1.0 - p0)));
                row.push(target(dest, nb, Mode::Ss2, p1[n] * p0));
            }
            row.push(Transition::Absorb(Sink::NoRoute, p0));
        }
        Mode::Ss2 => {
            let mut miss2 = 1.0;
            for &nb in &ranked {
                let pn = p * miss2;
                row.push(target(dest, nb, Mode::Ss2, pn * p0));
                row.push(target(dest, nb, Mode::Ss1, pn * (1.0 - p0)));
                miss2 *= 1.0 - p;
            }
            row.push(Transition::Absorb(Sink::NoRoute, miss2));
        }
    }
    Ok(row)
}

/// An absorbing chain labelled with subcells, modes and sinks.
#[derive(Debug, Clone)]
pub struct RoutingChain {
    pub chain: AbsorbingChain,
    /// Label of each transient state, in chain order.
    pub states: Vec<(SubcellId, Mode)>,
    /// Label of each absorbing state, in chain order: access points, BS, no-route.
    pub sinks: Vec<Sink>,
    /// Start state of each non-destination subcell.
    start: BTreeMap<SubcellId, usize>,
}

impl RoutingChain {
    /// Transient-state position where a message from `id` starts.
    pub fn start_state(&self, id: SubcellId) -> Option<usize> {
        self.start.get(&id).copied()
    }

    /// Origin subcells in index order.
    pub fn origins(&self) -> impl Iterator<Item = SubcellId> + '_ {
        self.start.keys().copied()
    }

    pub fn sink_position(&self, sink: Sink) -> Option<usize> {
        self.sinks.iter().position(|s| *s == sink)
    }

    /// Initial distribution uniform over ring-subcell origins (the centre,
    /// when transient, is not a user position).
    pub fn uniform_origins(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.states.len()];
        let users: Vec<usize> = self
            .start
            .iter()
            .filter(|(id, _)| **id != SubcellId::CENTER)
            .map(|(_, s)| *s)
            .collect();
        let w = 1.0 / users.len().max(1) as f64;
        for s in users {
            f[s] = w;
        }
        f
    }

    pub fn statistics(&self) -> Result<ChainStatistics, RoutingError> {
        Ok(absorption_statistics(&self.chain, &self.uniform_origins())?)
    }

    pub fn simulate(&self, n_walks: usize, seed: u64) -> Result<WalkStatistics, RoutingError> {
        Ok(simulate_walks(&self.chain, &self.uniform_origins(), n_walks, seed)?)
    }
}

fn assemble(
    grid: &SubcellGrid,
    dest: &Destinations,
    states: Vec<(SubcellId, Mode)>,
    dwell: Vec<f64>,
    rows: impl Fn(SubcellId, Mode) -> Result<Vec<Transition>, RoutingError>,
) -> Result<RoutingChain, RoutingError> {
    dest.validate(grid)?;
    let mut sinks: Vec<Sink> = dest.aps.iter().map(|a| Sink::Ap(*a)).collect();
    if dest.bs.is_some() {
        sinks.push(Sink::Bs);
    }
    sinks.push(Sink::NoRoute);
    let t = states.len();
    let n = t + sinks.len();
    let index: BTreeMap<(SubcellId, Mode), usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut m = DMatrix::zeros(n, n);
    for (i, &(id, mode)) in states.iter().enumerate() {
        for tr in rows(id, mode)? {
            let col = match tr {
                Transition::To(to, to_mode, _) => index[&(to, to_mode)],
                Transition::Absorb(s, _) => t + sinks.iter().position(|x| *x == s).expect("known sink"),
            };
            m[(i, col)] += tr.probability();
        }
    }
    for k in t..n {
        m[(k, k)] = 1.0;
    }
    let chain = AbsorbingChain::new(m, (t..n).collect(), dwell)?;
    let start_mode = if states.iter().any(|(_, m)| *m == Mode::Ss1) { Mode::Ss1 } else { Mode::Ss2 };
    let start = states
        .iter()
        .enumerate()
        .filter(|(_, (_, mode))| *mode == start_mode)
        .map(|(i, (id, _))| (*id, i))
        .collect();
    Ok(RoutingChain { chain, states, sinks, start })
}

/// MDR chain with uniform dwell per hop.
pub fn build_mdr_chain(
    grid: &SubcellGrid,
    dest: &Destinations,
    p: f64,
    dwell: f64,
) -> Result<RoutingChain, RoutingError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RoutingError::InvalidConfig(format!("p = {p} outside [0, 1]")));
    }
    let states: Vec<(SubcellId, Mode)> = grid
        .ids()
        .filter(|id| !dest.is_destination(*id))
        .map(|id| (id, Mode::Ss2))
        .collect();
    let dwell = vec![dwell; states.len()];
    assemble(grid, dest, states, dwell, |id, _| mdr_transition_row(grid, dest, id, p))
}

/// LIR chain over the doubled state space; messages start in ss1.
pub fn build_lir_chain(
    grid: &SubcellGrid,
    dest: &Destinations,
    config: &ProtocolConfig,
) -> Result<RoutingChain, RoutingError> {
    config.validate()?;
    let mut states = Vec::new();
    let mut dwell = Vec::new();
    for id in grid.ids().filter(|id| !dest.is_destination(*id)) {
        states.push((id, Mode::Ss1));
        dwell.push(config.dwell_lir);
        states.push((id, Mode::Ss2));
        dwell.push(config.dwell_mdr);
    }
    assemble(grid, dest, states, dwell, |id, mode| lir_transition_rows(grid, dest, id, mode, config.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;
    use crate::routing::ProtocolKind;
    use approx::assert_relative_eq;

    fn grid(h: u32) -> SubcellGrid {
        SubcellGrid::new(GridParams::new(h, 1000.0).unwrap()).unwrap()
    }

    fn sum(row: &[Transition]) -> f64 {
        row.iter().map(|t| t.probability()).sum()
    }

    #[test]
    fn mdr_row_examples() {
        let g = grid(4);
        let dest = Destinations::base_station();
        let inner = SubcellId(1);
        let row = mdr_transition_row(&g, &dest, inner, 1.0).unwrap();
        assert_eq!(row[0], Transition::Absorb(Sink::Bs, 1.0));
        assert!(row[1..].iter().all(|t| t.probability() == 0.0));

        let row = mdr_transition_row(&g, &dest, inner, 0.8).unwrap();
        let probs: Vec<f64> = row.iter().map(|t| t.probability()).collect();
        let expected = [0.8, 0.16, 0.032, 0.0064, 0.00128, 0.000256, 0.2f64.powi(6)];
        for (a, b) in probs.iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }

        let corner = g.ring_ids().find(|id| g.ring(*id) == 4 && g.neighbors(*id).len() == 4).unwrap();
        let row = mdr_transition_row(&g, &dest, corner, 0.5).unwrap();
        assert_relative_eq!(row.last().unwrap().probability(), 0.0625);
        assert!(mdr_transition_row(&g, &dest, SubcellId::CENTER, 0.5).is_err());
    }

    #[test]
    fn rows_are_stochastic() {
        for h in 1..=4 {
            let g = grid(h);
            let dest = Destinations::base_station();
            for k in 0..=10 {
                let p = k as f64 / 10.0;
                for id in g.ring_ids() {
                    assert!((sum(&mdr_transition_row(&g, &dest, id, p).unwrap()) - 1.0).abs() < 1e-12);
                    for mode in [Mode::Ss1, Mode::Ss2] {
                        assert!((sum(&lir_transition_rows(&g, &dest, id, mode, p).unwrap()) - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn lir_ss1_probability() {
        let q = 0.9f64.powi(8);
        assert!((q - 0.4305).abs() < 1e-4);
        let g = grid(4);
        let dest = Destinations::base_station();
        let id = SubcellId(1);
        let n = g.color_population(g.cluster_color(id));
        assert_eq!(n, 9);
        let row = lir_transition_rows(&g, &dest, id, Mode::Ss1, 0.9).unwrap();
        let q = 0.9f64.powi(9);
        let p0 = (1.0 - q).powi(6);
        assert_relative_eq!(row[0].probability(), q * (1.0 - p0), max_relative = 1e-12);
        assert_relative_eq!(row[1].probability(), q * p0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_availability() {
        let g = grid(1);
        let dest = Destinations::base_station();
        let c = build_mdr_chain(&g, &dest, 1.0, 1.0).unwrap();
        let s = c.statistics().unwrap();
        assert!(s.tau.iter().all(|t| *t == 1.0));
        let c = build_mdr_chain(&g, &dest, 0.0, 1.0).unwrap();
        let s = c.statistics().unwrap();
        let nr = c.sink_position(Sink::NoRoute).unwrap();
        assert!(s.b.iter().all(|row| row[nr] == 1.0));
        let mut cfg = ProtocolConfig::new(ProtocolKind::Lir, 0.0);
        let lir = build_lir_chain(&grid(2), &dest, &cfg).unwrap();
        let s = lir.statistics().unwrap();
        for id in lir.origins() {
            assert_eq!(s.tau[lir.start_state(id).unwrap()], cfg.dwell_lir);
        }
        cfg.p = 1.0;
        let lir = build_lir_chain(&grid(2), &dest, &cfg).unwrap();
        let s = lir.statistics().unwrap();
        assert!(s.var_tau.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn mdr_deterministic_at_full_availability() {
        let g = grid(4);
        let ap = g.snap(3, 250.0).unwrap().id;
        let dest = Destinations::base_station().with_ap(&g, ap).unwrap();
        let c = build_mdr_chain(&g, &dest, 1.0, 7.0).unwrap();
        let (q, r) = c.chain.canonical_form();
        for i in 0..q.nrows() {
            let entries: Vec<f64> = q.row(i).iter().chain(r.row(i).iter()).copied().filter(|v| *v > 0.0).collect();
            assert_eq!(entries, vec![1.0]);
        }
        let s = c.statistics().unwrap();
        for id in g.ring_ids().filter(|id| g.ring(*id) == 1) {
            assert_eq!(s.tau[c.start_state(id).unwrap()], 7.0);
        }
    }

    #[test]
    fn lir_ratio_at_full_availability() {
        let g = grid(4);
        let dest = Destinations::base_station();
        let mdr = build_mdr_chain(&g, &dest, 1.0, 7.0).unwrap().statistics().unwrap();
        let cfg = ProtocolConfig::new(ProtocolKind::Lir, 1.0);
        let lir_chain = build_lir_chain(&g, &dest, &cfg).unwrap();
        let lir = lir_chain.statistics().unwrap();
        let mdr_chain = build_mdr_chain(&g, &dest, 1.0, 7.0).unwrap();
        for id in g.ring_ids() {
            let a = mdr.tau[mdr_chain.start_state(id).unwrap()];
            let b = lir.tau[lir_chain.start_state(id).unwrap()];
            assert_relative_eq!(a / b, 7.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn lir_delay_between_bounds() {
        let g = grid(3);
        let dest = Destinations::base_station();
        for p in [0.3, 0.6, 0.9] {
            let mut unit = ProtocolConfig::new(ProtocolKind::Lir, p);
            unit.dwell_mdr = 1.0;
            let hops = build_lir_chain(&g, &dest, &unit).unwrap().statistics().unwrap();
            let mixed = build_lir_chain(&g, &dest, &ProtocolConfig::new(ProtocolKind::Lir, p)).unwrap();
            let s = mixed.statistics().unwrap();
            for id in mixed.origins() {
                let i = mixed.start_state(id).unwrap();
                assert!(s.tau[i] >= hops.tau[i] - 1e-9);
                assert!(s.tau[i] <= 7.0 * hops.tau[i] + 1e-9);
            }
        }
    }

    #[test]
    fn ap_only_destination_keeps_centre_transient() {
        let g = grid(2);
        let ap = SubcellId(3);
        let dest = Destinations::access_point(&g, ap).unwrap();
        let c = build_mdr_chain(&g, &dest, 0.9, 1.0).unwrap();
        assert!(c.start_state(SubcellId::CENTER).is_some());
        assert_eq!(c.sinks, vec![Sink::Ap(ap), Sink::NoRoute]);
        let f = c.uniform_origins();
        assert_eq!(f[c.start_state(SubcellId::CENTER).unwrap()], 0.0);
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
