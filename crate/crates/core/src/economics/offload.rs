//! Traffic dynamics and the MNO/SSO utility offsets of offloading.
//!
//! Users sit at subcells. BS users relay to the base station; WLAN users
//! (incumbents, WLAN arrivals and offloaded users) relay to the access point.
//! A hop of an AP-bound route is a WLAN link when its transmitter lies in the
//! AP's coverage, otherwise a macro link. The two networks use different
//! channels and are scheduled independently.

use std::collections::{BTreeMap, BTreeSet};

use super::utility::{route_cost, scheduled_link_capacity, user_utility};
use super::{EconError, EconParams};
use crate::grid::{Destinations, SubcellGrid, SubcellId};
use crate::radio::RadioParams;
use crate::routing::schedule::{schedule_links, Link, Schedule};
use crate::routing::{extract_routes, ProtocolConfig, Route, ScenarioOverlay};

/// User sets before an offloading decision.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrafficState {
    pub n_bs: BTreeSet<SubcellId>,
    pub n_wlan: BTreeSet<SubcellId>,
    pub n_lambda_bs: BTreeSet<SubcellId>,
    pub n_lambda_wlan: BTreeSet<SubcellId>,
    pub n_mu_bs: BTreeSet<SubcellId>,
    pub n_mu_wlan: BTreeSet<SubcellId>,
    /// Users handed off from the macrocell to the WLAN.
    pub n_mu: BTreeSet<SubcellId>,
}

impl TrafficState {
    pub fn validate(&self) -> Result<(), EconError> {
        if !self.n_mu.is_subset(&self.n_bs) {
            return Err(EconError::InvalidTraffic("offload set is not a subset of the BS users".into()));
        }
        if !self.n_mu_bs.is_subset(&self.n_bs) {
            return Err(EconError::InvalidTraffic("BS departures are not current BS users".into()));
        }
        if !self.n_mu_wlan.is_subset(&self.n_wlan) {
            return Err(EconError::InvalidTraffic("WLAN departures are not current WLAN users".into()));
        }
        Ok(())
    }

    pub fn with_offload(&self, n_mu: BTreeSet<SubcellId>) -> Self {
        TrafficState { n_mu, ..self.clone() }
    }
}

/// `(N_bs⁺, N_wlan⁺)`.
pub fn apply_traffic_step(state: &TrafficState) -> Result<(BTreeSet<SubcellId>, BTreeSet<SubcellId>), EconError> {
    state.validate()?;
    let bs: BTreeSet<SubcellId> = state
        .n_bs
        .union(&state.n_lambda_bs)
        .filter(|u| !state.n_mu_bs.contains(u) && !state.n_mu.contains(u))
        .copied()
        .collect();
    let mut wlan: BTreeSet<SubcellId> = state
        .n_wlan
        .union(&state.n_lambda_wlan)
        .filter(|u| !state.n_mu_wlan.contains(u))
        .copied()
        .collect();
    wlan.extend(state.n_mu.iter().copied());
    Ok((bs, wlan))
}

/// Anything that can report `(ΔU, ΔU₁)` at a price for an offload set.
pub trait OffsetEvaluator {
    fn offsets(&self, price: f64, n_mu: &BTreeSet<SubcellId>) -> Result<(f64, f64), EconError>;
}

impl<F> OffsetEvaluator for F
where
    F: Fn(f64, &BTreeSet<SubcellId>) -> Result<(f64, f64), EconError>,
{
    fn offsets(&self, price: f64, n_mu: &BTreeSet<SubcellId>) -> Result<(f64, f64), EconError> {
        self(price, n_mu)
    }
}

/// Per-user outcome in one network snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotUser {
    pub user: SubcellId,
    pub route: Route,
    pub capacity: f64,
    pub delay: f64,
    pub cost: f64,
    /// `C/(D·cost)`; zero for unrouted users.
    pub merit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub users: BTreeMap<SubcellId, SnapshotUser>,
    pub macro_schedule: Schedule,
    pub wlan_schedule: Schedule,
}

impl Snapshot {
    pub fn merit_sum<'a>(&self, users: impl IntoIterator<Item = &'a SubcellId>) -> f64 {
        users.into_iter().filter_map(|u| self.users.get(u)).map(|u| u.merit).sum()
    }
}

/// The utility offsets at χ = 0 together with the offloaded merit, so that
/// `ΔU(χ) = mno_fixed − χ·S` and `ΔU₁(χ) = sso_fixed + χ·S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetComponents {
    /// `Σ_{N_bs⁺} u'` (merit, before revenue).
    pub retained_after: f64,
    pub mno_before: f64,
    /// `S = Σ_{N_μ} s`.
    pub offloaded: f64,
    /// `Σ_{N_wlan⁺ \ N_μ} u'`.
    pub incumbents_after: f64,
    pub sso_before: f64,
    pub rho: f64,
    pub rho1: f64,
}

impl OffsetComponents {
    pub fn delta_u(&self, price: f64) -> f64 {
        self.rho * self.retained_after + (self.rho - price) * self.offloaded - self.rho * self.mno_before
    }

    pub fn delta_u1(&self, price: f64) -> f64 {
        self.rho1 * self.incumbents_after + price * self.offloaded - self.rho1 * self.sso_before
    }

    /// Exact crossing `ΔU = ΔU₁`, if the offloaded merit is positive.
    pub fn equilibrium(&self) -> Option<f64> {
        (self.offloaded > 0.0).then(|| (self.delta_u(0.0) - self.delta_u1(0.0)) / (2.0 * self.offloaded))
    }
}

/// A macrocell with one WLAN access point.
#[derive(Debug, Clone)]
pub struct OffloadModel {
    pub grid: SubcellGrid,
    pub ap: SubcellId,
    pub coverage: BTreeSet<SubcellId>,
    pub radio: RadioParams,
    pub econ: EconParams,
    pub macro_protocol: ProtocolConfig,
    pub wlan_protocol: ProtocolConfig,
    pub unavailable: BTreeSet<SubcellId>,
}

impl OffloadModel {
    pub fn new(
        grid: SubcellGrid,
        ap: SubcellId,
        radio: RadioParams,
        econ: EconParams,
        protocol: ProtocolConfig,
    ) -> Result<Self, EconError> {
        let dest = Destinations::access_point(&grid, ap)?;
        let coverage = dest.coverage[&ap].clone();
        econ.validate()?;
        radio.validate()?;
        protocol.validate()?;
        Ok(OffloadModel {
            grid,
            ap,
            coverage,
            radio,
            econ,
            macro_protocol: protocol.clone(),
            wlan_protocol: protocol,
            unavailable: BTreeSet::new(),
        })
    }

    fn routes_to(&self, dest: &Destinations, users: &BTreeSet<SubcellId>) -> Result<Vec<Route>, EconError> {
        let sources: Vec<SubcellId> = users.iter().copied().filter(|u| !dest.is_destination(*u)).collect();
        let mut out = Vec::new();
        if !sources.is_empty() {
            let overlay = ScenarioOverlay::new(sources).with_unavailable(
                self.unavailable.iter().copied().filter(|u| !users.contains(u) && !dest.is_destination(*u)),
            );
            out = extract_routes(&self.grid, dest, &overlay, &self.macro_protocol)?.routes;
        }
        Ok(out)
    }

    fn is_wlan_link(&self, ap_bound: bool, tx: SubcellId) -> bool {
        ap_bound && self.coverage.contains(&tx)
    }

    /// Routes, schedules and per-user merit for the given user sets.
    pub fn snapshot(&self, bs_users: &BTreeSet<SubcellId>, wlan_users: &BTreeSet<SubcellId>) -> Result<Snapshot, EconError> {
        if let Some(u) = bs_users.intersection(wlan_users).next() {
            return Err(EconError::InvalidTraffic(format!("user {u} attached to both networks")));
        }
        let bs_routes = self.routes_to(&Destinations::base_station(), bs_users)?;
        let ap_dest = Destinations::access_point(&self.grid, self.ap)?;
        let ap_routes = self.routes_to(&ap_dest, wlan_users)?;

        let mut macro_links = Vec::new();
        let mut wlan_links = Vec::new();
        let push = |list: &mut Vec<Link>, l: Link| {
            if !list.contains(&l) {
                list.push(l);
            }
        };
        for (routes, ap_bound) in [(&bs_routes, false), (&ap_routes, true)] {
            for r in routes.iter().filter(|r| r.is_routed()) {
                for (tx, rx) in r.links() {
                    if self.is_wlan_link(ap_bound, tx) {
                        push(&mut wlan_links, Link::new(tx, rx));
                    } else {
                        push(&mut macro_links, Link::new(tx, rx));
                    }
                }
            }
        }
        let macro_schedule = schedule_links(&self.grid, &macro_links, &self.macro_protocol);
        let wlan_schedule = schedule_links(&self.grid, &wlan_links, &self.wlan_protocol);

        let mut users = BTreeMap::new();
        for (routes, ap_bound) in [(bs_routes, false), (ap_routes, true)] {
            for r in routes {
                let user = r.source;
                if !r.is_routed() {
                    let cost = route_cost(self.radio.power, 0.0);
                    users.insert(user, SnapshotUser { user, route: r, capacity: 0.0, delay: f64::INFINITY, cost, merit: 0.0 });
                    continue;
                }
                let mut capacity = f64::INFINITY;
                let mut delay = 0.0;
                for (tx, rx) in r.links() {
                    let sched = if self.is_wlan_link(ap_bound, tx) { &wlan_schedule } else { &macro_schedule };
                    capacity = capacity.min(scheduled_link_capacity(&self.grid, Link::new(tx, rx), sched, &self.radio)?);
                    delay += sched.hop_wait();
                }
                let cost = route_cost(self.radio.power, r.hops() as f64);
                let merit = user_utility(1.0, capacity, delay, cost)?;
                users.insert(user, SnapshotUser { user, route: r, capacity, delay, cost, merit });
            }
        }
        // users sitting on their own destination are served directly
        for u in bs_users.iter().chain(wlan_users) {
            users.entry(*u).or_insert_with(|| SnapshotUser {
                user: *u,
                route: Route { source: *u, path: vec![*u], modes: Vec::new(), sink: None },
                capacity: 0.0,
                delay: f64::INFINITY,
                cost: self.radio.power,
                merit: 0.0,
            });
        }
        Ok(Snapshot { users, macro_schedule, wlan_schedule })
    }

    /// Offset components of a traffic step.
    pub fn components(&self, state: &TrafficState) -> Result<OffsetComponents, EconError> {
        let (bs_plus, wlan_plus) = apply_traffic_step(state)?;
        let before = self.snapshot(&state.n_bs, &state.n_wlan)?;
        let after = self.snapshot(&bs_plus, &wlan_plus)?;
        let incumbents: Vec<SubcellId> = wlan_plus.difference(&state.n_mu).copied().collect();
        Ok(OffsetComponents {
            retained_after: after.merit_sum(&bs_plus),
            mno_before: before.merit_sum(&state.n_bs),
            offloaded: after.merit_sum(&state.n_mu),
            incumbents_after: after.merit_sum(&incumbents),
            sso_before: before.merit_sum(&state.n_wlan),
            rho: self.econ.rho,
            rho1: self.econ.rho1,
        })
    }

    /// `ΔU = U' − U` at price χ.
    pub fn mno_offset(&self, state: &TrafficState, price: f64) -> Result<f64, EconError> {
        check_price(price, &self.econ)?;
        Ok(self.components(state)?.delta_u(price))
    }

    /// `ΔU₁ = U₁' − U₁` at price χ.
    pub fn sso_offset(&self, state: &TrafficState, price: f64) -> Result<f64, EconError> {
        check_price(price, &self.econ)?;
        Ok(self.components(state)?.delta_u1(price))
    }

    /// Evaluator over offload sets for a fixed base traffic state.
    pub fn evaluator<'a>(&'a self, base: &'a TrafficState) -> impl OffsetEvaluator + 'a {
        move |price: f64, n_mu: &BTreeSet<SubcellId>| -> Result<(f64, f64), EconError> {
            let c = self.components(&base.with_offload(n_mu.clone()))?;
            Ok((c.delta_u(price), c.delta_u1(price)))
        }
    }
}

fn check_price(price: f64, econ: &EconParams) -> Result<(), EconError> {
    if (0.0..=econ.price_cap).contains(&price) {
        Ok(())
    } else {
        Err(EconError::PriceOutOfBounds(price))
    }
}
