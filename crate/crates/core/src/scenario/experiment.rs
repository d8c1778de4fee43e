//! Experiment commands over a loaded scenario.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::Scenario;
use super::output::{ResultTable, Value};
use super::ScenarioError;
use crate::chains::{ChainStatistics, WalkStatistics};
use crate::compression::aggregate_availability;
use crate::economics::negotiation::price_sweep;
use crate::economics::tessellation::expected_mdr_capacity;
use crate::economics::utility::network_capacity_throughput;
use crate::economics::{negotiate, optimize_tessellation, EconError, NegotiationMode, OffsetEvaluator, Verdict};
use crate::grid::SubcellId;
use crate::routing::chain::{build_lir_chain, build_mdr_chain, RoutingChain};
use crate::routing::{extract_routes, schedule, ProtocolConfig, ProtocolKind, RouteSet, ScenarioOverlay};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Utility surface over rings × power.
    Tessellate,
    /// Per-subcell delay, variance and absorption probabilities.
    Routes,
    /// Capacity and throughput per overlay, plus capacity against availability.
    Capacity,
    /// Offloading price negotiation.
    Negotiate,
    /// Analytic chain statistics against simulated walks.
    Verify,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Command::Tessellate, Command::Routes, Command::Capacity, Command::Negotiate, Command::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Command::Tessellate => "tessellate",
            Command::Routes => "routes",
            Command::Capacity => "capacity",
            Command::Negotiate => "negotiate",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Command-line overrides of the scenario's experiment settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub walks: Option<usize>,
}

pub fn run_experiment(scenario: &Scenario, command: Command, opts: &RunOptions) -> Result<Vec<ResultTable>, ScenarioError> {
    let ctx = |e: ScenarioError| e.context(format!("{command} on {}", scenario.name));
    match command {
        Command::Tessellate => tessellate(scenario),
        Command::Routes => routes(scenario),
        Command::Capacity => capacity(scenario),
        Command::Negotiate => negotiation(scenario),
        Command::Verify => verify(scenario, opts),
    }
    .map_err(ctx)
}

pub fn tessellate(s: &Scenario) -> Result<Vec<ResultTable>, ScenarioError> {
    let x = &s.experiment;
    let surface =
        optimize_tessellation(&x.rings, &x.powers, s.grid.params().radius, &s.availability, &s.radio, &s.econ)?;
    let mut table =
        ResultTable::new("tessellation", &["rings", "power", "p", "utility", "feasible", "min_power"]).series_by("power");
    for pt in &surface.points {
        table.push(vec![
            pt.rings.into(),
            pt.power.into(),
            pt.p.into(),
            pt.utility.into(),
            pt.feasible.into(),
            pt.min_power.into(),
        ]);
    }
    let mut best = ResultTable::new("tessellation_argmax", &["power", "rings", "utility"]);
    for &power in &x.powers {
        if let Some(h) = surface.argmax_rings(power) {
            let u = surface.utility(h, power).unwrap_or(f64::NAN);
            best.push(vec![power.into(), h.into(), u.into()]);
        }
    }
    Ok(vec![table, best])
}

/// Chain for a probabilistic protocol at availability `p`.
pub fn routing_chain(s: &Scenario, kind: ProtocolKind, p: f64) -> Result<RoutingChain, ScenarioError> {
    let cfg = ProtocolConfig { kind, p, ..s.protocol.clone() };
    Ok(match kind {
        ProtocolKind::Mdr => build_mdr_chain(&s.grid, &s.destinations, p, cfg.dwell_mdr)?,
        ProtocolKind::Lir => build_lir_chain(&s.grid, &s.destinations, &cfg)?,
        other => {
            return Err(ScenarioError::Invalid {
                field: "experiment.protocols".into(),
                message: format!("{other} has no chain model; use mdr or lir"),
            })
        }
    })
}

fn sink_columns(chain: &RoutingChain, prefix: &str) -> Vec<String> {
    chain.sinks.iter().map(|k| format!("{prefix}{}", k.label())).collect()
}

pub fn routes(s: &Scenario) -> Result<Vec<ResultTable>, ScenarioError> {
    let x = &s.experiment;
    let jobs: Vec<(ProtocolKind, f64)> =
        x.protocols.iter().flat_map(|k| x.p_values.iter().map(move |p| (*k, *p))).collect();
    let results: Vec<(ProtocolKind, f64, RoutingChain, ChainStatistics)> = jobs
        .par_iter()
        .map(|&(k, p)| {
            let chain = routing_chain(s, k, p)?;
            let stats = chain.statistics()?;
            Ok((k, p, chain, stats))
        })
        .collect::<Result<_, ScenarioError>>()?;
    let Some((_, _, first, _)) = results.first() else {
        return Err(ScenarioError::Invalid { field: "experiment".into(), message: "no protocols or p values".into() });
    };
    let mut cols: Vec<String> =
        ["protocol", "p", "subcell", "ring", "angle", "tau", "var_tau"].iter().map(|c| c.to_string()).collect();
    cols.extend(sink_columns(first, "b_"));
    let mut table = ResultTable::with_columns("routes", cols).series_by("p");
    let mut scols: Vec<String> = ["protocol", "p", "tau_a"].iter().map(|c| c.to_string()).collect();
    scols.extend(sink_columns(first, "p_"));
    let mut summary = ResultTable::with_columns("routes_summary", scols);
    for (k, p, chain, stats) in &results {
        for id in chain.origins() {
            let st = chain.start_state(id).expect("origin has a start state");
            let mut row: Vec<Value> = vec![
                k.name().into(),
                (*p).into(),
                id.index().into(),
                s.grid.ring(id).into(),
                s.grid.angle(id).into(),
                stats.tau[st].into(),
                stats.var_tau[st].into(),
            ];
            row.extend(stats.b[st].iter().map(|b| Value::from(*b)));
            table.push(row);
        }
        let mut row: Vec<Value> = vec![k.name().into(), (*p).into(), stats.tau_a.into()];
        row.extend(stats.p_ac.iter().map(|b| Value::from(*b)));
        summary.push(row);
    }
    Ok(vec![table, summary])
}

/// Route sets compared in the capacity table: full availability (`ideal`),
/// mMDR, mLIR and LAR.
pub fn capacity_route_sets(s: &Scenario, overlay: &ScenarioOverlay) -> Result<Vec<(&'static str, RouteSet, ProtocolConfig)>, ScenarioError> {
    let cfg = |kind| ProtocolConfig { kind, p: 1.0, ..s.protocol.clone() };
    let ideal_overlay = ScenarioOverlay { unavailable: BTreeSet::new(), k0: None, ..overlay.clone() };
    let mut out = Vec::new();
    let c = cfg(ProtocolKind::MLir);
    out.push(("ideal", extract_routes(&s.grid, &s.destinations, &ideal_overlay, &c)?, c));
    for (label, kind) in [("mmdr", ProtocolKind::MMdr), ("mlir", ProtocolKind::MLir), ("lar", ProtocolKind::Lar)] {
        let c = cfg(kind);
        out.push((label, extract_routes(&s.grid, &s.destinations, overlay, &c)?, c));
    }
    Ok(out)
}

pub fn capacity(s: &Scenario) -> Result<Vec<ResultTable>, ScenarioError> {
    let mut tables = Vec::new();
    if !s.overlays.is_empty() {
        let mut t = ResultTable::new(
            "capacity",
            &["overlay", "protocol", "k0", "cycle", "capacity", "throughput", "routed", "unrouted"],
        )
        .series_by("protocol");
        for named in &s.overlays {
            for (label, set, cfg) in capacity_route_sets(s, &named.overlay)? {
                let sched = schedule(&s.grid, &set, &cfg);
                let (c, thr) = network_capacity_throughput(&s.grid, &set, &sched, &s.radio)?;
                let k0 = set.k0.map_or(Value::from(""), |k| Value::from(k + 1));
                t.push(vec![
                    named.name.clone().into(),
                    label.into(),
                    k0,
                    sched.cycle_length.into(),
                    c.into(),
                    thr.into(),
                    set.routed().count().into(),
                    set.unrouted().into(),
                ]);
            }
        }
        tables.push(t);
    }
    let x = &s.experiment;
    if !x.p_sweep.is_empty() {
        let caps: Vec<f64> = x
            .p_sweep
            .par_iter()
            .map(|p| expected_mdr_capacity(&s.grid, *p, &s.radio))
            .collect::<Result<_, EconError>>()?;
        let mut t = ResultTable::new("capacity_availability", &["p", "capacity"]);
        for (p, c) in x.p_sweep.iter().zip(caps) {
            t.push(vec![(*p).into(), c.into()]);
        }
        tables.push(t);
    }
    if !x.operator_p.is_empty() {
        let mut t = ResultTable::new(
            "capacity_operators",
            &["p_single", "p_two", "capacity_single", "capacity_two", "ratio"],
        );
        for &po in &x.operator_p {
            let two = aggregate_availability(1.0, 1.0, &[po, po])?;
            let c1 = expected_mdr_capacity(&s.grid, po, &s.radio)?;
            let c2 = expected_mdr_capacity(&s.grid, two, &s.radio)?;
            let ratio = if c1 > 0.0 { c2 / c1 } else { f64::INFINITY };
            t.push(vec![po.into(), two.into(), c1.into(), c2.into(), ratio.into()]);
        }
        tables.push(t);
    }
    Ok(tables)
}

fn set_text(set: &BTreeSet<SubcellId>) -> String {
    set.iter().map(|u| u.index().to_string()).collect::<Vec<_>>().join(" ")
}

struct NegotiationTables {
    summary: ResultTable,
    offsets: ResultTable,
    trace: ResultTable,
}

impl NegotiationTables {
    fn new() -> Self {
        NegotiationTables {
            summary: ResultTable::new(
                "negotiation",
                &[
                    "scenario", "n_bs", "n_wlan", "n_lambda_bs", "n_lambda_wlan", "n_mu", "price", "exact_price",
                    "verdict", "converged", "at_bound", "iterations", "delta_u", "delta_u1", "offload",
                ],
            ),
            offsets: ResultTable::new("negotiation_offsets", &["scenario", "price", "delta_u", "delta_u1"])
                .series_by("scenario"),
            trace: ResultTable::new(
                "negotiation_trace",
                &["scenario", "iteration", "price", "delta_u", "delta_u1", "offload_size"],
            ),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record<E: OffsetEvaluator + ?Sized>(
        &mut self,
        s: &Scenario,
        name: &str,
        counts: [usize; 5],
        initial: &BTreeSet<SubcellId>,
        mode: &NegotiationMode,
        exact: Option<f64>,
        eval: &E,
    ) -> Result<(), ScenarioError> {
        let prices: Vec<f64> = s.sweep_prices.iter().copied().filter(|p| (0.0..=s.econ.price_cap).contains(p)).collect();
        for (p, du, du1) in price_sweep(eval, initial, &prices)? {
            self.offsets.push(vec![name.into(), p.into(), du.into(), du1.into()]);
        }
        let exact = exact.map_or(Value::from(""), Value::from);
        let mut row: Vec<Value> = vec![name.into()];
        row.extend(counts.iter().map(|c| Value::from(*c)));
        let trace = match negotiate(eval, initial, mode, &s.econ) {
            Ok(out) => {
                let verdict = match out.verdict {
                    Verdict::Offload => "offload",
                    Verdict::NoOffload => "no-offload",
                };
                row.extend([
                    out.price.into(),
                    exact,
                    verdict.into(),
                    out.converged.into(),
                    out.at_bound.into(),
                    out.iterations.into(),
                    out.delta_u.into(),
                    out.delta_u1.into(),
                    set_text(&out.offload).into(),
                ]);
                out.trace
            }
            Err(EconError::NonConvergence { iterations, last_price, trace }) => {
                row.extend([
                    last_price.into(),
                    exact,
                    "non-convergent".into(),
                    false.into(),
                    false.into(),
                    iterations.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    set_text(initial).into(),
                ]);
                trace
            }
            Err(e) => return Err(e.into()),
        };
        self.summary.push(row);
        for st in trace {
            self.trace.push(vec![
                name.into(),
                st.iteration.into(),
                st.price.into(),
                st.delta_u.into(),
                st.delta_u1.into(),
                st.offload_size.into(),
            ]);
        }
        Ok(())
    }
}

pub fn negotiation(s: &Scenario) -> Result<Vec<ResultTable>, ScenarioError> {
    let mut t = NegotiationTables::new();
    if let Some(stub) = &s.stub {
        let (m, o) = (stub.mno, stub.sso);
        let eval = move |p: f64, _: &BTreeSet<SubcellId>| Ok((m[0] + m[1] * p, o[0] + o[1] * p));
        let slope = o[1] - m[1];
        let exact = (slope != 0.0).then(|| (m[0] - o[0]) / slope);
        t.record(s, "stub", [0; 5], &BTreeSet::new(), &NegotiationMode::PriceOnly, exact, &eval)?;
    }
    if !s.traffic.is_empty() {
        let model = s.offload.as_ref().expect("traffic scenarios require an offload model");
        for named in &s.traffic {
            let st = &named.state;
            let mode = match &s.negotiation {
                NegotiationMode::PriceAndSet { candidates } if candidates.is_empty() => {
                    NegotiationMode::PriceAndSet { candidates: st.n_bs.clone() }
                }
                m => m.clone(),
            };
            let exact = model.components(st)?.equilibrium();
            let eval = model.evaluator(st);
            let counts = [st.n_bs.len(), st.n_wlan.len(), st.n_lambda_bs.len(), st.n_lambda_wlan.len(), st.n_mu.len()];
            t.record(s, &named.name, counts, &st.n_mu, &mode, exact, &eval)?;
        }
    }
    if t.summary.is_empty() {
        return Err(ScenarioError::Invalid {
            field: "traffic".into(),
            message: "negotiate needs [[traffic]] scenarios or [econ.stub]".into(),
        });
    }
    Ok(vec![t.summary, t.offsets, t.trace])
}

/// Per-state comparison of analytic and simulated statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub subcell: SubcellId,
    pub tau: f64,
    pub tau_mc: f64,
    pub std_error: f64,
    /// `|τ − τ_mc| / σ`, or 0 when both agree exactly.
    pub z: f64,
    pub b_error: f64,
}

pub fn compare_walks(chain: &RoutingChain, analytic: &ChainStatistics, walks: &WalkStatistics) -> Vec<VerifyRow> {
    chain
        .origins()
        .map(|id| {
            let i = chain.start_state(id).expect("origin has a start state");
            let se = walks.std_error(i);
            let diff = (analytic.tau[i] - walks.tau[i]).abs();
            let z = if diff <= 1e-9 { 0.0 } else if se > 0.0 { diff / se } else { f64::INFINITY };
            let b_error = analytic.b[i].iter().zip(&walks.b[i]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            VerifyRow { subcell: id, tau: analytic.tau[i], tau_mc: walks.tau[i], std_error: se, z, b_error }
        })
        .collect()
}

pub fn verify(s: &Scenario, opts: &RunOptions) -> Result<Vec<ResultTable>, ScenarioError> {
    let x = &s.experiment;
    let seed = opts.seed.unwrap_or(x.seed);
    let walks = opts.walks.unwrap_or(x.n_walks);
    let mut table = ResultTable::new(
        "verify",
        &["protocol", "p", "subcell", "tau", "tau_mc", "std_error", "z", "b_error"],
    )
    .series_by("p");
    let mut summary = ResultTable::new(
        "verify_summary",
        &["protocol", "p", "walks", "seed", "max_z", "max_b_error", "pass"],
    );
    for &kind in &x.protocols {
        for &p in &x.p_values {
            let chain = routing_chain(s, kind, p)?;
            let analytic = chain.statistics()?;
            let sim = chain.simulate(walks, seed)?;
            let rows = compare_walks(&chain, &analytic, &sim);
            let max_z = rows.iter().map(|r| r.z).fold(0.0, f64::max);
            let max_b = rows.iter().map(|r| r.b_error).fold(0.0, f64::max);
            for r in &rows {
                table.push(vec![
                    kind.name().into(),
                    p.into(),
                    r.subcell.index().into(),
                    r.tau.into(),
                    r.tau_mc.into(),
                    r.std_error.into(),
                    r.z.into(),
                    r.b_error.into(),
                ]);
            }
            summary.push(vec![
                kind.name().into(),
                p.into(),
                walks.into(),
                seed.into(),
                max_z.into(),
                max_b.into(),
                (max_z <= 3.0 && max_b <= 0.01).into(),
            ]);
        }
    }
    Ok(vec![table, summary])
}
