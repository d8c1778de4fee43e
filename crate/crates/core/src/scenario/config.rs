//! Scenario files: TOML with strict keys, defaults for everything but the
//! experiment-specific sections, and `u^k(h,θ)` cell references.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use super::ScenarioError;
use crate::economics::tessellation::AvailabilitySpec;
use crate::economics::{EconParams, NegotiationMode, OffloadModel, TrafficState};
use crate::grid::{Destinations, GridParams, SubcellGrid, SubcellId};
use crate::radio::RadioParams;
use crate::routing::{ProtocolConfig, ProtocolKind, ScenarioOverlay};

/// A subcell given by index or as `u^k(h,θ)` / `(h,θ)`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CellRef {
    Index(usize),
    Spec(String),
}

/// Parsed `u^k(h,θ)`: optional cell type `k` (1-based colour label).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub kind: Option<u32>,
    pub ring: u32,
    pub angle: f64,
}

/// Parses `u^5(2,0)`, `u^{5}(2,0)`, `u(2,0)` or `(2,0)`.
pub fn parse_cell_spec(text: &str) -> Result<CellSpec, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.strip_prefix('u').unwrap_or(&s);
    let (kind, rest) = match s.strip_prefix('^') {
        Some(r) => {
            let end = r.find('(').ok_or_else(|| format!("missing '(' in {text:?}"))?;
            let k = r[..end].trim_start_matches('{').trim_end_matches('}');
            let k: u32 = k.parse().map_err(|_| format!("bad type label in {text:?}"))?;
            (Some(k), &r[end..])
        }
        None => (None, s),
    };
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("expected (h,θ) in {text:?}"))?;
    let (h, a) = inner.split_once(',').ok_or_else(|| format!("expected (h,θ) in {text:?}"))?;
    let ring = h.parse().map_err(|_| format!("bad ring in {text:?}"))?;
    let angle: f64 = a.parse().map_err(|_| format!("bad angle in {text:?}"))?;
    if !angle.is_finite() {
        return Err(format!("bad angle in {text:?}"));
    }
    Ok(CellSpec { kind, ring, angle })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub rings: u32,
    pub radius: f64,
    pub cluster: u32,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { rings: 4, radius: 1000.0, cluster: 7 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub power: f64,
    pub alpha: f64,
    pub noise: f64,
    pub ring_noise: Option<Vec<f64>>,
    pub sensitivity: f64,
    pub log_base: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        let r = RadioParams::default();
        RadioSection {
            power: r.power,
            alpha: r.path_loss_exponent,
            noise: r.noise,
            ring_noise: None,
            sensitivity: r.sensitivity,
            log_base: r.log_base,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionSection {
    /// Direct availability; wins over the compressed parameters.
    pub p: Option<f64>,
    /// Relay-capable terminals per operator.
    pub n_o: Option<Vec<f64>>,
    pub zeta: Option<f64>,
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: String,
    pub dwell_mdr: Option<f64>,
    pub dwell_lir: f64,
    pub interference_threshold: f64,
    pub allow_fallback: bool,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            kind: "mdr".into(),
            dwell_mdr: None,
            dwell_lir: 1.0,
            interference_threshold: 1.0,
            allow_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DestinationSection {
    pub base_station: bool,
    pub access_points: Vec<CellRef>,
    /// Explicit coverage per access point, in the same order.
    pub coverage: Option<Vec<Vec<CellRef>>>,
}

impl Default for DestinationSection {
    fn default() -> Self {
        DestinationSection { base_station: true, access_points: Vec::new(), coverage: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlaySection {
    pub name: String,
    pub sources: Vec<CellRef>,
    /// All ring subcells of these types (1-based labels) are sources.
    pub source_types: Vec<u32>,
    /// Restricts `source_types` to one ring.
    pub source_ring: Option<u32>,
    pub unavailable: Vec<CellRef>,
    pub unavailable_types: Vec<u32>,
    /// Forced common relay type (1-based label).
    pub k0: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffloadSection {
    pub access_point: CellRef,
    #[serde(default = "default_offload_protocol")]
    pub protocol: String,
}

fn default_offload_protocol() -> String {
    "mmdr".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    pub name: String,
    pub n_bs: Vec<CellRef>,
    pub n_wlan: Vec<CellRef>,
    pub lambda_bs: Vec<CellRef>,
    pub lambda_wlan: Vec<CellRef>,
    pub mu_bs: Vec<CellRef>,
    pub mu_wlan: Vec<CellRef>,
    pub mu: Vec<CellRef>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubSection {
    /// `ΔU(χ) = mno[0] + mno[1]·χ`.
    pub mno: [f64; 2],
    /// `ΔU₁(χ) = sso[0] + sso[1]·χ`.
    pub sso: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconSection {
    pub rho: f64,
    pub rho1: f64,
    pub gamma: f64,
    pub price_step: f64,
    pub initial_price: f64,
    pub tol: f64,
    pub max_iterations: usize,
    pub price_cap: f64,
    /// `price` or `price-and-set`.
    pub mode: String,
    /// BS users the set variant may offload; empty means all of `n_bs`.
    pub candidates: Vec<CellRef>,
    pub sweep_prices: Vec<f64>,
    pub stub: Option<StubSection>,
}

impl Default for EconSection {
    fn default() -> Self {
        let e = EconParams::default();
        EconSection {
            rho: e.rho,
            rho1: e.rho1,
            gamma: e.gamma,
            price_step: e.price_step,
            initial_price: e.initial_price,
            tol: e.tol,
            max_iterations: e.max_iterations,
            price_cap: e.price_cap,
            mode: "price".into(),
            candidates: Vec::new(),
            sweep_prices: (0..=40).map(|k| k as f64 * 0.1).collect(),
            stub: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub rings: Vec<u32>,
    pub powers: Vec<f64>,
    /// Availability values for `routes` and `verify`; empty means the
    /// scenario's `p`.
    pub p_values: Vec<f64>,
    pub protocols: Vec<String>,
    /// Availability sweep for the expected-capacity table.
    pub p_sweep: Vec<f64>,
    /// Single-operator availabilities compared against two operators.
    pub operator_p: Vec<f64>,
    pub seed: u64,
    pub n_walks: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            rings: (1..=14).collect(),
            powers: vec![0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4],
            p_values: Vec::new(),
            protocols: vec!["mdr".into(), "lir".into()],
            p_sweep: (1..=20).map(|k| k as f64 * 0.05).collect(),
            operator_p: (1..=9).map(|k| k as f64 * 0.1).collect(),
            seed: 1,
            n_walks: 100_000,
        }
    }
}

/// The file as written.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub grid: GridSection,
    pub radio: RadioSection,
    pub compression: CompressionSection,
    pub protocol: ProtocolSection,
    pub destinations: DestinationSection,
    #[serde(rename = "overlay")]
    pub overlays: Vec<OverlaySection>,
    pub offload: Option<OffloadSection>,
    pub traffic: Vec<TrafficSection>,
    pub econ: EconSection,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone)]
pub struct NamedOverlay {
    pub name: String,
    pub overlay: ScenarioOverlay,
}

#[derive(Debug, Clone)]
pub struct NamedTraffic {
    pub name: String,
    pub state: TrafficState,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub rings: Vec<u32>,
    pub powers: Vec<f64>,
    pub p_values: Vec<f64>,
    pub protocols: Vec<ProtocolKind>,
    pub p_sweep: Vec<f64>,
    pub operator_p: Vec<f64>,
    pub seed: u64,
    pub n_walks: usize,
}

/// A validated scenario with every reference resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub grid: SubcellGrid,
    pub radio: RadioParams,
    pub availability: AvailabilitySpec,
    /// Availability at the scenario's own ring count.
    pub p: f64,
    pub protocol: ProtocolConfig,
    pub destinations: Destinations,
    pub overlays: Vec<NamedOverlay>,
    pub offload: Option<OffloadModel>,
    pub traffic: Vec<NamedTraffic>,
    pub econ: EconParams,
    pub negotiation: NegotiationMode,
    pub stub: Option<StubSection>,
    pub sweep_prices: Vec<f64>,
    pub experiment: Experiment,
    /// Non-fatal findings: snapped angles, type mismatches, duplicates.
    pub warnings: Vec<String>,
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.into() }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

pub fn parse_scenario_file(text: &str) -> Result<ScenarioFile, ScenarioError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ScenarioError::Parse { line, column, message: e.message().to_string() }
    })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut scenario = Scenario::from_file(parse_scenario_file(&text)?)?;
    if scenario.name.is_empty() {
        scenario.name = stem;
    }
    Ok(scenario)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_file(parse_scenario_file(text)?)
}

struct Resolver<'a> {
    grid: &'a SubcellGrid,
    warnings: Vec<String>,
}

impl Resolver<'_> {
    fn cell(&mut self, field: &str, r: &CellRef) -> Result<SubcellId, ScenarioError> {
        match r {
            CellRef::Index(i) => self.grid.id(*i).map_err(|e| invalid(field, e.to_string())),
            CellRef::Spec(text) => {
                let spec = parse_cell_spec(text).map_err(|m| invalid(field, m))?;
                let snap = self.grid.snap(spec.ring, spec.angle).map_err(|e| invalid(field, e.to_string()))?;
                if snap.tie {
                    self.warnings.push(format!("{field}: {text} lies between two subcells, using {}", snap.id));
                } else if snap.angle_error > 1e-6 {
                    self.warnings.push(format!(
                        "{field}: {text} snapped to {} ({:.1} degrees away)",
                        snap.id, snap.angle_error
                    ));
                }
                if let Some(k) = spec.kind {
                    let actual = self.grid.cluster_color(snap.id) + 1;
                    if actual != k {
                        self.warnings.push(format!("{field}: {text} resolves to {} of type {actual}", snap.id));
                    }
                }
                Ok(snap.id)
            }
        }
    }

    /// Resolves a list, dropping duplicates with a warning.
    fn cells(&mut self, field: &str, refs: &[CellRef]) -> Result<Vec<SubcellId>, ScenarioError> {
        let mut out = Vec::new();
        for r in refs {
            let id = self.cell(field, r)?;
            if out.contains(&id) {
                self.warnings.push(format!("{field}: duplicate {id} dropped"));
            } else {
                out.push(id);
            }
        }
        Ok(out)
    }

    fn set(&mut self, field: &str, refs: &[CellRef]) -> Result<BTreeSet<SubcellId>, ScenarioError> {
        Ok(self.cells(field, refs)?.into_iter().collect())
    }

    fn types(&self, field: &str, labels: &[u32], ring: Option<u32>) -> Result<Vec<SubcellId>, ScenarioError> {
        let k = self.grid.params().cluster;
        if let Some(bad) = labels.iter().find(|t| **t == 0 || **t > k) {
            return Err(invalid(field, format!("type {bad} outside 1..={k}")));
        }
        Ok(self
            .grid
            .ring_ids()
            .filter(|id| labels.contains(&(self.grid.cluster_color(*id) + 1)))
            .filter(|id| ring.is_none_or(|h| self.grid.ring(*id) == h))
            .collect())
    }
}

fn protocol_kind(field: &str, s: &str) -> Result<ProtocolKind, ScenarioError> {
    s.parse().map_err(|e: crate::routing::RoutingError| invalid(field, e.to_string()))
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
        let g = &file.grid;
        let params = GridParams::with_cluster(g.rings, g.radius, g.cluster).map_err(|e| invalid("grid", e.to_string()))?;
        let grid = SubcellGrid::new(params).map_err(|e| invalid("grid", e.to_string()))?;

        let r = &file.radio;
        let radio = RadioParams {
            power: r.power,
            path_loss_exponent: r.alpha,
            noise: r.noise,
            ring_noise: r.ring_noise.clone(),
            sensitivity: r.sensitivity,
            log_base: r.log_base,
        };
        radio.validate().map_err(|e| invalid("radio", e.to_string()))?;

        let c = &file.compression;
        let availability = match (c.p, &c.n_o) {
            (Some(p), _) => AvailabilitySpec::Direct(p),
            (None, Some(n_o)) => AvailabilitySpec::Compressed {
                n_o: n_o.clone(),
                zeta: c.zeta.unwrap_or(0.0),
                phi: c.phi.unwrap_or(360.0),
            },
            (None, None) => AvailabilitySpec::Direct(1.0),
        };
        let p = availability.availability(g.rings).map_err(|e| invalid("compression", e.to_string()))?;

        let pr = &file.protocol;
        let protocol = ProtocolConfig {
            kind: protocol_kind("protocol.kind", &pr.kind)?,
            p,
            cluster: g.cluster,
            dwell_mdr: pr.dwell_mdr.unwrap_or(g.cluster as f64),
            dwell_lir: pr.dwell_lir,
            interference_threshold: pr.interference_threshold,
            allow_fallback: pr.allow_fallback,
        };
        protocol.validate().map_err(|e| invalid("protocol", e.to_string()))?;

        let mut res = Resolver { grid: &grid, warnings: Vec::new() };

        let d = &file.destinations;
        let mut destinations = if d.base_station {
            Destinations::base_station()
        } else {
            Destinations::default()
        };
        let aps = res.cells("destinations.access_points", &d.access_points)?;
        match &d.coverage {
            Some(cov) => {
                if cov.len() != aps.len() {
                    return Err(invalid("destinations.coverage", "one coverage list per access point"));
                }
                for (ap, cells) in aps.iter().zip(cov) {
                    let cells = res.set("destinations.coverage", cells)?;
                    destinations = destinations
                        .with_ap_coverage(&grid, *ap, cells)
                        .map_err(|e| invalid("destinations.coverage", e.to_string()))?;
                }
            }
            None => {
                for ap in &aps {
                    destinations =
                        destinations.with_ap(&grid, *ap).map_err(|e| invalid("destinations.access_points", e.to_string()))?;
                }
            }
        }
        destinations.validate(&grid).map_err(|e| invalid("destinations", e.to_string()))?;

        let mut overlays = Vec::new();
        for (n, o) in file.overlays.iter().enumerate() {
            let field = format!("overlay[{n}]");
            let mut sources = res.cells(&format!("{field}.sources"), &o.sources)?;
            for id in res.types(&format!("{field}.source_types"), &o.source_types, o.source_ring)? {
                if !sources.contains(&id) {
                    sources.push(id);
                }
            }
            let mut unavailable = res.set(&format!("{field}.unavailable"), &o.unavailable)?;
            unavailable.extend(res.types(&format!("{field}.unavailable_types"), &o.unavailable_types, None)?);
            let clash: Vec<SubcellId> = unavailable.iter().filter(|u| sources.contains(u)).copied().collect();
            for u in clash {
                res.warnings.push(format!("{field}: source {u} listed as unavailable, kept as source"));
                unavailable.remove(&u);
            }
            let k0 = match o.k0 {
                Some(0) => return Err(invalid(&format!("{field}.k0"), "types are numbered from 1")),
                Some(k) if k > g.cluster => return Err(invalid(&format!("{field}.k0"), format!("type {k} > K"))),
                Some(k) => Some(k - 1),
                None => None,
            };
            let overlay = ScenarioOverlay { unavailable, sources, k0 };
            overlay.validate(&grid, &destinations).map_err(|e| invalid(&field, e.to_string()))?;
            let name = if o.name.is_empty() { format!("{}", n + 1) } else { o.name.clone() };
            overlays.push(NamedOverlay { name, overlay });
        }

        let e = &file.econ;
        let econ = EconParams {
            rho: e.rho,
            rho1: e.rho1,
            gamma: e.gamma,
            price_step: e.price_step,
            initial_price: e.initial_price,
            tol: e.tol,
            max_iterations: e.max_iterations,
            price_cap: e.price_cap,
        };
        econ.validate().map_err(|err| invalid("econ", err.to_string()))?;

        let offload = match &file.offload {
            Some(o) => {
                let ap = res.cell("offload.access_point", &o.access_point)?;
                let kind = protocol_kind("offload.protocol", &o.protocol)?;
                let cfg = ProtocolConfig { kind, p: 1.0, ..protocol.clone() };
                Some(
                    OffloadModel::new(grid.clone(), ap, radio.clone(), econ.clone(), cfg)
                        .map_err(|err| invalid("offload", err.to_string()))?,
                )
            }
            None => None,
        };

        let mut traffic = Vec::new();
        for (n, t) in file.traffic.iter().enumerate() {
            let field = format!("traffic[{n}]");
            let state = TrafficState {
                n_bs: res.set(&format!("{field}.n_bs"), &t.n_bs)?,
                n_wlan: res.set(&format!("{field}.n_wlan"), &t.n_wlan)?,
                n_lambda_bs: res.set(&format!("{field}.lambda_bs"), &t.lambda_bs)?,
                n_lambda_wlan: res.set(&format!("{field}.lambda_wlan"), &t.lambda_wlan)?,
                n_mu_bs: res.set(&format!("{field}.mu_bs"), &t.mu_bs)?,
                n_mu_wlan: res.set(&format!("{field}.mu_wlan"), &t.mu_wlan)?,
                n_mu: res.set(&format!("{field}.mu"), &t.mu)?,
            };
            state.validate().map_err(|err| invalid(&field, err.to_string()))?;
            if offload.is_none() {
                return Err(invalid(&field, "traffic scenarios need an [offload] section"));
            }
            let name = if t.name.is_empty() { format!("{}", n + 1) } else { t.name.clone() };
            traffic.push(NamedTraffic { name, state });
        }

        let negotiation = match e.mode.as_str() {
            "price" => NegotiationMode::PriceOnly,
            "price-and-set" => NegotiationMode::PriceAndSet { candidates: res.set("econ.candidates", &e.candidates)? },
            other => return Err(invalid("econ.mode", format!("unknown mode {other:?}"))),
        };

        let x = &file.experiment;
        if x.rings.is_empty() || x.powers.is_empty() {
            return Err(invalid("experiment", "rings and powers must be non-empty"));
        }
        if let Some(bad) = x.p_values.iter().chain(&x.p_sweep).chain(&x.operator_p).find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid("experiment", format!("availability {bad} outside [0, 1]")));
        }
        if x.n_walks == 0 {
            return Err(invalid("experiment.n_walks", "must be >= 1"));
        }
        let protocols = x
            .protocols
            .iter()
            .map(|s| protocol_kind("experiment.protocols", s))
            .collect::<Result<Vec<_>, _>>()?;
        let experiment = Experiment {
            rings: x.rings.clone(),
            powers: x.powers.clone(),
            p_values: if x.p_values.is_empty() { vec![p] } else { x.p_values.clone() },
            protocols,
            p_sweep: x.p_sweep.clone(),
            operator_p: x.operator_p.clone(),
            seed: x.seed,
            n_walks: x.n_walks,
        };

        let warnings = res.warnings;
        Ok(Scenario {
            name: file.name.clone().unwrap_or_default(),
            grid,
            radio,
            availability,
            p,
            protocol,
            destinations,
            overlays,
            offload,
            traffic,
            econ,
            negotiation,
            stub: e.stub.clone(),
            sweep_prices: e.sweep_prices.clone(),
            experiment,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_spec_forms() {
        assert_eq!(parse_cell_spec("u^5(2,0)").unwrap(), CellSpec { kind: Some(5), ring: 2, angle: 0.0 });
        assert_eq!(parse_cell_spec("u^{7}(2, 120)").unwrap(), CellSpec { kind: Some(7), ring: 2, angle: 120.0 });
        assert_eq!(parse_cell_spec("(3,250)").unwrap(), CellSpec { kind: None, ring: 3, angle: 250.0 });
        assert!(parse_cell_spec("u^x(2,0)").is_err());
        assert!(parse_cell_spec("u^5 2,0").is_err());
        assert!(parse_cell_spec("(2)").is_err());
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_scenario("[grid]\nrings = 4\n").unwrap();
        assert_eq!(s.grid.subcell_count(), 60);
        assert_eq!(s.grid.params().radius, 1000.0);
        assert_eq!(s.grid.params().cluster, 7);
        assert_eq!(s.radio.path_loss_exponent, 2.0);
        assert_eq!(s.radio.noise, 1e-4);
        assert_eq!(s.econ.rho, 2.0);
        assert_eq!(s.econ.rho1, 2.0);
        assert_eq!(s.p, 1.0);
        assert_eq!(s.protocol.dwell_mdr, 7.0);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        match parse_scenario("[grid]\nrings = 4\nrnigs = 3\n") {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_scenario("[gird]\nrings = 4\n").is_err());
    }

    #[test]
    fn source_spec_resolves_with_type_check() {
        let text = r#"
[[overlay]]
sources = ["u^5(2,0)", "u^1(2,0)", "u^5(2,0)"]
"#;
        let s = parse_scenario(text).unwrap();
        let o = &s.overlays[0].overlay;
        let id = s.grid.snap(2, 0.0).unwrap().id;
        assert_eq!(o.sources, vec![id]);
        assert_eq!(s.grid.cluster_color(id) + 1, 5);
        assert_eq!(s.warnings.len(), 3, "{:?}", s.warnings);
        assert!(s.warnings.iter().any(|w| w.contains("type 5")));
        assert!(s.warnings.iter().any(|w| w.contains("duplicate")));
    }

    #[test]
    fn validation_names_the_field() {
        match parse_scenario("[[overlay]]\nsources = [999]\n") {
            Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "overlay[0].sources"),
            other => panic!("{other:?}"),
        }
        match parse_scenario("[radio]\npower = -1.0\n") {
            Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "radio"),
            other => panic!("{other:?}"),
        }
        assert!(parse_scenario("[[traffic]]\nn_bs = [1]\nmu = [2]\n").is_err());
    }

    #[test]
    fn compressed_availability() {
        let s = parse_scenario("[compression]\nn_o = [30.0, 30.0]\nzeta = 0.5\nphi = 360.0\n").unwrap();
        assert!((s.p - (1.0 - 0.75f64 * 0.75)).abs() < 1e-12);
    }
}
