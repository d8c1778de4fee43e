//! Hexagonal macrocell tessellation.
//!
//! The macrocell of radius `R` is split into `H` concentric rings of
//! hexagonal subcells around the base station. Subcells live on a hex
//! lattice in axial coordinates `(q, r)`; the `q` axis points at 30° and the
//! `r` axis at 90°, so ring 1 sits at 30°, 90°, ..., 330° and angles are
//! measured counter-clockwise from +x.
//!
//! Every subcell has three names: its axial coordinate, its polar address
//! `(h, θ)` and its linear index `i` (0 for the centre, ring `h` occupying
//! `3h(h-1)+1 ..= 3h(h+1)` sorted by angle).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Default cluster (reuse) factor.
pub const DEFAULT_CLUSTER: u32 = 7;

/// Axial unit steps, counter-clockwise starting at 30°.
const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Maps `(q + 3r) mod 7` onto a rosette labelling: the centre is colour 0 and
/// the ring-1 neighbour in direction `d` is colour `d + 1`.
const ROSETTE: [u32; 7] = [0, 1, 3, 2, 5, 6, 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid parameters: {0}")]
    InvalidParams(String),
    #[error("subcell index {index} out of range (grid has {count} cells)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("ring {ring} out of range 0..={rings}")]
    RingOutOfRange { ring: u32, rings: u32 },
    #[error("no subcell at ring {ring}, angle {angle}")]
    NoSuchSubcell { ring: u32, angle: f64 },
    #[error("interference distance undefined for co-located subcells ({0})")]
    ZeroDistance(SubcellId),
    #[error("unsupported cluster factor K = {0} (only K = 7 colouring is implemented)")]
    UnsupportedCluster(u32),
    #[error("invalid destinations: {0}")]
    InvalidDestinations(String),
}

/// Ring count, macrocell radius and cluster factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub rings: u32,
    /// Macrocell radius in metres.
    pub radius: f64,
    pub cluster: u32,
}

impl GridParams {
    pub fn new(rings: u32, radius: f64) -> Result<Self, GridError> {
        Self::with_cluster(rings, radius, DEFAULT_CLUSTER)
    }

    pub fn with_cluster(rings: u32, radius: f64, cluster: u32) -> Result<Self, GridError> {
        let params = GridParams { rings, radius, cluster };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.rings < 1 {
            return Err(GridError::InvalidParams(format!("H must be >= 1, got {}", self.rings)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GridError::InvalidParams(format!("R must be > 0, got {}", self.radius)));
        }
        if self.cluster != DEFAULT_CLUSTER {
            return Err(GridError::UnsupportedCluster(self.cluster));
        }
        Ok(())
    }

    /// Subcell radius `r = R / (2H)`.
    pub fn subcell_radius(&self) -> f64 {
        self.radius / (2.0 * self.rings as f64)
    }

    /// Distance between adjacent subcell centres, `d_r = √3·r`.
    pub fn relay_distance(&self) -> f64 {
        3f64.sqrt() * self.subcell_radius()
    }

    /// Number of ring subcells `N = 3H(H+1)` (the centre is not counted).
    pub fn subcell_count(&self) -> usize {
        let h = self.rings as usize;
        3 * h * (h + 1)
    }
}

/// `N = 3H(H+1)`, the number of ring subcells.
pub fn subcell_count(params: &GridParams) -> Result<usize, GridError> {
    if params.rings < 1 {
        return Err(GridError::InvalidParams(format!("H must be >= 1, got {}", params.rings)));
    }
    Ok(params.subcell_count())
}

/// First linear index of ring `h` (ring 0 is the centre at index 0).
pub fn ring_start(h: u32) -> usize {
    if h == 0 {
        0
    } else {
        let h = h as usize;
        3 * h * (h - 1) + 1
    }
}

/// Linear subcell index; ordering follows the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubcellId(pub usize);

impl SubcellId {
    pub const CENTER: SubcellId = SubcellId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for SubcellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Axial lattice coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Axial {
    pub q: i32,
    pub r: i32,
}

impl std::ops::Sub for Axial {
    type Output = Axial;

    fn sub(self, other: Axial) -> Axial {
        Axial { q: self.q - other.q, r: self.r - other.r }
    }
}

impl Axial {
    pub const ORIGIN: Axial = Axial { q: 0, r: 0 };

    pub fn new(q: i32, r: i32) -> Self {
        Axial { q, r }
    }

    /// Hex (step) distance from the origin.
    pub fn ring(self) -> u32 {
        ((self.q.abs() + self.r.abs() + (self.q + self.r).abs()) / 2) as u32
    }

    /// Squared Euclidean length in units of `d_r`, exact.
    pub fn norm_sq(self) -> i64 {
        let (q, r) = (self.q as i64, self.r as i64);
        q * q + r * r + q * r
    }

    pub fn offset(self, dq: i32, dr: i32) -> Axial {
        Axial { q: self.q + dq, r: self.r + dr }
    }

    /// Cartesian position in units of `d_r`.
    pub fn unit_position(self) -> (f64, f64) {
        let half_sqrt3 = 3f64.sqrt() / 2.0;
        let (q, r) = (self.q as f64, self.r as f64);
        (q * half_sqrt3, 0.5 * q + r)
    }

    /// K = 7 rosette colour.
    pub fn color(self) -> u32 {
        ROSETTE[(self.q + 3 * self.r).rem_euclid(7) as usize]
    }
}

/// Cartesian point in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone)]
struct Cell {
    axial: Axial,
    ring: u32,
    angle: f64,
    color: u32,
}

/// A requested `(h, θ)` resolved onto the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snap {
    pub id: SubcellId,
    /// Absolute angular difference between the request and the chosen cell, degrees.
    pub angle_error: f64,
    /// True when two cells were equally close and the lower index was taken.
    pub tie: bool,
}

/// The tessellated macrocell. Immutable once built.
#[derive(Debug, Clone)]
pub struct SubcellGrid {
    params: GridParams,
    cells: Vec<Cell>,
    lookup: HashMap<Axial, usize>,
    color_population: Vec<usize>,
}

impl SubcellGrid {
    pub fn new(params: GridParams) -> Result<Self, GridError> {
        params.validate()?;
        let h = params.rings as i32;
        let mut by_ring: Vec<Vec<Cell>> = vec![Vec::new(); params.rings as usize + 1];
        for q in -h..=h {
            for r in -h..=h {
                let axial = Axial::new(q, r);
                let ring = axial.ring();
                if ring > params.rings {
                    continue;
                }
                let angle = if ring == 0 {
                    0.0
                } else {
                    let (x, y) = axial.unit_position();
                    y.atan2(x).to_degrees().rem_euclid(360.0)
                };
                by_ring[ring as usize].push(Cell { axial, ring, angle, color: axial.color() });
            }
        }
        let mut cells = Vec::with_capacity(params.subcell_count() + 1);
        for mut ring in by_ring {
            ring.sort_by(|a, b| a.angle.total_cmp(&b.angle));
            cells.extend(ring);
        }
        let lookup = cells.iter().enumerate().map(|(i, c)| (c.axial, i)).collect();
        let mut color_population = vec![0; params.cluster as usize];
        for cell in cells.iter().skip(1) {
            color_population[cell.color as usize] += 1;
        }
        Ok(SubcellGrid { params, cells, lookup, color_population })
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    pub fn rings(&self) -> u32 {
        self.params.rings
    }

    /// Number of ring subcells `N` (centre excluded).
    pub fn subcell_count(&self) -> usize {
        self.cells.len() - 1
    }

    /// Total number of cells including the centre.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn relay_distance(&self) -> f64 {
        self.params.relay_distance()
    }

    /// All cells in index order, centre first.
    pub fn ids(&self) -> impl Iterator<Item = SubcellId> + '_ {
        (0..self.cells.len()).map(SubcellId)
    }

    /// Ring subcells `1..=N`.
    pub fn ring_ids(&self) -> impl Iterator<Item = SubcellId> + '_ {
        (1..self.cells.len()).map(SubcellId)
    }

    pub fn id(&self, index: usize) -> Result<SubcellId, GridError> {
        if index < self.cells.len() {
            Ok(SubcellId(index))
        } else {
            Err(GridError::IndexOutOfRange { index, count: self.cells.len() })
        }
    }

    fn cell(&self, id: SubcellId) -> &Cell {
        &self.cells[id.0]
    }

    pub fn contains(&self, id: SubcellId) -> bool {
        id.0 < self.cells.len()
    }

    pub fn ring(&self, id: SubcellId) -> u32 {
        self.cell(id).ring
    }

    pub fn angle(&self, id: SubcellId) -> f64 {
        self.cell(id).angle
    }

    pub fn axial(&self, id: SubcellId) -> Axial {
        self.cell(id).axial
    }

    pub fn at_axial(&self, axial: Axial) -> Option<SubcellId> {
        self.lookup.get(&axial).copied().map(SubcellId)
    }

    /// `i -> (h, θ)`.
    pub fn polar(&self, index: usize) -> Result<(u32, f64), GridError> {
        let id = self.id(index)?;
        Ok((self.ring(id), self.angle(id)))
    }

    /// `(h, θ) -> i` for an exact lattice angle (within 1e-6°).
    pub fn index_of(&self, ring: u32, angle: f64) -> Result<SubcellId, GridError> {
        let snap = self.snap(ring, angle)?;
        if snap.angle_error <= 1e-6 {
            Ok(snap.id)
        } else {
            Err(GridError::NoSuchSubcell { ring, angle })
        }
    }

    /// Nearest subcell of ring `ring` to angle `angle` (degrees).
    pub fn snap(&self, ring: u32, angle: f64) -> Result<Snap, GridError> {
        if ring > self.params.rings {
            return Err(GridError::RingOutOfRange { ring, rings: self.params.rings });
        }
        if ring == 0 {
            return Ok(Snap { id: SubcellId::CENTER, angle_error: 0.0, tie: false });
        }
        let target = angle.rem_euclid(360.0);
        let start = ring_start(ring);
        let end = ring_start(ring + 1);
        let mut best: Option<(usize, f64)> = None;
        let mut tie = false;
        for i in start..end {
            let diff = (self.cells[i].angle - target).rem_euclid(360.0);
            let err = diff.min(360.0 - diff);
            match best {
                Some((_, e)) if (err - e).abs() <= 1e-9 => tie = true,
                Some((_, e)) if err < e => {
                    best = Some((i, err));
                    tie = false;
                }
                None => best = Some((i, err)),
                _ => {}
            }
        }
        let (i, err) = best.expect("ring is non-empty");
        Ok(Snap { id: SubcellId(i), angle_error: err, tie })
    }

    /// Centre of a subcell in metres.
    pub fn center_position(&self, id: SubcellId) -> Point {
        let (x, y) = self.cell(id).axial.unit_position();
        let d = self.relay_distance();
        Point { x: x * d, y: y * d }
    }

    /// Existing lattice neighbours in direction order.
    pub fn neighbors(&self, id: SubcellId) -> Vec<SubcellId> {
        let a = self.axial(id);
        DIRECTIONS
            .iter()
            .filter_map(|&(dq, dr)| self.at_axial(a.offset(dq, dr)))
            .collect()
    }

    pub fn are_adjacent(&self, a: SubcellId, b: SubcellId) -> bool {
        (self.axial(a) - self.axial(b)).norm_sq() == 1
    }

    /// Exact squared lattice distance between two cells, in units of `d_r²`.
    pub fn distance_sq(&self, a: SubcellId, b: SubcellId) -> i64 {
        (self.axial(a) - self.axial(b)).norm_sq()
    }

    /// Squared distance from `id` to the nearest destination.
    pub fn destination_distance_sq(&self, id: SubcellId, dest: &Destinations) -> i64 {
        dest.targets()
            .map(|t| self.distance_sq(id, t))
            .min()
            .unwrap_or(i64::MAX)
    }

    /// Neighbours sorted by distance to the nearest destination; lower index wins ties.
    pub fn neighbors_ranked(&self, id: SubcellId, dest: &Destinations) -> Vec<SubcellId> {
        let mut ranked: Vec<(i64, SubcellId)> = self
            .neighbors(id)
            .into_iter()
            .map(|n| (self.destination_distance_sq(n, dest), n))
            .collect();
        ranked.sort();
        ranked.into_iter().map(|(_, n)| n).collect()
    }

    /// `Z = d(src, rx) / d_r`.
    pub fn interference_distance(&self, src: SubcellId, ref_rx: SubcellId) -> Result<f64, GridError> {
        if src == ref_rx {
            return Err(GridError::ZeroDistance(src));
        }
        let d = self.center_position(src).distance(self.center_position(ref_rx));
        Ok(d / self.relay_distance())
    }

    pub fn cluster_color(&self, id: SubcellId) -> u32 {
        self.cell(id).color
    }

    /// Ring subcells of each colour.
    pub fn color_population(&self, color: u32) -> usize {
        self.color_population.get(color as usize).copied().unwrap_or(0)
    }

    /// The six cells around `id` plus `id` itself, clipped to the grid.
    pub fn cluster_around(&self, id: SubcellId) -> BTreeSet<SubcellId> {
        let mut set: BTreeSet<SubcellId> = self.neighbors(id).into_iter().collect();
        set.insert(id);
        set
    }
}

/// Absorbing destinations: the base station and any access points with coverage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Destinations {
    pub bs: Option<SubcellId>,
    pub aps: Vec<SubcellId>,
    pub coverage: BTreeMap<SubcellId, BTreeSet<SubcellId>>,
}

impl Destinations {
    pub fn base_station() -> Self {
        Destinations { bs: Some(SubcellId::CENTER), aps: Vec::new(), coverage: BTreeMap::new() }
    }

    /// Single access point, no base station (WLAN-only routing).
    pub fn access_point(grid: &SubcellGrid, ap: SubcellId) -> Result<Self, GridError> {
        Destinations { bs: None, aps: Vec::new(), coverage: BTreeMap::new() }.with_ap(grid, ap)
    }

    /// Add an access point covering its surrounding cluster.
    pub fn with_ap(self, grid: &SubcellGrid, ap: SubcellId) -> Result<Self, GridError> {
        let coverage = grid.cluster_around(ap);
        self.with_ap_coverage(grid, ap, coverage)
    }

    pub fn with_ap_coverage(
        mut self,
        grid: &SubcellGrid,
        ap: SubcellId,
        mut coverage: BTreeSet<SubcellId>,
    ) -> Result<Self, GridError> {
        if !grid.contains(ap) || coverage.iter().any(|c| !grid.contains(*c)) {
            return Err(GridError::InvalidDestinations(format!("access point {ap} or its coverage is off-grid")));
        }
        if ap == SubcellId::CENTER {
            return Err(GridError::InvalidDestinations("access point placed on the base station".into()));
        }
        if self.aps.contains(&ap) {
            return Err(GridError::InvalidDestinations(format!("duplicate access point {ap}")));
        }
        coverage.remove(&SubcellId::CENTER);
        coverage.insert(ap);
        self.aps.push(ap);
        self.coverage.insert(ap, coverage);
        Ok(self)
    }

    /// Every absorbing destination: access points first, then the base station.
    pub fn targets(&self) -> impl Iterator<Item = SubcellId> + '_ {
        self.aps.iter().copied().chain(self.bs)
    }

    pub fn is_destination(&self, id: SubcellId) -> bool {
        self.bs == Some(id) || self.aps.contains(&id)
    }

    pub fn count(&self) -> usize {
        self.aps.len() + usize::from(self.bs.is_some())
    }

    pub fn validate(&self, grid: &SubcellGrid) -> Result<(), GridError> {
        if self.count() == 0 {
            return Err(GridError::InvalidDestinations("no destination".into()));
        }
        if let Some(bs) = self.bs {
            if bs != SubcellId::CENTER {
                return Err(GridError::InvalidDestinations("base station must be the centre cell".into()));
            }
        }
        for t in self.targets() {
            if !grid.contains(t) {
                return Err(GridError::InvalidDestinations(format!("{t} is off-grid")));
            }
        }
        for cov in self.coverage.values() {
            if cov.contains(&SubcellId::CENTER) {
                return Err(GridError::InvalidDestinations("coverage includes the base station".into()));
            }
        }
        Ok(())
    }

    /// Whether `id` lies in any access point's coverage.
    pub fn covered(&self, id: SubcellId) -> bool {
        self.coverage.values().any(|c| c.contains(&id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: u32) -> SubcellGrid {
        SubcellGrid::new(GridParams::new(h, 1000.0).unwrap()).unwrap()
    }

    #[test]
    fn counts_match_ring_sizes() {
        for h in 1..=12u32 {
            let p = GridParams::new(h, 1000.0).unwrap();
            let by_rings: usize = (1..=h as usize).map(|k| 6 * k).sum();
            assert_eq!(subcell_count(&p).unwrap(), by_rings);
            assert_eq!(grid(h).subcell_count(), by_rings);
        }
        assert_eq!(subcell_count(&GridParams::new(4, 1000.0).unwrap()).unwrap(), 60);
        assert_eq!(subcell_count(&GridParams::new(1, 1000.0).unwrap()).unwrap(), 6);
        assert_eq!(subcell_count(&GridParams::new(2, 1000.0).unwrap()).unwrap(), 18);
        let bad = GridParams { rings: 0, radius: 1000.0, cluster: 7 };
        assert!(subcell_count(&bad).is_err());
        assert!(GridParams::new(0, 1000.0).is_err());
        assert!(GridParams::new(2, -1.0).is_err());
        assert_eq!(GridParams::with_cluster(2, 1.0, 4), Err(GridError::UnsupportedCluster(4)));
    }

    #[test]
    fn ring_boundaries_and_polar_round_trip() {
        for h in 1..=6 {
            let g = grid(h);
            assert_eq!(g.polar(0).unwrap(), (0, 0.0));
            for i in 0..g.len() {
                let (ring, angle) = g.polar(i).unwrap();
                assert!((0.0..360.0).contains(&angle));
                if ring > 0 {
                    assert!(i >= ring_start(ring) && i < ring_start(ring + 1));
                }
                assert_eq!(g.index_of(ring, angle).unwrap().index(), i);
            }
            assert!(g.polar(g.len()).is_err());
        }
        let g = grid(4);
        assert_eq!(g.ring(SubcellId(6)), 1);
        assert_eq!(g.ring(SubcellId(7)), 2);
        assert_eq!(g.ring(SubcellId(18)), 2);
        assert_eq!(g.ring(SubcellId(19)), 3);
        // smallest ring-1 angle comes first
        assert!((g.angle(SubcellId(1)) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn ring_angles_distinct() {
        let g = grid(5);
        for h in 1..=5 {
            let angles: Vec<f64> = (ring_start(h)..ring_start(h + 1)).map(|i| g.angle(SubcellId(i))).collect();
            for w in angles.windows(2) {
                assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn positions_and_relay_distance() {
        let g = grid(4);
        assert_eq!(g.center_position(SubcellId::CENTER), Point { x: 0.0, y: 0.0 });
        let dr = 3f64.sqrt() * 125.0;
        assert!((g.relay_distance() - dr).abs() < 1e-12);
        assert!((g.relay_distance() - 216.506_350_946).abs() < 1e-6);
        for id in g.ids().filter(|id| g.ring(*id) == 1) {
            let p = g.center_position(id);
            assert!((p.distance(Point { x: 0.0, y: 0.0 }) - dr).abs() < 1e-9);
        }
        for id in g.ids() {
            for n in g.neighbors(id) {
                let d = g.center_position(id).distance(g.center_position(n));
                assert!((d - dr).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ranked_neighbors_toward_bs() {
        let g = grid(4);
        let dest = Destinations::base_station();
        for id in g.ids().filter(|id| g.ring(*id) == 1) {
            assert_eq!(g.neighbors_ranked(id, &dest)[0], SubcellId::CENTER);
        }
        let outer = g.ring_ids().find(|id| g.ring(*id) == 4).unwrap();
        assert!(g.neighbors_ranked(outer, &dest).len() < 6);
        for id in g.ring_ids() {
            let ranked = g.neighbors_ranked(id, &dest);
            for w in ranked.windows(2) {
                let (a, b) = (g.destination_distance_sq(w[0], &dest), g.destination_distance_sq(w[1], &dest));
                assert!(a < b || (a == b && w[0] < w[1]));
            }
            for n in ranked {
                assert!((g.interference_distance(id, n).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ap_ranked_first_when_adjacent() {
        let g = grid(4);
        let ap = g.snap(3, 250.0).unwrap().id;
        let dest = Destinations::base_station().with_ap(&g, ap).unwrap();
        for n in g.neighbors(ap) {
            if n == SubcellId::CENTER {
                continue;
            }
            assert_eq!(g.neighbors_ranked(n, &dest)[0], ap);
        }
    }

    #[test]
    fn interference_distance_cases() {
        let g = grid(4);
        let a = g.index_of(2, 30.0).unwrap();
        let b = g.index_of(2, 210.0).unwrap();
        assert!((g.interference_distance(a, b).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(g.interference_distance(a, a), Err(GridError::ZeroDistance(a)));
        // cosine-theorem form on an axis
        let cos_form = (4.0f64 + 4.0 - 2.0 * 2.0 * 2.0 * (180f64.to_radians()).cos()).sqrt();
        assert!((cos_form - 4.0).abs() < 1e-12);
    }

    #[test]
    fn coloring_is_proper_and_balanced() {
        for h in 1..=6 {
            let g = grid(h);
            assert_eq!(g.cluster_color(SubcellId::CENTER), 0);
            for id in g.ids() {
                for n in g.neighbors(id) {
                    assert_ne!(g.cluster_color(id), g.cluster_color(n));
                }
                for other in g.ids() {
                    if other != id && g.cluster_color(other) == g.cluster_color(id) {
                        assert!(g.distance_sq(id, other) >= 7);
                    }
                }
            }
        }
        let g = grid(4);
        let mut classes = vec![0usize; 7];
        for id in g.ids() {
            classes[g.cluster_color(id) as usize] += 1;
        }
        assert_eq!(classes.iter().sum::<usize>(), 61);
        assert_eq!(classes, vec![7, 9, 9, 9, 9, 9, 9]);
        let g5 = grid(5);
        for c in 0..7 {
            let members = g5.ids().filter(|id| g5.cluster_color(*id) == c).count();
            assert_eq!(members, 13);
        }
        // (1, 2) is the reuse shift of this labelling
        let a = Axial::new(0, 0);
        assert_eq!(a.color(), a.offset(1, 2).color());
        // ring-1 rosette 1..=6 counter-clockwise from 30°
        for k in 1..=6 {
            assert_eq!(g.cluster_color(SubcellId(k)), k as u32);
        }
    }

    #[test]
    fn snapping_nearest_and_ties() {
        let g = grid(4);
        let s = g.snap(3, 250.0).unwrap();
        assert!(s.angle_error < 1.0 && !s.tie);
        let s = g.snap(3, 60.0).unwrap();
        assert!(s.tie);
        assert!(g.snap(5, 0.0).is_err());
        assert!(matches!(g.index_of(3, 250.0), Err(GridError::NoSuchSubcell { .. })));
    }

    #[test]
    fn destinations_validation() {
        let g = grid(2);
        let ring1 = SubcellId(1);
        let d = Destinations::base_station().with_ap(&g, ring1).unwrap();
        assert!(!d.coverage[&ring1].contains(&SubcellId::CENTER));
        d.validate(&g).unwrap();
        assert_eq!(d.targets().collect::<Vec<_>>(), vec![ring1, SubcellId::CENTER]);
        assert!(Destinations::default().validate(&g).is_err());
        assert!(Destinations::base_station().with_ap(&g, SubcellId::CENTER).is_err());
    }
}
