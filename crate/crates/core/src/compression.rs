//! Network state vectors and their compression.
//!
//! The full vector carries every observed quantity (subcell count, operator
//! presence, availability, gain, interference, traffic ratio, beamwidth,
//! visibility, relay reward). The compressed vector keeps only
//! `(H, n_o, p, ζ, φ)`; everything else is recomputed from those and the
//! transmit power.

use thiserror::Error;

use crate::grid::{GridParams, SubcellId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompressionError {
    #[error("probability {name} = {value} outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("traffic ratio ζ = {0} outside [0, 1]")]
    TrafficRatioOutOfRange(f64),
    #[error("beamwidth φ = {0} outside (0, 360]")]
    BeamwidthOutOfRange(f64),
    #[error("subcell count N = {n} inconsistent with H = {rings} (expected {expected})")]
    InconsistentN { n: usize, rings: u32, expected: usize },
    #[error("invalid state vector: {0}")]
    Invalid(String),
}

fn check_prob(name: &'static str, value: f64) -> Result<(), CompressionError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(CompressionError::ProbabilityOutOfRange { name, value })
    }
}

/// `p = 1 − ∏ (1 − p_a·p_φ·p_oi)`.
pub fn aggregate_availability(p_a: f64, p_phi: f64, p_o: &[f64]) -> Result<f64, CompressionError> {
    check_prob("p_a", p_a)?;
    check_prob("p_phi", p_phi)?;
    for &p in p_o {
        check_prob("p_o", p)?;
    }
    let miss: f64 = p_o.iter().map(|po| 1.0 - p_a * p_phi * po).product();
    Ok(1.0 - miss)
}

/// `p_a = 1 − ζ`.
pub fn availability_from_traffic(zeta: f64) -> Result<f64, CompressionError> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(CompressionError::TrafficRatioOutOfRange(zeta));
    }
    Ok(1.0 - zeta)
}

/// `p_φ = φ / 360`.
pub fn visibility_from_beamwidth(phi: f64) -> Result<f64, CompressionError> {
    if !(phi > 0.0 && phi <= 360.0) {
        return Err(CompressionError::BeamwidthOutOfRange(phi));
    }
    Ok(phi / 360.0)
}

/// `p_oi = n_oi / (3H(H+1))`.
pub fn presence_from_terminals(n_o: &[f64], rings: u32) -> Result<Vec<f64>, CompressionError> {
    let n = 3.0 * rings as f64 * (rings as f64 + 1.0);
    n_o.iter()
        .map(|&k| {
            let p = k / n;
            check_prob("p_o", p).map(|_| p)
        })
        .collect()
}

/// `G = (2H/(√3R))^α`.
pub fn reconstruct_gain(rings: u32, radius: f64, alpha: f64) -> f64 {
    (2.0 * rings as f64 / (3f64.sqrt() * radius)).powf(alpha)
}

/// `w = γ·ζ`.
pub fn reconstruct_reward(gamma: f64, zeta: f64) -> f64 {
    gamma * zeta
}

/// Interference observed at the receiver of one relaying link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkInterference {
    pub tx: SubcellId,
    pub rx: SubcellId,
    /// Received power from each co-channel transmitter.
    pub powers: Vec<f64>,
}

impl LinkInterference {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// The uncompressed network state.
#[derive(Debug, Clone, PartialEq)]
pub struct FullStateVector {
    pub rings: u32,
    pub n: usize,
    pub n_o: Vec<f64>,
    pub p_o: Vec<f64>,
    pub p_a: f64,
    pub gain: f64,
    pub interference: Vec<LinkInterference>,
    pub zeta: f64,
    pub phi: f64,
    pub p_phi: f64,
    pub reward: f64,
}

impl FullStateVector {
    pub fn validate(&self) -> Result<(), CompressionError> {
        if self.rings < 1 {
            return Err(CompressionError::Invalid("H must be >= 1".into()));
        }
        let expected = 3 * self.rings as usize * (self.rings as usize + 1);
        if self.n != expected {
            return Err(CompressionError::InconsistentN { n: self.n, rings: self.rings, expected });
        }
        if self.n_o.is_empty() || self.n_o.len() != self.p_o.len() {
            return Err(CompressionError::Invalid("need one presence probability per operator".into()));
        }
        for &p in &self.p_o {
            check_prob("p_o", p)?;
        }
        check_prob("p_a", self.p_a)?;
        check_prob("p_phi", self.p_phi)?;
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(CompressionError::TrafficRatioOutOfRange(self.zeta));
        }
        if !(self.phi > 0.0 && self.phi <= 360.0) {
            return Err(CompressionError::BeamwidthOutOfRange(self.phi));
        }
        Ok(())
    }

    /// Aggregated availability from the explicit probabilities.
    pub fn availability(&self) -> Result<f64, CompressionError> {
        aggregate_availability(self.p_a, self.p_phi, &self.p_o)
    }
}

/// The compressed network state `(H, n_o, p, ζ, φ)` plus the constants needed
/// to expand it again.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedStateVector {
    pub rings: u32,
    pub n_o: Vec<f64>,
    pub p: f64,
    pub zeta: f64,
    pub phi: f64,
    pub gamma: f64,
    pub power: f64,
}

impl CompressedStateVector {
    /// Build from primitive inputs, computing `p` by aggregation.
    pub fn from_inputs(
        rings: u32,
        n_o: Vec<f64>,
        zeta: f64,
        phi: f64,
        gamma: f64,
        power: f64,
    ) -> Result<Self, CompressionError> {
        if rings < 1 {
            return Err(CompressionError::Invalid("H must be >= 1".into()));
        }
        if n_o.is_empty() {
            return Err(CompressionError::Invalid("at least one operator required".into()));
        }
        let p_a = availability_from_traffic(zeta)?;
        let p_phi = visibility_from_beamwidth(phi)?;
        let p_o = presence_from_terminals(&n_o, rings)?;
        let p = aggregate_availability(p_a, p_phi, &p_o)?;
        Ok(CompressedStateVector { rings, n_o, p, zeta, phi, gamma, power })
    }

    /// Check that `p` agrees with its aggregation formula.
    pub fn is_consistent(&self) -> bool {
        Self::from_inputs(self.rings, self.n_o.clone(), self.zeta, self.phi, self.gamma, self.power)
            .map(|v| (v.p - self.p).abs() <= 1e-12)
            .unwrap_or(false)
    }

    pub fn gain(&self, radius: f64, alpha: f64) -> f64 {
        reconstruct_gain(self.rings, radius, alpha)
    }

    pub fn reward(&self) -> f64 {
        reconstruct_reward(self.gamma, self.zeta)
    }
}

/// Compress a full vector. `G`, `I` and `w` are dropped; `p` is recomputed
/// from `(n_o, ζ, φ, H)`.
pub fn absorb(
    full: &FullStateVector,
    params: &GridParams,
    gamma: f64,
    power: f64,
) -> Result<CompressedStateVector, CompressionError> {
    full.validate()?;
    if params.rings != full.rings {
        return Err(CompressionError::InconsistentN {
            n: full.n,
            rings: params.rings,
            expected: params.subcell_count(),
        });
    }
    CompressedStateVector::from_inputs(full.rings, full.n_o.clone(), full.zeta, full.phi, gamma, power)
}

/// One step of the topology controller: move to a neighbouring `H` if it has
/// strictly higher utility. When both neighbours improve the steeper one wins,
/// ties going to `H + 1`.
pub fn topology_step<F: FnMut(u32) -> f64>(current: u32, mut utility: F) -> u32 {
    let here = utility(current);
    let up = utility(current + 1);
    let down = (current > 1).then(|| utility(current - 1));
    let up_gain = up - here;
    let down_gain = down.map(|d| d - here);
    match down_gain {
        Some(dg) if dg > 0.0 && dg > up_gain => current - 1,
        _ if up_gain > 0.0 => current + 1,
        _ => current,
    }
}

/// Iterate [`topology_step`] until a fixed point, or `max_steps`.
pub fn hill_climb<F: FnMut(u32) -> f64>(start: u32, mut utility: F, max_steps: usize) -> u32 {
    let mut h = start.max(1);
    for _ in 0..max_steps {
        let next = topology_step(h, &mut utility);
        if next == h {
            break;
        }
        h = next;
    }
    h
}
