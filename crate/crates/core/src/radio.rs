//! Link SINR, Shannon capacity and the receiver-sensitivity power rule.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::grid::{GridParams, SubcellGrid, SubcellId};

/// Default receiver sensitivity in watts.
pub const DEFAULT_SENSITIVITY: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("invalid radio parameters: {0}")]
    InvalidParams(String),
    #[error("link {tx} -> {rx} is not between adjacent subcells")]
    NotAdjacent { tx: SubcellId, rx: SubcellId },
    #[error("interferer {0} is co-located with the receiver")]
    CoLocatedInterferer(SubcellId),
    #[error("negative SINR {0}")]
    NegativeSinr(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    /// Transmit power, watts.
    pub power: f64,
    pub path_loss_exponent: f64,
    /// Background noise power, uniform over receivers.
    pub noise: f64,
    /// Optional per-ring override of `noise`, indexed by ring.
    pub ring_noise: Option<Vec<f64>>,
    /// Receiver sensitivity ε, watts.
    pub sensitivity: f64,
    pub log_base: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            power: 0.15,
            path_loss_exponent: 2.0,
            noise: 1e-4,
            ring_noise: None,
            sensitivity: DEFAULT_SENSITIVITY,
            log_base: 2.0,
        }
    }
}

impl RadioParams {
    pub fn with_power(power: f64) -> Self {
        RadioParams { power, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        let bad = |m: String| Err(RadioError::InvalidParams(m));
        if !(self.power > 0.0 && self.power.is_finite()) {
            return bad(format!("power must be > 0, got {}", self.power));
        }
        if !(self.path_loss_exponent >= 0.0 && self.path_loss_exponent.is_finite()) {
            return bad(format!("path-loss exponent must be >= 0, got {}", self.path_loss_exponent));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be >= 0, got {}", self.noise));
        }
        if let Some(rn) = &self.ring_noise {
            if rn.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
                return bad("per-ring noise must be >= 0".into());
            }
        }
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            return bad(format!("sensitivity must be > 0, got {}", self.sensitivity));
        }
        if !(self.log_base > 1.0 && self.log_base.is_finite()) {
            return bad(format!("log base must be > 1, got {}", self.log_base));
        }
        Ok(())
    }

    /// Noise at a receiver in ring `ring`.
    pub fn noise_at(&self, ring: u32) -> f64 {
        self.ring_noise
            .as_ref()
            .and_then(|rn| rn.get(ring as usize).copied())
            .unwrap_or(self.noise)
    }
}

/// A relaying link and the co-channel transmitters active with it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkContext {
    pub tx: SubcellId,
    pub rx: SubcellId,
    pub interferers: BTreeSet<SubcellId>,
}

impl LinkContext {
    pub fn new(
        grid: &SubcellGrid,
        tx: SubcellId,
        rx: SubcellId,
        interferers: impl IntoIterator<Item = SubcellId>,
    ) -> Result<Self, RadioError> {
        if !grid.are_adjacent(tx, rx) {
            return Err(RadioError::NotAdjacent { tx, rx });
        }
        let mut interferers: BTreeSet<SubcellId> = interferers.into_iter().collect();
        interferers.remove(&tx);
        Ok(LinkContext { tx, rx, interferers })
    }
}

/// Interference distances `Z_k` of every interferer to the receiver.
pub fn interference_distances(ctx: &LinkContext, grid: &SubcellGrid) -> Result<Vec<f64>, RadioError> {
    ctx.interferers
        .iter()
        .map(|&k| {
            grid.interference_distance(k, ctx.rx)
                .map_err(|_| RadioError::CoLocatedInterferer(k))
        })
        .collect()
}

/// SINR from interference distances, in normalised form:
/// `P / (Σ P/Z_k^α + noise·d_r^α)`.
pub fn sinr_from_distances(z: &[f64], noise: f64, relay_distance: f64, radio: &RadioParams) -> f64 {
    let p = radio.power;
    let a = radio.path_loss_exponent;
    let interference: f64 = z.iter().map(|zk| p / zk.powf(a)).sum();
    p / (interference + noise * relay_distance.powf(a))
}

/// SINR at the receiver of `ctx`.
pub fn link_sinr(ctx: &LinkContext, radio: &RadioParams, grid: &SubcellGrid) -> Result<f64, RadioError> {
    let z = interference_distances(ctx, grid)?;
    let noise = radio.noise_at(grid.ring(ctx.rx));
    Ok(sinr_from_distances(&z, noise, grid.relay_distance(), radio))
}

/// Channel gain of a relaying hop, `G = (2H/(√3R))^α`.
pub fn relay_gain(params: &GridParams, alpha: f64) -> f64 {
    (2.0 * params.rings as f64 / (3f64.sqrt() * params.radius)).powf(alpha)
}

/// Interference power from a transmitter at distance `Z·d_r`:
/// `(2H/(√3R·Z))^α · P`.
pub fn interference_power(params: &GridParams, alpha: f64, z: f64, power: f64) -> f64 {
    (2.0 * params.rings as f64 / (3f64.sqrt() * params.radius * z)).powf(alpha) * power
}

/// SINR in gain form, `G·P / (Σ I_k + noise)`.
pub fn sinr_gain_form(gain: f64, power: f64, interference: &[f64], noise: f64) -> f64 {
    gain * power / (interference.iter().sum::<f64>() + noise)
}

/// `log_base(1 + SINR)`.
pub fn link_capacity(sinr: f64, radio: &RadioParams) -> Result<f64, RadioError> {
    if sinr.is_nan() || sinr < 0.0 {
        return Err(RadioError::NegativeSinr(sinr));
    }
    Ok((1.0 + sinr).ln() / radio.log_base.ln())
}

/// Minimum transmit power reaching the sensitivity threshold over one hop.
pub fn min_power(params: &GridParams, sensitivity: f64, alpha: f64) -> f64 {
    sensitivity * params.relay_distance().powf(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(h: u32) -> SubcellGrid {
        SubcellGrid::new(GridParams::new(h, 1000.0).unwrap()).unwrap()
    }

    #[test]
    fn noise_limited_sinr() {
        let g = grid(4);
        let ctx = LinkContext::new(&g, SubcellId(1), SubcellId(0), []).unwrap();
        let radio = RadioParams::with_power(0.15);
        let s = link_sinr(&ctx, &radio, &g).unwrap();
        let dr = 3f64.sqrt() * 125.0;
        assert_relative_eq!(s, 0.15 / (1e-4 * dr * dr), max_relative = 1e-14);
        assert!((s - 0.032).abs() < 5e-4);
    }

    #[test]
    fn interference_limited_sinr() {
        let radio = RadioParams { noise: 0.0, ..RadioParams::with_power(3.7) };
        assert_relative_eq!(sinr_from_distances(&[1.0], 0.0, 216.5, &radio), 1.0);
        assert_relative_eq!(sinr_from_distances(&[2.0], 0.0, 216.5, &radio), 4.0);
    }

    #[test]
    fn link_context_checks() {
        let g = grid(2);
        assert!(matches!(
            LinkContext::new(&g, SubcellId(0), SubcellId(8), []),
            Err(RadioError::NotAdjacent { .. })
        ));
        let ctx = LinkContext::new(&g, SubcellId(1), SubcellId(0), [SubcellId(1), SubcellId(0)]).unwrap();
        assert!(!ctx.interferers.contains(&SubcellId(1)));
        assert_eq!(
            link_sinr(&ctx, &RadioParams::default(), &g),
            Err(RadioError::CoLocatedInterferer(SubcellId(0)))
        );
    }

    #[test]
    fn capacity_values() {
        let r = RadioParams::default();
        assert_eq!(link_capacity(0.0, &r).unwrap(), 0.0);
        assert_relative_eq!(link_capacity(1.0, &r).unwrap(), 1.0);
        assert_relative_eq!(link_capacity(3.0, &r).unwrap(), 2.0);
        assert!(link_capacity(-0.1, &r).is_err());
        let caps: Vec<f64> = (0..50).map(|k| link_capacity(k as f64 * 0.4, &r).unwrap()).collect();
        for w in caps.windows(3) {
            assert!(w[1] > w[0]);
            assert!(w[2] - w[1] <= w[1] - w[0] + 1e-15);
        }
    }

    #[test]
    fn minimum_power() {
        let unit = GridParams::new(1, 2.0 / 3f64.sqrt()).unwrap();
        assert_relative_eq!(min_power(&unit, 1.0, 2.0), 1.0, max_relative = 1e-14);
        let p4 = GridParams::new(4, 1000.0).unwrap();
        let p8 = GridParams::new(8, 1000.0).unwrap();
        assert_relative_eq!(min_power(&p8, 1e-6, 2.0), min_power(&p4, 1e-6, 2.0) / 4.0, max_relative = 1e-14);
        assert!((min_power(&p4, 1e-6, 2.0) - 0.0469).abs() < 1e-4);
    }

    #[test]
    fn gain_form_matches_direct_form() {
        for h in 1..=6 {
            let g = grid(h);
            let radio = RadioParams::with_power(0.2);
            let rx = SubcellId(0);
            let others: Vec<SubcellId> = g.ring_ids().filter(|id| g.ring(*id) >= 2).step_by(3).collect();
            let ctx = LinkContext::new(&g, SubcellId(1), rx, others).unwrap();
            let direct = link_sinr(&ctx, &radio, &g).unwrap();
            let gain = relay_gain(g.params(), 2.0);
            let z = interference_distances(&ctx, &g).unwrap();
            let i: Vec<f64> = z.iter().map(|zk| interference_power(g.params(), 2.0, *zk, radio.power)).collect();
            let absorbed = sinr_gain_form(gain, radio.power, &i, radio.noise);
            assert_relative_eq!(direct, absorbed, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn adding_interferer_lowers_sinr(extra in 2usize..19, power in 0.01f64..1.0) {
            let g = grid(2);
            let radio = RadioParams::with_power(power);
            let base = LinkContext::new(&g, SubcellId(1), SubcellId(0), []).unwrap();
            let more = LinkContext::new(&g, SubcellId(1), SubcellId(0), [SubcellId(extra)]).unwrap();
            let (a, b) = (link_sinr(&base, &radio, &g).unwrap(), link_sinr(&more, &radio, &g).unwrap());
            prop_assert!(b < a);
        }
    }
}
