//! Price negotiation between the MNO and the SSO.
//!
//! Offers move on the grid `χ₀ + k·Δχ`. When `ΔU₁ > ΔU` the price drops,
//! otherwise it rises. A direction flip brackets the crossing: the midpoint
//! is evaluated and the best of the three points is returned.

use std::collections::{BTreeSet, HashSet};

use super::offload::OffsetEvaluator;
use super::{EconError, EconParams};
use crate::grid::SubcellId;

#[derive(Debug, Clone, PartialEq)]
pub enum NegotiationMode {
    /// The offload set is fixed and only the price moves.
    PriceOnly,
    /// The set also moves: one user leaves when `ΔU₁ < ΔU`, one joins from
    /// `candidates` when `ΔU₁ > ΔU`.
    PriceAndSet { candidates: BTreeSet<SubcellId> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegotiationStep {
    pub iteration: usize,
    pub price: f64,
    pub delta_u: f64,
    pub delta_u1: f64,
    pub offload_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Offload,
    /// The agreed price exceeds the MNO revenue.
    NoOffload,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegotiationOutcome {
    pub price: f64,
    pub offload: BTreeSet<SubcellId>,
    pub delta_u: f64,
    pub delta_u1: f64,
    pub verdict: Verdict,
    pub iterations: usize,
    /// `|ΔU − ΔU₁| ≤ tol` at the returned point.
    pub converged: bool,
    /// The search ran into `0` or `price_cap` without a crossing.
    pub at_bound: bool,
    /// Price below the SSO revenue.
    pub below_rho1: bool,
    pub trace: Vec<NegotiationStep>,
}

struct Eval {
    price: f64,
    du: f64,
    du1: f64,
}

impl Eval {
    fn gap(&self) -> f64 {
        (self.du - self.du1).abs()
    }
}

fn evaluate<E: OffsetEvaluator + ?Sized>(e: &E, price: f64, set: &BTreeSet<SubcellId>) -> Result<Eval, EconError> {
    let (du, du1) = e.offsets(price, set)?;
    if !du.is_finite() || !du1.is_finite() {
        return Err(EconError::Degenerate(format!("non-finite offsets at price {price}")));
    }
    Ok(Eval { price, du, du1 })
}

fn finish(
    best: Eval,
    offload: BTreeSet<SubcellId>,
    econ: &EconParams,
    iterations: usize,
    at_bound: bool,
    trace: Vec<NegotiationStep>,
) -> NegotiationOutcome {
    let converged = best.gap() <= econ.tol;
    NegotiationOutcome {
        price: best.price,
        verdict: if best.price > econ.rho + 1e-12 { Verdict::NoOffload } else { Verdict::Offload },
        below_rho1: best.price < econ.rho1 - 1e-12,
        offload,
        delta_u: best.du,
        delta_u1: best.du1,
        iterations,
        converged,
        at_bound,
        trace,
    }
}

/// `ΔU(χ)` for a set, used to rank marginal users.
fn mno_offset<E: OffsetEvaluator + ?Sized>(e: &E, price: f64, set: &BTreeSet<SubcellId>) -> Result<f64, EconError> {
    Ok(e.offsets(price, set)?.0)
}

fn adjust_set<E: OffsetEvaluator + ?Sized>(
    e: &E,
    price: f64,
    set: &BTreeSet<SubcellId>,
    candidates: &BTreeSet<SubcellId>,
    grow: bool,
) -> Result<BTreeSet<SubcellId>, EconError> {
    let base = mno_offset(e, price, set)?;
    let mut best: Option<(f64, SubcellId)> = None;
    if grow {
        for &c in candidates.difference(set) {
            let mut s = set.clone();
            s.insert(c);
            let m = mno_offset(e, price, &s)? - base;
            if best.is_none_or(|(b, _)| m > b) {
                best = Some((m, c));
            }
        }
    } else if set.len() > 1 {
        for &c in set {
            let mut s = set.clone();
            s.remove(&c);
            let m = base - mno_offset(e, price, &s)?;
            if best.is_none_or(|(b, _)| m < b) {
                best = Some((m, c));
            }
        }
    }
    let mut out = set.clone();
    if let Some((_, c)) = best {
        if grow {
            out.insert(c);
        } else {
            out.remove(&c);
        }
    }
    Ok(out)
}

/// Runs the negotiation from `econ.initial_price` and the initial offload set.
pub fn negotiate<E: OffsetEvaluator + ?Sized>(
    evaluator: &E,
    initial: &BTreeSet<SubcellId>,
    mode: &NegotiationMode,
    econ: &EconParams,
) -> Result<NegotiationOutcome, EconError> {
    econ.validate()?;
    let step = econ.price_step;
    let price_at = |k: i64| ((econ.initial_price + k as f64 * step) * 1e12).round() / 1e12;
    let k_min = -((econ.initial_price / step + 1e-9).floor() as i64);
    let k_max = ((econ.price_cap - econ.initial_price) / step + 1e-9).floor() as i64;

    let mut k = 0i64;
    let mut set = initial.clone();
    let mut trace = Vec::new();
    let mut prev: Option<(i64, i64, BTreeSet<SubcellId>)> = None;
    let mut visited: HashSet<(i64, Vec<usize>)> = HashSet::new();
    let mut best_seen: Option<(Eval, BTreeSet<SubcellId>)> = None;

    for iteration in 0..econ.max_iterations {
        let cur = evaluate(evaluator, price_at(k), &set)?;
        trace.push(NegotiationStep {
            iteration,
            price: cur.price,
            delta_u: cur.du,
            delta_u1: cur.du1,
            offload_size: set.len(),
        });
        if cur.gap() <= econ.tol {
            return Ok(finish(cur, set, econ, iteration + 1, false, trace));
        }
        let dir: i64 = if cur.du1 > cur.du { -1 } else { 1 };

        if let Some((pk, pdir, pset)) = &prev {
            if *pdir != dir && *pset == set {
                let a = evaluate(evaluator, price_at(*pk), &set)?;
                let mid = evaluate(evaluator, 0.5 * (price_at(*pk) + cur.price), &set)?;
                let best = [a, mid, cur]
                    .into_iter()
                    .min_by(|x, y| x.gap().total_cmp(&y.gap()))
                    .expect("three candidates");
                return Ok(finish(best, set, econ, iteration + 1, false, trace));
            }
        }

        if let NegotiationMode::PriceAndSet { .. } = mode {
            let key = (k, set.iter().map(|u| u.0).collect::<Vec<_>>());
            if !visited.insert(key) {
                let (best, bset) = best_seen.expect("a visited state was recorded");
                return Ok(finish(best, bset, econ, iteration + 1, false, trace));
            }
            if best_seen.as_ref().is_none_or(|(b, _)| cur.gap() < b.gap()) {
                best_seen = Some((Eval { ..cur }, set.clone()));
            }
        }

        let next = k + dir;
        if next < k_min || next > k_max {
            return Ok(finish(cur, set, econ, iteration + 1, true, trace));
        }
        let old_set = set.clone();
        if let NegotiationMode::PriceAndSet { candidates } = mode {
            set = adjust_set(evaluator, price_at(k), &set, candidates, dir < 0)?;
        }
        prev = Some((k, dir, old_set));
        k = next;
    }
    Err(EconError::NonConvergence {
        iterations: econ.max_iterations,
        last_price: price_at(k),
        trace,
    })
}

/// `(χ, ΔU, ΔU₁)` over a list of prices.
pub fn price_sweep<E: OffsetEvaluator + ?Sized>(
    evaluator: &E,
    set: &BTreeSet<SubcellId>,
    prices: &[f64],
) -> Result<Vec<(f64, f64, f64)>, EconError> {
    prices
        .iter()
        .map(|&p| {
            let (du, du1) = evaluator.offsets(p, set)?;
            Ok((p, du, du1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Stub = fn(f64, &BTreeSet<SubcellId>) -> Result<(f64, f64), EconError>;

    fn linear(price: f64, _: &BTreeSet<SubcellId>) -> Result<(f64, f64), EconError> {
        Ok((3.0 - 2.0 * price, price))
    }

    fn one() -> BTreeSet<SubcellId> {
        [SubcellId(4)].into_iter().collect()
    }

    #[test]
    fn synthetic_stub_meets_at_one() {
        for start in [0.0, 0.37, 1.0, 2.5] {
            let econ = EconParams { initial_price: start, ..Default::default() };
            let out = negotiate(&(linear as Stub), &one(), &NegotiationMode::PriceOnly, &econ).unwrap();
            assert!((out.price - 1.0).abs() <= econ.price_step / 2.0 + 1e-12, "start {start}: {}", out.price);
            assert_eq!(out.verdict, Verdict::Offload);
            assert!(out.below_rho1);
        }
        let exact = negotiate(&(linear as Stub), &one(), &NegotiationMode::PriceOnly, &EconParams::default()).unwrap();
        assert!(exact.converged);
        assert_eq!(exact.iterations, 1);
    }

    #[test]
    fn crossing_above_rho_is_no_offload() {
        let f = |p: f64, _: &BTreeSet<SubcellId>| Ok((8.0 - p, p));
        let out = negotiate(&f, &one(), &NegotiationMode::PriceOnly, &EconParams::default()).unwrap();
        assert!((out.price - 4.0).abs() < 0.006);
        assert_eq!(out.verdict, Verdict::NoOffload);
        assert!(!out.at_bound);
    }

    #[test]
    fn bounds_and_non_convergence() {
        let up = |p: f64, _: &BTreeSet<SubcellId>| Ok((100.0 - p, p));
        let out = negotiate(&up, &one(), &NegotiationMode::PriceOnly, &EconParams::default()).unwrap();
        assert!(out.at_bound);
        assert!((out.price - 6.0).abs() < 1e-9);

        let econ = EconParams { max_iterations: 5, ..Default::default() };
        match negotiate(&up, &one(), &NegotiationMode::PriceOnly, &econ) {
            Err(EconError::NonConvergence { iterations, trace, .. }) => {
                assert_eq!(iterations, 5);
                assert_eq!(trace.len(), 5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn set_mode_settles() {
        let cands: BTreeSet<SubcellId> = (1..=4).map(SubcellId).collect();
        // each offloaded user adds one unit to the MNO side
        let f = |p: f64, s: &BTreeSet<SubcellId>| {
            let n = s.len() as f64;
            Ok((n + 1.0 - p * n, p * n))
        };
        let out =
            negotiate(&f, &one(), &NegotiationMode::PriceAndSet { candidates: cands.clone() }, &EconParams::default())
                .unwrap();
        assert!(!out.offload.is_empty());
        assert!(out.offload.is_subset(&cands.union(&one()).copied().collect()));
        let (du, du1) = f(out.price, &out.offload).unwrap();
        assert!((du - du1).abs() < 0.05);
    }

    #[test]
    fn sweep_lists_offsets() {
        let rows = price_sweep(&(linear as Stub), &one(), &[0.0, 1.0]).unwrap();
        assert_eq!(rows, vec![(0.0, 3.0, 0.0), (1.0, 1.0, 1.0)]);
    }

    proptest! {
        #[test]
        fn affine_offsets_match_closed_form(a in -2.0f64..6.0, b in -2.0f64..2.0, s in 0.2f64..3.0) {
            let f = move |p: f64, _: &BTreeSet<SubcellId>| Ok((a + 2.0 * s - p * s, b + p * s));
            let econ = EconParams::default();
            let exact = 1.0 + (a - b) / (2.0 * s);
            let out = negotiate(&f, &one(), &NegotiationMode::PriceOnly, &econ).unwrap();
            if (0.0..=econ.price_cap).contains(&exact) {
                prop_assert!((out.price - exact).abs() <= econ.price_step / 2.0 + 1e-9);
            } else {
                prop_assert!(out.at_bound);
            }
        }
    }
}
