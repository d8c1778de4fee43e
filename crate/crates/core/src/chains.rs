//! Absorbing Markov chains: canonical form, hitting-time moments, absorption
//! probabilities and a seeded random-walk oracle.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

const ROW_TOL: f64 = 1e-12;

/// Walk partitions used by [`simulate_walks`]; fixed so results do not depend
/// on the thread count.
const WALK_PARTITIONS: u64 = 16;

/// Hard cap on steps per simulated walk.
const MAX_WALK_STEPS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("row {row} is not stochastic (sum {sum})")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("negative or non-finite probability at ({row}, {col})")]
    InvalidEntry { row: usize, col: usize },
    #[error("absorbing state {0} is not a unit self-loop")]
    NotAbsorbing(usize),
    #[error("no absorbing state is reachable from transient state {0}")]
    UnreachableAbsorption(usize),
    #[error("I - Q is singular")]
    SingularSystem,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid initial distribution: {0}")]
    InvalidDistribution(String),
    #[error("walk from state {0} exceeded the step limit")]
    WalkLimit(usize),
}

/// A row-stochastic chain over `n` states, some of them absorbing.
#[derive(Debug, Clone)]
pub struct AbsorbingChain {
    matrix: DMatrix<f64>,
    absorbing: Vec<usize>,
    transient: Vec<usize>,
    /// Dwell time per transient state, in `transient` order.
    dwell: Vec<f64>,
}

impl AbsorbingChain {
    /// Build from a full transition matrix. `dwell` is indexed like `transient`,
    /// which lists every non-absorbing state in ascending order.
    pub fn new(matrix: DMatrix<f64>, absorbing: Vec<usize>, dwell: Vec<f64>) -> Result<Self, ChainError> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(ChainError::DimensionMismatch(format!("{}x{} matrix", n, matrix.ncols())));
        }
        if absorbing.iter().any(|&a| a >= n) {
            return Err(ChainError::DimensionMismatch("absorbing index out of range".into()));
        }
        let transient: Vec<usize> = (0..n).filter(|s| !absorbing.contains(s)).collect();
        if dwell.len() != transient.len() {
            return Err(ChainError::DimensionMismatch(format!(
                "{} dwell times for {} transient states",
                dwell.len(),
                transient.len()
            )));
        }
        if dwell.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(ChainError::DimensionMismatch("dwell times must be positive".into()));
        }
        let chain = AbsorbingChain { matrix, absorbing, transient, dwell };
        chain.validate()?;
        Ok(chain)
    }

    /// Build directly from canonical blocks `Q` (transient × transient) and
    /// `R` (transient × absorbing). Transient states come first.
    pub fn from_blocks(q: DMatrix<f64>, r: DMatrix<f64>, dwell: Vec<f64>) -> Result<Self, ChainError> {
        let t = q.nrows();
        let a = r.ncols();
        if q.ncols() != t || r.nrows() != t {
            return Err(ChainError::DimensionMismatch("Q and R shapes disagree".into()));
        }
        let mut m = DMatrix::zeros(t + a, t + a);
        m.view_mut((0, 0), (t, t)).copy_from(&q);
        m.view_mut((0, t), (t, a)).copy_from(&r);
        for k in 0..a {
            m[(t + k, t + k)] = 1.0;
        }
        Self::new(m, (t..t + a).collect(), dwell)
    }

    fn validate(&self) -> Result<(), ChainError> {
        let n = self.matrix.nrows();
        for row in 0..n {
            let mut sum = 0.0;
            for col in 0..n {
                let v = self.matrix[(row, col)];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(ChainError::InvalidEntry { row, col });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(ChainError::NonStochasticRow { row, sum });
            }
        }
        for &a in &self.absorbing {
            if self.matrix[(a, a)] != 1.0 {
                return Err(ChainError::NotAbsorbing(a));
            }
        }
        // backward reachability from the absorbing set
        let mut reaches = vec![false; n];
        for &a in &self.absorbing {
            reaches[a] = true;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if !reaches[s] && (0..n).any(|t| reaches[t] && self.matrix[(s, t)] > 0.0) {
                    reaches[s] = true;
                    changed = true;
                }
            }
        }
        if let Some(&s) = self.transient.iter().find(|&&s| !reaches[s]) {
            return Err(ChainError::UnreachableAbsorption(s));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn absorbing_states(&self) -> &[usize] {
        &self.absorbing
    }

    pub fn transient_states(&self) -> &[usize] {
        &self.transient
    }

    pub fn dwell(&self) -> &[f64] {
        &self.dwell
    }

    pub fn transient_count(&self) -> usize {
        self.transient.len()
    }

    pub fn absorbing_count(&self) -> usize {
        self.absorbing.len()
    }

    /// Position of a full-matrix state among the transient states.
    pub fn transient_position(&self, state: usize) -> Option<usize> {
        self.transient.binary_search(&state).ok()
    }

    /// `(Q, R)` with rows and columns in `transient` / `absorbing` order.
    pub fn canonical_form(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let t = self.transient.len();
        let a = self.absorbing.len();
        let q = DMatrix::from_fn(t, t, |i, j| self.matrix[(self.transient[i], self.transient[j])]);
        let r = DMatrix::from_fn(t, a, |i, j| self.matrix[(self.transient[i], self.absorbing[j])]);
        (q, r)
    }

    /// Whether every transient state has the same dwell time.
    pub fn uniform_dwell(&self) -> Option<f64> {
        let first = *self.dwell.first()?;
        self.dwell.iter().all(|d| *d == first).then_some(first)
    }
}

/// Hitting-time and absorption statistics of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStatistics {
    pub tau: Vec<f64>,
    pub var_tau: Vec<f64>,
    /// Transient × absorbing absorption probabilities.
    pub b: Vec<Vec<f64>>,
    pub tau_a: f64,
    pub p_ac: Vec<f64>,
}

fn check_distribution(f: &[f64], n: usize) -> Result<(), ChainError> {
    if f.len() != n {
        return Err(ChainError::DimensionMismatch(format!("f has {} entries for {} states", f.len(), n)));
    }
    if f.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(ChainError::InvalidDistribution("negative entry".into()));
    }
    let s: f64 = f.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(ChainError::InvalidDistribution(format!("sums to {s}")));
    }
    Ok(())
}

/// Uniform initial distribution over `n` transient states.
pub fn uniform_distribution(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Fundamental-matrix statistics, via LU solves of `(I - Q)`.
pub fn absorption_statistics(chain: &AbsorbingChain, f: &[f64]) -> Result<ChainStatistics, ChainError> {
    let t = chain.transient_count();
    check_distribution(f, t)?;
    let (q, r) = chain.canonical_form();
    let lu = (DMatrix::identity(t, t) - &q).lu();
    let solve = |rhs: &DMatrix<f64>| -> Result<DMatrix<f64>, ChainError> {
        let x = lu.solve(rhs).ok_or(ChainError::SingularSystem)?;
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(ChainError::SingularSystem)
        }
    };
    let e = DMatrix::from_column_slice(t, 1, chain.dwell());
    let tau = solve(&e)?;
    let var = match chain.uniform_dwell() {
        Some(dwell) => {
            // T²[(2N - I)N1 - (N1)²]
            let n1 = &tau / dwell;
            let n_n1 = solve(&n1)?;
            DVector::from_fn(t, |i, _| dwell * dwell * (2.0 * n_n1[i] - n1[i] - n1[i] * n1[i]))
        }
        None => {
            // N e² + 2 N T Q N e - (N e)²
            let tq_tau = DMatrix::from_fn(t, 1, |i, _| chain.dwell()[i] * (q.row(i) * &tau)[0]);
            let e_sq = e.map(|v| v * v);
            let second = solve(&(e_sq + 2.0 * tq_tau))?;
            DVector::from_fn(t, |i, _| second[i] - tau[i] * tau[i])
        }
    };
    let b = solve(&r)?;
    let tau_v: Vec<f64> = tau.column(0).iter().copied().collect();
    let tau_a = f.iter().zip(&tau_v).map(|(fi, ti)| fi * ti).sum();
    let a = chain.absorbing_count();
    let p_ac = (0..a).map(|j| (0..t).map(|i| f[i] * b[(i, j)]).sum()).collect();
    Ok(ChainStatistics {
        tau: tau_v,
        var_tau: var.iter().map(|v| v.max(0.0)).collect(),
        b: (0..t).map(|i| b.row(i).iter().copied().collect()).collect(),
        tau_a,
        p_ac,
    })
}

/// Empirical statistics from seeded random walks.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkStatistics {
    pub n_walks: usize,
    pub tau: Vec<f64>,
    pub var_tau: Vec<f64>,
    /// Empirical absorption frequencies, transient × absorbing.
    pub b: Vec<Vec<f64>>,
    pub tau_a: f64,
    pub p_ac: Vec<f64>,
}

impl WalkStatistics {
    /// Standard error of the mean time from state `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        (self.var_tau[i] / self.n_walks as f64).sqrt()
    }
}

#[derive(Clone)]
struct Accumulator {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    hits: Vec<Vec<u64>>,
}

impl Accumulator {
    fn new(t: usize, a: usize) -> Self {
        Accumulator { sum: vec![0.0; t], sum_sq: vec![0.0; t], hits: vec![vec![0; a]; t] }
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            for j in 0..self.hits[i].len() {
                self.hits[i][j] += other.hits[i][j];
            }
        }
        self
    }
}

/// Cumulative transition rows over the full state space for sampling.
fn cumulative_rows(chain: &AbsorbingChain) -> Vec<Vec<(usize, f64)>> {
    let m = chain.matrix();
    (0..m.nrows())
        .map(|s| {
            let mut acc = 0.0;
            (0..m.ncols())
                .filter(|&c| m[(s, c)] > 0.0)
                .map(|c| {
                    acc += m[(s, c)];
                    (c, acc)
                })
                .collect()
        })
        .collect()
}

/// Run `n_walks` walks from every transient state. Deterministic for a fixed
/// seed regardless of thread scheduling.
pub fn simulate_walks(
    chain: &AbsorbingChain,
    f: &[f64],
    n_walks: usize,
    seed: u64,
) -> Result<WalkStatistics, ChainError> {
    let t = chain.transient_count();
    let a = chain.absorbing_count();
    check_distribution(f, t)?;
    if n_walks == 0 {
        return Err(ChainError::DimensionMismatch("n_walks must be >= 1".into()));
    }
    let rows = cumulative_rows(chain);
    let mut absorbing_pos = vec![None; chain.matrix().nrows()];
    for (k, &s) in chain.absorbing_states().iter().enumerate() {
        absorbing_pos[s] = Some(k);
    }
    let mut dwell_of = vec![0.0; chain.matrix().nrows()];
    for (k, &s) in chain.transient_states().iter().enumerate() {
        dwell_of[s] = chain.dwell()[k];
    }

    let per = n_walks as u64 / WALK_PARTITIONS;
    let extra = n_walks as u64 % WALK_PARTITIONS;
    let parts: Vec<Result<Accumulator, ChainError>> = (0..WALK_PARTITIONS)
        .into_par_iter()
        .map(|part| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(part);
            let count = per + u64::from(part < extra);
            let mut acc = Accumulator::new(t, a);
            for (i, &start) in chain.transient_states().iter().enumerate() {
                for _ in 0..count {
                    let mut state = start;
                    let mut time = 0.0;
                    let mut steps = 0usize;
                    let sink = loop {
                        if let Some(k) = absorbing_pos[state] {
                            break k;
                        }
                        time += dwell_of[state];
                        let u: f64 = rng.gen();
                        let row = &rows[state];
                        state = row
                            .iter()
                            .find(|(_, c)| u < *c)
                            .map(|(s, _)| *s)
                            .unwrap_or_else(|| row.last().expect("stochastic row").0);
                        steps += 1;
                        if steps > MAX_WALK_STEPS {
                            return Err(ChainError::WalkLimit(start));
                        }
                    };
                    acc.sum[i] += time;
                    acc.sum_sq[i] += time * time;
                    acc.hits[i][sink] += 1;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accumulator::new(t, a);
    for part in parts {
        total = total.merge(part?);
    }
    let n = n_walks as f64;
    let tau: Vec<f64> = total.sum.iter().map(|s| s / n).collect();
    let var_tau: Vec<f64> = (0..t)
        .map(|i| if n_walks > 1 { (total.sum_sq[i] - n * tau[i] * tau[i]).max(0.0) / (n - 1.0) } else { 0.0 })
        .collect();
    let b: Vec<Vec<f64>> = total.hits.iter().map(|h| h.iter().map(|c| *c as f64 / n).collect()).collect();
    let tau_a = f.iter().zip(&tau).map(|(fi, ti)| fi * ti).sum();
    let p_ac = (0..a).map(|j| (0..t).map(|i| f[i] * b[i][j]).sum()).collect();
    Ok(WalkStatistics { n_walks, tau, var_tau, b, tau_a, p_ac })
}
