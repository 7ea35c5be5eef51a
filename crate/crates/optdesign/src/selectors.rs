//! Selection policies: GO, SAL, and baselines.
//!
//! Every policy consumes the same pool/test-set view and returns one chosen
//! unlabeled index per round together with its per-candidate scores. Ties are
//! always broken toward the lowest index so runs are reproducible.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::oracles::PredictiveOracle;
use crate::posterior::{LabeledExample, PosteriorState};
use crate::{real, Error, Real, Result};

/// Indexed training features with labeled/unlabeled partitions and history.
#[derive(Clone, Debug)]
pub struct Pool<T: Real> {
    features: Vec<DVector<T>>,
    labeled: Vec<usize>,
    unlabeled: Vec<bool>,
    history: Vec<LabeledExample<T>>,
}

impl<T: Real> Pool<T> {
    pub fn new(features: Vec<DVector<T>>) -> Self {
        let n = features.len();
        Self {
            features,
            labeled: Vec::new(),
            unlabeled: vec![true; n],
            history: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, i: usize) -> &DVector<T> {
        &self.features[i]
    }

    pub fn features(&self) -> &[DVector<T>] {
        &self.features
    }

    /// Labeled indices in acquisition order.
    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    /// Unlabeled indices in increasing order.
    pub fn unlabeled(&self) -> Vec<usize> {
        self.unlabeled
            .iter()
            .enumerate()
            .filter_map(|(i, &u)| u.then_some(i))
            .collect()
    }

    pub fn history(&self) -> &[LabeledExample<T>] {
        &self.history
    }

    /// Moves `index` from the unlabeled to the labeled partition, recording
    /// the observed label in the history.
    pub fn mark_labeled(&mut self, index: usize, label: DVector<T>) -> Result<()> {
        if index >= self.features.len() || !self.unlabeled[index] {
            return Err(Error::InvalidConfig(format!(
                "index {index} is not an unlabeled pool index"
            )));
        }
        self.unlabeled[index] = false;
        self.labeled.push(index);
        self.history
            .push(LabeledExample::new(self.features[index].clone(), label));
        Ok(())
    }
}

/// The test queries the design optimizes for.
#[derive(Clone, Debug)]
pub struct TestSet<T: Real> {
    queries: Vec<DVector<T>>,
}

impl<T: Real> TestSet<T> {
    pub fn new(queries: Vec<DVector<T>>) -> Result<Self> {
        let d = match queries.first() {
            Some(q) => q.len(),
            None => return Err(Error::InvalidConfig("test set must be nonempty".into())),
        };
        if let Some(q) = queries.iter().find(|q| q.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: q.len(),
            });
        }
        Ok(Self { queries })
    }

    pub fn queries(&self) -> &[DVector<T>] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Outcome of one selection round.
#[derive(Clone, Debug)]
pub struct SelectorDecision<T: Real> {
    pub chosen: usize,
    pub scores: BTreeMap<usize, T>,
    pub rng_draws: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Go,
    Sal,
    Uniform,
    GreedyXx,
    GreedyMx,
    GreedyMu,
    Least,
    MaxEnt,
    DOpt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreedyVariant {
    Xx,
    Mx,
    Mu,
}

/// Policy parameters for one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectorConfig {
    pub policy: Policy,
    /// SAL inner simulation count.
    pub m: usize,
    /// SAL prefilter width (0 disables the GO prefilter).
    pub prefilter: usize,
    /// Least/MaxEnt predictive sample count per test query.
    pub r_samples: usize,
    /// Decimal places used to bucket continuous answers in Least/MaxEnt.
    pub bucket_decimals: u32,
    /// D-opt solver tolerance.
    pub dopt_tol: f64,
    /// D-opt solver iteration cap.
    pub dopt_max_iters: usize,
    pub seed: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            policy: Policy::Go,
            m: 1,
            prefilter: 5,
            r_samples: 10,
            bucket_decimals: 2,
            dopt_tol: 1e-3,
            dopt_max_iters: 100_000,
            seed: 0,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.r_samples == 0 {
            return Err(Error::InvalidConfig("r_samples must be at least 1".into()));
        }
        if self.dopt_tol <= 0.0 {
            return Err(Error::InvalidConfig("dopt_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Lowest-index argmin over `(index, score)` pairs.
fn argmin<T: Real>(scores: &BTreeMap<usize, T>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (&i, &s) in scores {
        match best {
            Some((_, bs)) if bs <= s => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Lowest-index argmax over `(index, score)` pairs.
fn argmax<T: Real>(scores: &BTreeMap<usize, T>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (&i, &s) in scores {
        match best {
            Some((_, bs)) if bs >= s => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Greedy G-optimal selection: the candidate whose labeling minimizes the
/// worst-case posterior variance over the test queries. Never reads a label.
pub fn select_go<T: Real>(
    state: &PosteriorState<T>,
    pool: &Pool<T>,
    tests: &TestSet<T>,
) -> Result<SelectorDecision<T>> {
    let mut scores = BTreeMap::new();
    for i in pool.unlabeled() {
        let s = state.hypothetical_score(pool.feature(i), tests.queries())?;
        scores.insert(i, s);
    }
    let chosen = argmin(&scores).ok_or(Error::PoolExhausted)?;
    Ok(SelectorDecision {
        chosen,
        scores,
        rng_draws: 0,
    })
}

/// Simulation-based selection: per candidate, simulate labels, extend the
/// history, and score by the mean squared difference of paired predictive
/// samples over the test queries.
pub fn select_sal(
    state: &PosteriorState<f64>,
    pool: &Pool<f64>,
    tests: &TestSet<f64>,
    oracle: &dyn PredictiveOracle,
    cfg: &SelectorConfig,
    rng: &mut dyn RngCore,
) -> Result<SelectorDecision<f64>> {
    cfg.validate()?;
    if !oracle.capabilities().can_sample_predictions {
        return Err(Error::NoPredictiveSampling);
    }
    let round = state.n_updates() + 1;
    let candidates = {
        let all = pool.unlabeled();
        if all.is_empty() {
            return Err(Error::PoolExhausted);
        }
        if cfg.prefilter > 0 && cfg.prefilter < all.len() {
            // GO prefilter: keep the most informative candidates only.
            let go = select_go(state, pool, tests)?;
            let mut ranked: Vec<(usize, f64)> =
                go.scores.into_iter().collect();
            ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            let mut kept: Vec<usize> =
                ranked.into_iter().take(cfg.prefilter).map(|(i, _)| i).collect();
            kept.sort_unstable();
            kept
        } else {
            all
        }
    };

    let mut draws = 0u64;
    let mut scores = BTreeMap::new();
    // Common random numbers: every candidate replays the same simulation
    // stream, so score differences reflect the candidates rather than
    // sampling noise. Marginal score distributions are unchanged.
    let base_seed = rng.next_u64();
    for i in candidates {
        let mut crn = rand::rngs::StdRng::seed_from_u64(base_seed);
        let rng = &mut crn;
        let x_i = pool.feature(i);
        let mut per_query_sum = vec![0.0; tests.len()];
        for _ in 0..cfg.m {
            let y = oracle
                .sample_label(x_i, pool.history(), rng)
                .map_err(|e| Error::OracleFailure {
                    candidate: i,
                    round,
                    source: Box::new(e),
                })?;
            draws += 1;
            let mut extended = pool.history().to_vec();
            extended.push(LabeledExample::new(x_i.clone(), y.values));
            for (k, q) in tests.queries().iter().enumerate() {
                let pair = oracle
                    .sample_prediction(q, &extended, 2, rng)
                    .map_err(|e| Error::OracleFailure {
                        candidate: i,
                        round,
                        source: Box::new(e),
                    })?;
                draws += 2;
                let diff = &pair[0].values - &pair[1].values;
                per_query_sum[k] += diff.norm_squared();
            }
        }
        let score = per_query_sum
            .iter()
            .map(|s| s / cfg.m as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        scores.insert(i, score);
    }
    let chosen = argmin(&scores).ok_or(Error::PoolExhausted)?;
    Ok(SelectorDecision {
        chosen,
        scores,
        rng_draws: draws,
    })
}

/// Uniform draw over the unlabeled indices.
pub fn select_uniform<T: Real, R: Rng + ?Sized>(
    pool: &Pool<T>,
    rng: &mut R,
) -> Result<SelectorDecision<T>> {
    let unlabeled = pool.unlabeled();
    if unlabeled.is_empty() {
        return Err(Error::PoolExhausted);
    }
    let chosen = unlabeled[rng.random_range(0..unlabeled.len())];
    Ok(SelectorDecision {
        chosen,
        scores: BTreeMap::new(),
        rng_draws: 1,
    })
}

/// Inner-product greedy baselines.
pub fn select_greedy<T: Real>(
    pool: &Pool<T>,
    tests: &TestSet<T>,
    variant: GreedyVariant,
) -> Result<SelectorDecision<T>> {
    let k_count: T = real(tests.len() as f64);
    let mut scores = BTreeMap::new();
    for i in pool.unlabeled() {
        let x = pool.feature(i);
        let products: Vec<T> = tests.queries().iter().map(|q| q.dot(x)).collect();
        let score = match variant {
            GreedyVariant::Xx => products
                .iter()
                .copied()
                .fold(None::<T>, |acc, p| Some(acc.map_or(p, |a| if a >= p { a } else { p })))
                .unwrap(),
            GreedyVariant::Mx => products
                .iter()
                .copied()
                .fold(None::<T>, |acc, p| Some(acc.map_or(p, |a| if a <= p { a } else { p })))
                .unwrap(),
            GreedyVariant::Mu => {
                // Align with the query whose inner product is closest to the
                // candidate's average inner product.
                let avg = products.iter().fold(T::zero(), |a, &p| a + p) / k_count;
                let mut best_k = 0usize;
                let mut best_s = (products[0] - avg).abs();
                for (k, &p) in products.iter().enumerate().skip(1) {
                    let s = (p - avg).abs();
                    if s < best_s {
                        best_s = s;
                        best_k = k;
                    }
                }
                products[best_k]
            }
        };
        scores.insert(i, score);
    }
    let chosen = argmax(&scores).ok_or(Error::PoolExhausted)?;
    Ok(SelectorDecision {
        chosen,
        scores,
        rng_draws: 0,
    })
}

fn bucket_key(values: &DVector<f64>, decimals: u32) -> Vec<i64> {
    let scale = 10f64.powi(decimals as i32);
    values.iter().map(|v| (v * scale).round() as i64).collect()
}

fn single_example_context(
    pool: &Pool<f64>,
    i: usize,
    oracle: &dyn PredictiveOracle,
    rng: &mut dyn RngCore,
) -> Result<Vec<LabeledExample<f64>>> {
    let x_i = pool.feature(i);
    let y_hat = oracle.sample_label(x_i, pool.history(), rng)?;
    Ok(vec![LabeledExample::new(x_i.clone(), y_hat.values)])
}

/// Least-confidence baseline: count unique bucketed answers per test query.
pub fn select_least_confidence(
    pool: &Pool<f64>,
    tests: &TestSet<f64>,
    oracle: &dyn PredictiveOracle,
    r_samples: usize,
    bucket_decimals: u32,
    rng: &mut dyn RngCore,
) -> Result<SelectorDecision<f64>> {
    if !oracle.capabilities().can_sample_predictions {
        return Err(Error::NoPredictiveSampling);
    }
    if pool.unlabeled().is_empty() {
        return Err(Error::PoolExhausted);
    }
    let mut draws = 0u64;
    let mut scores = BTreeMap::new();
    for i in pool.unlabeled() {
        let ctx = single_example_context(pool, i, oracle, rng)?;
        draws += 1;
        let mut unique_total = 0usize;
        for q in tests.queries() {
            let samples = oracle.sample_prediction(q, &ctx, r_samples, rng)?;
            draws += r_samples as u64;
            let mut seen: Vec<Vec<i64>> = Vec::new();
            for s in &samples {
                let key = bucket_key(&s.values, bucket_decimals);
                if !seen.contains(&key) {
                    seen.push(key);
                }
            }
            unique_total += seen.len();
        }
        scores.insert(i, unique_total as f64);
    }
    let chosen = argmax(&scores).ok_or(Error::PoolExhausted)?;
    Ok(SelectorDecision {
        chosen,
        scores,
        rng_draws: draws,
    })
}

/// Max-entropy baseline: entropy of the empirical bucketed answer
/// distribution, summed over test queries.
pub fn select_max_entropy(
    pool: &Pool<f64>,
    tests: &TestSet<f64>,
    oracle: &dyn PredictiveOracle,
    r_samples: usize,
    bucket_decimals: u32,
    rng: &mut dyn RngCore,
) -> Result<SelectorDecision<f64>> {
    if !oracle.capabilities().can_sample_predictions {
        return Err(Error::NoPredictiveSampling);
    }
    if pool.unlabeled().is_empty() {
        return Err(Error::PoolExhausted);
    }
    let mut draws = 0u64;
    let mut scores = BTreeMap::new();
    for i in pool.unlabeled() {
        let ctx = single_example_context(pool, i, oracle, rng)?;
        draws += 1;
        let mut entropy_total = 0.0;
        for q in tests.queries() {
            let samples = oracle.sample_prediction(q, &ctx, r_samples, rng)?;
            draws += r_samples as u64;
            let mut counts: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
            for s in &samples {
                *counts.entry(bucket_key(&s.values, bucket_decimals)).or_default() += 1;
            }
            let n = samples.len() as f64;
            entropy_total -= counts
                .values()
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p.ln()
                })
                .sum::<f64>();
        }
        scores.insert(i, entropy_total);
    }
    let chosen = argmax(&scores).ok_or(Error::PoolExhausted)?;
    Ok(SelectorDecision {
        chosen,
        scores,
        rng_draws: draws,
    })
}

/// A D-optimal design distribution with its equivalence certificate.
#[derive(Clone, Debug)]
pub struct DesignWeights<T: Real> {
    pub weights: Vec<T>,
    /// `max_j x_j^T M(pi)^{-1} x_j` at termination.
    pub certificate: T,
    pub iterations: usize,
}

/// Solves the D-optimal design by multiplicative-weight iterations,
/// terminating at the Kiefer-Wolfowitz certificate `max_j g_j <= d (1+tol)`.
pub fn solve_dopt<T: Real>(
    features: &[DVector<T>],
    tol: T,
    max_iters: usize,
) -> Result<DesignWeights<T>> {
    let n = features.len();
    if n == 0 {
        return Err(Error::DesignNotIdentifiable);
    }
    let d = features[0].len();
    let dt: T = real(d as f64);
    let uniform = T::one() / real(n as f64);
    let mut weights = vec![uniform; n];
    let target = dt * (T::one() + tol);
    let mut best_cert = T::max_value().unwrap();

    for iter in 0..max_iters {
        let mut info = DMatrix::<T>::zeros(d, d);
        for (w, x) in weights.iter().zip(features) {
            info += x * x.transpose() * *w;
        }
        let inv = info
            .cholesky()
            .ok_or(Error::DesignNotIdentifiable)?
            .inverse();
        let leverages: Vec<T> = features.iter().map(|x| x.dot(&(&inv * x))).collect();
        let cert = leverages
            .iter()
            .fold(T::zero(), |a, &g| if a >= g { a } else { g });
        if cert < best_cert {
            best_cert = cert;
        }
        if cert <= target {
            return Ok(DesignWeights {
                weights,
                certificate: cert,
                iterations: iter,
            });
        }
        let mut total = T::zero();
        for (w, g) in weights.iter_mut().zip(&leverages) {
            *w *= *g / dt;
            total += *w;
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    Err(Error::DesignNotConverged {
        certificate: nalgebra::try_convert(best_cert).unwrap_or(f64::NAN),
        target: nalgebra::try_convert(target).unwrap_or(f64::NAN),
    })
}

/// D-opt baseline: solve the design over the unlabeled features and sample
/// one index from the resulting distribution.
pub fn select_dopt<R: Rng + ?Sized>(
    pool: &Pool<f64>,
    cfg: &SelectorConfig,
    rng: &mut R,
) -> Result<SelectorDecision<f64>> {
    let unlabeled = pool.unlabeled();
    if unlabeled.is_empty() {
        return Err(Error::PoolExhausted);
    }
    let features: Vec<_> = unlabeled.iter().map(|&i| pool.feature(i).clone()).collect();
    let design = solve_dopt(&features, cfg.dopt_tol, cfg.dopt_max_iters)?;
    let u: f64 = rng.random_range(0.0..1.0);
    let mut acc = 0.0;
    let mut chosen = *unlabeled.last().unwrap();
    for (&idx, &w) in unlabeled.iter().zip(&design.weights) {
        acc += w;
        if u < acc {
            chosen = idx;
            break;
        }
    }
    let scores = unlabeled.iter().copied().zip(design.weights).collect();
    Ok(SelectorDecision {
        chosen,
        scores,
        rng_draws: 1,
    })
}
