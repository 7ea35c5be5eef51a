//! Label sources and predictive samplers behind a single interface.
//!
//! Three oracles are provided: an exact linear-Gaussian simulator, a dataset
//! replay table, and a client for a remote predictor speaking JSON over HTTP.
//! The remote protocol exists so a hosted model can be mounted without
//! touching selector code.

use std::collections::HashMap;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::posterior::{init_posterior, LabeledExample, PosteriorState};
use crate::{Error, Result};

/// Label arity an oracle produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelArity {
    Scalar,
    Vector(usize),
}

impl LabelArity {
    pub fn len(&self) -> usize {
        match self {
            LabelArity::Scalar => 1,
            LabelArity::Vector(d) => *d,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Declared capabilities of an oracle.
#[derive(Clone, Copy, Debug)]
pub struct OracleCapabilities {
    pub can_sample_predictions: bool,
    pub concurrent_safe: bool,
    pub label_arity: LabelArity,
}

/// A sampled label.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSample {
    pub values: DVector<f64>,
}

impl OracleSample {
    pub fn scalar(&self) -> f64 {
        self.values[0]
    }
}

/// Distribution over labels given a query and a history, `p(. | x, H)`.
pub trait PredictiveOracle {
    fn capabilities(&self) -> OracleCapabilities;

    /// Draws one label for `features` conditioned on exactly `history`.
    fn sample_label(
        &self,
        features: &DVector<f64>,
        history: &[LabeledExample<f64>],
        rng: &mut dyn RngCore,
    ) -> Result<OracleSample>;

    /// Draws `n` independent predictive samples for `query` conditioned on
    /// exactly `history`.
    fn sample_prediction(
        &self,
        query: &DVector<f64>,
        history: &[LabeledExample<f64>],
        n: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<OracleSample>>;

    /// Ground-truth label observation, where the oracle distinguishes it
    /// from predictive simulation.
    fn observe_label(
        &self,
        features: &DVector<f64>,
        history: &[LabeledExample<f64>],
        rng: &mut dyn RngCore,
    ) -> Result<OracleSample> {
        self.sample_label(features, history, rng)
    }
}

fn standard_normal(rng: &mut dyn RngCore) -> f64 {
    StandardNormal.sample(rng)
}

/// Exact simulator of a linear model with Gaussian noise.
///
/// Ground-truth labels come from a fixed parameter matrix; predictive samples
/// come from the Bayesian posterior built from exactly the provided history.
#[derive(Clone, Debug)]
pub struct LinearGaussianOracle {
    true_theta: DMatrix<f64>,
    noise_var: f64,
    prior_mean: DVector<f64>,
    prior_cov: DMatrix<f64>,
}

impl LinearGaussianOracle {
    pub fn new(
        true_theta: DMatrix<f64>,
        noise_var: f64,
        prior_mean: DVector<f64>,
        prior_cov: DMatrix<f64>,
    ) -> Result<Self> {
        // Validate the prior once up front.
        init_posterior(true_theta.nrows(), prior_mean.clone(), prior_cov.clone(), noise_var)?;
        Ok(Self {
            true_theta,
            noise_var,
            prior_mean,
            prior_cov,
        })
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn true_theta(&self) -> &DMatrix<f64> {
        &self.true_theta
    }

    /// Posterior built from the prior and the given history.
    pub fn posterior(&self, history: &[LabeledExample<f64>]) -> Result<PosteriorState<f64>> {
        let mut state = init_posterior(
            self.true_theta.nrows(),
            self.prior_mean.clone(),
            self.prior_cov.clone(),
            self.noise_var,
        )?;
        for ex in history {
            state = state.update(ex)?;
        }
        Ok(state)
    }

    fn predictive_draw(
        &self,
        state: &PosteriorState<f64>,
        chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
        query: &DVector<f64>,
        rng: &mut dyn RngCore,
    ) -> OracleSample {
        let dy = self.true_theta.ncols();
        let d = query.len();
        let sigma = self.noise_var.sqrt();
        let mut out = DVector::zeros(dy);
        let mean = if state.label_dim().is_some() {
            state.mean().clone()
        } else {
            // Before any update the mean matrix is a single prior column;
            // broadcast it across label dimensions.
            DMatrix::from_fn(d, dy, |i, _| state.mean()[(i, 0)])
        };
        for c in 0..dy {
            let z = DVector::from_fn(d, |_, _| standard_normal(rng));
            let theta = mean.column(c) + chol.l() * z;
            out[c] = query.dot(&theta) + sigma * standard_normal(rng);
        }
        OracleSample { values: out }
    }
}

impl PredictiveOracle for LinearGaussianOracle {
    fn capabilities(&self) -> OracleCapabilities {
        let dy = self.true_theta.ncols();
        OracleCapabilities {
            can_sample_predictions: true,
            concurrent_safe: true,
            label_arity: if dy == 1 {
                LabelArity::Scalar
            } else {
                LabelArity::Vector(dy)
            },
        }
    }

    fn sample_label(
        &self,
        features: &DVector<f64>,
        history: &[LabeledExample<f64>],
        rng: &mut dyn RngCore,
    ) -> Result<OracleSample> {
        let state = self.posterior(history)?;
        let chol = state
            .covariance()
            .clone()
            .cholesky()
            .ok_or(Error::PriorNotPositiveDefinite)?;
        Ok(self.predictive_draw(&state, &chol, features, rng))
    }

    fn sample_prediction(
        &self,
        query: &DVector<f64>,
        history: &[LabeledExample<f64>],
        n: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<OracleSample>> {
        let state = self.posterior(history)?;
        let chol = state
            .covariance()
            .clone()
            .cholesky()
            .ok_or(Error::PriorNotPositiveDefinite)?;
        Ok((0..n)
            .map(|_| self.predictive_draw(&state, &chol, query, rng))
            .collect())
    }

    fn observe_label(
        &self,
        features: &DVector<f64>,
        _history: &[LabeledExample<f64>],
        rng: &mut dyn RngCore,
    ) -> Result<OracleSample> {
        let sigma = self.noise_var.sqrt();
        let mut out = self.true_theta.transpose() * features;
        for v in out.iter_mut() {
            *v += sigma * standard_normal(rng);
        }
        Ok(OracleSample { values: out })
    }
}

/// Pure lookup oracle over stored labels; cannot simulate predictions.
#[derive(Clone, Debug)]
pub struct DatasetReplayOracle {
    features: Vec<DVector<f64>>,
    labels: Vec<DVector<f64>>,
    index: HashMap<Vec<u64>, usize>,
}

fn feature_key(x: &DVector<f64>) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl DatasetReplayOracle {
    pub fn new(features: Vec<DVector<f64>>, labels: Vec<DVector<f64>>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        let index = features
            .iter()
            .enumerate()
            .map(|(i, x)| (feature_key(x), i))
            .collect();
        Ok(Self {
            features,
            labels,
            index,
        })
    }

    pub fn label(&self, index: usize) -> Option<&DVector<f64>> {
        self.labels.get(index)
    }
}

impl PredictiveOracle for DatasetReplayOracle {
    fn capabilities(&self) -> OracleCapabilities {
        let dy = self.labels.first().map(|l| l.len()).unwrap_or(1);
        OracleCapabilities {
            can_sample_predictions: false,
            concurrent_safe: true,
            label_arity: if dy == 1 {
                LabelArity::Scalar
            } else {
                LabelArity::Vector(dy)
            },
        }
    }

    fn sample_label(
        &self,
        features: &DVector<f64>,
        _history: &[LabeledExample<f64>],
        _rng: &mut dyn RngCore,
    ) -> Result<OracleSample> {
        let idx = self
            .index
            .get(&feature_key(features))
            .copied()
            .ok_or(Error::UnknownReplayFeatures)?;
        debug_assert_eq!(&self.features[idx], features);
        Ok(OracleSample {
            values: self.labels[idx].clone(),
        })
    }

    fn sample_prediction(
        &self,
        _query: &DVector<f64>,
        _history: &[LabeledExample<f64>],
        _n: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<OracleSample>> {
        Err(Error::NoPredictiveSampling)
    }
}

/// Wire request for the remote predictor.
#[derive(Serialize, Deserialize, Debug)]
pub struct RemoteRequest {
    pub history: Vec<RemoteExample>,
    pub query: Vec<f64>,
    pub n_samples: usize,
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct RemoteExample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Wire response: exactly `n_samples` entries, each of length `d_y`.
#[derive(Serialize, Deserialize, Debug)]
pub struct RemoteResponse {
    pub samples: Vec<Vec<f64>>,
}

/// Client for a remote predictor behind `POST {endpoint}/sample`.
pub struct RemotePredictorOracle {
    endpoint: String,
    client: reqwest::blocking::Client,
    retries: u32,
    label_arity: LabelArity,
}

impl RemotePredictorOracle {
    pub fn new(endpoint: String, timeout: Duration, label_arity: LabelArity) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::RemoteTransport(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            client,
            retries: 2,
            label_arity,
        })
    }

    fn post(&self, request: &RemoteRequest) -> Result<RemoteResponse> {
        let url = format!("{}/sample", self.endpoint);
        let mut backoff = Duration::from_millis(250);
        let mut last_err = None;
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            match self.client.post(&url).json(request).send() {
                Ok(resp) => {
                    let status = resp.status();
                    if !status.is_success() {
                        // Server-side errors are protocol errors; do not retry.
                        return Err(Error::RemoteProtocol(format!("http status {status}")));
                    }
                    let body: RemoteResponse = resp
                        .json()
                        .map_err(|e| Error::RemoteProtocol(e.to_string()))?;
                    if body.samples.len() != request.n_samples {
                        return Err(Error::RemoteProtocol(format!(
                            "expected {} samples, got {}",
                            request.n_samples,
                            body.samples.len()
                        )));
                    }
                    let dy = self.label_arity.len();
                    if body.samples.iter().any(|s| s.len() != dy) {
                        return Err(Error::RemoteProtocol(format!(
                            "expected samples of length {dy}"
                        )));
                    }
                    return Ok(body);
                }
                Err(e) => last_err = Some(Error::RemoteTransport(e.to_string())),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::RemoteTransport("unreachable".into())))
    }

    fn request(
        &self,
        query: &DVector<f64>,
        history: &[LabeledExample<f64>],
        n: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<OracleSample>> {
        let req = RemoteRequest {
            history: history
                .iter()
                .map(|ex| RemoteExample {
                    x: ex.features.iter().copied().collect(),
                    y: ex.label.iter().copied().collect(),
                })
                .collect(),
            query: query.iter().copied().collect(),
            n_samples: n,
            seed: Some(rng.next_u64()),
        };
        let resp = self.post(&req)?;
        Ok(resp
            .samples
            .into_iter()
            .map(|s| OracleSample {
                values: DVector::from_vec(s),
            })
            .collect())
    }
}

impl PredictiveOracle for RemotePredictorOracle {
    fn capabilities(&self) -> OracleCapabilities {
        OracleCapabilities {
            can_sample_predictions: true,
            concurrent_safe: false,
            label_arity: self.label_arity,
        }
    }

    fn sample_label(
        &self,
        features: &DVector<f64>,
        history: &[LabeledExample<f64>],
        rng: &mut dyn RngCore,
    ) -> Result<OracleSample> {
        let mut samples = self.request(features, history, 1, rng)?;
        Ok(samples.remove(0))
    }

    fn sample_prediction(
        &self,
        query: &DVector<f64>,
        history: &[LabeledExample<f64>],
        n: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<OracleSample>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        self.request(query, history, n, rng)
    }
}
