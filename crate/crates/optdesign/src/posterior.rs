//! Gaussian posterior of a linear model with rank-1 incremental updates.
//!
//! The posterior over the model parameter is kept in both covariance and
//! precision form. Updates add one rank-1 term to the precision and apply the
//! Sherman–Morrison identity to the covariance, so a round of candidate
//! scoring costs `O(K d^2)` instead of `O(d^3)` per candidate.

use nalgebra::{DMatrix, DVector};

use crate::{real, Error, Real, Result};

/// Default number of rank-1 updates between full rebuilds of the covariance
/// from the precision matrix.
pub const DEFAULT_REBUILD_EVERY: usize = 256;

/// One labeled example: a feature vector and a scalar or vector label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample<T: Real> {
    pub features: DVector<T>,
    pub label: DVector<T>,
}

impl<T: Real> LabeledExample<T> {
    pub fn new(features: DVector<T>, label: DVector<T>) -> Self {
        Self { features, label }
    }

    /// Scalar-label convenience constructor.
    pub fn scalar(features: DVector<T>, label: T) -> Self {
        Self {
            features,
            label: DVector::from_element(1, label),
        }
    }

    pub fn label_dim(&self) -> usize {
        self.label.len()
    }
}

/// Gaussian posterior state of the linear model parameter.
///
/// Holds the posterior covariance and its inverse (the precision), the
/// posterior mean (one column per label dimension), and the running sum of
/// `x * y^T` needed to recompute the mean after each update.
#[derive(Clone, Debug)]
pub struct PosteriorState<T: Real> {
    dim: usize,
    noise_var: T,
    prior_mean: DVector<T>,
    prior_precision: DMatrix<T>,
    covariance: DMatrix<T>,
    precision: DMatrix<T>,
    mean: DMatrix<T>,
    sum_xy: DMatrix<T>,
    label_dim: Option<usize>,
    n_updates: usize,
    updates_since_rebuild: usize,
    rebuild_every: usize,
}

/// Builds a fresh posterior from the prior.
///
/// Fails when the prior covariance is not symmetric positive-definite or the
/// prior mean length disagrees with `dim`.
pub fn init_posterior<T: Real>(
    dim: usize,
    prior_mean: DVector<T>,
    prior_cov: DMatrix<T>,
    noise_var: T,
) -> Result<PosteriorState<T>> {
    if prior_mean.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: prior_mean.len(),
        });
    }
    if prior_cov.nrows() != dim || prior_cov.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: prior_cov.nrows(),
        });
    }
    if noise_var <= T::zero() {
        return Err(Error::InvalidConfig("noise variance must be positive".into()));
    }
    let asym = (&prior_cov - prior_cov.transpose()).abs().max();
    if asym > real(1e-12) {
        return Err(Error::PriorNotPositiveDefinite);
    }
    let chol = prior_cov
        .clone()
        .cholesky()
        .ok_or(Error::PriorNotPositiveDefinite)?;
    let prior_precision = chol.inverse();
    let mean = DMatrix::from_columns(&[prior_mean.clone()]);
    Ok(PosteriorState {
        dim,
        noise_var,
        prior_mean,
        prior_precision: symmetrize(prior_precision),
        covariance: prior_cov,
        precision: Default::default(),
        mean,
        sum_xy: DMatrix::zeros(dim, 1),
        label_dim: None,
        n_updates: 0,
        updates_since_rebuild: 0,
        rebuild_every: DEFAULT_REBUILD_EVERY,
    }
    .with_precision_from_prior())
}

impl<T: Real> PosteriorState<T> {
    fn with_precision_from_prior(mut self) -> Self {
        self.precision = self.prior_precision.clone();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_var(&self) -> T {
        self.noise_var
    }

    pub fn covariance(&self) -> &DMatrix<T> {
        &self.covariance
    }

    pub fn precision(&self) -> &DMatrix<T> {
        &self.precision
    }

    /// Posterior mean, one column per label dimension.
    pub fn mean(&self) -> &DMatrix<T> {
        &self.mean
    }

    pub fn n_updates(&self) -> usize {
        self.n_updates
    }

    pub fn label_dim(&self) -> Option<usize> {
        self.label_dim
    }

    /// Overrides how often the covariance is rebuilt by direct inversion of
    /// the precision.
    pub fn set_rebuild_every(&mut self, every: usize) {
        self.rebuild_every = every.max(1);
    }

    /// Absorbs one labeled example.
    pub fn update(&self, example: &LabeledExample<T>) -> Result<Self> {
        let x = &example.features;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        for (i, v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature(i));
            }
        }
        let dy = example.label_dim();
        if let Some(expected) = self.label_dim {
            if dy != expected {
                return Err(Error::LabelArityMismatch { expected, got: dy });
            }
        }

        let mut next = self.clone();
        if next.label_dim.is_none() {
            next.label_dim = Some(dy);
            next.sum_xy = DMatrix::zeros(self.dim, dy);
        }

        let inv_noise = T::one() / self.noise_var;

        // Precision picks up sigma^-2 x x^T; covariance follows by
        // Sherman-Morrison on the same rank-1 term.
        let sx = &self.covariance * x;
        let denom = self.noise_var + x.dot(&sx);
        next.covariance -= &sx * sx.transpose() / denom;
        next.covariance = symmetrize(next.covariance);
        next.precision += x * x.transpose() * inv_noise;
        next.precision = symmetrize(next.precision);

        next.sum_xy += x * example.label.transpose();
        next.n_updates += 1;
        next.updates_since_rebuild += 1;
        if next.updates_since_rebuild >= next.rebuild_every {
            next.rebuild_covariance()?;
        }

        // mean = cov * (prior_precision * prior_mean * 1^T + sigma^-2 sum_xy)
        let prior_term = &next.prior_precision * &next.prior_mean;
        let mut rhs = next.sum_xy.clone() * inv_noise;
        for mut col in rhs.column_iter_mut() {
            col += &prior_term;
        }
        next.mean = &next.covariance * rhs;
        Ok(next)
    }

    /// Recomputes the covariance by direct inversion of the precision,
    /// resetting accumulated floating-point drift.
    pub fn rebuild_covariance(&mut self) -> Result<()> {
        let chol = self
            .precision
            .clone()
            .cholesky()
            .ok_or(Error::PriorNotPositiveDefinite)?;
        self.covariance = symmetrize(chol.inverse());
        self.updates_since_rebuild = 0;
        Ok(())
    }

    /// Predictive variance `q^T Cov q + sigma^2` per label dimension.
    pub fn predictive_variance(&self, query: &DVector<T>) -> Result<T> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        Ok(query.dot(&(&self.covariance * query)) + self.noise_var)
    }

    /// Predictive mean for a query, one entry per label dimension.
    pub fn predictive_mean(&self, query: &DVector<T>) -> Result<DVector<T>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        Ok(self.mean.transpose() * query)
    }

    /// Worst-case posterior variance over the queries if `candidate` were
    /// labeled next, without mutating the state.
    ///
    /// Evaluates `max_k q_k^T (P + sigma^-2 c c^T)^{-1} q_k` through
    /// Sherman-Morrison, so the cost is `O(K d^2)`.
    pub fn hypothetical_score(
        &self,
        candidate: &DVector<T>,
        queries: &[DVector<T>],
    ) -> Result<T> {
        if candidate.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: candidate.len(),
            });
        }
        let sc = &self.covariance * candidate;
        let denom = self.noise_var + candidate.dot(&sc);
        let mut best: Option<T> = None;
        for q in queries {
            if q.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: q.len(),
                });
            }
            let qs = q.dot(&(&self.covariance * q));
            let cross = q.dot(&sc);
            let v = qs - cross * cross / denom;
            best = Some(match best {
                Some(b) if b >= v => b,
                _ => v,
            });
        }
        best.ok_or(Error::InvalidConfig("empty test set".into()))
    }
}

/// Uncertainty objective `f(S)` of a subset, by direct matrix inversion.
///
/// `f(S) = max_k q_k^T (P0 + sigma^-2 sum_{i in S} x_i x_i^T)^{-1} q_k`.
/// This is the reference implementation the incremental path is tested
/// against.
pub fn subset_objective<T: Real>(
    features: &[DVector<T>],
    subset: &[usize],
    queries: &[DVector<T>],
    prior_cov: &DMatrix<T>,
    noise_var: T,
) -> Result<T> {
    let d = prior_cov.nrows();
    let chol = prior_cov
        .clone()
        .cholesky()
        .ok_or(Error::PriorNotPositiveDefinite)?;
    let mut info = chol.inverse();
    let inv_noise = T::one() / noise_var;
    for &i in subset {
        let x = features.get(i).ok_or(Error::DimensionMismatch {
            expected: features.len(),
            got: i,
        })?;
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        info += x * x.transpose() * inv_noise;
    }
    let cov = symmetrize(info)
        .cholesky()
        .ok_or(Error::PriorNotPositiveDefinite)?
        .inverse();
    queries
        .iter()
        .map(|q| {
            if q.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: q.len(),
                });
            }
            Ok(q.dot(&(&cov * q)))
        })
        .try_fold(None::<T>, |acc, v| -> Result<Option<T>> {
            let v = v?;
            Ok(Some(match acc {
                Some(b) if b >= v => b,
                _ => v,
            }))
        })?
        .ok_or(Error::InvalidConfig("empty test set".into()))
}

fn symmetrize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let half: T = real(0.5);
    let mt = m.transpose();
    (m + mt) * half
}
