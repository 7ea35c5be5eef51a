//! Optimal-design-based active example selection.
//!
//! The crate maintains a Bayesian linear-model posterior and uses it to pick
//! which unlabeled examples are worth labeling for a fixed set of test
//! queries. Two main policies are provided: a greedy G-optimal rule that
//! minimizes the worst-case posterior variance over the test queries, and a
//! simulation-based rule that estimates the same quantity by sampling paired
//! predictions from a label oracle. Baseline policies (uniform, inner-product
//! greedy, least-confidence, max-entropy, D-optimal sampling) share the same
//! interface.
//!
//! Core numerics are generic over the scalar type; `f64` aliases are exported
//! at the crate root and are what the oracles, the experiment harness, and
//! the CLI use.

pub mod error;
pub mod harness;
pub mod oracles;
pub mod posterior;
pub mod selectors;
pub mod tasks;
pub mod theory;

pub use error::Error;

/// Scalar bound for the generic numeric core.
///
/// `nalgebra::RealField` already implies lossless conversion from `f64`
/// constants via `nalgebra::convert`.
pub trait Real: nalgebra::RealField + Copy {}

impl<T> Real for T where T: nalgebra::RealField + Copy {}

/// Converts an `f64` constant into the working scalar type.
pub(crate) fn real<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

pub type Result<T> = std::result::Result<T, Error>;

/// `f64` aliases for the generic core types.
pub type Posterior = posterior::PosteriorState<f64>;
pub type Posterior32 = posterior::PosteriorState<f32>;
pub type Example = posterior::LabeledExample<f64>;
pub type Pool = selectors::Pool<f64>;
pub type TestSet = selectors::TestSet<f64>;
pub type Decision = selectors::SelectorDecision<f64>;
pub type DesignWeights = selectors::DesignWeights<f64>;
