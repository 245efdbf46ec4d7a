//! Bayesian autoencoders for out-of-distribution detection.
//!
//! The crate trains deterministic, variational, MC-Dropout, Bayes-by-Backprop
//! and anchored-ensemble autoencoders, scores inputs by the mean and variance
//! of their log-likelihood under posterior samples, and evaluates the scores
//! with ranking and correlation metrics.

pub mod data;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod metrics;
pub mod nn;
pub mod scoring;
pub mod tensor;

pub use data::{Dataset, KvFile, ScoreRow, Split, SyntheticKind, SyntheticSpec};
pub use error::{Error, Result};
pub use inference::{Family, Posterior, PosteriorSampler, TrainConfig, Trained};
pub use likelihood::LikelihoodKind;
pub use metrics::{EvalResult, SimilarityScores};
pub use nn::{AeArchitecture, AeModel, Gradient};
pub use scoring::{Method, OodScores, ScoreReport};
pub use tensor::Tensor;
