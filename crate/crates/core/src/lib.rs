//! Knowledge-atlas toolkit for article corpora.
//!
//! Numeric stages are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` and `f32` instantiations. Chemical counts are
//! exact rationals.

pub mod atlas;
pub mod chemparse;
pub mod corpus;
pub mod embed;
pub mod relevance;
pub mod scalar;
pub mod textproc;
pub mod topics;

pub use scalar::Scalar;

pub type TfIdfVector = textproc::SparseVector<f64>;
pub type TfIdfVector32 = textproc::SparseVector<f32>;
pub type Distances = textproc::DistanceMatrix<f64>;
pub type Distances32 = textproc::DistanceMatrix<f32>;
pub type Classifier = relevance::LogRegModel<f64>;
pub type Classifier32 = relevance::LogRegModel<f32>;
pub type LdaModel = topics::TopicModel<f64>;
pub type LdaModel32 = topics::TopicModel<f32>;
pub type Affinities = embed::AffinityMatrix<f64>;
pub type Affinities32 = embed::AffinityMatrix<f32>;
pub type Embedding = embed::Embedding2D<f64>;
pub type Embedding32 = embed::Embedding2D<f32>;
