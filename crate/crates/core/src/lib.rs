//! Community-conditioned preference tooling.
//!
//! The crate covers the full desk-scale workflow: parsing Reddit-style post
//! and comment dumps into threads, applying quality filters, converting
//! threads into preference pairs, training community-conditioned scorers
//! (Bradley-Terry reward and DPO policies), generating responses, judging
//! them pairwise, and analysing the results (win rates, reward accuracy,
//! predictability regression, Fleiss kappa).
//!
//! Numeric routines are generic over the scalar type (see [`scalar::Real`]);
//! the pipeline itself runs in double precision via the [`Scalar`] alias.

pub mod eval;
pub mod features;
pub mod filters;
pub mod ingest;
pub mod jsonl;
pub mod judge;
pub mod losses;
pub mod manifest;
pub mod model;
pub mod pairs;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod seeding;
pub mod synth;
pub mod train;

/// Scalar type used by the pipeline: all training and evaluation run in
/// double precision.
pub type Scalar = f64;

/// Feature vector over the pipeline scalar.
pub type FeatureVec = features::FeatureVector<Scalar>;

/// Model parameters over the pipeline scalar.
pub type Model = model::ModelParams<Scalar>;

/// Candidate response set over the pipeline scalar.
pub type Candidates = model::CandidateSet<Scalar>;
