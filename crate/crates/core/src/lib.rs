//! Structure-aware minimum Bayes risk (MBR) decoding.
//!
//! Candidates for one input form an [`OutcomeSpace`]. A pairwise
//! [`UtilityMatrix`] (computed by a built-in lexical backend or loaded from
//! files written by an external scorer) drives every selection rule:
//!
//! - standard expected-utility MBR ([`engine::mbr_select`]),
//! - utility cut-off ([`engine::cutoff_transform`]),
//! - cluster-restricted MBR ([`engine::cluster_mbr`]) over k-means clusters
//!   chosen by silhouette ([`clustering::select_k`]) or gold labels,
//! - structure-embedding weighting ([`engine::embedding_weighted_matrix`]).
//!
//! [`metrics`] measures how often a method agrees with the MBR solution
//! conditioned on the latent structure of its own pick (cluster optimality)
//! and how well its rankings correlate with conditional rankings.
//! [`tuning`] sweeps thresholds on training data and confirms on validation.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod engine;
mod error;
pub mod metrics;
pub mod tuning;
pub mod utility;

pub use clustering::{AssignmentSource, ClusterAssignment};
pub use corpus::{Candidate, Corpus, OutcomeSpace, SynthConfig};
pub use engine::{MbrResult, Method, MixtureSpec};
pub use error::{Error, Result};
pub use metrics::EvalReport;
pub use utility::{EmbeddingSet, UtilityBackend, UtilityMatrix};
