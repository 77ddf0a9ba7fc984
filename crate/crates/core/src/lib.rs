//! Bayesian teaching for latent Dirichlet allocation.
//!
//! A teacher picks documents that lead an LDA learner, who knows the prior
//! `(T, alpha, beta)` but not the topics, to a target topic model. The
//! teaching score of a document set is the likelihood of the documents under
//! the fixed target topics divided by the learner's marginal likelihood, both
//! summed over every token-to-topic assignment.
//!
//! This crate is `no_std` (it needs `alloc`) and holds the numerical kernel:
//!
//! * [`dircat`] and [`lda`]: Dirichlet-Categorical probabilities, generative
//!   sampling and the collapsed Gibbs sampler.
//! * [`exact`]: brute-force enumeration of the assignment space, used as the
//!   ground truth for every estimator.
//! * [`estimators`]: uniform and sequential importance sampling with ESS and
//!   relative-error diagnostics.
//! * [`teaching`]: full-model and topic-subset teaching scores, plus
//!   pseudo-marginal Metropolis-Hastings over documents.
//! * [`learner`]: the teaching-vs-random learner error experiment.
//! * [`ranking`]: corpus ranking by teaching score and the cosine heuristic.
//!
//! Randomness only enters through explicit `u64` seeds. Every sample, chain
//! step and replication derives its own stream from the seed it was given, so
//! callers that fan work out across threads get the same numbers as a serial
//! run.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dircat;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod lda;
pub mod learner;
pub mod logspace;
pub mod model;
pub mod ranking;
pub mod rng;
pub mod teaching;

pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, ProposalKind, StopRule, WeightedEstimate};
pub use model::{AssignmentState, Corpus, DocMeta, Document, Hyperparams, ThetaSet, TopicModel, Vocabulary};
pub use teaching::{ScoreMethod, SubsetSpec, TeachingScore};
