//! Learner error when trained on teaching documents versus random LDA
//! documents.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::lda::{gibbs_fit, sample_documents};
use crate::model::{Hyperparams, TopicModel};
use crate::rng::{derive_seed, stream_rng};
use crate::teaching::{pmmh_generate, ProposalConfig, ScoreMethod};

/// Largest topic count for brute-force permutation matching.
pub const MAX_PERMUTATION_TOPICS: usize = 8;

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = alloc::vec![perm.clone()];
    let mut c = alloc::vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.push(perm.clone());
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Sum squared error between topic matrices, minimized over relabelings of
/// the inferred topics.
pub fn min_sse_over_permutations(inferred: &TopicModel, truth: &TopicModel) -> Result<f64> {
    if inferred.num_topics() != truth.num_topics() || inferred.vocab_size() != truth.vocab_size() {
        return Err(Error::DimensionMismatch {
            what: "topic matrix shape",
            expected: truth.num_topics() * truth.vocab_size(),
            found: inferred.num_topics() * inferred.vocab_size(),
        });
    }
    let t = truth.num_topics();
    if t > MAX_PERMUTATION_TOPICS {
        return Err(Error::GuardExceeded {
            what: "topic permutations",
            required: (1..=t).map(|k| k as f64).product(),
            limit: (1..=MAX_PERMUTATION_TOPICS).map(|k| k as f64).product(),
        });
    }
    // pairwise row costs, then the cheapest matching
    let mut cost = alloc::vec![0.0; t * t];
    for a in 0..t {
        for b in 0..t {
            cost[a * t + b] = inferred
                .row(b)
                .iter()
                .zip(truth.row(a))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
        }
    }
    Ok(permutations(t)
        .iter()
        .map(|p| (0..t).map(|a| cost[a * t + p[a]]).sum::<f64>())
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    Teaching,
    Random,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Teaching => "teaching",
            Condition::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub condition: Condition,
    pub num_docs: usize,
    pub replication: usize,
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub true_model: TopicModel,
    pub hyper: Hyperparams,
    pub doc_counts: Vec<usize>,
    pub doc_length: usize,
    pub replications: usize,
    pub gibbs_iterations: usize,
    /// Chain length before the final state is taken as the teaching set.
    pub pmmh_steps: usize,
    /// Flips per proposal; `None` uses [`ProposalConfig::default_for`].
    pub flips_per_step: Option<usize>,
    pub score: ScoreMethod,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.true_model.check_compatible(&self.hyper)?;
        if self.replications == 0 || self.doc_length == 0 || self.gibbs_iterations == 0 || self.pmmh_steps == 0 {
            return Err(Error::invalid(
                "replications, document length, Gibbs iterations and chain steps must be positive",
            ));
        }
        if self.doc_counts.is_empty() || self.doc_counts.contains(&0) {
            return Err(Error::invalid("document counts must be nonempty and positive"));
        }
        Ok(())
    }

    fn replication_seed(&self, num_docs: usize, rep: usize) -> u64 {
        derive_seed(derive_seed(self.seed, num_docs as u64), rep as u64)
    }
}

/// One replication: a random LDA document set given the true topics, a
/// teaching set from a chain started at it, and the learner's error on each.
/// Returns `[teaching, random]`.
pub fn run_replication(config: &ExperimentConfig, num_docs: usize, rep: usize) -> Result<[ErrorRecord; 2]> {
    config.validate()?;
    let seed = config.replication_seed(num_docs, rep);
    let lengths = alloc::vec![config.doc_length; num_docs];
    let random_docs = sample_documents(&mut stream_rng(seed, 1), &config.true_model, &config.hyper, &lengths)?;
    let proposal = ProposalConfig {
        flips_per_step: config
            .flips_per_step
            .unwrap_or(ProposalConfig::default_for(num_docs * config.doc_length).flips_per_step),
    };
    let trace = pmmh_generate(
        random_docs.clone(),
        &config.true_model,
        None,
        &config.hyper,
        proposal,
        config.score,
        config.pmmh_steps,
        derive_seed(seed, 2),
    )?;
    let teaching_docs = trace.last().expect("at least one step").docs.clone();
    let fit_seed = derive_seed(seed, 3);
    let fit = |docs| -> Result<f64> {
        let (_, topics) = gibbs_fit(docs, &config.hyper, config.gibbs_iterations, fit_seed)?;
        min_sse_over_permutations(&topics, &config.true_model)
    };
    Ok([
        ErrorRecord {
            condition: Condition::Teaching,
            num_docs,
            replication: rep,
            sse: fit(&teaching_docs)?,
        },
        ErrorRecord {
            condition: Condition::Random,
            num_docs,
            replication: rep,
            sse: fit(&random_docs)?,
        },
    ])
}

/// Sort records by (condition, num_docs, replication).
pub fn sort_records(records: &mut [ErrorRecord]) {
    records.sort_by_key(|r| (r.condition, r.num_docs, r.replication));
}

/// Every replication for every document count, serially.
pub fn run_learning_experiment(config: &ExperimentConfig) -> Result<Vec<ErrorRecord>> {
    config.validate()?;
    let mut out = Vec::new();
    for &k in &config.doc_counts {
        for rep in 0..config.replications {
            out.extend(run_replication(config, k, rep)?);
        }
    }
    sort_records(&mut out);
    Ok(out)
}

/// Linear-interpolation quantile of unsorted values; `None` when empty.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// SSE values for one condition and document count.
pub fn sse_values(records: &[ErrorRecord], condition: Condition, num_docs: usize) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.condition == condition && r.num_docs == num_docs)
        .map(|r| r.sse)
        .collect()
}
