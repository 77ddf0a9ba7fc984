//! Teaching scores and pseudo-marginal document generation.
//!
//! The teaching score of a document set is `log numerator - log marginal`,
//! where the numerator is the Dirichlet density of the target topics times
//! the likelihood of the documents under those topics (summed over
//! assignments), and the marginal is the learner's evidence with the topics
//! integrated out.

use alloc::vec;
use alloc::vec::Vec;
use libm::{ceil, log};
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{is_marginal, is_numerator, is_subset_numerator, EstimatorConfig, WeightedEstimate};
use crate::exact::exact_score_parts;
use crate::model::{check_documents, total_tokens, Document, Hyperparams, TopicModel};
use crate::rng::{derive_seed, stream_rng, uniform01, TaskRng};

/// Target topics `Phi* ⊆ Phi` for subset teaching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSpec {
    topics: Vec<usize>,
}

impl SubsetSpec {
    pub fn new(mut topics: Vec<usize>, num_topics: usize) -> Result<Self> {
        if topics.is_empty() {
            return Err(Error::invalid("topic subset must be nonempty"));
        }
        topics.sort_unstable();
        topics.dedup();
        if let Some(&t) = topics.iter().find(|&&t| t >= num_topics) {
            return Err(Error::OutOfRange {
                what: "subset topic",
                index: t,
                bound: num_topics,
            });
        }
        Ok(Self { topics })
    }

    /// The improper subset: every topic.
    pub fn all(num_topics: usize) -> Self {
        Self {
            topics: (0..num_topics).collect(),
        }
    }

    pub fn topics(&self) -> &[usize] {
        &self.topics
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.topics.binary_search(&t).is_ok()
    }

    /// Membership mask of length `num_topics`.
    pub fn mask(&self, num_topics: usize) -> Result<Vec<bool>> {
        if let Some(&t) = self.topics.iter().find(|&&t| t >= num_topics) {
            return Err(Error::OutOfRange {
                what: "subset topic",
                index: t,
                bound: num_topics,
            });
        }
        let mut m = vec![false; num_topics];
        self.topics.iter().for_each(|&t| m[t] = true);
        Ok(m)
    }
}

/// How the numerator and denominator are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreMethod {
    /// Full enumeration; subject to the oracle's size guard.
    Exact,
    Estimated {
        numerator: EstimatorConfig,
        denominator: EstimatorConfig,
    },
}

impl ScoreMethod {
    /// Same estimator for both parts.
    pub fn estimated(config: EstimatorConfig) -> Self {
        ScoreMethod::Estimated {
            numerator: config,
            denominator: config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeachingScore {
    pub log_numerator: f64,
    pub log_denominator: f64,
    pub log_score: f64,
    pub numerator_diag: Option<WeightedEstimate>,
    pub denominator_diag: Option<WeightedEstimate>,
}

fn score(
    docs: &[Document],
    model: &TopicModel,
    subset: Option<&SubsetSpec>,
    hyper: &Hyperparams,
    method: &ScoreMethod,
    seed: u64,
) -> Result<TeachingScore> {
    model.check_compatible(hyper)?;
    match method {
        ScoreMethod::Exact => {
            let (num, den) = exact_score_parts(docs, model, subset, hyper)?;
            Ok(TeachingScore {
                log_numerator: num,
                log_denominator: den,
                log_score: num - den,
                numerator_diag: None,
                denominator_diag: None,
            })
        }
        ScoreMethod::Estimated { numerator, denominator } => {
            let num_seed = derive_seed(seed, 1);
            let num = match subset {
                None => is_numerator(docs, model, hyper, numerator, num_seed)?,
                Some(s) => is_subset_numerator(docs, model, s, hyper, numerator, num_seed)?,
            };
            let den = is_marginal(docs, hyper, denominator, derive_seed(seed, 2))?;
            Ok(TeachingScore {
                log_numerator: num.log_estimate,
                log_denominator: den.log_estimate,
                log_score: num.log_estimate - den.log_estimate,
                numerator_diag: Some(num),
                denominator_diag: Some(den),
            })
        }
    }
}

/// Teaching score of `docs` for the whole target model.
pub fn teaching_score(docs: &[Document], model: &TopicModel, hyper: &Hyperparams, method: &ScoreMethod, seed: u64) -> Result<TeachingScore> {
    score(docs, model, None, hyper, method, seed)
}

/// Teaching score for a subset of target topics. Words assigned to target
/// topics are scored by their fixed `phi`; the remaining topics are
/// collapsed. The denominator is the same marginal likelihood as in
/// [`teaching_score`].
pub fn subset_teaching_score(
    docs: &[Document],
    model: &TopicModel,
    subset: &SubsetSpec,
    hyper: &Hyperparams,
    method: &ScoreMethod,
    seed: u64,
) -> Result<TeachingScore> {
    score(docs, model, Some(subset), hyper, method, seed)
}

/// Anything that assigns a (possibly noisy) log score to a document set.
pub trait DocumentScorer {
    fn log_score(&self, docs: &[Document], seed: u64) -> Result<f64>;
}

impl<F> DocumentScorer for F
where
    F: Fn(&[Document], u64) -> Result<f64>,
{
    fn log_score(&self, docs: &[Document], seed: u64) -> Result<f64> {
        self(docs, seed)
    }
}

/// Teaching score as a [`DocumentScorer`].
#[derive(Debug, Clone)]
pub struct TeachingScorer<'a> {
    pub model: &'a TopicModel,
    pub subset: Option<&'a SubsetSpec>,
    pub hyper: &'a Hyperparams,
    pub method: ScoreMethod,
}

impl DocumentScorer for TeachingScorer<'_> {
    fn log_score(&self, docs: &[Document], seed: u64) -> Result<f64> {
        Ok(score(docs, self.model, self.subset, self.hyper, &self.method, seed)?.log_score)
    }
}

/// Word-flip proposal: each flip picks a uniformly random token and
/// redraws its word uniformly from the vocabulary. The kernel is symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProposalConfig {
    pub flips_per_step: usize,
}

impl ProposalConfig {
    /// `max(1, ceil(0.05 * n))` flips.
    pub fn default_for(total_tokens: usize) -> Self {
        Self {
            flips_per_step: (ceil(0.05 * total_tokens as f64) as usize).max(1),
        }
    }
}

/// What happens to the incumbent's score between proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IncumbentPolicy {
    /// Keep the estimate from the step the state was accepted. This is what
    /// makes the chain target the exact teaching distribution.
    #[default]
    Retain,
    /// Re-estimate the incumbent every step. Biased; exists so tests can
    /// show the bias.
    Refresh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub docs: Vec<Document>,
    pub retained_log_score: f64,
    pub step: usize,
    pub accepted: bool,
}

/// A pseudo-marginal Metropolis-Hastings chain over document sets of fixed
/// shape.
pub struct PmmhChain<'s, S: DocumentScorer + ?Sized> {
    scorer: &'s S,
    proposal: ProposalConfig,
    policy: IncumbentPolicy,
    vocab_size: usize,
    seed: u64,
    rng: TaskRng,
    state: ChainState,
    accepted: usize,
}

const REFRESH_LABEL: u64 = 1 << 62;

impl<'s, S: DocumentScorer + ?Sized> PmmhChain<'s, S> {
    pub fn new(initial: Vec<Document>, scorer: &'s S, proposal: ProposalConfig, vocab_size: usize, seed: u64) -> Result<Self> {
        let n = total_tokens(&initial);
        if n == 0 {
            return Err(Error::invalid("chain needs at least one token"));
        }
        if proposal.flips_per_step == 0 || proposal.flips_per_step > n {
            return Err(Error::invalid(alloc::format!(
                "flips per step must be in 1..={n}, got {}",
                proposal.flips_per_step
            )));
        }
        check_documents(&initial, vocab_size)?;
        let score = scorer.log_score(&initial, derive_seed(seed, 0))?;
        Ok(Self {
            scorer,
            proposal,
            policy: IncumbentPolicy::Retain,
            vocab_size,
            seed,
            rng: stream_rng(seed, 0),
            state: ChainState {
                docs: initial,
                retained_log_score: score,
                step: 0,
                accepted: true,
            },
            accepted: 0,
        })
    }

    pub fn with_policy(mut self, policy: IncumbentPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }

    /// Fraction of steps so far that accepted their proposal.
    pub fn acceptance_rate(&self) -> f64 {
        if self.state.step == 0 {
            0.0
        } else {
            self.accepted as f64 / self.state.step as f64
        }
    }

    fn propose(&mut self) -> Vec<Document> {
        let mut docs = self.state.docs.clone();
        let n = total_tokens(&docs);
        for _ in 0..self.proposal.flips_per_step {
            let mut pos = self.rng.random_range(0..n);
            let word = self.rng.random_range(0..self.vocab_size);
            for d in docs.iter_mut() {
                if pos < d.len() {
                    d.tokens[pos] = word;
                    break;
                }
                pos -= d.len();
            }
        }
        docs
    }

    /// Advance one step and return the new state.
    pub fn step(&mut self) -> Result<&ChainState> {
        let step = self.state.step + 1;
        let proposal = self.propose();
        debug_assert!(check_documents(&proposal, self.vocab_size).is_ok());
        let fresh = self.scorer.log_score(&proposal, derive_seed(self.seed, step as u64))?;
        let incumbent = match self.policy {
            IncumbentPolicy::Retain => self.state.retained_log_score,
            IncumbentPolicy::Refresh => self
                .scorer
                .log_score(&self.state.docs, derive_seed(self.seed, REFRESH_LABEL | step as u64))?,
        };
        let u = 1.0 - uniform01(&mut self.rng);
        let accept = if fresh.is_nan() || fresh == f64::NEG_INFINITY {
            false
        } else if incumbent == f64::NEG_INFINITY {
            true
        } else {
            log(u) < fresh - incumbent
        };
        self.state.step = step;
        self.state.accepted = accept;
        if accept {
            self.state.docs = proposal;
            self.state.retained_log_score = fresh;
            self.accepted += 1;
        } else if self.policy == IncumbentPolicy::Refresh {
            self.state.retained_log_score = incumbent;
        }
        Ok(&self.state)
    }
}

/// Run `iterations` steps and return every state after the initial one.
pub fn pmmh_run<S: DocumentScorer + ?Sized>(
    initial: Vec<Document>,
    scorer: &S,
    proposal: ProposalConfig,
    vocab_size: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<ChainState>> {
    if iterations == 0 {
        return Err(Error::invalid("chain needs at least one iteration"));
    }
    let mut chain = PmmhChain::new(initial, scorer, proposal, vocab_size, seed)?;
    let mut trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        trace.push(chain.step()?.clone());
    }
    Ok(trace)
}

/// Generate teaching documents for `model` (or a topic subset of it).
#[allow(clippy::too_many_arguments)]
pub fn pmmh_generate(
    initial: Vec<Document>,
    model: &TopicModel,
    subset: Option<&SubsetSpec>,
    hyper: &Hyperparams,
    proposal: ProposalConfig,
    method: ScoreMethod,
    iterations: usize,
    seed: u64,
) -> Result<Vec<ChainState>> {
    model.check_compatible(hyper)?;
    let scorer = TeachingScorer {
        model,
        subset,
        hyper,
        method,
    };
    pmmh_run(initial, &scorer, proposal, hyper.vocab_size(), iterations, seed)
}
