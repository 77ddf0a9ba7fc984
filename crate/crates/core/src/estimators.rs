//! Importance-sampling estimators of sums over topic assignments.
//!
//! Two proposals are available. [`ProposalKind::Uniform`] labels every token
//! independently and uniformly. [`ProposalKind::Sequential`] walks the tokens
//! in corpus order (document by document, position by position) and draws
//! each label from the collapsed conditional restricted to the tokens already
//! labelled:
//!
//! ```text
//! q(z_i = t | z_<i, w_<=i)  ∝  (n_dt + alpha_t) * g_t(w_i)
//! ```
//!
//! where `g_t(w)` is `(n_tw + beta_w) / (n_t + sum beta)` for a collapsed
//! topic and `phi[t][w]` for a topic held fixed at the target model. The
//! importance weight is `p(z, w) / q(z)`, accumulated one token at a time.
//!
//! Sample `j` of a run with seed `s` always uses RNG stream `(s, j)`, so a
//! run can be split across workers or extended in batches without changing
//! any weight.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use libm::{exp, log, sqrt};

use crate::error::{Error, Result};
use crate::exact::{log_topic_prior, SumTarget};
use crate::logspace::log_mean_exp;
use crate::model::{check_documents, total_tokens, Document, Hyperparams, TopicModel};
use crate::rng::{sample_weighted, stream_rng, TaskRng};
use crate::teaching::SubsetSpec;

/// Default batch size for [`StopRule`].
pub const DEFAULT_BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProposalKind {
    Uniform,
    Sequential,
}

impl fmt::Display for ProposalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProposalKind::Uniform => "uniform",
            ProposalKind::Sequential => "sequential",
        })
    }
}

impl FromStr for ProposalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ProposalKind::Uniform),
            "sequential" | "sis" => Ok(ProposalKind::Sequential),
            other => Err(Error::invalid(alloc::format!("unknown proposal kind {other:?}"))),
        }
    }
}

/// Keep sampling in batches until the relative error drops below a
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub relative_error: f64,
    pub batch: usize,
    pub max_samples: usize,
}

impl StopRule {
    pub fn new(relative_error: f64, max_samples: usize) -> Self {
        Self {
            relative_error,
            batch: DEFAULT_BATCH,
            max_samples,
        }
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub kind: ProposalKind,
    /// Fixed sample count; ignored when `stop` is set.
    pub samples: usize,
    pub stop: Option<StopRule>,
}

impl EstimatorConfig {
    pub fn sequential(samples: usize) -> Self {
        Self {
            kind: ProposalKind::Sequential,
            samples,
            stop: None,
        }
    }

    pub fn uniform(samples: usize) -> Self {
        Self {
            kind: ProposalKind::Uniform,
            samples,
            stop: None,
        }
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = Some(stop);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.stop {
            None if self.samples == 0 => Err(Error::invalid("estimator needs at least one sample")),
            Some(s) if s.batch < 2 => Err(Error::invalid("stop rule batch must be at least 2")),
            Some(s) if !(s.relative_error > 0.0) => Err(Error::invalid("relative error target must be positive")),
            Some(s) if s.max_samples < s.batch => Err(Error::invalid("max samples must be at least one batch")),
            _ => Ok(()),
        }
    }
}

/// Importance weights with their diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEstimate {
    /// Log of the mean importance weight.
    pub log_estimate: f64,
    pub log_weights: Vec<f64>,
    pub samples: usize,
    /// Kish effective sample size; zero when every weight is zero.
    pub ess: f64,
    /// Relative sample error; `None` below two samples or with no live weight.
    pub relative_error: Option<f64>,
    pub seed: u64,
    /// False when a stop rule ran out of samples before reaching its target.
    pub converged: bool,
}

impl WeightedEstimate {
    pub fn from_log_weights(log_weights: Vec<f64>, seed: u64, converged: bool) -> Self {
        let relative_error = if log_weights.len() >= 2 {
            relative_error(&log_weights).ok()
        } else {
            None
        };
        Self {
            log_estimate: log_mean_exp(&log_weights),
            ess: ess(&log_weights).unwrap_or(0.0),
            samples: log_weights.len(),
            relative_error,
            log_weights,
            seed,
            converged,
        }
    }

    /// ESS from the variance of the log weights, `M / (1 + Var(log w))`.
    pub fn log_weight_ess(&self) -> f64 {
        log_weight_ess(&self.log_weights)
    }

    /// Add a constant to the estimate and every weight.
    pub(crate) fn shifted(mut self, c: f64) -> Self {
        self.log_estimate += c;
        self.log_weights.iter_mut().for_each(|w| *w += c);
        self
    }
}

/// Weights shifted by their max, plus their mean and population variance.
fn shifted_moments(log_weights: &[f64]) -> Result<(f64, f64)> {
    if log_weights.is_empty() {
        return Err(Error::invalid("no importance weights"));
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::AllWeightsZero);
    }
    let m = log_weights.len() as f64;
    let mean = log_weights.iter().map(|&l| exp(l - max)).sum::<f64>() / m;
    let var = log_weights
        .iter()
        .map(|&l| {
            let d = exp(l - max) - mean;
            d * d
        })
        .sum::<f64>()
        / m;
    Ok((mean, var))
}

/// Effective sample size `M / (1 + Var(w / mean w))`.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    let (mean, var) = shifted_moments(log_weights)?;
    Ok(log_weights.len() as f64 / (1.0 + var / (mean * mean)))
}

/// `M / (1 + Var(log w))`, the convention behind the published uniform vs
/// sequential ESS comparison. Zero if any weight is zero.
pub fn log_weight_ess(log_weights: &[f64]) -> f64 {
    let m = log_weights.len() as f64;
    if log_weights.iter().any(|l| !l.is_finite()) {
        return 0.0;
    }
    let mean = log_weights.iter().sum::<f64>() / m;
    let var = log_weights.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / m;
    m / (1.0 + var)
}

/// Relative sample error `sqrt(mean(w^2) / mean(w)^2 - 1) / sqrt(M)`.
pub fn relative_error(log_weights: &[f64]) -> Result<f64> {
    if log_weights.len() < 2 {
        return Err(Error::invalid("relative error needs at least two samples"));
    }
    let (mean, var) = shifted_moments(log_weights)?;
    Ok(sqrt(var / (mean * mean)) / sqrt(log_weights.len() as f64))
}

/// One draw from a proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalDraw {
    /// Labels in corpus order.
    pub z: Vec<usize>,
    pub log_proposal: f64,
    pub log_target: f64,
}

impl ProposalDraw {
    pub fn log_weight(&self) -> f64 {
        self.log_target - self.log_proposal
    }
}

/// Reusable count buffers for one worker.
#[derive(Debug, Clone)]
pub struct Scratch {
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    z: Vec<usize>,
    weights: Vec<f64>,
}

/// Precomputed importance sampler for one document set and target sum.
#[derive(Debug, Clone)]
pub struct ImportanceSampler<'a> {
    hyper: &'a Hyperparams,
    kind: ProposalKind,
    /// (document, word) per token in corpus order
    tokens: Vec<(usize, usize)>,
    /// position of each token within its document
    positions: Vec<usize>,
    num_docs: usize,
    /// `[t * W + w]`: phi for fixed topics
    phi: Option<&'a TopicModel>,
    fixed: Vec<bool>,
}

impl<'a> ImportanceSampler<'a> {
    pub fn new(docs: &[Document], hyper: &'a Hyperparams, target: SumTarget<'a>, kind: ProposalKind) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("estimators need at least one document"));
        }
        check_documents(docs, hyper.vocab_size())?;
        let t = hyper.num_topics();
        let (phi, fixed) = match target {
            SumTarget::Marginal => (None, vec![false; t]),
            SumTarget::Likelihood(m) => {
                m.check_compatible(hyper)?;
                (Some(m), vec![true; t])
            }
            SumTarget::SubsetLikelihood(m, mask) => {
                m.check_compatible(hyper)?;
                if mask.len() != t {
                    return Err(Error::DimensionMismatch {
                        what: "subset mask",
                        expected: t,
                        found: mask.len(),
                    });
                }
                (Some(m), mask.to_vec())
            }
        };
        let mut tokens = Vec::with_capacity(total_tokens(docs));
        let mut positions = Vec::with_capacity(tokens.capacity());
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.tokens.iter().enumerate() {
                tokens.push((d, w));
                positions.push(i);
            }
        }
        Ok(Self {
            hyper,
            kind,
            tokens,
            positions,
            num_docs: docs.len(),
            phi,
            fixed,
        })
    }

    pub fn kind(&self) -> ProposalKind {
        self.kind
    }

    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn scratch(&self) -> Scratch {
        let t = self.hyper.num_topics();
        Scratch {
            doc_topic: vec![0; self.num_docs * t],
            topic_word: vec![0; t * self.hyper.vocab_size()],
            topic_total: vec![0; t],
            z: Vec::with_capacity(self.tokens.len()),
            weights: vec![0.0; t],
        }
    }

    /// Word factor `g_t(w)` given the current counts.
    #[inline]
    fn word_factor(&self, s: &Scratch, t: usize, w: usize) -> f64 {
        if self.fixed[t] {
            self.phi.expect("fixed topics carry a model").prob(t, w)
        } else {
            let wsz = self.hyper.vocab_size();
            (s.topic_word[t * wsz + w] as f64 + self.hyper.beta()[w]) / (s.topic_total[t] as f64 + self.hyper.beta_sum())
        }
    }

    #[inline]
    fn add(&self, s: &mut Scratch, d: usize, w: usize, t: usize) {
        let tn = self.hyper.num_topics();
        s.doc_topic[d * tn + t] += 1;
        s.topic_word[t * self.hyper.vocab_size() + w] += 1;
        s.topic_total[t] += 1;
        s.z.push(t);
    }

    fn reset(&self, s: &mut Scratch) {
        let tn = self.hyper.num_topics();
        let wsz = self.hyper.vocab_size();
        for (&t, &(d, w)) in s.z.iter().zip(&self.tokens) {
            s.doc_topic[d * tn + t] -= 1;
            s.topic_word[t * wsz + w] -= 1;
            s.topic_total[t] -= 1;
        }
        s.z.clear();
    }

    /// Draw one assignment, tracking `log q(z)` and `log p(z, w)` separately.
    /// Returns `None` when the proposal reaches a token no topic can emit.
    pub fn draw(&self, rng: &mut TaskRng, s: &mut Scratch) -> Option<ProposalDraw> {
        let out = self.run(rng, s, true);
        self.reset(s);
        out.map(|(log_q, log_p, z)| ProposalDraw {
            z,
            log_proposal: log_q,
            log_target: log_p,
        })
    }

    /// Log importance weight of sample `index` of a run seeded with `seed`.
    pub fn log_weight(&self, seed: u64, index: u64, s: &mut Scratch) -> f64 {
        let mut rng = stream_rng(seed, index);
        let out = self.run(&mut rng, s, false);
        self.reset(s);
        match out {
            Some((log_q, log_p, _)) => log_p - log_q,
            None => f64::NEG_INFINITY,
        }
    }

    fn run(&self, rng: &mut TaskRng, s: &mut Scratch, keep_z: bool) -> Option<(f64, f64, Vec<usize>)> {
        let tn = self.hyper.num_topics();
        let alpha = self.hyper.alpha();
        let a_sum = self.hyper.alpha_sum();
        let mut log_q = 0.0;
        let mut log_p = 0.0;
        for (k, &(d, w)) in self.tokens.iter().enumerate() {
            let nd = self.positions[k] as f64;
            let t = match self.kind {
                ProposalKind::Uniform => {
                    let t = rand::Rng::random_range(rng, 0..tn);
                    let u = (s.doc_topic[d * tn + t] as f64 + alpha[t]) * self.word_factor(s, t, w);
                    log_q -= log(tn as f64);
                    log_p += log(u) - log(nd + a_sum);
                    t
                }
                ProposalKind::Sequential => {
                    let mut total = 0.0;
                    for (t, &a) in alpha.iter().enumerate() {
                        let u = (s.doc_topic[d * tn + t] as f64 + a) * self.word_factor(s, t, w);
                        s.weights[t] = u;
                        total += u;
                    }
                    if !(total > 0.0) {
                        return None;
                    }
                    let t = sample_weighted(rng, &s.weights, total);
                    let u = s.weights[t];
                    log_q += log(u / total);
                    log_p += log(u) - log(nd + a_sum);
                    t
                }
            };
            self.add(s, d, w, t);
        }
        let z = if keep_z { s.z.clone() } else { Vec::new() };
        Some((log_q, log_p, z))
    }

    /// `log q(z)` of a given assignment under this proposal (replay).
    pub fn proposal_log_density(&self, z: &[usize]) -> Result<f64> {
        if z.len() != self.tokens.len() {
            return Err(Error::DimensionMismatch {
                what: "assignment length",
                expected: self.tokens.len(),
                found: z.len(),
            });
        }
        let tn = self.hyper.num_topics();
        if self.kind == ProposalKind::Uniform {
            return Ok(-(z.len() as f64) * log(tn as f64));
        }
        let mut s = self.scratch();
        let mut acc = 0.0;
        for (&(d, w), &t) in self.tokens.iter().zip(z) {
            let mut total = 0.0;
            for k in 0..tn {
                total += (s.doc_topic[d * tn + k] as f64 + self.hyper.alpha()[k]) * self.word_factor(&s, k, w);
            }
            let u = (s.doc_topic[d * tn + t] as f64 + self.hyper.alpha()[t]) * self.word_factor(&s, t, w);
            acc += log(u / total);
            self.add(&mut s, d, w, t);
        }
        Ok(acc)
    }

    /// Weights for sample indices `[start, end)`.
    pub fn log_weights_range(&self, seed: u64, start: u64, end: u64) -> Vec<f64> {
        let mut s = self.scratch();
        (start..end).map(|j| self.log_weight(seed, j, &mut s)).collect()
    }

    /// Fixed-size or stop-rule estimate, computed serially.
    pub fn estimate(&self, config: &EstimatorConfig, seed: u64) -> Result<WeightedEstimate> {
        config.validate()?;
        match config.stop {
            None => Ok(WeightedEstimate::from_log_weights(
                self.log_weights_range(seed, 0, config.samples as u64),
                seed,
                true,
            )),
            Some(rule) => Ok(run_batches(rule, seed, |a, b| self.log_weights_range(seed, a, b))),
        }
    }
}

/// Batch driver for a stop rule. `fill(start, end)` returns the weights of
/// sample indices `[start, end)`.
pub fn run_batches<F>(rule: StopRule, seed: u64, mut fill: F) -> WeightedEstimate
where
    F: FnMut(u64, u64) -> Vec<f64>,
{
    let mut weights: Vec<f64> = Vec::new();
    loop {
        let start = weights.len();
        let end = (start + rule.batch).min(rule.max_samples);
        weights.extend(fill(start as u64, end as u64));
        let reached = relative_error(&weights).is_ok_and(|r| r <= rule.relative_error);
        if reached {
            return WeightedEstimate::from_log_weights(weights, seed, true);
        }
        if weights.len() >= rule.max_samples {
            return WeightedEstimate::from_log_weights(weights, seed, false);
        }
    }
}

/// Estimate the learner's marginal likelihood `m(w)`.
pub fn is_marginal(docs: &[Document], hyper: &Hyperparams, config: &EstimatorConfig, seed: u64) -> Result<WeightedEstimate> {
    ImportanceSampler::new(docs, hyper, SumTarget::Marginal, config.kind)?.estimate(config, seed)
}

/// Estimate the likelihood under fixed topics, `theta` integrated out.
pub fn is_likelihood(
    docs: &[Document],
    model: &TopicModel,
    hyper: &Hyperparams,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<WeightedEstimate> {
    ImportanceSampler::new(docs, hyper, SumTarget::Likelihood(model), config.kind)?.estimate(config, seed)
}

/// Estimate the teaching numerator: topic prior density times
/// [`is_likelihood`]. The constant is folded into every weight.
pub fn is_numerator(
    docs: &[Document],
    model: &TopicModel,
    hyper: &Hyperparams,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<WeightedEstimate> {
    let prior = log_topic_prior(model, hyper, None)?;
    Ok(is_likelihood(docs, model, hyper, config, seed)?.shifted(prior))
}

/// Estimate the subset-teaching numerator.
pub fn is_subset_numerator(
    docs: &[Document],
    model: &TopicModel,
    subset: &SubsetSpec,
    hyper: &Hyperparams,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<WeightedEstimate> {
    let prior = log_topic_prior(model, hyper, Some(subset))?;
    let mask = subset.mask(hyper.num_topics())?;
    let est = ImportanceSampler::new(docs, hyper, SumTarget::SubsetLikelihood(model, &mask), config.kind)?.estimate(config, seed)?;
    Ok(est.shifted(prior))
}

/// Sample in batches until the relative error target is met. With a model
/// the numerator is estimated, otherwise the marginal likelihood.
pub fn run_to_target(
    docs: &[Document],
    model: Option<&TopicModel>,
    hyper: &Hyperparams,
    kind: ProposalKind,
    rule: StopRule,
    seed: u64,
) -> Result<WeightedEstimate> {
    let config = EstimatorConfig {
        kind,
        samples: rule.batch,
        stop: Some(rule),
    };
    match model {
        Some(m) => is_numerator(docs, m, hyper, &config, seed),
        None => is_marginal(docs, hyper, &config, seed),
    }
}
