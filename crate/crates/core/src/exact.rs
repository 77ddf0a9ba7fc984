//! Brute-force ground truth.
//!
//! Sums over every assignment of tokens to topics (`T^n` terms) and
//! normalizes teaching probabilities over small document spaces. This is
//! deliberately enumeration only: it is the oracle every estimator is checked
//! against.

use alloc::vec;
use alloc::vec::Vec;
use libm::{lgamma, log};

use crate::dircat::log_dirichlet_density;
use crate::error::{Error, Result};
use crate::logspace::LogSumAccumulator;
use crate::model::{check_documents, total_tokens, Document, Hyperparams, TopicModel};
use crate::teaching::SubsetSpec;

/// Largest assignment space (`T^n`) the oracle will enumerate.
pub const ASSIGNMENT_LIMIT: f64 = 1e8;
/// Largest document space [`exact_teaching_distribution`] will enumerate.
pub const DOC_SPACE_LIMIT: f64 = 1e7;

/// Which sum over assignments to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum SumTarget<'a> {
    /// Learner's marginal likelihood: every topic collapsed.
    Marginal,
    /// Likelihood under fixed topics, `theta` integrated out.
    Likelihood(&'a TopicModel),
    /// Fixed topics for the masked ones, collapsed for the rest.
    SubsetLikelihood(&'a TopicModel, &'a [bool]),
}

/// Odometer enumeration of the assignment space with count tables updated
/// one token move at a time.
#[derive(Debug, Clone)]
pub struct AssignmentEnumerator {
    num_topics: usize,
    num_docs: usize,
    /// (document, distinct-word slot) per token
    tokens: Vec<(usize, usize)>,
    num_slots: usize,
    doc_const: f64,
    /// `[t][c]`: lgamma(c + alpha_t) - lgamma(alpha_t)
    doc_tab: Vec<Vec<f64>>,
    /// `[slot][c]`: lgamma(c + beta_w) - lgamma(beta_w)
    word_tab: Vec<Vec<f64>>,
    /// `[c]`: lgamma(B) - lgamma(c + B)
    total_tab: Vec<f64>,
    /// `[t][slot]`: log phi, or `None` for collapsed topics
    log_phi: Vec<Option<Vec<f64>>>,
}

struct Counts {
    z: Vec<usize>,
    doc_topic: Vec<usize>,
    topic_slot: Vec<usize>,
    topic_total: Vec<usize>,
}

impl AssignmentEnumerator {
    pub fn new(docs: &[Document], hyper: &Hyperparams, target: SumTarget<'_>) -> Result<Self> {
        check_documents(docs, hyper.vocab_size())?;
        let t = hyper.num_topics();
        let n = total_tokens(docs);
        let required = libm::pow(t as f64, n as f64);
        if required > ASSIGNMENT_LIMIT {
            return Err(Error::GuardExceeded {
                what: "assignment enumeration",
                required,
                limit: ASSIGNMENT_LIMIT,
            });
        }
        let mut slot_of = vec![usize::MAX; hyper.vocab_size()];
        let mut slot_words = Vec::new();
        let mut tokens = Vec::with_capacity(n);
        for (d, doc) in docs.iter().enumerate() {
            for &w in &doc.tokens {
                if slot_of[w] == usize::MAX {
                    slot_of[w] = slot_words.len();
                    slot_words.push(w);
                }
                tokens.push((d, slot_of[w]));
            }
        }
        let a_sum = hyper.alpha_sum();
        let doc_const = docs.iter().map(|d| lgamma(a_sum) - lgamma(d.len() as f64 + a_sum)).sum();
        let doc_tab = hyper
            .alpha()
            .iter()
            .map(|&a| (0..=n).map(|c| lgamma(c as f64 + a) - lgamma(a)).collect())
            .collect();
        let word_tab = slot_words
            .iter()
            .map(|&w| {
                let b = hyper.beta()[w];
                (0..=n).map(|c| lgamma(c as f64 + b) - lgamma(b)).collect()
            })
            .collect();
        let b_sum = hyper.beta_sum();
        let total_tab = (0..=n).map(|c| lgamma(b_sum) - lgamma(c as f64 + b_sum)).collect();
        let phi_row = |model: &TopicModel, topic: usize| -> Vec<f64> {
            slot_words.iter().map(|&w| log(model.prob(topic, w))).collect()
        };
        let log_phi = match target {
            SumTarget::Marginal => vec![None; t],
            SumTarget::Likelihood(model) => {
                model.check_compatible(hyper)?;
                (0..t).map(|k| Some(phi_row(model, k))).collect()
            }
            SumTarget::SubsetLikelihood(model, mask) => {
                model.check_compatible(hyper)?;
                if mask.len() != t {
                    return Err(Error::DimensionMismatch {
                        what: "subset mask",
                        expected: t,
                        found: mask.len(),
                    });
                }
                (0..t).map(|k| mask[k].then(|| phi_row(model, k))).collect()
            }
        };
        Ok(Self {
            num_topics: t,
            num_docs: docs.len(),
            num_slots: slot_words.len(),
            tokens,
            doc_const,
            doc_tab,
            word_tab,
            total_tab,
            log_phi,
        })
    }

    /// Number of assignments, `T^n`.
    pub fn size(&self) -> u64 {
        (self.num_topics as u64).pow(self.tokens.len() as u32)
    }

    fn counts_at(&self, index: u64) -> Counts {
        let t = self.num_topics;
        let mut c = Counts {
            z: vec![0; self.tokens.len()],
            doc_topic: vec![0; self.num_docs * t],
            topic_slot: vec![0; t * self.num_slots],
            topic_total: vec![0; t],
        };
        let mut rest = index;
        for (i, &(d, s)) in self.tokens.iter().enumerate() {
            let k = (rest % t as u64) as usize;
            rest /= t as u64;
            c.z[i] = k;
            c.doc_topic[d * t + k] += 1;
            c.topic_slot[k * self.num_slots + s] += 1;
            c.topic_total[k] += 1;
        }
        c
    }

    #[inline]
    fn log_term(&self, c: &Counts) -> f64 {
        let t = self.num_topics;
        let mut acc = self.doc_const;
        for d in 0..self.num_docs {
            for k in 0..t {
                acc += self.doc_tab[k][c.doc_topic[d * t + k]];
            }
        }
        for k in 0..t {
            let row = &c.topic_slot[k * self.num_slots..(k + 1) * self.num_slots];
            match &self.log_phi[k] {
                None => {
                    acc += self.total_tab[c.topic_total[k]];
                    for (s, &cnt) in row.iter().enumerate() {
                        acc += self.word_tab[s][cnt];
                    }
                }
                Some(lp) => {
                    for (&cnt, &l) in row.iter().zip(lp) {
                        if cnt > 0 {
                            acc += cnt as f64 * l;
                        }
                    }
                }
            }
        }
        acc
    }

    #[inline]
    fn advance(&self, c: &mut Counts) -> bool {
        let t = self.num_topics;
        for (i, &(d, s)) in self.tokens.iter().enumerate() {
            let old = c.z[i];
            let new = if old + 1 == t { 0 } else { old + 1 };
            c.z[i] = new;
            c.doc_topic[d * t + old] -= 1;
            c.doc_topic[d * t + new] += 1;
            c.topic_slot[old * self.num_slots + s] -= 1;
            c.topic_slot[new * self.num_slots + s] += 1;
            c.topic_total[old] -= 1;
            c.topic_total[new] += 1;
            if new != 0 {
                return true;
            }
        }
        false
    }

    /// Log-sum of the terms with assignment index in `[start, end)`.
    pub fn sum_range(&self, start: u64, end: u64) -> LogSumAccumulator {
        let mut acc = LogSumAccumulator::new();
        let end = end.min(self.size());
        if start >= end {
            return acc;
        }
        let mut c = self.counts_at(start);
        for _ in start..end {
            acc.add(self.log_term(&c));
            if !self.advance(&mut c) {
                break;
            }
        }
        acc
    }

    /// Log of the full sum over assignments.
    pub fn log_sum(&self) -> f64 {
        self.sum_range(0, self.size()).value()
    }
}

/// Exact `log m(w)`: the learner's marginal likelihood.
pub fn exact_marginal_likelihood(docs: &[Document], hyper: &Hyperparams) -> Result<f64> {
    Ok(AssignmentEnumerator::new(docs, hyper, SumTarget::Marginal)?.log_sum())
}

/// Exact log likelihood of the documents under fixed topics, summed over
/// assignments with `theta` integrated out.
pub fn exact_likelihood(docs: &[Document], model: &TopicModel, hyper: &Hyperparams) -> Result<f64> {
    Ok(AssignmentEnumerator::new(docs, hyper, SumTarget::Likelihood(model))?.log_sum())
}

/// `sum_t log Dirichlet(phi_t | beta)` over the topics in `subset` (all
/// topics when `None`).
pub fn log_topic_prior(model: &TopicModel, hyper: &Hyperparams, subset: Option<&SubsetSpec>) -> Result<f64> {
    model.check_compatible(hyper)?;
    let mut acc = 0.0;
    for t in 0..model.num_topics() {
        if subset.is_none_or(|s| s.contains(t)) {
            acc += log_dirichlet_density(model.row(t), hyper.beta())?;
        }
    }
    Ok(acc)
}

/// Exact log teaching numerator: topic prior plus [`exact_likelihood`].
pub fn exact_teaching_numerator(docs: &[Document], model: &TopicModel, hyper: &Hyperparams) -> Result<f64> {
    let prior = log_topic_prior(model, hyper, None)?;
    Ok(prior + exact_likelihood(docs, model, hyper)?)
}

/// Subset likelihood: target topics score words with `phi`, the others are
/// collapsed with `DirCat(w_t | beta)`.
pub fn exact_subset_likelihood(docs: &[Document], model: &TopicModel, subset: &SubsetSpec, hyper: &Hyperparams) -> Result<f64> {
    let mask = subset.mask(hyper.num_topics())?;
    Ok(AssignmentEnumerator::new(docs, hyper, SumTarget::SubsetLikelihood(model, &mask))?.log_sum())
}

/// Exact log subset-teaching numerator.
pub fn exact_subset_numerator(docs: &[Document], model: &TopicModel, subset: &SubsetSpec, hyper: &Hyperparams) -> Result<f64> {
    let prior = log_topic_prior(model, hyper, Some(subset))?;
    Ok(prior + exact_subset_likelihood(docs, model, subset, hyper)?)
}

/// A space of `num_docs` documents, each `doc_length` words over `vocab_size`
/// words, represented by count vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DocSpaceSpec {
    pub num_docs: usize,
    pub doc_length: usize,
    pub vocab_size: usize,
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl DocSpaceSpec {
    /// Count vectors per document: `C(L + W - 1, W - 1)`.
    pub fn per_document(&self) -> f64 {
        binomial(self.doc_length + self.vocab_size - 1, self.vocab_size - 1)
    }

    pub fn size(&self) -> f64 {
        libm::pow(self.per_document(), self.num_docs as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_docs == 0 || self.doc_length == 0 || self.vocab_size == 0 {
            return Err(Error::invalid("document space dimensions must be positive"));
        }
        let required = self.size();
        if required > DOC_SPACE_LIMIT {
            return Err(Error::GuardExceeded {
                what: "document space",
                required,
                limit: DOC_SPACE_LIMIT,
            });
        }
        Ok(())
    }
}

/// All count vectors of length `parts` summing to `total`, in lexicographic
/// order with the first coordinate descending.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(rest);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in (0..=rest).rev() {
            cur.push(c);
            rec(rest - c, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// How documents in the space are weighted when normalizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpaceWeighting {
    /// One representative per count vector.
    #[default]
    CountVectors,
    /// Every token order counted: multiply by the multinomial coefficient.
    Sequences,
}

fn log_multinomial(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    lgamma(n as f64 + 1.0) - counts.iter().map(|&c| lgamma(c as f64 + 1.0)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    /// One count vector per document.
    pub counts: Vec<Vec<usize>>,
    /// Normalized teaching probability.
    pub teaching: f64,
    /// Normalized likelihood.
    pub likelihood: f64,
    pub log_teaching: f64,
    pub log_likelihood: f64,
}

impl TableEntry {
    pub fn difference(&self) -> f64 {
        self.teaching - self.likelihood
    }

    /// Normalized word counts, pooled over the documents.
    pub fn barycenter(&self) -> Vec<f64> {
        let w = self.counts[0].len();
        let mut pooled = vec![0.0; w];
        for c in &self.counts {
            for (p, &x) in pooled.iter_mut().zip(c) {
                *p += x as f64;
            }
        }
        let total: f64 = pooled.iter().sum();
        pooled.iter_mut().for_each(|p| *p /= total);
        pooled
    }

    /// Canonical token sequences for this entry.
    pub fn documents(&self) -> Vec<Document> {
        self.counts.iter().map(|c| Document::from_counts(c)).collect()
    }
}

/// Exact teaching and likelihood distributions over a document space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTeachingTable {
    pub entries: Vec<TableEntry>,
    /// Log of the sum of unnormalized teaching scores.
    pub log_normalizer: f64,
    pub likelihood_log_normalizer: f64,
    pub weighting: SpaceWeighting,
}

impl ExactTeachingTable {
    pub fn argmax_teaching(&self) -> Option<&TableEntry> {
        self.entries.iter().max_by(|a, b| a.teaching.total_cmp(&b.teaching))
    }

    pub fn find(&self, counts: &[Vec<usize>]) -> Option<&TableEntry> {
        self.entries.iter().find(|e| e.counts == counts)
    }
}

/// Exact log numerator and denominator of the teaching score.
pub fn exact_score_parts(
    docs: &[Document],
    model: &TopicModel,
    subset: Option<&SubsetSpec>,
    hyper: &Hyperparams,
) -> Result<(f64, f64)> {
    let num = match subset {
        None => exact_teaching_numerator(docs, model, hyper)?,
        Some(s) => exact_subset_numerator(docs, model, s, hyper)?,
    };
    let den = exact_marginal_likelihood(docs, hyper)?;
    Ok((num, den))
}

/// Enumerate the document space and normalize teaching scores (numerator
/// over marginal likelihood) and likelihoods over it.
pub fn exact_teaching_distribution(
    space: &DocSpaceSpec,
    model: &TopicModel,
    subset: Option<&SubsetSpec>,
    hyper: &Hyperparams,
    weighting: SpaceWeighting,
) -> Result<ExactTeachingTable> {
    space.validate()?;
    if space.vocab_size != hyper.vocab_size() {
        return Err(Error::DimensionMismatch {
            what: "document space vocabulary",
            expected: hyper.vocab_size(),
            found: space.vocab_size,
        });
    }
    model.check_compatible(hyper)?;
    if let Some(s) = subset {
        s.mask(hyper.num_topics())?;
    }
    let per_doc = compositions(space.doc_length, space.vocab_size);
    let mut index = vec![0usize; space.num_docs];
    let mut entries = Vec::new();
    loop {
        let counts: Vec<Vec<usize>> = index.iter().map(|&i| per_doc[i].clone()).collect();
        let docs: Vec<Document> = counts.iter().map(|c| Document::from_counts(c)).collect();
        let (num, den) = exact_score_parts(&docs, model, subset, hyper)?;
        let lik = match subset {
            None => exact_likelihood(&docs, model, hyper)?,
            Some(s) => exact_subset_likelihood(&docs, model, s, hyper)?,
        };
        let extra = match weighting {
            SpaceWeighting::CountVectors => 0.0,
            SpaceWeighting::Sequences => counts.iter().map(|c| log_multinomial(c)).sum(),
        };
        entries.push(TableEntry {
            counts,
            teaching: 0.0,
            likelihood: 0.0,
            log_teaching: num - den + extra,
            log_likelihood: lik + extra,
        });
        // odometer over documents
        let mut k = 0;
        loop {
            if k == space.num_docs {
                return Ok(finish_table(entries, weighting));
            }
            index[k] += 1;
            if index[k] < per_doc.len() {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

fn finish_table(mut entries: Vec<TableEntry>, weighting: SpaceWeighting) -> ExactTeachingTable {
    let mut t_acc = LogSumAccumulator::new();
    let mut l_acc = LogSumAccumulator::new();
    for e in &entries {
        t_acc.add(e.log_teaching);
        l_acc.add(e.log_likelihood);
    }
    let (lt, ll) = (t_acc.value(), l_acc.value());
    for e in &mut entries {
        e.teaching = libm::exp(e.log_teaching - lt);
        e.likelihood = libm::exp(e.log_likelihood - ll);
    }
    ExactTeachingTable {
        entries,
        log_normalizer: lt,
        likelihood_log_normalizer: ll,
        weighting,
    }
}
