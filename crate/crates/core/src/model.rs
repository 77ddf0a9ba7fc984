//! Domain types: prior, vocabulary, documents, topic models and assignment
//! count tables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row sums of stochastic matrices must be within this of one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// The LDA prior: topic count, vocabulary size and both concentrations.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    alpha_sum: f64,
    beta_sum: f64,
}

impl Hyperparams {
    /// `alpha` has one entry per topic, `beta` one per vocabulary word.
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("need at least one topic"));
        }
        if beta.is_empty() {
            return Err(Error::invalid("need at least one vocabulary word"));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::domain(format!("alpha entries must be positive, got {a}")));
        }
        if let Some(b) = beta.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::domain(format!("beta entries must be positive, got {b}")));
        }
        let alpha_sum = alpha.iter().sum();
        let beta_sum = beta.iter().sum();
        Ok(Self {
            alpha,
            beta,
            alpha_sum,
            beta_sum,
        })
    }

    /// Constant vectors: `alpha = a` means every topic gets `a`.
    pub fn symmetric(num_topics: usize, vocab_size: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(vec![alpha; num_topics], vec![beta; vocab_size])
    }

    pub fn num_topics(&self) -> usize {
        self.alpha.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.beta.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha_sum
    }

    pub fn beta_sum(&self) -> f64 {
        self.beta_sum
    }

    /// True when every alpha entry equals the first (and same for beta).
    pub fn is_symmetric(&self) -> bool {
        self.alpha.iter().all(|&a| a == self.alpha[0]) && self.beta.iter().all(|&b| b == self.beta[0])
    }
}

/// Bijection between token strings and indices `0..W`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    word_to_index: BTreeMap<String, usize>,
    index_to_word: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Placeholder names `w0, w1, ...` for synthetic corpora.
    pub fn synthetic(size: usize) -> Self {
        let mut v = Self::new();
        for i in 0..size {
            v.insert(&format!("w{i}"));
        }
        v
    }

    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Self::new();
        for w in words {
            let w = w.as_ref();
            if v.index_of(w).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary word {w:?}")));
            }
            v.insert(w);
        }
        Ok(v)
    }

    /// Index of `word`, inserting it if new.
    pub fn insert(&mut self, word: &str) -> usize {
        if let Some(&i) = self.word_to_index.get(word) {
            return i;
        }
        let i = self.index_to_word.len();
        self.word_to_index.insert(word.to_string(), i);
        self.index_to_word.push(word.to_string());
        i
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.word_to_index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.index_to_word.get(index).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.index_to_word
    }

    pub fn len(&self) -> usize {
        self.index_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_word.is_empty()
    }
}

/// A bag of words stored as its token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Document {
    pub tokens: Vec<usize>,
}

impl Document {
    pub fn new(tokens: Vec<usize>) -> Self {
        Self { tokens }
    }

    /// Canonical token sequence for a count vector (word 0 first).
    pub fn from_counts(counts: &[usize]) -> Self {
        let mut tokens = Vec::with_capacity(counts.iter().sum());
        for (w, &c) in counts.iter().enumerate() {
            tokens.extend(core::iter::repeat_n(w, c));
        }
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn counts(&self, vocab_size: usize) -> Vec<usize> {
        let mut c = vec![0; vocab_size];
        for &w in &self.tokens {
            c[w] += 1;
        }
        c
    }

    pub fn check_vocab(&self, vocab_size: usize) -> Result<()> {
        match self.tokens.iter().find(|&&w| w >= vocab_size) {
            Some(&w) => Err(Error::OutOfRange {
                what: "word index",
                index: w,
                bound: vocab_size,
            }),
            None => Ok(()),
        }
    }
}

/// Validate a document set against a vocabulary size.
pub fn check_documents(docs: &[Document], vocab_size: usize) -> Result<()> {
    docs.iter().try_for_each(|d| d.check_vocab(vocab_size))
}

pub fn total_tokens(docs: &[Document]) -> usize {
    docs.iter().map(Document::len).sum()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocMeta {
    pub id: String,
    pub title: String,
}

/// Documents plus their vocabulary and per-document id/title.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
    meta: Vec<DocMeta>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, vocabulary: Vocabulary, meta: Vec<DocMeta>) -> Result<Self> {
        if meta.len() != documents.len() {
            return Err(Error::DimensionMismatch {
                what: "document metadata",
                expected: documents.len(),
                found: meta.len(),
            });
        }
        check_documents(&documents, vocabulary.len())?;
        Ok(Self {
            documents,
            vocabulary,
            meta,
        })
    }

    /// Corpus with a synthetic vocabulary and ids `"0", "1", ...`.
    pub fn from_documents(documents: Vec<Document>, vocab_size: usize) -> Result<Self> {
        let meta = (0..documents.len())
            .map(|i| DocMeta {
                id: i.to_string(),
                title: String::new(),
            })
            .collect();
        Self::new(documents, Vocabulary::synthetic(vocab_size), meta)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn meta(&self) -> &[DocMeta] {
        &self.meta
    }

    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// `n`, the total token count.
    pub fn total_words(&self) -> usize {
        total_tokens(&self.documents)
    }
}

fn check_stochastic_rows(values: &[f64], cols: usize, what: &str) -> Result<()> {
    for (r, row) in values.chunks(cols).enumerate() {
        if let Some(x) = row.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::domain(format!("{what} row {r} has invalid entry {x}")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::domain(format!("{what} row {r} sums to {s}, expected 1")));
        }
    }
    Ok(())
}

fn flatten_rows(rows: Vec<Vec<f64>>, what: &'static str) -> Result<(Vec<f64>, usize, usize)> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::invalid(format!("{what} needs at least one row")));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(Error::invalid(format!("{what} rows must be nonempty")));
    }
    let mut flat = Vec::with_capacity(n * cols);
    for row in rows {
        if row.len() != cols {
            return Err(Error::DimensionMismatch {
                what,
                expected: cols,
                found: row.len(),
            });
        }
        flat.extend(row);
    }
    Ok((flat, n, cols))
}

/// The target hypothesis: `T` word distributions over `W` words, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    phi: Vec<f64>,
    num_topics: usize,
    vocab_size: usize,
}

impl TopicModel {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (phi, num_topics, vocab_size) = flatten_rows(rows, "topic model")?;
        check_stochastic_rows(&phi, vocab_size, "topic")?;
        Ok(Self {
            phi,
            num_topics,
            vocab_size,
        })
    }

    /// Normalize each row of nonnegative weights.
    pub fn from_unnormalized_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    /// Every topic uniform over the vocabulary.
    pub fn uniform(num_topics: usize, vocab_size: usize) -> Self {
        Self {
            phi: vec![1.0 / vocab_size as f64; num_topics * vocab_size],
            num_topics,
            vocab_size,
        }
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    #[inline]
    pub fn prob(&self, topic: usize, word: usize) -> f64 {
        self.phi[topic * self.vocab_size + word]
    }

    pub fn row(&self, topic: usize) -> &[f64] {
        &self.phi[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.phi.chunks(self.vocab_size)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Row `t` of the result is row `perm[t]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_topics {
            return Err(Error::DimensionMismatch {
                what: "topic permutation",
                expected: self.num_topics,
                found: perm.len(),
            });
        }
        Self::from_rows(perm.iter().map(|&p| self.row(p).to_vec()).collect())
    }

    pub fn check_compatible(&self, hyper: &Hyperparams) -> Result<()> {
        if self.num_topics != hyper.num_topics() {
            return Err(Error::DimensionMismatch {
                what: "topic count",
                expected: hyper.num_topics(),
                found: self.num_topics,
            });
        }
        if self.vocab_size != hyper.vocab_size() {
            return Err(Error::DimensionMismatch {
                what: "vocabulary size",
                expected: hyper.vocab_size(),
                found: self.vocab_size,
            });
        }
        Ok(())
    }
}

/// Per-document topic mixtures, `D x T` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSet {
    theta: Vec<f64>,
    num_topics: usize,
}

impl ThetaSet {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (theta, _, num_topics) = flatten_rows(rows, "theta")?;
        check_stochastic_rows(&theta, num_topics, "theta")?;
        Ok(Self { theta, num_topics })
    }

    pub fn num_documents(&self) -> usize {
        self.theta.len() / self.num_topics
    }

    pub fn row(&self, doc: usize) -> &[f64] {
        &self.theta[doc * self.num_topics..(doc + 1) * self.num_topics]
    }
}

/// Token-to-topic labels with their count tables.
///
/// The tables are kept exactly consistent with `z`: every mutation goes
/// through [`AssignmentState::set`], [`AssignmentState::remove`] or
/// [`AssignmentState::insert`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentState {
    z: Vec<Vec<usize>>,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u32>,
    num_topics: usize,
    vocab_size: usize,
}

impl AssignmentState {
    /// Build count tables for labels `z` (one vector per document).
    pub fn from_assignments(docs: &[Document], z: Vec<Vec<usize>>, num_topics: usize, vocab_size: usize) -> Result<Self> {
        if z.len() != docs.len() {
            return Err(Error::DimensionMismatch {
                what: "assignment documents",
                expected: docs.len(),
                found: z.len(),
            });
        }
        check_documents(docs, vocab_size)?;
        let mut state = Self {
            z: Vec::with_capacity(docs.len()),
            doc_topic: vec![0; docs.len() * num_topics],
            topic_word: vec![0; num_topics * vocab_size],
            topic_totals: vec![0; num_topics],
            num_topics,
            vocab_size,
        };
        for (d, (doc, zd)) in docs.iter().zip(z).enumerate() {
            if zd.len() != doc.len() {
                return Err(Error::DimensionMismatch {
                    what: "assignment tokens",
                    expected: doc.len(),
                    found: zd.len(),
                });
            }
            for (&w, &t) in doc.tokens.iter().zip(&zd) {
                if t >= num_topics {
                    return Err(Error::OutOfRange {
                        what: "topic label",
                        index: t,
                        bound: num_topics,
                    });
                }
                state.add_counts(d, t, w);
            }
            state.z.push(zd);
        }
        Ok(state)
    }

    #[inline]
    fn add_counts(&mut self, d: usize, t: usize, w: usize) {
        self.doc_topic[d * self.num_topics + t] += 1;
        self.topic_word[t * self.vocab_size + w] += 1;
        self.topic_totals[t] += 1;
    }

    #[inline]
    fn sub_counts(&mut self, d: usize, t: usize, w: usize) {
        self.doc_topic[d * self.num_topics + t] -= 1;
        self.topic_word[t * self.vocab_size + w] -= 1;
        self.topic_totals[t] -= 1;
    }

    /// Take token `(d, i)` (word `w`) out of the count tables.
    #[inline]
    pub(crate) fn remove(&mut self, d: usize, i: usize, w: usize) {
        let t = self.z[d][i];
        self.sub_counts(d, t, w);
    }

    /// Put token `(d, i)` (word `w`) back with label `t`.
    #[inline]
    pub(crate) fn insert(&mut self, d: usize, i: usize, w: usize, t: usize) {
        self.z[d][i] = t;
        self.add_counts(d, t, w);
    }

    /// Relabel token `(d, i)`; `w` must be its word.
    pub fn set(&mut self, d: usize, i: usize, w: usize, t: usize) {
        self.remove(d, i, w);
        self.insert(d, i, w, t);
    }

    pub fn z(&self) -> &[Vec<usize>] {
        &self.z
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_documents(&self) -> usize {
        self.z.len()
    }

    #[inline]
    pub fn doc_topic(&self, d: usize, t: usize) -> u32 {
        self.doc_topic[d * self.num_topics + t]
    }

    #[inline]
    pub fn topic_word(&self, t: usize, w: usize) -> u32 {
        self.topic_word[t * self.vocab_size + w]
    }

    #[inline]
    pub fn topic_total(&self, t: usize) -> u32 {
        self.topic_totals[t]
    }

    pub fn doc_topic_row(&self, d: usize) -> &[u32] {
        &self.doc_topic[d * self.num_topics..(d + 1) * self.num_topics]
    }

    pub fn topic_word_row(&self, t: usize) -> &[u32] {
        &self.topic_word[t * self.vocab_size..(t + 1) * self.vocab_size]
    }

    /// Recompute the tables from `z` and compare.
    pub fn is_consistent(&self, docs: &[Document]) -> bool {
        match Self::from_assignments(docs, self.z.clone(), self.num_topics, self.vocab_size) {
            Ok(fresh) => fresh == *self,
            Err(_) => false,
        }
    }

    /// Posterior-mean topics `(n_tw + beta_w) / (n_t + sum beta)`.
    pub fn posterior_mean_topics(&self, hyper: &Hyperparams) -> TopicModel {
        let mut phi = Vec::with_capacity(self.num_topics * self.vocab_size);
        for t in 0..self.num_topics {
            let denom = self.topic_totals[t] as f64 + hyper.beta_sum();
            for w in 0..self.vocab_size {
                phi.push((self.topic_word(t, w) as f64 + hyper.beta()[w]) / denom);
            }
        }
        TopicModel {
            phi,
            num_topics: self.num_topics,
            vocab_size: self.vocab_size,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperparams_validation() {
        assert!(Hyperparams::symmetric(3, 5, 0.5, 0.5).is_ok());
        assert!(matches!(Hyperparams::symmetric(3, 5, 0.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(Hyperparams::symmetric(3, 5, 0.5, -1.0), Err(Error::Domain(_))));
        assert!(Hyperparams::symmetric(0, 5, 0.5, 0.5).is_err());
        let h = Hyperparams::symmetric(4, 2, 0.25, 2.0).unwrap();
        assert_eq!(h.alpha(), &[0.25; 4]);
        assert_eq!(h.alpha_sum(), 1.0);
        assert_eq!(h.beta_sum(), 4.0);
    }

    #[test]
    fn vocabulary_round_trip() {
        let v = Vocabulary::from_words(["war", "army", "love"]).unwrap();
        for (i, w) in v.words().iter().enumerate() {
            assert_eq!(v.index_of(w), Some(i));
            assert_eq!(v.word(i), Some(w.as_str()));
        }
        assert!(Vocabulary::from_words(["a", "a"]).is_err());
    }

    #[test]
    fn topic_rows_must_be_stochastic() {
        assert!(TopicModel::from_rows(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert!(TopicModel::from_rows(vec![vec![0.5, 0.6]]).is_err());
        assert!(TopicModel::from_rows(vec![vec![1.5, -0.5]]).is_err());
        assert!(TopicModel::from_rows(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn count_tables_follow_relabeling() {
        let docs = vec![Document::new(vec![0, 1, 1]), Document::new(vec![2])];
        let mut s = AssignmentState::from_assignments(&docs, vec![vec![0, 1, 1], vec![0]], 2, 3).unwrap();
        assert_eq!(s.doc_topic_row(0), &[1, 2]);
        assert_eq!(s.topic_word_row(1), &[0, 2, 0]);
        s.set(0, 1, 1, 0);
        assert_eq!(s.doc_topic_row(0), &[2, 1]);
        assert_eq!(s.topic_total(0), 3);
        assert!(s.is_consistent(&docs));
    }

    #[test]
    fn assignment_rejects_bad_labels() {
        let docs = vec![Document::new(vec![0, 1])];
        assert!(AssignmentState::from_assignments(&docs, vec![vec![0, 2]], 2, 2).is_err());
        assert!(AssignmentState::from_assignments(&docs, vec![vec![0]], 2, 2).is_err());
    }

    #[test]
    fn document_from_counts() {
        let d = Document::from_counts(&[2, 0, 1]);
        assert_eq!(d.tokens, vec![0, 0, 2]);
        assert_eq!(d.counts(3), vec![2, 0, 1]);
    }
}
