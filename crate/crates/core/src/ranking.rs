//! Ranking corpus documents by teaching score.

use alloc::string::String;
use alloc::vec::Vec;
use libm::sqrt;

use crate::error::{Error, Result};
use crate::exact::log_topic_prior;
use crate::learner::quantile;
use crate::logspace::log_mean_exp;
use crate::model::{Corpus, DocMeta, Document, Hyperparams, TopicModel};
use crate::rng::{derive_seed, hash_str};
use crate::teaching::{subset_teaching_score, teaching_score, ScoreMethod, SubsetSpec};

/// Normalized sum of the target topics' rows (all topics when `None`).
pub fn target_vector(model: &TopicModel, subset: Option<&SubsetSpec>) -> Vec<f64> {
    let mut v = alloc::vec![0.0; model.vocab_size()];
    for t in 0..model.num_topics() {
        if subset.is_none_or(|s| s.contains(t)) {
            v.iter_mut().zip(model.row(t)).for_each(|(a, b)| *a += b);
        }
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

/// One minus the cosine similarity between a document's word counts and
/// `target`. Zero when the counts are proportional to the target.
pub fn cosine_teaching_heuristic(doc: &Document, target: &[f64]) -> Result<f64> {
    if doc.is_empty() {
        return Err(Error::invalid("cosine heuristic needs a nonempty document"));
    }
    doc.check_vocab(target.len())?;
    let tn = sqrt(target.iter().map(|x| x * x).sum::<f64>());
    if !(tn > 0.0) {
        return Err(Error::invalid("cosine target must not be all zero"));
    }
    let counts = doc.counts(target.len());
    let dn = sqrt(counts.iter().map(|&c| (c * c) as f64).sum::<f64>());
    let dot: f64 = counts.iter().zip(target).map(|(&c, t)| c as f64 * t).sum();
    Ok((1.0 - dot / (dn * tn)).clamp(0.0, 2.0))
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / sqrt(sxx * syy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRecord {
    pub id: String,
    pub title: String,
    pub mean_log_teaching: f64,
    /// Sample standard deviation of the per-rep log scores over `sqrt(reps)`.
    pub stderr: f64,
    pub reps: usize,
    /// `(1 / W_d) log l`, with `l` the likelihood under the target topics.
    pub per_word_log_likelihood: f64,
    pub cosine_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingConfig {
    pub reps: usize,
    pub method: ScoreMethod,
    pub subset: Option<SubsetSpec>,
    /// Only score documents at or below this quantile of cosine distance.
    pub cosine_prefilter: Option<f64>,
    pub seed: u64,
}

impl RankingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("ranking needs at least one repetition"));
        }
        if let Some(q) = self.cosine_prefilter {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::invalid("cosine prefilter quantile must be in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Score one document: `reps` independent teaching-score estimates.
pub fn score_document(
    doc: &Document,
    meta: &DocMeta,
    model: &TopicModel,
    hyper: &Hyperparams,
    config: &RankingConfig,
) -> Result<RankingRecord> {
    let docs = core::slice::from_ref(doc);
    let doc_seed = derive_seed(config.seed, hash_str(&meta.id));
    let prior = log_topic_prior(model, hyper, config.subset.as_ref())?;
    let mut scores = Vec::with_capacity(config.reps);
    let mut likelihoods = Vec::with_capacity(config.reps);
    for rep in 0..config.reps {
        let seed = derive_seed(doc_seed, rep as u64);
        let s = match &config.subset {
            None => teaching_score(docs, model, hyper, &config.method, seed)?,
            Some(sub) => subset_teaching_score(docs, model, sub, hyper, &config.method, seed)?,
        };
        scores.push(s.log_score);
        likelihoods.push(s.log_numerator - prior);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let stderr = if scores.len() > 1 {
        sqrt(scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0) / n)
    } else {
        0.0
    };
    let target = target_vector(model, config.subset.as_ref());
    Ok(RankingRecord {
        id: meta.id.clone(),
        title: meta.title.clone(),
        mean_log_teaching: mean,
        stderr,
        reps: config.reps,
        per_word_log_likelihood: log_mean_exp(&likelihoods) / doc.len() as f64,
        cosine_score: cosine_teaching_heuristic(doc, &target)?,
    })
}

/// Documents to score, and ids of the empty documents that were skipped.
pub fn ranking_candidates(corpus: &Corpus, model: &TopicModel, config: &RankingConfig) -> Result<(Vec<usize>, Vec<String>)> {
    config.validate()?;
    let skipped = corpus
        .documents()
        .iter()
        .zip(corpus.meta())
        .filter(|(d, _)| d.is_empty())
        .map(|(_, m)| m.id.clone())
        .collect();
    let mut live: Vec<usize> = (0..corpus.num_documents())
        .filter(|&i| !corpus.documents()[i].is_empty())
        .collect();
    if let Some(q) = config.cosine_prefilter {
        let target = target_vector(model, config.subset.as_ref());
        let cos = live
            .iter()
            .map(|&i| cosine_teaching_heuristic(&corpus.documents()[i], &target))
            .collect::<Result<Vec<_>>>()?;
        if let Some(cut) = quantile(&cos, q) {
            live = live.into_iter().zip(cos).filter(|(_, c)| *c <= cut).map(|(i, _)| i).collect();
        }
    }
    Ok((live, skipped))
}

/// Sort descending by mean log teaching score, ties by id.
pub fn sort_ranking(records: &mut [RankingRecord]) {
    records.sort_by(|a, b| {
        b.mean_log_teaching
            .total_cmp(&a.mean_log_teaching)
            .then_with(|| a.id.cmp(&b.id))
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub records: Vec<RankingRecord>,
    /// Ids of zero-length documents left out of the ranking.
    pub skipped: Vec<String>,
}

/// Score every nonempty document and sort, serially.
pub fn rank_documents(corpus: &Corpus, model: &TopicModel, hyper: &Hyperparams, config: &RankingConfig) -> Result<Ranking> {
    model.check_compatible(hyper)?;
    let (live, skipped) = ranking_candidates(corpus, model, config)?;
    let mut records = live
        .iter()
        .map(|&i| score_document(&corpus.documents()[i], &corpus.meta()[i], model, hyper, config))
        .collect::<Result<Vec<_>>>()?;
    sort_ranking(&mut records);
    Ok(Ranking { records, skipped })
}
