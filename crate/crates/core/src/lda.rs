//! LDA generative sampling and the collapsed Gibbs sampler.

use alloc::vec;
use alloc::vec::Vec;
use libm::log;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::dircat::log_dircat_unchecked;
use crate::error::{Error, Result};
use crate::model::{check_documents, AssignmentState, Corpus, Document, Hyperparams, ThetaSet, TopicModel};
use crate::rng::{sample_weighted, stream_rng};

/// Draw from `Dirichlet(conc)` by normalizing independent gammas.
pub fn sample_dirichlet<R: Rng + ?Sized>(rng: &mut R, conc: &[f64]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = conc
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
            .collect();
        let s: f64 = v.iter().sum();
        // all-underflow only happens for extremely small shapes; redraw
        if s > 0.0 && s.is_finite() {
            v.iter_mut().for_each(|x| *x /= s);
            return v;
        }
    }
}

/// Everything drawn by one pass of the generative process.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeSample {
    pub model: TopicModel,
    pub theta: ThetaSet,
    pub corpus: Corpus,
    pub state: AssignmentState,
}

/// Sample topics, mixtures, labels and words from the LDA prior.
pub fn sample_generative(hyper: &Hyperparams, doc_lengths: &[usize], seed: u64) -> Result<GenerativeSample> {
    if doc_lengths.is_empty() {
        return Err(Error::invalid("need at least one document length"));
    }
    if doc_lengths.contains(&0) {
        return Err(Error::invalid("document lengths must be positive"));
    }
    let mut rng = stream_rng(seed, 0);
    let phi_rows: Vec<Vec<f64>> = (0..hyper.num_topics())
        .map(|_| sample_dirichlet(&mut rng, hyper.beta()))
        .collect();
    let model = TopicModel::from_unnormalized_rows(phi_rows)?;
    let mut theta_rows = Vec::with_capacity(doc_lengths.len());
    let mut docs = Vec::with_capacity(doc_lengths.len());
    let mut z = Vec::with_capacity(doc_lengths.len());
    for &len in doc_lengths {
        let theta = sample_dirichlet(&mut rng, hyper.alpha());
        let (doc, zd) = sample_tokens(&mut rng, &model, &theta, len);
        theta_rows.push(theta);
        docs.push(doc);
        z.push(zd);
    }
    let theta = ThetaSet::from_rows(theta_rows)?;
    let state = AssignmentState::from_assignments(&docs, z, hyper.num_topics(), hyper.vocab_size())?;
    let corpus = Corpus::from_documents(docs, hyper.vocab_size())?;
    Ok(GenerativeSample {
        model,
        theta,
        corpus,
        state,
    })
}

fn sample_tokens<R: Rng + ?Sized>(rng: &mut R, model: &TopicModel, theta: &[f64], len: usize) -> (Document, Vec<usize>) {
    let theta_total: f64 = theta.iter().sum();
    let mut tokens = Vec::with_capacity(len);
    let mut zd = Vec::with_capacity(len);
    for _ in 0..len {
        let t = sample_weighted(rng, theta, theta_total);
        let row = model.row(t);
        let w = sample_weighted(rng, row, row.iter().sum());
        zd.push(t);
        tokens.push(w);
    }
    (Document::new(tokens), zd)
}

/// Documents drawn from LDA with the topics held fixed at `model`: each
/// document gets a fresh `theta ~ Dirichlet(alpha)`.
pub fn sample_documents<R: Rng + ?Sized>(
    rng: &mut R,
    model: &TopicModel,
    hyper: &Hyperparams,
    doc_lengths: &[usize],
) -> Result<Vec<Document>> {
    model.check_compatible(hyper)?;
    Ok(doc_lengths
        .iter()
        .map(|&len| {
            let theta = sample_dirichlet(rng, hyper.alpha());
            sample_tokens(rng, model, &theta, len).0
        })
        .collect())
}

/// Collapsed joint `log p(z, w | alpha, beta)`, evaluated in one batch from
/// count tables.
pub fn log_collapsed_joint(state: &AssignmentState, hyper: &Hyperparams) -> f64 {
    let docs: f64 = (0..state.num_documents())
        .map(|d| log_dircat_unchecked(state.doc_topic_row(d), hyper.alpha()))
        .sum();
    let topics: f64 = (0..state.num_topics())
        .map(|t| log_dircat_unchecked(state.topic_word_row(t), hyper.beta()))
        .sum();
    docs + topics
}

fn check_state(state: &AssignmentState, hyper: &Hyperparams, docs: &[Document]) -> Result<()> {
    if state.num_topics() != hyper.num_topics() || state.vocab_size() != hyper.vocab_size() {
        return Err(Error::DimensionMismatch {
            what: "assignment state shape",
            expected: hyper.num_topics(),
            found: state.num_topics(),
        });
    }
    if state.num_documents() != docs.len() {
        return Err(Error::DimensionMismatch {
            what: "assignment documents",
            expected: docs.len(),
            found: state.num_documents(),
        });
    }
    Ok(())
}

#[inline]
fn conditional_weights(state: &AssignmentState, hyper: &Hyperparams, d: usize, w: usize, current: usize, out: &mut [f64]) -> f64 {
    let alpha = hyper.alpha();
    let beta_w = hyper.beta()[w];
    let beta_sum = hyper.beta_sum();
    let mut total = 0.0;
    for (t, slot) in out.iter_mut().enumerate() {
        let own = (t == current) as u32;
        let ndt = (state.doc_topic(d, t) - own) as f64;
        let ntw = (state.topic_word(t, w) - own) as f64;
        let nt = (state.topic_total(t) - own) as f64;
        let p = (ndt + alpha[t]) * (ntw + beta_w) / (nt + beta_sum);
        *slot = p;
        total += p;
    }
    total
}

/// Normalized full conditional of token `(doc, pos)` with that token removed
/// from both count tables.
pub fn gibbs_conditional(
    state: &AssignmentState,
    hyper: &Hyperparams,
    docs: &[Document],
    doc: usize,
    pos: usize,
) -> Result<Vec<f64>> {
    check_state(state, hyper, docs)?;
    let d = docs.get(doc).ok_or(Error::OutOfRange {
        what: "document",
        index: doc,
        bound: docs.len(),
    })?;
    let &w = d.tokens.get(pos).ok_or(Error::OutOfRange {
        what: "token position",
        index: pos,
        bound: d.len(),
    })?;
    let mut probs = vec![0.0; hyper.num_topics()];
    let total = conditional_weights(state, hyper, doc, w, state.z()[doc][pos], &mut probs);
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// One systematic-scan sweep: every token resampled from its conditional.
pub fn gibbs_sweep<R: Rng + ?Sized>(state: &mut AssignmentState, hyper: &Hyperparams, docs: &[Document], rng: &mut R) {
    let mut buf = vec![0.0; hyper.num_topics()];
    for (d, doc) in docs.iter().enumerate() {
        for (i, &w) in doc.tokens.iter().enumerate() {
            let current = state.z()[d][i];
            let total = conditional_weights(state, hyper, d, w, current, &mut buf);
            let t = sample_weighted(rng, &buf, total);
            if t != current {
                state.remove(d, i, w);
                state.insert(d, i, w, t);
            }
        }
    }
}

/// Uniform random labels for every token.
pub fn random_assignment<R: Rng + ?Sized>(rng: &mut R, docs: &[Document], hyper: &Hyperparams) -> Result<AssignmentState> {
    let t = hyper.num_topics();
    let z = docs
        .iter()
        .map(|d| (0..d.len()).map(|_| rng.random_range(0..t)).collect())
        .collect();
    AssignmentState::from_assignments(docs, z, t, hyper.vocab_size())
}

/// Collapsed Gibbs fit from a uniform random start; returns the final state
/// and the posterior-mean topics.
pub fn gibbs_fit(docs: &[Document], hyper: &Hyperparams, iterations: usize, seed: u64) -> Result<(AssignmentState, TopicModel)> {
    gibbs_fit_with(docs, hyper, iterations, seed, |_, _| {})
}

/// [`gibbs_fit`] with a callback after every sweep (sweep index, state).
pub fn gibbs_fit_with<F>(
    docs: &[Document],
    hyper: &Hyperparams,
    iterations: usize,
    seed: u64,
    mut after_sweep: F,
) -> Result<(AssignmentState, TopicModel)>
where
    F: FnMut(usize, &AssignmentState),
{
    if iterations == 0 {
        return Err(Error::invalid("gibbs_fit needs at least one iteration"));
    }
    if docs.iter().all(Document::is_empty) {
        return Err(Error::invalid("gibbs_fit needs a nonempty corpus"));
    }
    check_documents(docs, hyper.vocab_size())?;
    let mut rng = stream_rng(seed, 0);
    let mut state = random_assignment(&mut rng, docs, hyper)?;
    for it in 0..iterations {
        gibbs_sweep(&mut state, hyper, docs, &mut rng);
        after_sweep(it, &state);
    }
    let topics = state.posterior_mean_topics(hyper);
    Ok((state, topics))
}

/// `sum_i log phi[z_i][w_i]`; `-inf` if any assigned probability is zero.
pub fn log_word_likelihood(docs: &[Document], z: &[Vec<usize>], model: &TopicModel) -> Result<f64> {
    if z.len() != docs.len() {
        return Err(Error::DimensionMismatch {
            what: "assignment documents",
            expected: docs.len(),
            found: z.len(),
        });
    }
    check_documents(docs, model.vocab_size())?;
    let mut acc = 0.0;
    for (doc, zd) in docs.iter().zip(z) {
        if zd.len() != doc.len() {
            return Err(Error::DimensionMismatch {
                what: "assignment tokens",
                expected: doc.len(),
                found: zd.len(),
            });
        }
        for (&w, &t) in doc.tokens.iter().zip(zd) {
            if t >= model.num_topics() {
                return Err(Error::OutOfRange {
                    what: "topic label",
                    index: t,
                    bound: model.num_topics(),
                });
            }
            acc += log(model.prob(t, w));
        }
    }
    Ok(acc)
}
