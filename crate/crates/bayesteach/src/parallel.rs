//! Rayon fan-out for the embarrassingly parallel parts of the core crate.
//!
//! Work is split into fixed-size chunks that do not depend on the thread
//! count, and partial results are combined in index order, so output is
//! bit-identical to a serial run for any number of workers.

use bayesteach_core::estimators::{relative_error, ImportanceSampler};
use bayesteach_core::exact::AssignmentEnumerator;
use bayesteach_core::learner::{run_replication, sort_records, ErrorRecord, ExperimentConfig};
use bayesteach_core::logspace::LogSumAccumulator;
use bayesteach_core::ranking::{ranking_candidates, score_document, sort_ranking, Ranking, RankingConfig};
use bayesteach_core::{Corpus, EstimatorConfig, Hyperparams, TopicModel, WeightedEstimate};
use rayon::prelude::*;

use crate::error::{Error, Result};

const SAMPLE_CHUNK: u64 = 64;
const ENUMERATION_CHUNK: u64 = 1 << 16;

/// Run `f` on a pool of `workers` threads, or on the global pool if `None`.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Invalid("worker count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Invalid(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn chunks(start: u64, end: u64, size: u64) -> Vec<(u64, u64)> {
    (start..end).step_by(size as usize).map(|a| (a, (a + size).min(end))).collect()
}

/// Log weights for sample indices `[start, end)`.
pub fn log_weights(sampler: &ImportanceSampler<'_>, seed: u64, start: u64, end: u64) -> Vec<f64> {
    chunks(start, end, SAMPLE_CHUNK)
        .into_par_iter()
        .map(|(a, b)| sampler.log_weights_range(seed, a, b))
        .collect::<Vec<_>>()
        .concat()
}

/// Parallel counterpart of [`ImportanceSampler::estimate`].
pub fn estimate(sampler: &ImportanceSampler<'_>, config: &EstimatorConfig, seed: u64) -> Result<WeightedEstimate> {
    config.validate()?;
    let Some(rule) = config.stop else {
        return Ok(WeightedEstimate::from_log_weights(
            log_weights(sampler, seed, 0, config.samples as u64),
            seed,
            true,
        ));
    };
    let mut weights: Vec<f64> = Vec::new();
    loop {
        let start = weights.len();
        let end = (start + rule.batch).min(rule.max_samples);
        weights.extend(log_weights(sampler, seed, start as u64, end as u64));
        if relative_error(&weights).is_ok_and(|r| r <= rule.relative_error) {
            return Ok(WeightedEstimate::from_log_weights(weights, seed, true));
        }
        if weights.len() >= rule.max_samples {
            return Ok(WeightedEstimate::from_log_weights(weights, seed, false));
        }
    }
}

/// Full enumeration, chunked across workers and merged in order.
pub fn exact_log_sum(enumerator: &AssignmentEnumerator) -> f64 {
    let parts: Vec<LogSumAccumulator> = chunks(0, enumerator.size(), ENUMERATION_CHUNK)
        .into_par_iter()
        .map(|(a, b)| enumerator.sum_range(a, b))
        .collect();
    let mut total = LogSumAccumulator::new();
    parts.iter().for_each(|p| total.merge(p));
    total.value()
}

/// Parallel counterpart of [`bayesteach_core::ranking::rank_documents`].
pub fn rank_documents(corpus: &Corpus, model: &TopicModel, hyper: &Hyperparams, config: &RankingConfig) -> Result<Ranking> {
    model.check_compatible(hyper)?;
    let (live, skipped) = ranking_candidates(corpus, model, config)?;
    let mut records = live
        .par_iter()
        .map(|&i| score_document(&corpus.documents()[i], &corpus.meta()[i], model, hyper, config))
        .collect::<bayesteach_core::Result<Vec<_>>>()?;
    sort_ranking(&mut records);
    Ok(Ranking { records, skipped })
}

/// Parallel counterpart of
/// [`bayesteach_core::learner::run_learning_experiment`]. `progress` is
/// called after each replication with the number finished so far.
pub fn learning_experiment<P>(config: &ExperimentConfig, progress: P) -> Result<Vec<ErrorRecord>>
where
    P: Fn(usize, usize) + Sync,
{
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .doc_counts
        .iter()
        .flat_map(|&k| (0..config.replications).map(move |r| (k, r)))
        .collect();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let nested = jobs
        .par_iter()
        .map(|&(k, r)| {
            let out = run_replication(config, k, r);
            progress(done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1, jobs.len());
            out
        })
        .collect::<bayesteach_core::Result<Vec<_>>>()?;
    let mut records: Vec<ErrorRecord> = nested.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bayesteach_core::exact::SumTarget;
    use bayesteach_core::{Document, ProposalKind, StopRule};

    fn docs() -> Vec<Document> {
        vec![Document::new(vec![0, 1, 1, 2]), Document::new(vec![2, 2, 0])]
    }

    #[test]
    fn estimate_matches_serial_for_any_worker_count() {
        let h = Hyperparams::symmetric(3, 3, 0.5, 0.5).unwrap();
        let s = ImportanceSampler::new(&docs(), &h, SumTarget::Marginal, ProposalKind::Sequential).unwrap();
        let fixed = EstimatorConfig::sequential(300);
        let stopped = EstimatorConfig::sequential(1).with_stop(StopRule::new(0.05, 5000).with_batch(100));
        for cfg in [fixed, stopped] {
            let serial = s.estimate(&cfg, 9).unwrap();
            for w in [1, 3] {
                let par = with_workers(Some(w), || estimate(&s, &cfg, 9)).unwrap().unwrap();
                assert_eq!(par, serial);
            }
        }
    }

    #[test]
    fn enumeration_matches_serial() {
        let h = Hyperparams::symmetric(3, 3, 0.5, 0.5).unwrap();
        let e = AssignmentEnumerator::new(&docs(), &h, SumTarget::Marginal).unwrap();
        let a = with_workers(Some(1), || exact_log_sum(&e)).unwrap();
        let b = with_workers(Some(4), || exact_log_sum(&e)).unwrap();
        assert_eq!(a, b);
        assert!((a - e.log_sum()).abs() < 1e-12);
    }

    #[test]
    fn learner_matches_serial() {
        let model = bayesteach_core::TopicModel::from_rows(vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.1, 0.8]]).unwrap();
        let cfg = ExperimentConfig {
            true_model: model,
            hyper: Hyperparams::symmetric(2, 3, 0.5, 0.5).unwrap(),
            doc_counts: vec![1, 2],
            doc_length: 4,
            replications: 3,
            gibbs_iterations: 5,
            pmmh_steps: 4,
            flips_per_step: None,
            score: bayesteach_core::ScoreMethod::estimated(EstimatorConfig::sequential(8)),
            seed: 2,
        };
        let serial = bayesteach_core::learner::run_learning_experiment(&cfg).unwrap();
        let par = with_workers(Some(3), || learning_experiment(&cfg, |_, _| {})).unwrap().unwrap();
        assert_eq!(par, serial);
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(with_workers(Some(0), || ()).is_err());
    }
}
