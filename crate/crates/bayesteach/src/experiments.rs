//! Drivers for the estimator comparison and the sample-size scaling study.

use bayesteach_core::estimators::{ess, log_weight_ess, run_to_target};
use bayesteach_core::exact::exact_score_parts;
use bayesteach_core::lda::sample_generative;
use bayesteach_core::learner::quantile;
use bayesteach_core::rng::derive_seed;
use bayesteach_core::teaching::teaching_score;
use bayesteach_core::{EstimatorConfig, Hyperparams, ProposalKind, ScoreMethod, StopRule, TeachingScore, WeightedEstimate};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::{Cell, Table};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareConfig {
    pub pairs: usize,
    /// Samples per estimate; numerator and denominator each get this many.
    pub samples: usize,
    pub topics: usize,
    pub vocab: usize,
    pub docs: usize,
    pub doc_len: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl CompareConfig {
    fn validate(&self) -> Result<Hyperparams> {
        if self.pairs == 0 || self.samples == 0 || self.docs == 0 || self.doc_len == 0 {
            return Err(Error::Invalid("pairs, samples, docs and doc_len must be positive".into()));
        }
        Ok(Hyperparams::symmetric(self.topics, self.vocab, self.alpha, self.beta)?)
    }
}

/// Log numerator, log denominator and their diagnostics for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorRow {
    pub log_numerator: f64,
    pub log_denominator: f64,
    pub log_score: f64,
    pub numerator_ess: f64,
    pub denominator_ess: f64,
    pub numerator_log_weight_ess: f64,
    pub denominator_log_weight_ess: f64,
}

impl EstimatorRow {
    fn from_score(s: &TeachingScore) -> Result<Self> {
        let (num, den) = match (&s.numerator_diag, &s.denominator_diag) {
            (Some(n), Some(d)) => (n, d),
            _ => return Err(Error::Invalid("estimated score without diagnostics".into())),
        };
        let kish = |w: &WeightedEstimate| ess(&w.log_weights).unwrap_or(0.0);
        Ok(Self {
            log_numerator: s.log_numerator,
            log_denominator: s.log_denominator,
            log_score: s.log_score,
            numerator_ess: kish(num),
            denominator_ess: kish(den),
            numerator_log_weight_ess: log_weight_ess(&num.log_weights),
            denominator_log_weight_ess: log_weight_ess(&den.log_weights),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub pair: usize,
    pub exact_log_numerator: f64,
    pub exact_log_denominator: f64,
    pub exact_log_score: f64,
    pub uniform: EstimatorRow,
    pub sequential: EstimatorRow,
}

/// One sampled document set and topic model.
pub fn compare_pair(config: &CompareConfig, pair: usize) -> Result<CompareRow> {
    let hyper = config.validate()?;
    let seed = derive_seed(config.seed, pair as u64);
    let sample = sample_generative(&hyper, &vec![config.doc_len; config.docs], seed)?;
    let docs = sample.corpus.documents();
    let (num, den) = exact_score_parts(docs, &sample.model, None, &hyper)?;
    let run = |cfg: EstimatorConfig, label: u64| -> Result<EstimatorRow> {
        let s = teaching_score(docs, &sample.model, &hyper, &ScoreMethod::estimated(cfg), derive_seed(seed, label))?;
        EstimatorRow::from_score(&s)
    };
    Ok(CompareRow {
        pair,
        exact_log_numerator: num,
        exact_log_denominator: den,
        exact_log_score: num - den,
        uniform: run(EstimatorConfig::uniform(config.samples), 1)?,
        sequential: run(EstimatorConfig::sequential(config.samples), 2)?,
    })
}

/// Every pair, in parallel, in pair order.
pub fn estimator_compare(config: &CompareConfig) -> Result<Vec<CompareRow>> {
    config.validate()?;
    (0..config.pairs).into_par_iter().map(|p| compare_pair(config, p)).collect()
}

pub fn compare_table(rows: &[CompareRow]) -> Table {
    let est_cols = [
        "log_numerator",
        "log_denominator",
        "log_score",
        "numerator_ess",
        "denominator_ess",
        "numerator_log_weight_ess",
        "denominator_log_weight_ess",
    ];
    let mut cols: Vec<String> = ["pair", "exact_log_numerator", "exact_log_denominator", "exact_log_score"]
        .map(String::from)
        .to_vec();
    for prefix in ["uniform", "sis"] {
        cols.extend(est_cols.iter().map(|c| format!("{prefix}_{c}")));
    }
    let mut t = Table::new(cols);
    let est = |e: &EstimatorRow| {
        [
            e.log_numerator,
            e.log_denominator,
            e.log_score,
            e.numerator_ess,
            e.denominator_ess,
            e.numerator_log_weight_ess,
            e.denominator_log_weight_ess,
        ]
        .map(Cell::from)
    };
    for r in rows {
        let mut row: Vec<Cell> = vec![
            r.pair.into(),
            r.exact_log_numerator.into(),
            r.exact_log_denominator.into(),
            r.exact_log_score.into(),
        ];
        row.extend(est(&r.uniform));
        row.extend(est(&r.sequential));
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingConfig {
    pub lengths: Vec<usize>,
    pub topics: usize,
    pub vocab: usize,
    /// `(alpha, beta)` settings to sweep.
    pub priors: Vec<(f64, f64)>,
    pub runs: usize,
    pub relative_error: f64,
    pub batch: usize,
    pub max_samples: usize,
    pub seed: u64,
}

impl ScalingConfig {
    fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.contains(&0) || self.priors.is_empty() || self.runs == 0 {
            return Err(Error::Invalid("lengths, priors and runs must be nonempty and positive".into()));
        }
        EstimatorConfig::sequential(1)
            .with_stop(StopRule::new(self.relative_error, self.max_samples).with_batch(self.batch))
            .validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRun {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub run: usize,
    pub samples: usize,
    pub converged: bool,
}

/// Samples the sequential estimator of a single document's marginal
/// likelihood needs to reach the relative-error target. Document and
/// topics are drawn fresh from the prior for every run.
pub fn scaling_run(config: &ScalingConfig, prior: usize, n: usize, run: usize) -> Result<ScalingRun> {
    let (alpha, beta) = config.priors[prior];
    let hyper = Hyperparams::symmetric(config.topics, config.vocab, alpha, beta)?;
    let seed = derive_seed(derive_seed(derive_seed(config.seed, prior as u64), n as u64), run as u64);
    let sample = sample_generative(&hyper, &[n], seed)?;
    let rule = StopRule::new(config.relative_error, config.max_samples).with_batch(config.batch);
    let est = run_to_target(
        sample.corpus.documents(),
        None,
        &hyper,
        ProposalKind::Sequential,
        rule,
        derive_seed(seed, 1),
    )?;
    Ok(ScalingRun {
        n,
        alpha,
        beta,
        run,
        samples: est.samples,
        converged: est.converged,
    })
}

/// Every (prior, length, run) combination, in parallel, in that order.
pub fn scaling_bench<P>(config: &ScalingConfig, progress: P) -> Result<Vec<ScalingRun>>
where
    P: Fn(usize, usize) + Sync,
{
    config.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..config.priors.len())
        .flat_map(|p| config.lengths.iter().flat_map(move |&n| (0..config.runs).map(move |r| (p, n, r))))
        .collect();
    let done = std::sync::atomic::AtomicUsize::new(0);
    jobs.par_iter()
        .map(|&(p, n, r)| {
            let out = scaling_run(config, p, n, r);
            progress(done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1, jobs.len());
            out
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSummary {
    pub n: usize,
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Median samples required.
    pub m_required: f64,
    pub mean: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub runs: usize,
    pub unconverged: usize,
}

/// Group runs by `(alpha, beta, n)`, preserving first-seen order.
pub fn summarize_scaling(runs: &[ScalingRun], topics: usize) -> Vec<ScalingSummary> {
    let mut keys: Vec<(f64, f64, usize)> = Vec::new();
    for r in runs {
        let k = (r.alpha, r.beta, r.n);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(alpha, beta, n)| {
            let group: Vec<&ScalingRun> = runs.iter().filter(|r| (r.alpha, r.beta, r.n) == (alpha, beta, n)).collect();
            let m: Vec<f64> = group.iter().map(|r| r.samples as f64).collect();
            let k = m.len() as f64;
            let mean = m.iter().sum::<f64>() / k;
            let half = if m.len() > 1 {
                let var = m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
                1.96 * (var / k).sqrt()
            } else {
                0.0
            };
            ScalingSummary {
                n,
                topics,
                alpha,
                beta,
                m_required: quantile(&m, 0.5).unwrap_or(f64::NAN),
                mean,
                ci95_low: mean - half,
                ci95_high: mean + half,
                runs: group.len(),
                unconverged: group.iter().filter(|r| !r.converged).count(),
            }
        })
        .collect()
}

pub fn scaling_table(summary: &[ScalingSummary]) -> Table {
    let mut t = Table::new([
        "n",
        "T",
        "alpha",
        "beta",
        "M_required",
        "mean",
        "ci95_low",
        "ci95_high",
        "runs",
        "unconverged",
    ]);
    for s in summary {
        t.push(vec![
            s.n.into(),
            s.topics.into(),
            s.alpha.into(),
            s.beta.into(),
            s.m_required.into(),
            s.mean.into(),
            s.ci95_low.into(),
            s.ci95_high.into(),
            s.runs.into(),
            s.unconverged.into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CompareConfig {
        CompareConfig {
            pairs: 3,
            samples: 50,
            topics: 2,
            vocab: 3,
            docs: 2,
            doc_len: 3,
            alpha: 0.5,
            beta: 0.5,
            seed: 4,
        }
    }

    #[test]
    fn compare_is_deterministic_and_consistent() {
        let a = estimator_compare(&small()).unwrap();
        assert_eq!(a, estimator_compare(&small()).unwrap());
        assert_eq!(a.len(), 3);
        for r in &a {
            assert!((r.exact_log_score - (r.exact_log_numerator - r.exact_log_denominator)).abs() < 1e-12);
            assert!(r.sequential.denominator_ess <= 50.0 + 1e-9);
            assert!((r.sequential.log_denominator - r.exact_log_denominator).abs() < 1.0);
        }
        let t = compare_table(&a);
        assert_eq!(t.rows.len(), 3);
        assert!(t.column("sis_denominator_ess").is_some());
    }

    #[test]
    fn scaling_summary_groups() {
        let cfg = ScalingConfig {
            lengths: vec![3, 6],
            topics: 2,
            vocab: 5,
            priors: vec![(1.0, 1.0)],
            runs: 4,
            relative_error: 0.1,
            batch: 8,
            max_samples: 10_000,
            seed: 1,
        };
        let runs = scaling_bench(&cfg, |_, _| {}).unwrap();
        assert_eq!(runs.len(), 8);
        let s = summarize_scaling(&runs, 2);
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|x| x.runs == 4 && x.ci95_low <= x.mean && x.mean <= x.ci95_high));
        assert_eq!(scaling_table(&s).rows.len(), 2);
    }

    #[test]
    fn bad_configs_rejected() {
        let mut c = small();
        c.pairs = 0;
        assert!(estimator_compare(&c).is_err());
    }
}
