use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bayesteach::corpus::{preprocess, read_raw_jsonl, read_stopwords, PreprocessConfig};
use bayesteach::experiments::{
    compare_table, estimator_compare, scaling_bench, scaling_table, summarize_scaling, CompareConfig, ScalingConfig,
};
use bayesteach::formats::{
    error_records_table, exact_table, ranking_table, read_corpus, read_model, write_corpus, write_model, Manifest,
    ModelFile, Table, TraceWriter,
};
use bayesteach::parallel;
use bayesteach_core::exact::{exact_teaching_distribution, DocSpaceSpec, SpaceWeighting};
use bayesteach_core::lda::{gibbs_fit_with, sample_dirichlet, sample_documents};
use bayesteach_core::learner::{quantile, sse_values, Condition, ExperimentConfig};
use bayesteach_core::ranking::{pearson, RankingConfig};
use bayesteach_core::rng::{derive_seed, stream_rng};
use bayesteach_core::teaching::{PmmhChain, ProposalConfig, TeachingScorer};
use bayesteach_core::{
    Corpus, Document, EstimatorConfig, Hyperparams, ScoreMethod, StopRule, SubsetSpec, TopicModel, Vocabulary,
};
use serde::Serialize;

use super::args::*;

/// Some estimate stopped at its sample cap before reaching its target.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct NonConvergence(pub String);

struct Progress {
    quiet: bool,
    label: &'static str,
}

impl Progress {
    fn new(label: &'static str, quiet: bool) -> Self {
        Self { quiet, label }
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}: {}", self.label, msg.as_ref());
        }
    }

    /// Report roughly every tenth of the work.
    fn tick(&self, done: usize, total: usize) {
        let step = (total / 10).max(1);
        if done.is_multiple_of(step) || done == total {
            self.note(format!("{done}/{total}"));
        }
    }
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn start<A: Serialize>(name: &str, common: &Common, args: &A) -> Result<()> {
    if let Some(dir) = common.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let params = serde_json::to_value(args)?;
    Manifest::new(name, common.seed, params).write(&manifest_path(&common.output))?;
    Ok(())
}

fn write_table(table: &Table, common: &Common) -> Result<()> {
    table.write(&common.output, common.format.into())?;
    Ok(())
}

fn load_corpus(args: &CorpusArgs, progress: &Progress) -> Result<Corpus> {
    if args.corpus.extension().is_some_and(|e| e == "jsonl") {
        let raw = read_raw_jsonl(&args.corpus)?;
        let config = PreprocessConfig {
            stopwords: match &args.stopwords {
                Some(p) => read_stopwords(p)?,
                None => Default::default(),
            },
            min_count: args.min_count,
            lowercase: !args.keep_case,
            strip_punct: !args.keep_punct,
        };
        let (corpus, summary) = preprocess(&raw, &config)?;
        progress.note(format!(
            "W={} n={} D={}",
            summary.vocab_size, summary.total_words, summary.num_documents
        ));
        if !summary.empty_documents.is_empty() {
            progress.note(format!("{} documents are empty after preprocessing", summary.empty_documents.len()));
        }
        Ok(corpus)
    } else {
        if args.stopwords.is_some() || args.min_count != 1 {
            bail!("--stopwords and --min-count only apply to raw .jsonl corpora");
        }
        Ok(read_corpus(&args.corpus)?)
    }
}

/// Re-index a corpus onto the model's vocabulary, dropping unknown words.
fn align(corpus: Corpus, words: &[String]) -> Result<Corpus> {
    let vocab = Vocabulary::from_words(words)?;
    let docs = corpus
        .documents()
        .iter()
        .map(|d| {
            Document::new(
                d.tokens
                    .iter()
                    .filter_map(|&t| corpus.vocabulary().word(t).and_then(|w| vocab.index_of(w)))
                    .collect(),
            )
        })
        .collect();
    Ok(Corpus::new(docs, vocab, corpus.meta().to_vec())?)
}

fn hyper_for(file: &ModelFile, model: &TopicModel, alpha: Option<f64>, beta: Option<f64>) -> Result<Hyperparams> {
    let (t, w) = (model.num_topics(), model.vocab_size());
    let stored = file.hyper()?;
    let alpha = match (alpha, &stored) {
        (Some(a), _) => vec![a; t],
        (None, Some(h)) => h.alpha().to_vec(),
        (None, None) => bail!("no --alpha given and none stored in the model file"),
    };
    let beta = match (beta, &stored) {
        (Some(b), _) => vec![b; w],
        (None, Some(h)) => h.beta().to_vec(),
        (None, None) => bail!("no --beta given and none stored in the model file"),
    };
    Ok(Hyperparams::new(alpha, beta)?)
}

fn subset_for(file: &ModelFile, names: &[String], num_topics: usize) -> Result<Option<SubsetSpec>> {
    if names.is_empty() {
        return Ok(None);
    }
    let idx = names.iter().map(|n| file.topic_index(n)).collect::<bayesteach::Result<Vec<_>>>()?;
    Ok(Some(SubsetSpec::new(idx, num_topics)?))
}

fn score_method(args: &ScoreArgs) -> ScoreMethod {
    if args.exact {
        return ScoreMethod::Exact;
    }
    let mut cfg = EstimatorConfig {
        kind: args.proposal.into(),
        samples: args.samples,
        stop: None,
    };
    if let Some(r) = args.relative_error {
        cfg = cfg.with_stop(StopRule::new(r, args.max_samples));
    }
    ScoreMethod::estimated(cfg)
}

pub fn fit(a: &FitArgs) -> Result<()> {
    start("fit", &a.common, a)?;
    let progress = Progress::new("fit", a.common.quiet);
    let corpus = load_corpus(&a.corpus, &progress)?;
    if let Some(p) = &a.save_corpus {
        write_corpus(p, &corpus)?;
    }
    if !a.labels.is_empty() && a.labels.len() != a.topics {
        bail!("{} labels given for {} topics", a.labels.len(), a.topics);
    }
    let alpha = a.alpha.unwrap_or(50.0 / a.topics.max(1) as f64);
    let hyper = Hyperparams::symmetric(a.topics, corpus.vocab_size(), alpha, a.beta)?;
    let step = (a.iterations / 10).max(1);
    let (_, model) = gibbs_fit_with(corpus.documents(), &hyper, a.iterations, a.common.seed, |i, _| {
        if (i + 1) % step == 0 {
            progress.note(format!("sweep {}/{}", i + 1, a.iterations));
        }
    })?;
    let mut file = ModelFile::new(&model).with_hyper(&hyper).with_vocabulary(corpus.vocabulary());
    if !a.labels.is_empty() {
        file.labels = Some(a.labels.clone());
    }
    write_model(&a.common.output, &file)?;
    Ok(())
}

pub fn estimator_compare_cmd(a: &CompareArgs) -> Result<()> {
    start("estimator-compare", &a.common, a)?;
    let progress = Progress::new("estimator-compare", a.common.quiet);
    let cfg = CompareConfig {
        pairs: a.pairs,
        samples: a.samples,
        topics: a.topics,
        vocab: a.vocab,
        docs: a.docs,
        doc_len: a.doc_len,
        alpha: a.alpha,
        beta: a.beta,
        seed: a.common.seed,
    };
    let rows = estimator_compare(&cfg)?;
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&bayesteach::experiments::CompareRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    progress.note(format!(
        "mean denominator ESS: sis {:.2} (log-weight {:.2}), uniform {:.2} (log-weight {:.2})",
        mean(&|r| r.sequential.denominator_ess),
        mean(&|r| r.sequential.denominator_log_weight_ess),
        mean(&|r| r.uniform.denominator_ess),
        mean(&|r| r.uniform.denominator_log_weight_ess),
    ));
    write_table(&compare_table(&rows), &a.common)
}

pub fn scaling_bench_cmd(a: &ScalingArgs) -> Result<()> {
    start("scaling-bench", &a.common, a)?;
    if a.alpha.len() != a.beta.len() {
        bail!("--alpha and --beta need the same number of values");
    }
    let progress = Progress::new("scaling-bench", a.common.quiet);
    let cfg = ScalingConfig {
        lengths: a.lengths.clone(),
        topics: a.topics,
        vocab: a.vocab,
        priors: a.alpha.iter().copied().zip(a.beta.iter().copied()).collect(),
        runs: a.runs,
        relative_error: a.relative_error,
        batch: a.batch,
        max_samples: a.max_samples,
        seed: a.common.seed,
    };
    let runs = scaling_bench(&cfg, |d, t| progress.tick(d, t))?;
    if let Some(p) = &a.runs_output {
        let mut t = Table::new(["n", "alpha", "beta", "run", "samples", "converged"]);
        for r in &runs {
            t.push(vec![r.n.into(), r.alpha.into(), r.beta.into(), r.run.into(), r.samples.into(), r.converged.into()]);
        }
        t.write(p, a.common.format.into())?;
    }
    let summary = summarize_scaling(&runs, a.topics);
    write_table(&scaling_table(&summary), &a.common)?;
    let unconverged: usize = summary.iter().map(|s| s.unconverged).sum();
    if unconverged > 0 {
        return Err(NonConvergence(format!(
            "{unconverged} runs hit --max-samples {} before relative error {}",
            a.max_samples, a.relative_error
        ))
        .into());
    }
    Ok(())
}

pub fn simplex_density(a: &SimplexArgs) -> Result<()> {
    start("simplex-density", &a.common, a)?;
    let file = read_model(&a.topics_file)?;
    let model = file.model()?;
    let hyper = hyper_for(&file, &model, a.alpha, a.beta)?;
    let subset = subset_for(&file, &a.topic, model.num_topics())?;
    let space = DocSpaceSpec {
        num_docs: a.docs,
        doc_length: a.doc_len,
        vocab_size: model.vocab_size(),
    };
    let weighting = match a.weighting {
        Weighting::CountVectors => SpaceWeighting::CountVectors,
        Weighting::Sequences => SpaceWeighting::Sequences,
    };
    let table = exact_teaching_distribution(&space, &model, subset.as_ref(), &hyper, weighting)?;
    write_table(&exact_table(&table, model.vocab_size()), &a.common)
}

pub fn learner_error(a: &LearnerArgs) -> Result<()> {
    start("learner-error", &a.common, a)?;
    let progress = Progress::new("learner-error", a.common.quiet);
    let (true_model, hyper) = match &a.model_file {
        Some(p) => {
            let file = read_model(p)?;
            let model = file.model()?;
            let hyper = hyper_for(&file, &model, Some(a.alpha), Some(a.beta))?;
            (model, hyper)
        }
        None => {
            let hyper = Hyperparams::symmetric(a.topics, a.vocab, a.alpha, a.beta)?;
            let mut rng = stream_rng(derive_seed(a.common.seed, 0x6d6f64656c), 0);
            let rows = (0..a.topics).map(|_| sample_dirichlet(&mut rng, hyper.beta())).collect();
            (TopicModel::from_unnormalized_rows(rows)?, hyper)
        }
    };
    if let Some(p) = &a.save_model {
        write_model(p, &ModelFile::new(&true_model).with_hyper(&hyper))?;
    }
    let cfg = ExperimentConfig {
        true_model,
        hyper,
        doc_counts: a.doc_counts.clone(),
        doc_length: a.doc_len,
        replications: a.replications,
        gibbs_iterations: a.gibbs_iterations,
        pmmh_steps: a.pmmh_steps,
        flips_per_step: a.flips,
        score: score_method(&a.score),
        seed: a.common.seed,
    };
    let records = parallel::learning_experiment(&cfg, |d, t| progress.tick(d, t))?;
    for &k in &a.doc_counts {
        let med = |c| quantile(&sse_values(&records, c, k), 0.5).unwrap_or(f64::NAN);
        progress.note(format!(
            "{k} docs: median SSE teaching {:.4}, random {:.4}",
            med(Condition::Teaching),
            med(Condition::Random)
        ));
    }
    write_table(&error_records_table(&records), &a.common)
}

pub fn teach(a: &TeachArgs) -> Result<()> {
    start("teach", &a.common, a)?;
    let progress = Progress::new("teach", a.common.quiet);
    let file = read_model(&a.model_file)?;
    let model = file.model()?;
    let hyper = hyper_for(&file, &model, a.alpha, a.beta)?;
    let subset = subset_for(&file, &a.topic, model.num_topics())?;
    let initial = match &a.initial {
        Some(p) => {
            let corpus = read_corpus(p)?;
            let corpus = match &file.vocabulary {
                Some(words) => align(corpus, words)?,
                None => corpus,
            };
            corpus.documents().to_vec()
        }
        None => {
            let mut rng = stream_rng(derive_seed(a.common.seed, 0x696e6974), 0);
            sample_documents(&mut rng, &model, &hyper, &vec![a.doc_len; a.docs])?
        }
    };
    let flips = a
        .flips
        .unwrap_or(ProposalConfig::default_for(initial.iter().map(Document::len).sum()).flips_per_step);
    let scorer = TeachingScorer {
        model: &model,
        subset: subset.as_ref(),
        hyper: &hyper,
        method: score_method(&a.score),
    };
    let mut chain = PmmhChain::new(
        initial,
        &scorer,
        ProposalConfig { flips_per_step: flips },
        hyper.vocab_size(),
        a.common.seed,
    )?;
    let out = fs::File::create(&a.common.output).with_context(|| format!("creating {}", a.common.output.display()))?;
    let mut trace = TraceWriter::new(BufWriter::new(out));
    trace.write(chain.state())?;
    for i in 0..a.iterations {
        trace.write(chain.step()?)?;
        progress.tick(i + 1, a.iterations);
    }
    trace.finish()?;
    progress.note(format!("acceptance rate {:.3}", chain.acceptance_rate()));
    Ok(())
}

pub fn rank(a: &RankArgs) -> Result<()> {
    start("rank", &a.common, a)?;
    let progress = Progress::new("rank", a.common.quiet);
    let file = read_model(&a.model_file)?;
    let model = file.model()?;
    let hyper = hyper_for(&file, &model, a.alpha, a.beta)?;
    let subset = subset_for(&file, &a.topic, model.num_topics())?;
    let corpus = load_corpus(&a.corpus, &progress)?;
    let corpus = match &file.vocabulary {
        Some(words) => align(corpus, words)?,
        None if corpus.vocab_size() == model.vocab_size() => corpus,
        None => bail!(
            "corpus has {} words but the model has {} columns and no vocabulary",
            corpus.vocab_size(),
            model.vocab_size()
        ),
    };
    let cfg = RankingConfig {
        reps: a.reps,
        method: score_method(&a.score),
        subset,
        cosine_prefilter: a.prefilter,
        seed: a.common.seed,
    };
    let ranking = parallel::rank_documents(&corpus, &model, &hyper, &cfg)?;
    if !ranking.skipped.is_empty() {
        progress.note(format!("skipped {} empty documents", ranking.skipped.len()));
    }
    let x: Vec<f64> = ranking.records.iter().map(|r| r.mean_log_teaching).collect();
    let y: Vec<f64> = ranking.records.iter().map(|r| r.cosine_score).collect();
    if let Some(r) = pearson(&x, &y) {
        progress.note(format!("pearson r(teaching, cosine) = {r:.3}"));
    }
    write_table(&ranking_table(&ranking.records), &a.common)
}
