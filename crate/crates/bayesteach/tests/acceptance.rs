//! Acceptance suite. Each criterion prints one PASS/FAIL line and a summary
//! line follows. With `ACCEPTANCE_STRICT` set the process also exits non-zero
//! when any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 2 5`.

use std::collections::BTreeMap;
use std::time::Instant;

use bayesteach::experiments::{estimator_compare, scaling_bench, summarize_scaling, CompareConfig, ScalingConfig};
use bayesteach::formats::{exact_table, read_csv, OutputFormat};
use bayesteach::parallel;
use bayesteach_core::dircat::{log_dircat, polya_predictive};
use bayesteach_core::estimators::{ess, is_marginal, is_numerator, relative_error};
use bayesteach_core::exact::{
    exact_marginal_likelihood, exact_score_parts, exact_teaching_distribution, exact_teaching_numerator, DocSpaceSpec,
    SpaceWeighting,
};
use bayesteach_core::lda::{gibbs_conditional, gibbs_fit, gibbs_sweep, log_collapsed_joint, sample_dirichlet, sample_generative};
use bayesteach_core::learner::{quantile, run_replication, sse_values, Condition, ExperimentConfig};
use bayesteach_core::logspace::log_sum_exp;
use bayesteach_core::ranking::{pearson, rank_documents, RankingConfig};
use bayesteach_core::rng::{derive_seed, stream_rng};
use bayesteach_core::teaching::{pmmh_generate, teaching_score, IncumbentPolicy, PmmhChain, ProposalConfig, TeachingScorer};
use bayesteach_core::{
    AssignmentState, Corpus, DocMeta, Document, EstimatorConfig, Hyperparams, ScoreMethod, SubsetSpec, TopicModel,
    Vocabulary,
};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn total_variation(p: &BTreeMap<Vec<usize>, f64>, q: &BTreeMap<Vec<usize>, f64>) -> f64 {
    let mut keys: Vec<&Vec<usize>> = p.keys().chain(q.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (p.get(*k).unwrap_or(&0.0) - q.get(*k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Random small instances: topics, hyperparameters and documents from the
/// generative process.
fn oracle_instance(i: u64) -> (Hyperparams, TopicModel, Vec<Document>) {
    let mut rng = stream_rng(derive_seed(1001, i), 0);
    let t = rng.random_range(2..=3);
    let w = rng.random_range(3..=5);
    let n = rng.random_range(4..=8);
    let alpha = rng.random_range(0.2..1.5);
    let beta = rng.random_range(0.2..1.5);
    let lengths = if rng.random_bool(0.5) { vec![n] } else { vec![n / 2, n - n / 2] };
    let hyper = Hyperparams::symmetric(t, w, alpha, beta).unwrap();
    let s = sample_generative(&hyper, &lengths, derive_seed(2002, i)).unwrap();
    (hyper, s.model, s.corpus.documents().to_vec())
}

/// Mean of `exp(estimate - exact)` and its standard error.
fn linear_ratio(estimates: &[f64], exact: f64) -> (f64, f64) {
    let r: Vec<f64> = estimates.iter().map(|e| (e - exact).exp()).collect();
    (mean(&r), (sample_var(&r) / r.len() as f64).sqrt())
}

fn criterion_1() -> Outcome {
    const REPS: u64 = 200;
    const M: usize = 100;
    let cfg = EstimatorConfig::sequential(M);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 0..16 {
        let (hyper, model, docs) = oracle_instance(i);
        let exact_m = exact_marginal_likelihood(&docs, &hyper).unwrap();
        let exact_n = exact_teaching_numerator(&docs, &model, &hyper).unwrap();
        let est_m: Vec<f64> = (0..REPS)
            .map(|r| is_marginal(&docs, &hyper, &cfg, derive_seed(i, r)).unwrap().log_estimate)
            .collect();
        let est_n: Vec<f64> = (0..REPS)
            .map(|r| is_numerator(&docs, &model, &hyper, &cfg, derive_seed(i + 100, r)).unwrap().log_estimate)
            .collect();
        for (what, est, exact) in [("marginal", &est_m, exact_m), ("numerator", &est_n, exact_n)] {
            let (m, se) = linear_ratio(est, exact);
            let z = if se > 0.0 { (m - 1.0).abs() / se } else { 0.0 };
            worst = worst.max(z);
            if (m - 1.0).abs() > 3.0 * se.max(1e-12) {
                failures.push(format!("instance {i} {what}: ratio {m:.4} se {se:.4}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "16 instances x 2 targets, {REPS} reps of M={M}; largest |mean ratio - 1| = {worst:.2} SE{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

const REFERENCE_SIS_ESS: f64 = 890.71;
const REFERENCE_UNIFORM_ESS: f64 = 238.50;

fn criterion_2() -> Outcome {
    let cfg = CompareConfig {
        pairs: 512,
        samples: 1000,
        topics: 3,
        vocab: 5,
        docs: 2,
        doc_len: 5,
        alpha: 0.5,
        beta: 0.5,
        seed: 3003,
    };
    let rows = estimator_compare(&cfg).unwrap();
    let col = |f: &dyn Fn(&bayesteach::experiments::CompareRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let sis_ess = mean(&col(&|r| r.sequential.denominator_log_weight_ess));
    let uni_ess = mean(&col(&|r| r.uniform.denominator_log_weight_ess));
    let sis_kish = mean(&col(&|r| r.sequential.denominator_ess));
    let uni_kish = mean(&col(&|r| r.uniform.denominator_ess));
    let sis_var = sample_var(&col(&|r| r.sequential.log_score - r.exact_log_score));
    let uni_var = sample_var(&col(&|r| r.uniform.log_score - r.exact_log_score));
    let within = |x: f64, reference: f64| (x - reference).abs() <= 0.15 * reference;
    let pass = within(sis_ess, REFERENCE_SIS_ESS) && within(uni_ess, REFERENCE_UNIFORM_ESS) && sis_var < uni_var;
    outcome(
        pass,
        format!(
            "mean ESS sis {sis_ess:.1} (ref {REFERENCE_SIS_ESS}), uniform {uni_ess:.1} (ref {REFERENCE_UNIFORM_ESS}); \
             normalized-weight ESS sis {sis_kish:.1}, uniform {uni_kish:.1}; \
             log-score error variance sis {sis_var:.2e} < uniform {uni_var:.2e}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let cfg = ScalingConfig {
        lengths: vec![10, 20, 40, 60],
        topics: 20,
        vocab: 100,
        priors: vec![(0.1, 0.1), (1.0, 1.0)],
        runs: 1024,
        relative_error: 0.05,
        batch: 50,
        max_samples: 200_000,
        seed: 4004,
    };
    let runs = scaling_bench(&cfg, |_, _| {}).unwrap();
    let summary = summarize_scaling(&runs, cfg.topics);
    let get = |a: f64, n: usize| summary.iter().find(|s| s.alpha == a && s.n == n).unwrap();
    let sparse_60 = get(0.1, 60).mean;
    let in_range = (300.0..=3000.0).contains(&sparse_60);
    let monotone = [0.1, 1.0].iter().all(|&a| cfg.lengths.windows(2).all(|p| get(a, p[1]).mean >= get(a, p[0]).mean));
    let sparser_costs_more = cfg.lengths.iter().all(|&n| get(0.1, n).mean > get(1.0, n).mean);
    let unconverged: usize = summary.iter().map(|s| s.unconverged).sum();
    let table: Vec<String> = summary
        .iter()
        .map(|s| format!("a=b={} n={}: {:.0}", s.alpha, s.n, s.mean))
        .collect();
    outcome(
        in_range && monotone && sparser_costs_more && unconverged == 0,
        format!(
            "mean M at 60 words (alpha=beta=0.1) = {sparse_60:.0}; monotone in n: {monotone}; \
             sparse > dense: {sparser_costs_more}; unconverged {unconverged}; [{}]",
            table.join(", ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let model = TopicModel::from_rows(vec![vec![0.9, 0.05, 0.05], vec![0.05, 0.9, 0.05]]).unwrap();
    let hyper = Hyperparams::symmetric(2, 3, 0.1, 0.1).unwrap();
    let space = DocSpaceSpec {
        num_docs: 1,
        doc_length: 10,
        vocab_size: 3,
    };
    let table = exact_teaching_distribution(&space, &model, None, &hyper, SpaceWeighting::CountVectors).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("simplex.csv");
    exact_table(&table, 3).write(&path, OutputFormat::Csv).unwrap();
    let (header, rows) = read_csv(&path).unwrap();
    let idx = |name: &str| header.iter().position(|h| h == name).unwrap();
    let num = |row: &[String], name: &str| row[idx(name)].parse::<f64>().unwrap();
    let teach_sum: f64 = rows.iter().map(|r| num(r, "teaching")).sum();
    let lik_sum: f64 = rows.iter().map(|r| num(r, "likelihood")).sum();
    let diff_at = |c: [usize; 3]| {
        rows.iter()
            .find(|r| (0..3).all(|w| r[idx(&format!("d0_c{w}"))] == c[w].to_string()))
            .map(|r| num(r, "difference"))
            .unwrap()
    };
    let corners = [diff_at([10, 0, 0]), diff_at([0, 10, 0])];
    let between = [diff_at([5, 5, 0]), diff_at([5, 4, 1]), diff_at([4, 5, 1])];
    let sums_ok = (teach_sum - 1.0).abs() < 1e-9 && (lik_sum - 1.0).abs() < 1e-9;
    let pass = sums_ok && corners.iter().all(|&d| d < 0.0) && between.iter().all(|&d| d > 0.0);
    outcome(
        pass,
        format!(
            "{} rows; sums teaching {teach_sum:.12}, likelihood {lik_sum:.12}; corner differences {:.3e}, {:.3e}; \
             inter-topic differences {:.3e}, {:.3e}, {:.3e}",
            rows.len(),
            corners[0],
            corners[1],
            between[0],
            between[1],
            between[2]
        ),
    )
}

fn chain_histogram<S: bayesteach_core::teaching::DocumentScorer>(
    scorer: &S,
    initial: Vec<Document>,
    steps: usize,
    policy: IncumbentPolicy,
    seed: u64,
) -> BTreeMap<Vec<usize>, f64> {
    let mut chain = PmmhChain::new(initial, scorer, ProposalConfig::default_for(4), 3, seed)
        .unwrap()
        .with_policy(policy);
    let mut hist = BTreeMap::new();
    for _ in 0..steps {
        let s = chain.step().unwrap();
        *hist.entry(s.docs[0].counts(3)).or_insert(0.0) += 1.0 / steps as f64;
    }
    hist
}

fn criterion_5() -> Outcome {
    const STEPS: usize = 100_000;
    let model = TopicModel::from_rows(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
    let hyper = Hyperparams::symmetric(2, 3, 0.5, 0.5).unwrap();
    let space = DocSpaceSpec {
        num_docs: 1,
        doc_length: 4,
        vocab_size: 3,
    };
    let table = exact_teaching_distribution(&space, &model, None, &hyper, SpaceWeighting::Sequences).unwrap();
    let exact: BTreeMap<Vec<usize>, f64> = table.entries.iter().map(|e| (e.counts[0].clone(), e.teaching)).collect();
    let initial = vec![Document::new(vec![0, 1, 2, 0])];
    let scorer = |method| TeachingScorer {
        model: &model,
        subset: None,
        hyper: &hyper,
        method,
    };
    let exact_scorer = scorer(ScoreMethod::Exact);
    let noisy = scorer(ScoreMethod::Estimated {
        numerator: EstimatorConfig::sequential(1),
        denominator: EstimatorConfig::sequential(200),
    });
    let tv_exact = total_variation(&chain_histogram(&exact_scorer, initial.clone(), STEPS, IncumbentPolicy::Retain, 5), &exact);
    let tv_sis = total_variation(&chain_histogram(&noisy, initial.clone(), STEPS, IncumbentPolicy::Retain, 6), &exact);
    let tv_bug = total_variation(&chain_histogram(&noisy, initial, STEPS, IncumbentPolicy::Refresh, 6), &exact);
    let pass = tv_exact < 0.05 && tv_sis < 0.07 && tv_bug >= 2.0 * tv_sis;
    outcome(
        pass,
        format!("TV exact scores {tv_exact:.4}, estimated scores {tv_sis:.4}, refreshed incumbent {tv_bug:.4} ({STEPS} steps)"),
    )
}

fn check_props(failures: &mut Vec<String>, name: &str, result: Result<(), String>) {
    if let Err(e) = result {
        failures.push(format!("{name}: {e}"));
    }
}

fn run_prop<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases: 64,
            failure_persistence: None,
            ..PropConfig::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn small_docs() -> impl Strategy<Value = (usize, usize, Vec<Vec<usize>>)> {
    (2usize..4, 2usize..5).prop_flat_map(|(t, w)| {
        (
            Just(t),
            Just(w),
            proptest::collection::vec(proptest::collection::vec(0..w, 1..4), 1..3),
        )
    })
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();

    check_props(
        &mut failures,
        "dircat chain rule",
        run_prop(
            (proptest::collection::vec(0usize..5, 1..6), 0.05f64..3.0, any::<prop::sample::Index>()),
            |(counts, a, k)| {
                let alpha = vec![a; counts.len()];
                let k = k.index(counts.len());
                let mut next = counts.clone();
                next[k] += 1;
                let lhs = log_dircat(&next, &alpha).unwrap() - log_dircat(&counts, &alpha).unwrap();
                prop_assert!((lhs - polya_predictive(&counts, &alpha, k).ln()).abs() < 1e-10);
                Ok(())
            },
        ),
    );

    check_props(
        &mut failures,
        "gibbs conditional",
        run_prop((small_docs(), any::<u64>(), 0.1f64..2.0, 0.1f64..2.0), |((t, w, raw), seed, a, b)| {
            let hyper = Hyperparams::symmetric(t, w, a, b).unwrap();
            let docs: Vec<Document> = raw.into_iter().map(Document::new).collect();
            let mut rng = stream_rng(seed, 0);
            let z: Vec<Vec<usize>> = docs.iter().map(|d| (0..d.len()).map(|_| rng.random_range(0..t)).collect()).collect();
            let state = AssignmentState::from_assignments(&docs, z, t, w).unwrap();
            let p = gibbs_conditional(&state, &hyper, &docs, 0, 0).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let joints: Vec<f64> = (0..t)
                .map(|k| {
                    let mut s = state.clone();
                    s.set(0, 0, docs[0].tokens[0], k);
                    log_collapsed_joint(&s, &hyper)
                })
                .collect();
            let lse = log_sum_exp(&joints);
            for k in 0..t {
                prop_assert!((p[k] - (joints[k] - lse).exp()).abs() < 1e-10);
            }
            Ok(())
        }),
    );

    check_props(
        &mut failures,
        "count-table conservation",
        run_prop((small_docs(), any::<u64>()), |((t, w, raw), seed)| {
            let hyper = Hyperparams::symmetric(t, w, 0.5, 0.5).unwrap();
            let docs: Vec<Document> = raw.into_iter().map(Document::new).collect();
            let (mut state, _) = gibbs_fit(&docs, &hyper, 2, seed).unwrap();
            gibbs_sweep(&mut state, &hyper, &docs, &mut stream_rng(seed, 9));
            prop_assert!(state.is_consistent(&docs));
            let n: usize = docs.iter().map(Document::len).sum();
            prop_assert_eq!((0..t).map(|k| state.topic_total(k) as usize).sum::<usize>(), n);
            Ok(())
        }),
    );

    check_props(
        &mut failures,
        "ess bounds",
        run_prop((proptest::collection::vec(-30.0f64..5.0, 2..200), -50.0f64..50.0), |(lw, c)| {
            let m = lw.len() as f64;
            prop_assert!(ess(&lw).unwrap() <= m + 1e-9);
            let flat = vec![c; lw.len()];
            prop_assert!((ess(&flat).unwrap() - m).abs() < 1e-9);
            prop_assert!(relative_error(&flat).unwrap().abs() < 1e-12);
            Ok(())
        }),
    );

    check_props(
        &mut failures,
        "topic permutation invariance",
        run_prop(
            (small_docs(), any::<u64>(), proptest::collection::vec(0.2f64..2.0, 3)),
            |((t, w, raw), seed, alphas)| {
                let docs: Vec<Document> = raw.into_iter().map(Document::new).collect();
                let mut rng = stream_rng(seed, 0);
                let rows: Vec<Vec<f64>> = (0..t).map(|_| sample_dirichlet(&mut rng, &vec![1.0; w])).collect();
                let model = TopicModel::from_unnormalized_rows(rows).unwrap();
                let alpha = alphas[..t].to_vec();
                let hyper = Hyperparams::new(alpha.clone(), vec![0.7; w]).unwrap();
                let perm: Vec<usize> = (0..t).rev().collect();
                let permuted = model.permuted(&perm).unwrap();
                let palpha: Vec<f64> = perm.iter().map(|&p| alpha[p]).collect();
                let phyper = Hyperparams::new(palpha, vec![0.7; w]).unwrap();
                let (n1, d1) = exact_score_parts(&docs, &model, None, &hyper).unwrap();
                let (n2, d2) = exact_score_parts(&docs, &permuted, None, &phyper).unwrap();
                prop_assert!(((n1 - d1) - (n2 - d2)).abs() < 1e-9);
                Ok(())
            },
        ),
    );

    let repro = seed_reproducibility();
    check_props(&mut failures, "seed reproducibility", repro);

    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "dircat chain rule, gibbs conditional, count conservation, ess bounds, permutation invariance, \
             seed reproducibility: all hold"
                .to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn seed_reproducibility() -> Result<(), String> {
    fn same<T: PartialEq + std::fmt::Debug>(name: &str, f: impl Fn() -> T) -> Result<(), String> {
        let (a, b) = (f(), f());
        if a == b {
            Ok(())
        } else {
            Err(format!("{name} differs between runs"))
        }
    }
    let hyper = Hyperparams::symmetric(3, 4, 0.5, 0.5).unwrap();
    let gen = sample_generative(&hyper, &[5, 4], 77).unwrap();
    let docs = gen.corpus.documents().to_vec();
    let model = gen.model.clone();
    let sis = EstimatorConfig::sequential(64);
    same("sample_generative", || sample_generative(&hyper, &[5, 4], 77).unwrap())?;
    same("gibbs_fit", || gibbs_fit(&docs, &hyper, 20, 3).unwrap())?;
    same("is_marginal", || is_marginal(&docs, &hyper, &sis, 5).unwrap())?;
    same("is_numerator", || is_numerator(&docs, &model, &hyper, &sis, 5).unwrap())?;
    same("teaching_score", || {
        teaching_score(&docs, &model, &hyper, &ScoreMethod::estimated(sis), 8).unwrap()
    })?;
    same("pmmh_generate", || {
        pmmh_generate(docs.clone(), &model, None, &hyper, ProposalConfig::default_for(9), ScoreMethod::estimated(sis), 30, 4)
            .unwrap()
    })?;
    let exp = ExperimentConfig {
        true_model: model.clone(),
        hyper: hyper.clone(),
        doc_counts: vec![1],
        doc_length: 5,
        replications: 1,
        gibbs_iterations: 10,
        pmmh_steps: 5,
        flips_per_step: None,
        score: ScoreMethod::estimated(sis),
        seed: 12,
    };
    same("run_replication", || run_replication(&exp, 1, 0).unwrap())?;
    let corpus = Corpus::from_documents(docs.clone(), 4).unwrap();
    let rank_cfg = RankingConfig {
        reps: 3,
        method: ScoreMethod::estimated(sis),
        subset: Some(SubsetSpec::new(vec![1], 3).unwrap()),
        cosine_prefilter: None,
        seed: 2,
    };
    same("rank_documents", || rank_documents(&corpus, &model, &hyper, &rank_cfg).unwrap())?;
    let serial = rank_documents(&corpus, &model, &hyper, &rank_cfg).unwrap();
    let par = parallel::with_workers(Some(3), || parallel::rank_documents(&corpus, &model, &hyper, &rank_cfg).unwrap()).unwrap();
    if serial != par {
        return Err("parallel ranking differs from serial".into());
    }
    let cmp = CompareConfig {
        pairs: 4,
        samples: 32,
        topics: 2,
        vocab: 3,
        docs: 1,
        doc_len: 4,
        alpha: 0.5,
        beta: 0.5,
        seed: 1,
    };
    same("estimator_compare", || estimator_compare(&cmp).unwrap())?;
    Ok(())
}

/// Fixed true topics for the learner-error study.
fn learner_truth() -> (TopicModel, Hyperparams) {
    let hyper = Hyperparams::symmetric(3, 10, 0.1, 0.1).unwrap();
    let mut rng = stream_rng(6006, 0);
    let rows = (0..3).map(|_| sample_dirichlet(&mut rng, hyper.beta())).collect();
    (TopicModel::from_unnormalized_rows(rows).unwrap(), hyper)
}

fn criterion_6() -> Outcome {
    let (true_model, hyper) = learner_truth();
    let cfg = ExperimentConfig {
        true_model,
        hyper,
        doc_counts: vec![1, 2, 4],
        doc_length: 20,
        replications: 64,
        gibbs_iterations: 1000,
        pmmh_steps: 500,
        flips_per_step: None,
        score: ScoreMethod::estimated(EstimatorConfig::sequential(200)),
        seed: 6007,
    };
    let records = parallel::learning_experiment(&cfg, |_, _| {}).unwrap();
    let stats = |k: usize, c: Condition| {
        let v = sse_values(&records, c, k);
        (quantile(&v, 0.5).unwrap(), quantile(&v, 0.75).unwrap() - quantile(&v, 0.25).unwrap())
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for &k in &cfg.doc_counts {
        let (mt, _) = stats(k, Condition::Teaching);
        let (mr, iqr) = stats(k, Condition::Random);
        let ok = match k {
            1 | 2 => mt < mr,
            _ => (mt - mr).abs() <= iqr,
        };
        pass &= ok;
        parts.push(format!("{k} docs: median teaching {mt:.4}, random {mr:.4} (IQR {iqr:.4})"));
    }
    outcome(pass, parts.join("; "))
}

fn ranking_corpus() -> (TopicModel, Hyperparams, Corpus) {
    let t = 8;
    let w = 40;
    let hyper = Hyperparams::symmetric(t, w, 50.0 / t as f64, 0.1).unwrap();
    let mut rng = stream_rng(7007, 0);
    let rows = (0..t).map(|_| sample_dirichlet(&mut rng, hyper.beta())).collect();
    let model = TopicModel::from_unnormalized_rows(rows).unwrap();
    let mut docs = Vec::new();
    for _ in 0..200 {
        let len = rng.random_range(3..=20);
        let theta = sample_dirichlet(&mut rng, hyper.alpha());
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let k = bayesteach_core::rng::sample_weighted(&mut rng, &theta, 1.0);
            tokens.push(bayesteach_core::rng::sample_weighted(&mut rng, model.row(k), 1.0));
        }
        docs.push(Document::new(tokens));
    }
    let meta = (0..docs.len())
        .map(|i| DocMeta {
            id: format!("doc{i:03}"),
            title: String::new(),
        })
        .collect();
    let corpus = Corpus::new(docs, Vocabulary::synthetic(w), meta).unwrap();
    (model, hyper, corpus)
}

fn criterion_7() -> Outcome {
    let (model, hyper, corpus) = ranking_corpus();
    let sis = ScoreMethod::estimated(EstimatorConfig::sequential(1000));
    let full_cfg = RankingConfig {
        reps: 4,
        method: sis,
        subset: None,
        cosine_prefilter: None,
        seed: 7008,
    };
    let single_cfg = RankingConfig {
        subset: Some(SubsetSpec::new(vec![0], 8).unwrap()),
        ..full_cfg.clone()
    };
    let r_of = |cfg: &RankingConfig| {
        let ranking = parallel::rank_documents(&corpus, &model, &hyper, cfg).unwrap();
        let x: Vec<f64> = ranking.records.iter().map(|r| r.mean_log_teaching).collect();
        let y: Vec<f64> = ranking.records.iter().map(|r| r.cosine_score).collect();
        pearson(&x, &y).unwrap()
    };
    let r_full = r_of(&full_cfg);
    let r_single = r_of(&single_cfg);

    // 8^7 assignments stays under the enumeration guard
    let short: Vec<usize> = (0..corpus.num_documents())
        .filter(|&i| corpus.documents()[i].len() <= 7)
        .take(30)
        .collect();
    let sub = Corpus::new(
        short.iter().map(|&i| corpus.documents()[i].clone()).collect(),
        corpus.vocabulary().clone(),
        short.iter().map(|&i| corpus.meta()[i].clone()).collect(),
    )
    .unwrap();
    let exact: Vec<(f64, String)> = sub
        .documents()
        .iter()
        .zip(sub.meta())
        .map(|(d, m)| {
            let s = teaching_score(std::slice::from_ref(d), &model, &hyper, &ScoreMethod::Exact, 0).unwrap();
            (s.log_score, m.id.clone())
        })
        .collect();
    let best = exact.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let sub_cfg = RankingConfig {
        reps: 32,
        ..full_cfg.clone()
    };
    let ranked = parallel::rank_documents(&sub, &model, &hyper, &sub_cfg).unwrap();
    let top = &ranked.records[0].id;
    let pass = r_full < -0.5 && r_single <= r_full && *top == best.1;
    outcome(
        pass,
        format!(
            "pearson r full model {r_full:.3}, single topic {r_single:.3}; exact argmax {} over {} short documents, ranked first: {}",
            best.1,
            sub.num_documents(),
            top
        ),
    )
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    type Criterion = (u32, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        (1, "oracle equivalence", criterion_1),
        (2, "estimator comparison", criterion_2),
        (3, "sample-size scaling", criterion_3),
        (4, "simplex density", criterion_4),
        (5, "pseudo-marginal correctness", criterion_5),
        (6, "learner error", criterion_6),
        (7, "ranking", criterion_7),
        (8, "property suites", criterion_8),
    ];
    let mut ran = 0;
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} {verdict} {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            out.detail
        );
        ran += 1;
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
