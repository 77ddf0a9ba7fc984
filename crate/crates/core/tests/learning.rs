use bayesteach_core::exact::{exact_teaching_distribution, DocSpaceSpec, SpaceWeighting};
use bayesteach_core::lda::{gibbs_fit, sample_documents};
use bayesteach_core::learner::min_sse_over_permutations;
use bayesteach_core::rng::stream_rng;
use bayesteach_core::teaching::{pmmh_generate, ProposalConfig};
use bayesteach_core::{Document, Hyperparams, ScoreMethod, TopicModel};

fn separated() -> TopicModel {
    TopicModel::from_rows(vec![
        vec![0.5, 0.3, 0.18, 0.005, 0.005, 0.005, 0.005, 0.0, 0.0],
        vec![0.0, 0.005, 0.005, 0.6, 0.2, 0.18, 0.005, 0.005, 0.0],
        vec![0.005, 0.0, 0.005, 0.0, 0.005, 0.005, 0.4, 0.4, 0.18],
    ])
    .unwrap()
}

#[test]
fn gibbs_recovers_separated_topics() {
    let truth = separated();
    let hyper = Hyperparams::symmetric(3, 9, 0.1, 0.1).unwrap();
    let docs = sample_documents(&mut stream_rng(21, 0), &truth, &hyper, &[20; 64]).unwrap();
    let (_, fitted) = gibbs_fit(&docs, &hyper, 200, 22).unwrap();
    let sse = min_sse_over_permutations(&fitted, &truth).unwrap();
    let baseline = min_sse_over_permutations(&TopicModel::uniform(3, 9), &truth).unwrap();
    assert!(sse < 0.1 * baseline, "{sse} vs {baseline}");
}

#[test]
fn chain_with_exact_scores_matches_teaching_distribution() {
    let model = TopicModel::from_rows(vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.2, 0.7]]).unwrap();
    let hyper = Hyperparams::symmetric(2, 3, 0.5, 0.5).unwrap();
    let space = DocSpaceSpec {
        num_docs: 1,
        doc_length: 2,
        vocab_size: 3,
    };
    let table = exact_teaching_distribution(&space, &model, None, &hyper, SpaceWeighting::Sequences).unwrap();
    let steps = 40_000;
    let trace = pmmh_generate(
        vec![Document::new(vec![0, 0])],
        &model,
        None,
        &hyper,
        ProposalConfig { flips_per_step: 1 },
        ScoreMethod::Exact,
        steps,
        31,
    )
    .unwrap();
    let mut tv = 0.0;
    for entry in &table.entries {
        let hits = trace.iter().filter(|s| s.docs[0].counts(3) == entry.counts[0]).count();
        tv += (hits as f64 / trace.len() as f64 - entry.teaching).abs();
    }
    assert!(0.5 * tv < 0.02, "total variation {}", 0.5 * tv);
}
