mod common;

use common::synthetic_sharc;
use sharc_core::augment::{build_augmented_corpus, check_provenance, serialize_jsonl, AugmentConfig};
use sharc_core::baseline::{predict_corpus, tune, ParamGrid};
use sharc_core::corpus::parse_corpus;
use sharc_core::eval::{evaluate, EvalOptions, PredictionRecord};
use sharc_core::markers::{annotate_corpus, MatchOptions};
use sharc_core::probe::{probe, ProbeOptions};
use sharc_core::ruleparse::{parse_rule, CueSet, Logic};
use sharc_core::{ClassLabel, Instance, Strictness};

fn corpus() -> Vec<Instance> {
    synthetic_sharc(40, 25, 2024)
}

fn balanced_config(corpus: &[Instance], seed: u64) -> AugmentConfig {
    let mut config = AugmentConfig::with_seed(seed);
    config.total_target = (corpus.len() as f64 * 31506.0 / 21890.0).round() as usize;
    config
}

fn augmented(corpus: &[Instance], seed: u64) -> Vec<Instance> {
    build_augmented_corpus(corpus, &balanced_config(corpus, seed))
        .unwrap()
        .instances
        .into_iter()
        .map(|a| a.instance)
        .collect()
}

#[test]
fn synthetic_rules_parse_as_intended() {
    for i in corpus().iter().take(200) {
        let s = parse_rule(&i.rule_text);
        let disjunctive = i.rule_text.contains(" any of ");
        assert_eq!(s.logic, if disjunctive { Logic::Disjunctive } else { Logic::Conjunctive });
        assert!(s.has_bullets());
    }
}

#[test]
fn augmentation_suppresses_the_clues() {
    let original = corpus();
    let out = build_augmented_corpus(&original, &balanced_config(&original, 13)).unwrap();
    assert!(check_provenance(&original, &out.instances).is_empty());
    for tally in out.manifest.classes.values() {
        assert_eq!(tally.shortfall, 0, "{:#?}", out.manifest.classes);
        assert!((tally.achieved_percentage - tally.target_percentage).abs() <= 0.5, "{:#?}", out.manifest.classes);
    }
    let aug: Vec<Instance> = out.instances.into_iter().map(|a| a.instance).collect();
    let before = probe(&original, &ProbeOptions::default()).unwrap();
    let after = probe(&aug, &ProbeOptions::default()).unwrap();
    let agree = |r: &sharc_core::probe::ProbeReport| r.last_followup_agreement.including_more.percentage.unwrap();
    assert!(agree(&after) <= agree(&before) - 5.0, "{} vs {}", agree(&after), agree(&before));
    let empty = |r: &sharc_core::probe::ProbeReport| r.irrelevant_context.empty_given_irrelevant.percentage.unwrap();
    assert!(empty(&after) < empty(&before));
}

#[test]
fn augmented_corpus_round_trips_through_the_loader() {
    let original = corpus();
    let out = build_augmented_corpus(&original, &balanced_config(&original, 5)).unwrap();
    let bytes = serialize_jsonl(&out.instances);
    let loaded = parse_corpus(std::str::from_utf8(&bytes).unwrap(), "mem", Strictness::Strict).unwrap();
    let plain: Vec<Instance> = out.instances.into_iter().map(|a| a.instance).collect();
    assert_eq!(loaded.instances, plain);
}

#[test]
fn baseline_collapses_on_the_augmented_corpus() {
    let original = corpus();
    let aug = augmented(&original, 13);
    let cues = CueSet::default();
    let tuned = tune(&original, &ParamGrid::default(), &cues).unwrap();
    let score = |data: &[Instance]| {
        let preds: Vec<PredictionRecord> = predict_corpus(data, &tuned.best, &cues).iter().map(|p| p.record()).collect();
        evaluate(data, &preds, EvalOptions::default()).unwrap()
    };
    let before = score(&original);
    let after = score(&aug);
    let (b, a) = (before.combined.unwrap(), after.combined.unwrap());
    assert!(a < b, "augmented {a} vs original {b}");
    assert!(after.per_class_accuracy[&ClassLabel::Irrelevant] < before.per_class_accuracy[&ClassLabel::Irrelevant]);
}

#[test]
fn every_followup_gets_a_span() {
    let (annotations, coverage) = annotate_corpus(&corpus(), MatchOptions::default());
    assert_eq!(coverage.coverage, Some(1.0), "{:?}", coverage.missing_span_ids);
    for a in &annotations {
        a.validate().unwrap();
    }
}

#[test]
fn probe_sees_the_planted_shortcuts() {
    let r = probe(&corpus(), &ProbeOptions::default()).unwrap();
    assert!(r.last_followup_agreement.yes_no.percentage.unwrap() > 80.0);
    assert_eq!(r.irrelevant_context.empty_given_irrelevant.percentage, Some(100.0));
}
