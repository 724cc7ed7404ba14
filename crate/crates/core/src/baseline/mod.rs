//! A deterministic policy built only from dataset shortcuts.
//!
//! Rules are tried in order and the first that fires decides:
//!
//! 1. empty history, empty scenario and little word overlap between question
//!    and rule: `Irrelevant`;
//! 2. a disjunctive rule with a `Yes` in the history: `Yes`; a conjunctive
//!    rule with a `No`: `No`;
//! 3. (bookkeeping) clauses covered by a history question count as asked,
//!    clauses covered by the scenario as resolved;
//! 4. fewer than `l_max` turns and an open clause: ask about the first one;
//! 5. non-empty history: repeat the last follow-up answer;
//! 6. otherwise `No` for a disjunctive rule with nothing resolved, `Yes`
//!    for everything else.

mod followup;
mod tune;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{derive_label, tokenize, Answer, ClassLabel, Instance, TokenizedText};
use crate::eval::PredictionRecord;
use crate::markers::{is_stopword, lcs_match};
use crate::ruleparse::{parse_rule_with, CueSet, Logic, RuleStructure};

pub use followup::{followup_for_text, generate_followup};
pub use tune::{tune, ParamGrid, Trial, TuneReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMeasure {
    /// Share of the question's content words that occur in the rule.
    #[default]
    Containment,
    /// Content-word set Jaccard between question and rule.
    Jaccard,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub tau_irr: f64,
    pub rho: f64,
    /// Values above 1 disable scenario resolution.
    pub rho_s: f64,
    pub l_max: usize,
    #[serde(default)]
    pub overlap: OverlapMeasure,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams {
            tau_irr: 0.2,
            rho: 0.6,
            rho_s: 0.6,
            l_max: 5,
            overlap: OverlapMeasure::Containment,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiredRule {
    IrrelevantClue,
    ShortCircuit,
    FollowUp,
    LastAnswer,
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub utterance_id: String,
    pub output: String,
    pub predicted_class: ClassLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asked_clause_ordinal: Option<usize>,
    pub fired_rule: FiredRule,
}

impl Prediction {
    fn new(instance: &Instance, output: String, fired_rule: FiredRule, asked: Option<usize>) -> Self {
        Prediction {
            utterance_id: instance.utterance_id.clone(),
            predicted_class: derive_label(&output),
            output,
            asked_clause_ordinal: asked,
            fired_rule,
        }
    }

    pub fn record(&self) -> PredictionRecord {
        PredictionRecord {
            utterance_id: self.utterance_id.clone(),
            answer: self.output.clone(),
        }
    }
}

fn content_words(text: &str) -> HashSet<String> {
    tokenize(text)
        .tokens
        .into_iter()
        .filter(|t| t.is_content() && !is_stopword(&t.normalized))
        .map(|t| t.normalized)
        .collect()
}

/// Word overlap between a question and a rule in [0, 1], over content words
/// (punctuation and function words excluded). Zero when either side has none.
pub fn token_overlap(question: &str, rule: &str, measure: OverlapMeasure) -> f64 {
    let q = content_words(question);
    let r = content_words(rule);
    let shared = q.intersection(&r).count() as f64;
    let denominator = match measure {
        OverlapMeasure::Containment => q.len(),
        OverlapMeasure::Jaccard => q.union(&r).count(),
    };
    if denominator == 0 || r.is_empty() {
        0.0
    } else {
        shared / denominator as f64
    }
}

/// Fraction of the clause's content tokens aligned to `other`.
fn coverage(clause: &TokenizedText, other: &TokenizedText) -> f64 {
    let size = clause.iter().filter(|t| t.is_content()).count();
    if size == 0 {
        return 0.0;
    }
    lcs_match(clause, other).len() as f64 / size as f64
}

pub fn predict(instance: &Instance, structure: &RuleStructure, params: &PolicyParams) -> Prediction {
    let say = |class: ClassLabel, rule| Prediction::new(instance, class.as_str().to_string(), rule, None);

    if instance.history.is_empty()
        && !instance.has_scenario()
        && token_overlap(&instance.question, &instance.rule_text, params.overlap) < params.tau_irr
    {
        return say(ClassLabel::Irrelevant, FiredRule::IrrelevantClue);
    }

    let answered = |a: Answer| instance.history.iter().any(|t| t.follow_up_answer == a);
    match structure.logic {
        Logic::Disjunctive if answered(Answer::Yes) => return say(ClassLabel::Yes, FiredRule::ShortCircuit),
        Logic::Conjunctive if answered(Answer::No) => return say(ClassLabel::No, FiredRule::ShortCircuit),
        _ => {}
    }

    let history: Vec<TokenizedText> = instance
        .history
        .iter()
        .map(|t| tokenize(&t.follow_up_question))
        .collect();
    let scenario = tokenize(&instance.scenario);
    let mut any_resolved = false;
    let mut open = Vec::new();
    for clause in structure.askable() {
        let tokens = tokenize(&clause.text);
        let asked = history.iter().any(|h| coverage(&tokens, h) >= params.rho);
        let resolved = instance.has_scenario() && coverage(&tokens, &scenario) >= params.rho_s;
        any_resolved |= resolved;
        if !asked && !resolved {
            open.push(clause);
        }
    }

    if instance.history.len() < params.l_max {
        for clause in open {
            if let Ok(question) = generate_followup(clause) {
                return Prediction::new(instance, question, FiredRule::FollowUp, Some(clause.ordinal));
            }
        }
    }

    if let Some(last) = instance.last_answer() {
        return say(last.label(), FiredRule::LastAnswer);
    }

    match structure.logic {
        Logic::Disjunctive if !any_resolved => say(ClassLabel::No, FiredRule::Fallback),
        _ => say(ClassLabel::Yes, FiredRule::Fallback),
    }
}

/// Predictions for every instance, in input order.
pub fn predict_corpus(corpus: &[Instance], params: &PolicyParams, cues: &CueSet) -> Vec<Prediction> {
    corpus
        .par_iter()
        .map(|i| predict(i, &parse_rule_with(&i.rule_text, cues), params))
        .collect()
}
