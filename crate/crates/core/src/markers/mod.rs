//! Per-token supervision for marker embeddings.
//!
//! Each rule token gets three labels:
//!
//! * a history marker (`yes`/`no` answer of the follow-up question it was
//!   aligned to, or `phi`) together with the 1-based turn of that question,
//! * a scenario marker with the same alphabet, aligned against the evidence
//!   follow-ups that crowd-workers saw when writing the scenario,
//! * for follow-up instances, membership in the gold span: the rule window
//!   aligned to the gold next question.
//!
//! Alignment is one longest common subsequence between the rule tokens and
//! the question tokens (punctuation and markdown markers never match).

pub mod lcs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Answer, ClassLabel, DialogTurn, Instance, TokenizedText};

pub use lcs::{lcs_length, lcs_pairs, tightest_lcs_pairs};

/// Which token form participates in alignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Normalized,
    /// Exact surface forms, case-sensitive.
    Raw,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopwordMode {
    #[default]
    None,
    /// Experimental: function words are excluded from alignment.
    Basic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub mode: MatchMode,
    pub stopwords: StopwordMode,
}

const STOPWORDS: &[&str] = &[
    "a", "am", "an", "and", "are", "as", "at", "be", "been", "being", "by", "can", "could", "did",
    "do", "does", "for", "from", "get", "had", "has", "have", "i", "if", "in", "is", "it", "its",
    "my", "of", "on", "or", "our", "so", "that", "the", "their", "them", "they", "this", "to",
    "was", "we", "were", "will", "with", "would", "you", "your",
];

pub fn is_stopword(normalized: &str) -> bool {
    STOPWORDS.binary_search(&normalized).is_ok()
}

/// Participating tokens as `(original index, key)`.
fn alignment_keys(text: &TokenizedText, options: MatchOptions) -> Vec<(usize, &str)> {
    text.iter()
        .enumerate()
        .filter(|(_, t)| t.is_content())
        .filter(|(_, t)| options.stopwords == StopwordMode::None || !is_stopword(&t.normalized))
        .map(|(i, t)| {
            let key = match options.mode {
                MatchMode::Normalized => t.normalized.as_str(),
                MatchMode::Raw => t.surface.as_str(),
            };
            (i, key)
        })
        .collect()
}

fn align(
    rule: &TokenizedText,
    utterance: &TokenizedText,
    options: MatchOptions,
    tightest: bool,
) -> Vec<(usize, usize)> {
    let a = alignment_keys(rule, options);
    let b = alignment_keys(utterance, options);
    let ka: Vec<&str> = a.iter().map(|p| p.1).collect();
    let kb: Vec<&str> = b.iter().map(|p| p.1).collect();
    let pairs = if tightest {
        tightest_lcs_pairs(&ka, &kb)
    } else {
        lcs_pairs(&ka, &kb)
    };
    pairs.into_iter().map(|(i, j)| (a[i].0, b[j].0)).collect()
}

/// Leftmost longest common subsequence of rule and utterance tokens, as
/// `(rule_index, utterance_index)` pairs strictly increasing in both.
pub fn lcs_match(rule: &TokenizedText, utterance: &TokenizedText) -> Vec<(usize, usize)> {
    lcs_match_with(rule, utterance, MatchOptions::default())
}

pub fn lcs_match_with(
    rule: &TokenizedText,
    utterance: &TokenizedText,
    options: MatchOptions,
) -> Vec<(usize, usize)> {
    align(rule, utterance, options, false)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    Yes,
    No,
    #[default]
    Phi,
}

impl From<Answer> for Marker {
    fn from(answer: Answer) -> Self {
        match answer {
            Answer::Yes => Marker::Yes,
            Answer::No => Marker::No,
        }
    }
}

/// The pair a marker embedding sums for one token: history answer plus
/// turn, and scenario answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CombinedMarker {
    pub history: Marker,
    pub turn: u32,
    pub scenario: Marker,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnnotationFlag {
    /// A follow-up instance whose gold question aligns to no rule token.
    NoGoldSpan,
    /// A history question that aligned to no rule token.
    UnalignedHistoryTurn { turn: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerAnnotation {
    pub utterance_id: String,
    pub label: ClassLabel,
    pub rule_tokens: TokenizedText,
    pub history_marker: Vec<Marker>,
    /// 0 = not covered, else the 1-based history turn.
    pub turn_index: Vec<u32>,
    pub scenario_marker: Vec<Marker>,
    /// Inclusive rule-token range.
    pub gold_span: Option<(usize, usize)>,
    pub flags: Vec<AnnotationFlag>,
    /// Where scenario markers come from; always gold evidence here.
    pub scenario_source: String,
}

impl MarkerAnnotation {
    pub fn combined(&self) -> Vec<CombinedMarker> {
        self.history_marker
            .iter()
            .zip(&self.turn_index)
            .zip(&self.scenario_marker)
            .map(|((&history, &turn), &scenario)| CombinedMarker {
                history,
                turn,
                scenario,
            })
            .collect()
    }

    /// Checks the structural invariants, returning the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.rule_tokens.len();
        if self.history_marker.len() != n || self.turn_index.len() != n || self.scenario_marker.len() != n {
            return Err("label arrays differ in length from the token list".into());
        }
        for (i, (m, t)) in self.history_marker.iter().zip(&self.turn_index).enumerate() {
            if (*m == Marker::Phi) != (*t == 0) {
                return Err(format!("token {i}: marker {m:?} with turn {t}"));
            }
        }
        if let Some((s, e)) = self.gold_span {
            if s > e || e >= n {
                return Err(format!("span ({s}, {e}) out of range for {n} tokens"));
            }
        }
        Ok(())
    }
}

/// History markers and turn indices per rule token.
///
/// Turns are aligned in conversation order; a later turn overwrites an
/// earlier one on the tokens they share.
pub fn annotate_history(
    rule: &TokenizedText,
    history: &[DialogTurn],
    options: MatchOptions,
) -> (Vec<Marker>, Vec<u32>) {
    let mut markers = vec![Marker::Phi; rule.len()];
    let mut turns = vec![0u32; rule.len()];
    for (t, turn) in history.iter().enumerate() {
        let question = tokenize(&turn.follow_up_question);
        for (i, _) in lcs_match_with(rule, &question, options) {
            markers[i] = turn.follow_up_answer.into();
            turns[i] = t as u32 + 1;
        }
    }
    (markers, turns)
}

/// Scenario markers from evidence follow-ups: same alignment as history,
/// without turn indices.
pub fn annotate_scenario(
    rule: &TokenizedText,
    evidence: &[DialogTurn],
    options: MatchOptions,
) -> Vec<Marker> {
    let mut markers = vec![Marker::Phi; rule.len()];
    for turn in evidence {
        let question = tokenize(&turn.follow_up_question);
        for (i, _) in lcs_match_with(rule, &question, options) {
            markers[i] = turn.follow_up_answer.into();
        }
    }
    markers
}

/// Inclusive rule-token range aligned to the gold follow-up question, or
/// `None` when nothing aligns.
///
/// Among the longest alignments the narrowest rule window is used, so a
/// gold question copied verbatim from a clause maps exactly onto it.
pub fn extract_gold_span(
    rule: &TokenizedText,
    gold_followup: &str,
    options: MatchOptions,
) -> Option<(usize, usize)> {
    let pairs = align(rule, &tokenize(gold_followup), options, true);
    Some((pairs.first()?.0, pairs.last()?.0))
}

pub fn annotate_instance(instance: &Instance, options: MatchOptions) -> MarkerAnnotation {
    let rule_tokens = tokenize(&instance.rule_text);
    let label = instance.label();
    let (history_marker, turn_index) = annotate_history(&rule_tokens, &instance.history, options);
    let scenario_marker = annotate_scenario(&rule_tokens, &instance.evidence, options);
    let mut flags = Vec::new();
    for t in 1..=instance.history.len() as u32 {
        if !turn_index.contains(&t)
            && lcs_match_with(
                &rule_tokens,
                &tokenize(&instance.history[t as usize - 1].follow_up_question),
                options,
            )
            .is_empty()
        {
            flags.push(AnnotationFlag::UnalignedHistoryTurn { turn: t });
        }
    }
    let gold_span = if label == ClassLabel::More {
        let span = extract_gold_span(&rule_tokens, &instance.gold_answer, options);
        if span.is_none() {
            flags.push(AnnotationFlag::NoGoldSpan);
        }
        span
    } else {
        None
    };
    MarkerAnnotation {
        utterance_id: instance.utterance_id.clone(),
        label,
        rule_tokens,
        history_marker,
        turn_index,
        scenario_marker,
        gold_span,
        flags,
        scenario_source: "gold-evidence".into(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpanCoverage {
    pub instances: usize,
    pub followup_instances: usize,
    pub with_span: usize,
    /// `with_span / followup_instances`; `None` without follow-up instances.
    pub coverage: Option<f64>,
    pub missing_span_ids: Vec<String>,
}

pub fn span_coverage(annotations: &[MarkerAnnotation]) -> SpanCoverage {
    let followups: Vec<&MarkerAnnotation> = annotations
        .iter()
        .filter(|a| a.label == ClassLabel::More)
        .collect();
    let with_span = followups.iter().filter(|a| a.gold_span.is_some()).count();
    SpanCoverage {
        instances: annotations.len(),
        followup_instances: followups.len(),
        with_span,
        coverage: (!followups.is_empty()).then(|| with_span as f64 / followups.len() as f64),
        missing_span_ids: followups
            .iter()
            .filter(|a| a.gold_span.is_none())
            .map(|a| a.utterance_id.clone())
            .collect(),
    }
}

/// Annotates every instance (in parallel, output in input order).
pub fn annotate_corpus(
    corpus: &[Instance],
    options: MatchOptions,
) -> (Vec<MarkerAnnotation>, SpanCoverage) {
    let annotations: Vec<MarkerAnnotation> = corpus
        .par_iter()
        .map(|instance| annotate_instance(instance, options))
        .collect();
    let coverage = span_coverage(&annotations);
    (annotations, coverage)
}
