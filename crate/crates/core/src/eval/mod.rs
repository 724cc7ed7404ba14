//! Task metrics: classification accuracy over the four classes, BLEU on
//! follow-up generation, and their product.

mod bleu;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{derive_label, ClassLabel, Instance};
use crate::{Error, Result};

pub use bleu::{bleu, bleu_tokens, BleuMode};

/// One system response, as stored in prediction files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub utterance_id: String,
    pub answer: String,
}

/// Rows are gold classes, columns predicted classes, both in
/// [`ClassLabel::ALL`] order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 4]; 4],
}

impl ConfusionMatrix {
    pub fn record(&mut self, gold: ClassLabel, predicted: ClassLabel) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn get(&self, gold: ClassLabel, predicted: ClassLabel) -> usize {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..4).map(|i| self.counts[i][i]).sum()
    }

    pub fn gold_count(&self, label: ClassLabel) -> usize {
        self.counts[label.index()].iter().sum()
    }

    /// Recall of one gold class in percent, `None` if the class is absent.
    pub fn recall(&self, label: ClassLabel) -> Option<f64> {
        let n = self.gold_count(label);
        (n > 0).then(|| 100.0 * self.counts[label.index()][label.index()] as f64 / n as f64)
    }

    pub fn merge(mut self, other: &ConfusionMatrix) -> Self {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
        self
    }
}

/// Pairs each gold instance with its prediction; both id sets must agree.
fn align<'a>(
    gold: &'a [Instance],
    pred: &'a [PredictionRecord],
) -> Result<Vec<(&'a Instance, &'a str)>> {
    let mut by_id: HashMap<&str, &str> = HashMap::with_capacity(pred.len());
    for p in pred {
        if by_id.insert(&p.utterance_id, &p.answer).is_some() {
            return Err(Error::Alignment(format!(
                "duplicate prediction for {:?}",
                p.utterance_id
            )));
        }
    }
    let mut pairs = Vec::with_capacity(gold.len());
    let mut missing = Vec::new();
    for g in gold {
        match by_id.remove(g.utterance_id.as_str()) {
            Some(answer) => pairs.push((g, answer)),
            None => missing.push(g.utterance_id.as_str()),
        }
    }
    if !missing.is_empty() || !by_id.is_empty() {
        let mut extra: Vec<&str> = by_id.into_keys().collect();
        extra.sort_unstable();
        return Err(Error::Alignment(format!(
            "{} gold ids without prediction (first: {:?}), {} predictions without gold (first: {:?})",
            missing.len(),
            missing.first(),
            extra.len(),
            extra.first()
        )));
    }
    Ok(pairs)
}

pub fn classify_outputs(gold: &[Instance], pred: &[PredictionRecord]) -> Result<ConfusionMatrix> {
    let mut matrix = ConfusionMatrix::default();
    for (g, answer) in align(gold, pred)? {
        matrix.record(g.label(), derive_label(answer));
    }
    Ok(matrix)
}

pub fn micro_accuracy(matrix: &ConfusionMatrix) -> Result<f64> {
    match matrix.total() {
        0 => Err(Error::EmptyCorpus),
        n => Ok(100.0 * matrix.trace() as f64 / n as f64),
    }
}

/// Unweighted mean of per-class recall over the classes present in gold.
pub fn macro_accuracy(matrix: &ConfusionMatrix) -> Result<f64> {
    let recalls: Vec<f64> = ClassLabel::ALL
        .iter()
        .filter_map(|&l| matrix.recall(l))
        .collect();
    if recalls.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

pub fn combined_metric(macro_accuracy: f64, bleu4: f64) -> f64 {
    macro_accuracy / 100.0 * bleu4
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub bleu_mode: BleuMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro_accuracy: f64,
    pub macro_accuracy: f64,
    pub per_class_accuracy: BTreeMap<ClassLabel, f64>,
    /// `None` when the gold side has no follow-up instances.
    pub bleu1: Option<f64>,
    pub bleu4: Option<f64>,
    pub combined: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub bleu_instance_count: usize,
    pub bleu_mode: BleuMode,
    /// Known differences from the official leaderboard scorer.
    pub notes: Vec<String>,
}

pub const SCORER_NOTES: &[&str] = &[
    "approximation of the official scorer, not bit-compatible",
    "BLEU is computed on every instance whose gold answer is a follow-up question, whatever class was predicted",
    "BLEU texts are lowercased and tokenized with the corpus tokenizer; punctuation tokens are kept",
    "BLEU has no smoothing; an order with no matching n-gram gives 0",
    "macro accuracy is the mean per-class recall over classes present in gold",
];

pub fn evaluate(
    gold: &[Instance],
    pred: &[PredictionRecord],
    options: EvalOptions,
) -> Result<EvalReport> {
    let pairs = align(gold, pred)?;
    let mut confusion = ConfusionMatrix::default();
    for (g, answer) in &pairs {
        confusion.record(g.label(), derive_label(answer));
    }
    let bleu_pairs: Vec<(&str, &str)> = pairs
        .iter()
        .filter(|(g, _)| g.label() == ClassLabel::More)
        .map(|(g, answer)| (*answer, g.gold_answer.as_str()))
        .collect();
    let bleu1 = bleu(&bleu_pairs, 1, options.bleu_mode);
    let bleu4 = bleu(&bleu_pairs, 4, options.bleu_mode);
    let macro_accuracy = macro_accuracy(&confusion)?;
    Ok(EvalReport {
        micro_accuracy: micro_accuracy(&confusion)?,
        macro_accuracy,
        per_class_accuracy: ClassLabel::ALL
            .iter()
            .filter_map(|&l| confusion.recall(l).map(|r| (l, r)))
            .collect(),
        bleu1,
        bleu4,
        combined: bleu4.map(|b| combined_metric(macro_accuracy, b)),
        confusion,
        bleu_instance_count: bleu_pairs.len(),
        bleu_mode: options.bleu_mode,
        notes: SCORER_NOTES.iter().map(|s| s.to_string()).collect(),
    })
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

impl EvalReport {
    /// Plain-text table: the headline metrics, per-class accuracy and the
    /// confusion matrix.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        let _ = writeln!(
            out,
            "| Micro-Accuracy | Macro-Accuracy | BLEU 1 | BLEU 4 | Comb. |\n|---|---|---|---|---|\n| {:.2} | {:.2} | {} | {} | {} |",
            self.micro_accuracy,
            self.macro_accuracy,
            cell(self.bleu1),
            cell(self.bleu4),
            cell(self.combined)
        );
        let _ = writeln!(out, "\n| Class | Accuracy | Gold |\n|---|---|---|");
        for label in ClassLabel::ALL {
            let _ = writeln!(
                out,
                "| {} | {} | {} |",
                label,
                cell(self.per_class_accuracy.get(&label).copied()),
                self.confusion.gold_count(label)
            );
        }
        let _ = writeln!(out, "\n| gold \\ predicted | Irrelevant | Yes | No | More |\n|---|---|---|---|---|");
        for gold in ClassLabel::ALL {
            let row = &self.confusion.counts[gold.index()];
            let _ = writeln!(out, "| {} | {} | {} | {} | {} |", gold, row[0], row[1], row[2], row[3]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::vat_instance;

    fn gold(id: &str, answer: &str) -> Instance {
        Instance {
            utterance_id: id.into(),
            tree_id: "t".into(),
            source_url: None,
            rule_text: "r".into(),
            question: "q".into(),
            scenario: String::new(),
            history: vec![],
            evidence: vec![],
            gold_answer: answer.into(),
        }
    }

    fn pred(id: &str, answer: &str) -> PredictionRecord {
        PredictionRecord {
            utterance_id: id.into(),
            answer: answer.into(),
        }
    }

    fn matrix_with_recalls(diag: [usize; 4], totals: [usize; 4]) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::default();
        for i in 0..4 {
            m.counts[i][i] = diag[i];
            m.counts[i][(i + 1) % 4] = totals[i] - diag[i];
        }
        m
    }

    #[test]
    fn perfect_predictions() {
        let g = vec![gold("a", "Yes"), gold("b", "No"), gold("c", "Irrelevant"), gold("d", "Do you get it?")];
        let p: Vec<_> = g.iter().map(|i| pred(&i.utterance_id, &i.gold_answer)).collect();
        let m = classify_outputs(&g, &p).unwrap();
        assert_eq!(m.trace(), 4);
        let r = evaluate(&g, &p, EvalOptions::default()).unwrap();
        assert_eq!(r.micro_accuracy, 100.0);
        assert_eq!(r.macro_accuracy, 100.0);
        assert_eq!(r.bleu1, Some(100.0));
        assert_eq!(r.bleu4, Some(100.0));
        assert_eq!(r.combined, Some(100.0));
        assert_eq!(r.bleu_instance_count, 1);
    }

    #[test]
    fn off_diagonal_and_worked_dialog() {
        let m = classify_outputs(&[gold("a", "Ask?")], &[pred("a", "No")]).unwrap();
        assert_eq!(m.get(ClassLabel::More, ClassLabel::No), 1);
        assert_eq!(m.total(), 1);

        let g = [vat_instance()];
        let m = classify_outputs(&g, &[pred("vat-1", "No")]).unwrap();
        assert_eq!(m.get(ClassLabel::Yes, ClassLabel::No), 1);
        let m = classify_outputs(&g, &[pred("vat-1", "Yes")]).unwrap();
        assert_eq!(m.get(ClassLabel::Yes, ClassLabel::Yes), 1);
    }

    #[test]
    fn alignment_errors() {
        let g = [gold("a", "Yes"), gold("b", "No")];
        assert!(matches!(classify_outputs(&g, &[pred("a", "Yes")]), Err(Error::Alignment(_))));
        assert!(matches!(
            classify_outputs(&g, &[pred("a", "Yes"), pred("b", "No"), pred("c", "No")]),
            Err(Error::Alignment(_))
        ));
        assert!(matches!(
            classify_outputs(&g, &[pred("a", "Yes"), pred("a", "No"), pred("b", "No")]),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn macro_is_mean_recall() {
        // recalls 95.65, 63.70, 65.92, 70.63 (per 10000)
        let m = matrix_with_recalls([9565, 6370, 6592, 7063], [10000; 4]);
        assert!((macro_accuracy(&m).unwrap() - 73.975).abs() < 1e-9);

        let mut m = ConfusionMatrix::default();
        m.record(ClassLabel::Yes, ClassLabel::Yes);
        m.record(ClassLabel::No, ClassLabel::Yes);
        m.record(ClassLabel::No, ClassLabel::No);
        // Irrelevant and More absent: mean of 100 and 50
        assert_eq!(macro_accuracy(&m).unwrap(), 75.0);
        assert!((micro_accuracy(&m).unwrap() - 200.0 / 3.0).abs() < 1e-9);

        assert!(micro_accuracy(&ConfusionMatrix::default()).is_err());
        assert!(macro_accuracy(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn combined_identities() {
        assert!((combined_metric(71.25, 47.78) - 34.04).abs() < 0.01);
        assert!((combined_metric(44.09, 21.24) - 9.36).abs() < 0.01);
    }

    #[test]
    fn class_word_predictions_enter_bleu() {
        let g = [gold("a", "Do you get housing benefits?"), gold("b", "Yes")];
        let r = evaluate(&g, &[pred("a", "No"), pred("b", "Do you get housing benefits?")], EvalOptions::default()).unwrap();
        assert_eq!(r.bleu_instance_count, 1);
        assert_eq!(r.bleu4, Some(0.0));
        assert_eq!(r.combined, Some(0.0));
        assert_eq!(r.micro_accuracy, 0.0);

        let r = evaluate(&[gold("b", "Yes")], &[pred("b", "Yes")], EvalOptions::default()).unwrap();
        assert_eq!(r.bleu4, None);
        assert_eq!(r.combined, None);
        assert!(r.render_table().contains("n/a"));
    }

    #[test]
    fn micro_is_permutation_invariant() {
        let g: Vec<_> = (0..12).map(|i| gold(&format!("u{i}"), ["Yes", "No", "Irrelevant", "Ask?"][i % 4])).collect();
        let p: Vec<_> = (0..12).map(|i| pred(&format!("u{i}"), ["Yes", "No", "No", "Ask?"][(i * 7) % 4])).collect();
        let a = classify_outputs(&g, &p).unwrap();
        let mut g2 = g.clone();
        g2.reverse();
        let mut p2 = p.clone();
        p2.rotate_left(5);
        let b = classify_outputs(&g2, &p2).unwrap();
        assert_eq!(a, b);
        for label in ClassLabel::ALL {
            assert_eq!(a.counts[label.index()].iter().sum::<usize>(), g.iter().filter(|i| i.label() == label).count());
        }
    }
}
