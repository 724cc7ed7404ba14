//! Markdown comparison of corpora and systems.

use std::fmt::Write as _;

use crate::corpus::ClassLabel;
use crate::eval::EvalReport;
use crate::probe::{ProbeReport, Ratio};

fn pct(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

fn ratio(r: &Ratio) -> String {
    format!("{} ({}/{})", pct(r.percentage), r.hits, r.denominator)
}

/// One row per corpus: size and class distribution in percent.
pub fn class_table(corpora: &[(&str, &ProbeReport)]) -> String {
    let mut out = String::from("| Dataset | Instances | Irrelevant | Yes | No | More |\n|---|---|---|---|---|---|\n");
    for (name, report) in corpora {
        let d = &report.class_distribution;
        let _ = write!(out, "| {name} | {} |", report.instance_count);
        for label in ClassLabel::ALL {
            let _ = write!(out, " {:.2} |", d.percentage(label));
        }
        out.push('\n');
    }
    out
}

type Row = (&'static str, fn(&ProbeReport) -> String);

/// The shortcut statistics side by side.
pub fn clue_table(corpora: &[(&str, &ProbeReport)]) -> String {
    let mut out = String::from("| Statistic |");
    for (name, _) in corpora {
        let _ = write!(out, " {name} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(corpora.len()));
    out.push('\n');
    let rows: [Row; 5] = [
        ("label = last follow-up answer (Yes/No)", |r| ratio(&r.last_followup_agreement.yes_no)),
        ("label = last follow-up answer (incl. More)", |r| {
            ratio(&r.last_followup_agreement.including_more)
        }),
        ("P(empty context \\| Irrelevant)", |r| ratio(&r.irrelevant_context.empty_given_irrelevant)),
        ("P(Irrelevant \\| empty context)", |r| ratio(&r.irrelevant_context.irrelevant_given_empty)),
        ("Spearman(history length, follow-up rate)", |r| {
            r.followup_rate_by_turn
                .spearman
                .map_or_else(|| "n/a".to_string(), |s| format!("{s:.3}"))
        }),
    ];
    for (title, cell) in rows {
        let _ = write!(out, "| {title} |");
        for (_, report) in corpora {
            let _ = write!(out, " {} |", cell(report));
        }
        out.push('\n');
    }
    out
}

/// One row per (system, corpus) evaluation.
pub fn eval_table(rows: &[(&str, &EvalReport)]) -> String {
    let mut out = String::from(
        "| System | Micro-Accuracy | Macro-Accuracy | BLEU 1 | BLEU 4 | Comb. |\n|---|---|---|---|---|---|\n",
    );
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "| {name} | {:.2} | {:.2} | {} | {} | {} |",
            r.micro_accuracy,
            r.macro_accuracy,
            pct(r.bleu1),
            pct(r.bleu4),
            pct(r.combined)
        );
    }
    out
}

pub fn per_class_table(rows: &[(&str, &EvalReport)]) -> String {
    let mut out = String::from("| System | Irrelevant | Yes | No | More |\n|---|---|---|---|---|\n");
    for (name, r) in rows {
        let _ = write!(out, "| {name} |");
        for label in ClassLabel::ALL {
            let _ = write!(out, " {} |", pct(r.per_class_accuracy.get(&label).copied()));
        }
        out.push('\n');
    }
    out
}

/// The complete document: corpus statistics, optionally followed by system
/// results.
pub fn render_report(corpora: &[(&str, &ProbeReport)], evals: &[(&str, &EvalReport)]) -> String {
    let mut out = String::from("# Corpus comparison\n\n## Class distribution (%)\n\n");
    out.push_str(&class_table(corpora));
    out.push_str("\n## Shortcut statistics (%)\n\n");
    out.push_str(&clue_table(corpora));
    if !evals.is_empty() {
        out.push_str("\n## System results\n\n");
        out.push_str(&eval_table(evals));
        out.push_str("\n## Per-class accuracy (%)\n\n");
        out.push_str(&per_class_table(evals));
    }
    out
}
