//! Templated follow-up questions from rule clauses.

use crate::ruleparse::{Clause, ClauseKind};
use crate::{Error, Result};

const PREPOSITIONS: &[&str] = &[
    "a", "aged", "an", "at", "between", "born", "eligible", "entitled", "from", "in", "living",
    "married", "on", "over", "registered", "under", "with", "within",
];

/// Nouns ending in "ing" that start benefit and item names.
const ING_NOUNS: &[&str] = &[
    "boarding", "building", "clothing", "funding", "heating", "housing", "lighting", "lodging",
    "nursing", "parking", "plumbing", "roofing", "training", "wiring",
];

const SEPARATORS: &[&str] = &["and", "or", "and/or"];

/// Subject forms that already read as a statement about the user.
const YOU_ARE: &[&str] = &["you are", "you're", "you’re"];

fn strip_edges(text: &str) -> &str {
    let mut t = text
        .trim()
        .trim_start_matches(['*', '#', '-', '•'])
        .trim();
    loop {
        let before = t.len();
        t = t.trim_end_matches(['.', ',', ';', ':', '!', '?', ' ']);
        for sep in SEPARATORS {
            if let Some(rest) = t.strip_suffix(sep) {
                if rest.ends_with([' ', ',', ';']) {
                    t = rest;
                }
            }
        }
        if t.len() == before {
            return t;
        }
    }
}

/// The condition of an `... if <condition>` sentence, when present.
fn condition(text: &str) -> &str {
    let lower = text.to_lowercase();
    if lower.len() != text.len() {
        return text;
    }
    if let Some(rest) = lower.strip_prefix("if ") {
        let end = rest.find(',').map_or(text.len(), |c| c + 3);
        return &text[3..end];
    }
    match lower.find(" if ") {
        Some(pos) => &text[pos + 4..],
        None => text,
    }
}

fn first_word(text: &str) -> String {
    text.split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

fn lower_first(text: &str) -> String {
    let word = text.split_whitespace().next().unwrap_or("");
    // acronyms and capitalised multi-letter names keep their case
    let keep = word.chars().filter(|c| c.is_uppercase()).count() > 1;
    if keep {
        return text.to_string();
    }
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A yes/no question asking whether `clause` holds for the user.
///
/// Bullet markers, trailing punctuation and dangling "and"/"or" are removed;
/// a sentence of the form "... if X" asks about X.
///
/// * "you are X" → "Are you X?"
/// * "you X" → "Do you X?"
/// * gerund, infinitive, article or preposition start → "Are you X?"
/// * anything else is read as a noun phrase → "Do you get X?"
pub fn generate_followup(clause: &Clause) -> Result<String> {
    if clause.kind == ClauseKind::Header {
        return Err(Error::EmptyClause);
    }
    followup_for_text(&clause.text)
}

pub fn followup_for_text(text: &str) -> Result<String> {
    let body = strip_edges(condition(strip_edges(text)));
    if !body.chars().any(char::is_alphanumeric) {
        return Err(Error::EmptyClause);
    }
    let lower = body.to_lowercase();
    let question = if let Some(rest) = YOU_ARE
        .iter()
        .find_map(|p| {
            lower
                .starts_with(&format!("{p} "))
                .then(|| body.get(p.len() + 1..))
                .flatten()
        })
    {
        format!("Are you {rest}")
    } else if lower.starts_with("you ") {
        format!("Do {}", lower_first(body))
    } else {
        let word = first_word(body);
        let verbal = word.len() > 4 && word.ends_with("ing") && !ING_NOUNS.contains(&word.as_str());
        if verbal || word == "to" || PREPOSITIONS.contains(&word.as_str()) {
            format!("Are you {}", lower_first(body))
        } else {
            format!("Do you get {body}")
        }
    };
    Ok(format!("{}?", capitalize(&question)))
}
