//! Rule snippets as flat clause lists.
//!
//! A snippet is markdown: `##` headers, `*` bullets and prose. Prose lines
//! are split into sentences. The logic of the rule (do the clauses combine
//! with AND or OR?) is guessed from cue words in the prose, since snippets
//! carry no explicit structure.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClauseKind {
    Bullet,
    Sentence,
    Header,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub text: String,
    pub kind: ClauseKind,
    /// Byte range of `text` inside the rule snippet.
    pub char_span: (usize, usize),
    /// 1-based, document order.
    pub ordinal: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Logic {
    Conjunctive,
    Disjunctive,
    Single,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleStructure {
    pub clauses: Vec<Clause>,
    pub logic: Logic,
}

impl RuleStructure {
    pub fn non_header(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.kind != ClauseKind::Header)
    }

    pub fn has_bullets(&self) -> bool {
        self.clauses.iter().any(|c| c.kind == ClauseKind::Bullet)
    }

    /// Clauses a follow-up question can be asked about: the bullets when the
    /// rule has a list (the prose then only introduces it), else the sentences.
    pub fn askable(&self) -> impl Iterator<Item = &Clause> {
        let wanted = if self.has_bullets() {
            ClauseKind::Bullet
        } else {
            ClauseKind::Sentence
        };
        self.clauses.iter().filter(move |c| c.kind == wanted)
    }
}

/// Cue phrases voting for conjunctive or disjunctive logic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueSet {
    pub conjunctive: Vec<String>,
    pub disjunctive: Vec<String>,
}

impl Default for CueSet {
    fn default() -> Self {
        CueSet {
            conjunctive: ["all of", "each of", "both", "and"].map(String::from).to_vec(),
            disjunctive: ["any of", "either", "one of", "or"].map(String::from).to_vec(),
        }
    }
}

impl CueSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

/// One cue per line, `conj <phrase>` or `disj <phrase>`; `#` starts a comment.
impl FromStr for CueSet {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cues = CueSet {
            conjunctive: Vec::new(),
            disjunctive: Vec::new(),
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (tag, phrase) = line
                .split_once(char::is_whitespace)
                .map(|(t, p)| (t, p.trim()))
                .ok_or_else(|| Error::Config(format!("cue line {}: missing phrase", n + 1)))?;
            match tag.to_ascii_lowercase().as_str() {
                "conj" | "conjunctive" => cues.conjunctive.push(phrase.to_string()),
                "disj" | "disjunctive" => cues.disjunctive.push(phrase.to_string()),
                other => {
                    return Err(Error::Config(format!(
                        "cue line {}: unknown tag {other:?} (expected conj or disj)",
                        n + 1
                    )))
                }
            }
        }
        Ok(cues)
    }
}

fn trimmed_span(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    (lead + trail < slice.len()).then(|| (start + lead, end - trail))
}

/// Sentence ranges of one prose line: a run of `.`, `!` or `?` followed by
/// whitespace or the end of the line closes a sentence.
fn sentence_ranges(line: &str, offset: usize) -> Vec<(usize, usize)> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'!' | b'?') {
            let mut j = i + 1;
            while j < bytes.len() && matches!(bytes[j], b'.' | b'!' | b'?') {
                j += 1;
            }
            if j == bytes.len() || bytes[j].is_ascii_whitespace() {
                out.extend(trimmed_span(line, start, j).map(|(s, e)| (s + offset, e + offset)));
                start = j;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out.extend(trimmed_span(line, start, line.len()).map(|(s, e)| (s + offset, e + offset)));
    out
}

/// Splits a snippet into header, bullet and sentence clauses.
pub fn split_clauses(rule_text: &str) -> Vec<Clause> {
    let mut clauses = Vec::new();
    let mut push = |kind, (s, e): (usize, usize)| {
        clauses.push(Clause {
            text: rule_text[s..e].to_string(),
            kind,
            char_span: (s, e),
            ordinal: clauses.len() + 1,
        })
    };
    let mut line_start = 0;
    for line in rule_text.split_inclusive('\n') {
        let offset = line_start;
        line_start += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        let lead = body.len() - body.trim_start().len();
        let rest = &body[lead..];
        if rest.starts_with('#') || rest.starts_with('*') {
            let marker = rest.chars().next().unwrap_or('#');
            let content_start = lead + rest.len() - rest.trim_start_matches(marker).len();
            let kind = if marker == '#' {
                ClauseKind::Header
            } else {
                ClauseKind::Bullet
            };
            if let Some((s, e)) = trimmed_span(body, content_start, body.len()) {
                push(kind, (s + offset, e + offset));
            }
        } else {
            for range in sentence_ranges(body, offset) {
                push(ClauseKind::Sentence, range);
            }
        }
    }
    clauses
}

fn normalized_phrase(text: &str) -> String {
    let words: Vec<String> = tokenize(text)
        .tokens
        .into_iter()
        .filter(|t| t.is_content())
        .map(|t| t.normalized)
        .collect();
    format!(" {} ", words.join(" "))
}

fn count_cues(haystack: &str, cues: &[String]) -> usize {
    cues.iter()
        .map(|cue| normalized_phrase(cue))
        .filter(|cue| !cue.trim().is_empty())
        .map(|cue| {
            // overlapping matches share the padding space, so step one word at a time
            let mut count = 0;
            let mut from = 0;
            while let Some(pos) = haystack[from..].find(&cue) {
                count += 1;
                from += pos + cue.len() - 1;
            }
            count
        })
        .sum()
}

/// Votes conjunctive/disjunctive from cue words in the non-bullet prose.
///
/// Ties and the absence of cues give `Unknown`, except that an uncued list
/// introduced by "the following" reads as a list of independent qualifying
/// items (`Disjunctive`). Exactly one non-header clause is always `Single`.
pub fn classify_logic(structure: &RuleStructure, rule_text: &str, cues: &CueSet) -> Logic {
    let clauses = &structure.clauses;
    match structure.non_header().count() {
        0 => return Logic::Unknown,
        1 => return Logic::Single,
        _ => {}
    }
    let prose: Vec<&str> = clauses
        .iter()
        .filter(|c| c.kind == ClauseKind::Sentence)
        .map(|c| &rule_text[c.char_span.0..c.char_span.1])
        .collect();
    let prose = normalized_phrase(&prose.join(" "));
    let conj = count_cues(&prose, &cues.conjunctive);
    let disj = count_cues(&prose, &cues.disjunctive);
    match conj.cmp(&disj) {
        std::cmp::Ordering::Greater => Logic::Conjunctive,
        std::cmp::Ordering::Less => Logic::Disjunctive,
        std::cmp::Ordering::Equal
            if conj == 0 && structure.has_bullets() && prose.contains(" the following ") =>
        {
            Logic::Disjunctive
        }
        std::cmp::Ordering::Equal => Logic::Unknown,
    }
}

pub fn parse_rule_with(rule_text: &str, cues: &CueSet) -> RuleStructure {
    let mut structure = RuleStructure {
        clauses: split_clauses(rule_text),
        logic: Logic::Unknown,
    };
    structure.logic = classify_logic(&structure, rule_text, cues);
    structure
}

/// Parses with the default cue set.
pub fn parse_rule(rule_text: &str) -> RuleStructure {
    parse_rule_with(rule_text, &CueSet::default())
}
