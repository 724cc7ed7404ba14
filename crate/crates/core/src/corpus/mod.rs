//! The canonical data model.
//!
//! Records follow the released ShARC field layout (`utterance_id`, `tree_id`,
//! `source_url`, `snippet`, `question`, `scenario`, `history`, `evidence`,
//! `answer`). The same layout, one record per line, is the canonical
//! serialization every downstream command reads, so raw dataset files and
//! canonical files are interchangeable inputs.

mod load;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use load::{
    load_corpus, parse_corpus, read_jsonl, write_jsonl, Corpus, DroppedItem, LoadReport,
    Strictness,
};
pub use tokenize::{tokenize, Token, TokenizedText};

/// A user's reply to a follow-up question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "Yes",
            Answer::No => "No",
        }
    }

    pub fn label(self) -> ClassLabel {
        match self {
            Answer::Yes => ClassLabel::Yes,
            Answer::No => ClassLabel::No,
        }
    }
}

impl FromStr for Answer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("yes") {
            Ok(Answer::Yes)
        } else if t.eq_ignore_ascii_case("no") {
            Ok(Answer::No)
        } else {
            Err(Error::UnknownAnswer(s.to_string()))
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DialogTurn {
    pub follow_up_question: String,
    pub follow_up_answer: Answer,
}

impl DialogTurn {
    pub fn new(question: impl Into<String>, answer: Answer) -> Self {
        DialogTurn {
            follow_up_question: question.into(),
            follow_up_answer: answer,
        }
    }
}

/// One dataset record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub utterance_id: String,
    pub tree_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    #[serde(rename = "snippet")]
    pub rule_text: String,
    pub question: String,
    #[serde(default)]
    pub scenario: String,
    /// Conversation order; the last element is the most recent turn.
    #[serde(default)]
    pub history: Vec<DialogTurn>,
    #[serde(default)]
    pub evidence: Vec<DialogTurn>,
    #[serde(rename = "answer")]
    pub gold_answer: String,
}

impl Instance {
    pub fn label(&self) -> ClassLabel {
        derive_label(&self.gold_answer)
    }

    pub fn has_scenario(&self) -> bool {
        !self.scenario.trim().is_empty()
    }

    pub fn has_empty_context(&self) -> bool {
        self.history.is_empty() && !self.has_scenario()
    }

    pub fn last_answer(&self) -> Option<Answer> {
        self.history.last().map(|t| t.follow_up_answer)
    }
}

/// The four response classes. `More` means the correct move is to ask a
/// follow-up question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Irrelevant,
    Yes,
    No,
    More,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 4] = [
        ClassLabel::Irrelevant,
        ClassLabel::Yes,
        ClassLabel::No,
        ClassLabel::More,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Irrelevant => "Irrelevant",
            ClassLabel::Yes => "Yes",
            ClassLabel::No => "No",
            ClassLabel::More => "More",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            ClassLabel::Irrelevant => "irr",
            ClassLabel::Yes => "yes",
            ClassLabel::No => "no",
            ClassLabel::More => "more",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "irr" | "irrelevant" => Ok(ClassLabel::Irrelevant),
            "yes" => Ok(ClassLabel::Yes),
            "no" => Ok(ClassLabel::No),
            "more" | "follow-up" | "followup" => Ok(ClassLabel::More),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// Maps a gold or predicted answer string onto its class.
///
/// Case-insensitive exact match (after trimming) against `yes`, `no` and
/// `irrelevant`; anything else is a follow-up question.
pub fn derive_label(answer: &str) -> ClassLabel {
    let a = answer.trim();
    if a.eq_ignore_ascii_case("yes") {
        ClassLabel::Yes
    } else if a.eq_ignore_ascii_case("no") {
        ClassLabel::No
    } else if a.eq_ignore_ascii_case("irrelevant") {
        ClassLabel::Irrelevant
    } else {
        ClassLabel::More
    }
}
