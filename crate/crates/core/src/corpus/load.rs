use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Answer, DialogTurn, Instance};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    Strict,
    #[default]
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedItem {
    pub location: String,
    pub utterance_id: Option<String>,
    pub reason: String,
}

/// What lenient loading discarded, kept for audit output.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub records: usize,
    pub dropped_instances: Vec<DroppedItem>,
    pub dropped_evidence: Vec<DroppedItem>,
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub instances: Vec<Instance>,
    pub report: LoadReport,
}

/// Loads a JSON array of records or a one-record-per-line file.
pub fn load_corpus(path: impl AsRef<Path>, strictness: Strictness) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, &path.display().to_string(), strictness)
}

pub fn parse_corpus(text: &str, origin: &str, strictness: Strictness) -> Result<Corpus> {
    let records: Vec<(String, Value)> = if text.trim_start().starts_with('[') {
        let values: Vec<Value> = serde_json::from_str(text).map_err(|source| Error::Json {
            location: origin.to_string(),
            source,
        })?;
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (format!("{origin}[{i}]"), v))
            .collect()
    } else {
        let mut out = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let location = format!("{origin}:{}", n + 1);
            let value = serde_json::from_str(line).map_err(|source| Error::Json {
                location: location.clone(),
                source,
            })?;
            out.push((location, value));
        }
        out
    };

    let mut corpus = Corpus::default();
    corpus.report.records = records.len();
    let mut seen = HashSet::new();
    for (location, value) in records {
        let mut dropped_evidence = Vec::new();
        match parse_record(&location, &value, strictness, &mut dropped_evidence)? {
            Ok(instance) => {
                if !seen.insert(instance.utterance_id.clone()) {
                    if strictness == Strictness::Strict {
                        return Err(Error::DuplicateId(instance.utterance_id));
                    }
                    corpus.report.dropped_instances.push(DroppedItem {
                        location,
                        reason: "duplicate utterance_id".into(),
                        utterance_id: Some(instance.utterance_id),
                    });
                    continue;
                }
                corpus.report.dropped_evidence.extend(dropped_evidence);
                corpus.instances.push(instance);
            }
            Err(dropped) => corpus.report.dropped_instances.push(dropped),
        }
    }
    if !corpus.report.dropped_instances.is_empty() || !corpus.report.dropped_evidence.is_empty() {
        log::warn!(
            "{origin}: dropped {} instances and {} evidence items",
            corpus.report.dropped_instances.len(),
            corpus.report.dropped_evidence.len()
        );
    }
    Ok(corpus)
}

fn required_str<'a>(obj: &'a Map<String, Value>, field: &str, location: &str) -> Result<&'a str> {
    obj.get(field)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::record(location, format!("missing string field `{field}`")))
}

fn optional_str<'a>(obj: &'a Map<String, Value>, field: &str, location: &str) -> Result<Option<&'a str>> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(Error::record(location, format!("field `{field}` is not a string"))),
    }
}

fn turn_list<'a>(obj: &'a Map<String, Value>, field: &str, location: &str) -> Result<&'a [Value]> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(&[]),
        Some(Value::Array(items)) => Ok(items),
        Some(_) => Err(Error::record(location, format!("field `{field}` is not a list"))),
    }
}

fn parse_turn(value: &Value) -> std::result::Result<DialogTurn, String> {
    let obj = value.as_object().ok_or("turn is not an object")?;
    let question = obj
        .get("follow_up_question")
        .and_then(Value::as_str)
        .ok_or("missing follow_up_question")?;
    if question.trim().is_empty() {
        return Err("empty follow_up_question".into());
    }
    let answer = obj
        .get("follow_up_answer")
        .and_then(Value::as_str)
        .ok_or("missing follow_up_answer")?;
    let answer: Answer = answer.parse().map_err(|e: Error| e.to_string())?;
    Ok(DialogTurn::new(question, answer))
}

/// Outer `Err` aborts loading; inner `Err` drops the record (lenient only).
fn parse_record(
    location: &str,
    value: &Value,
    strictness: Strictness,
    dropped_evidence: &mut Vec<DroppedItem>,
) -> Result<std::result::Result<Instance, DroppedItem>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::record(location, "record is not an object"))?;
    let utterance_id = required_str(obj, "utterance_id", location)?.to_string();
    let tree_id = required_str(obj, "tree_id", location)?.to_string();
    let rule_text = required_str(obj, "snippet", location)?.to_string();
    let question = required_str(obj, "question", location)?.to_string();
    let gold_answer = required_str(obj, "answer", location)?.to_string();
    let scenario = optional_str(obj, "scenario", location)?.unwrap_or_default().to_string();
    let source_url = optional_str(obj, "source_url", location)?.map(str::to_string);
    let raw_history = turn_list(obj, "history", location)?;
    let raw_evidence = turn_list(obj, "evidence", location)?;

    let reject = |reason: String| -> Result<std::result::Result<Instance, DroppedItem>> {
        match strictness {
            Strictness::Strict => Err(Error::record(location, reason)),
            Strictness::Lenient => Ok(Err(DroppedItem {
                location: location.to_string(),
                utterance_id: Some(utterance_id.clone()),
                reason,
            })),
        }
    };

    if gold_answer.trim().is_empty() {
        return reject("empty answer".into());
    }
    let mut history = Vec::with_capacity(raw_history.len());
    for (i, item) in raw_history.iter().enumerate() {
        match parse_turn(item) {
            Ok(turn) => history.push(turn),
            Err(reason) => return reject(format!("history[{i}]: {reason}")),
        }
    }
    let mut evidence = Vec::with_capacity(raw_evidence.len());
    for (i, item) in raw_evidence.iter().enumerate() {
        match parse_turn(item) {
            Ok(turn) => evidence.push(turn),
            Err(reason) if strictness == Strictness::Strict => {
                return Err(Error::record(location, format!("evidence[{i}]: {reason}")));
            }
            Err(reason) => dropped_evidence.push(DroppedItem {
                location: format!("{location}.evidence[{i}]"),
                utterance_id: Some(utterance_id.clone()),
                reason,
            }),
        }
    }

    let instance = Instance {
        utterance_id,
        tree_id,
        source_url,
        rule_text,
        question,
        scenario,
        history,
        evidence,
        gold_answer,
    };
    Ok(Ok(instance))
}

/// Strict line reader for canonical artifacts (predictions, annotations).
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Json {
            location: format!("{}:{}", path.display(), n + 1),
            source,
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T, W, I>(mut writer: W, items: I) -> io::Result<()>
where
    T: Serialize + 'a,
    W: Write,
    I: IntoIterator<Item = &'a T>,
{
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
