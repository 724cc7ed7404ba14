//! Dataset-side measurements of the shortcut patterns.
//!
//! Every statistic is a fold over per-instance counts, so the report does
//! not depend on corpus order or on how the fold is partitioned.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassLabel, Instance};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: BTreeMap<ClassLabel, usize>,
    pub percentages: BTreeMap<ClassLabel, f64>,
}

impl ClassDistribution {
    pub fn percentage(&self, label: ClassLabel) -> f64 {
        self.percentages.get(&label).copied().unwrap_or(0.0)
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }
}

/// A ratio whose denominator may be zero; `percentage` is then `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub hits: usize,
    pub denominator: usize,
    pub percentage: Option<f64>,
}

impl Ratio {
    pub fn new(hits: usize, denominator: usize) -> Self {
        Ratio {
            hits,
            denominator,
            percentage: (denominator > 0).then(|| 100.0 * hits as f64 / denominator as f64),
        }
    }

    pub fn fraction(&self) -> Option<f64> {
        self.percentage.map(|p| p / 100.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LastFollowupAgreement {
    /// Yes/No-labelled instances with a non-empty history whose label equals
    /// the last follow-up answer.
    pub yes_no: Ratio,
    /// Same hits, but the denominator also counts follow-up (More) instances
    /// with a non-empty history. Audit view only.
    pub including_more: Ratio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrelevantContext {
    /// P(empty history and empty scenario | Irrelevant).
    pub empty_given_irrelevant: Ratio,
    /// P(Irrelevant | empty history and empty scenario).
    pub irrelevant_given_empty: Ratio,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRate {
    pub count: usize,
    pub followups: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FollowupByTurn {
    /// History length → P(label = More | N_h = k) with its support.
    pub by_length: BTreeMap<usize, TurnRate>,
    pub min_support: usize,
    /// Rank correlation of rate against k over lengths with at least
    /// `min_support` instances; `None` when either side is constant.
    pub spearman: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub split_name: Option<String>,
    pub instance_count: usize,
    pub class_distribution: ClassDistribution,
    pub last_followup_agreement: LastFollowupAgreement,
    pub irrelevant_context: IrrelevantContext,
    pub followup_rate_by_turn: FollowupByTurn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub split_name: Option<String>,
    pub min_support: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            split_name: None,
            min_support: 30,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Counts {
    total: usize,
    per_class: [usize; 4],
    agree: usize,
    yes_no_with_history: usize,
    more_with_history: usize,
    irrelevant: usize,
    empty_context: usize,
    irrelevant_and_empty: usize,
    /// history length → (instances, follow-ups)
    by_length: BTreeMap<usize, (usize, usize)>,
}

impl Counts {
    fn add(mut self, instance: &Instance) -> Self {
        let label = instance.label();
        self.total += 1;
        self.per_class[label.index()] += 1;
        match (label, instance.last_answer()) {
            (ClassLabel::Yes | ClassLabel::No, Some(last)) => {
                self.yes_no_with_history += 1;
                if last.label() == label {
                    self.agree += 1;
                }
            }
            (ClassLabel::More, Some(_)) => self.more_with_history += 1,
            _ => {}
        }
        let empty = instance.has_empty_context();
        let irrelevant = label == ClassLabel::Irrelevant;
        self.irrelevant += irrelevant as usize;
        self.empty_context += empty as usize;
        self.irrelevant_and_empty += (irrelevant && empty) as usize;
        let slot = self.by_length.entry(instance.history.len()).or_default();
        slot.0 += 1;
        slot.1 += (label == ClassLabel::More) as usize;
        self
    }

    fn merge(mut self, other: Counts) -> Counts {
        self.total += other.total;
        for (a, b) in self.per_class.iter_mut().zip(other.per_class) {
            *a += b;
        }
        self.agree += other.agree;
        self.yes_no_with_history += other.yes_no_with_history;
        self.more_with_history += other.more_with_history;
        self.irrelevant += other.irrelevant;
        self.empty_context += other.empty_context;
        self.irrelevant_and_empty += other.irrelevant_and_empty;
        for (k, (n, f)) in other.by_length {
            let slot = self.by_length.entry(k).or_default();
            slot.0 += n;
            slot.1 += f;
        }
        self
    }
}

fn count(corpus: &[Instance]) -> Counts {
    corpus
        .par_iter()
        .fold(Counts::default, Counts::add)
        .reduce(Counts::default, Counts::merge)
}

fn distribution(counts: &Counts) -> ClassDistribution {
    let total = counts.total as f64;
    ClassDistribution {
        counts: ClassLabel::ALL
            .iter()
            .map(|&l| (l, counts.per_class[l.index()]))
            .collect(),
        percentages: ClassLabel::ALL
            .iter()
            .map(|&l| (l, 100.0 * counts.per_class[l.index()] as f64 / total))
            .collect(),
    }
}

pub fn class_distribution(corpus: &[Instance]) -> Result<ClassDistribution> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(distribution(&count(corpus)))
}

fn agreement(counts: &Counts) -> LastFollowupAgreement {
    LastFollowupAgreement {
        yes_no: Ratio::new(counts.agree, counts.yes_no_with_history),
        including_more: Ratio::new(counts.agree, counts.yes_no_with_history + counts.more_with_history),
    }
}

pub fn last_followup_agreement(corpus: &[Instance]) -> LastFollowupAgreement {
    agreement(&count(corpus))
}

fn irrelevant(counts: &Counts) -> IrrelevantContext {
    IrrelevantContext {
        empty_given_irrelevant: Ratio::new(counts.irrelevant_and_empty, counts.irrelevant),
        irrelevant_given_empty: Ratio::new(counts.irrelevant_and_empty, counts.empty_context),
    }
}

pub fn irrelevant_context_stats(corpus: &[Instance]) -> IrrelevantContext {
    irrelevant(&count(corpus))
}

fn by_turn(counts: &Counts, min_support: usize) -> FollowupByTurn {
    let by_length: BTreeMap<usize, TurnRate> = counts
        .by_length
        .iter()
        .map(|(&k, &(n, f))| {
            (
                k,
                TurnRate {
                    count: n,
                    followups: f,
                    rate: f as f64 / n as f64,
                },
            )
        })
        .collect();
    let (ks, rates): (Vec<f64>, Vec<f64>) = by_length
        .iter()
        .filter(|(_, r)| r.count >= min_support)
        .map(|(&k, r)| (k as f64, r.rate))
        .unzip();
    FollowupByTurn {
        spearman: spearman(&ks, &rates),
        by_length,
        min_support,
    }
}

pub fn followup_rate_by_turn(corpus: &[Instance], min_support: usize) -> FollowupByTurn {
    by_turn(&count(corpus), min_support)
}

pub fn probe(corpus: &[Instance], options: &ProbeOptions) -> Result<ProbeReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let counts = count(corpus);
    Ok(ProbeReport {
        split_name: options.split_name.clone(),
        instance_count: counts.total,
        class_distribution: distribution(&counts),
        last_followup_agreement: agreement(&counts),
        irrelevant_context: irrelevant(&counts),
        followup_rate_by_turn: by_turn(&counts, options.min_support),
    })
}

/// 1-based ranks with ties sharing their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
