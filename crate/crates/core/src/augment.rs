//! Seeded regeneration of the class-balanced augmented corpus.
//!
//! Two generators are available. Rule replacement pairs a scenario-bearing
//! instance with the rule of another tree and labels it `Irrelevant`; history
//! shuffling reorders the follow-up turns of an instance and keeps its label.
//! [`build_augmented_corpus`] fills per-class quotas with them.
//!
//! Every parent instance owns an RNG stream derived from the master seed and
//! its `utterance_id`, so the output does not depend on thread scheduling.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_jsonl, ClassLabel, Instance};
use crate::digest::{content_hash, sha256_hex, FieldHasher};
use crate::{Error, Result};

pub const DEFAULT_TOTAL_TARGET: usize = 31506;

pub const DEFAULT_CLASS_TARGETS: [(ClassLabel, f64); 4] = [
    (ClassLabel::Irrelevant, 22.41),
    (ClassLabel::Yes, 27.09),
    (ClassLabel::No, 28.11),
    (ClassLabel::More, 22.39),
];

const TARGET_SUM_TOLERANCE: f64 = 0.05;

/// Attempts per requested variant before a parent is considered exhausted.
const SAMPLE_ATTEMPTS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub seed: u64,
    pub total_target: usize,
    /// Percentages per class; must sum to 100.
    pub class_targets: BTreeMap<ClassLabel, f64>,
    /// Distinct shuffles drawn per parent at most.
    pub max_permutations_per_instance: usize,
    /// Distinct replacement rules drawn per parent at most.
    pub max_irrelevant_per_instance: usize,
    pub keep_original: bool,
    /// When false, rule-replaced instances start with an empty history.
    pub retain_history_on_irrelevant: bool,
}

impl AugmentConfig {
    pub fn with_seed(seed: u64) -> Self {
        AugmentConfig {
            seed,
            total_target: DEFAULT_TOTAL_TARGET,
            class_targets: DEFAULT_CLASS_TARGETS.into_iter().collect(),
            max_permutations_per_instance: 3,
            max_irrelevant_per_instance: 3,
            keep_original: true,
            retain_history_on_irrelevant: true,
        }
    }

    pub fn validate(&self, corpus_size: usize) -> Result<()> {
        for label in ClassLabel::ALL {
            match self.class_targets.get(&label) {
                None => return Err(Error::Config(format!("no target for class {label}"))),
                Some(p) if !p.is_finite() || *p < 0.0 => {
                    return Err(Error::Config(format!("target for {label} is {p}")))
                }
                Some(_) => {}
            }
        }
        let sum: f64 = self.class_targets.values().sum();
        if (sum - 100.0).abs() > TARGET_SUM_TOLERANCE {
            return Err(Error::Config(format!("class targets sum to {sum}, not 100")));
        }
        if self.keep_original && self.total_target < corpus_size {
            return Err(Error::Config(format!(
                "total_target {} is below the corpus size {corpus_size} while originals are kept",
                self.total_target
            )));
        }
        if self.max_permutations_per_instance == 0 || self.max_irrelevant_per_instance == 0 {
            return Err(Error::Config("per-instance variant limits must be positive".into()));
        }
        Ok(())
    }

    /// Per-class instance counts summing exactly to `total_target`
    /// (largest-remainder apportionment).
    pub fn class_quotas(&self) -> BTreeMap<ClassLabel, usize> {
        let sum: f64 = self.class_targets.values().sum();
        let exact: Vec<(ClassLabel, f64)> = ClassLabel::ALL
            .iter()
            .map(|&l| (l, self.class_targets.get(&l).copied().unwrap_or(0.0) / sum * self.total_target as f64))
            .collect();
        let mut quotas: BTreeMap<ClassLabel, usize> =
            exact.iter().map(|&(l, x)| (l, x.floor() as usize)).collect();
        let assigned: usize = quotas.values().sum();
        let mut by_remainder = exact.clone();
        by_remainder.sort_by(|x, y| {
            let rx = x.1 - x.1.floor();
            let ry = y.1 - y.1.floor();
            ry.total_cmp(&rx).then(x.0.cmp(&y.0))
        });
        for (label, _) in by_remainder.into_iter().take(self.total_target.saturating_sub(assigned)) {
            *quotas.get_mut(&label).expect("all classes present") += 1;
        }
        quotas
    }
}

/// Parses `irr=22.41,yes=27.09,no=28.11,more=22.39`.
pub fn parse_class_targets(spec: &str) -> Result<BTreeMap<ClassLabel, f64>> {
    let mut targets = BTreeMap::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected class=percent, got {part:?}")))?;
        let label = ClassLabel::from_str(name.trim())?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad percentage in {part:?}")))?;
        if targets.insert(label, value).is_some() {
            return Err(Error::Config(format!("class {label} given twice")));
        }
    }
    Ok(targets)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Original,
    RuleReplaced,
    HistoryShuffled,
}

impl Provenance {
    fn key(self) -> &'static str {
        match self {
            Provenance::Original => "orig",
            Provenance::RuleReplaced => "irr",
            Provenance::HistoryShuffled => "shuf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedInstance {
    #[serde(flatten)]
    pub instance: Instance,
    pub provenance: Provenance,
    pub parent_id: String,
    /// `history[k] = parent.history[permutation[k]]` for shuffled instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
}

impl AugmentedInstance {
    pub fn original(instance: Instance) -> Self {
        AugmentedInstance {
            parent_id: instance.utterance_id.clone(),
            instance,
            provenance: Provenance::Original,
            permutation: None,
        }
    }
}

/// The RNG stream owned by one parent for one generator.
pub fn parent_rng(seed: u64, parent_id: &str, provenance: Provenance) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(
        FieldHasher::new()
            .u64(seed)
            .field(parent_id)
            .field(provenance.key())
            .finish(),
    )
}

fn fresh_id(parent_id: &str, provenance: Provenance, discriminator: &str, seed: u64) -> String {
    let digest = FieldHasher::new()
        .field(parent_id)
        .field(provenance.key())
        .field(discriminator)
        .u64(seed)
        .finish_hex();
    format!("{parent_id}::{}::{}", provenance.key(), &digest[..16])
}

fn augment_error(source: &Instance, reason: impl Into<String>) -> Error {
    Error::Augment {
        parent_id: source.utterance_id.clone(),
        reason: reason.into(),
    }
}

/// One representative rule per tree, in first-seen order.
struct RulePool<'a> {
    trees: Vec<&'a Instance>,
}

impl<'a> RulePool<'a> {
    fn new(pool: &'a [Instance]) -> Self {
        let mut seen = HashSet::new();
        let trees = pool
            .iter()
            .filter(|i| seen.insert(i.tree_id.as_str()))
            .collect();
        RulePool { trees }
    }

    /// Up to `count` distinct trees other than `own_tree`, uniformly without
    /// replacement.
    fn sample_foreign<R: Rng>(&self, own_tree: &str, count: usize, rng: &mut R) -> Vec<&'a Instance> {
        let foreign = self.trees.iter().filter(|t| t.tree_id != own_tree).count();
        let want = count.min(foreign);
        let mut picked: Vec<&'a Instance> = Vec::with_capacity(want);
        while picked.len() < want {
            let candidate = self.trees[rng.gen_range(0..self.trees.len())];
            if candidate.tree_id != own_tree && !picked.iter().any(|p| p.tree_id == candidate.tree_id) {
                picked.push(candidate);
            }
        }
        picked
    }
}

fn rule_replaced(
    source: &Instance,
    rule: &Instance,
    seed: u64,
    retain_history: bool,
) -> AugmentedInstance {
    let mut instance = source.clone();
    instance.utterance_id = fresh_id(&source.utterance_id, Provenance::RuleReplaced, &rule.tree_id, seed);
    instance.tree_id = rule.tree_id.clone();
    instance.source_url = rule.source_url.clone();
    instance.rule_text = rule.rule_text.clone();
    instance.gold_answer = ClassLabel::Irrelevant.as_str().to_string();
    if !retain_history {
        instance.history.clear();
    }
    AugmentedInstance {
        instance,
        provenance: Provenance::RuleReplaced,
        parent_id: source.utterance_id.clone(),
        permutation: None,
    }
}

fn check_irrelevant_source(source: &Instance) -> Result<()> {
    if source.has_scenario() {
        Ok(())
    } else {
        Err(augment_error(source, "scenario is empty"))
    }
}

/// Pairs `source` with the rule of a uniformly chosen other tree in
/// `rule_pool`; the result is labelled `Irrelevant` and keeps the history.
pub fn make_irrelevant_instance<R: Rng>(
    source: &Instance,
    rule_pool: &[Instance],
    rng: &mut R,
    seed: u64,
) -> Result<AugmentedInstance> {
    check_irrelevant_source(source)?;
    let pool = RulePool::new(rule_pool);
    let rule = pool
        .sample_foreign(&source.tree_id, 1, rng)
        .pop()
        .ok_or_else(|| augment_error(source, "rule pool has no other tree"))?;
    Ok(rule_replaced(source, rule, seed, true))
}

fn shuffled(source: &Instance, permutation: Vec<usize>, seed: u64) -> AugmentedInstance {
    let mut instance = source.clone();
    let key: Vec<String> = permutation.iter().map(usize::to_string).collect();
    instance.utterance_id = fresh_id(&source.utterance_id, Provenance::HistoryShuffled, &key.join(","), seed);
    instance.history = permutation.iter().map(|&k| source.history[k].clone()).collect();
    AugmentedInstance {
        instance,
        provenance: Provenance::HistoryShuffled,
        parent_id: source.utterance_id.clone(),
        permutation: Some(permutation),
    }
}

/// Up to `count` permutations, each producing a history distinct from the
/// parent's and from each other. Uniform over such reorderings.
fn sample_permutations<R: Rng>(source: &Instance, count: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let n = source.history.len();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    let reorder = |p: &[usize]| -> Vec<usize> {
        // canonical key: first index of an equal turn, so equal histories collide
        p.iter()
            .map(|&k| {
                source
                    .history
                    .iter()
                    .position(|t| *t == source.history[k])
                    .expect("turn is in its own history")
            })
            .collect()
    };
    let identity = reorder(&(0..n).collect::<Vec<_>>());
    seen.insert(identity);
    for _ in 0..count * SAMPLE_ATTEMPTS {
        if out.len() == count {
            break;
        }
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        if seen.insert(reorder(&p)) {
            out.push(p);
        }
    }
    out
}

/// Reorders the history of `source` by a uniformly chosen permutation that
/// changes it; the gold answer is kept.
pub fn shuffle_history_instance<R: Rng>(
    source: &Instance,
    rng: &mut R,
    seed: u64,
) -> Result<AugmentedInstance> {
    if source.history.len() < 2 {
        return Err(augment_error(source, "history has fewer than 2 turns"));
    }
    let permutation = sample_permutations(source, 1, rng)
        .pop()
        .ok_or_else(|| augment_error(source, "every reordering of the history is identical"))?;
    Ok(shuffled(source, permutation, seed))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassTally {
    pub target: usize,
    pub original: usize,
    pub generated: usize,
    pub achieved: usize,
    pub achieved_percentage: f64,
    pub target_percentage: f64,
    /// Quota the generators could not fill.
    pub shortfall: usize,
    /// Originals above the quota that were kept anyway.
    pub surplus: usize,
    pub eligible_sources: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentManifest {
    pub config: AugmentConfig,
    pub input_instances: usize,
    pub duplicate_originals_dropped: Vec<String>,
    pub output_instances: usize,
    pub classes: BTreeMap<ClassLabel, ClassTally>,
    pub provenance_counts: BTreeMap<Provenance, usize>,
    /// SHA-256 of the one-record-per-line serialization of the output.
    pub output_digest: String,
}

#[derive(Clone, Debug)]
pub struct AugmentOutput {
    pub instances: Vec<AugmentedInstance>,
    pub manifest: AugmentManifest,
}

/// The exact bytes the corpus is written as.
pub fn serialize_jsonl(instances: &[AugmentedInstance]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, instances).expect("writing to memory cannot fail");
    buf
}

/// Candidate variants for every source, each source's list in preference order.
fn candidates(
    sources: &[&Instance],
    label: ClassLabel,
    pool: &RulePool<'_>,
    config: &AugmentConfig,
) -> Vec<Vec<AugmentedInstance>> {
    sources
        .par_iter()
        .map(|source| {
            if label == ClassLabel::Irrelevant {
                let mut rng = parent_rng(config.seed, &source.utterance_id, Provenance::RuleReplaced);
                pool.sample_foreign(&source.tree_id, config.max_irrelevant_per_instance, &mut rng)
                    .into_iter()
                    .map(|rule| rule_replaced(source, rule, config.seed, config.retain_history_on_irrelevant))
                    .collect()
            } else {
                let mut rng = parent_rng(config.seed, &source.utterance_id, Provenance::HistoryShuffled);
                sample_permutations(source, config.max_permutations_per_instance, &mut rng)
                    .into_iter()
                    .map(|p| shuffled(source, p, config.seed))
                    .collect()
            }
        })
        .collect()
}

/// Sources in a seeded order, so round-robin spreads over rules.
fn seeded_order(mut sources: Vec<&Instance>, seed: u64, label: ClassLabel) -> Vec<&Instance> {
    let mut rng = ChaCha8Rng::from_seed(
        FieldHasher::new()
            .u64(seed)
            .field("source-order")
            .field(label.as_str())
            .finish(),
    );
    sources.shuffle(&mut rng);
    sources
}

/// Originals (deduplicated), then synthetic instances filling each class's
/// quota: Irrelevant by rule replacement, then Yes, No and More by shuffling
/// same-class histories.
pub fn build_augmented_corpus(corpus: &[Instance], config: &AugmentConfig) -> Result<AugmentOutput> {
    config.validate(corpus.len())?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let quotas = config.class_quotas();

    let mut hashes: HashSet<[u8; 32]> = HashSet::with_capacity(config.total_target);
    let mut duplicates = Vec::new();
    let mut unique: Vec<&Instance> = Vec::with_capacity(corpus.len());
    for instance in corpus {
        if hashes.insert(content_hash(instance)) {
            unique.push(instance);
        } else {
            duplicates.push(instance.utterance_id.clone());
        }
    }

    let kept: Vec<&Instance> = if config.keep_original {
        unique.clone()
    } else {
        let mut keep = vec![false; unique.len()];
        for label in ClassLabel::ALL {
            let members: Vec<usize> = (0..unique.len()).filter(|&i| unique[i].label() == label).collect();
            let mut rng = ChaCha8Rng::from_seed(
                FieldHasher::new().u64(config.seed).field("subsample").field(label.as_str()).finish(),
            );
            for &i in members.choose_multiple(&mut rng, quotas[&label].min(members.len())) {
                keep[i] = true;
            }
        }
        // hashes of dropped originals stay reserved: a variant equal to one is not new
        unique.iter().zip(keep).filter(|(_, k)| *k).map(|(i, _)| *i).collect()
    };

    let mut classes: BTreeMap<ClassLabel, ClassTally> = BTreeMap::new();
    for label in ClassLabel::ALL {
        let original = kept.iter().filter(|i| i.label() == label).count();
        classes.insert(
            label,
            ClassTally {
                target: quotas[&label],
                original,
                surplus: original.saturating_sub(quotas[&label]),
                target_percentage: config.class_targets[&label],
                ..Default::default()
            },
        );
    }

    let mut output: Vec<AugmentedInstance> =
        kept.iter().map(|i| AugmentedInstance::original((*i).clone())).collect();
    let pool = RulePool::new(corpus);

    for label in ClassLabel::ALL {
        let tally = classes.get_mut(&label).expect("all classes present");
        let deficit = tally.target.saturating_sub(tally.original);
        let eligible: Vec<&Instance> = unique
            .iter()
            .copied()
            .filter(|i| match label {
                ClassLabel::Irrelevant => i.has_scenario(),
                _ => i.label() == label && i.history.len() >= 2,
            })
            .collect();
        tally.eligible_sources = eligible.len();
        if deficit == 0 {
            continue;
        }
        let sources = seeded_order(eligible, config.seed, label);
        let lists = candidates(&sources, label, &pool, config);
        let rounds = lists.iter().map(Vec::len).max().unwrap_or(0);
        let mut accepted = 0;
        'fill: for round in 0..rounds {
            for list in &lists {
                if accepted == deficit {
                    break 'fill;
                }
                if let Some(candidate) = list.get(round) {
                    if hashes.insert(content_hash(&candidate.instance)) {
                        output.push(candidate.clone());
                        accepted += 1;
                    }
                }
            }
        }
        tally.generated = accepted;
        tally.shortfall = deficit - accepted;
        if tally.shortfall > 0 {
            log::warn!(
                "class {label}: filled {accepted} of {deficit} from {} sources",
                sources.len()
            );
        }
    }

    let total = output.len();
    for (label, tally) in classes.iter_mut() {
        tally.achieved = output.iter().filter(|a| a.instance.label() == *label).count();
        tally.achieved_percentage = 100.0 * tally.achieved as f64 / total as f64;
    }
    let mut provenance_counts = BTreeMap::new();
    for a in &output {
        *provenance_counts.entry(a.provenance).or_insert(0) += 1;
    }
    let manifest = AugmentManifest {
        config: config.clone(),
        input_instances: corpus.len(),
        duplicate_originals_dropped: duplicates,
        output_instances: total,
        classes,
        provenance_counts,
        output_digest: sha256_hex(serialize_jsonl(&output)),
    };
    Ok(AugmentOutput {
        instances: output,
        manifest,
    })
}

/// Checks the provenance invariants of an augmented corpus against the
/// originals it was built from; returns one message per violation.
pub fn check_provenance(corpus: &[Instance], augmented: &[AugmentedInstance]) -> Vec<String> {
    let parents: HashMap<&str, &Instance> = corpus.iter().map(|i| (i.utterance_id.as_str(), i)).collect();
    let mut problems = Vec::new();
    let mut hashes = HashSet::new();
    let mut ids = HashSet::new();
    for a in augmented {
        let id = &a.instance.utterance_id;
        if !hashes.insert(content_hash(&a.instance)) {
            problems.push(format!("{id}: duplicate content hash"));
        }
        if !ids.insert(id.as_str()) {
            problems.push(format!("{id}: duplicate utterance_id"));
        }
        let Some(parent) = parents.get(a.parent_id.as_str()) else {
            problems.push(format!("{id}: unknown parent {}", a.parent_id));
            continue;
        };
        match a.provenance {
            Provenance::Original => {
                if a.instance != **parent {
                    problems.push(format!("{id}: original differs from the input record"));
                }
            }
            Provenance::RuleReplaced => {
                if a.instance.tree_id == parent.tree_id {
                    problems.push(format!("{id}: replacement rule comes from the parent's tree"));
                }
                if a.instance.gold_answer != ClassLabel::Irrelevant.as_str() {
                    problems.push(format!("{id}: rule-replaced instance is not Irrelevant"));
                }
            }
            Provenance::HistoryShuffled => {
                let mut mine = a.instance.history.clone();
                let mut theirs = parent.history.clone();
                if mine == theirs {
                    problems.push(format!("{id}: history is not reordered"));
                }
                mine.sort();
                theirs.sort();
                if mine != theirs {
                    problems.push(format!("{id}: history is not a permutation of the parent's"));
                }
                if a.instance.label() != parent.label() || a.instance.gold_answer != parent.gold_answer {
                    problems.push(format!("{id}: gold answer changed"));
                }
            }
        }
    }
    problems
}
