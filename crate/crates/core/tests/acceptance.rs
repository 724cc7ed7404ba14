//! Acceptance checks, one line per criterion.
//!
//! Criteria on the ShARC splits read `sharc_train.json` and `sharc_dev.json`
//! from `$SHARC_DATA_DIR` (or its `json/` subdirectory). Without the data
//! they fail as blocked.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sharc_core::augment::{build_augmented_corpus, check_provenance, serialize_jsonl, AugmentConfig};
use sharc_core::baseline::{predict_corpus, tune, ParamGrid};
use sharc_core::eval::{bleu, combined_metric, evaluate, BleuMode, EvalOptions, PredictionRecord};
use sharc_core::markers::{annotate_corpus, lcs_match, MatchOptions};
use sharc_core::probe::{probe, ProbeOptions, ProbeReport};
use sharc_core::ruleparse::CueSet;
use sharc_core::{load_corpus, tokenize, ClassLabel, Instance, Strictness, TokenizedText};

const SEED: u64 = 13;

struct Outcome {
    pass: bool,
    detail: String,
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { pass: false, detail: detail.into() }
}

fn check(cond: bool, detail: String) -> Outcome {
    Outcome { pass: cond, detail }
}

fn find_split(name: &str) -> Result<PathBuf, String> {
    let dir = std::env::var_os("SHARC_DATA_DIR").ok_or("SHARC_DATA_DIR is not set")?;
    let dir = PathBuf::from(dir);
    let file = format!("sharc_{name}.json");
    [dir.join(&file), dir.join("json").join(&file)]
        .into_iter()
        .find(|p| p.exists())
        .ok_or_else(|| format!("{file} not found under {}", dir.display()))
}

fn load_split(name: &str) -> Result<Vec<Instance>, String> {
    let path = find_split(name)?;
    load_corpus(&path, Strictness::Lenient)
        .map(|c| c.instances)
        .map_err(|e| e.to_string())
}

fn blocked(reason: &str) -> Outcome {
    fail(format!("BLOCKED: ShARC data unavailable ({reason})"))
}

struct Data {
    train: Result<Vec<Instance>, String>,
    dev: Result<Vec<Instance>, String>,
}

fn probe_of(corpus: &[Instance]) -> ProbeReport {
    probe(corpus, &ProbeOptions::default()).expect("non-empty corpus")
}

fn default_augment(corpus: &[Instance]) -> Vec<Instance> {
    build_augmented_corpus(corpus, &AugmentConfig::with_seed(SEED))
        .expect("default config is valid")
        .instances
        .into_iter()
        .map(|a| a.instance)
        .collect()
}

fn criterion_1(d: &Data) -> Outcome {
    let train = match &d.train {
        Ok(t) => t,
        Err(e) => return blocked(e),
    };
    let r = probe_of(train);
    let want = [
        (ClassLabel::Irrelevant, 5.74),
        (ClassLabel::Yes, 30.94),
        (ClassLabel::No, 32.24),
        (ClassLabel::More, 31.08),
    ];
    let ok_dist = want
        .iter()
        .all(|&(l, p)| (r.class_distribution.percentage(l) - p).abs() <= 0.05);
    let got: Vec<String> = want
        .iter()
        .map(|&(l, _)| format!("{} {:.2}", l.short_name(), r.class_distribution.percentage(l)))
        .collect();
    check(
        r.instance_count == 21890 && ok_dist,
        format!("{} instances, {}", r.instance_count, got.join(" / ")),
    )
}

fn criterion_2(d: &Data) -> Outcome {
    let train = match &d.train {
        Ok(t) => t,
        Err(e) => return blocked(e),
    };
    let r = probe_of(train);
    match r.last_followup_agreement.yes_no.percentage {
        Some(p) => check((81.0..=87.0).contains(&p), format!("agreement {p:.2}%")),
        None => fail("no Yes/No instance with history"),
    }
}

fn criterion_3(d: &Data) -> Outcome {
    let train = match &d.train {
        Ok(t) => t,
        Err(e) => return blocked(e),
    };
    match probe_of(train).followup_rate_by_turn.spearman {
        Some(rho) => check(rho < 0.0, format!("spearman {rho:.3}")),
        None => fail("spearman undefined"),
    }
}

fn criterion_4(d: &Data) -> Outcome {
    let train = match &d.train {
        Ok(t) => t,
        Err(e) => return blocked(e),
    };
    let config = AugmentConfig::with_seed(SEED);
    let a = build_augmented_corpus(train, &config).expect("default config is valid");
    let b = build_augmented_corpus(train, &config).expect("default config is valid");
    let identical = serialize_jsonl(&a.instances) == serialize_jsonl(&b.instances);
    let problems = check_provenance(train, &a.instances);
    let n = a.instances.len();
    let marginals_ok = a
        .manifest
        .classes
        .values()
        .all(|t| (t.achieved_percentage - t.target_percentage).abs() <= 0.5);
    let shares: Vec<String> = a
        .manifest
        .classes
        .iter()
        .map(|(l, t)| format!("{} {:.2}", l.short_name(), t.achieved_percentage))
        .collect();
    check(
        n.abs_diff(31506) <= 10 && marginals_ok && problems.is_empty() && identical,
        format!(
            "{n} instances, {}, {} provenance problems, repeat run identical: {identical}",
            shares.join(" / "),
            problems.len()
        ),
    )
}

fn criterion_5(d: &Data) -> Outcome {
    let train = match &d.train {
        Ok(t) => t,
        Err(e) => return blocked(e),
    };
    let before = probe_of(train);
    let after = probe_of(&default_augment(train));
    let agree = |r: &ProbeReport| r.last_followup_agreement.yes_no.percentage.unwrap_or(f64::NAN);
    let empty = |r: &ProbeReport| r.irrelevant_context.empty_given_irrelevant.percentage.unwrap_or(f64::NAN);
    check(
        agree(&after) <= agree(&before) - 5.0 && empty(&after) < empty(&before),
        format!(
            "agreement {:.2} -> {:.2}, P(empty|irr) {:.2} -> {:.2}",
            agree(&before),
            agree(&after),
            empty(&before),
            empty(&after)
        ),
    )
}

fn criterion_6(d: &Data) -> Outcome {
    let dev = match &d.dev {
        Ok(t) => t,
        Err(e) => return blocked(e),
    };
    let mut config = AugmentConfig::with_seed(SEED);
    config.total_target = (dev.len() as f64 * 31506.0 / 21890.0).round() as usize;
    let aug: Vec<Instance> = build_augmented_corpus(dev, &config)
        .expect("config is valid")
        .instances
        .into_iter()
        .map(|a| a.instance)
        .collect();
    let cues = CueSet::default();
    let tuned = tune(dev, &ParamGrid::default(), &cues).expect("dev is non-empty");
    let score = |data: &[Instance]| {
        let preds: Vec<PredictionRecord> = predict_corpus(data, &tuned.best, &cues).iter().map(|p| p.record()).collect();
        evaluate(data, &preds, EvalOptions::default()).expect("aligned predictions")
    };
    let orig = score(dev);
    let augm = score(&aug);
    let (Some(co), Some(ca)) = (orig.combined, augm.combined) else {
        return fail("combined metric undefined (no follow-up instances)");
    };
    let band = if (58.0..=70.0).contains(&orig.micro_accuracy) { "in" } else { "outside" };
    check(
        ca <= 0.5 * co,
        format!(
            "combined {co:.2} -> {ca:.2} (ratio {:.3}); original micro {:.2} {band} [58, 70]",
            ca / co,
            orig.micro_accuracy
        ),
    )
}

fn criterion_7() -> Outcome {
    let a = combined_metric(71.25, 47.78);
    let b = combined_metric(44.09, 21.24);
    check(
        (a - 34.04).abs() <= 0.01 && (b - 9.36).abs() <= 0.01,
        format!("{a:.4}, {b:.4}"),
    )
}

/// Prefix-table LCS length, written independently of the crate.
fn oracle_lcs(a: &[u8], b: &[u8]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for &x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Longest subsequence of `a` (tried as every index subset) found in `b`.
fn subset_lcs(a: &[u8], b: &[u8]) -> usize {
    let is_subsequence = |s: &[u8]| {
        let mut it = b.iter();
        s.iter().all(|x| it.any(|y| y == x))
    };
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let s: Vec<u8> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
            is_subsequence(&s).then_some(s.len())
        })
        .max()
        .unwrap_or(0)
}

fn as_text(seq: &[u8]) -> String {
    seq.iter()
        .map(|&s| ["x", "y", "z"][s as usize])
        .collect::<Vec<_>>()
        .join(" ")
}

fn sequence(len: usize, mut code: usize) -> Vec<u8> {
    (0..len)
        .map(|_| {
            let s = (code % 3) as u8;
            code /= 3;
            s
        })
        .collect()
}

/// A token sequence with its symbols, tokenized once.
struct Seq {
    symbols: Vec<u8>,
    tokens: TokenizedText,
}

impl Seq {
    fn new(symbols: Vec<u8>) -> Self {
        let tokens = tokenize(&as_text(&symbols));
        Seq { symbols, tokens }
    }
}

/// Whether `lcs_match` disagrees with the oracle on one pair, or returns
/// pairs that are not a common subsequence.
fn lcs_discrepancy(a: &Seq, b: &Seq) -> bool {
    let pairs = lcs_match(&a.tokens, &b.tokens);
    let valid = pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
        && pairs.iter().all(|&(i, j)| a.tokens[i].normalized == b.tokens[j].normalized);
    !valid || pairs.len() != oracle_lcs(&a.symbols, &b.symbols)
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let max_total = 12;
    // the prefix-table oracle itself agrees with subset enumeration on short pairs
    let mut oracle_bad = 0usize;
    for la in 0..=4 {
        for lb in 0..=4 {
            for ca in 0..3usize.pow(la) {
                for cb in 0..3usize.pow(lb) {
                    let (a, b) = (sequence(la as usize, ca), sequence(lb as usize, cb));
                    oracle_bad += usize::from(oracle_lcs(&a, &b) != subset_lcs(&a, &b));
                }
            }
        }
    }
    if oracle_bad > 0 {
        return fail(format!("oracle disagrees with subset enumeration on {oracle_bad} pairs"));
    }
    // one side of every pair has at most max_total / 2 symbols
    let short: Vec<Vec<Seq>> = (0..=max_total / 2)
        .map(|l| (0..3usize.pow(l as u32)).map(|c| Seq::new(sequence(l, c))).collect())
        .collect();
    let mut exhaustive_pairs = 0usize;
    let mut bad = 0usize;
    for la in 0..=max_total {
        for lb in 0..=(max_total - la) {
            let (long_len, short_len, long_first) = if la >= lb { (la, lb, true) } else { (lb, la, false) };
            let shorts = &short[short_len];
            let n_long = 3usize.pow(long_len as u32);
            exhaustive_pairs += n_long * shorts.len();
            bad += (0..n_long)
                .into_par_iter()
                .map(|c| {
                    let long = Seq::new(sequence(long_len, c));
                    shorts
                        .iter()
                        .filter(|s| {
                            if long_first {
                                lcs_discrepancy(&long, s)
                            } else {
                                lcs_discrepancy(s, &long)
                            }
                        })
                        .count()
                })
                .sum::<usize>();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let random: Vec<(Seq, Seq)> = (0..10_000)
        .map(|_| {
            let la = rng.gen_range(13..=60);
            let lb = rng.gen_range(13..=60);
            let mut draw = |n| Seq::new((0..n).map(|_| rng.gen_range(0..3u8)).collect());
            (draw(la), draw(lb))
        })
        .collect();
    let bad_random = random.par_iter().filter(|(a, b)| lcs_discrepancy(a, b)).count();
    let secs = start.elapsed().as_secs_f64();
    check(
        bad == 0 && bad_random == 0 && secs < 60.0,
        format!(
            "{exhaustive_pairs} exhaustive pairs (combined length <= {max_total}) + 10000 random, {} discrepancies, {secs:.1}s",
            bad + bad_random
        ),
    )
}

fn criterion_9() -> Outcome {
    let identity = [
        ("Do you get housing benefits?", "Do you get housing benefits?"),
        ("Are you over 65?", "Are you over 65?"),
    ];
    let mut ok = true;
    for order in [1, 4] {
        for mode in [BleuMode::Corpus, BleuMode::SentenceAverage] {
            ok &= (bleu(&identity, order, mode).unwrap() - 100.0).abs() < 1e-9;
        }
    }
    let b1 = bleu(&[("do you get benefits", "do you get housing benefits")], 1, BleuMode::Corpus).unwrap();
    check(ok && (b1 - 77.88).abs() <= 0.01, format!("identity 100 at orders 1 and 4: {ok}; fixture BLEU-1 {b1:.4}"))
}

fn criterion_10(d: &Data) -> Outcome {
    let train = match &d.train {
        Ok(t) => t,
        Err(e) => return blocked(e),
    };
    let (_, cov) = annotate_corpus(train, MatchOptions::default());
    let c = cov.coverage.unwrap_or(0.0);
    let shown: Vec<&str> = cov.missing_span_ids.iter().take(10).map(String::as_str).collect();
    check(
        c >= 0.95,
        format!(
            "{}/{} follow-up instances with a span ({:.2}%); {} without, e.g. {:?}",
            cov.with_span,
            cov.followup_instances,
            100.0 * c,
            cov.missing_span_ids.len(),
            shown
        ),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let data = Data {
        train: load_split("train"),
        dev: load_split("dev"),
    };
    let criteria: Vec<Criterion> = vec![
        ("1 original-corpus statistics", Box::new(|| criterion_1(&data))),
        ("2 last-answer clue", Box::new(|| criterion_2(&data))),
        ("3 turn-length clue", Box::new(|| criterion_3(&data))),
        ("4 augmentation reproduction", Box::new(|| criterion_4(&data))),
        ("5 clue suppression", Box::new(|| criterion_5(&data))),
        ("6 baseline clue reliance", Box::new(|| criterion_6(&data))),
        ("7 metric identities", Box::new(criterion_7)),
        ("8 LCS oracle equivalence", Box::new(criterion_8)),
        ("9 BLEU fixtures", Box::new(criterion_9)),
        ("10 annotation coverage", Box::new(|| criterion_10(&data))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        println!("[{}] {name}: {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
