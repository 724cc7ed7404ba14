//! `sharc`: validate, probe, augment, annotate, run the baseline, score and
//! report on ShARC-format corpora.

mod manifest;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sharc_core::augment::{
    build_augmented_corpus, check_provenance, parse_class_targets, AugmentConfig, AugmentedInstance,
    DEFAULT_TOTAL_TARGET,
};
use sharc_core::baseline::{predict_corpus, tune, ParamGrid, PolicyParams};
use sharc_core::corpus::{read_jsonl, write_jsonl};
use sharc_core::eval::{evaluate, BleuMode, EvalOptions, EvalReport, PredictionRecord};
use sharc_core::markers::{annotate_corpus, MatchMode, MatchOptions, StopwordMode};
use sharc_core::probe::{probe, ProbeOptions, ProbeReport};
use sharc_core::report::render_report;
use sharc_core::ruleparse::CueSet;
use sharc_core::{load_corpus, Instance, Strictness};

use manifest::Run;

#[derive(Parser, Debug)]
#[command(name = "sharc", version, about = "ShARC corpus tooling")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fail unless the primary output has this SHA-256.
    #[arg(long, global = true, value_name = "HEX")]
    expect_digest: Option<String>,
    /// Reject malformed records instead of dropping them.
    #[arg(long, global = true)]
    strict: bool,
    /// Directory searched for relative input paths that do not exist.
    #[arg(long, global = true, env = "SHARC_DATA_DIR", value_name = "DIR")]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a corpus, report dropped records, optionally write it canonically.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Canonical one-record-per-line output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class distribution and shortcut statistics.
    Probe {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        split_name: Option<String>,
        #[arg(long, default_value_t = 30)]
        min_support: usize,
    },
    /// Build the class-balanced augmented corpus.
    Augment(AugmentArgs),
    /// Per-token history, scenario and gold-span labels.
    Annotate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Span coverage summary.
        #[arg(long)]
        coverage: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Normalized)]
        match_mode: Mode,
        #[arg(long, value_enum, default_value_t = Stopwords::None)]
        stopwords: Stopwords,
    },
    /// Run the rule-based policy, or tune it with `baseline tune`.
    Baseline(BaselineArgs),
    /// Grid-search policy parameters on a dev corpus.
    Tune(TuneArgs),
    /// Score predictions against gold.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Bleu::Corpus)]
        bleu_mode: Bleu,
    },
    /// Markdown comparison of probe and evaluation reports.
    Report {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        augmented: Option<PathBuf>,
        /// Evaluation report as NAME=PATH; repeatable.
        #[arg(long = "eval", value_name = "NAME=PATH")]
        evals: Vec<String>,
        /// Default: standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOTAL_TARGET)]
    total: usize,
    /// Class percentages, e.g. irr=22.41,yes=27.09,no=28.11,more=22.39.
    #[arg(long)]
    targets: Option<String>,
    #[arg(long, default_value_t = 3)]
    max_permutations: usize,
    #[arg(long, default_value_t = 3)]
    max_irrelevant: usize,
    /// Subsample originals to the class quotas instead of keeping all.
    #[arg(long)]
    subsample_originals: bool,
    /// Rule-replaced instances start with an empty history.
    #[arg(long)]
    drop_history_on_irrelevant: bool,
    #[arg(long)]
    out: PathBuf,
    /// Default: `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
struct BaselineArgs {
    #[command(subcommand)]
    action: Option<BaselineAction>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Predictions as {utterance_id, answer} lines.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Policy parameters (JSON), e.g. the output of `tune`.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    cues: Option<PathBuf>,
    /// Also write the fired rule and asked clause per instance.
    #[arg(long)]
    details: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BaselineAction {
    /// Same as the top-level `tune`.
    Tune(TuneArgs),
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Best parameters (JSON).
    #[arg(long)]
    out: PathBuf,
    /// All trials (JSON).
    #[arg(long)]
    trials: Option<PathBuf>,
    /// Parameter grid (JSON); default is the built-in grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    cues: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Normalized,
    Raw,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Stopwords {
    None,
    Basic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Bleu {
    Corpus,
    SentenceAverage,
}

struct Session {
    strictness: Strictness,
    data_dir: Option<PathBuf>,
    expect_digest: Option<String>,
}

impl Session {
    fn resolve(&self, path: &Path) -> PathBuf {
        if path.exists() || path.is_absolute() {
            return path.to_path_buf();
        }
        match &self.data_dir {
            Some(dir) if dir.join(path).exists() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn load(&self, path: &Path, run: &mut Run) -> Result<Vec<Instance>> {
        let path = self.resolve(path);
        let corpus = load_corpus(&path, self.strictness)?;
        run.input(&path)?;
        let report = &corpus.report;
        if !report.dropped_instances.is_empty() || !report.dropped_evidence.is_empty() {
            log::warn!(
                "{}: dropped {} records and {} evidence items",
                path.display(),
                report.dropped_instances.len(),
                report.dropped_evidence.len()
            );
        }
        Ok(corpus.instances)
    }

    fn input(&self, path: &Path, run: &mut Run) -> Result<PathBuf> {
        let path = self.resolve(path);
        run.input(&path)?;
        Ok(path)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_lines<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut w = create(path)?;
    write_jsonl(&mut w, items).with_context(|| format!("cannot write {}", path.display()))?;
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))
}

fn cues(path: Option<&Path>) -> Result<CueSet> {
    Ok(match path {
        Some(p) => CueSet::load(p)?,
        None => CueSet::default(),
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn run_tune(ctx: &Session, args: &TuneArgs) -> Result<()> {
    let mut run = Run::start("tune");
    let dev = ctx.load(&args.input, &mut run)?;
    let grid: ParamGrid = match &args.grid {
        Some(p) => read_json(&ctx.input(p, &mut run)?)?,
        None => ParamGrid::default(),
    };
    run.config(&grid)?;
    let report = tune(&dev, &grid, &cues(args.cues.as_deref())?)?;
    write_json(&args.out, &report.best)?;
    run.output(&args.out);
    if let Some(path) = &args.trials {
        write_json(path, &report)?;
        run.output(path);
    }
    let t = &report.best_trial;
    println!(
        "best of {} trials: micro {:.2} macro {:.2} combined {}",
        report.trials.len(),
        t.micro_accuracy,
        t.macro_accuracy,
        t.combined.map_or("n/a".into(), |c| format!("{c:.2}"))
    );
    run.finish(ctx.expect_digest.as_deref())
}

fn run_command(cli: Cli) -> Result<()> {
    let ctx = Session {
        strictness: if cli.strict { Strictness::Strict } else { Strictness::Lenient },
        data_dir: cli.data_dir,
        expect_digest: cli.expect_digest,
    };
    match cli.command {
        Command::Validate { input, out } => {
            let mut run = Run::start("validate");
            let path = ctx.resolve(&input);
            let corpus = load_corpus(&path, ctx.strictness)?;
            run.input(&path)?;
            let r = &corpus.report;
            println!(
                "{}: {} records, {} instances kept, {} dropped, {} evidence items dropped",
                path.display(),
                r.records,
                corpus.instances.len(),
                r.dropped_instances.len(),
                r.dropped_evidence.len()
            );
            for d in r.dropped_instances.iter().chain(&r.dropped_evidence) {
                println!("  {}: {}", d.location, d.reason);
            }
            if let Some(out) = out {
                write_lines(&out, &corpus.instances)?;
                run.config(r)?;
                run.output(&out);
            }
            run.finish(ctx.expect_digest.as_deref())
        }
        Command::Probe {
            input,
            out,
            split_name,
            min_support,
        } => {
            let mut run = Run::start("probe");
            let corpus = ctx.load(&input, &mut run)?;
            let options = ProbeOptions {
                split_name,
                min_support,
            };
            run.config(&options)?;
            let report = probe(&corpus, &options)?;
            write_json(&out, &report)?;
            run.output(&out);
            println!("{}", render_report(&[("corpus", &report)], &[]));
            run.finish(ctx.expect_digest.as_deref())
        }
        Command::Augment(a) => {
            let mut run = Run::start("augment");
            let corpus = ctx.load(&a.input, &mut run)?;
            let mut config = AugmentConfig::with_seed(a.seed);
            config.total_target = a.total;
            if let Some(t) = &a.targets {
                config.class_targets = parse_class_targets(t)?;
            }
            config.max_permutations_per_instance = a.max_permutations;
            config.max_irrelevant_per_instance = a.max_irrelevant;
            config.keep_original = !a.subsample_originals;
            config.retain_history_on_irrelevant = !a.drop_history_on_irrelevant;
            run.config(&config)?;
            let output = build_augmented_corpus(&corpus, &config)?;
            let problems = check_provenance(&corpus, &output.instances);
            if !problems.is_empty() {
                bail!("provenance check failed: {}", problems.join("; "));
            }
            write_lines::<AugmentedInstance>(&a.out, &output.instances)?;
            run.output(&a.out);
            let manifest_path = a.manifest.unwrap_or_else(|| with_suffix(&a.out, ".manifest.json"));
            write_json(&manifest_path, &output.manifest)?;
            run.output(&manifest_path);
            let m = &output.manifest;
            println!("{} instances, digest {}", m.output_instances, m.output_digest);
            for (label, t) in &m.classes {
                println!(
                    "  {label}: {} ({:.2}%, target {:.2}%), generated {}, shortfall {}",
                    t.achieved, t.achieved_percentage, t.target_percentage, t.generated, t.shortfall
                );
            }
            run.finish(ctx.expect_digest.as_deref())
        }
        Command::Annotate {
            input,
            out,
            coverage,
            match_mode,
            stopwords,
        } => {
            let mut run = Run::start("annotate");
            let corpus = ctx.load(&input, &mut run)?;
            let options = MatchOptions {
                mode: match match_mode {
                    Mode::Normalized => MatchMode::Normalized,
                    Mode::Raw => MatchMode::Raw,
                },
                stopwords: match stopwords {
                    Stopwords::None => StopwordMode::None,
                    Stopwords::Basic => StopwordMode::Basic,
                },
            };
            run.config(&options)?;
            let (annotations, cov) = annotate_corpus(&corpus, options);
            write_lines(&out, &annotations)?;
            run.output(&out);
            if let Some(path) = coverage {
                write_json(&path, &cov)?;
                run.output(&path);
            }
            println!(
                "{} annotated, gold span for {}/{} follow-up instances",
                cov.instances, cov.with_span, cov.followup_instances
            );
            run.finish(ctx.expect_digest.as_deref())
        }
        Command::Baseline(b) => {
            if let Some(BaselineAction::Tune(t)) = &b.action {
                return run_tune(&ctx, t);
            }
            let (Some(input), Some(out)) = (&b.input, &b.out) else {
                bail!("baseline needs --in and --out (or the `tune` subcommand)");
            };
            let mut run = Run::start("baseline");
            let corpus = ctx.load(input, &mut run)?;
            let params: PolicyParams = match &b.params {
                Some(p) => read_json(&ctx.input(p, &mut run)?)?,
                None => PolicyParams::default(),
            };
            run.config(&params)?;
            let predictions = predict_corpus(&corpus, &params, &cues(b.cues.as_deref())?);
            let records: Vec<PredictionRecord> = predictions.iter().map(|p| p.record()).collect();
            write_lines(out, &records)?;
            run.output(out);
            if let Some(path) = &b.details {
                write_lines(path, &predictions)?;
                run.output(path);
            }
            println!("{} predictions", records.len());
            run.finish(ctx.expect_digest.as_deref())
        }
        Command::Tune(t) => run_tune(&ctx, &t),
        Command::Evaluate {
            gold,
            pred,
            out,
            bleu_mode,
        } => {
            let mut run = Run::start("evaluate");
            let gold = ctx.load(&gold, &mut run)?;
            let pred_path = ctx.input(&pred, &mut run)?;
            let pred: Vec<PredictionRecord> = read_jsonl(&pred_path)?;
            let options = EvalOptions {
                bleu_mode: match bleu_mode {
                    Bleu::Corpus => BleuMode::Corpus,
                    Bleu::SentenceAverage => BleuMode::SentenceAverage,
                },
            };
            run.config(&options)?;
            let report = evaluate(&gold, &pred, options)?;
            write_json(&out, &report)?;
            run.output(&out);
            println!("{}", report.render_table());
            run.finish(ctx.expect_digest.as_deref())
        }
        Command::Report {
            original,
            augmented,
            evals,
            out,
        } => {
            let mut run = Run::start("report");
            let original_report: ProbeReport = read_json(&ctx.input(&original, &mut run)?)?;
            let augmented_report: Option<ProbeReport> = match &augmented {
                Some(p) => Some(read_json(&ctx.input(p, &mut run)?)?),
                None => None,
            };
            let mut eval_reports: Vec<(String, EvalReport)> = Vec::new();
            for spec in &evals {
                let (name, path) = spec
                    .split_once('=')
                    .with_context(|| format!("--eval expects NAME=PATH, got {spec:?}"))?;
                eval_reports.push((name.to_string(), read_json(&ctx.input(Path::new(path), &mut run)?)?));
            }
            let mut corpora = vec![("original", &original_report)];
            if let Some(r) = &augmented_report {
                corpora.push(("augmented", r));
            }
            let eval_rows: Vec<(&str, &EvalReport)> =
                eval_reports.iter().map(|(n, r)| (n.as_str(), r)).collect();
            let doc = render_report(&corpora, &eval_rows);
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    w.write_all(doc.as_bytes())?;
                    w.flush()?;
                    run.output(&path);
                }
                None => print!("{doc}"),
            }
            run.finish(ctx.expect_digest.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run_command(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
