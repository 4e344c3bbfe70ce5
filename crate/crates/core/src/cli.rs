//! Command-line front end.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::{read_pairs, write_pairs, ReadOutcome};
use crate::model::TransformKind;
use crate::pipeline::{
    check_corpus, check_report, closures_report, evaluate, evaluation_json, sweep, theta_grid, Checker, ResourceFiles,
};
use crate::similarity::{ConfigKind, CosineScale, LangPair, Thresholds};
use crate::treebank::LabelTable;
use crate::synth::{mixed_corpus, random_corpus, structured_corpus, Injection, Lexicon, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "wordclosure", version, about = "Check machine translation test pairs with word closures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every pair and report violations.
    Check(CheckArgs),
    /// Check pairs and score the verdicts against their gold labels.
    Evaluate(CheckArgs),
    /// Print the word closures of every pair.
    Closures(ClosureArgs),
    /// Score a range of thresholds against gold labels.
    Sweep(SweepArgs),
    /// Generate a synthetic corpus.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Pair corpus in JSONL.
    #[arg(long)]
    pub input: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "en-zh", value_parser = parse_lang)]
    pub lang: LangPair,
    /// Abort on the first malformed line.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Comma-separated constituent labels treated as phrases during
    /// alignment refinement, replacing the built-in list.
    #[arg(long, value_delimiter = ',')]
    pub phrase_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct ProviderArgs {
    /// Similarity configuration, 1 to 5.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub config: u8,
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// One threshold for every transformation, replacing the defaults.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Read cosines raw, in [-1, 1], or mapped to [0, 1].
    #[arg(long, default_value = "raw", value_parser = parse_scale)]
    pub cosine_scale: CosineScale,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Exit with status 1 when any pair violates the relation.
    #[arg(long)]
    pub fail_on_violation: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClosureArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub stop: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenMode {
    /// Random tokens and alignments, no gold labels.
    Random,
    /// Dictionary translations with one planted error kind.
    Structured,
    /// Structured pairs cycling through all kinds and errors.
    Mixed,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "mixed")]
    pub mode: GenMode,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "IT-2", value_parser = parse_kind)]
    pub kind: TransformKind,
    #[arg(long, default_value = "none", value_parser = parse_injection)]
    pub inject: Injection,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    #[arg(long, default_value_t = 3)]
    pub min_len: usize,
    #[arg(long, default_value_t = 12)]
    pub max_len: usize,
    #[arg(long, default_value_t = 400)]
    pub lexicon_size: usize,
    /// Also write synonyms.tsv, vectors.txt and stopwords.txt for the
    /// generated vocabulary into this directory.
    #[arg(long)]
    pub resources: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_lang(s: &str) -> std::result::Result<LangPair, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scale(s: &str) -> std::result::Result<CosineScale, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<TransformKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_injection(s: &str) -> std::result::Result<Injection, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn emit(output: Option<&Path>, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(output, text.as_bytes())
}

fn write_text(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn load_input(args: &InputArgs) -> Result<ReadOutcome> {
    let out = read_pairs(&args.input, args.lang, args.strict)?;
    for d in &out.diagnostics {
        log::warn!("{}:{}: {}", args.input.display(), d.line, d.message);
    }
    Ok(out)
}

fn with_phrase_labels(mut checker: Checker, input: &InputArgs) -> Result<Checker> {
    if let Some(labels) = &input.phrase_labels {
        let phrase: BTreeSet<String> = labels.iter().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect();
        if phrase.is_empty() {
            return Err(Error::Config("--phrase-labels is empty".into()));
        }
        checker.refine.labels = Some(LabelTable {
            phrase,
            ..LabelTable::for_language(input.lang.target_language())
        });
    }
    Ok(checker)
}

fn build_checker(p: &ProviderArgs, lang: LangPair) -> Result<Checker> {
    let kind = ConfigKind::from_number(p.config)?;
    let thresholds = match p.threshold {
        Some(t) => Thresholds::uniform(t),
        None => Thresholds::defaults(lang),
    };
    let files = ResourceFiles {
        synonyms: p.synonyms.clone(),
        vectors: p.vectors.clone(),
        stopwords: p.stopwords.clone(),
    };
    let (mut checker, warnings) = Checker::from_files(kind, &files, thresholds, lang)?;
    checker.provider = checker.provider.with_cosine_scale(p.cosine_scale)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(checker)
}

/// Runs a subcommand. `Ok(true)` means a violation was found.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Check(a) => {
            let checker = with_phrase_labels(build_checker(&a.provider, a.input.lang)?, &a.input)?;
            let input = load_input(&a.input)?;
            let outcomes = check_corpus(&checker, &input.pairs, a.input.workers)?;
            let report = check_report(&checker, &outcomes, &input.diagnostics);
            emit(a.input.output.as_deref(), &report)?;
            Ok(outcomes.iter().any(|o| o.verdict().is_some_and(|v| v.violation)))
        }
        Command::Evaluate(a) => {
            let checker = with_phrase_labels(build_checker(&a.provider, a.input.lang)?, &a.input)?;
            let input = load_input(&a.input)?;
            let outcomes = check_corpus(&checker, &input.pairs, a.input.workers)?;
            let eval = evaluate(&input.pairs, &outcomes)?;
            let mut report = check_report(&checker, &outcomes, &input.diagnostics);
            report["evaluation"] = evaluation_json(&eval);
            emit(a.input.output.as_deref(), &report)?;
            Ok(outcomes.iter().any(|o| o.verdict().is_some_and(|v| v.violation)))
        }
        Command::Closures(a) => {
            let checker = build_checker(
                &ProviderArgs {
                    config: 3,
                    synonyms: None,
                    vectors: None,
                    stopwords: None,
                    threshold: None,
                    cosine_scale: CosineScale::Raw,
                },
                a.input.lang,
            )?;
            let checker = with_phrase_labels(checker, &a.input)?;
            let input = load_input(&a.input)?;
            let report = closures_report(&checker, &input.pairs, a.input.workers)?;
            emit(a.input.output.as_deref(), &report)?;
            Ok(false)
        }
        Command::Sweep(a) => {
            let checker = with_phrase_labels(build_checker(&a.provider, a.input.lang)?, &a.input)?;
            let input = load_input(&a.input)?;
            let grid = theta_grid(a.start, a.stop, a.step)?;
            let report = sweep(&checker, &input.pairs, &grid, a.input.workers)?;
            let value = json!({"config": checker.config_echo(), "sweep": report});
            emit(a.input.output.as_deref(), &value)?;
            Ok(false)
        }
        Command::Gen(a) => {
            let lex = Lexicon::new(a.lexicon_size);
            let cfg = SynthConfig {
                lengths: (a.min_len, a.max_len),
                density: a.density,
                kind: a.kind,
                inject: a.inject,
                seed: a.seed,
            };
            let pairs = match a.mode {
                GenMode::Random => random_corpus(&cfg, a.count)?,
                GenMode::Structured => structured_corpus(&cfg, &lex, a.count)?,
                GenMode::Mixed => mixed_corpus(&lex, a.count, cfg.lengths, a.seed)?,
            };
            if let Some(dir) = &a.resources {
                lex.write_resources(dir)?;
            }
            let mut buf = Vec::new();
            write_pairs(&mut buf, &pairs)?;
            write_text(a.output.as_deref(), &buf)?;
            Ok(false)
        }
    }
}

fn fail_on_violation(cli: &Cli) -> bool {
    match &cli.command {
        Command::Check(a) | Command::Evaluate(a) => a.fail_on_violation,
        _ => false,
    }
}

/// Parses arguments and runs. Exit status 0 on success, 1 for a violation
/// under `--fail-on-violation`, 2 for usage, configuration or I/O errors.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let strict_exit = fail_on_violation(&cli);
    match run(cli) {
        Ok(true) if strict_exit => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
