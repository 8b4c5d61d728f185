//! Subcommands behind the `hmc-efb` binary.
//!
//! Everything writes to caller-supplied streams so tests can drive the
//! commands in-process.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hmc_efb::dataio::{read_corpus, read_sentences, CorpusFormat, RawSentence, TagMap};
use hmc_efb::discrim::SgdConfig;
use hmc_efb::eval::{evaluate, EvalReport};
use hmc_efb::features::FeatureTemplate;
use hmc_efb::model;
use hmc_efb::tagger::{DecoderKind, Tagger, TrainConfig};
use hmc_efb::Error;

/// Environment variable naming the directory that relative data paths fall back to.
pub const DATA_DIR_VAR: &str = "EFB_DATA_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hmc-efb", version, about = "Sequence tagging with HMC entropic forward-backward and MEMM decoders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a tagger and write a model file.
    Train(TrainArgs),
    /// Tag whitespace-tokenized sentences (one per line) or a corpus file.
    Tag(TagArgs),
    /// Score a model on a tagged test corpus.
    Evaluate(EvaluateArgs),
    /// Train MEMM and HMC-EFB with shared features and compare them.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus format: conll2000, conll2003 or conllu.
    #[arg(long, default_value = "conllu", value_parser = parse_format)]
    pub format: CorpusFormat,
    /// Two-column source→target tag map applied while reading.
    #[arg(long)]
    pub tagmap: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// Initial SGD learning rate.
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Epoch e uses lr / (1 + decay * e).
    #[arg(long, default_value_t = 0.05)]
    pub decay: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub l2: f64,
    /// Minibatch size.
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Additive smoothing for frequency tables.
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    /// Fit the MEMM first-position model on sentence-initial tokens only.
    #[arg(long)]
    pub memm_initial_only: bool,
}

impl HyperArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            sgd: SgdConfig {
                learning_rate: self.lr,
                decay: self.decay,
                epochs: self.epochs,
                l2: self.l2,
                batch_size: self.batch,
                seed: self.seed,
            },
            delta: self.delta,
            memm_initial_only: self.memm_initial_only,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Tagged training corpus.
    pub train: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value = "hmc-efb", value_parser = parse_decoder)]
    pub decoder: DecoderKind,
    /// Feature template: nf, lf1 or lf2.
    #[arg(long, default_value = "lf1", value_parser = parse_template)]
    pub features: FeatureTemplate,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Where to write the model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Input file; `-` or absent reads standard input.
    pub input: Option<PathBuf>,
    /// Read the input as a tagged corpus in this format instead of plain lines.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<CorpusFormat>,
    /// Fail unless the model was trained for this decoder.
    #[arg(long, value_parser = parse_decoder)]
    pub decoder: Option<DecoderKind>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Tagged test corpus.
    pub test: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_parser = parse_decoder)]
    pub decoder: Option<DecoderKind>,
    /// Name shown in the report; defaults to the test file stem.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Also write the key=value report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub train: PathBuf,
    pub test: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Comma-separated feature templates.
    #[arg(long, default_value = "nf,lf1,lf2", value_delimiter = ',', value_parser = parse_template)]
    pub features: Vec<FeatureTemplate>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub dataset: Option<String>,
    /// Also write all key=value reports here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<CorpusFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_decoder(s: &str) -> Result<DecoderKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_template(s: &str) -> Result<FeatureTemplate, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed command and the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericalDegeneracy { .. } => EXIT_DEGENERATE,
            _ => EXIT_DATA,
        };
        CliError { code, message: e.to_string() }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    Error::Io { path: path.to_owned(), source: e }.into()
}

type CliResult<T = ()> = Result<T, CliError>;

/// Resolve a relative data path against `EFB_DATA_DIR` when it does not exist as given.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_VAR) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_owned()
}

fn load_tagmap(args: &CorpusArgs) -> CliResult<Option<TagMap>> {
    Ok(match &args.tagmap {
        Some(p) => Some(TagMap::load(resolve_data_path(p))?),
        None => None,
    })
}

fn dataset_name(explicit: &Option<String>, path: &Path) -> String {
    explicit.clone().unwrap_or_else(|| {
        path.file_stem().map_or_else(|| "dataset".to_owned(), |s| s.to_string_lossy().into_owned())
    })
}

fn checked_config(hyper: &HyperArgs) -> CliResult<TrainConfig> {
    let cfg = hyper.config();
    cfg.sgd.validate().map_err(|e| CliError::usage(e.to_string()))?;
    if cfg.delta.is_nan() || cfg.delta < 0.0 || cfg.delta.is_infinite() {
        return Err(CliError::usage(format!("--delta must be a finite non-negative number, got {}", cfg.delta)));
    }
    Ok(cfg)
}

fn write_err(path: Option<&Path>) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| io_error(path.unwrap_or(Path::new("<stdout>")), e)
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> CliResult {
    let cfg = checked_config(&args.hyper)?;
    let tagmap = load_tagmap(&args.corpus)?;
    let corpus = read_corpus(resolve_data_path(&args.train), args.corpus.format, tagmap.as_ref())?;
    let (tagger, summary) = Tagger::train(args.decoder, args.features, &corpus, &cfg)?;
    model::save(&tagger, &args.out)?;
    let w = write_err(None);
    writeln!(out, "decoder={}", args.decoder.name()).map_err(&w)?;
    writeln!(out, "template={}", args.features.name()).map_err(&w)?;
    write!(out, "{summary}").map_err(&w)?;
    writeln!(out, "model={}", args.out.display()).map_err(&w)?;
    Ok(())
}

fn read_plain_sentences(reader: &mut dyn BufRead, origin: &Path) -> CliResult<Vec<Vec<String>>> {
    let mut sentences = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| io_error(origin, e))?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    Ok(sentences)
}

pub fn cmd_tag(args: &TagArgs, stdin: &mut dyn BufRead, out: &mut dyn Write) -> CliResult {
    let tagger = model::load(&args.model, args.decoder)?;
    let from_stdin = args.input.as_deref().is_none_or(|p| p == Path::new("-"));
    let sentences: Vec<Vec<String>> = match (args.format, from_stdin) {
        (Some(format), false) => {
            let path = resolve_data_path(args.input.as_deref().unwrap_or(Path::new("-")));
            read_sentences(&path, format, None)?.into_iter().map(|s| s.tokens).collect()
        }
        (Some(format), true) => {
            let mut text = String::new();
            stdin.read_to_string(&mut text).map_err(|e| io_error(Path::new("<stdin>"), e))?;
            hmc_efb::dataio::parse_sentences(&text, Path::new("<stdin>"), format, None)?
                .into_iter()
                .map(|s| s.tokens)
                .collect()
        }
        (None, true) => read_plain_sentences(stdin, Path::new("<stdin>"))?,
        (None, false) => {
            let path = resolve_data_path(args.input.as_deref().unwrap_or(Path::new("-")));
            let file = fs::File::open(&path).map_err(|e| io_error(&path, e))?;
            read_plain_sentences(&mut std::io::BufReader::new(file), &path)?
        }
    };

    let mut buf = Vec::new();
    for (k, tokens) in sentences.iter().enumerate() {
        if k > 0 {
            buf.push(b'\n');
        }
        let labels = tagger.tag(tokens)?;
        for (tok, label) in tokens.iter().zip(labels) {
            buf.extend_from_slice(tok.as_bytes());
            buf.push(b'\t');
            buf.extend_from_slice(label.as_bytes());
            buf.push(b'\n');
        }
    }
    match &args.out {
        Some(path) => fs::write(path, &buf).map_err(|e| io_error(path, e)),
        None => out.write_all(&buf).map_err(write_err(None)),
    }
}

fn read_test(path: &Path, corpus: &CorpusArgs) -> CliResult<Vec<RawSentence>> {
    let tagmap = load_tagmap(corpus)?;
    Ok(read_sentences(resolve_data_path(path), corpus.format, tagmap.as_ref())?)
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<EvalReport> {
    let tagger = model::load(&args.model, args.decoder)?;
    let test = read_test(&args.test, &args.corpus)?;
    let report = evaluate(&tagger, &test, &tagger.vocab, &dataset_name(&args.dataset, &args.test))?;
    let w = write_err(None);
    write!(out, "{report}").map_err(&w)?;
    writeln!(out).map_err(&w)?;
    write!(out, "{}", report.to_key_values()).map_err(&w)?;
    if let Some(path) = &args.out {
        fs::write(path, report.to_key_values()).map_err(|e| io_error(path, e))?;
    }
    Ok(report)
}

/// Rows of `(template, memm report, hmc-efb report)`.
pub type Comparison = Vec<(FeatureTemplate, EvalReport, EvalReport)>;

pub fn format_comparison(rows: &Comparison) -> String {
    let mut s = String::new();
    let width = 26;
    s.push_str(&format!("{:<12}{:<10}{:<width$}{:<width$}\n", "dataset", "features", "MEMM KW/UW/Global", "HMC-EFB KW/UW/Global"));
    for (template, memm, efb) in rows {
        s.push_str(&format!("{:<12}{:<10}{:<width$}{:<width$}\n", memm.dataset, template.name(), memm.cell(), efb.cell()));
    }
    s
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult<Comparison> {
    if args.features.is_empty() {
        return Err(CliError::usage("--features needs at least one template"));
    }
    let cfg = checked_config(&args.hyper)?;
    let tagmap = load_tagmap(&args.corpus)?;
    let corpus = read_corpus(resolve_data_path(&args.train), args.corpus.format, tagmap.as_ref())?;
    let test = read_test(&args.test, &args.corpus)?;
    let dataset = dataset_name(&args.dataset, &args.test);

    let mut rows = Comparison::new();
    for &template in &args.features {
        let ((efb, _), (memm, _)) = Tagger::train_pair(template, &corpus, &cfg)?;
        let memm_report = evaluate(&memm, &test, &corpus.vocab, &dataset)?;
        let efb_report = evaluate(&efb, &test, &corpus.vocab, &dataset)?;
        rows.push((template, memm_report, efb_report));
    }

    let mut kv = String::new();
    for (_, memm, efb) in &rows {
        kv.push_str(&memm.to_key_values());
        kv.push('\n');
        kv.push_str(&efb.to_key_values());
        kv.push('\n');
    }
    let w = write_err(None);
    write!(out, "{}\n{}", format_comparison(&rows), kv).map_err(&w)?;
    if let Some(path) = &args.out {
        fs::write(path, &kv).map_err(|e| io_error(path, e))?;
    }
    Ok(rows)
}

/// Parse `argv` and run the selected command; returns the process exit code.
pub fn run<I, S>(argv: I, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Tag(a) => cmd_tag(a, stdin, out),
        Command::Evaluate(a) => cmd_evaluate(a, out).map(drop),
        Command::Compare(a) => cmd_compare(a, out).map(drop),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code
        }
    }
}

impl Cli {
    /// Parse arguments given without the program name; exits on bad input like `parse_from`.
    pub fn parse_args(args: &[&str]) -> Cli {
        Cli::parse_from(std::iter::once("hmc-efb").chain(args.iter().copied()))
    }
}
