//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::active::AnnotationSession;
use crate::config::RunConfig;
use crate::corpus::{
    corpus_stats, equalize, ingest_csv, load_corpus, split_stratified, write_canonical, write_csv, CsvFormat,
    DatasetSplit, RecipeRecord, SplitPart,
};
use crate::entities::{Extender, Gazetteer, PatternExtractor};
use crate::error::{Error, Result};
use crate::eval::{evaluate, write_report_dir, Evaluation};
use crate::features::{FeatureSpec, Vocabulary};
use crate::genre::Genre;
use crate::models::{Classifier, ModelKind, TrainLog};
use crate::service::{hide_labels, AppState};
use crate::synthetic::generate;

#[derive(Parser, Debug)]
#[command(
    name = "recipeforge",
    version,
    about = "Recipe entity extension, genre classification and annotation"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags that override config-file values.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// key = value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    feature: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    learning_rate: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<String>,
    #[arg(long, global = true)]
    batch_size: Option<String>,
    /// Records per experiment block (0 = whole corpus)
    #[arg(long, global = true)]
    block_size: Option<usize>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    query_batch: Option<usize>,
    #[arg(long, global = true)]
    per_genre: Option<usize>,
    #[arg(long, global = true)]
    mixing: Option<f64>,
    #[arg(long, global = true)]
    run_id: Option<String>,
    /// Any config key, repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn layer(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_owned(), v));
            }
        };
        push("seed", self.seed.map(|v| v.to_string()));
        push("feature", self.feature.clone());
        push("model", self.model.clone());
        push("learning_rate", self.learning_rate.clone());
        push("epochs", self.epochs.clone());
        push("batch_size", self.batch_size.clone());
        push("block_size", self.block_size.map(|v| v.to_string()));
        push("tau", self.tau.map(|v| v.to_string()));
        push("query_batch", self.query_batch.map(|v| v.to_string()));
        push("per_genre", self.per_genre.map(|v| v.to_string()));
        push("mixing", self.mixing.map(|v| v.to_string()));
        push("run_id", self.run_id.clone());
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("--set expects KEY=VALUE, got {s:?}")))?;
            out.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        Ok(out)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Read a CSV corpus into the canonical record format
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// with-extended or without-extended; detected from the header if omitted
        #[arg(long)]
        format: Option<String>,
    },
    /// Per-genre and per-provenance counts
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Add extended entities extracted from directions
    ExtendNer {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Process-verb lexicon, one verb per line
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Build a vocabulary for the configured feature
    BuildVocab {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on the training part of the split and save the model
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model on one part of the split
    Evaluate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model_file: PathBuf,
        /// train, val, test or all
        #[arg(long, default_value = "test")]
        part: String,
    },
    /// Train and score every feature and model combination
    Experiment {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated feature specs
        #[arg(long, default_value = "title,title-ner,title-ext-ner,directions")]
        features: String,
        /// Comma-separated model kinds
        #[arg(long, default_value = "nb,logreg,svm,forest,mlp")]
        models: String,
    },
    /// Sample the same number of records from every genre
    Equalize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Interactive query-by-committee labeling in the terminal
    Annotate {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Resume from (and save to) this checkpoint
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Write the labeled corpus here when the session ends
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep gold labels only on the first N records of each genre
        #[arg(long)]
        seed_per_genre: Option<usize>,
    },
    /// Run the annotation HTTP service
    Serve {
        /// Corpus files; each is addressed by its file stem
        #[arg(long = "corpus", required = true)]
        corpora: Vec<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory of static UI assets served at /
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Write a seeded synthetic corpus
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Stats { .. } => "stats",
            Command::ExtendNer { .. } => "extend-ner",
            Command::BuildVocab { .. } => "build-vocab",
            Command::Train { .. } => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::Experiment { .. } => "experiment",
            Command::Equalize { .. } => "equalize",
            Command::Annotate { .. } => "annotate",
            Command::Serve { .. } => "serve",
            Command::GenSynthetic { .. } => "gen-synthetic",
        }
    }
}

/// Standard streams, injectable for tests.
pub struct Io<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code: 0 success, 1 user error, 2 internal error.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(io.stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(io.stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli, io) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            if e.is_user_error() {
                1
            } else {
                2
            }
        }
    }
}

fn write_err(e: std::io::Error) -> Error {
    Error::io("<stream>", e)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

/// Settings without the machine-specific data directory.
fn portable_settings(cfg: &RunConfig) -> String {
    cfg.to_settings()
        .lines()
        .filter(|l| !l.starts_with("data_dir "))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// The configured run id, or `<command>-<hash>` of the settings and input
/// corpus so identical runs land in the same directory.
fn run_dir(cfg: &RunConfig, command: &str, input: Option<&Path>) -> Result<PathBuf> {
    let id = if cfg.run_id.is_empty() {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(portable_settings(cfg).as_bytes());
        if let Some(p) = input {
            h.update(sha256_file(p)?.as_bytes());
        }
        format!("{command}-{}", &hex(&h.finalize())[..12])
    } else {
        cfg.run_id.clone()
    };
    let dir = cfg.path(&cfg.reports_dir).join(id);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join("config.txt");
    std::fs::write(&path, portable_settings(cfg)).map_err(|e| Error::io(&path, e))?;
    Ok(dir)
}

fn echo_config(cfg: &RunConfig, command: &str, io: &mut Io<'_>) -> Result<()> {
    writeln!(io.stderr, "# recipeforge {command} (seed {})", cfg.seed).map_err(write_err)?;
    for line in cfg.to_settings().lines() {
        writeln!(io.stderr, "#   {line}").map_err(write_err)?;
    }
    Ok(())
}

fn write_records(path: &Path, records: &[RecipeRecord]) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let format = if records.iter().any(|r| r.extended_ner.is_some()) {
            CsvFormat::WithExtended
        } else {
            CsvFormat::WithoutExtended
        };
        write_csv(path, records, format)
    } else {
        write_canonical(path, records)
    }
}

fn labeled(records: &[RecipeRecord]) -> Vec<RecipeRecord> {
    records.iter().filter(|r| r.genre.is_some()).cloned().collect()
}

fn needs_extension(records: &[RecipeRecord], feature: FeatureSpec) -> bool {
    feature == FeatureSpec::TitleExtNer && records.iter().any(|r| r.extended_ner.is_none())
}

fn train_one(cfg: &RunConfig, train: &[&RecipeRecord]) -> Result<(Classifier, TrainLog)> {
    let vocab = Vocabulary::build(train.iter().copied(), cfg.feature, cfg.vocab_size, cfg.min_df)?;
    Classifier::train(train, cfg.feature, vocab, &cfg.model_settings())
}

fn split_for(cfg: &RunConfig, records: &[RecipeRecord]) -> Result<DatasetSplit> {
    split_stratified(records, cfg.split, cfg.seed)
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> Result<()> {
    let command = cli.command.name();
    let layers = RunConfig::layers(cli.overrides.config.as_deref(), cli.overrides.layer()?)?;
    let cfg = RunConfig::resolve(&layers)?;
    echo_config(&cfg, command, io)?;

    match cli.command {
        Command::Ingest { input, out, format } => {
            let format = format
                .map(|f| match f.as_str() {
                    "with-extended" => Ok(CsvFormat::WithExtended),
                    "without-extended" => Ok(CsvFormat::WithoutExtended),
                    _ => Err(Error::validation(format!("unknown CSV format {f:?}"))),
                })
                .transpose()?;
            let report = ingest_csv(&cfg.path(&input), format)?;
            for e in &report.errors {
                writeln!(io.stderr, "row {} (line {}): {}", e.row + 1, e.line, e.error).map_err(write_err)?;
            }
            write_records(&cfg.path(&out), &report.records)?;
            writeln!(
                io.stdout,
                "ingested {} records, {} rows rejected",
                report.records.len(),
                report.errors.len()
            )
            .map_err(write_err)?;
            if !report.errors.is_empty() {
                return Err(Error::validation(format!("{} malformed rows", report.errors.len())));
            }
        }
        Command::Stats { input, json } => {
            let stats = corpus_stats(&load_corpus(&cfg.path(&input))?);
            if json {
                writeln!(io.stdout, "{}", serde_json::to_string_pretty(&stats)?).map_err(write_err)?;
            } else {
                writeln!(
                    io.stdout,
                    "{:<11} {:>8} {:>8} {:>8} {:>5}",
                    "genre", "human", "machine", "total", "id"
                )
                .map_err(write_err)?;
                for g in &stats.per_genre {
                    writeln!(
                        io.stdout,
                        "{:<11} {:>8} {:>8} {:>8} {:>5}",
                        g.genre.name(),
                        g.human,
                        g.machine,
                        g.total,
                        g.genre.id()
                    )
                    .map_err(write_err)?;
                }
                writeln!(
                    io.stdout,
                    "{:<11} {:>8} {:>8} {:>8}\nunlabeled {}",
                    "total", stats.human_total, stats.machine_total, stats.labeled_total, stats.unlabeled
                )
                .map_err(write_err)?;
            }
        }
        Command::ExtendNer { input, out, lexicon } => {
            let records = load_corpus(&cfg.path(&input))?;
            let pattern = match lexicon {
                Some(p) => PatternExtractor::from_lexicon_file(&cfg.path(&p))?,
                None => PatternExtractor::default(),
            };
            let extender = Extender::new(pattern, Gazetteer::build(&records));
            let extended = extender.extend_corpus(&records);
            write_records(&cfg.path(&out), &extended)?;
            let added: usize = extended
                .iter()
                .zip(&records)
                .map(|(e, r)| {
                    e.extended_ner
                        .as_ref()
                        .map_or(0, |s| s.len())
                        .saturating_sub(r.ner.len())
                })
                .sum();
            writeln!(
                io.stdout,
                "extended {} records, {added} entities beyond source NER",
                extended.len()
            )
            .map_err(write_err)?;
        }
        Command::BuildVocab { input, out } => {
            let records = load_corpus(&cfg.path(&input))?;
            let vocab = Vocabulary::build(&records, cfg.feature, cfg.vocab_size, cfg.min_df)?;
            vocab.save(&cfg.path(&out))?;
            writeln!(io.stdout, "vocabulary of {} terms for {}", vocab.len(), cfg.feature).map_err(write_err)?;
        }
        Command::Train { input, out } => {
            let path = cfg.path(&input);
            let records = labeled(&load_corpus(&path)?);
            if needs_extension(&records, cfg.feature) {
                return Err(Error::validation(
                    "feature title-ext-ner needs extended entities; run extend-ner first",
                ));
            }
            let split = split_for(&cfg, &records)?;
            let train = split.select(&records, SplitPart::Train);
            let (clf, log) = train_one(&cfg, &train)?;
            let model_path = cfg.path(&out);
            clf.save(&model_path)?;
            let dir = run_dir(&cfg, command, Some(&path))?;
            write_train_log(&dir.join("train_log.csv"), &log)?;
            writeln!(
                io.stdout,
                "trained {} on {} records ({}); model {}; run {}",
                clf.kind().as_str(),
                train.len(),
                cfg.feature,
                model_path.display(),
                dir.display()
            )
            .map_err(write_err)?;
        }
        Command::Evaluate {
            input,
            model_file,
            part,
        } => {
            let part: SplitPart = part.parse()?;
            let path = cfg.path(&input);
            let records = labeled(&load_corpus(&path)?);
            let clf = Classifier::load(&cfg.path(&model_file))?;
            let selected: Vec<&RecipeRecord> = match part {
                SplitPart::All => records.iter().collect(),
                p => split_for(&cfg, &records)?.select(&records, p),
            };
            let ev = evaluate(&clf, &selected, part)?;
            let dir = run_dir(&cfg, command, Some(&path))?;
            write_report_dir(&dir, &ev)?;
            write!(io.stdout, "{}", ev.report).map_err(write_err)?;
            writeln!(io.stdout, "report {}", dir.display()).map_err(write_err)?;
        }
        Command::Experiment {
            input,
            features,
            models,
        } => {
            let features: Vec<FeatureSpec> = features.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
            let models: Vec<ModelKind> = models.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
            let path = cfg.path(&input);
            let rows = experiment(&layers, &cfg, &path, &features, &models, io)?;
            let dir = run_dir(&cfg, command, Some(&path))?;
            let table = experiment_table(&rows, &sha256_file(&path)?);
            let p = dir.join("experiment.txt");
            std::fs::write(&p, &table).map_err(|e| Error::io(&p, e))?;
            let p = dir.join("experiment.json");
            std::fs::write(&p, serde_json::to_string_pretty(&rows)? + "\n").map_err(|e| Error::io(&p, e))?;
            for row in &rows {
                write_report_dir(&dir.join(&row.name), &row.test)?;
            }
            write!(io.stdout, "{table}").map_err(write_err)?;
            writeln!(io.stdout, "report {}", dir.display()).map_err(write_err)?;
        }
        Command::Equalize { input, out } => {
            let records = labeled(&load_corpus(&cfg.path(&input))?);
            let eq = equalize(&records, cfg.per_genre, cfg.seed)?;
            write_records(&cfg.path(&out), &eq)?;
            writeln!(io.stdout, "wrote {} records, {} per genre", eq.len(), cfg.per_genre).map_err(write_err)?;
        }
        Command::Annotate {
            input,
            checkpoint,
            out,
            seed_per_genre,
        } => annotate(&cfg, input, checkpoint, out, seed_per_genre, io)?,
        Command::Serve {
            corpora,
            addr,
            static_dir,
        } => {
            let mut loaded = BTreeMap::new();
            for p in &corpora {
                let p = cfg.path(p);
                let id = p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| Error::validation(format!("cannot name corpus {}", p.display())))?
                    .to_owned();
                loaded.insert(id, load_corpus(&p)?);
            }
            let addr = addr
                .parse()
                .map_err(|_| Error::validation(format!("bad listen address {addr:?}")))?;
            let state = Arc::new(AppState::new(loaded, cfg.session_config()));
            writeln!(io.stdout, "serving /v1/ on http://{addr}").map_err(write_err)?;
            io.stdout.flush().map_err(write_err)?;
            tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| Error::io("<runtime>", e))?
                .block_on(crate::service::serve(addr, state, static_dir.map(|d| cfg.path(&d))))?;
        }
        Command::GenSynthetic { out } => {
            let records = generate(&cfg.synthetic_spec())?;
            write_records(&cfg.path(&out), &records)?;
            writeln!(io.stdout, "wrote {} synthetic records", records.len()).map_err(write_err)?;
        }
    }
    Ok(())
}

fn write_train_log(path: &Path, log: &TrainLog) -> Result<()> {
    let mut body = String::from("epoch,loss\n");
    for (k, l) in log.epoch_loss.iter().enumerate() {
        writeln!(body, "{},{l}", k + 1).unwrap();
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize)]
struct ExperimentRow {
    name: String,
    block: usize,
    records: usize,
    feature: FeatureSpec,
    model: ModelKind,
    train_accuracy: Option<f64>,
    val_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    test_macro_f1: Option<f64>,
    test_macro_auc: Option<f64>,
    #[serde(skip)]
    test: Evaluation,
}

fn experiment(
    layers: &[Vec<(String, String)>],
    cfg: &RunConfig,
    path: &Path,
    features: &[FeatureSpec],
    models: &[ModelKind],
    io: &mut Io<'_>,
) -> Result<Vec<ExperimentRow>> {
    let mut records = labeled(&load_corpus(path)?);
    if features.iter().any(|&f| needs_extension(&records, f)) {
        writeln!(io.stderr, "# extending entities for title-ext-ner").map_err(write_err)?;
        records = Extender::new(PatternExtractor::default(), Gazetteer::build(&records)).extend_corpus(&records);
    }
    records.sort_by_key(|r| r.id);
    let blocks: Vec<&[RecipeRecord]> = if cfg.block_size == 0 {
        vec![&records[..]]
    } else {
        records.chunks(cfg.block_size).collect()
    };
    let mut rows = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        let split = split_for(cfg, block)?;
        let parts = [SplitPart::Train, SplitPart::Val, SplitPart::Test].map(|p| split.select(block, p));
        for &feature in features {
            for &model in models {
                let mut layered = layers.to_vec();
                layered.push(vec![
                    ("model".to_owned(), model.as_str().to_owned()),
                    ("feature".to_owned(), feature.to_string()),
                ]);
                let run = RunConfig::resolve(&layered)?;
                let (clf, _) = train_one(&run, &parts[0])?;
                let evals = [SplitPart::Train, SplitPart::Val, SplitPart::Test]
                    .iter()
                    .zip(&parts)
                    .map(|(&p, recs)| evaluate(&clf, recs, p))
                    .collect::<Result<Vec<_>>>()?;
                let mut name = format!("{feature}-{}", model.as_str());
                if blocks.len() > 1 {
                    write!(name, "-b{}", b + 1).unwrap();
                }
                let [tr, va, te]: [Evaluation; 3] = evals.try_into().expect("three parts");
                writeln!(
                    io.stderr,
                    "# {name}: test accuracy {}",
                    te.report.accuracy.map_or("n/a".into(), |a| format!("{a:.4}"))
                )
                .map_err(write_err)?;
                rows.push(ExperimentRow {
                    name,
                    block: b + 1,
                    records: block.len(),
                    feature,
                    model,
                    train_accuracy: tr.report.accuracy,
                    val_accuracy: va.report.accuracy,
                    test_accuracy: te.report.accuracy,
                    test_macro_f1: te.report.macro_f1,
                    test_macro_auc: te.report.macro_auc,
                    test: te,
                });
            }
        }
    }
    Ok(rows)
}

fn experiment_table(rows: &[ExperimentRow], corpus_sha: &str) -> String {
    let pct = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{:.2}", 100.0 * v));
    let mut out = format!("corpus sha256 {corpus_sha}\n\n");
    writeln!(
        out,
        "{:>5} {:<14} {:<7} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "block", "feature", "model", "train%", "val%", "test%", "f1%", "auc%"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:>5} {:<14} {:<7} {:>8} {:>8} {:>8} {:>8} {:>8}",
            r.block,
            r.feature.to_string(),
            r.model.as_str(),
            pct(r.train_accuracy),
            pct(r.val_accuracy),
            pct(r.test_accuracy),
            pct(r.test_macro_f1),
            pct(r.test_macro_auc)
        )
        .unwrap();
    }
    out
}

fn print_query(q: &crate::active::QueryView, io: &mut Io<'_>) -> Result<()> {
    let out = &mut io.stdout;
    writeln!(out, "\nrecord {}: {}", q.record_id, q.title).map_err(write_err)?;
    for (k, d) in q.directions.iter().enumerate() {
        writeln!(out, "  {}. {d}", k + 1).map_err(write_err)?;
    }
    if !q.extended_ner.is_empty() {
        let ents: Vec<String> = q
            .extended_ner
            .iter()
            .map(|e| format!("{} [{}]", e.surface, e.category))
            .collect();
        writeln!(out, "  entities: {}", ents.join(", ")).map_err(write_err)?;
    }
    if !q.committee_votes.is_empty() {
        let votes: Vec<String> = q
            .committee_votes
            .iter()
            .map(|v| format!("{} {}", v.model.as_str(), v.genre.name()))
            .collect();
        writeln!(out, "  votes: {}  entropy {:.4}", votes.join(", "), q.vote_entropy).map_err(write_err)?;
    }
    let menu: Vec<String> = Genre::ALL.iter().map(|g| format!("{} {}", g.id(), g.name())).collect();
    write!(out, "  {}\n  label 1-9, r = round, q = quit: ", menu.join("  ")).map_err(write_err)?;
    out.flush().map_err(write_err)
}

fn annotate(
    cfg: &RunConfig,
    input: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    out: Option<PathBuf>,
    seed_per_genre: Option<usize>,
    io: &mut Io<'_>,
) -> Result<()> {
    let checkpoint = checkpoint.map(|p| cfg.path(&p));
    let mut session = match (&checkpoint, &input) {
        (Some(p), _) if p.exists() => AnnotationSession::load_checkpoint(p)?,
        (_, Some(i)) => {
            let records = load_corpus(&cfg.path(i))?;
            let records = match seed_per_genre {
                Some(k) => hide_labels(&records, k),
                None => records,
            };
            AnnotationSession::new(records, cfg.session_config())?
        }
        _ => return Err(Error::validation("annotate needs --in or an existing --checkpoint")),
    };
    let mut line = String::new();
    loop {
        if session.pool().is_empty() {
            writeln!(io.stdout, "pool is empty").map_err(write_err)?;
            break;
        }
        let Some(q) = session.next_query() else {
            let s = session.run_round(&[])?;
            writeln!(
                io.stdout,
                "round {}: {} human, {} auto-labeled, {} queued, {} left in pool",
                s.round, s.human_labeled, s.auto_labeled, s.queried, s.pool_remaining
            )
            .map_err(write_err)?;
            continue;
        };
        print_query(&q, io)?;
        line.clear();
        if io.stdin.read_line(&mut line).map_err(|e| Error::io("<stdin>", e))? == 0 {
            writeln!(io.stdout).map_err(write_err)?;
            break;
        }
        match line.trim() {
            "q" | "quit" => break,
            "r" | "round" => {
                let s = session.run_round(&[])?;
                writeln!(
                    io.stdout,
                    "round {}: {} human, {} auto-labeled, {} queued, {} left in pool",
                    s.round, s.human_labeled, s.auto_labeled, s.queried, s.pool_remaining
                )
                .map_err(write_err)?;
            }
            answer => {
                let genre = answer.parse::<Genre>();
                match genre.and_then(|g| session.submit_label(q.record_id, g)) {
                    Ok(o) => writeln!(io.stdout, "  ok, {} left in batch", o.remaining_in_batch),
                    Err(e) => writeln!(io.stdout, "  {e}"),
                }
                .map_err(write_err)?;
            }
        }
    }
    let m = session.metrics();
    writeln!(
        io.stdout,
        "round {}, {} human, {} machine, {} left in pool",
        m.round, m.human, m.machine, m.pool_remaining
    )
    .map_err(write_err)?;
    if let Some(p) = &checkpoint {
        session.save_checkpoint(p)?;
    }
    if let Some(p) = out {
        let records: Vec<RecipeRecord> = session.records().cloned().collect();
        write_records(&cfg.path(&p), &records)?;
    }
    Ok(())
}
