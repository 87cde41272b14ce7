//! The `concise` command line.
//!
//! Exit status: 0 on success, 1 for usage errors (bad flags, unreadable
//! paths, invalid parameters), 2 for data errors. Flags take precedence over
//! `CONCISE_*` environment variables, which take precedence over defaults.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::align::{edits_between, CostModel, MergeMode};
use crate::datagen::{self, DropReport, FilterRules, Outcome};
use crate::error::Error;
use crate::io::{self, Lines, RefsFormat};
use crate::metrics::{self, AnalyzeConfig, DfTable, LogBase, SynonymLexicon};
use crate::score::{self, ScoreConfig, Selection};
use crate::tokenize::{TokenSequence, TokenizerOptions};

pub const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (formats: edits-jsonl v1, df-table v1, report-json v1)"
);

#[derive(Debug, Parser, Serialize)]
#[command(name = "concise", version = VERSION, about = "Conciseness evaluation and data toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Worker threads.
    #[arg(long, global = true, env = "CONCISE_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Inputs are already tokenized (split on whitespace only).
    #[arg(long, global = true, env = "CONCISE_PRETOKENIZED")]
    pub pretokenized: bool,
    /// NFC-normalize text on read.
    #[arg(long, global = true, env = "CONCISE_NFC")]
    pub nfc: bool,
    /// Print the effective configuration to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

impl GlobalArgs {
    fn tokenizer(&self) -> TokenizerOptions {
        TokenizerOptions {
            pretokenized: self.pretokenized,
            nfc: self.nfc,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ScoringArgs {
    #[arg(long, env = "CONCISE_BETA", default_value_t = 0.5)]
    pub beta: f64,
    /// Edit granularity: merged or split.
    #[arg(long, env = "CONCISE_MERGE_MODE", default_value = "merged")]
    pub merge_mode: MergeMode,
    /// Compare edit replacements case-insensitively.
    #[arg(long, env = "CONCISE_IGNORE_CASE")]
    pub ignore_case: bool,
    /// Choose references to maximize the running corpus score (order dependent).
    #[arg(long, env = "CONCISE_CUMULATIVE")]
    pub cumulative: bool,
}

impl ScoringArgs {
    fn config(&self, workers: usize) -> ScoreConfig {
        ScoreConfig {
            beta: self.beta,
            merge_mode: self.merge_mode,
            ignore_case: self.ignore_case,
            selection: if self.cumulative {
                Selection::Cumulative
            } else {
                Selection::Independent
            },
            costs: CostModel::default(),
            workers,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RefsArgs {
    /// Multi-reference examples (JSONL or TSV).
    #[arg(long)]
    pub refs: PathBuf,
    /// auto, jsonl or tsv.
    #[arg(long, default_value = "auto")]
    #[serde(skip)]
    pub refs_format: RefsFormat,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Score hypotheses against multi-reference rewrites.
    Score {
        #[command(flatten)]
        refs: RefsArgs,
        /// System outputs, one per line.
        #[arg(long)]
        hyps: PathBuf,
        /// Source sentences, checked against the references file.
        #[arg(long)]
        sources: Option<PathBuf>,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Write per-sentence counts as CSV.
        #[arg(long)]
        per_sentence: Option<PathBuf>,
    },
    /// Leave-one-out agreement between annotators.
    Agreement {
        #[command(flatten)]
        refs: RefsArgs,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Build training pairs from round-trip translations.
    DatagenRoundtrip {
        #[arg(long)]
        originals: PathBuf,
        #[arg(long)]
        roundtrips: PathBuf,
        #[arg(long, env = "CONCISE_MIN_COMPRESSION", default_value_t = 0.5)]
        min_compression: f64,
        #[arg(long, env = "CONCISE_MAX_COMPRESSION", default_value_t = 0.999)]
        max_compression: f64,
        /// Pivot language tag recorded as the pair origin.
        #[arg(long, default_value = "unk")]
        pivot: String,
        /// TSV pairs (default stdout).
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// JSON drop report (default stderr).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build training pairs from multi-reference translation sets.
    DatagenMultiref {
        #[command(flatten)]
        refs: RefsArgs,
        /// Set identifier recorded as the pair origin (default: file stem).
        #[arg(long)]
        set_id: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Select test-set candidates by length and quote balance.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = "CONCISE_MIN_WORDS", default_value_t = 15)]
        min_words: usize,
        /// Do not require balanced quotation marks.
        #[arg(long)]
        allow_unbalanced_quotes: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compression, readability, information density and synonym analysis.
    Analyze {
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        hyps: PathBuf,
        /// Document-frequency table from `build-df`.
        #[arg(long)]
        df: PathBuf,
        /// Synonym pairs, `word1<TAB>word2` per line.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Externally computed similarity score per line.
        #[arg(long)]
        similarity_file: Option<PathBuf>,
        /// e, 2, 10 or any other positive base.
        #[arg(long, env = "CONCISE_LOG_BASE", default_value = "e")]
        log_base: LogBase,
        #[arg(long, env = "CONCISE_MERGE_MODE", default_value = "merged")]
        merge_mode: MergeMode,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Per-sentence CSV.
        #[arg(long)]
        per_sentence: Option<PathBuf>,
    },
    /// Build a document-frequency table, one document per line.
    BuildDf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Extract edit spans between line-aligned sources and targets as JSONL.
    Edits {
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, env = "CONCISE_MERGE_MODE", default_value = "merged")]
        merge_mode: MergeMode,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "data error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn check_readable(paths: &[&Path]) -> CliResult {
    for p in paths {
        File::open(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
    }
    Ok(())
}

fn create(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Usage(format!("cannot write {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_err(path: Option<&Path>) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| {
        CliError::Data(Error::io(
            path.map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("<stdout>")),
            e,
        ))
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Data(Error::Malformed(e.to_string())))?;
    writeln!(w).and_then(|_| w.flush()).map_err(write_err(path))
}

fn write_report(path: Option<&Path>, report: &DropReport) -> CliResult {
    match path {
        Some(_) => write_json(path, report),
        None => {
            let json = serde_json::to_string(report)
                .map_err(|e| CliError::Data(Error::Malformed(e.to_string())))?;
            eprintln!("{json}");
            Ok(())
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Data(Error::Malformed(e.to_string()).at(path, None))
}

fn tokenize_all(lines: &[String], tok: &TokenizerOptions) -> Vec<TokenSequence> {
    lines.iter().map(|l| tok.apply(l)).collect()
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(cli: &Cli) -> CliResult {
    if cli.global.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    if cli.global.verbose {
        let cfg = serde_json::to_string(cli).unwrap_or_default();
        eprintln!("config: {cfg}");
    }
    let tok = cli.global.tokenizer();
    let workers = cli.global.workers;
    match &cli.command {
        Command::Score {
            refs,
            hyps,
            sources,
            scoring,
            output,
            per_sentence,
        } => {
            let mut inputs = vec![refs.refs.as_path(), hyps.as_path()];
            inputs.extend(sources.as_deref());
            check_readable(&inputs)?;
            let cfg = scoring.config(workers);
            cfg.validate()?;
            let examples = io::read_examples(&refs.refs, refs.refs_format, tok)?;
            let hyp_lines = io::read_lines(hyps)?;
            if let Some(src_path) = sources {
                let src_lines = io::read_lines(src_path)?;
                if src_lines.len() != examples.len() {
                    return Err(CliError::Data(
                        Error::LengthMismatch {
                            left_name: "sources".into(),
                            left: src_lines.len(),
                            right_name: "references".into(),
                            right: examples.len(),
                        }
                        .at(src_path, None),
                    ));
                }
                for (i, (line, ex)) in src_lines.iter().zip(&examples).enumerate() {
                    if tok.apply(line).tokens != ex.source.tokens {
                        return Err(CliError::Data(
                            Error::InconsistentSource.at(src_path, Some(i + 1)),
                        ));
                    }
                }
            }
            let hyp_seqs = tokenize_all(&hyp_lines, &tok);
            let report =
                score::score_corpus(&hyp_seqs, &examples, &cfg).map_err(|e| e.at(hyps, None))?;
            if let Some(csv_path) = per_sentence {
                let mut w = csv::Writer::from_path(csv_path).map_err(csv_err(csv_path))?;
                w.write_record(["id", "reference", "tp", "fp", "fn"])
                    .map_err(csv_err(csv_path))?;
                for s in &report.per_sentence {
                    w.write_record([
                        s.id.clone(),
                        s.reference.to_string(),
                        s.counts.tp.to_string(),
                        s.counts.fp.to_string(),
                        s.counts.fn_.to_string(),
                    ])
                    .map_err(csv_err(csv_path))?;
                }
                w.flush().map_err(write_err(Some(csv_path)))?;
            }
            write_json(output.as_deref(), &report)
        }

        Command::Agreement {
            refs,
            scoring,
            output,
        } => {
            check_readable(&[&refs.refs])?;
            let cfg = scoring.config(workers);
            cfg.validate()?;
            let examples = io::read_examples(&refs.refs, refs.refs_format, tok)?;
            let grid = score::leave_one_out(&examples, &cfg).map_err(|e| e.at(&refs.refs, None))?;
            write_json(output.as_deref(), &grid)
        }

        Command::DatagenRoundtrip {
            originals,
            roundtrips,
            min_compression,
            max_compression,
            pivot,
            output,
            report,
        } => {
            check_readable(&[originals, roundtrips])?;
            let rules = FilterRules {
                min_compression: *min_compression,
                max_compression: *max_compression,
                ..Default::default()
            };
            rules.validate()?;
            let mut w = create(output.as_deref())?;
            let werr = write_err(output.as_deref());
            let drop_report = datagen::pair_roundtrip_parallel(
                Lines::open(originals)?,
                Lines::open(roundtrips)?,
                &rules,
                &tok,
                pivot,
                workers,
                |pair| {
                    writeln!(w, "{}", pair.to_tsv())
                        .map_err(|e| Error::io(output.clone().unwrap_or_default(), e))
                },
            )
            .map_err(|e| locate_pairing(e, originals))?;
            w.flush().map_err(werr)?;
            if drop_report.input == 0 {
                return Err(CliError::Data(
                    Error::Malformed("empty input file".into()).at(originals, None),
                ));
            }
            write_report(report.as_deref(), &drop_report)
        }

        Command::DatagenMultiref {
            refs,
            set_id,
            output,
            report,
        } => {
            check_readable(&[&refs.refs])?;
            let set_id = set_id.clone().unwrap_or_else(|| {
                refs.refs
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "set".into())
            });
            let mut w = create(output.as_deref())?;
            let werr = write_err(output.as_deref());
            let mut drop_report = DropReport::default();
            for ex in io::example_stream(&refs.refs, refs.refs_format, tok)? {
                let outcome = datagen::derive_pair(&ex?, &set_id);
                drop_report.record(&outcome);
                if let Outcome::Kept(pair) = outcome {
                    writeln!(w, "{}", pair.to_tsv()).map_err(&werr)?;
                }
            }
            w.flush().map_err(&werr)?;
            if drop_report.input == 0 {
                return Err(CliError::Data(
                    Error::Malformed("no examples".into()).at(&refs.refs, None),
                ));
            }
            if let Some(n) = drop_report.dropped.get("too_few_references") {
                eprintln!("warning: skipped {n} examples with fewer than 2 references");
            }
            write_report(report.as_deref(), &drop_report)
        }

        Command::Filter {
            input,
            min_words,
            allow_unbalanced_quotes,
            output,
            report,
        } => {
            check_readable(&[input])?;
            let rules = FilterRules {
                min_words: *min_words,
                require_balanced_quotes: !allow_unbalanced_quotes,
                ..Default::default()
            };
            let mut w = create(output.as_deref())?;
            let werr = write_err(output.as_deref());
            let mut drop_report = DropReport::default();
            for line in Lines::open(input)? {
                let seq = tok.apply(&line?);
                match datagen::check_candidate(&seq, &rules) {
                    None => {
                        drop_report.record_kept();
                        writeln!(w, "{}", seq.raw).map_err(&werr)?;
                    }
                    Some(reason) => drop_report.record_drop(reason),
                }
            }
            w.flush().map_err(&werr)?;
            if drop_report.input == 0 {
                return Err(CliError::Data(
                    Error::Malformed("empty input file".into()).at(input, None),
                ));
            }
            write_report(report.as_deref(), &drop_report)
        }

        Command::Analyze {
            sources,
            hyps,
            df,
            lexicon,
            similarity_file,
            log_base,
            merge_mode,
            output,
            per_sentence,
        } => {
            let mut inputs = vec![sources.as_path(), hyps.as_path(), df.as_path()];
            inputs.extend(lexicon.as_deref());
            inputs.extend(similarity_file.as_deref());
            check_readable(&inputs)?;
            let table = DfTable::read_from(io::open(df)?).map_err(|e| locate(e, df))?;
            let lex = match lexicon {
                Some(p) => Some(SynonymLexicon::read_from(io::open(p)?).map_err(|e| locate(e, p))?),
                None => None,
            };
            let sim = match similarity_file {
                Some(p) => Some(read_similarity(p)?),
                None => None,
            };
            let src = tokenize_all(&io::read_lines(sources)?, &tok);
            let hyp = tokenize_all(&io::read_lines(hyps)?, &tok);
            let cfg = AnalyzeConfig {
                log_base: *log_base,
                merge_mode: *merge_mode,
                costs: CostModel::default(),
                workers,
            };
            let analysis = metrics::analyze(&src, &hyp, &table, lex.as_ref(), sim.as_deref(), &cfg)
                .map_err(|e| match e {
                    Error::InSentence {
                        index,
                        side,
                        source,
                    } => {
                        let path = if side == "source" { sources } else { hyps };
                        CliError::Data(source.at(path, Some(index + 1)))
                    }
                    other => CliError::Data(other.at(hyps, None)),
                })?;
            if let Some(csv_path) = per_sentence {
                let mut w = csv::Writer::from_path(csv_path).map_err(csv_err(csv_path))?;
                let mut header = vec![
                    "id",
                    "compression",
                    "fk_src",
                    "fk_hyp",
                    "mean_idf_src",
                    "mean_idf_hyp",
                    "synonym_subs",
                ];
                if sim.is_some() {
                    header.push("similarity");
                }
                w.write_record(&header).map_err(csv_err(csv_path))?;
                for r in &analysis.rows {
                    let mut rec = vec![
                        r.id.clone(),
                        r.compression.to_string(),
                        r.fk_src.to_string(),
                        r.fk_hyp.to_string(),
                        r.mean_idf_src.to_string(),
                        r.mean_idf_hyp.to_string(),
                        fmt_opt(r.synonym_subs),
                    ];
                    if sim.is_some() {
                        rec.push(fmt_opt(r.similarity));
                    }
                    w.write_record(&rec).map_err(csv_err(csv_path))?;
                }
                w.flush().map_err(write_err(Some(csv_path)))?;
            }
            write_json(output.as_deref(), &analysis.report)
        }

        Command::BuildDf { input, output } => {
            check_readable(&[input])?;
            let table = build_df_streaming(input, &tok, workers)?;
            let mut w = create(output.as_deref())?;
            table.write_to(&mut w).map_err(write_err(output.as_deref()))
        }

        Command::Edits {
            sources,
            targets,
            merge_mode,
            output,
        } => {
            check_readable(&[sources, targets])?;
            let src = io::read_lines(sources)?;
            let tgt = io::read_lines(targets)?;
            if src.len() != tgt.len() {
                return Err(CliError::Data(
                    Error::LengthMismatch {
                        left_name: "sources".into(),
                        left: src.len(),
                        right_name: "targets".into(),
                        right: tgt.len(),
                    }
                    .at(targets, None),
                ));
            }
            let mut w = create(output.as_deref())?;
            for (i, (s, t)) in src.iter().zip(&tgt).enumerate() {
                let edits = edits_between(
                    &tok.apply(s),
                    &tok.apply(t),
                    *merge_mode,
                    &CostModel::default(),
                );
                io::write_edit_record(&mut w, &(i + 1).to_string(), &edits)?;
            }
            w.flush().map_err(write_err(output.as_deref()))
        }
    }
}

/// Moves a parser's line number onto the file path.
fn locate(e: Error, path: &Path) -> CliError {
    match e {
        Error::Line { line, source } => CliError::Data(source.at(path, Some(line))),
        other => CliError::Data(other.at(path, None)),
    }
}

fn locate_pairing(e: Error, originals: &Path) -> CliError {
    match e {
        e @ Error::At { .. } => CliError::Data(e),
        Error::Line { line, source } => CliError::Data(source.at(originals, Some(line))),
        other => CliError::Data(other.at(originals, None)),
    }
}

fn read_similarity(path: &Path) -> CliResult<Vec<f64>> {
    io::read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| {
                CliError::Data(
                    Error::Malformed(format!("expected a number, found {l:?}"))
                        .at(path, Some(i + 1)),
                )
            })
        })
        .collect()
}

fn build_df_streaming(input: &Path, tok: &TokenizerOptions, workers: usize) -> CliResult<DfTable> {
    let mut table = DfTable::default();
    let mut batch: Vec<TokenSequence> = Vec::with_capacity(datagen::BATCH_LINES);
    let mut lines = Lines::open(input)?;
    loop {
        batch.clear();
        for line in lines.by_ref() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            batch.push(tok.apply(&line));
            if batch.len() == datagen::BATCH_LINES {
                break;
            }
        }
        if batch.is_empty() {
            break;
        }
        table.merge(&metrics::build_df_table_parallel(&batch, workers)?);
    }
    if table.doc_count == 0 {
        return Err(CliError::Data(Error::NoDocuments.at(input, None)));
    }
    Ok(table)
}
