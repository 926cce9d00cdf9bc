//! Batch front-end wiring the pipeline:
//! link -> build -> randomize -> analyze -> matchpairs -> report.
//!
//! Exit codes: 0 success, 1 internal error, 2 I/O error (missing or
//! unreadable files), 3 schema error (malformed input data). All
//! randomness flows from the configured base seed; no wall-clock entropy
//! is used anywhere, so any run repeated with the same configuration and
//! seed is byte-identical below the output headers, regardless of the
//! worker count.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "citegauge", version, about = "Citation-network imbalance analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Flat `key = value` config file; CLI flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Reference model: rd, hd, or pd.
    #[arg(long)]
    model: Option<String>,
    /// Number of randomized replicates.
    #[arg(long)]
    replicates: Option<u32>,
    /// Worker threads (default: available cores). Does not affect results.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep papers that neither make nor receive citations.
    #[arg(long)]
    keep_isolated: bool,
    /// Keep citations whose endpoints share an author.
    #[arg(long)]
    include_self_citations: bool,
    /// Report two-sided p-values.
    #[arg(long)]
    two_sided_p: bool,
}

#[derive(Args, Debug, Clone)]
struct CorpusArgs {
    /// Directory containing papers.jsonl, citations.csv, authors.jsonl.
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    /// Papers file (JSON Lines); overrides --corpus-dir.
    #[arg(long)]
    papers: Option<PathBuf>,
    /// Citations file (headerless CSV src,dst); overrides --corpus-dir.
    #[arg(long)]
    citations: Option<PathBuf>,
    /// Authors file (JSON Lines); overrides --corpus-dir.
    #[arg(long)]
    authors: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Link two bibliographic corpora by year, author last names, and title.
    Link {
        /// Corpus A records (JSON Lines).
        #[arg(long)]
        a: PathBuf,
        /// Corpus B records (JSON Lines).
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Enrich and validate a corpus, writing analysis-ready files.
    Build {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate randomized replicates and their citation tabulations.
    Randomize {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Also write a per-draw trace (replicate 0 only).
        #[arg(long)]
        trace: bool,
    },
    /// Over/under-citation report by group and gender category.
    Analyze {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Citing-side filter, e.g. `all` or `gender_category=MM`.
        #[arg(long)]
        from: Option<String>,
        /// Cited-side filter.
        #[arg(long)]
        to: Option<String>,
        /// Partition: none, by_subfield, by_topic, by_venue_rank,
        /// by_venue_type, by_year, by_venue.
        #[arg(long)]
        partition: Option<String>,
    },
    /// Matched-pair comparison of citing populations.
    Matchpairs {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Split: gender_MM_vs_WW, venue_type, prominence, ma_or_halves.
        #[arg(long)]
        split: Option<String>,
        /// Matching replicates (defaults to --replicates).
        #[arg(long)]
        match_replicates: Option<u32>,
    },
    /// Generate a synthetic corpus.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of papers.
        #[arg(long)]
        papers: Option<usize>,
        /// Inclusive year range, e.g. 1995..2014.
        #[arg(long)]
        years: Option<String>,
        #[arg(long)]
        countries: Option<usize>,
        #[arg(long)]
        topics: Option<usize>,
        /// Mean citations per paper (Poisson).
        #[arg(long)]
        citations_mean: Option<f64>,
        /// Constant citations per paper; overrides --citations-mean.
        #[arg(long)]
        citations_const: Option<u32>,
        #[arg(long)]
        homophily: Option<f64>,
        #[arg(long)]
        pa_exponent: Option<f64>,
        /// Selection-bias multipliers, e.g. `WW=0.8,MM=1.1`.
        #[arg(long)]
        bias: Option<String>,
        /// Gender category probabilities `MM,MW,WM,WW`, e.g. `0.7,0.08,0.12,0.1`.
        #[arg(long)]
        category_probs: Option<String>,
    },
    /// Summarize report files on stdout.
    Report {
        /// Report CSVs produced by analyze or matchpairs.
        files: Vec<PathBuf>,
    },
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    use citegauge_core::Error as CoreError;
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Io { .. } => 2,
                CoreError::Parse { .. }
                | CoreError::DuplicatePaper { .. }
                | CoreError::UnknownPaper(_)
                | CoreError::UnknownAuthor(_)
                | CoreError::InvalidInput(_) => 3,
                _ => 1,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
