//! `bashkit`: batch command-line interface for the corpus toolkit.
//!
//! Every subcommand is a pure function of its inputs, flags and config
//! file; the effective configuration is printed at the start of each run.
//! Exit codes: 0 success, 1 domain failure, 2 usage error.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use bashkit_core::ast::ScopeClassification;
use bashkit_core::nl::Stopwords;
use bashkit_core::pipeline::{self, PipelineConfig, SpellMode};
use bashkit_core::specdb::SpecDb;
use bashkit_core::subtok::{self, Granularity, PairSide};
use bashkit_core::{classify_scope, metrics, parse_permissive, template};

#[derive(Parser)]
#[command(
    name = "bashkit",
    version,
    about = "Corpus toolkit for translating natural language to Bash"
)]
struct Cli {
    #[command(flatten)]
    common: CommonOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonOpts {
    /// Utility/flag database (TSV); defaults to the bundled one
    #[arg(long, global = true, env = "BASHKIT_SPEC_DB")]
    spec_db: Option<PathBuf>,

    /// Stopword list, one word per line; defaults to the bundled one
    #[arg(long, global = true, env = "BASHKIT_STOPWORDS")]
    stopwords: Option<PathBuf>,

    /// PRNG seed for the corpus split
    #[arg(long, global = true, env = "BASHKIT_SEED")]
    seed: Option<u64>,

    /// Vocabulary occurrence cutoff
    #[arg(long, global = true, env = "BASHKIT_CUTOFF")]
    cutoff: Option<u64>,

    /// Comma-separated top-k values for evaluation
    #[arg(long, global = true, env = "BASHKIT_K", value_delimiter = ',')]
    k: Option<Vec<usize>>,

    /// Record-level worker threads
    #[arg(long, global = true, env = "BASHKIT_WORKERS")]
    workers: Option<usize>,

    /// Keep unknown utilities and flags instead of rejecting them
    #[arg(long, global = true, env = "BASHKIT_PERMISSIVE")]
    permissive: bool,

    /// TOML config file (flags take precedence over its values)
    #[arg(long, global = true, env = "BASHKIT_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    spec_db: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    seed: Option<u64>,
    cutoff: Option<u64>,
    k: Option<Vec<usize>>,
    workers: Option<usize>,
    permissive: Option<bool>,
}

/// Fully resolved configuration: flags > config file > defaults.
struct Config {
    spec_db: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    seed: u64,
    cutoff: u64,
    k: Vec<usize>,
    workers: usize,
    permissive: bool,
}

impl Config {
    fn resolve(opts: &CommonOpts) -> Result<Config, String> {
        let file = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| format!("bad config {}: {e}", path.display()))?
            }
            None => FileConfig::default(),
        };
        Ok(Config {
            spec_db: opts.spec_db.clone().or(file.spec_db),
            stopwords: opts.stopwords.clone().or(file.stopwords),
            seed: opts.seed.or(file.seed).unwrap_or(42),
            cutoff: opts.cutoff.or(file.cutoff).unwrap_or(4),
            k: opts.k.clone().or(file.k).unwrap_or_else(|| vec![1, 3]),
            workers: opts.workers.or(file.workers).unwrap_or(1),
            permissive: opts.permissive || file.permissive.unwrap_or(false),
        })
    }

    fn print(&self) {
        let path_or = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "<bundled>".into())
        };
        eprintln!(
            "config: spec-db={} stopwords={} seed={} cutoff={} k={} workers={} permissive={}",
            path_or(&self.spec_db),
            path_or(&self.stopwords),
            self.seed,
            self.cutoff,
            self.k
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            self.workers,
            self.permissive,
        );
    }

    fn load_db(&self) -> Result<SpecDb, String> {
        match &self.spec_db {
            Some(path) => SpecDb::load(path).map_err(|e| e.to_string()),
            None => Ok(SpecDb::bundled()),
        }
    }

    fn load_stopwords(&self) -> Result<Stopwords, String> {
        match &self.stopwords {
            Some(path) => Stopwords::load(path).map_err(|e| e.to_string()),
            None => Ok(Stopwords::bundled()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse commands (one per line) into AST JSON or violation lists
    Parse {
        /// Input file; stdin when omitted
        file: Option<PathBuf>,
    },
    /// Run the corpus pipeline: filter, clean, split, stats
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Apply spell suggestions instead of only reporting them
        #[arg(long)]
        apply_spell: bool,
    },
    /// Encode lines at a token granularity
    Tokenize {
        #[arg(long, value_enum, default_value = "token")]
        granularity: CliGranularity,
        #[arg(long, value_enum, default_value = "cmd")]
        side: CliSide,
        file: Option<PathBuf>,
    },
    /// Print `command<TAB>template` for commands (one per line)
    Template { file: Option<PathBuf> },
    /// Compute corpus statistics for a corpus JSONL file
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Optional split TSV (id<TAB>train|dev|test) for coverage stats
        #[arg(long)]
        split: Option<PathBuf>,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a system-output file against a test-set file
    Eval {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        test_set: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum CliGranularity {
    Token,
    Char,
    Subtoken,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum CliSide {
    Nl,
    Cmd,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match Config::resolve(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    config.print();
    match run(cli.command, &config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Ok(false) signals a domain failure (e.g. out-of-scope input lines).
fn run(command: Command, config: &Config) -> Result<bool, String> {
    let db = config.load_db()?;
    match command {
        Command::Parse { file } => {
            let lines = read_lines(file.as_deref())?;
            let results = in_pool(config.workers, || {
                map_ordered(&lines, |line| {
                    if config.permissive {
                        let (ast, violations) = parse_permissive(line, &db);
                        match ast {
                            Some(ast) => parse_record(line, Some(&ast), &violations),
                            None => parse_record(line, None, &violations),
                        }
                    } else {
                        match classify_scope(line, &db) {
                            ScopeClassification::InScope(ast) => parse_record(line, Some(&ast), &[]),
                            ScopeClassification::OutOfScope(violations) => {
                                parse_record(line, None, &violations)
                            }
                        }
                    }
                })
            });
            let mut all_ok = true;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for (ok, record) in results {
                all_ok &= ok;
                writeln!(out, "{record}").map_err(|e| e.to_string())?;
            }
            Ok(all_ok)
        }
        Command::Pipeline {
            input,
            out_dir,
            apply_spell,
        } => {
            let stopwords = config.load_stopwords()?;
            let pipeline_config = PipelineConfig {
                seed: config.seed,
                vocab_cutoff: config.cutoff,
                spell_mode: if apply_spell {
                    SpellMode::Apply
                } else {
                    SpellMode::SuggestOnly
                },
                out_dir,
            };
            let outputs = pipeline::run_pipeline(&input, &db, &stopwords, &pipeline_config)
                .map_err(|e| e.to_string())?;
            eprintln!(
                "pipeline: {} pairs in, {} kept, {} filtered",
                outputs.report.pairs_total,
                outputs.report.pairs_kept,
                outputs.report.pairs_filtered
            );
            for path in [
                &outputs.kept_path,
                &outputs.filtered_path,
                &outputs.stats_path,
                &outputs.split_path,
                &outputs.spell_report_path,
                &outputs.vocab_path,
            ] {
                eprintln!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Tokenize {
            granularity,
            side,
            file,
        } => {
            let lines = read_lines(file.as_deref())?;
            let granularity = match granularity {
                CliGranularity::Token => Granularity::Token,
                CliGranularity::Char => Granularity::Char,
                CliGranularity::Subtoken => Granularity::Subtoken,
            };
            let results = in_pool(config.workers, || {
                map_ordered(&lines, |line| match side {
                    CliSide::Nl => {
                        let seq = subtok::encode(line, granularity, PairSide::NaturalLanguage, None);
                        (
                            true,
                            serde_json::json!({"input": line, "items": seq.items}).to_string(),
                        )
                    }
                    CliSide::Cmd => {
                        let (ast, violations) = parse_permissive(line, &db);
                        match ast {
                            Some(ast) if violations.is_empty() || config.permissive => {
                                let seq =
                                    subtok::encode(line, granularity, PairSide::Command, Some(&ast));
                                (
                                    true,
                                    serde_json::json!({"input": line, "items": seq.items})
                                        .to_string(),
                                )
                            }
                            _ => (
                                false,
                                serde_json::json!({
                                    "input": line,
                                    "error": "out of scope",
                                    "violations": violations,
                                })
                                .to_string(),
                            ),
                        }
                    }
                })
            });
            let mut all_ok = true;
            for (ok, record) in results {
                all_ok &= ok;
                println!("{record}");
            }
            Ok(all_ok)
        }
        Command::Template { file } => {
            let lines = read_lines(file.as_deref())?;
            let results = in_pool(config.workers, || {
                map_ordered(&lines, |line| {
                    let (ast, violations) = parse_permissive(line, &db);
                    match ast {
                        Some(ast) if violations.is_empty() || config.permissive => {
                            let tpl = template::extract_template(&ast, &db);
                            (true, format!("{line}\t{}", tpl.templatized))
                        }
                        _ => (false, format!("{line}\t<out of scope>")),
                    }
                })
            });
            let mut all_ok = true;
            for (ok, record) in results {
                all_ok &= ok;
                println!("{record}");
            }
            Ok(all_ok)
        }
        Command::Stats {
            input,
            split,
            output,
        } => {
            let stopwords = config.load_stopwords()?;
            let raw = pipeline::read_corpus(&input).map_err(|e| e.to_string())?;
            let pairs: Vec<_> = in_pool(config.workers, || {
                map_ordered(&raw, |r| pipeline::filter_pair(r, &db, &stopwords))
            });
            let assignment = match split {
                Some(path) => Some(read_split(&path)?),
                None => None,
            };
            let report = pipeline::compute_stats(&pairs, assignment.as_ref(), &db);
            let json = report.to_json();
            match output {
                Some(path) => std::fs::write(path, json).map_err(|e| e.to_string())?,
                None => println!("{json}"),
            }
            eprintln!(
                "stats: {} pairs, {} utilities, {} flags",
                report.pairs_kept, report.cmd.unique_utilities, report.cmd.unique_flags
            );
            Ok(true)
        }
        Command::Eval {
            system,
            test_set,
            output,
        } => {
            let report =
                metrics::evaluate(&system, &test_set, &config.k, &db).map_err(|e| e.to_string())?;
            eprint!("{}", report.to_table());
            let json = report.to_json();
            match output {
                Some(path) => std::fs::write(path, json).map_err(|e| e.to_string())?,
                None => println!("{json}"),
            }
            Ok(true)
        }
    }
}

fn parse_record(
    line: &str,
    ast: Option<&bashkit_core::CommandAst>,
    violations: &[bashkit_core::ScopeViolation],
) -> (bool, String) {
    match ast {
        Some(ast) => (
            violations.is_empty(),
            serde_json::json!({
                "input": line,
                "status": if violations.is_empty() { "in_scope" } else { "out_of_scope" },
                "ast": ast,
                "violations": violations,
            })
            .to_string(),
        ),
        None => (
            false,
            serde_json::json!({
                "input": line,
                "status": "out_of_scope",
                "violations": violations,
            })
            .to_string(),
        ),
    }
}

fn read_lines(file: Option<&Path>) -> Result<Vec<String>, String> {
    let text = match file {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?,
        None => {
            let mut buf = String::new();
            for line in std::io::stdin().lock().lines() {
                buf.push_str(&line.map_err(|e| e.to_string())?);
                buf.push('\n');
            }
            buf
        }
    };
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(String::from)
        .collect())
}

fn read_split(path: &Path) -> Result<bashkit_core::pipeline::SplitAssignment, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    bashkit_core::pipeline::SplitAssignment::from_tsv(&text).map_err(|e| e.to_string())
}

/// Run a closure inside a rayon pool of the requested size.
fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

/// Parallel map that preserves input order.
fn map_ordered<I: Sync, O: Send>(items: &[I], f: impl Fn(&I) -> O + Sync + Send) -> Vec<O> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}
