//! End-to-end corpus construction: filtering, cleaning, clustering,
//! splitting and statistics.
//!
//! Filtering applies the four rules in order: non-grammatical commands,
//! out-of-scope syntax, script-only utilities, nested interpreters.
//! Splitting clusters pairs by normalized NL description, assigns whole
//! clusters to train/dev/test at 10:1:1 with a seeded PRNG, then absorbs
//! any cluster that shares a command with another split into the train
//! set until no leakage remains; both split invariants (no shared
//! normalized key, no shared cleaned command) hold exhaustively.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::{CommandAst, ScopeViolation, ViolationKind};
use crate::error::{Error, Result};
use crate::nl::{self, NlSentence, Stopwords};
use crate::parser;
use crate::specdb::SpecDb;
use crate::template;

/// One corpus record as read from the input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPair {
    pub id: String,
    pub nl: String,
    pub cmd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    NonGrammatical,
    OutOfScope,
    ScriptOnlyUtility,
    NestedInterpreter,
}

impl fmt::Display for FilterReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FilterReason::NonGrammatical => "non_grammatical",
            FilterReason::OutOfScope => "out_of_scope",
            FilterReason::ScriptOnlyUtility => "script_only_utility",
            FilterReason::NestedInterpreter => "nested_interpreter",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairStatus {
    Kept,
    Filtered { reason: FilterReason, detail: String },
}

/// A fully processed corpus record.
#[derive(Debug, Clone)]
pub struct NlCmdPair {
    pub id: String,
    pub nl: NlSentence,
    pub cmd_raw: String,
    pub cmd_clean: String,
    pub ast: Option<CommandAst>,
    pub status: PairStatus,
    pub source_url: Option<String>,
}

impl NlCmdPair {
    pub fn kept(&self) -> bool {
        self.status == PairStatus::Kept
    }
}

/// Clean, parse and classify one record against the filtering rules.
pub fn filter_pair(raw: &RawPair, db: &SpecDb, stopwords: &Stopwords) -> NlCmdPair {
    let cmd_clean = parser::clean_command(&raw.cmd);
    let nl = NlSentence::new(&raw.nl, stopwords);
    let (ast, status) = match parser::parse_command(&cmd_clean, db) {
        Ok(ast) => (Some(ast), PairStatus::Kept),
        Err(violations) => {
            let (reason, detail) = classify_filter_reason(&violations);
            (None, PairStatus::Filtered { reason, detail })
        }
    };
    NlCmdPair {
        id: raw.id.clone(),
        nl,
        cmd_raw: raw.cmd.clone(),
        cmd_clean,
        ast,
        status,
        source_url: raw.source_url.clone(),
    }
}

/// Map violations onto the four filtering rules, in rule order.
fn classify_filter_reason(violations: &[ScopeViolation]) -> (FilterReason, String) {
    let detail = violations
        .iter()
        .map(|v| format!("{}: {}", v.kind.tag(), v.detail))
        .collect::<Vec<_>>()
        .join("; ");
    let script_only = |v: &ScopeViolation| {
        v.kind == ViolationKind::CompoundStatement
            && v.detail.contains("multi-statement shell scripts")
    };
    if violations
        .iter()
        .any(|v| matches!(v.kind, ViolationKind::UnknownUtility | ViolationKind::SyntaxError))
    {
        return (FilterReason::NonGrammatical, detail);
    }
    if violations.iter().any(|v| {
        matches!(
            v.kind,
            ViolationKind::IoRedirection | ViolationKind::VariableAssignment
        ) || (v.kind == ViolationKind::CompoundStatement && !script_only(v))
    }) {
        return (FilterReason::OutOfScope, detail);
    }
    if violations.iter().any(script_only) {
        return (FilterReason::ScriptOnlyUtility, detail);
    }
    (FilterReason::NestedInterpreter, detail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct SplitAssignment {
    assignment: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn get(&self, id: &str) -> Option<Split> {
        self.assignment.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Split)> {
        self.assignment.iter().map(|(id, s)| (id.as_str(), *s))
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignment.values().filter(|&&s| s == split).count()
    }

    pub fn to_tsv(&self, order: &[&str]) -> String {
        let mut out = String::new();
        for id in order {
            if let Some(split) = self.get(id) {
                out.push_str(id);
                out.push('\t');
                out.push_str(&split.to_string());
                out.push('\n');
            }
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<SplitAssignment> {
        let mut assignment = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::CorpusFormat {
                path: "<split>".into(),
                line: lineno + 1,
                msg: format!("expected 'id<TAB>train|dev|test', got {line:?}"),
            };
            let (id, split) = line.split_once('\t').ok_or_else(bad)?;
            let split = match split.trim() {
                "train" => Split::Train,
                "dev" => Split::Dev,
                "test" => Split::Test,
                _ => return Err(bad()),
            };
            assignment.insert(id.to_string(), split);
        }
        Ok(SplitAssignment { assignment })
    }
}

/// Cluster kept pairs by normalized NL key and split clusters 10:1:1.
///
/// After the random assignment, any dev/test cluster sharing a cleaned
/// command with the train set moves whole into train, iterated to a fixed
/// point; a test cluster sharing a command with dev moves to train the
/// same way. Needs at least 12 clusters.
pub fn split_corpus(pairs: &[&NlCmdPair], seed: u64) -> Result<SplitAssignment> {
    // cluster ids and command sets, keyed by normalized NL
    let mut clusters: BTreeMap<&str, (Vec<&str>, BTreeSet<&str>)> = BTreeMap::new();
    for pair in pairs {
        debug_assert!(pair.kept());
        let entry = clusters
            .entry(pair.nl.normalized_key.as_str())
            .or_default();
        entry.0.push(pair.id.as_str());
        entry.1.insert(pair.cmd_clean.as_str());
    }
    let n = clusters.len();
    if n < 12 {
        return Err(Error::TooFewClusters { clusters: n });
    }

    let mut keys: Vec<&str> = clusters.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    keys.shuffle(&mut rng);

    let share = n / 12;
    let mut split_of: BTreeMap<&str, Split> = BTreeMap::new();
    for (i, key) in keys.iter().enumerate() {
        let split = if i < share {
            Split::Dev
        } else if i < 2 * share {
            Split::Test
        } else {
            Split::Train
        };
        split_of.insert(key, split);
    }

    // absorb leaking clusters into train until stable
    loop {
        let mut train_cmds: BTreeSet<&str> = BTreeSet::new();
        let mut dev_cmds: BTreeSet<&str> = BTreeSet::new();
        for (key, (_, cmds)) in &clusters {
            match split_of[key] {
                Split::Train => train_cmds.extend(cmds.iter().copied()),
                Split::Dev => dev_cmds.extend(cmds.iter().copied()),
                Split::Test => {}
            }
        }
        let mut moved = false;
        for (key, (_, cmds)) in &clusters {
            let split = split_of[key];
            let leaks = match split {
                Split::Train => false,
                Split::Dev => cmds.iter().any(|c| train_cmds.contains(c)),
                Split::Test => cmds
                    .iter()
                    .any(|c| train_cmds.contains(c) || dev_cmds.contains(c)),
            };
            if leaks {
                split_of.insert(key, Split::Train);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }

    let mut assignment = BTreeMap::new();
    for (key, (ids, _)) in &clusters {
        let split = split_of[key];
        for id in ids {
            assignment.insert(id.to_string(), split);
        }
    }
    Ok(SplitAssignment { assignment })
}

fn median(sorted: &[usize]) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

fn mean(values: &[usize]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<usize>() as f64 / values.len() as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistStat {
    pub avg: f64,
    pub median: f64,
    pub max: usize,
}

fn dist(mut values: Vec<usize>) -> DistStat {
    values.sort_unstable();
    DistStat {
        avg: mean(&values),
        median: median(&values),
        max: values.last().copied().unwrap_or(0),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NlStats {
    pub unique_sentences: usize,
    pub unique_sentences_normalized: usize,
    pub unique_words: usize,
    pub words_per_sentence: DistStat,
    pub sentences_per_word: DistStat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmdStats {
    pub unique_commands: usize,
    pub unique_templates: usize,
    pub unique_tokens: usize,
    pub tokens_per_command: DistStat,
    pub commands_per_token: DistStat,
    pub unique_utilities: usize,
    pub unique_flags: usize,
    pub unique_reserved_tokens: usize,
    pub reserved_tokens: Vec<String>,
    pub commands_per_utility: DistStat,
    pub commands_per_flag: DistStat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingStats {
    pub commands_per_nl: DistStat,
    pub nls_per_command: DistStat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlagCoverage {
    pub utility: String,
    pub corpus_frequency: usize,
    /// Flag spellings in the database (short and long count separately).
    pub flags_in_db: usize,
    pub flags_in_corpus: usize,
    pub flags_in_train: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitStats {
    pub train_pairs: usize,
    pub dev_pairs: usize,
    pub test_pairs: usize,
    pub train_unique_nls: usize,
    pub dev_unique_nls: usize,
    pub test_unique_nls: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub pairs_total: usize,
    pub pairs_kept: usize,
    pub pairs_filtered: usize,
    pub filter_reasons: BTreeMap<String, usize>,
    pub nl: NlStats,
    pub cmd: CmdStats,
    pub mapping: MappingStats,
    pub utility_frequencies: Vec<(String, usize)>,
    pub flag_coverage: Vec<FlagCoverage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitStats>,
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

/// Corpus statistics over processed pairs (kept pairs feed the NL/command
/// tables; filtered pairs only contribute to the reason counts).
pub fn compute_stats(
    pairs: &[NlCmdPair],
    assignment: Option<&SplitAssignment>,
    db: &SpecDb,
) -> StatsReport {
    let kept: Vec<&NlCmdPair> = pairs.iter().filter(|p| p.kept()).collect();

    let mut filter_reasons: BTreeMap<String, usize> = BTreeMap::new();
    for p in pairs {
        if let PairStatus::Filtered { reason, .. } = &p.status {
            *filter_reasons.entry(reason.to_string()).or_insert(0) += 1;
        }
    }

    // ---- natural language side
    let mut sentence_tokens: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut normalized_keys: BTreeSet<&str> = BTreeSet::new();
    for p in &kept {
        normalized_keys.insert(&p.nl.normalized_key);
        sentence_tokens.entry(p.nl.raw.as_str()).or_insert_with(|| {
            p.nl.tokens
                .iter()
                .map(|t| {
                    if nl::is_constant_token(t) {
                        t.clone()
                    } else {
                        t.to_lowercase()
                    }
                })
                .collect()
        });
    }
    let mut word_sentences: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (sent, tokens) in &sentence_tokens {
        for tok in tokens {
            word_sentences.entry(tok).or_default().insert(sent);
        }
    }
    let nl_stats = NlStats {
        unique_sentences: sentence_tokens.len(),
        unique_sentences_normalized: normalized_keys.len(),
        unique_words: word_sentences.len(),
        words_per_sentence: dist(sentence_tokens.values().map(Vec::len).collect()),
        sentences_per_word: dist(word_sentences.values().map(BTreeSet::len).collect()),
    };

    // ---- command side (over unique cleaned commands)
    let mut command_ast: BTreeMap<&str, &CommandAst> = BTreeMap::new();
    for p in &kept {
        if let Some(ast) = &p.ast {
            command_ast.entry(p.cmd_clean.as_str()).or_insert(ast);
        }
    }
    let mut templates: BTreeSet<String> = BTreeSet::new();
    let mut token_commands: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    let mut utility_commands: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    let mut flag_commands: BTreeMap<(String, String), BTreeSet<&str>> = BTreeMap::new();
    let mut reserved: BTreeSet<String> = BTreeSet::new();
    let mut tokens_per_command = Vec::new();
    let mut utility_flag_corpus: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut utility_flag_train: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();

    for (cmd, ast) in &command_ast {
        templates.insert(template::extract_template(ast, db).templatized);
        let stream = ast.token_stream();
        tokens_per_command.push(stream.len());
        for tok in &stream {
            token_commands.entry(tok.clone()).or_default().insert(cmd);
            if crate::ast::RESERVED_TOKENS.contains(&tok.as_str()) {
                reserved.insert(tok.clone());
            }
        }
        for u in ast.utilities() {
            utility_commands
                .entry(u.name.clone())
                .or_default()
                .insert(cmd);
            for b in u.flag_bindings() {
                if b.known {
                    flag_commands
                        .entry((u.name.clone(), b.flag.clone()))
                        .or_default()
                        .insert(cmd);
                }
            }
        }
    }

    // per-pair flag usage for coverage (train restriction needs pair ids)
    for p in &kept {
        let Some(ast) = &p.ast else { continue };
        let in_train = assignment
            .and_then(|a| a.get(&p.id))
            .map(|s| s == Split::Train)
            .unwrap_or(false);
        for u in ast.utilities() {
            let corpus_entry = utility_flag_corpus.entry(u.name.as_str()).or_default();
            for b in u.flag_bindings() {
                if b.known {
                    corpus_entry.insert(b.flag.clone());
                }
            }
            if in_train {
                let train_entry = utility_flag_train.entry(u.name.as_str()).or_default();
                for b in u.flag_bindings() {
                    if b.known {
                        train_entry.insert(b.flag.clone());
                    }
                }
            }
        }
    }

    let cmd_stats = CmdStats {
        unique_commands: command_ast.len(),
        unique_templates: templates.len(),
        unique_tokens: token_commands.len(),
        tokens_per_command: dist(tokens_per_command),
        commands_per_token: dist(token_commands.values().map(BTreeSet::len).collect()),
        unique_utilities: utility_commands.len(),
        unique_flags: flag_commands.len(),
        unique_reserved_tokens: reserved.len(),
        reserved_tokens: reserved.iter().cloned().collect(),
        commands_per_utility: dist(utility_commands.values().map(BTreeSet::len).collect()),
        commands_per_flag: dist(flag_commands.values().map(BTreeSet::len).collect()),
    };

    // ---- NL <-> command mapping
    let mut nl_cmds: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut cmd_nls: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for p in &kept {
        nl_cmds
            .entry(p.nl.raw.as_str())
            .or_default()
            .insert(p.cmd_clean.as_str());
        cmd_nls
            .entry(p.cmd_clean.as_str())
            .or_default()
            .insert(p.nl.raw.as_str());
    }
    let mapping = MappingStats {
        commands_per_nl: dist(nl_cmds.values().map(BTreeSet::len).collect()),
        nls_per_command: dist(cmd_nls.values().map(BTreeSet::len).collect()),
    };

    // ---- utility frequency table (number of pairs whose command uses it)
    let mut utility_pairs: BTreeMap<String, usize> = BTreeMap::new();
    for p in &kept {
        if let Some(ast) = &p.ast {
            let names: BTreeSet<String> =
                ast.utilities().iter().map(|u| u.name.clone()).collect();
            for name in names {
                *utility_pairs.entry(name).or_insert(0) += 1;
            }
        }
    }
    let mut utility_frequencies: Vec<(String, usize)> = utility_pairs.into_iter().collect();
    utility_frequencies.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    // ---- flag coverage against the database
    let mut flag_coverage = Vec::new();
    for (name, freq) in &utility_frequencies {
        let Some(spec) = db.lookup_utility(name) else {
            continue;
        };
        let spellings = spec
            .flags
            .iter()
            .map(|f| 1 + usize::from(f.long_form.is_some()))
            .sum();
        flag_coverage.push(FlagCoverage {
            utility: name.clone(),
            corpus_frequency: *freq,
            flags_in_db: spellings,
            flags_in_corpus: utility_flag_corpus.get(name.as_str()).map_or(0, BTreeSet::len),
            flags_in_train: assignment
                .map(|_| utility_flag_train.get(name.as_str()).map_or(0, BTreeSet::len)),
        });
    }

    let split = assignment.map(|a| {
        let mut keys: BTreeMap<Split, BTreeSet<&str>> = BTreeMap::new();
        let mut counts: BTreeMap<Split, usize> = BTreeMap::new();
        for p in &kept {
            if let Some(s) = a.get(&p.id) {
                *counts.entry(s).or_insert(0) += 1;
                keys.entry(s).or_default().insert(&p.nl.normalized_key);
            }
        }
        SplitStats {
            train_pairs: counts.get(&Split::Train).copied().unwrap_or(0),
            dev_pairs: counts.get(&Split::Dev).copied().unwrap_or(0),
            test_pairs: counts.get(&Split::Test).copied().unwrap_or(0),
            train_unique_nls: keys.get(&Split::Train).map_or(0, BTreeSet::len),
            dev_unique_nls: keys.get(&Split::Dev).map_or(0, BTreeSet::len),
            test_unique_nls: keys.get(&Split::Test).map_or(0, BTreeSet::len),
        }
    });

    StatsReport {
        pairs_total: pairs.len(),
        pairs_kept: kept.len(),
        pairs_filtered: pairs.len() - kept.len(),
        filter_reasons,
        nl: nl_stats,
        cmd: cmd_stats,
        mapping,
        utility_frequencies,
        flag_coverage,
        split,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpellMode {
    SuggestOnly,
    Apply,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub vocab_cutoff: u64,
    pub spell_mode: SpellMode,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            vocab_cutoff: nl::DEFAULT_CUTOFF,
            spell_mode: SpellMode::SuggestOnly,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutputs {
    pub kept_path: PathBuf,
    pub filtered_path: PathBuf,
    pub stats_path: PathBuf,
    pub split_path: PathBuf,
    pub spell_report_path: PathBuf,
    pub vocab_path: PathBuf,
    pub report: StatsReport,
}

/// Read a JSONL corpus file with record-level diagnostics.
pub fn read_corpus(path: &Path) -> Result<Vec<RawPair>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair: RawPair = serde_json::from_str(line).map_err(|e| Error::CorpusFormat {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        if !seen.insert(pair.id.clone()) {
            return Err(Error::CorpusFormat {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("duplicate id '{}'", pair.id),
            });
        }
        out.push(pair);
    }
    Ok(out)
}

/// Run the full pipeline on an input corpus file. Outputs are
/// deterministic for a fixed (input, config) and every input record lands
/// in exactly one of kept/filtered.
pub fn run_pipeline(
    input: &Path,
    db: &SpecDb,
    stopwords: &Stopwords,
    config: &PipelineConfig,
) -> Result<PipelineOutputs> {
    let raw_pairs = read_corpus(input)?;
    let mut pairs: Vec<NlCmdPair> = raw_pairs
        .iter()
        .map(|r| filter_pair(r, db, stopwords))
        .collect();

    // vocabulary over the kept pairs' NL tokens
    let token_lists: Vec<&[String]> = pairs
        .iter()
        .filter(|p| p.kept())
        .map(|p| p.nl.tokens.as_slice())
        .collect();
    let vocab = nl::build_vocab(token_lists, config.vocab_cutoff);

    // spell pass: suggestions for tokens outside the vocabulary
    let mut spell_report = String::new();
    let mut suggestions: Vec<(String, String, String)> = Vec::new();
    for p in &pairs {
        if !p.kept() {
            continue;
        }
        for tok in &p.nl.tokens {
            if vocab.count(tok) > 0 || nl::is_constant_token(tok) {
                continue;
            }
            let suggestion = nl::spell_correct(tok, &vocab);
            if suggestion != *tok {
                suggestions.push((p.id.clone(), tok.clone(), suggestion));
            }
        }
    }
    suggestions.sort();
    suggestions.dedup();
    for (id, tok, sug) in &suggestions {
        spell_report.push_str(&format!("{id}\t{tok}\t{sug}\n"));
    }
    if config.spell_mode == SpellMode::Apply && !suggestions.is_empty() {
        let by_pair: BTreeMap<&str, Vec<(&str, &str)>> =
            suggestions.iter().fold(BTreeMap::new(), |mut m, (id, t, s)| {
                m.entry(id.as_str()).or_default().push((t.as_str(), s.as_str()));
                m
            });
        for p in &mut pairs {
            if let Some(subs) = by_pair.get(p.id.as_str()) {
                let mut raw = p.nl.raw.clone();
                for (from, to) in subs {
                    raw = replace_word(&raw, from, to);
                }
                p.nl = NlSentence::new(&raw, stopwords);
            }
        }
    }

    let kept_refs: Vec<&NlCmdPair> = pairs.iter().filter(|p| p.kept()).collect();
    let assignment = if kept_refs.is_empty() {
        SplitAssignment::default()
    } else {
        split_corpus(&kept_refs, config.seed)?
    };
    let report = compute_stats(&pairs, Some(&assignment), db);

    std::fs::create_dir_all(&config.out_dir)?;
    let kept_path = config.out_dir.join("kept.jsonl");
    let filtered_path = config.out_dir.join("filtered_out.jsonl");
    let stats_path = config.out_dir.join("stats.json");
    let split_path = config.out_dir.join("split.tsv");
    let spell_report_path = config.out_dir.join("spell_report.tsv");
    let vocab_path = config.out_dir.join("vocab.tsv");

    let mut kept_file = String::new();
    let mut filtered_file = String::new();
    for p in &pairs {
        match &p.status {
            PairStatus::Kept => {
                let rec = serde_json::json!({
                    "id": p.id,
                    "nl": p.nl.raw,
                    "cmd": p.cmd_clean,
                    "cmd_raw": p.cmd_raw,
                    "source_url": p.source_url,
                });
                kept_file.push_str(&serde_json::to_string(&rec)?);
                kept_file.push('\n');
            }
            PairStatus::Filtered { reason, detail } => {
                let rec = serde_json::json!({
                    "id": p.id,
                    "nl": p.nl.raw,
                    "cmd_raw": p.cmd_raw,
                    "reason": reason.to_string(),
                    "detail": detail,
                });
                filtered_file.push_str(&serde_json::to_string(&rec)?);
                filtered_file.push('\n');
            }
        }
    }
    let order: Vec<&str> = pairs.iter().map(|p| p.id.as_str()).collect();

    std::fs::write(&kept_path, kept_file)?;
    std::fs::write(&filtered_path, filtered_file)?;
    std::fs::write(&stats_path, report.to_json())?;
    std::fs::write(&split_path, assignment.to_tsv(&order))?;
    std::fs::write(&spell_report_path, spell_report)?;
    std::fs::write(&vocab_path, vocab.dump_tsv())?;

    Ok(PipelineOutputs {
        kept_path,
        filtered_path,
        stats_path,
        split_path,
        spell_report_path,
        vocab_path,
        report,
    })
}

/// Whole-word replacement used by the spell-apply mode.
fn replace_word(text: &str, from: &str, to: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(idx) = rest.find(from) {
        let before_ok = idx == 0
            || rest[..idx]
                .chars()
                .last()
                .is_none_or(|c| !c.is_alphanumeric());
        let after = &rest[idx + from.len()..];
        let after_ok = after.chars().next().is_none_or(|c| !c.is_alphanumeric());
        out.push_str(&rest[..idx]);
        if before_ok && after_ok {
            out.push_str(to);
        } else {
            out.push_str(from);
        }
        rest = after;
    }
    out.push_str(rest);
    out
}

/// Group kept test pairs into evaluation instances by normalized key.
pub fn build_test_instances(
    pairs: &[&NlCmdPair],
    assignment: &SplitAssignment,
    split: Split,
) -> Vec<crate::metrics::TestInstance> {
    let mut groups: BTreeMap<&str, Vec<&NlCmdPair>> = BTreeMap::new();
    for p in pairs {
        if assignment.get(&p.id) == Some(split) {
            groups.entry(&p.nl.normalized_key).or_default().push(p);
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, (key, members))| {
            let mut seen = BTreeSet::new();
            let references = members
                .iter()
                .filter(|p| seen.insert(p.cmd_clean.as_str()))
                .map(|p| crate::metrics::Reference {
                    raw: p.cmd_clean.clone(),
                    ast: p.ast.clone(),
                })
                .collect();
            crate::metrics::TestInstance {
                instance_id: format!("inst-{i:05}"),
                normalized_nl_key: key.to_string(),
                references,
                candidates: Vec::new(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mk_raw(id: &str, nl: &str, cmd: &str) -> RawPair {
        RawPair {
            id: id.into(),
            nl: nl.into(),
            cmd: cmd.into(),
            source_url: None,
        }
    }

    #[test]
    fn filter_reasons_follow_rules() {
        let db = SpecDb::bundled();
        let sw = Stopwords::bundled();
        let cases = [
            (r#"python -c "print(1)""#, FilterReason::NestedInterpreter),
            ("ls > f", FilterReason::OutOfScope),
            ("alias ll='ls -l'", FilterReason::ScriptOnlyUtility),
            ("frobnicate -x", FilterReason::NonGrammatical),
            ("x=5", FilterReason::OutOfScope),
        ];
        for (cmd, want) in cases {
            let p = filter_pair(&mk_raw("1", "desc", cmd), &db, &sw);
            match &p.status {
                PairStatus::Filtered { reason, .. } => assert_eq!(*reason, want, "{cmd}"),
                PairStatus::Kept => panic!("{cmd} unexpectedly kept"),
            }
        }
        let kept = filter_pair(
            &mk_raw("2", "show disk usage", "du -a . | sort -rh | head -n5"),
            &db,
            &sw,
        );
        assert!(kept.kept());
        assert!(kept.ast.is_some());
    }

    #[test]
    fn split_requires_enough_clusters() {
        let db = SpecDb::bundled();
        let sw = Stopwords::bundled();
        let pairs: Vec<NlCmdPair> = (0..5)
            .map(|i| filter_pair(&mk_raw(&format!("p{i}"), &format!("list files {i}"), "ls"), &db, &sw))
            .collect();
        let refs: Vec<&NlCmdPair> = pairs.iter().collect();
        assert!(matches!(
            split_corpus(&refs, 1),
            Err(Error::TooFewClusters { clusters: 5 })
        ));
    }

    #[test]
    fn identical_normalized_nl_lands_in_one_split() {
        let db = SpecDb::bundled();
        let sw = Stopwords::bundled();
        let mut pairs = Vec::new();
        for i in 0..30 {
            pairs.push(filter_pair(
                &mk_raw(&format!("u{i}"), &format!("unique task number{i}"), &format!("ls /dir{i}")),
                &db,
                &sw,
            ));
        }
        // two spellings of one description
        pairs.push(filter_pair(&mk_raw("a", "Find all .java files", "find . -name '*.java'"), &db, &sw));
        pairs.push(filter_pair(&mk_raw("b", "find all .java file", "locate '*.java'"), &db, &sw));
        let refs: Vec<&NlCmdPair> = pairs.iter().collect();
        let split = split_corpus(&refs, 7).unwrap();
        assert_eq!(split.get("a"), split.get("b"));
    }

    #[test]
    fn split_has_no_leakage() {
        let db = SpecDb::bundled();
        let sw = Stopwords::bundled();
        let mut pairs = Vec::new();
        // same command under many different descriptions forces absorption
        for i in 0..40 {
            let cmd = if i % 3 == 0 { "ls -l".to_string() } else { format!("du -s /d{i}") };
            pairs.push(filter_pair(
                &mk_raw(&format!("p{i}"), &format!("task wording {i}"), &cmd),
                &db,
                &sw,
            ));
        }
        let refs: Vec<&NlCmdPair> = pairs.iter().collect();
        let assignment = split_corpus(&refs, 3).unwrap();
        let mut cmd_splits: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
        let mut key_splits: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
        for p in &pairs {
            let s = assignment.get(&p.id).unwrap();
            cmd_splits.entry(&p.cmd_clean).or_default().insert(s);
            key_splits.entry(&p.nl.normalized_key).or_default().insert(s);
        }
        for (cmd, splits) in cmd_splits {
            assert_eq!(splits.len(), 1, "command {cmd} leaks across splits");
        }
        for (key, splits) in key_splits {
            assert_eq!(splits.len(), 1, "nl key {key} leaks across splits");
        }
    }

    #[test]
    fn split_is_deterministic() {
        let db = SpecDb::bundled();
        let sw = Stopwords::bundled();
        let pairs: Vec<NlCmdPair> = (0..24)
            .map(|i| {
                filter_pair(
                    &mk_raw(&format!("p{i}"), &format!("wording variant {i}"), &format!("ls /x{i}")),
                    &db,
                    &sw,
                )
            })
            .collect();
        let refs: Vec<&NlCmdPair> = pairs.iter().collect();
        let a = split_corpus(&refs, 99).unwrap();
        let b = split_corpus(&refs, 99).unwrap();
        assert_eq!(a.to_tsv(&refs.iter().map(|p| p.id.as_str()).collect::<Vec<_>>()),
                   b.to_tsv(&refs.iter().map(|p| p.id.as_str()).collect::<Vec<_>>()));
        let c = split_corpus(&refs, 100).unwrap();
        let same = refs.iter().all(|p| a.get(&p.id) == c.get(&p.id));
        assert!(!same, "different seeds should move at least one cluster");
    }

    #[test]
    fn single_pair_stats() {
        let db = SpecDb::bundled();
        let sw = Stopwords::bundled();
        let pairs = vec![filter_pair(
            &mk_raw("1", "count lines in a file", "wc -l data.txt"),
            &db,
            &sw,
        )];
        let stats = compute_stats(&pairs, None, &db);
        assert_eq!(stats.pairs_kept, 1);
        assert_eq!(stats.nl.unique_sentences, 1);
        assert_eq!(stats.cmd.unique_commands, 1);
        assert_eq!(stats.mapping.commands_per_nl.avg, 1.0);
        assert_eq!(stats.mapping.commands_per_nl.median, 1.0);
        assert_eq!(stats.cmd.unique_utilities, 1);
        assert_eq!(stats.cmd.unique_flags, 1);
    }

    #[test]
    fn empty_corpus_stats() {
        let db = SpecDb::bundled();
        let stats = compute_stats(&[], None, &db);
        assert_eq!(stats.pairs_total, 0);
        assert_eq!(stats.nl.unique_words, 0);
        assert_eq!(stats.cmd.unique_commands, 0);
    }
}
