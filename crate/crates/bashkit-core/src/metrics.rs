//! Automatic translation metrics: TM, BLEU, and exact full-command /
//! template accuracy at top-k, with multi-reference test instances.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ast::CommandAst;
use crate::error::{Error, Result};
use crate::parser;
use crate::specdb::SpecDb;
use crate::template;

/// One grouped test instance: every reference translation of one
/// normalized NL description plus a system's ranked candidates.
#[derive(Debug, Clone)]
pub struct TestInstance {
    pub instance_id: String,
    pub normalized_nl_key: String,
    pub references: Vec<Reference>,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub raw: String,
    pub ast: Option<CommandAst>,
}

impl Reference {
    pub fn new(raw: &str, db: &SpecDb) -> Reference {
        let cleaned = parser::clean_command(raw);
        let (ast, _) = parser::parse_permissive(&cleaned, db);
        Reference { raw: cleaned, ast }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    FullAcc,
    TemplateAcc,
    Tm,
    Bleu,
}

impl Metric {
    fn label(&self) -> &'static str {
        match self {
            Metric::FullAcc => "facc",
            Metric::TemplateAcc => "tacc",
            Metric::Tm => "tm",
            Metric::Bleu => "bleu",
        }
    }
}

/// Maximum close-vocabulary token overlap between a candidate and any
/// reference: `|multiset intersection| / max(|candidate|, |reference|)`
/// over utilities, flags and reserved tokens; arguments are ignored.
pub fn tm_score(candidate: &CommandAst, references: &[&CommandAst]) -> f64 {
    let cand = candidate.close_vocab_tokens();
    references
        .iter()
        .map(|r| multiset_overlap(&cand, &r.close_vocab_tokens()))
        .fold(0.0, f64::max)
}

fn multiset_overlap(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in a {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut shared = 0i64;
    for t in b {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    shared as f64 / a.len().max(b.len()) as f64
}

/// Close-vocabulary approximation for candidates that do not parse even
/// permissively: whitespace tokens that match known utilities, flag
/// spellings, or reserved tokens.
pub fn close_vocab_fallback(raw: &str, db: &SpecDb) -> Vec<String> {
    raw.split_whitespace()
        .filter(|tok| {
            crate::ast::RESERVED_TOKENS.contains(tok)
                || tok.starts_with('-')
                || db.lookup_utility(tok).is_some()
        })
        .map(String::from)
        .collect()
}

/// Sentence BLEU with n-grams up to 4, brevity penalty against the
/// closest reference length, per-n-gram clipping by the maximum reference
/// count, and add-one smoothing on orders two and above. Scores in [0,1].
pub fn bleu_score(candidate: &[String], references: &[Vec<String>]) -> f64 {
    if candidate.is_empty() || references.is_empty() {
        return 0.0;
    }
    let max_n = candidate.len().min(4);

    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand_counts = ngram_counts(candidate, n);
        let mut clipped: HashMap<&[String], u64> = HashMap::new();
        for reference in references {
            for (gram, count) in ngram_counts(reference, n) {
                let entry = clipped.entry(gram).or_insert(0);
                *entry = (*entry).max(count);
            }
        }
        let total: u64 = cand_counts.values().sum();
        let matched: u64 = cand_counts
            .iter()
            .map(|(gram, &count)| count.min(clipped.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            if matched == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        log_sum += precision.ln();
    }
    let geo_mean = (log_sum / max_n as f64).exp();

    let c = candidate.len() as f64;
    let r = closest_ref_len(candidate.len(), references) as f64;
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * geo_mean
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

fn closest_ref_len(cand_len: usize, references: &[Vec<String>]) -> usize {
    let mut best = references[0].len();
    let mut best_diff = best.abs_diff(cand_len);
    for r in &references[1..] {
        let diff = r.len().abs_diff(cand_len);
        if diff < best_diff || (diff == best_diff && r.len() < best) {
            best = r.len();
            best_diff = diff;
        }
    }
    best
}

/// Top-k score of one instance under one metric: the best TM/BLEU among
/// the first `k` candidates, or 0/1 exact membership for FAcc/TAcc.
pub fn score_at_k(instance: &TestInstance, k: usize, metric: Metric, db: &SpecDb) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let top = &instance.candidates[..k.min(instance.candidates.len())];
    let ref_asts: Vec<&CommandAst> = instance
        .references
        .iter()
        .filter_map(|r| r.ast.as_ref())
        .collect();
    let mut best = 0.0f64;
    for cand in top {
        let score = match metric {
            Metric::FullAcc => {
                let cleaned = parser::clean_command(cand);
                if instance.references.iter().any(|r| r.raw == cleaned) {
                    1.0
                } else {
                    0.0
                }
            }
            Metric::TemplateAcc => {
                let cleaned = parser::clean_command(cand);
                match parser::parse_permissive(&cleaned, db).0 {
                    Some(ast) if ref_asts.iter().any(|r| template::template_equal(&ast, r, db)) => {
                        1.0
                    }
                    _ => 0.0,
                }
            }
            Metric::Tm => {
                let cleaned = parser::clean_command(cand);
                match parser::parse_permissive(&cleaned, db).0 {
                    Some(ast) => tm_score(&ast, &ref_asts),
                    None => {
                        let cand_tokens = close_vocab_fallback(&cleaned, db);
                        ref_asts
                            .iter()
                            .map(|r| multiset_overlap(&cand_tokens, &r.close_vocab_tokens()))
                            .fold(0.0, f64::max)
                    }
                }
            }
            Metric::Bleu => {
                let cleaned = parser::clean_command(cand);
                let cand_tokens = match parser::parse_permissive(&cleaned, db).0 {
                    Some(ast) => ast.token_stream(),
                    None => cleaned.split_whitespace().map(String::from).collect(),
                };
                let ref_tokens: Vec<Vec<String>> = instance
                    .references
                    .iter()
                    .map(|r| match &r.ast {
                        Some(ast) => ast.token_stream(),
                        None => r.raw.split_whitespace().map(String::from).collect(),
                    })
                    .collect();
                bleu_score(&cand_tokens, &ref_tokens)
            }
        };
        best = best.max(score);
        if best == 1.0 {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceScores {
    pub instance_id: String,
    /// True when some candidate failed even permissive parsing and a
    /// token-level approximation was scored instead.
    pub approximated: bool,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub k_values: Vec<usize>,
    pub instance_count: usize,
    pub aggregates: BTreeMap<String, f64>,
    pub instances: Vec<InstanceScores>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned-column summary, one row per system output.
    pub fn to_table(&self) -> String {
        let mut header = String::from("instances");
        let mut row = format!("{:>9}", self.instance_count);
        for metric in ["bleu", "tm", "facc", "tacc"] {
            for k in &self.k_values {
                let key = format!("{metric}@{k}");
                write!(header, " {:>8}", key).unwrap();
                let val = self.aggregates.get(&key).copied().unwrap_or(0.0);
                write!(row, " {:>8.4}", val).unwrap();
            }
        }
        format!("{header}\n{row}\n")
    }
}

#[derive(Debug, Deserialize)]
struct TestSetRecord {
    instance_id: String,
    #[serde(default)]
    nl: String,
    references: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct SystemRecord {
    instance_id: String,
    candidates: Vec<String>,
}

/// Score a system-output file against a test-set file.
///
/// Both files are JSONL; instance ids must correspond exactly. Aggregates
/// are unweighted means over instances, summed in instance-id order.
pub fn evaluate(
    system_output: &Path,
    test_set: &Path,
    k_values: &[usize],
    db: &SpecDb,
) -> Result<EvalReport> {
    let test_text = std::fs::read_to_string(test_set)?;
    let sys_text = std::fs::read_to_string(system_output)?;

    let mut instances: BTreeMap<String, TestInstance> = BTreeMap::new();
    for (lineno, line) in test_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TestSetRecord =
            serde_json::from_str(line).map_err(|e| Error::CorpusFormat {
                path: test_set.display().to_string(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        if rec.references.is_empty() {
            return Err(Error::CorpusFormat {
                path: test_set.display().to_string(),
                line: lineno + 1,
                msg: format!("instance {} has no references", rec.instance_id),
            });
        }
        // references dedupe on the cleaned command string
        let mut seen = BTreeSet::new();
        let mut references = Vec::new();
        for r in &rec.references {
            let reference = Reference::new(r, db);
            if seen.insert(reference.raw.clone()) {
                references.push(reference);
            }
        }
        instances.insert(
            rec.instance_id.clone(),
            TestInstance {
                instance_id: rec.instance_id,
                normalized_nl_key: rec.nl,
                references,
                candidates: Vec::new(),
            },
        );
    }

    let mut seen_sys = BTreeSet::new();
    for (lineno, line) in sys_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SystemRecord = serde_json::from_str(line).map_err(|e| Error::CorpusFormat {
            path: system_output.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        match instances.get_mut(&rec.instance_id) {
            Some(inst) => {
                inst.candidates = rec.candidates;
                seen_sys.insert(rec.instance_id);
            }
            None => {
                return Err(Error::InstanceMismatch(format!(
                    "system output has unknown instance '{}'",
                    rec.instance_id
                )))
            }
        }
    }
    let missing: Vec<&String> = instances
        .keys()
        .filter(|id| !seen_sys.contains(*id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::InstanceMismatch(format!(
            "system output missing instances: {}",
            missing
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }

    Ok(score_instances(instances.into_values().collect(), k_values, db))
}

/// Score pre-built instances (the file-free entry point).
pub fn score_instances(
    mut instances: Vec<TestInstance>,
    k_values: &[usize],
    db: &SpecDb,
) -> EvalReport {
    instances.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let mut per_instance = Vec::new();
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for inst in &instances {
        let mut scores = BTreeMap::new();
        let mut approximated = false;
        for cand in &inst.candidates {
            let cleaned = parser::clean_command(cand);
            if parser::parse_permissive(&cleaned, db).0.is_none() {
                approximated = true;
            }
        }
        for &k in k_values {
            for metric in [Metric::Bleu, Metric::Tm, Metric::FullAcc, Metric::TemplateAcc] {
                let key = format!("{}@{}", metric.label(), k);
                let val = score_at_k(inst, k, metric, db);
                *sums.entry(key.clone()).or_insert(0.0) += val;
                scores.insert(key, val);
            }
        }
        per_instance.push(InstanceScores {
            instance_id: inst.instance_id.clone(),
            approximated,
            scores,
        });
    }
    let n = instances.len().max(1) as f64;
    let aggregates = sums.into_iter().map(|(k, v)| (k, v / n)).collect();
    EvalReport {
        k_values: k_values.to_vec(),
        instance_count: instances.len(),
        aggregates,
        instances: per_instance,
    }
}
