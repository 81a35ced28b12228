//! Acceptance suite: one test per criterion, each printing a PASS, FAIL
//! or SKIP line. Corpus-dependent criteria need the released data mounted
//! at `$BASHKIT_RELEASED_DATA` (see README); they skip with a message
//! when it is absent. Everything else runs unconditionally.
//!
//! Run with `cargo test -p bashkit-core --test acceptance -- --nocapture`.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use bashkit_core::metrics::{self, Metric, TestInstance};
use bashkit_core::nl::Stopwords;
use bashkit_core::pipeline::{self, RawPair, Split};
use bashkit_core::specdb::SpecDb;
use bashkit_core::subtok;
use bashkit_core::template;
use bashkit_core::{parse_command, ViolationKind};

fn db() -> &'static SpecDb {
    use std::sync::OnceLock;
    static DB: OnceLock<SpecDb> = OnceLock::new();
    DB.get_or_init(SpecDb::bundled)
}

fn stopwords() -> &'static Stopwords {
    use std::sync::OnceLock;
    static SW: OnceLock<Stopwords> = OnceLock::new();
    SW.get_or_init(Stopwords::bundled)
}

/// Directory containing `filtered.jsonl` / `full.jsonl` in the corpus
/// JSONL format ({id, nl, cmd}); produced from the released data by
/// `python/convert_release.py`.
fn released_file(name: &str) -> Option<PathBuf> {
    let dir: PathBuf = std::env::var_os("BASHKIT_RELEASED_DATA")?.into();
    let path = dir.join(name);
    path.is_file().then_some(path)
}

fn load_released(name: &str, criterion: &str) -> Option<Vec<RawPair>> {
    match released_file(name) {
        Some(path) => Some(pipeline::read_corpus(&path).expect("released corpus must read")),
        None => {
            println!(
                "ACCEPTANCE {criterion}: SKIP — released corpus not mounted \
                 (set BASHKIT_RELEASED_DATA to a directory containing {name})"
            );
            None
        }
    }
}

fn within(value: f64, target: f64, tolerance: f64) -> bool {
    (value - target).abs() <= target * tolerance
}

/// Criterion 1: headline stats on the released filtered corpus are exact
/// (9,305 pairs, 102 utilities, 206 flags) and computed in under 30 s.
#[test]
fn acceptance_1_corpus_headline() {
    let Some(raw) = load_released("filtered.jsonl", "1") else {
        return;
    };
    let start = Instant::now();
    let pairs: Vec<_> = raw
        .iter()
        .map(|r| pipeline::filter_pair(r, db(), stopwords()))
        .collect();
    let stats = pipeline::compute_stats(&pairs, None, db());
    let elapsed = start.elapsed();

    assert_eq!(stats.pairs_kept, 9305, "pairs");
    assert_eq!(stats.cmd.unique_utilities, 102, "utilities");
    assert_eq!(stats.cmd.unique_flags, 206, "flags");
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 1: PASS — 9305 pairs, 102 utilities, 206 flags in {elapsed:?}"
    );
}

/// Criterion 2: monolingual statistics within ±3%.
#[test]
fn acceptance_2_monolingual_stats() {
    let Some(raw) = load_released("filtered.jsonl", "2") else {
        return;
    };
    let pairs: Vec<_> = raw
        .iter()
        .map(|r| pipeline::filter_pair(r, db(), stopwords()))
        .collect();
    let stats = pipeline::compute_stats(&pairs, None, db());

    let checks: [(&str, f64, f64); 6] = [
        ("unique NL sentences", stats.nl.unique_sentences as f64, 8559.0),
        ("unique words", stats.nl.unique_words as f64, 7790.0),
        ("avg words/sentence", stats.nl.words_per_sentence.avg, 11.7),
        ("unique commands", stats.cmd.unique_commands as f64, 7587.0),
        ("unique templates", stats.cmd.unique_templates as f64, 4602.0),
        ("avg tokens/command", stats.cmd.tokens_per_command.avg, 7.7),
    ];
    for (label, got, want) in checks {
        assert!(
            within(got, want, 0.03),
            "{label}: {got} vs {want} (±3%)"
        );
    }
    println!("ACCEPTANCE 2: PASS — six monolingual statistics within ±3%");
}

/// Criterion 3: filtering the released full data keeps 9,305 ± 1%.
#[test]
fn acceptance_3_filtering() {
    let Some(raw) = load_released("full.jsonl", "3") else {
        return;
    };
    let kept = raw
        .iter()
        .filter(|r| pipeline::filter_pair(r, db(), stopwords()).kept())
        .count();
    assert!(
        within(kept as f64, 9305.0, 0.01),
        "kept {kept} vs 9305 (±1%)"
    );
    println!("ACCEPTANCE 3: PASS — kept {kept} of {} pairs", raw.len());
}

/// Criterion 4: NL-to-command mapping statistics within ±5%.
#[test]
fn acceptance_4_mapping_stats() {
    let Some(raw) = load_released("filtered.jsonl", "4") else {
        return;
    };
    let pairs: Vec<_> = raw
        .iter()
        .map(|r| pipeline::filter_pair(r, db(), stopwords()))
        .collect();
    let stats = pipeline::compute_stats(&pairs, None, db());
    let m = &stats.mapping;
    assert!(within(m.commands_per_nl.avg, 1.09, 0.05), "cmd/nl avg {}", m.commands_per_nl.avg);
    assert!(within(m.nls_per_command.avg, 1.23, 0.05), "nl/cmd avg {}", m.nls_per_command.avg);
    assert!(within(m.commands_per_nl.max as f64, 9.0, 0.05), "cmd/nl max {}", m.commands_per_nl.max);
    assert!(within(m.nls_per_command.max as f64, 22.0, 0.05), "nl/cmd max {}", m.nls_per_command.max);
    println!("ACCEPTANCE 4: PASS — mapping statistics within ±5%");
}

/// Criterion 5: flag-coverage spot checks. The `find` total (103) is
/// checked against the database unconditionally; train-set coverage needs
/// the corpus.
#[test]
fn acceptance_5_flag_coverage() {
    let find = db().lookup_utility("find").expect("find in db");
    let spellings: usize = find
        .flags
        .iter()
        .map(|f| 1 + usize::from(f.long_form.is_some()))
        .sum();
    assert_eq!(spellings, 103, "find total flags must be exactly 103");

    let Some(raw) = load_released("filtered.jsonl", "5 (train coverage)") else {
        println!("ACCEPTANCE 5: PASS (partial) — find total flags = 103 exactly");
        return;
    };
    let pairs: Vec<_> = raw
        .iter()
        .map(|r| pipeline::filter_pair(r, db(), stopwords()))
        .collect();
    let kept: Vec<_> = pairs.iter().filter(|p| p.kept()).collect();
    let assignment = pipeline::split_corpus(&kept, 42).expect("split");
    let stats = pipeline::compute_stats(&pairs, Some(&assignment), db());
    let row = stats
        .flag_coverage
        .iter()
        .find(|c| c.utility == "find")
        .expect("find coverage row");
    assert_eq!(row.flags_in_db, 103);
    let train = row.flags_in_train.unwrap_or(0) as f64;
    assert!(
        (train - 68.0).abs() <= 6.8,
        "find train coverage {train} vs 68 (±10%)"
    );
    println!(
        "ACCEPTANCE 5: PASS — find 103 total flags, {train} in train (68 ± 10%)"
    );
}

/// Criterion 6: partition and leakage invariants on 1,000 fuzzed corpora.
/// The paper's exact split sizes are not reproducible (unknown seed) and
/// are replaced by these invariants.
#[test]
fn acceptance_6_split_invariants() {
    let mut splits_checked = 0;
    for case in 0..1000u64 {
        let size = 24 + (case as usize % 40);
        let raw = common::synth_corpus(case, size);
        let pairs: Vec<_> = raw
            .iter()
            .map(|r| pipeline::filter_pair(r, db(), stopwords()))
            .collect();
        let kept: Vec<_> = pairs.iter().filter(|p| p.kept()).collect();
        assert_eq!(
            kept.len() + pairs.iter().filter(|p| !p.kept()).count(),
            raw.len(),
            "partition violated on case {case}"
        );
        let assignment = match pipeline::split_corpus(&kept, case) {
            Ok(a) => a,
            Err(_) => continue, // fewer than 12 clusters
        };
        splits_checked += 1;
        let mut by_key: HashMap<&str, Split> = HashMap::new();
        let mut by_cmd: HashMap<&str, Split> = HashMap::new();
        for p in &kept {
            let split = assignment.get(&p.id).expect("assigned");
            if let Some(prev) = by_key.insert(&p.nl.normalized_key, split) {
                assert_eq!(prev, split, "NL key leaks across splits (case {case})");
            }
            if let Some(prev) = by_cmd.insert(&p.cmd_clean, split) {
                assert_eq!(prev, split, "command leaks across splits (case {case})");
            }
        }
    }
    assert!(splits_checked >= 800, "only {splits_checked} corpora were splittable");
    println!(
        "ACCEPTANCE 6: PASS — partition on 1000 corpora, zero leakage on {splits_checked} splits"
    );
}

/// Criterion 7: sub-token fidelity. The published path example must
/// reproduce exactly; detokenize∘to_subtokens is identity on 10,000
/// fuzzed strings and on every argument in the corpus when mounted.
#[test]
fn acceptance_7_subtoken_fidelity() {
    let expected = [
        "SUB_START", "/", "home", "/", "dir", "03", "/", "*", ".", "txt", "SUB_END",
    ];
    assert_eq!(subtok::to_subtokens("/home/dir03/*.txt"), expected);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10_000 {
        let s = common::random_constant(&mut rng);
        let toks = subtok::to_subtokens(&s);
        assert_eq!(
            subtok::detokenize_constant(&toks).unwrap(),
            s,
            "round trip failed for {s:?}"
        );
    }

    let corpus_note = match load_corpus_args() {
        Some(args) => {
            for arg in &args {
                let toks = subtok::to_subtokens(arg);
                assert_eq!(
                    &subtok::detokenize_constant(&toks).unwrap(),
                    arg,
                    "corpus arg round trip failed"
                );
            }
            format!(", {} corpus arguments", args.len())
        }
        None => String::new(),
    };
    println!(
        "ACCEPTANCE 7: PASS — published example exact, 10000 fuzzed strings{corpus_note}"
    );
}

fn load_corpus_args() -> Option<Vec<String>> {
    let path = released_file("filtered.jsonl")?;
    let raw = pipeline::read_corpus(&path).ok()?;
    let mut args = Vec::new();
    for r in &raw {
        let pair = pipeline::filter_pair(r, db(), stopwords());
        if let Some(ast) = &pair.ast {
            for u in ast.utilities() {
                for a in u.positional_args() {
                    args.push(a.raw_text());
                }
            }
        }
    }
    Some(args)
}

/// Criterion 8: template fidelity. The §-example template is exact and
/// template equality is an equivalence relation over 1,000 commands
/// (corpus commands when mounted, synthetic otherwise).
#[test]
fn acceptance_8_template_fidelity() {
    let ast = parse_command(r#"grep -l "TODO" *.java"#, db()).unwrap();
    assert_eq!(
        template::extract_template(&ast, db()).templatized,
        "grep -l [regex] [file]"
    );

    let (commands, source) = match released_file("filtered.jsonl") {
        Some(path) => {
            let raw = pipeline::read_corpus(&path).unwrap();
            let cmds: Vec<String> = raw.iter().map(|r| r.cmd.clone()).take(1000).collect();
            (cmds, "corpus")
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let cmds: Vec<String> = (0..1000).map(|_| common::random_command(&mut rng)).collect();
            (cmds, "synthetic")
        }
    };
    let asts: Vec<_> = commands
        .iter()
        .filter_map(|c| parse_command(&bashkit_core::clean_command(c), db()).ok())
        .collect();
    assert!(asts.len() >= 900, "too few parseable commands: {}", asts.len());

    let keys: Vec<String> = asts.iter().map(|a| template::template_key(a, db())).collect();
    // reflexivity on all
    for a in &asts {
        assert!(template::template_equal(a, a, db()));
    }
    // symmetry and transitivity, brute-forced on a subsample; equality is
    // key-based so group consistency covers the rest
    for i in (0..asts.len()).step_by(37) {
        for j in (0..asts.len()).step_by(41) {
            let ij = template::template_equal(&asts[i], &asts[j], db());
            let ji = template::template_equal(&asts[j], &asts[i], db());
            assert_eq!(ij, ji, "symmetry");
            assert_eq!(ij, keys[i] == keys[j], "key consistency");
        }
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    for members in groups.values() {
        for w in members.windows(2) {
            assert!(template::template_equal(&asts[w[0]], &asts[w[1]], db()));
        }
    }
    println!(
        "ACCEPTANCE 8: PASS — golden template exact, equivalence over {} {source} commands",
        asts.len()
    );
}

/// Criterion 9: metric correctness. BLEU agrees with an independent
/// oracle to 1e-9 on a 50-case fixture; TM satisfies identity, disjoint,
/// reference-order invariance; all metrics are monotone in k.
#[test]
fn acceptance_9_metric_correctness() {
    // --- BLEU vs oracle
    let cases = bleu_fixture_cases();
    assert_eq!(cases.len(), 50);
    let mut oracle_sum = 0.0;
    for (cand, refs) in &cases {
        let got = metrics::bleu_score(cand, refs);
        let want = oracle_bleu(cand, refs);
        assert!(
            (got - want).abs() < 1e-9,
            "BLEU diverges from oracle: {got} vs {want} for {cand:?}"
        );
        oracle_sum += want;
    }
    // frozen value computed from the oracle; guards both sides against drift
    assert!(
        (oracle_sum - BLEU_FIXTURE_SUM).abs() < 1e-9,
        "oracle fixture drifted: {oracle_sum}"
    );

    // --- TM identity / disjoint / order invariance
    let a = parse_command("find . -type f | sort", db()).unwrap();
    let b = parse_command("ls -l", db()).unwrap();
    let c = parse_command("find . -type f", db()).unwrap();
    assert!((metrics::tm_score(&a, &[&a]) - 1.0).abs() < 1e-12);
    assert_eq!(metrics::tm_score(&b, &[&c]), 0.0);
    assert_eq!(
        metrics::tm_score(&c, &[&a, &b]),
        metrics::tm_score(&c, &[&b, &a])
    );

    // --- monotonicity in k on fixture instances
    let instance = TestInstance {
        instance_id: "m1".into(),
        normalized_nl_key: String::new(),
        references: vec![metrics::Reference::new("find . -type f | sort", db())],
        candidates: vec![
            "ls".into(),
            "find . -name x".into(),
            "find . -type f".into(),
            "find . -type f | sort".into(),
        ],
    };
    for metric in [Metric::FullAcc, Metric::TemplateAcc, Metric::Tm, Metric::Bleu] {
        let mut prev = 0.0;
        for k in 1..=5 {
            let s = metrics::score_at_k(&instance, k, metric, db());
            assert!(s + 1e-12 >= prev, "{metric:?} not monotone at k={k}");
            prev = s;
        }
    }
    println!("ACCEPTANCE 9: PASS — BLEU oracle agreement, TM fixtures, monotone in k");
}

/// Criterion 10: parser soundness. The 50-case out-of-scope fixture is
/// rejected with the correct violation kind in every case; the released
/// filtered corpus parses 100% in-scope when mounted.
#[test]
fn acceptance_10_parser_soundness() {
    let fixture = include_str!("fixtures/out_of_scope_50.tsv");
    let mut checked = 0;
    for line in fixture.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (cmd, expected) = line.split_once('\t').expect("fixture format");
        let expected_kind = match expected.trim() {
            "io_redirection" => ViolationKind::IoRedirection,
            "variable_assignment" => ViolationKind::VariableAssignment,
            "compound_statement" => ViolationKind::CompoundStatement,
            "nested_interpreter" => ViolationKind::NestedInterpreter,
            "unknown_utility" => ViolationKind::UnknownUtility,
            "syntax_error" => ViolationKind::SyntaxError,
            other => panic!("bad fixture kind {other}"),
        };
        match parse_command(cmd, db()) {
            Ok(_) => panic!("{cmd:?} must be rejected"),
            Err(violations) => {
                assert!(
                    violations.iter().any(|v| v.kind == expected_kind),
                    "{cmd:?}: expected {expected_kind:?}, got {violations:?}"
                );
            }
        }
        checked += 1;
    }
    assert_eq!(checked, 50);

    let corpus_note = match load_released("filtered.jsonl", "10 (corpus parse)") {
        Some(raw) => {
            let mut failures = Vec::new();
            for r in &raw {
                let cleaned = bashkit_core::clean_command(&r.cmd);
                if let Err(v) = parse_command(&cleaned, db()) {
                    failures.push((r.id.clone(), v));
                }
            }
            assert!(
                failures.is_empty(),
                "{} corpus commands failed to parse; first: {:?}",
                failures.len(),
                failures.first()
            );
            format!(", {} corpus commands all in scope", raw.len())
        }
        None => String::new(),
    };
    println!("ACCEPTANCE 10: PASS — 50/50 fixture kinds correct{corpus_note}");
}

// --- BLEU oracle -----------------------------------------------------

/// Frozen sum of the oracle's 50 fixture scores.
const BLEU_FIXTURE_SUM: f64 = 8.631231880324776;

fn bleu_fixture_cases() -> Vec<(Vec<String>, Vec<Vec<String>>)> {
    const VOCAB: &[&str] = &[
        "find", "ls", "sort", "-l", "-type", "f", ".", "|", "xargs", "grep", "x", "head", "-n",
        "5",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = Vec::new();
    for _ in 0..50 {
        let cand_len = rng.gen_range(1..=10);
        let cand: Vec<String> = (0..cand_len)
            .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string())
            .collect();
        let n_refs = rng.gen_range(1..=3);
        let refs: Vec<Vec<String>> = (0..n_refs)
            .map(|_| {
                let len = rng.gen_range(1..=12);
                (0..len)
                    .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string())
                    .collect()
            })
            .collect();
        cases.push((cand, refs));
    }
    cases
}

/// Independent BLEU implementation: string-keyed n-gram maps, explicit
/// loops, same definition (n up to 4, add-one smoothing for n >= 2,
/// closest-reference brevity penalty with ties to the shorter length).
fn oracle_bleu(candidate: &[String], references: &[Vec<String>]) -> f64 {
    if candidate.is_empty() || references.is_empty() {
        return 0.0;
    }
    let join = |toks: &[String]| toks.join("\u{1f}");
    let max_n = if candidate.len() < 4 { candidate.len() } else { 4 };
    let mut log_precisions = Vec::new();
    for n in 1..=max_n {
        let mut cand_counts: BTreeMap<String, u64> = BTreeMap::new();
        for i in 0..=candidate.len().saturating_sub(n) {
            *cand_counts.entry(join(&candidate[i..i + n])).or_insert(0) += 1;
        }
        let mut best_ref: BTreeMap<String, u64> = BTreeMap::new();
        for reference in references {
            if reference.len() < n {
                continue;
            }
            let mut counts: BTreeMap<String, u64> = BTreeMap::new();
            for i in 0..=reference.len() - n {
                *counts.entry(join(&reference[i..i + n])).or_insert(0) += 1;
            }
            for (gram, count) in counts {
                let slot = best_ref.entry(gram).or_insert(0);
                if count > *slot {
                    *slot = count;
                }
            }
        }
        let mut matched = 0u64;
        let mut total = 0u64;
        for (gram, count) in &cand_counts {
            total += count;
            let limit = best_ref.get(gram).copied().unwrap_or(0);
            matched += if *count < limit { *count } else { limit };
        }
        let p = if n == 1 {
            if matched == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        log_precisions.push(p.ln());
    }
    let geo = (log_precisions.iter().sum::<f64>() / max_n as f64).exp();
    let c = candidate.len() as f64;
    let mut r = references[0].len();
    for reference in references {
        let better = reference.len().abs_diff(candidate.len()) < r.abs_diff(candidate.len())
            || (reference.len().abs_diff(candidate.len()) == r.abs_diff(candidate.len())
                && reference.len() < r);
        if better {
            r = reference.len();
        }
    }
    let bp = if c < r as f64 { (1.0 - r as f64 / c).exp() } else { 1.0 };
    bp * geo
}

/// Prints the frozen fixture sum; run manually when the fixture changes.
#[test]
#[ignore = "generator for the frozen BLEU_FIXTURE_SUM constant"]
fn print_bleu_fixture_sum() {
    let sum: f64 = bleu_fixture_cases()
        .iter()
        .map(|(c, r)| oracle_bleu(c, r))
        .sum();
    println!("BLEU_FIXTURE_SUM = {sum:.15}");
}

// --- split realized-ratio report (not an acceptance gate) -------------

#[test]
fn split_ratio_report() {
    let raw = common::synth_corpus(123, 600);
    let pairs: Vec<_> = raw
        .iter()
        .map(|r| pipeline::filter_pair(r, db(), stopwords()))
        .collect();
    let kept: Vec<_> = pairs.iter().filter(|p| p.kept()).collect();
    let assignment = pipeline::split_corpus(&kept, 42).unwrap();
    let (train, dev, test) = (
        assignment.count(Split::Train),
        assignment.count(Split::Dev),
        assignment.count(Split::Test),
    );
    assert_eq!(train + dev + test, kept.len());
    // absorption may shrink dev/test but train must dominate
    assert!(train >= 8 * dev.min(test), "train {train} dev {dev} test {test}");
    let keys: BTreeSet<&str> = kept.iter().map(|p| p.nl.normalized_key.as_str()).collect();
    println!(
        "split report: {} pairs, {} clusters -> train {train} / dev {dev} / test {test}",
        kept.len(),
        keys.len()
    );
}
