//! Shared test helpers: deterministic synthetic corpora that exercise the
//! filtering rules, clustering, command-overlap absorption and the full
//! command grammar.
//!
//! Each integration-test binary compiles this module separately, so not
//! every helper is used by every binary.
#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use bashkit_core::pipeline::RawPair;

const NOUNS: &[&str] = &["files", "directories", "links", "images", "logs", "scripts"];
const EXTS: &[&str] = &["java", "txt", "jpg", "py", "log", "c", "html"];
const DIRS: &[&str] = &["/tmp", "/var/log", "/home/user", ".", "..", "/etc", "src"];
const WORDS: &[&str] = &[
    "show", "list", "print", "count", "remove", "archive", "search", "locate", "display",
    "compress", "sorted", "recursively", "largest", "oldest", "modified", "yesterday", "empty",
];

/// One random in-scope command; the AST shapes cover plain invocations,
/// clusters, pipelines, logical connectives, groups, substitutions and
/// the exec idiom.
pub fn random_command(rng: &mut ChaCha8Rng) -> String {
    let ext = EXTS[rng.gen_range(0..EXTS.len())];
    let dir = DIRS[rng.gen_range(0..DIRS.len())];
    let n = rng.gen_range(1..20);
    match rng.gen_range(0..12) {
        0 => format!("find {dir} -name '*.{ext}'"),
        1 => format!("find {dir} -type f -name \"*.{ext}\" -print"),
        2 => format!("grep -l \"TODO\" *.{ext}"),
        3 => format!("du -a {dir} | sort -rh | head -n{n}"),
        4 => format!("wc -l report.{ext}"),
        5 => format!("tar -cvf backup.tar $(find {dir} -type f -name *.{ext})"),
        6 => format!("find {dir} -name \"*.{ext}\" -exec grep -il \"x\" {{}} \\;"),
        7 => format!("find {dir} -type f | xargs -I {{}} cp {{}} /backup"),
        8 => format!("( find {dir} -type d && ls -l {dir} ) | wc -l"),
        9 => format!("sort -u data.{ext} | uniq -c | head -{n}"),
        10 => format!("find {dir} -size +{n}M -mtime -{n} -user root"),
        _ => format!("cat {dir}/notes.{ext} | tr -s ' ' | cut -d ' ' -f {n}"),
    }
}

/// One random out-of-scope command, cycling through the violation kinds.
pub fn random_out_of_scope(rng: &mut ChaCha8Rng) -> String {
    let ext = EXTS[rng.gen_range(0..EXTS.len())];
    let n = rng.gen_range(1..9);
    match rng.gen_range(0..6) {
        0 => format!("sort data.{ext} > out.{ext}"),
        1 => format!("X{n}=5 && echo done"),
        2 => format!("for f in *.{ext}; do cat $f; done"),
        3 => format!("awk '{{print ${n}}}' data.{ext}"),
        4 => format!("frobnicate{n} --wat"),
        _ => format!("cat data.{ext} | grep x ; ls"),
    }
}

/// A random NL description with enough shared wordings to build clusters.
pub fn random_nl(rng: &mut ChaCha8Rng) -> String {
    let noun = NOUNS[rng.gen_range(0..NOUNS.len())];
    let w1 = WORDS[rng.gen_range(0..WORDS.len())];
    let w2 = WORDS[rng.gen_range(0..WORDS.len())];
    let dir = DIRS[rng.gen_range(0..DIRS.len())];
    match rng.gen_range(0..4) {
        0 => format!("{w1} all {noun} in {dir}"),
        1 => format!("{w1} the {w2} {noun}"),
        2 => format!("{w1} {noun} {w2} under {dir}"),
        _ => format!("{w1} and {w2} every one of the {noun}"),
    }
}

/// Deterministic synthetic corpus. Roughly 80% in-scope pairs; some NL
/// descriptions repeat verbatim (clusters) and some commands repeat under
/// different NL (split absorption pressure).
pub fn synth_corpus(seed: u64, n_pairs: usize) -> Vec<RawPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_pairs);
    let mut nl_pool: Vec<String> = Vec::new();
    let mut cmd_pool: Vec<String> = Vec::new();
    for i in 0..n_pairs {
        let nl = if !nl_pool.is_empty() && rng.gen_bool(0.2) {
            nl_pool[rng.gen_range(0..nl_pool.len())].clone()
        } else {
            let nl = random_nl(&mut rng);
            nl_pool.push(nl.clone());
            nl
        };
        let cmd = if rng.gen_bool(0.2) {
            random_out_of_scope(&mut rng)
        } else if !cmd_pool.is_empty() && rng.gen_bool(0.3) {
            cmd_pool[rng.gen_range(0..cmd_pool.len())].clone()
        } else {
            let cmd = random_command(&mut rng);
            cmd_pool.push(cmd.clone());
            cmd
        };
        pairs.push(RawPair {
            id: format!("pair-{i:05}"),
            nl,
            cmd,
            source_url: None,
        });
    }
    pairs
}

/// Random constant strings for sub-token round-trip fuzzing: a mix of
/// ASCII word characters, shell punctuation, and non-ASCII letters.
pub fn random_constant(rng: &mut ChaCha8Rng) -> String {
    const POOL: &[char] = &[
        'a', 'b', 'z', 'Q', '0', '1', '9', '/', '.', '*', '?', '_', '-', '$', '{', '}', '"', '\'',
        ' ', '\\', '~', '#', '%', 'é', 'ü', '漢', 'ß', '+', '=', ':',
    ];
    let len = rng.gen_range(0..24);
    (0..len).map(|_| POOL[rng.gen_range(0..POOL.len())]).collect()
}
