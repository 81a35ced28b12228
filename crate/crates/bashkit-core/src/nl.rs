//! Natural-language-side preprocessing: tokenization, normalization for
//! clustering, spell correction and vocabulary construction.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use crate::error::Result;

/// Bundled English stopword list (function words plus the punctuation
/// tokens the tokenizer emits).
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// An NL description with its token and clustering views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NlSentence {
    pub raw: String,
    pub tokens: Vec<String>,
    pub normalized_key: String,
}

impl NlSentence {
    pub fn new(raw: &str, stopwords: &Stopwords) -> NlSentence {
        NlSentence {
            raw: raw.to_string(),
            tokens: tokenize_nl(raw),
            normalized_key: normalize_for_clustering(raw, stopwords),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    pub fn bundled() -> Stopwords {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Stopwords> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn parse(text: &str) -> Stopwords {
        let mut words: HashSet<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        // close the set under stemming so normalization is idempotent
        let stemmed: Vec<String> = words.iter().map(|w| stem_fix(w)).collect();
        words.extend(stemmed);
        Stopwords { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Tokenize an NL description. Whitespace and punctuation split, but
/// quoted constants, path-like tokens, glob patterns and flag spellings
/// survive as single tokens.
pub fn tokenize_nl(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut chars = raw.chars().peekable();
    let mut current = String::new();

    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            flush_token(&mut tokens, &mut current);
            chars.next();
            continue;
        }
        if (c == '"' || c == '\'') && current.is_empty() {
            // quoted constant: keep as one token, quotes included
            let quote = c;
            let mut tok = String::new();
            tok.push(quote);
            chars.next();
            let mut closed = false;
            for c in chars.by_ref() {
                tok.push(c);
                if c == quote {
                    closed = true;
                    break;
                }
            }
            if closed {
                tokens.push(tok);
            } else {
                // unterminated quote: fall back to plain text
                current.push_str(&tok);
            }
            continue;
        }
        current.push(c);
        chars.next();
    }
    flush_token(&mut tokens, &mut current);
    tokens
}

fn flush_token(tokens: &mut Vec<String>, current: &mut String) {
    if current.is_empty() {
        return;
    }
    let chunk = std::mem::take(current);
    if is_constant_token(&chunk) {
        // peel trailing clause punctuation off constants: "*.java,"
        let trimmed = chunk.trim_end_matches([',', ';', ':', '!', '?']);
        let tail = &chunk[trimmed.len()..];
        if trimmed.is_empty() {
            tokens.push(chunk.clone());
            return;
        }
        tokens.push(trimmed.to_string());
        for c in tail.chars() {
            tokens.push(c.to_string());
        }
        return;
    }
    // plain word: split off leading/trailing punctuation as own tokens
    let lead_len = chunk
        .chars()
        .take_while(|c| is_clause_punct(*c))
        .map(char::len_utf8)
        .sum::<usize>();
    let lead = &chunk[..lead_len];
    let rest = &chunk[lead_len..];
    let trail_start = rest
        .char_indices()
        .rev()
        .take_while(|(_, c)| is_clause_punct(*c))
        .last()
        .map(|(i, _)| i)
        .unwrap_or(rest.len());
    let (word, trail) = rest.split_at(trail_start);
    for c in lead.chars() {
        tokens.push(c.to_string());
    }
    if !word.is_empty() {
        tokens.push(word.to_string());
    }
    for c in trail.chars() {
        tokens.push(c.to_string());
    }
}

fn is_clause_punct(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '(' | ')' | '[' | ']' | '{' | '}' | '"' | '\'')
}

/// True for tokens that are constants rather than English words: anything
/// with shell metacharacters, digits mixed into punctuation, paths,
/// globs, flag spellings, or quoted strings. Hidden-extension tokens like
/// `.java` count as constants; a trailing period on a word does not.
pub fn is_constant_token(token: &str) -> bool {
    if token.is_empty() {
        return false;
    }
    if token.contains(['/', '*', '?', '$', '~', '\\', '=', '@', '<', '>', '|', '&', '%']) {
        return true;
    }
    if token.starts_with('"') || token.starts_with('\'') || token.starts_with('-') {
        return true;
    }
    if token.starts_with('.') && token.len() > 1 {
        return true;
    }
    let word = token.trim_end_matches(|c: char| is_clause_punct(c));
    if word.contains(['.', '_', '[', ']', '{', '}', '(', ')', '+', '#']) {
        return true;
    }
    word.chars().any(|c| c.is_ascii_digit()) && !word.chars().all(|c| c.is_ascii_digit() || is_clause_punct(c))
        || word.chars().all(|c| c.is_ascii_digit()) && !word.is_empty()
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Snowball English stem, iterated to a fixed point (at most four
/// passes; one suffices for ordinary vocabulary).
pub fn stem_fix(word: &str) -> String {
    let mut current = word.to_string();
    for _ in 0..4 {
        let next = stemmer().stem(&current).to_string();
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Clustering key: lowercase, tokenize, stem each token, drop stopwords,
/// join with single spaces. Idempotent on its own output.
pub fn normalize_for_clustering(raw: &str, stopwords: &Stopwords) -> String {
    let lowered = raw.to_lowercase();
    let mut kept = Vec::new();
    for token in tokenize_nl(&lowered) {
        if stopwords.contains(&token) {
            continue;
        }
        let stem = if is_constant_token(&token) {
            token.clone()
        } else {
            stem_fix(&token)
        };
        if stopwords.contains(&stem) {
            continue;
        }
        kept.push(stem);
    }
    kept.join(" ")
}

/// Token-frequency model with an occurrence cutoff (default 4).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    counts: BTreeMap<String, u64>,
    cutoff: u64,
}

pub const OOV_SYMBOL: &str = "<UNK>";
pub const DEFAULT_CUTOFF: u64 = 4;

impl Vocabulary {
    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    /// True when the word survives the cutoff.
    pub fn contains(&self, word: &str) -> bool {
        self.count(word) >= self.cutoff
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Words at or above the cutoff, most frequent first.
    pub fn retained(&self) -> Vec<(&str, u64)> {
        let mut words: Vec<(&str, u64)> = self
            .counts
            .iter()
            .filter(|(_, &c)| c >= self.cutoff)
            .map(|(w, &c)| (w.as_str(), c))
            .collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        words
    }

    /// Map a token to itself or the OOV symbol.
    pub fn encode_token<'a>(&self, token: &'a str) -> &'a str {
        if self.contains(token) {
            token
        } else {
            OOV_SYMBOL
        }
    }

    /// TSV dump of retained words: `word<TAB>count`.
    pub fn dump_tsv(&self) -> String {
        let mut out = String::new();
        for (word, count) in self.retained() {
            out.push_str(word);
            out.push('\t');
            out.push_str(&count.to_string());
            out.push('\n');
        }
        out
    }
}

/// Count token frequencies over a corpus of sentences.
pub fn build_vocab<'a, I>(token_lists: I, cutoff: u64) -> Vocabulary
where
    I: IntoIterator<Item = &'a [String]>,
{
    assert!(cutoff >= 1, "cutoff must be at least 1");
    let mut counts = BTreeMap::new();
    for tokens in token_lists {
        for tok in tokens {
            *counts.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    Vocabulary { counts, cutoff }
}

/// Probabilistic single-word spell correction against a frequency model.
///
/// Candidates are the word itself if known, then known words at edit
/// distance one, then edit distance two; among candidates at the same
/// distance the most frequent wins, ties break lexicographically. Words
/// that look like constants (`/`, `*`, `$` or digits) are never touched.
pub fn spell_correct(word: &str, freq_model: &Vocabulary) -> String {
    if word.contains(['/', '*', '$']) || word.chars().any(|c| c.is_ascii_digit()) {
        return word.to_string();
    }
    if freq_model.count(word) > 0 {
        return word.to_string();
    }
    let lower = word.to_lowercase();
    if freq_model.count(&lower) > 0 {
        return lower;
    }
    let e1 = edits1(&lower);
    if let Some(best) = best_candidate(e1.iter(), freq_model) {
        return best;
    }
    let mut e2 = HashSet::new();
    for e in &e1 {
        e2.extend(edits1(e));
    }
    if let Some(best) = best_candidate(e2.iter(), freq_model) {
        return best;
    }
    word.to_string()
}

fn best_candidate<'a, I>(candidates: I, model: &Vocabulary) -> Option<String>
where
    I: Iterator<Item = &'a String>,
{
    let mut best: Option<(&'a String, u64)> = None;
    for cand in candidates {
        let count = model.count(cand);
        if count == 0 {
            continue;
        }
        best = match best {
            None => Some((cand, count)),
            Some((bw, bc)) => {
                if count > bc || (count == bc && cand < bw) {
                    Some((cand, count))
                } else {
                    Some((bw, bc))
                }
            }
        };
    }
    best.map(|(w, _)| w.clone())
}

const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

fn edits1(word: &str) -> HashSet<String> {
    let mut out = HashSet::new();
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    for i in 0..n {
        // deletion
        let mut s: String = chars[..i].iter().collect();
        s.extend(&chars[i + 1..]);
        out.insert(s);
        // transposition
        if i + 1 < n {
            let mut t = chars.clone();
            t.swap(i, i + 1);
            out.insert(t.into_iter().collect());
        }
        // replacement
        for &b in ALPHABET {
            let mut r = chars.clone();
            r[i] = b as char;
            out.insert(r.into_iter().collect());
        }
    }
    // insertion
    for i in 0..=n {
        for &b in ALPHABET {
            let mut s: String = chars[..i].iter().collect();
            s.push(b as char);
            s.extend(&chars[i..]);
            out.insert(s);
        }
    }
    out
}
