//! Token, character and sub-token encodings with lossless detokenization.
//!
//! A constant splits into maximal runs of letters and maximal runs of
//! digits; every other character is its own sub-token. The expansion is
//! bracketed by `SUB_START`/`SUB_END`. Utilities, flags and reserved
//! tokens are never split.

use serde::{Deserialize, Serialize};

use crate::ast::CommandAst;
use crate::error::{Error, Result};
use crate::nl;

pub const SUB_START: &str = "SUB_START";
pub const SUB_END: &str = "SUB_END";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Token,
    Char,
    Subtoken,
}

/// Which side of an NL-command pair is being encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSide {
    NaturalLanguage,
    Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub granularity: Granularity,
    pub items: Vec<String>,
    /// `(start, end)` index pairs of marker-bracketed regions; only
    /// populated at sub-token granularity.
    pub boundary_markers: Vec<(usize, usize)>,
}

/// Split one constant into its padded sub-token sequence.
///
/// Letters are Unicode letters; digits are ASCII `0-9`, so `dir03` splits
/// into `dir`, `03` and non-ASCII file names survive the round trip.
pub fn to_subtokens(constant: &str) -> Vec<String> {
    let mut out = vec![SUB_START.to_string()];
    let mut run = String::new();
    let mut run_kind: Option<RunKind> = None;
    for c in constant.chars() {
        let kind = RunKind::of(c);
        match (run_kind, kind) {
            (Some(prev), Some(k)) if prev == k => run.push(c),
            _ => {
                if !run.is_empty() {
                    out.push(std::mem::take(&mut run));
                }
                match kind {
                    Some(k) => {
                        run.push(c);
                        run_kind = Some(k);
                    }
                    None => {
                        out.push(c.to_string());
                        run_kind = None;
                    }
                }
            }
        }
    }
    if !run.is_empty() {
        out.push(run);
    }
    out.push(SUB_END.to_string());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunKind {
    Letters,
    Digits,
}

impl RunKind {
    fn of(c: char) -> Option<RunKind> {
        if c.is_ascii_digit() {
            Some(RunKind::Digits)
        } else if c.is_alphabetic() {
            Some(RunKind::Letters)
        } else {
            None
        }
    }
}

/// Inverse of sub-token expansion over a full item sequence: pieces
/// between each marker pair concatenate back into their constant; items
/// outside marker pairs pass through unchanged.
pub fn detokenize_subtokens(items: &[String]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut current: Option<String> = None;
    for item in items {
        match item.as_str() {
            SUB_START => {
                if current.is_some() {
                    return Err(Error::UnbalancedMarkers(
                        "nested SUB_START".into(),
                    ));
                }
                current = Some(String::new());
            }
            SUB_END => match current.take() {
                Some(s) => out.push(s),
                None => {
                    return Err(Error::UnbalancedMarkers(
                        "SUB_END without SUB_START".into(),
                    ))
                }
            },
            piece => match &mut current {
                Some(s) => s.push_str(piece),
                None => out.push(piece.to_string()),
            },
        }
    }
    if current.is_some() {
        return Err(Error::UnbalancedMarkers("missing SUB_END".into()));
    }
    Ok(out)
}

/// Detokenize a sequence that encodes exactly one constant.
pub fn detokenize_constant(items: &[String]) -> Result<String> {
    let parts = detokenize_subtokens(items)?;
    Ok(parts.concat())
}

/// Encode one side of a pair at the requested granularity.
///
/// Command sides at token/sub-token granularity need the parsed AST so
/// utilities and flags stay atomic; NL sides tokenize with the NL
/// tokenizer and lowercase closed-vocabulary words.
pub fn encode(
    pair_side: &str,
    granularity: Granularity,
    side: PairSide,
    ast: Option<&CommandAst>,
) -> TokenSequence {
    match granularity {
        Granularity::Char => TokenSequence {
            granularity,
            items: pair_side.chars().map(|c| c.to_string()).collect(),
            boundary_markers: Vec::new(),
        },
        Granularity::Token => TokenSequence {
            granularity,
            items: base_tokens(pair_side, side, ast),
            boundary_markers: Vec::new(),
        },
        Granularity::Subtoken => {
            let base = base_tokens(pair_side, side, ast);
            let mut items = Vec::new();
            let mut markers = Vec::new();
            match side {
                PairSide::Command => {
                    let atomic = match ast {
                        Some(ast) => command_atomic_set(ast),
                        None => Vec::new(),
                    };
                    for tok in base {
                        if atomic.contains(&tok) {
                            items.push(tok);
                        } else {
                            push_expansion(&tok, &mut items, &mut markers);
                        }
                    }
                }
                PairSide::NaturalLanguage => {
                    for tok in base {
                        if nl::is_constant_token(&tok) {
                            push_expansion(&tok, &mut items, &mut markers);
                        } else {
                            items.push(tok);
                        }
                    }
                }
            }
            TokenSequence {
                granularity,
                items,
                boundary_markers: markers,
            }
        }
    }
}

fn push_expansion(token: &str, items: &mut Vec<String>, markers: &mut Vec<(usize, usize)>) {
    let start = items.len();
    items.extend(to_subtokens(token));
    markers.push((start, items.len() - 1));
}

fn base_tokens(pair_side: &str, side: PairSide, ast: Option<&CommandAst>) -> Vec<String> {
    match (side, ast) {
        (PairSide::Command, Some(ast)) => ast.token_stream(),
        (PairSide::Command, None) => pair_side.split_whitespace().map(String::from).collect(),
        (PairSide::NaturalLanguage, _) => nl::tokenize_nl(pair_side)
            .into_iter()
            .map(|t| {
                if nl::is_constant_token(&t) {
                    t
                } else {
                    t.to_lowercase()
                }
            })
            .collect(),
    }
}

/// Close-vocabulary items of a command that stay atomic at sub-token
/// granularity: utilities, flags and structural reserved tokens.
fn command_atomic_set(ast: &CommandAst) -> Vec<String> {
    let mut set = ast.close_vocab_tokens();
    set.sort();
    set.dedup();
    set
}
