//! Corpus engineering and evaluation toolkit for natural-language-to-Bash
//! translation.
//!
//! The crate parses one-liner Bash commands against a restricted grammar
//! and a man-page-derived utility/flag database, normalizes and tokenizes
//! both sides of NL-command pairs at token, character and sub-token
//! granularity, extracts command templates, runs the corpus filtering,
//! cleaning and clustered-split pipeline, and scores candidate
//! translations (TM, BLEU, exact full/template accuracy at top-k).

pub mod ast;
pub mod error;
pub mod lexer;
pub mod metrics;
pub mod nl;
pub mod parser;
pub mod pipeline;
pub mod specdb;
pub mod subtok;
pub mod template;

pub use ast::{CommandAst, Node, ScopeClassification, ScopeViolation, ViolationKind};
pub use error::{Error, Result};
pub use parser::{classify_scope, clean_command, parse_command, parse_permissive};
pub use specdb::{FlagSpec, SpecDb, UtilitySpec, ValidationResult};
pub use template::{extract_template, infer_arg_type, template_equal, CommandTemplate, SemanticType};
