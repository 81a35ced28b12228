//! Utility and flag knowledge base.
//!
//! The database is compiled from the GNU/Linux man pages into a versioned,
//! tab-separated text file (see `docs/formats.md`). It drives syntax
//! validation, long-to-short flag normalization, semantic typing of flag
//! values and positional arguments, and flag-coverage statistics.
//!
//! Immutable after load; shares freely across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::template::SemanticType;

/// How many value tokens a flag consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagArity {
    None,
    RequiredValue,
    OptionalValue,
}

/// Declared type of a flag's value.
///
/// `Enumerated` marks closed sets such as `find -type f`; enumerated values
/// stay literal in command templates instead of becoming argument slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueType {
    Semantic(SemanticType),
    Enumerated,
}

/// One flag of one utility, as extracted from its man page.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FlagSpec {
    /// Canonical short form, e.g. `-l` (single-dash long names like
    /// `find -name` count as short forms).
    pub short_form: String,
    /// Double-dash alias when the man page documents one, e.g.
    /// `--target-directory` for `cp -t`.
    pub long_form: Option<String>,
    pub arity: FlagArity,
    pub value_type: Option<ValueType>,
}

/// Scope class of a utility under the corpus filtering rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeClass {
    /// Member of the curated in-scope utility list.
    InScope,
    /// Known but excluded from the corpus domain.
    OutOfScope,
    /// Embeds program strings in another language (awk, sed, python, ...).
    Interpreter,
    /// Mostly used in multi-statement shell scripts (alias, set, ...).
    ScriptOnly,
}

/// Idiomatic per-utility syntax the generic flag grammar cannot express.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum IdiomaticForm {
    /// Flag whose value is a nested command ended by `\;` or `+`
    /// (`find -exec ... {} \;`).
    ExecTerminated { flag: String },
    /// `-NUM` shorthand that canonicalizes to `flag NUM` (`tail -5`).
    DashNumber { canonical: String },
    /// Trailing positionals form a nested command (`xargs`, `nohup`, ...).
    CommandTail,
    /// Dash-less first word of single-character flags (`tar xvf a.tar`).
    BareCluster,
}

/// Positional-argument type declaration; the final entry may repeat.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PositionalTypes {
    pub types: Vec<SemanticType>,
    pub last_repeats: bool,
}

impl PositionalTypes {
    /// Type for the i-th positional argument, if declared.
    pub fn type_at(&self, index: usize) -> Option<SemanticType> {
        match self.types.get(index) {
            Some(t) => Some(*t),
            None if self.last_repeats => self.types.last().copied(),
            None => None,
        }
    }
}

/// Man-page-derived description of one utility.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UtilitySpec {
    pub name: String,
    pub scope: ScopeClass,
    pub flags: Vec<FlagSpec>,
    pub idiomatic_forms: Vec<IdiomaticForm>,
    pub positional_types: Option<PositionalTypes>,
}

impl UtilitySpec {
    pub fn in_scope(&self) -> bool {
        self.scope == ScopeClass::InScope
    }

    /// Look up a flag by its short or long spelling.
    pub fn find_flag(&self, written: &str) -> Option<&FlagSpec> {
        self.flags
            .iter()
            .find(|f| f.short_form == written || f.long_form.as_deref() == Some(written))
    }

    pub fn exec_terminated(&self, flag: &str) -> bool {
        self.idiomatic_forms
            .iter()
            .any(|i| matches!(i, IdiomaticForm::ExecTerminated { flag: f } if f == flag))
    }

    pub fn dash_number_canonical(&self) -> Option<&str> {
        self.idiomatic_forms.iter().find_map(|i| match i {
            IdiomaticForm::DashNumber { canonical } => Some(canonical.as_str()),
            _ => None,
        })
    }
}

/// Outcome of validating a flag against the database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationResult {
    /// Flag exists; carries the canonical short form.
    Valid { canonical_short_form: String },
    UnknownFlag,
    UnknownUtility,
}

/// The loaded knowledge base. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SpecDb {
    utilities: BTreeMap<String, UtilitySpec>,
    header: Vec<String>,
}

/// Text of the bundled default database.
pub const DEFAULT_DB: &str = include_str!("../data/specdb.tsv");

impl SpecDb {
    /// Load the database bundled with the crate.
    pub fn bundled() -> SpecDb {
        Self::parse(DEFAULT_DB, "<bundled>").expect("bundled spec-db must parse")
    }

    pub fn load(path: &Path) -> Result<SpecDb> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parse the tab-separated database format.
    ///
    /// Two record kinds share the five columns (see `docs/formats.md`):
    /// utility rows (`name  *  idioms  scope  positional-types`) and flag
    /// rows (`utility  short  long|-  arity  value-type`). `#` starts a
    /// comment; header comments are retained for provenance.
    pub fn parse(text: &str, origin: &str) -> Result<SpecDb> {
        let mut utilities: BTreeMap<String, UtilitySpec> = BTreeMap::new();
        let mut header = Vec::new();
        let mut in_header = true;

        for (idx, raw_line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw_line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if in_header {
                    header.push(comment.trim().to_string());
                }
                continue;
            }
            in_header = false;

            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(Error::SpecDbParse {
                    path: origin.to_string(),
                    line: lineno,
                    col: 1,
                    msg: format!("expected 5 tab-separated columns, got {}", cols.len()),
                });
            }
            let name = cols[0];
            if name.is_empty() || name.contains('/') {
                return Err(Error::SpecDbParse {
                    path: origin.to_string(),
                    line: lineno,
                    col: 1,
                    msg: format!("utility name must be a base name: {name:?}"),
                });
            }

            if cols[1] == "*" {
                let spec = parse_utility_row(&cols, origin, lineno)?;
                utilities.insert(name.to_string(), spec);
            } else {
                let flag = parse_flag_row(&cols, origin, lineno)?;
                let util = utilities.entry(name.to_string()).or_insert_with(|| UtilitySpec {
                    name: name.to_string(),
                    scope: ScopeClass::InScope,
                    flags: Vec::new(),
                    idiomatic_forms: Vec::new(),
                    positional_types: None,
                });
                if util
                    .flags
                    .iter()
                    .any(|f| f.short_form == flag.short_form)
                {
                    return Err(Error::SpecDbDuplicate {
                        path: origin.to_string(),
                        line: lineno,
                        utility: name.to_string(),
                        flag: flag.short_form,
                    });
                }
                util.flags.push(flag);
            }
        }

        Ok(SpecDb { utilities, header })
    }

    /// Canonical serialization; `parse(serialize(db))` round-trips exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        for util in self.utilities.values() {
            let idioms = if util.idiomatic_forms.is_empty() {
                "-".to_string()
            } else {
                util.idiomatic_forms
                    .iter()
                    .map(|i| match i {
                        IdiomaticForm::ExecTerminated { flag } => format!("exec:{flag}"),
                        IdiomaticForm::DashNumber { canonical } => {
                            format!("dash_number:{canonical}")
                        }
                        IdiomaticForm::CommandTail => "command_tail".to_string(),
                        IdiomaticForm::BareCluster => "bare_cluster".to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let scope = match util.scope {
                ScopeClass::InScope => "in_scope",
                ScopeClass::OutOfScope => "out_of_scope",
                ScopeClass::Interpreter => "interpreter",
                ScopeClass::ScriptOnly => "script_only",
            };
            let positionals = match &util.positional_types {
                None => "-".to_string(),
                Some(p) => {
                    let mut s = p
                        .types
                        .iter()
                        .map(|t| t.tag().to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    if p.last_repeats {
                        s.push('+');
                    }
                    s
                }
            };
            out.push_str(&format!("{}\t*\t{}\t{}\t{}\n", util.name, idioms, scope, positionals));
            for f in &util.flags {
                let long = f.long_form.as_deref().unwrap_or("-");
                let arity = match f.arity {
                    FlagArity::None => "none",
                    FlagArity::RequiredValue => "required_value",
                    FlagArity::OptionalValue => "optional_value",
                };
                let vt = match f.value_type {
                    None => "-".to_string(),
                    Some(ValueType::Enumerated) => "enum".to_string(),
                    Some(ValueType::Semantic(t)) => t.tag().to_string(),
                };
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    util.name, f.short_form, long, arity, vt
                ));
            }
        }
        out
    }

    /// Spec lookup by base name. Absence is a value, not an error.
    pub fn lookup_utility(&self, name: &str) -> Option<&UtilitySpec> {
        if name.contains('/') {
            return None;
        }
        self.utilities.get(name)
    }

    /// Validate a flag spelling against a utility, canonicalizing long
    /// forms to their short alias.
    pub fn validate_flag(&self, utility: &str, flag: &str) -> ValidationResult {
        let Some(util) = self.lookup_utility(utility) else {
            return ValidationResult::UnknownUtility;
        };
        match util.find_flag(flag) {
            Some(spec) => ValidationResult::Valid {
                canonical_short_form: spec.short_form.clone(),
            },
            None => ValidationResult::UnknownFlag,
        }
    }

    pub fn utilities(&self) -> impl Iterator<Item = &UtilitySpec> {
        self.utilities.values()
    }

    /// Number of utilities on the curated in-scope list.
    pub fn in_scope_count(&self) -> usize {
        self.utilities.values().filter(|u| u.in_scope()).count()
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }
}

impl fmt::Display for ValidationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationResult::Valid {
                canonical_short_form,
            } => write!(f, "valid({canonical_short_form})"),
            ValidationResult::UnknownFlag => write!(f, "unknown_flag"),
            ValidationResult::UnknownUtility => write!(f, "unknown_utility"),
        }
    }
}

fn parse_utility_row(cols: &[&str], origin: &str, lineno: usize) -> Result<UtilitySpec> {
    let scope = match cols[3] {
        "in_scope" => ScopeClass::InScope,
        "out_of_scope" => ScopeClass::OutOfScope,
        "interpreter" => ScopeClass::Interpreter,
        "script_only" => ScopeClass::ScriptOnly,
        other => {
            return Err(Error::SpecDbParse {
                path: origin.to_string(),
                line: lineno,
                col: 4,
                msg: format!("unknown scope class {other:?}"),
            })
        }
    };
    let mut idiomatic_forms = Vec::new();
    if cols[2] != "-" {
        for part in cols[2].split(',') {
            if let Some(flag) = part.strip_prefix("exec:") {
                idiomatic_forms.push(IdiomaticForm::ExecTerminated {
                    flag: flag.to_string(),
                });
            } else if let Some(canonical) = part.strip_prefix("dash_number:") {
                idiomatic_forms.push(IdiomaticForm::DashNumber {
                    canonical: canonical.to_string(),
                });
            } else if part == "command_tail" {
                idiomatic_forms.push(IdiomaticForm::CommandTail);
            } else if part == "bare_cluster" {
                idiomatic_forms.push(IdiomaticForm::BareCluster);
            } else {
                return Err(Error::SpecDbParse {
                    path: origin.to_string(),
                    line: lineno,
                    col: 3,
                    msg: format!("unknown idiom descriptor {part:?}"),
                });
            }
        }
    }
    let positional_types = if cols[4] == "-" {
        None
    } else {
        let mut text = cols[4];
        let last_repeats = text.ends_with('+');
        if last_repeats {
            text = &text[..text.len() - 1];
        }
        let mut types = Vec::new();
        for tag in text.split(',') {
            types.push(parse_semantic_tag(tag, origin, lineno, 5)?);
        }
        Some(PositionalTypes {
            types,
            last_repeats,
        })
    };
    Ok(UtilitySpec {
        name: cols[0].to_string(),
        scope,
        flags: Vec::new(),
        idiomatic_forms,
        positional_types,
    })
}

fn parse_flag_row(cols: &[&str], origin: &str, lineno: usize) -> Result<FlagSpec> {
    let short = cols[1];
    if !short.starts_with('-') {
        return Err(Error::SpecDbParse {
            path: origin.to_string(),
            line: lineno,
            col: 2,
            msg: format!("short form must begin with '-': {short:?}"),
        });
    }
    let long_form = match cols[2] {
        "-" => None,
        l if l.starts_with("--") => Some(l.to_string()),
        other => {
            return Err(Error::SpecDbParse {
                path: origin.to_string(),
                line: lineno,
                col: 3,
                msg: format!("long form must begin with '--': {other:?}"),
            })
        }
    };
    let arity = match cols[3] {
        "none" => FlagArity::None,
        "required_value" => FlagArity::RequiredValue,
        "optional_value" => FlagArity::OptionalValue,
        other => {
            return Err(Error::SpecDbParse {
                path: origin.to_string(),
                line: lineno,
                col: 4,
                msg: format!("unknown arity {other:?}"),
            })
        }
    };
    let value_type = match cols[4] {
        "-" => None,
        "enum" => Some(ValueType::Enumerated),
        tag => Some(ValueType::Semantic(parse_semantic_tag(
            tag, origin, lineno, 5,
        )?)),
    };
    Ok(FlagSpec {
        short_form: short.to_string(),
        long_form,
        arity,
        value_type,
    })
}

fn parse_semantic_tag(tag: &str, origin: &str, lineno: usize, col: usize) -> Result<SemanticType> {
    SemanticType::from_tag(tag).ok_or_else(|| Error::SpecDbParse {
        path: origin.to_string(),
        line: lineno,
        col,
        msg: format!("unknown semantic type {tag:?}"),
    })
}
