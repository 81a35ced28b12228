//! Semantic typing of command arguments and template extraction.
//!
//! A command template replaces every open-vocabulary argument with its
//! semantic-type slot (`grep -l "TODO" *.java` becomes
//! `grep -l [regex] [file]`); utilities, flags, reserved tokens, and
//! enumerated flag values stay literal.

use serde::{Deserialize, Serialize};

use crate::ast::*;
use crate::specdb::{SpecDb, UtilitySpec, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticType {
    File,
    Directory,
    Path,
    Regex,
    Number,
    Size,
    Timespan,
    DateTime,
    Permission,
    String,
    Unknown,
}

impl SemanticType {
    pub fn tag(&self) -> &'static str {
        match self {
            SemanticType::File => "file",
            SemanticType::Directory => "directory",
            SemanticType::Path => "path",
            SemanticType::Regex => "regex",
            SemanticType::Number => "number",
            SemanticType::Size => "size",
            SemanticType::Timespan => "timespan",
            SemanticType::DateTime => "datetime",
            SemanticType::Permission => "permission",
            SemanticType::String => "string",
            SemanticType::Unknown => "unknown",
        }
    }

    pub fn from_tag(tag: &str) -> Option<SemanticType> {
        Some(match tag {
            "file" => SemanticType::File,
            "directory" => SemanticType::Directory,
            "path" => SemanticType::Path,
            "regex" => SemanticType::Regex,
            "number" => SemanticType::Number,
            "size" => SemanticType::Size,
            "timespan" => SemanticType::Timespan,
            "datetime" => SemanticType::DateTime,
            "permission" => SemanticType::Permission,
            "string" => SemanticType::String,
            "unknown" => SemanticType::Unknown,
            _ => return None,
        })
    }

    fn slot(&self) -> String {
        format!("[{}]", self.tag())
    }
}

/// Extracted template plus the slot types and original argument texts in
/// emission order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandTemplate {
    pub templatized: String,
    pub slot_types: Vec<SemanticType>,
    pub slot_values: Vec<String>,
}

impl CommandTemplate {
    /// Substitute the original arguments back into their slots; for a
    /// template extracted from `ast` this reproduces `ast.serialize()`.
    pub fn substitute(&self) -> String {
        let mut out = self.templatized.clone();
        for (ty, value) in self.slot_types.iter().zip(&self.slot_values) {
            let marker = format!("[{}]", ty.tag());
            if let Some(idx) = out.find(&marker) {
                out.replace_range(idx..idx + marker.len(), value);
            }
        }
        out
    }
}

/// Typing context: the utility and, for flag values, the flag.
#[derive(Debug, Clone, Copy)]
pub struct ArgContext<'a> {
    pub utility: &'a str,
    pub flag: Option<&'a str>,
    /// Positional index among the utility's positional arguments.
    pub position: Option<usize>,
}

/// Deterministic argument typing. Priority: the flag's declared value
/// type, then the utility's declared positional type, then surface rules.
pub fn infer_arg_type(arg: &ArgNode, ctx: ArgContext<'_>, db: &SpecDb) -> SemanticType {
    let spec = db.lookup_utility(ctx.utility);
    if let (Some(spec), Some(flag)) = (spec, ctx.flag) {
        if let Some(fs) = spec.flags.iter().find(|f| f.short_form == flag) {
            match fs.value_type {
                Some(ValueType::Semantic(t)) => return t,
                Some(ValueType::Enumerated) => return SemanticType::Unknown,
                None => {}
            }
        }
    }
    if let (Some(spec), Some(idx)) = (spec, ctx.position) {
        if let Some(pos) = &spec.positional_types {
            if let Some(t) = pos.type_at(idx) {
                return t;
            }
        }
    }
    surface_type(&arg.raw_text())
}

/// Pattern-based fallback typing for an argument's written form.
pub fn surface_type(raw: &str) -> SemanticType {
    let inner = strip_quotes(raw);
    if inner.is_empty() {
        return SemanticType::String;
    }
    if inner == "." || inner == ".." || inner == "~" {
        return SemanticType::Path;
    }
    let has_glob = inner.contains(['*', '?']) || (inner.contains('[') && inner.contains(']'));
    let has_regex_meta = inner.contains(['^', '$'])
        || inner.contains("\\(")
        || inner.contains(".*")
        || inner.contains('+') && inner.contains('\\');
    if has_glob || has_regex_meta {
        return SemanticType::Regex;
    }
    if inner.starts_with('/') || inner.contains('/') {
        return SemanticType::Path;
    }
    if inner.len() >= 2 {
        let (num, suffix) = inner.split_at(inner.len() - 1);
        if !num.is_empty()
            && num.chars().all(|c| c.is_ascii_digit())
            && matches!(suffix, "k" | "K" | "M" | "G" | "T" | "b" | "c" | "w")
        {
            return SemanticType::Size;
        }
    }
    if (3..=4).contains(&inner.len()) && inner.chars().all(|c| ('0'..='7').contains(&c)) {
        return SemanticType::Permission;
    }
    if inner.chars().all(|c| c.is_ascii_digit())
        || (inner.starts_with(['+', '-'])
            && inner.len() > 1
            && inner[1..].chars().all(|c| c.is_ascii_digit()))
    {
        return SemanticType::Number;
    }
    SemanticType::String
}

fn strip_quotes(raw: &str) -> &str {
    let b = raw.as_bytes();
    if b.len() >= 2 && (b[0] == b'"' && b[b.len() - 1] == b'"'
        || b[0] == b'\'' && b[b.len() - 1] == b'\'')
    {
        &raw[1..raw.len() - 1]
    } else {
        raw
    }
}

/// Extract the command template of a parsed command.
pub fn extract_template(ast: &CommandAst, db: &SpecDb) -> CommandTemplate {
    let mut tokens = Vec::new();
    let mut slots = Vec::new();
    template_node(&ast.root, db, false, &mut tokens, &mut slots);
    let (slot_types, slot_values) = slots.into_iter().unzip();
    CommandTemplate {
        templatized: tokens.join(" "),
        slot_types,
        slot_values,
    }
}

/// True iff two commands share a template after flag canonicalization and
/// order-insensitive comparison of each utility's flag set.
pub fn template_equal(a: &CommandAst, b: &CommandAst, db: &SpecDb) -> bool {
    template_key(a, db) == template_key(b, db)
}

/// Canonical comparison key: the template with each utility's contiguous
/// flag runs sorted by canonical short form. Runs are not sorted across
/// positional arguments or expression operators, which keep their order.
pub fn template_key(ast: &CommandAst, db: &SpecDb) -> String {
    let mut tokens = Vec::new();
    let mut slots = Vec::new();
    template_node(&ast.root, db, true, &mut tokens, &mut slots);
    tokens.join(" ")
}

type Slot = (SemanticType, String);

fn template_node(
    node: &Node,
    db: &SpecDb,
    canonical: bool,
    out: &mut Vec<String>,
    slots: &mut Vec<Slot>,
) {
    match node {
        Node::Utility(u) => template_utility(u, db, canonical, out, slots),
        Node::Pipeline(p) => {
            for (i, stage) in p.stages.iter().enumerate() {
                if i > 0 {
                    out.push("|".into());
                }
                template_node(stage, db, canonical, out, slots);
            }
        }
        Node::Logical(l) => {
            template_node(&l.left, db, canonical, out, slots);
            out.push(
                match l.op {
                    LogicalOp::And => "&&",
                    LogicalOp::Or => "||",
                }
                .into(),
            );
            template_node(&l.right, db, canonical, out, slots);
        }
        Node::Group(g) => {
            out.push("(".into());
            template_node(&g.inner, db, canonical, out, slots);
            out.push(")".into());
        }
    }
}

fn template_utility(
    u: &UtilityNode,
    db: &SpecDb,
    canonical: bool,
    out: &mut Vec<String>,
    slots: &mut Vec<Slot>,
) {
    out.push(u.name.clone());
    let spec = db.lookup_utility(&u.name);

    // render each element, tracking positional index
    let mut rendered: Vec<(bool, String, Vec<String>)> = Vec::new(); // (is_flag, sort_key, tokens)
    let mut pos_index = 0usize;
    for el in &u.elements {
        match el {
            CmdElement::Flag(b) => {
                let mut toks = vec![b.flag.clone()];
                match &b.value {
                    None => {}
                    Some(FlagValue::Arg(arg)) => {
                        toks.push(flag_value_token(u, spec, b, arg, db, slots));
                    }
                    Some(FlagValue::ExecCommand {
                        command,
                        terminator,
                    }) => {
                        let mut inner = Vec::new();
                        template_node(command, db, canonical, &mut inner, slots);
                        toks.extend(inner);
                        toks.push(terminator.text().to_string());
                    }
                }
                rendered.push((true, b.flag.clone(), toks));
            }
            CmdElement::Arg(arg) => {
                let token = positional_token(u, arg, pos_index, db, slots);
                pos_index += 1;
                rendered.push((false, String::new(), vec![token]));
            }
            CmdElement::Operator { text } => {
                rendered.push((false, String::new(), vec![text.clone()]));
            }
            CmdElement::CommandTail { command } => {
                let mut inner = Vec::new();
                template_node(command, db, canonical, &mut inner, slots);
                rendered.push((false, String::new(), inner));
            }
        }
    }

    if canonical {
        // sort contiguous runs of flags by canonical short form
        let mut i = 0;
        while i < rendered.len() {
            if rendered[i].0 {
                let mut j = i;
                while j < rendered.len() && rendered[j].0 {
                    j += 1;
                }
                rendered[i..j].sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.2.cmp(&b.2)));
                i = j;
            } else {
                i += 1;
            }
        }
    }

    for (_, _, toks) in rendered {
        out.extend(toks);
    }
}

fn flag_value_token(
    u: &UtilityNode,
    spec: Option<&UtilitySpec>,
    binding: &FlagBinding,
    arg: &ArgNode,
    db: &SpecDb,
    slots: &mut Vec<Slot>,
) -> String {
    // enumerated values stay literal parts of the template
    if let Some(spec) = spec {
        if let Some(fs) = spec.flags.iter().find(|f| f.short_form == binding.flag) {
            if fs.value_type == Some(ValueType::Enumerated) {
                return arg.raw_text();
            }
        }
    }
    if !arg.is_pure_literal() {
        return subst_token(arg, db, slots);
    }
    let ty = infer_arg_type(
        arg,
        ArgContext {
            utility: &u.name,
            flag: Some(&binding.flag),
            position: None,
        },
        db,
    );
    slots.push((ty, arg.raw_text()));
    ty.slot()
}

fn positional_token(
    u: &UtilityNode,
    arg: &ArgNode,
    pos_index: usize,
    db: &SpecDb,
    slots: &mut Vec<Slot>,
) -> String {
    let raw = arg.raw_text();
    // reserved placeholder tokens stay literal
    if raw == "{}" || raw == "{}+" {
        return raw;
    }
    if !arg.is_pure_literal() {
        return subst_token(arg, db, slots);
    }
    let ty = infer_arg_type(
        arg,
        ArgContext {
            utility: &u.name,
            flag: None,
            position: Some(pos_index),
        },
        db,
    );
    slots.push((ty, arg.raw_text()));
    ty.slot()
}

/// Arguments containing substitutions templatize their inner command.
fn subst_token(arg: &ArgNode, db: &SpecDb, slots: &mut Vec<Slot>) -> String {
    let mut out = String::new();
    for part in &arg.parts {
        match part {
            WordPart::Literal { text } => {
                if !text.is_empty() {
                    let ty = surface_type(text);
                    slots.push((ty, text.clone()));
                    out.push_str(&ty.slot());
                }
            }
            WordPart::CommandSubst { command } => {
                let mut inner = Vec::new();
                template_node(command, db, false, &mut inner, slots);
                out.push_str("$(");
                out.push_str(&inner.join(" "));
                out.push(')');
            }
            WordPart::ProcessSubst { command } => {
                let mut inner = Vec::new();
                template_node(command, db, false, &mut inner, slots);
                out.push_str("<(");
                out.push_str(&inner.join(" "));
                out.push(')');
            }
        }
    }
    out
}
