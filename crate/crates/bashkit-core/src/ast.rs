//! Command AST for the restricted one-liner grammar.
//!
//! The tree keeps a utility's flags, arguments and expression operators in
//! their original order so that serialization is canonical and reparsable;
//! `flag_bindings()` / `positional_args()` give the flat views.
//!
//! JSON serialization tags every node with a `kind` field; the schema is
//! documented in `docs/formats.md`.

use serde::{Deserialize, Serialize};

use crate::template::SemanticType;

/// The fixed closed-vocabulary reserved-token inventory: structural
/// syntax tokens that stay atomic at every granularity and count toward
/// TM's close vocabulary. Statistics report the observed subset of this
/// list next to its size.
pub const RESERVED_TOKENS: &[&str] = &[
    "|", "&&", "||", "(", ")", "$(", "<(", "{}", "\\;", ";", "!", "$", "\"", "'", "=", "+",
    "--", "\\(", "\\)",
];

/// Root of a parsed command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandAst {
    pub root: Node,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Utility(UtilityNode),
    Pipeline(PipelineNode),
    Logical(LogicalNode),
    Group(GroupNode),
}

/// `a | b | c`; always at least two stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineNode {
    pub stages: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalOp {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalNode {
    pub op: LogicalOp,
    pub left: Box<Node>,
    pub right: Box<Node>,
}

/// Parenthesized sub-command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupNode {
    pub inner: Box<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilityNode {
    pub name: String,
    /// False when the name did not resolve in the spec-db.
    pub known: bool,
    /// Flags, arguments and expression operators in written order.
    pub elements: Vec<CmdElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CmdElement {
    Flag(FlagBinding),
    Arg(ArgNode),
    /// Expression operators and markers kept verbatim: `!`, `\(`, `\)`,
    /// `,`, `--`.
    Operator { text: String },
    /// Trailing nested command of command-prefix utilities (xargs, nohup...).
    CommandTail { command: Box<Node> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagBinding {
    /// Canonical short form when the flag resolved; the written text
    /// otherwise.
    pub flag: String,
    /// False for flags not present in the spec-db (permissive mode).
    pub known: bool,
    pub value: Option<FlagValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlagValue {
    Arg(ArgNode),
    /// `find -exec CMD {} \;` / `+`: the payload is itself a command.
    ExecCommand {
        command: Box<Node>,
        terminator: ExecTerminator,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecTerminator {
    Semicolon,
    Plus,
}

impl ExecTerminator {
    pub fn text(&self) -> &'static str {
        match self {
            ExecTerminator::Semicolon => "\\;",
            ExecTerminator::Plus => "+",
        }
    }
}

/// One command argument. `parts` preserves the written text, including
/// quotes and escapes; substitutions carry their parsed sub-command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgNode {
    pub parts: Vec<WordPart>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub semantic_type: Option<SemanticType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WordPart {
    Literal { text: String },
    CommandSubst { command: Box<Node> },
    ProcessSubst { command: Box<Node> },
}

/// Why a command falls outside the restricted grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    IoRedirection,
    VariableAssignment,
    CompoundStatement,
    NestedInterpreter,
    UnknownUtility,
    SyntaxError,
}

impl ViolationKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ViolationKind::IoRedirection => "io_redirection",
            ViolationKind::VariableAssignment => "variable_assignment",
            ViolationKind::CompoundStatement => "compound_statement",
            ViolationKind::NestedInterpreter => "nested_interpreter",
            ViolationKind::UnknownUtility => "unknown_utility",
            ViolationKind::SyntaxError => "syntax_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeViolation {
    pub kind: ViolationKind,
    /// Byte range within the input string.
    pub span: (usize, usize),
    pub detail: String,
}

/// Result of total scope classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeClassification {
    InScope(CommandAst),
    OutOfScope(Vec<ScopeViolation>),
}

impl ArgNode {
    pub fn literal(text: impl Into<String>) -> ArgNode {
        ArgNode {
            parts: vec![WordPart::Literal { text: text.into() }],
            semantic_type: None,
        }
    }

    /// The argument as written; substitutions serialize canonically.
    pub fn raw_text(&self) -> String {
        let mut out = String::new();
        for part in &self.parts {
            match part {
                WordPart::Literal { text } => out.push_str(text),
                WordPart::CommandSubst { command } => {
                    out.push_str("$(");
                    out.push_str(&Node::serialize(command));
                    out.push(')');
                }
                WordPart::ProcessSubst { command } => {
                    out.push_str("<(");
                    out.push_str(&Node::serialize(command));
                    out.push(')');
                }
            }
        }
        out
    }

    pub fn is_pure_literal(&self) -> bool {
        self.parts
            .iter()
            .all(|p| matches!(p, WordPart::Literal { .. }))
    }
}

impl UtilityNode {
    pub fn flag_bindings(&self) -> impl Iterator<Item = &FlagBinding> {
        self.elements.iter().filter_map(|e| match e {
            CmdElement::Flag(b) => Some(b),
            _ => None,
        })
    }

    pub fn positional_args(&self) -> impl Iterator<Item = &ArgNode> {
        self.elements.iter().filter_map(|e| match e {
            CmdElement::Arg(a) => Some(a),
            _ => None,
        })
    }
}

impl CommandAst {
    /// Canonical single-line rendering; reparsing yields a structurally
    /// equal tree.
    pub fn serialize(&self) -> String {
        self.root.serialize()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("AST serializes")
    }

    /// Every utility node in the tree, in serialization order.
    pub fn utilities(&self) -> Vec<&UtilityNode> {
        let mut out = Vec::new();
        collect_utilities(&self.root, &mut out);
        out
    }

    /// Token stream at token granularity: utilities, canonical flags,
    /// argument text and structural reserved tokens.
    pub fn token_stream(&self) -> Vec<String> {
        let mut out = Vec::new();
        stream_node(&self.root, &mut out);
        out
    }

    /// Multiset of close-vocabulary tokens (utilities, flags, reserved
    /// tokens); arguments are excluded entirely.
    pub fn close_vocab_tokens(&self) -> Vec<String> {
        let mut out = Vec::new();
        close_vocab_node(&self.root, &mut out);
        out
    }
}

impl Node {
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        write_node(self, &mut out);
        out
    }
}

fn collect_utilities<'a>(node: &'a Node, out: &mut Vec<&'a UtilityNode>) {
    match node {
        Node::Utility(u) => {
            out.push(u);
            for el in &u.elements {
                match el {
                    CmdElement::Flag(FlagBinding {
                        value: Some(FlagValue::ExecCommand { command, .. }),
                        ..
                    }) => collect_utilities(command, out),
                    CmdElement::CommandTail { command } => collect_utilities(command, out),
                    CmdElement::Arg(arg) => {
                        for part in &arg.parts {
                            match part {
                                WordPart::CommandSubst { command }
                                | WordPart::ProcessSubst { command } => {
                                    collect_utilities(command, out)
                                }
                                WordPart::Literal { .. } => {}
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        Node::Pipeline(p) => p.stages.iter().for_each(|s| collect_utilities(s, out)),
        Node::Logical(l) => {
            collect_utilities(&l.left, out);
            collect_utilities(&l.right, out);
        }
        Node::Group(g) => collect_utilities(&g.inner, out),
    }
}

fn write_node(node: &Node, out: &mut String) {
    match node {
        Node::Utility(u) => write_utility(u, out),
        Node::Pipeline(p) => {
            for (i, stage) in p.stages.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                write_node(stage, out);
            }
        }
        Node::Logical(l) => {
            write_node(&l.left, out);
            out.push_str(match l.op {
                LogicalOp::And => " && ",
                LogicalOp::Or => " || ",
            });
            write_node(&l.right, out);
        }
        Node::Group(g) => {
            out.push_str("( ");
            write_node(&g.inner, out);
            out.push_str(" )");
        }
    }
}

fn write_utility(u: &UtilityNode, out: &mut String) {
    out.push_str(&u.name);
    for el in &u.elements {
        out.push(' ');
        match el {
            CmdElement::Flag(b) => {
                out.push_str(&b.flag);
                match &b.value {
                    None => {}
                    Some(FlagValue::Arg(arg)) => {
                        out.push(' ');
                        out.push_str(&arg.raw_text());
                    }
                    Some(FlagValue::ExecCommand {
                        command,
                        terminator,
                    }) => {
                        out.push(' ');
                        write_node(command, out);
                        out.push(' ');
                        out.push_str(terminator.text());
                    }
                }
            }
            CmdElement::Arg(arg) => out.push_str(&arg.raw_text()),
            CmdElement::Operator { text } => out.push_str(text),
            CmdElement::CommandTail { command } => write_node(command, out),
        }
    }
}

fn stream_node(node: &Node, out: &mut Vec<String>) {
    match node {
        Node::Utility(u) => stream_utility(u, out),
        Node::Pipeline(p) => {
            for (i, stage) in p.stages.iter().enumerate() {
                if i > 0 {
                    out.push("|".into());
                }
                stream_node(stage, out);
            }
        }
        Node::Logical(l) => {
            stream_node(&l.left, out);
            out.push(
                match l.op {
                    LogicalOp::And => "&&",
                    LogicalOp::Or => "||",
                }
                .into(),
            );
            stream_node(&l.right, out);
        }
        Node::Group(g) => {
            out.push("(".into());
            stream_node(&g.inner, out);
            out.push(")".into());
        }
    }
}

fn stream_utility(u: &UtilityNode, out: &mut Vec<String>) {
    out.push(u.name.clone());
    for el in &u.elements {
        match el {
            CmdElement::Flag(b) => {
                out.push(b.flag.clone());
                match &b.value {
                    None => {}
                    Some(FlagValue::Arg(arg)) => stream_arg(arg, out),
                    Some(FlagValue::ExecCommand {
                        command,
                        terminator,
                    }) => {
                        stream_node(command, out);
                        out.push(terminator.text().into());
                    }
                }
            }
            CmdElement::Arg(arg) => stream_arg(arg, out),
            CmdElement::Operator { text } => out.push(text.clone()),
            CmdElement::CommandTail { command } => stream_node(command, out),
        }
    }
}

fn stream_arg(arg: &ArgNode, out: &mut Vec<String>) {
    if arg.is_pure_literal() {
        out.push(arg.raw_text());
        return;
    }
    for part in &arg.parts {
        match part {
            WordPart::Literal { text } => {
                if !text.is_empty() {
                    out.push(text.clone());
                }
            }
            WordPart::CommandSubst { command } => {
                out.push("$(".into());
                stream_node(command, out);
                out.push(")".into());
            }
            WordPart::ProcessSubst { command } => {
                out.push("<(".into());
                stream_node(command, out);
                out.push(")".into());
            }
        }
    }
}

fn close_vocab_node(node: &Node, out: &mut Vec<String>) {
    match node {
        Node::Utility(u) => {
            out.push(u.name.clone());
            for el in &u.elements {
                match el {
                    CmdElement::Flag(b) => {
                        out.push(b.flag.clone());
                        match &b.value {
                            Some(FlagValue::ExecCommand {
                                command,
                                terminator,
                            }) => {
                                close_vocab_node(command, out);
                                out.push(terminator.text().into());
                            }
                            Some(FlagValue::Arg(arg)) => close_vocab_arg(arg, out),
                            None => {}
                        }
                    }
                    CmdElement::Arg(arg) => {
                        if arg.is_pure_literal() && arg.raw_text() == "{}" {
                            out.push("{}".into());
                        } else {
                            close_vocab_arg(arg, out);
                        }
                    }
                    CmdElement::Operator { text } => out.push(text.clone()),
                    CmdElement::CommandTail { command } => close_vocab_node(command, out),
                }
            }
        }
        Node::Pipeline(p) => {
            for (i, stage) in p.stages.iter().enumerate() {
                if i > 0 {
                    out.push("|".into());
                }
                close_vocab_node(stage, out);
            }
        }
        Node::Logical(l) => {
            close_vocab_node(&l.left, out);
            out.push(
                match l.op {
                    LogicalOp::And => "&&",
                    LogicalOp::Or => "||",
                }
                .into(),
            );
            close_vocab_node(&l.right, out);
        }
        Node::Group(g) => {
            out.push("(".into());
            close_vocab_node(&g.inner, out);
            out.push(")".into());
        }
    }
}

fn close_vocab_arg(arg: &ArgNode, out: &mut Vec<String>) {
    for part in &arg.parts {
        match part {
            WordPart::Literal { .. } => {}
            WordPart::CommandSubst { command } => {
                out.push("$(".into());
                close_vocab_node(command, out);
                out.push(")".into());
            }
            WordPart::ProcessSubst { command } => {
                out.push("<(".into());
                close_vocab_node(command, out);
                out.push(")".into());
            }
        }
    }
}
