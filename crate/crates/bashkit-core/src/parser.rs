//! Parser for the restricted one-liner grammar, plus command cleaning and
//! scope classification.
//!
//! In-scope syntax: a single utility invocation, pipelines, `&&`/`||`,
//! parentheses, command substitution and input process substitution.
//! Everything else (redirection, assignment, compound statements, nested
//! interpreter strings) is reported as a [`ScopeViolation`]; parsing keeps
//! going after a violation so all problems in a line are reported together.

use crate::ast::*;
use crate::lexer::{self, RawPart, Token, TokenKind, Word};
use crate::specdb::{FlagArity, FlagSpec, IdiomaticForm, ScopeClass, SpecDb, UtilitySpec};

/// Statement keywords that open compound constructs.
const COMPOUND_KEYWORDS: &[&str] = &[
    "if", "then", "elif", "else", "fi", "for", "while", "until", "do", "done", "case", "esac",
    "function", "select", "coproc", "{", "}",
];

/// Strict parse: an AST only when the command is fully in scope and every
/// utility and flag validates; otherwise every detected violation.
pub fn parse_command(raw: &str, db: &SpecDb) -> Result<CommandAst, Vec<ScopeViolation>> {
    let (ast, violations) = Parser::new(db, false).parse(raw);
    match ast {
        Some(ast) if violations.is_empty() => Ok(ast),
        _ => Err(violations),
    }
}

/// Permissive parse for scoring model outputs: unknown utilities and flags
/// are recorded on the nodes instead of rejected. Out-of-scope *syntax*
/// still produces violations.
pub fn parse_permissive(raw: &str, db: &SpecDb) -> (Option<CommandAst>, Vec<ScopeViolation>) {
    Parser::new(db, true).parse(raw)
}

/// Total classification of a command line against the restricted grammar.
pub fn classify_scope(raw: &str, db: &SpecDb) -> ScopeClassification {
    match parse_command(raw, db) {
        Ok(ast) => ScopeClassification::InScope(ast),
        Err(violations) => ScopeClassification::OutOfScope(violations),
    }
}

/// Apply the corpus cleaning rules: strip shell prompt characters and
/// leading `sudo`, replace absolute utility pathnames with base names,
/// trim surrounding whitespace. Everything else is preserved byte for
/// byte; the function is idempotent.
pub fn clean_command(raw: &str) -> String {
    let mut s = raw.trim();
    loop {
        let mut changed = false;
        for prefix in ["$", "#", "sudo"] {
            if let Some(rest) = s.strip_prefix(prefix) {
                if rest.is_empty() {
                    s = rest;
                    changed = true;
                } else if rest.starts_with(char::is_whitespace) {
                    s = rest.trim_start();
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    strip_utility_paths(s)
}

/// Replace `/abs/path/util` with `util` at statement positions only.
fn strip_utility_paths(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.char_indices().peekable();
    let mut statement_position = true;
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            out.push(c);
            chars.next();
            continue;
        }
        // consume one whitespace-delimited token, quote- and escape-aware
        let mut end = s.len();
        let mut terminator: Option<char> = None;
        let mut quote: Option<char> = None;
        let mut escaped = false;
        for (i, c) in chars.by_ref() {
            if escaped {
                escaped = false;
                end = i + c.len_utf8();
                continue;
            }
            match c {
                '\\' if quote != Some('\'') => escaped = true,
                '\'' | '"' => {
                    if quote == Some(c) {
                        quote = None;
                    } else if quote.is_none() {
                        quote = Some(c);
                    }
                }
                c if quote.is_none() && c.is_whitespace() => {
                    end = i;
                    terminator = Some(c);
                    break;
                }
                _ => {}
            }
            end = i + c.len_utf8();
        }
        let token = &s[start..end];
        if statement_position {
            out.push_str(&replace_abs_path(token));
        } else {
            out.push_str(token);
        }
        if let Some(ws) = terminator {
            out.push(ws);
        }
        statement_position = matches!(
            token,
            "|" | "||" | "&&" | "(" | ";" | "&" | "sudo" | "xargs" | "-exec" | "-execdir" | "-ok"
                | "-okdir" | "nohup" | "time"
        ) || token.ends_with("$(")
            || token.ends_with("<(")
            || token.ends_with('`');
    }
    out.trim().to_string()
}

fn replace_abs_path(token: &str) -> String {
    if !token.starts_with('/') || token.contains(['"', '\'', '$', '`', '*', '?', '[']) {
        return token.to_string();
    }
    match token.rsplit_once('/') {
        Some((_, base))
            if !base.is_empty()
                && base
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '+' | '-')) =>
        {
            base.to_string()
        }
        _ => token.to_string(),
    }
}

pub struct Parser<'a> {
    db: &'a SpecDb,
    permissive: bool,
}

impl<'a> Parser<'a> {
    pub fn new(db: &'a SpecDb, permissive: bool) -> Parser<'a> {
        Parser { db, permissive }
    }

    pub fn parse(&self, raw: &str) -> (Option<CommandAst>, Vec<ScopeViolation>) {
        if raw.trim().is_empty() {
            return (
                None,
                vec![ScopeViolation {
                    kind: ViolationKind::SyntaxError,
                    span: (0, raw.len()),
                    detail: "empty command".into(),
                }],
            );
        }
        if raw.trim_end_matches('\n').contains('\n') {
            return (
                None,
                vec![ScopeViolation {
                    kind: ViolationKind::SyntaxError,
                    span: (0, raw.len()),
                    detail: "command must be a single line".into(),
                }],
            );
        }
        let lexed = lexer::lex(raw.trim_end_matches('\n'));
        let mut violations = lexed.violations;
        let mut cursor = Cursor {
            tokens: &lexed.tokens,
            pos: 0,
            end_offset: raw.len(),
        };
        let node = self.parse_statements(&mut cursor, &mut violations);
        (node.map(|root| CommandAst { root }), violations)
    }

    /// Top level: one command list. Extra statements after `;`/`&` are a
    /// violation but still scanned so their own problems get reported.
    fn parse_statements(
        &self,
        cur: &mut Cursor,
        violations: &mut Vec<ScopeViolation>,
    ) -> Option<Node> {
        let first = self.parse_and_or(cur, violations);
        while let Some(tok) = cur.peek() {
            match tok.op() {
                Some(";") | Some(";;") => {
                    violations.push(ScopeViolation {
                        kind: ViolationKind::CompoundStatement,
                        span: tok.span,
                        detail: "multi-statement sequencing with ';'".into(),
                    });
                    cur.next();
                    self.parse_and_or(cur, violations);
                }
                Some("&") => {
                    violations.push(ScopeViolation {
                        kind: ViolationKind::CompoundStatement,
                        span: tok.span,
                        detail: "background job control '&'".into(),
                    });
                    cur.next();
                    self.parse_and_or(cur, violations);
                }
                Some(")") => {
                    violations.push(ScopeViolation {
                        kind: ViolationKind::SyntaxError,
                        span: tok.span,
                        detail: "unmatched ')'".into(),
                    });
                    cur.next();
                }
                Some("&&") | Some("||") | Some("|") => {
                    // left side failed to produce a node; keep scanning
                    cur.next();
                    self.parse_and_or(cur, violations);
                }
                _ => {
                    self.parse_and_or(cur, violations);
                }
            }
        }
        first
    }

    fn parse_and_or(&self, cur: &mut Cursor, violations: &mut Vec<ScopeViolation>) -> Option<Node> {
        let mut left = self.parse_pipeline(cur, violations)?;
        while let Some(tok) = cur.peek() {
            let op = match tok.op() {
                Some("&&") => LogicalOp::And,
                Some("||") => LogicalOp::Or,
                _ => break,
            };
            cur.next();
            match self.parse_pipeline(cur, violations) {
                Some(right) => {
                    left = Node::Logical(LogicalNode {
                        op,
                        left: Box::new(left),
                        right: Box::new(right),
                    });
                }
                None => break,
            }
        }
        Some(left)
    }

    fn parse_pipeline(
        &self,
        cur: &mut Cursor,
        violations: &mut Vec<ScopeViolation>,
    ) -> Option<Node> {
        let mut stages = vec![self.parse_atom(cur, violations)?];
        while let Some(tok) = cur.peek() {
            if tok.op() != Some("|") {
                break;
            }
            cur.next();
            match self.parse_atom(cur, violations) {
                Some(stage) => stages.push(stage),
                None => break,
            }
        }
        if stages.len() == 1 {
            stages.pop()
        } else {
            Some(Node::Pipeline(PipelineNode { stages }))
        }
    }

    fn parse_atom(&self, cur: &mut Cursor, violations: &mut Vec<ScopeViolation>) -> Option<Node> {
        let tok = cur.peek()?;
        match &tok.kind {
            TokenKind::Op(op) if op == "(" => {
                cur.next();
                let inner = self.parse_and_or(cur, violations);
                match cur.peek() {
                    Some(t) if t.op() == Some(")") => {
                        cur.next();
                    }
                    _ => violations.push(ScopeViolation {
                        kind: ViolationKind::SyntaxError,
                        span: cur.here_span(),
                        detail: "missing ')'".into(),
                    }),
                }
                inner.map(|inner| {
                    Node::Group(GroupNode {
                        inner: Box::new(inner),
                    })
                })
            }
            TokenKind::Op(op) if matches!(op.as_str(), "&&" | "||" | "|" | ")" | ";" | ";;" | "&") => {
                // handled by the caller
                None
            }
            TokenKind::Op(op) => {
                let op = op.clone();
                let span = tok.span;
                report_operator_violation(&op, span, violations);
                cur.next();
                if is_redirect(&op) && cur.peek().is_some_and(|t| t.word().is_some()) {
                    cur.next();
                }
                self.parse_atom(cur, violations)
            }
            TokenKind::Word(_) => self.parse_utility(cur, violations),
        }
    }

    /// Scope-class gate for a command head. Returns whether flags of this
    /// utility should be validated.
    fn head_gate(
        &self,
        name: &str,
        span: (usize, usize),
        violations: &mut Vec<ScopeViolation>,
    ) -> (Option<&'a UtilitySpec>, bool) {
        let spec = self.db.lookup_utility(name);
        match spec {
            None => {
                if !self.permissive {
                    violations.push(ScopeViolation {
                        kind: ViolationKind::UnknownUtility,
                        span,
                        detail: format!("unknown utility '{name}'"),
                    });
                }
                (None, false)
            }
            Some(u) => {
                let ok = match u.scope {
                    ScopeClass::InScope => true,
                    ScopeClass::Interpreter => {
                        violations.push(ScopeViolation {
                            kind: ViolationKind::NestedInterpreter,
                            span,
                            detail: format!("'{name}' embeds non-bash program strings"),
                        });
                        false
                    }
                    ScopeClass::ScriptOnly => {
                        violations.push(ScopeViolation {
                            kind: ViolationKind::CompoundStatement,
                            span,
                            detail: format!("'{name}' is used in multi-statement shell scripts"),
                        });
                        false
                    }
                    ScopeClass::OutOfScope => {
                        violations.push(ScopeViolation {
                            kind: ViolationKind::UnknownUtility,
                            span,
                            detail: format!("utility '{name}' is outside the supported list"),
                        });
                        false
                    }
                };
                (spec, ok)
            }
        }
    }

    fn parse_utility(
        &self,
        cur: &mut Cursor,
        violations: &mut Vec<ScopeViolation>,
    ) -> Option<Node> {
        let head_tok = cur.next()?;
        let head_span = head_tok.span;
        let head = head_tok.word()?;

        // NAME=VALUE at statement position, including NAME=$(...) forms
        let leading_text = match head.parts.first() {
            Some(crate::lexer::RawPart::Text(t)) => t.as_str(),
            _ => "",
        };
        if !head.is_pure_text() && !is_assignment_word(leading_text) {
            violations.push(ScopeViolation {
                kind: ViolationKind::SyntaxError,
                span: head_span,
                detail: "command name must be a plain word".into(),
            });
            self.skip_segment(cur);
            return None;
        }
        let name = if head.is_pure_text() {
            head.text()
        } else {
            leading_text.to_string()
        };

        if is_assignment_word(&name) {
            violations.push(ScopeViolation {
                kind: ViolationKind::VariableAssignment,
                span: head_span,
                detail: format!("variable assignment '{name}'"),
            });
            // an env-prefixed command may still follow
            if cur.peek().is_some_and(|t| t.word().is_some()) {
                return self.parse_utility(cur, violations);
            }
            return None;
        }

        if COMPOUND_KEYWORDS.contains(&name.as_str()) {
            violations.push(ScopeViolation {
                kind: ViolationKind::CompoundStatement,
                span: head_span,
                detail: format!("compound statement keyword '{name}'"),
            });
            cur.skip_all();
            return None;
        }

        let (spec, validate_flags) = self.head_gate(&name, head_span, violations);
        let mut node = UtilityNode {
            name,
            known: spec.is_some(),
            elements: Vec::new(),
        };
        self.parse_elements(cur, spec, validate_flags, &mut node, violations);
        Some(Node::Utility(node))
    }

    /// Consume the rest of the current segment into `node`.
    fn parse_elements(
        &self,
        cur: &mut Cursor,
        spec: Option<&UtilitySpec>,
        validate_flags: bool,
        node: &mut UtilityNode,
        violations: &mut Vec<ScopeViolation>,
    ) {
        let mut no_more_flags = false;
        while let Some(tok) = cur.peek() {
            match &tok.kind {
                TokenKind::Op(op)
                    if matches!(op.as_str(), "|" | "&&" | "||" | ")" | ";" | ";;" | "&") =>
                {
                    return;
                }
                TokenKind::Op(op) if op == "(" => {
                    let span = tok.span;
                    if cur.peek_at(1).and_then(|t| t.op()) == Some(")") {
                        violations.push(ScopeViolation {
                            kind: ViolationKind::CompoundStatement,
                            span,
                            detail: "function definition".into(),
                        });
                        cur.next();
                        cur.next();
                    } else {
                        violations.push(ScopeViolation {
                            kind: ViolationKind::SyntaxError,
                            span,
                            detail: "unexpected '('".into(),
                        });
                        cur.next();
                    }
                }
                TokenKind::Op(op) => {
                    let op = op.clone();
                    let span = tok.span;
                    report_operator_violation(&op, span, violations);
                    cur.next();
                    if is_redirect(&op) && cur.peek().is_some_and(|t| t.word().is_some()) {
                        cur.next();
                    }
                }
                TokenKind::Word(word) => {
                    let word = word.clone();
                    let span = tok.span;
                    cur.next();
                    if word.is_pure_text() && word.text() == "--" {
                        no_more_flags = true;
                        node.elements.push(CmdElement::Operator { text: "--".into() });
                        continue;
                    }
                    self.parse_word_element(
                        cur,
                        word,
                        span,
                        spec,
                        validate_flags,
                        !no_more_flags,
                        node,
                        violations,
                    );
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn parse_word_element(
        &self,
        cur: &mut Cursor,
        word: Word,
        span: (usize, usize),
        spec: Option<&UtilitySpec>,
        validate_flags: bool,
        flags_allowed: bool,
        node: &mut UtilityNode,
        violations: &mut Vec<ScopeViolation>,
    ) {
        let text = if word.is_pure_text() {
            word.text()
        } else {
            String::new()
        };

        // find-style expression operators and the end-of-flags marker
        if matches!(text.as_str(), "!" | "\\(" | "\\)" | "," | "--") {
            node.elements.push(CmdElement::Operator { text });
            return;
        }

        if flags_allowed && text.len() > 1 && text.starts_with('-') {
            if validate_flags {
                let spec = spec.expect("validate_flags implies spec");
                self.parse_flag(cur, &text, span, spec, node, violations);
            } else {
                node.elements.push(CmdElement::Flag(FlagBinding {
                    flag: text,
                    known: false,
                    value: None,
                }));
            }
            return;
        }

        // dash-less flag cluster as the first word (`tar xvf a.tar`)
        if let Some(u) = spec {
            if u.idiomatic_forms.contains(&IdiomaticForm::BareCluster)
                && node.elements.is_empty()
                && word.is_pure_text()
                && text.len() > 1
                && text.chars().all(|c| c.is_ascii_alphanumeric())
            {
                if let Some(bindings) =
                    self.try_cluster(cur, &format!("-{text}"), u, violations)
                {
                    node.elements.extend(bindings);
                    return;
                }
            }
        }

        // command-prefix utilities: an unquoted command-name-like positional
        // starts the nested command that spans the rest of the segment
        if let Some(u) = spec {
            if u.idiomatic_forms.contains(&IdiomaticForm::CommandTail)
                && word.is_pure_text()
                && is_command_name(&text)
            {
                let (inner_spec, inner_validate) = self.head_gate(&text, span, violations);
                let mut inner = UtilityNode {
                    name: text,
                    known: inner_spec.is_some(),
                    elements: Vec::new(),
                };
                self.parse_elements(cur, inner_spec, inner_validate, &mut inner, violations);
                node.elements.push(CmdElement::CommandTail {
                    command: Box::new(Node::Utility(inner)),
                });
                return;
            }
        }

        let arg = self.word_to_arg(word, violations);
        node.elements.push(CmdElement::Arg(arg));
    }

    fn parse_flag(
        &self,
        cur: &mut Cursor,
        text: &str,
        span: (usize, usize),
        spec: &UtilitySpec,
        node: &mut UtilityNode,
        violations: &mut Vec<ScopeViolation>,
    ) {
        // --long=value / -flag=value
        if let Some((name, value)) = text.split_once('=') {
            if name.starts_with("--") || spec.find_flag(name).is_some() {
                match spec.find_flag(name) {
                    Some(flag) => node.elements.push(CmdElement::Flag(FlagBinding {
                        flag: flag.short_form.clone(),
                        known: true,
                        value: Some(FlagValue::Arg(ArgNode::literal(value))),
                    })),
                    None => self.unknown_flag(name, span, spec, node, violations),
                }
                return;
            }
        }

        if let Some(flag) = spec.find_flag(text) {
            let canonical = flag.short_form.clone();
            if spec.exec_terminated(&canonical) {
                let value = self.parse_exec_value(cur, span, violations);
                node.elements.push(CmdElement::Flag(FlagBinding {
                    flag: canonical,
                    known: true,
                    value,
                }));
                return;
            }
            let value = match flag.arity {
                FlagArity::RequiredValue => {
                    let taken = self.take_value_word(cur, violations);
                    if taken.is_none() && !self.permissive {
                        violations.push(ScopeViolation {
                            kind: ViolationKind::SyntaxError,
                            span,
                            detail: format!("flag '{}' of '{}' requires a value", text, spec.name),
                        });
                    }
                    taken.map(FlagValue::Arg)
                }
                FlagArity::None | FlagArity::OptionalValue => None,
            };
            node.elements.push(CmdElement::Flag(FlagBinding {
                flag: canonical,
                known: true,
                value,
            }));
            return;
        }

        // -NUM count shorthand (tail -5)
        if text[1..].chars().all(|c| c.is_ascii_digit()) {
            if let Some(canonical) = spec.dash_number_canonical() {
                node.elements.push(CmdElement::Flag(FlagBinding {
                    flag: canonical.to_string(),
                    known: true,
                    value: Some(FlagValue::Arg(ArgNode::literal(&text[1..]))),
                }));
                return;
            }
        }

        if !text.starts_with("--") {
            // short flag with attached value: -n5, -I{}
            let mut best: Option<(&FlagSpec, &str)> = None;
            for flag in &spec.flags {
                if flag.arity == FlagArity::None || flag.short_form.len() <= 1 {
                    continue;
                }
                if let Some(rest) = text.strip_prefix(flag.short_form.as_str()) {
                    if !rest.is_empty()
                        && best.is_none_or(|(b, _)| flag.short_form.len() > b.short_form.len())
                    {
                        best = Some((flag, rest));
                    }
                }
            }
            if let Some((flag, rest)) = best {
                node.elements.push(CmdElement::Flag(FlagBinding {
                    flag: flag.short_form.clone(),
                    known: true,
                    value: Some(FlagValue::Arg(ArgNode::literal(rest))),
                }));
                return;
            }

            if let Some(bindings) = self.try_cluster(cur, text, spec, violations) {
                node.elements.extend(bindings);
                return;
            }
        }

        self.unknown_flag(text, span, spec, node, violations);
    }

    fn unknown_flag(
        &self,
        text: &str,
        span: (usize, usize),
        spec: &UtilitySpec,
        node: &mut UtilityNode,
        violations: &mut Vec<ScopeViolation>,
    ) {
        if !self.permissive {
            violations.push(ScopeViolation {
                kind: ViolationKind::SyntaxError,
                span,
                detail: format!("unknown flag '{}' for utility '{}'", text, spec.name),
            });
        }
        node.elements.push(CmdElement::Flag(FlagBinding {
            flag: text.to_string(),
            known: false,
            value: None,
        }));
    }

    /// `-cvf value`: every character must resolve as a single-char flag;
    /// a value-taking inner flag consumes the remaining characters, a
    /// value-taking final flag consumes the next word.
    fn try_cluster(
        &self,
        cur: &mut Cursor,
        text: &str,
        spec: &UtilitySpec,
        violations: &mut Vec<ScopeViolation>,
    ) -> Option<Vec<CmdElement>> {
        let chars: Vec<char> = text[1..].chars().collect();
        if chars.len() < 2 {
            return None;
        }
        let mut resolved: Vec<&FlagSpec> = Vec::new();
        for (i, c) in chars.iter().enumerate() {
            let name = format!("-{c}");
            let flag = spec.flags.iter().find(|f| f.short_form == name)?;
            resolved.push(flag);
            if flag.arity == FlagArity::RequiredValue && i + 1 < chars.len() {
                let rest: String = chars[i + 1..].iter().collect();
                let mut out: Vec<CmdElement> = resolved[..resolved.len() - 1]
                    .iter()
                    .map(|f| {
                        CmdElement::Flag(FlagBinding {
                            flag: f.short_form.clone(),
                            known: true,
                            value: None,
                        })
                    })
                    .collect();
                out.push(CmdElement::Flag(FlagBinding {
                    flag: flag.short_form.clone(),
                    known: true,
                    value: Some(FlagValue::Arg(ArgNode::literal(rest))),
                }));
                return Some(out);
            }
        }
        let mut out = Vec::new();
        let last = resolved.len() - 1;
        for (i, flag) in resolved.iter().enumerate() {
            let value = if i == last && flag.arity == FlagArity::RequiredValue {
                self.take_value_word(cur, violations).map(FlagValue::Arg)
            } else {
                None
            };
            out.push(CmdElement::Flag(FlagBinding {
                flag: flag.short_form.clone(),
                known: true,
                value,
            }));
        }
        Some(out)
    }

    fn take_value_word(
        &self,
        cur: &mut Cursor,
        violations: &mut Vec<ScopeViolation>,
    ) -> Option<ArgNode> {
        match cur.peek() {
            Some(tok) if tok.word().is_some() => {
                let word = tok.word().unwrap().clone();
                cur.next();
                Some(self.word_to_arg(word, violations))
            }
            _ => None,
        }
    }

    /// `-exec CMD args... \;` or `+`.
    fn parse_exec_value(
        &self,
        cur: &mut Cursor,
        flag_span: (usize, usize),
        violations: &mut Vec<ScopeViolation>,
    ) -> Option<FlagValue> {
        let head = match cur.peek() {
            Some(t) if t.word().is_some() => {
                let w = t.word().unwrap().clone();
                cur.next();
                w
            }
            _ => {
                violations.push(ScopeViolation {
                    kind: ViolationKind::SyntaxError,
                    span: flag_span,
                    detail: "missing command after exec-style flag".into(),
                });
                return None;
            }
        };
        let name = head.text();
        let (inner_spec, inner_validate) = self.head_gate(&name, flag_span, violations);
        let mut inner = UtilityNode {
            name,
            known: inner_spec.is_some(),
            elements: Vec::new(),
        };
        let mut terminator = None;
        while let Some(tok) = cur.peek() {
            match &tok.kind {
                TokenKind::Word(w) if w.is_pure_text() && is_exec_semicolon(&w.text()) => {
                    cur.next();
                    terminator = Some(ExecTerminator::Semicolon);
                    break;
                }
                TokenKind::Word(w) if w.is_pure_text() && w.text() == "+" => {
                    cur.next();
                    terminator = Some(ExecTerminator::Plus);
                    break;
                }
                TokenKind::Word(w) => {
                    let word = w.clone();
                    let span = tok.span;
                    cur.next();
                    self.parse_word_element(
                        cur,
                        word,
                        span,
                        inner_spec,
                        inner_validate,
                        true,
                        &mut inner,
                        violations,
                    );
                }
                TokenKind::Op(_) => break,
            }
        }
        if terminator.is_none() && !self.permissive {
            violations.push(ScopeViolation {
                kind: ViolationKind::SyntaxError,
                span: flag_span,
                detail: "exec-style flag not terminated by '\\;' or '+'".into(),
            });
        }
        Some(FlagValue::ExecCommand {
            command: Box::new(Node::Utility(inner)),
            terminator: terminator.unwrap_or(ExecTerminator::Semicolon),
        })
    }

    fn word_to_arg(&self, word: Word, violations: &mut Vec<ScopeViolation>) -> ArgNode {
        let mut parts = Vec::new();
        for part in word.parts {
            match part {
                RawPart::Text(t) => parts.push(WordPart::Literal { text: t }),
                RawPart::CmdSubst(tokens) => {
                    if let Some(cmd) = self.parse_token_list(&tokens, violations) {
                        parts.push(WordPart::CommandSubst {
                            command: Box::new(cmd),
                        });
                    }
                }
                RawPart::ProcSubst(tokens) => {
                    if let Some(cmd) = self.parse_token_list(&tokens, violations) {
                        parts.push(WordPart::ProcessSubst {
                            command: Box::new(cmd),
                        });
                    }
                }
                RawPart::OutProcSubst(tokens) => {
                    violations.push(ScopeViolation {
                        kind: ViolationKind::IoRedirection,
                        span: token_list_span(&tokens),
                        detail: "output process substitution '>(...)'".into(),
                    });
                    if let Some(cmd) = self.parse_token_list(&tokens, violations) {
                        parts.push(WordPart::ProcessSubst {
                            command: Box::new(cmd),
                        });
                    }
                }
            }
        }
        if parts.is_empty() {
            parts.push(WordPart::Literal {
                text: String::new(),
            });
        }
        ArgNode {
            parts,
            semantic_type: None,
        }
    }

    fn parse_token_list(
        &self,
        tokens: &[Token],
        violations: &mut Vec<ScopeViolation>,
    ) -> Option<Node> {
        if tokens.is_empty() {
            return None;
        }
        let mut cursor = Cursor {
            tokens,
            pos: 0,
            end_offset: tokens.last().map(|t| t.span.1).unwrap_or(0),
        };
        self.parse_statements(&mut cursor, violations)
    }

    fn skip_segment(&self, cur: &mut Cursor) {
        while let Some(tok) = cur.peek() {
            if matches!(tok.op(), Some("|") | Some("&&") | Some("||") | Some(")")) {
                break;
            }
            cur.next();
        }
    }
}

fn report_operator_violation(
    op: &str,
    span: (usize, usize),
    violations: &mut Vec<ScopeViolation>,
) {
    let (kind, detail) = match op {
        o if o.contains('<') || o.contains('>') => (
            ViolationKind::IoRedirection,
            format!("I/O redirection '{op}'"),
        ),
        ";" | ";;" => (
            ViolationKind::CompoundStatement,
            "multi-statement sequencing with ';'".to_string(),
        ),
        "&" => (
            ViolationKind::CompoundStatement,
            "background job control '&'".to_string(),
        ),
        _ => (ViolationKind::SyntaxError, format!("unexpected '{op}'")),
    };
    violations.push(ScopeViolation { kind, span, detail });
}

fn is_redirect(op: &str) -> bool {
    op.contains('<') || op.contains('>')
}

fn is_exec_semicolon(text: &str) -> bool {
    matches!(text, "\\;" | "';'" | "\";\"")
}

fn is_assignment_word(text: &str) -> bool {
    let Some(eq) = text.find('=') else {
        return false;
    };
    if eq == 0 {
        return false;
    }
    let name = &text[..eq];
    name.chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Bare words that can head a nested command: `xargs rm`, `nohup make`.
fn is_command_name(text: &str) -> bool {
    let mut chars = text.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic())
        && text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '+' | '-'))
}

fn token_list_span(tokens: &[Token]) -> (usize, usize) {
    match (tokens.first(), tokens.last()) {
        (Some(a), Some(b)) => (a.span.0, b.span.1),
        _ => (0, 0),
    }
}

struct Cursor<'t> {
    tokens: &'t [Token],
    pos: usize,
    end_offset: usize,
}

impl<'t> Cursor<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + ahead)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn here_span(&self) -> (usize, usize) {
        self.peek()
            .map(|t| t.span)
            .unwrap_or((self.end_offset, self.end_offset))
    }

    fn skip_all(&mut self) {
        self.pos = self.tokens.len();
    }
}
