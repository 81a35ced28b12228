//! Quote-aware lexer for one-liner commands.
//!
//! Produces a flat token stream per command segment; command and process
//! substitutions are lexed recursively and carried inside the word token
//! that contains them. All spans are byte offsets into the original input.

use crate::ast::{ScopeViolation, ViolationKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawPart {
    /// Literal text exactly as written, including quotes and escapes.
    Text(String),
    /// `$( ... )` or backtick substitution.
    CmdSubst(Vec<Token>),
    /// `<( ... )`.
    ProcSubst(Vec<Token>),
    /// `>( ... )`; always out of scope, flagged by the parser.
    OutProcSubst(Vec<Token>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub parts: Vec<RawPart>,
}

impl Word {
    pub fn is_pure_text(&self) -> bool {
        self.parts.iter().all(|p| matches!(p, RawPart::Text(_)))
    }

    /// Written form for pure-text words; empty string otherwise.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for p in &self.parts {
            if let RawPart::Text(t) = p {
                out.push_str(t);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Word(Word),
    /// `|`, `&&`, `||`, `(`, `)`, `;`, `&`, and the redirection operators
    /// (`<`, `<<`, `>`, `>>`, `2>`, `&>`, ...).
    Op(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: (usize, usize),
}

impl Token {
    pub fn op(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Op(s) => Some(s),
            TokenKind::Word(_) => None,
        }
    }

    pub fn word(&self) -> Option<&Word> {
        match &self.kind {
            TokenKind::Word(w) => Some(w),
            TokenKind::Op(_) => None,
        }
    }
}

pub struct LexOutput {
    pub tokens: Vec<Token>,
    pub violations: Vec<ScopeViolation>,
}

pub fn lex(input: &str) -> LexOutput {
    let mut lexer = Lexer {
        chars: input.char_indices().collect(),
        len: input.len(),
        pos: 0,
        violations: Vec::new(),
    };
    let tokens = lexer.run(0);
    LexOutput {
        tokens,
        violations: lexer.violations,
    }
}

struct Lexer {
    chars: Vec<(usize, char)>,
    len: usize,
    pos: usize,
    violations: Vec<ScopeViolation>,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.len, |&(o, _)| o)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    /// Lex until end of input (depth 0) or until the `)` closing the
    /// current substitution (depth > 0); that `)` is consumed.
    fn run(&mut self, depth: usize) -> Vec<Token> {
        let mut tokens = Vec::new();
        let mut closed = false;
        let region_start = self.offset();
        loop {
            while matches!(self.peek(), Some(c) if c.is_whitespace()) {
                self.pos += 1;
            }
            let start = self.offset();
            let Some(c) = self.peek() else { break };
            match c {
                ')' if depth > 0 => {
                    self.pos += 1;
                    closed = true;
                    break;
                }
                '|' | '&' | ';' | '(' | ')' | '<' | '>' => {
                    if let Some(tok) = self.lex_operator_or_word(depth) {
                        tokens.push(tok);
                    }
                }
                c if c.is_ascii_digit() && self.digit_redirect() => {
                    let mut text = String::new();
                    while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                        text.push(self.bump().unwrap());
                    }
                    text.push(self.bump().unwrap());
                    if self.peek() == Some('>') || self.peek() == Some('<') {
                        text.push(self.bump().unwrap());
                    }
                    if self.peek() == Some('&') {
                        text.push(self.bump().unwrap());
                        while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                            text.push(self.bump().unwrap());
                        }
                    }
                    tokens.push(Token {
                        kind: TokenKind::Op(text),
                        span: (start, self.offset()),
                    });
                }
                _ => {
                    let word = self.lex_word(depth);
                    tokens.push(Token {
                        kind: TokenKind::Word(word),
                        span: (start, self.offset()),
                    });
                }
            }
        }
        if depth > 0 && !closed {
            self.violations.push(ScopeViolation {
                kind: ViolationKind::SyntaxError,
                span: (region_start, self.len),
                detail: "unterminated substitution".into(),
            });
        }
        tokens
    }

    /// True when the cursor sits on `N>` / `N<` / `N>&M` style redirection.
    fn digit_redirect(&self) -> bool {
        let mut i = 0;
        while matches!(self.peek_at(i), Some(c) if c.is_ascii_digit()) {
            i += 1;
        }
        i > 0 && matches!(self.peek_at(i), Some('>') | Some('<'))
    }

    fn lex_operator_or_word(&mut self, depth: usize) -> Option<Token> {
        let start = self.offset();
        let c = self.peek().unwrap();
        let two: Option<char> = self.peek_at(1);
        let op = |this: &mut Self, text: &str, n: usize| {
            this.pos += n;
            Some(Token {
                kind: TokenKind::Op(text.to_string()),
                span: (start, this.offset()),
            })
        };
        match (c, two) {
            ('|', Some('|')) => op(self, "||", 2),
            ('|', _) => op(self, "|", 1),
            ('&', Some('&')) => op(self, "&&", 2),
            ('&', Some('>')) => op(self, "&>", 2),
            ('&', _) => op(self, "&", 1),
            (';', Some(';')) => op(self, ";;", 2),
            (';', _) => op(self, ";", 1),
            ('(', _) => op(self, "(", 1),
            (')', _) => op(self, ")", 1),
            ('<', Some('(')) | ('>', Some('(')) => {
                // process substitution opens a word
                let word = self.lex_word(depth);
                Some(Token {
                    kind: TokenKind::Word(word),
                    span: (start, self.offset()),
                })
            }
            ('<', Some('<')) => op(self, "<<", 2),
            ('<', _) => op(self, "<", 1),
            ('>', Some('>')) => op(self, ">>", 2),
            ('>', _) => op(self, ">", 1),
            _ => None,
        }
    }

    fn lex_word(&mut self, depth: usize) -> Word {
        let mut parts: Vec<RawPart> = Vec::new();
        let mut text = String::new();

        macro_rules! flush {
            () => {
                if !text.is_empty() {
                    parts.push(RawPart::Text(std::mem::take(&mut text)));
                }
            };
        }

        while let Some(c) = self.peek() {
            match c {
                c if c.is_whitespace() => break,
                '|' | '&' | ';' | '(' | ')' => break,
                '<' | '>' => {
                    if self.peek_at(1) == Some('(') {
                        let outgoing = c == '>';
                        self.pos += 2;
                        let inner = self.run(depth + 1);
                        flush!();
                        parts.push(if outgoing {
                            RawPart::OutProcSubst(inner)
                        } else {
                            RawPart::ProcSubst(inner)
                        });
                    } else {
                        break;
                    }
                }
                '\\' => {
                    text.push(self.bump().unwrap());
                    if let Some(next) = self.bump() {
                        text.push(next);
                    }
                }
                '\'' => {
                    let start = self.offset();
                    text.push(self.bump().unwrap());
                    loop {
                        match self.bump() {
                            Some('\'') => {
                                text.push('\'');
                                break;
                            }
                            Some(c) => text.push(c),
                            None => {
                                self.violations.push(ScopeViolation {
                                    kind: ViolationKind::SyntaxError,
                                    span: (start, self.len),
                                    detail: "unterminated single quote".into(),
                                });
                                break;
                            }
                        }
                    }
                }
                '"' => {
                    let start = self.offset();
                    text.push(self.bump().unwrap());
                    loop {
                        match self.peek() {
                            Some('"') => {
                                text.push(self.bump().unwrap());
                                break;
                            }
                            Some('\\') => {
                                text.push(self.bump().unwrap());
                                if let Some(next) = self.bump() {
                                    text.push(next);
                                }
                            }
                            Some('$') if self.peek_at(1) == Some('(') => {
                                self.pos += 2;
                                let inner = self.run(depth + 1);
                                flush!();
                                parts.push(RawPart::CmdSubst(inner));
                            }
                            Some('`') => {
                                self.pos += 1;
                                let inner = self.lex_backtick();
                                flush!();
                                parts.push(RawPart::CmdSubst(inner));
                            }
                            Some(_) => text.push(self.bump().unwrap()),
                            None => {
                                self.violations.push(ScopeViolation {
                                    kind: ViolationKind::SyntaxError,
                                    span: (start, self.len),
                                    detail: "unterminated double quote".into(),
                                });
                                break;
                            }
                        }
                    }
                }
                '$' if self.peek_at(1) == Some('(') => {
                    self.pos += 2;
                    let inner = self.run(depth + 1);
                    flush!();
                    parts.push(RawPart::CmdSubst(inner));
                }
                '`' => {
                    self.pos += 1;
                    let inner = self.lex_backtick();
                    flush!();
                    parts.push(RawPart::CmdSubst(inner));
                }
                _ => text.push(self.bump().unwrap()),
            }
        }
        if !text.is_empty() {
            parts.push(RawPart::Text(text));
        }
        if parts.is_empty() {
            parts.push(RawPart::Text(String::new()));
        }
        Word { parts }
    }

    /// Backtick substitution: find the closing backtick, lex the slice.
    fn lex_backtick(&mut self) -> Vec<Token> {
        let start_pos = self.pos;
        let open = self.offset();
        let mut end_pos = None;
        let mut i = self.pos;
        while let Some(&(_, c)) = self.chars.get(i) {
            if c == '\\' {
                i += 2;
                continue;
            }
            if c == '`' {
                end_pos = Some(i);
                break;
            }
            i += 1;
        }
        let Some(end) = end_pos else {
            self.violations.push(ScopeViolation {
                kind: ViolationKind::SyntaxError,
                span: (open, self.len),
                detail: "unterminated backtick substitution".into(),
            });
            self.pos = self.chars.len();
            return Vec::new();
        };
        // lex the inner span in place by bounding the scan
        let saved: Vec<(usize, char)> = self.chars.drain(end..).collect();
        self.pos = start_pos;
        let tokens = self.run(0);
        self.chars.extend(saved);
        self.pos = end + 1; // past the closing backtick
        tokens
    }
}
