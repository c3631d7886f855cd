//! Tokenizer for the Python dialect found in notebook code cells.
//!
//! Produces the logical token stream (with `Newline`, `Indent` and `Dedent`
//! markers) consumed by the parser, and keeps comments on the side so that
//! line-oriented metrics can see them.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Name,
    Keyword,
    Number,
    Str,
    Op,
    Newline,
    Indent,
    Dedent,
    EndMarker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based physical line where the token starts.
    pub line: usize,
    /// 0-based character column where the token starts.
    pub col: usize,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == kw
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub line: usize,
    pub col: usize,
    /// Comment text including the leading `#`.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for LexError {}

#[derive(Debug, Clone, Default)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub comments: Vec<Comment>,
}

impl TokenStream {
    /// Identifier tokens (non-keyword names).
    pub fn identifiers(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.kind == TokenKind::Name)
    }

    /// Literal constant tokens: numbers, strings, `True`/`False`/`None`, `...`.
    pub fn literals(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| is_literal(t))
    }
}

pub fn is_literal(t: &Token) -> bool {
    match t.kind {
        TokenKind::Number | TokenKind::Str => true,
        TokenKind::Keyword => matches!(t.text.as_str(), "True" | "False" | "None"),
        TokenKind::Op => t.text == "...",
        _ => false,
    }
}

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==",
    "!=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@",
    "&", "|", "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ";", ".", "=",
];

const TAB_SIZE: usize = 8;

pub fn tokenize(source: &str) -> Result<TokenStream, LexError> {
    Lexer::new(source).run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    line_start: usize,
    depth: usize,
    indents: Vec<usize>,
    out: TokenStream,
}

impl Lexer {
    fn new(source: &str) -> Self {
        Self {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            line_start: 0,
            depth: 0,
            indents: vec![0],
            out: TokenStream::default(),
        }
    }

    fn err(&self, message: impl Into<String>) -> LexError {
        LexError { line: self.line, message: message.into() }
    }

    fn peek(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn col(&self) -> usize {
        self.pos - self.line_start
    }

    fn push(&mut self, kind: TokenKind, text: String, line: usize, col: usize) {
        self.out.tokens.push(Token { kind, text, line, col });
    }

    fn newline(&mut self) {
        // Caller has consumed the line terminator.
        self.line += 1;
        self.line_start = self.pos;
    }

    fn last_is_logical_break(&self) -> bool {
        matches!(
            self.out.tokens.last().map(|t| &t.kind),
            None | Some(TokenKind::Newline) | Some(TokenKind::Indent) | Some(TokenKind::Dedent)
        )
    }

    fn run(mut self) -> Result<TokenStream, LexError> {
        let mut at_line_start = true;
        while self.pos < self.chars.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indentation()? {
                    continue;
                }
            }
            let c = self.chars[self.pos];
            match c {
                ' ' | '\t' | '\x0c' => self.pos += 1,
                '\r' => {
                    self.pos += 1;
                    if self.peek(0) == Some('\n') {
                        self.pos += 1;
                    }
                    self.end_physical_line();
                    at_line_start = true;
                }
                '\n' => {
                    self.pos += 1;
                    self.end_physical_line();
                    at_line_start = true;
                }
                '#' => self.comment(),
                '\\' => {
                    let next = self.peek(1);
                    if next == Some('\n') || next == Some('\r') {
                        self.pos += 1;
                        if self.peek(0) == Some('\r') {
                            self.pos += 1;
                        }
                        if self.peek(0) == Some('\n') {
                            self.pos += 1;
                        }
                        self.newline();
                    } else if next.is_none() {
                        return Err(self.err("unexpected end of input after line continuation"));
                    } else {
                        return Err(self.err("unexpected character after line continuation"));
                    }
                }
                '0'..='9' => self.number()?,
                '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.number()?,
                '"' | '\'' => self.string(0)?,
                c if is_ident_start(c) => self.name_or_prefixed_string()?,
                _ => self.operator()?,
            }
        }
        if !self.last_is_logical_break() {
            let (line, col) = (self.line, self.col());
            self.push(TokenKind::Newline, String::new(), line, col);
        }
        if self.depth > 0 {
            return Err(self.err("unexpected end of input inside brackets"));
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            let line = self.line;
            self.push(TokenKind::Dedent, String::new(), line, 0);
        }
        let line = self.line;
        self.push(TokenKind::EndMarker, String::new(), line, 0);
        Ok(self.out)
    }

    fn end_physical_line(&mut self) {
        if self.depth == 0 && !self.last_is_logical_break() {
            let col = self.col().saturating_sub(1);
            let line = self.line;
            self.push(TokenKind::Newline, String::new(), line, col);
        }
        self.newline();
    }

    /// Measures the indentation of a new logical line. Returns true when the
    /// line was blank or comment-only and has been skipped entirely.
    fn handle_indentation(&mut self) -> Result<bool, LexError> {
        let mut width = 0usize;
        let mut p = self.pos;
        while let Some(&c) = self.chars.get(p) {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / TAB_SIZE + 1) * TAB_SIZE,
                '\x0c' => width = 0,
                _ => break,
            }
            p += 1;
        }
        match self.chars.get(p) {
            None | Some('\n') | Some('\r') | Some('#') => {
                // Blank or comment-only line; indentation is irrelevant.
                self.pos = p;
                return Ok(true);
            }
            _ => {}
        }
        self.pos = p;
        let current = *self.indents.last().expect("indent stack never empty");
        let line = self.line;
        if width > current {
            self.indents.push(width);
            self.push(TokenKind::Indent, String::new(), line, 0);
        } else if width < current {
            while *self.indents.last().expect("indent stack never empty") > width {
                self.indents.pop();
                self.push(TokenKind::Dedent, String::new(), line, 0);
            }
            if *self.indents.last().expect("indent stack never empty") != width {
                return Err(self.err("unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn comment(&mut self) {
        let start = self.pos;
        let col = self.col();
        while let Some(c) = self.peek(0) {
            if c == '\n' || c == '\r' {
                break;
            }
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        self.out.comments.push(Comment { line: self.line, col, text });
    }

    fn operator(&mut self) -> Result<(), LexError> {
        let (line, col) = (self.line, self.col());
        for op in OPERATORS {
            let n = op.chars().count();
            if self.pos + n <= self.chars.len()
                && op.chars().zip(&self.chars[self.pos..self.pos + n]).all(|(a, &b)| a == b)
            {
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => {
                        if self.depth == 0 {
                            return Err(self.err(format!("unmatched '{op}'")));
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.pos += n;
                self.push(TokenKind::Op, (*op).to_string(), line, col);
                return Ok(());
            }
        }
        Err(self.err(format!("invalid character {:?}", self.chars[self.pos])))
    }

    fn name_or_prefixed_string(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let (line, col) = (self.line, self.col());
        while self.peek(0).is_some_and(is_ident_continue) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if matches!(self.peek(0), Some('"') | Some('\'')) && is_string_prefix(&text) {
            self.pos = start;
            return self.string(text.chars().count());
        }
        let kind = if KEYWORDS.contains(&text.as_str()) {
            TokenKind::Keyword
        } else {
            TokenKind::Name
        };
        self.push(kind, text, line, col);
        Ok(())
    }

    fn string(&mut self, prefix_len: usize) -> Result<(), LexError> {
        let start = self.pos;
        let (line, col) = (self.line, self.col());
        self.pos += prefix_len;
        let quote = self.chars[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        loop {
            let Some(c) = self.peek(0) else {
                return Err(LexError { line, message: "unterminated string literal".into() });
            };
            match c {
                '\\' => {
                    self.pos += 1;
                    match self.peek(0) {
                        Some('\r') => {
                            self.pos += 1;
                            if self.peek(0) == Some('\n') {
                                self.pos += 1;
                            }
                            self.newline();
                        }
                        Some('\n') => {
                            self.pos += 1;
                            self.newline();
                        }
                        Some(_) => self.pos += 1,
                        None => {}
                    }
                }
                '\n' | '\r' => {
                    if !triple {
                        return Err(LexError { line, message: "unterminated string literal".into() });
                    }
                    self.pos += 1;
                    if c == '\r' && self.peek(0) == Some('\n') {
                        self.pos += 1;
                    }
                    self.newline();
                }
                c if c == quote => {
                    if triple {
                        if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                            self.pos += 3;
                            break;
                        }
                        self.pos += 1;
                    } else {
                        self.pos += 1;
                        break;
                    }
                }
                _ => self.pos += 1,
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        self.push(TokenKind::Str, text, line, col);
        Ok(())
    }

    fn number(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let (line, col) = (self.line, self.col());
        let radix_prefix = self.peek(0) == Some('0')
            && matches!(self.peek(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B'));
        if radix_prefix {
            self.pos += 2;
            let radix = match self.chars[self.pos - 1].to_ascii_lowercase() {
                'x' => 16,
                'o' => 8,
                _ => 2,
            };
            let digits_start = self.pos;
            while self.peek(0).is_some_and(|c| c == '_' || c.is_digit(radix)) {
                self.pos += 1;
            }
            if self.pos == digits_start {
                return Err(self.err("invalid numeric literal"));
            }
        } else {
            self.digits();
            if self.peek(0) == Some('.') {
                self.pos += 1;
                self.digits();
            }
            if matches!(self.peek(0), Some('e' | 'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.peek(0), Some('+' | '-')) {
                    self.pos += 1;
                }
                if self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.digits();
                } else {
                    self.pos = save;
                }
            }
            if matches!(self.peek(0), Some('j' | 'J')) {
                self.pos += 1;
            }
        }
        if self.peek(0).is_some_and(is_ident_start) {
            return Err(self.err("invalid numeric literal"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        self.push(TokenKind::Number, text, line, col);
        Ok(())
    }

    fn digits(&mut self) {
        while self.peek(0).is_some_and(|c| c.is_ascii_digit() || c == '_') {
            self.pos += 1;
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn is_string_prefix(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    matches!(
        lower.as_str(),
        "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
    )
}
