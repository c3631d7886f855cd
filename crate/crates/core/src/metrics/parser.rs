//! Recursive-descent parser for notebook Python cells.
//!
//! Covers the statement and expression grammar of Python 3.8+ except
//! structural pattern matching and `type` aliases; cells using those fail to
//! parse and are dropped from the corpus like any other unparseable cell.

use std::fmt;

use super::ast::*;
use super::lexer::{self, LexError, Token, TokenKind, TokenStream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError { line: e.line, message: e.message }
    }
}

type PResult<T> = Result<T, ParseError>;

/// Tokenizes and parses a cell.
pub fn parse(source: &str) -> PResult<(TokenStream, Module)> {
    let stream = lexer::tokenize(source)?;
    let module = parse_tokens(&stream.tokens)?;
    Ok((stream, module))
}

pub fn parse_tokens(tokens: &[Token]) -> PResult<Module> {
    let mut p = Parser { tokens, pos: 0 };
    let mut body = Vec::new();
    while !p.at(TokenKind::EndMarker) {
        if p.at(TokenKind::Newline) {
            p.pos += 1;
            continue;
        }
        p.statement(&mut body)?;
    }
    Ok(Module { body })
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

const AUG_OPS: &[&str] = &[
    "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@=",
];

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> &'t Token {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> &'t Token {
        let t = self.peek();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: TokenKind) -> bool {
        self.peek().kind == kind
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_op(op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_keyword(kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { line: self.peek().line, message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        let t = self.peek();
        let found = match t.kind {
            TokenKind::Newline => "end of line".to_string(),
            TokenKind::Indent => "indent".to_string(),
            TokenKind::Dedent => "dedent".to_string(),
            TokenKind::EndMarker => "end of input".to_string(),
            _ => format!("{:?}", t.text),
        };
        self.error(format!("expected {wanted}, found {found}"))
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.unexpected(&format!("'{op}'"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("'{kw}'"))
        }
    }

    fn expect_name(&mut self) -> PResult<String> {
        if self.at(TokenKind::Name) {
            Ok(self.advance().text.clone())
        } else {
            self.unexpected("a name")
        }
    }

    // ---------------------------------------------------------------- statements

    fn statement(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let t = self.peek();
        if t.kind == TokenKind::Indent {
            return self.error("unexpected indent");
        }
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "if" | "while" | "for" | "try" | "with" | "def" | "class" | "async" => {
                    out.push(self.compound()?);
                    return Ok(());
                }
                _ => {}
            }
        }
        if t.is_op("@") {
            out.push(self.decorated()?);
            return Ok(());
        }
        self.simple_statements(out)
    }

    fn simple_statements(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        loop {
            out.push(self.small_statement()?);
            if self.eat_op(";") {
                if self.at(TokenKind::Newline) {
                    break;
                }
                continue;
            }
            break;
        }
        if self.at(TokenKind::Newline) {
            self.advance();
            Ok(())
        } else {
            self.unexpected("end of statement")
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        let mut body = Vec::new();
        if self.at(TokenKind::Newline) {
            self.advance();
            if !self.at(TokenKind::Indent) {
                return self.error("expected an indented block");
            }
            self.advance();
            while !self.at(TokenKind::Dedent) {
                if self.at(TokenKind::EndMarker) {
                    return self.error("unexpected end of input in block");
                }
                self.statement(&mut body)?;
            }
            self.advance();
        } else {
            self.simple_statements(&mut body)?;
        }
        Ok(body)
    }

    fn compound(&mut self) -> PResult<Stmt> {
        let kw = self.advance().text.as_str();
        match kw {
            "if" => self.if_rest(),
            "while" => {
                let test = self.named_expression()?;
                self.expect_op(":")?;
                let body = self.block()?;
                let orelse = self.else_block()?;
                Ok(Stmt::While { test, body, orelse })
            }
            "for" => self.for_rest(false),
            "try" => self.try_rest(),
            "with" => self.with_rest(false),
            "def" => self.def_rest(false, Vec::new()),
            "class" => self.class_rest(Vec::new()),
            "async" => {
                if self.eat_kw("def") {
                    self.def_rest(true, Vec::new())
                } else if self.eat_kw("for") {
                    self.for_rest(true)
                } else if self.eat_kw("with") {
                    self.with_rest(true)
                } else {
                    self.unexpected("'def', 'for' or 'with' after 'async'")
                }
            }
            _ => unreachable!("compound() called on non-compound keyword"),
        }
    }

    fn if_rest(&mut self) -> PResult<Stmt> {
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let body = self.block()?;
        let orelse = if self.eat_kw("elif") {
            Some(ElseBranch::Elif(Box::new(self.if_rest()?)))
        } else if self.eat_kw("else") {
            self.expect_op(":")?;
            Some(ElseBranch::Else(self.block()?))
        } else {
            None
        };
        Ok(Stmt::If { test, body, orelse })
    }

    fn else_block(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat_kw("else") {
            self.expect_op(":")?;
            self.block()
        } else {
            Ok(Vec::new())
        }
    }

    fn for_rest(&mut self, is_async: bool) -> PResult<Stmt> {
        let target = self.star_targets()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        self.expect_op(":")?;
        let body = self.block()?;
        let orelse = self.else_block()?;
        Ok(Stmt::For { is_async, target, iter, body, orelse })
    }

    fn try_rest(&mut self) -> PResult<Stmt> {
        self.expect_op(":")?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.eat_kw("except") {
            let (kind, name) = if self.at_op(":") {
                (None, None)
            } else {
                let kind = self.expression()?;
                let kind = if self.eat_op(",") {
                    // Unparenthesized tuple of exception types (3.14 syntax).
                    let mut items = vec![kind];
                    loop {
                        items.push(self.expression()?);
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    Expr::Tuple(items)
                } else {
                    kind
                };
                let name = if self.eat_kw("as") { Some(self.expect_name()?) } else { None };
                (Some(kind), name)
            };
            self.expect_op(":")?;
            let body = self.block()?;
            handlers.push(ExceptHandler { kind, name, body });
        }
        let orelse = if !handlers.is_empty() { self.else_block()? } else { Vec::new() };
        let finalbody = if self.eat_kw("finally") {
            self.expect_op(":")?;
            self.block()?
        } else {
            Vec::new()
        };
        if handlers.is_empty() && finalbody.is_empty() {
            return self.error("expected 'except' or 'finally' block");
        }
        Ok(Stmt::Try { body, handlers, orelse, finalbody })
    }

    fn with_rest(&mut self, is_async: bool) -> PResult<Stmt> {
        let items = if self.at_op("(") {
            let save = self.pos;
            match self.parenthesized_with_items() {
                Ok(items) => items,
                Err(_) => {
                    self.pos = save;
                    self.with_items()?
                }
            }
        } else {
            self.with_items()?
        };
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt::With { is_async, items, body })
    }

    fn parenthesized_with_items(&mut self) -> PResult<Vec<WithItem>> {
        self.expect_op("(")?;
        let mut items = Vec::new();
        loop {
            items.push(self.with_item()?);
            if !self.eat_op(",") || self.at_op(")") {
                break;
            }
        }
        self.expect_op(")")?;
        if !self.at_op(":") {
            return self.unexpected("':'");
        }
        Ok(items)
    }

    fn with_items(&mut self) -> PResult<Vec<WithItem>> {
        let mut items = vec![self.with_item()?];
        while self.eat_op(",") {
            items.push(self.with_item()?);
        }
        Ok(items)
    }

    fn with_item(&mut self) -> PResult<WithItem> {
        let context = self.expression()?;
        let target = if self.eat_kw("as") {
            let t = self.star_target()?;
            check_target(&t, self.peek().line)?;
            Some(t)
        } else {
            None
        };
        Ok(WithItem { context, target })
    }

    fn decorated(&mut self) -> PResult<Stmt> {
        let mut decorators = Vec::new();
        while self.eat_op("@") {
            decorators.push(self.named_expression()?);
            if !self.at(TokenKind::Newline) {
                return self.unexpected("end of line after decorator");
            }
            self.advance();
        }
        if self.eat_kw("def") {
            self.def_rest(false, decorators)
        } else if self.eat_kw("class") {
            self.class_rest(decorators)
        } else if self.at_kw("async") && self.peek_at(1).is_keyword("def") {
            self.pos += 2;
            self.def_rest(true, decorators)
        } else {
            self.unexpected("'def' or 'class' after decorator")
        }
    }

    fn def_rest(&mut self, is_async: bool, decorators: Vec<Expr>) -> PResult<Stmt> {
        let name = self.expect_name()?;
        self.expect_op("(")?;
        let params = self.parameters(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") { Some(self.expression()?) } else { None };
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt::FunctionDef { is_async, name, decorators, params, returns, body })
    }

    fn class_rest(&mut self, decorators: Vec<Expr>) -> PResult<Stmt> {
        let name = self.expect_name()?;
        let bases = if self.eat_op("(") {
            let args = self.call_arguments()?;
            self.expect_op(")")?;
            args
        } else {
            Vec::new()
        };
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt::ClassDef { name, decorators, bases, body })
    }

    /// Parameter list up to (not including) `close`.
    fn parameters(&mut self, close: &str, annotations: bool) -> PResult<Vec<Param>> {
        let mut params = Vec::new();
        let mut keyword_only = false;
        let mut seen_var_kw = false;
        while !self.at_op(close) {
            if seen_var_kw {
                return self.error("parameter after '**' parameter");
            }
            if self.eat_op("/") {
                // positional-only marker
            } else if self.eat_op("**") {
                let name = self.expect_name()?;
                let annotation = self.param_annotation(annotations)?;
                params.push(Param { name, kind: ParamKind::VarKeyword, annotation, default: None });
                seen_var_kw = true;
            } else if self.eat_op("*") {
                if keyword_only {
                    return self.error("duplicate '*' in parameter list");
                }
                keyword_only = true;
                if self.at(TokenKind::Name) {
                    let name = self.expect_name()?;
                    let annotation = self.param_annotation(annotations)?;
                    params.push(Param {
                        name,
                        kind: ParamKind::VarPositional,
                        annotation,
                        default: None,
                    });
                }
            } else {
                let name = self.expect_name()?;
                let annotation = self.param_annotation(annotations)?;
                let default = if self.eat_op("=") { Some(self.expression()?) } else { None };
                let kind = if keyword_only { ParamKind::KeywordOnly } else { ParamKind::Positional };
                params.push(Param { name, kind, annotation, default });
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn param_annotation(&mut self, allowed: bool) -> PResult<Option<Expr>> {
        if allowed && self.eat_op(":") {
            Ok(Some(self.expression()?))
        } else {
            Ok(None)
        }
    }

    fn small_statement(&mut self) -> PResult<Stmt> {
        let t = self.peek();
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "pass" => {
                    self.advance();
                    return Ok(Stmt::Pass);
                }
                "break" => {
                    self.advance();
                    return Ok(Stmt::Break);
                }
                "continue" => {
                    self.advance();
                    return Ok(Stmt::Continue);
                }
                "return" => {
                    self.advance();
                    let value = if self.starts_expression() {
                        Some(self.star_expressions()?)
                    } else {
                        None
                    };
                    return Ok(Stmt::Return(value));
                }
                "raise" => {
                    self.advance();
                    let mut exc = None;
                    let mut cause = None;
                    if self.starts_expression() {
                        exc = Some(self.expression()?);
                        if self.eat_kw("from") {
                            cause = Some(self.expression()?);
                        }
                    }
                    return Ok(Stmt::Raise { exc, cause });
                }
                "global" | "nonlocal" => {
                    let is_global = t.text == "global";
                    self.advance();
                    let mut names = vec![self.expect_name()?];
                    while self.eat_op(",") {
                        names.push(self.expect_name()?);
                    }
                    return Ok(if is_global { Stmt::Global(names) } else { Stmt::Nonlocal(names) });
                }
                "del" => {
                    self.advance();
                    let line = self.peek().line;
                    let mut targets = vec![self.bitor()?];
                    while self.eat_op(",") {
                        if !self.starts_expression() {
                            break;
                        }
                        targets.push(self.bitor()?);
                    }
                    for t in &targets {
                        check_target(t, line)?;
                    }
                    return Ok(Stmt::Delete(targets));
                }
                "assert" => {
                    self.advance();
                    let test = self.expression()?;
                    let msg = if self.eat_op(",") { Some(self.expression()?) } else { None };
                    return Ok(Stmt::Assert { test, msg });
                }
                "import" => {
                    self.advance();
                    return self.import_rest();
                }
                "from" => {
                    self.advance();
                    return self.import_from_rest();
                }
                _ => {}
            }
        }
        self.expression_statement()
    }

    fn dotted_name(&mut self) -> PResult<String> {
        let mut name = self.expect_name()?;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.expect_name()?);
        }
        Ok(name)
    }

    fn import_rest(&mut self) -> PResult<Stmt> {
        let mut names = Vec::new();
        loop {
            let name = self.dotted_name()?;
            let asname = if self.eat_kw("as") { Some(self.expect_name()?) } else { None };
            names.push(Alias { name, asname });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(Stmt::Import { names })
    }

    fn import_from_rest(&mut self) -> PResult<Stmt> {
        let mut level = 0;
        loop {
            if self.eat_op(".") {
                level += 1;
            } else if self.eat_op("...") {
                level += 3;
            } else {
                break;
            }
        }
        let module = if self.at(TokenKind::Name) {
            Some(self.dotted_name()?)
        } else {
            None
        };
        if module.is_none() && level == 0 {
            return self.unexpected("a module name");
        }
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if self.eat_op("*") {
            names.push(Alias { name: "*".into(), asname: None });
        } else {
            let paren = self.eat_op("(");
            loop {
                let name = self.expect_name()?;
                let asname = if self.eat_kw("as") { Some(self.expect_name()?) } else { None };
                names.push(Alias { name, asname });
                if !self.eat_op(",") {
                    break;
                }
                if paren && self.at_op(")") {
                    break;
                }
            }
            if paren {
                self.expect_op(")")?;
            }
        }
        Ok(Stmt::ImportFrom { module, level, names })
    }

    fn expression_statement(&mut self) -> PResult<Stmt> {
        let line = self.peek().line;
        let first = if self.at_kw("yield") { self.yield_expr()? } else { self.star_expressions()? };

        if self.eat_op(":") {
            let single = matches!(first, Expr::Name(_) | Expr::Attribute { .. } | Expr::Subscript { .. });
            if !single {
                return self.error("illegal target for annotation");
            }
            let annotation = self.expression()?;
            let value = if self.eat_op("=") { Some(self.assignment_value()?) } else { None };
            return Ok(Stmt::AnnAssign { target: first, annotation, value });
        }

        if let Some(op) = AUG_OPS.iter().find(|op| self.at_op(op)) {
            self.advance();
            if !matches!(first, Expr::Name(_) | Expr::Attribute { .. } | Expr::Subscript { .. }) {
                return self.error("illegal expression for augmented assignment");
            }
            let value = self.assignment_value()?;
            return Ok(Stmt::AugAssign { target: first, op, value });
        }

        if self.at_op("=") {
            let mut parts = vec![first];
            while self.eat_op("=") {
                parts.push(self.assignment_value()?);
            }
            let value = parts.pop().expect("at least two parts");
            for t in &parts {
                check_target(t, line)?;
            }
            return Ok(Stmt::Assign { targets: parts, value });
        }

        Ok(Stmt::Expr(first))
    }

    fn assignment_value(&mut self) -> PResult<Expr> {
        if self.at_kw("yield") {
            self.yield_expr()
        } else {
            self.star_expressions()
        }
    }

    // --------------------------------------------------------------- expressions

    fn starts_expression(&self) -> bool {
        let t = self.peek();
        match t.kind {
            TokenKind::Name | TokenKind::Number | TokenKind::Str => true,
            TokenKind::Keyword => matches!(
                t.text.as_str(),
                "not" | "lambda" | "await" | "True" | "False" | "None" | "yield"
            ),
            TokenKind::Op => matches!(
                t.text.as_str(),
                "(" | "[" | "{" | "-" | "+" | "~" | "..." | "*"
            ),
            _ => false,
        }
    }

    fn yield_expr(&mut self) -> PResult<Expr> {
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            return Ok(Expr::YieldFrom(Box::new(self.expression()?)));
        }
        if self.starts_expression() {
            Ok(Expr::Yield(Some(Box::new(self.star_expressions()?))))
        } else {
            Ok(Expr::Yield(None))
        }
    }

    fn star_expressions(&mut self) -> PResult<Expr> {
        let first = self.star_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if !self.starts_expression() {
                break;
            }
            items.push(self.star_expression()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn star_expression(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            Ok(Expr::Starred(Box::new(self.bitor()?)))
        } else {
            self.expression()
        }
    }

    fn star_named_expression(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            Ok(Expr::Starred(Box::new(self.bitor()?)))
        } else {
            self.named_expression()
        }
    }

    fn named_expression(&mut self) -> PResult<Expr> {
        if self.at(TokenKind::Name) && self.peek_at(1).is_op(":=") {
            let target = Expr::Name(self.advance().text.clone());
            self.advance();
            let value = self.expression()?;
            return Ok(Expr::NamedExpr { target: Box::new(target), value: Box::new(value) });
        }
        self.expression()
    }

    fn expression(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let body = self.disjunction()?;
        if self.eat_kw("if") {
            let test = self.disjunction()?;
            self.expect_kw("else")?;
            let orelse = self.expression()?;
            return Ok(Expr::IfExp {
                test: Box::new(test),
                body: Box::new(body),
                orelse: Box::new(orelse),
            });
        }
        Ok(body)
    }

    fn lambda(&mut self) -> PResult<Expr> {
        self.expect_kw("lambda")?;
        let params = self.parameters(":", false)?;
        self.expect_op(":")?;
        let body = self.expression()?;
        Ok(Expr::Lambda { params, body: Box::new(body) })
    }

    fn disjunction(&mut self) -> PResult<Expr> {
        let first = self.conjunction()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.conjunction()?);
        }
        Ok(Expr::BoolOp { op: "or", values })
    }

    fn conjunction(&mut self) -> PResult<Expr> {
        let first = self.inversion()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.inversion()?);
        }
        Ok(Expr::BoolOp { op: "and", values })
    }

    fn inversion(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            let operand = self.inversion()?;
            return Ok(Expr::UnaryOp { op: "not", operand: Box::new(operand) });
        }
        self.comparison()
    }

    fn comparison_op(&mut self) -> Option<&'static str> {
        let t = self.peek();
        let op = match t.kind {
            TokenKind::Op => match t.text.as_str() {
                "==" => "==",
                "!=" => "!=",
                "<" => "<",
                "<=" => "<=",
                ">" => ">",
                ">=" => ">=",
                _ => return None,
            },
            TokenKind::Keyword => match t.text.as_str() {
                "in" => "in",
                "is" if self.peek_at(1).is_keyword("not") => {
                    self.pos += 1;
                    "is not"
                }
                "is" => "is",
                "not" if self.peek_at(1).is_keyword("in") => {
                    self.pos += 1;
                    "not in"
                }
                _ => return None,
            },
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.bitor()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comparison_op() {
            ops.push(op);
            comparators.push(self.bitor()?);
        }
        if ops.is_empty() {
            Ok(left)
        } else {
            Ok(Expr::Compare { left: Box::new(left), ops, comparators })
        }
    }

    fn binary_level(
        &mut self,
        ops: &[&'static str],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut left = next(self)?;
        loop {
            let Some(op) = ops.iter().copied().find(|op| self.at_op(op)) else {
                return Ok(left);
            };
            self.advance();
            let right = next(self)?;
            left = Expr::BinOp { left: Box::new(left), op, right: Box::new(right) };
        }
    }

    fn bitor(&mut self) -> PResult<Expr> {
        self.binary_level(&["|"], Self::bitxor)
    }

    fn bitxor(&mut self) -> PResult<Expr> {
        self.binary_level(&["^"], Self::bitand)
    }

    fn bitand(&mut self) -> PResult<Expr> {
        self.binary_level(&["&"], Self::shift)
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(&["<<", ">>"], Self::sum)
    }

    fn sum(&mut self) -> PResult<Expr> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        self.binary_level(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<Expr> {
        for op in ["+", "-", "~"] {
            if self.eat_op(op) {
                let operand = self.factor()?;
                return Ok(Expr::UnaryOp { op, operand: Box::new(operand) });
            }
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = if self.eat_kw("await") {
            Expr::Await(Box::new(self.primary()?))
        } else {
            self.primary()?
        };
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::BinOp { left: Box::new(base), op: "**", right: Box::new(exp) });
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let mut expr = self.atom()?;
        loop {
            if self.eat_op(".") {
                let attr = self.expect_name()?;
                expr = Expr::Attribute { value: Box::new(expr), attr };
            } else if self.eat_op("(") {
                let args = self.call_arguments()?;
                self.expect_op(")")?;
                expr = Expr::Call { func: Box::new(expr), args };
            } else if self.eat_op("[") {
                let slice = self.slices()?;
                self.expect_op("]")?;
                expr = Expr::Subscript { value: Box::new(expr), slice: Box::new(slice) };
            } else {
                return Ok(expr);
            }
        }
    }

    fn call_arguments(&mut self) -> PResult<Vec<Arg>> {
        let mut args = Vec::new();
        while !self.at_op(")") {
            if self.eat_op("**") {
                args.push(Arg::DoubleStar(self.expression()?));
            } else if self.eat_op("*") {
                args.push(Arg::Star(self.expression()?));
            } else if self.at(TokenKind::Name) && self.peek_at(1).is_op("=") {
                let name = self.advance().text.clone();
                self.advance();
                args.push(Arg::Keyword { name, value: self.expression()? });
            } else {
                let value = self.named_expression()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let generators = self.comprehension_clauses()?;
                    args.push(Arg::Positional(Expr::GeneratorExp {
                        elt: Box::new(value),
                        generators,
                    }));
                } else {
                    args.push(Arg::Positional(value));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(args)
    }

    fn slices(&mut self) -> PResult<Expr> {
        let first = self.slice()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.slice()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn slice(&mut self) -> PResult<Expr> {
        let lower = if self.at_op(":") {
            None
        } else {
            let e = self.star_named_expression()?;
            if !self.at_op(":") {
                return Ok(e);
            }
            Some(Box::new(e))
        };
        self.expect_op(":")?;
        let upper = if self.at_op(":") || self.at_op("]") || self.at_op(",") {
            None
        } else {
            Some(Box::new(self.expression()?))
        };
        let step = if self.eat_op(":") {
            if self.at_op("]") || self.at_op(",") {
                None
            } else {
                Some(Box::new(self.expression()?))
            }
        } else {
            None
        };
        Ok(Expr::Slice { lower, upper, step })
    }

    fn comprehension_clauses(&mut self) -> PResult<Vec<Comprehension>> {
        let mut generators = Vec::new();
        loop {
            let is_async = self.eat_kw("async");
            if !self.eat_kw("for") {
                if is_async {
                    return self.unexpected("'for'");
                }
                break;
            }
            let target = self.star_targets()?;
            self.expect_kw("in")?;
            let iter = self.disjunction()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.disjunction()?);
            }
            generators.push(Comprehension { is_async, target, iter, ifs });
        }
        Ok(generators)
    }

    fn star_target(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            Ok(Expr::Starred(Box::new(self.bitor()?)))
        } else {
            self.bitor()
        }
    }

    fn star_targets(&mut self) -> PResult<Expr> {
        let line = self.peek().line;
        let first = self.star_target()?;
        let target = if self.at_op(",") {
            let mut items = vec![first];
            while self.eat_op(",") {
                if self.at_kw("in") || self.at_op("=") {
                    break;
                }
                items.push(self.star_target()?);
            }
            Expr::Tuple(items)
        } else {
            first
        };
        check_target(&target, line)?;
        Ok(target)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.peek();
        match t.kind {
            TokenKind::Name => {
                self.advance();
                Ok(Expr::Name(t.text.clone()))
            }
            TokenKind::Number => {
                self.advance();
                Ok(Expr::Constant(vec![t.text.clone()]))
            }
            TokenKind::Str => {
                let mut parts = Vec::new();
                while self.at(TokenKind::Str) {
                    parts.push(self.advance().text.clone());
                }
                Ok(Expr::Constant(parts))
            }
            TokenKind::Keyword if matches!(t.text.as_str(), "True" | "False" | "None") => {
                self.advance();
                Ok(Expr::Constant(vec![t.text.clone()]))
            }
            TokenKind::Op => match t.text.as_str() {
                "..." => {
                    self.advance();
                    Ok(Expr::Constant(vec!["...".into()]))
                }
                "(" => {
                    self.advance();
                    self.paren_rest()
                }
                "[" => {
                    self.advance();
                    self.list_rest()
                }
                "{" => {
                    self.advance();
                    self.brace_rest()
                }
                _ => self.unexpected("an expression"),
            },
            _ => self.unexpected("an expression"),
        }
    }

    fn paren_rest(&mut self) -> PResult<Expr> {
        if self.eat_op(")") {
            return Ok(Expr::Tuple(Vec::new()));
        }
        if self.at_kw("yield") {
            let y = self.yield_expr()?;
            self.expect_op(")")?;
            return Ok(y);
        }
        let first = self.star_named_expression()?;
        if self.at_kw("for") || self.at_kw("async") {
            let generators = self.comprehension_clauses()?;
            self.expect_op(")")?;
            return Ok(Expr::GeneratorExp { elt: Box::new(first), generators });
        }
        if self.eat_op(")") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op(")") {
                break;
            }
            items.push(self.star_named_expression()?);
        }
        self.expect_op(")")?;
        Ok(Expr::Tuple(items))
    }

    fn list_rest(&mut self) -> PResult<Expr> {
        if self.eat_op("]") {
            return Ok(Expr::List(Vec::new()));
        }
        let first = self.star_named_expression()?;
        if self.at_kw("for") || self.at_kw("async") {
            let generators = self.comprehension_clauses()?;
            self.expect_op("]")?;
            return Ok(Expr::ListComp { elt: Box::new(first), generators });
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.star_named_expression()?);
        }
        self.expect_op("]")?;
        Ok(Expr::List(items))
    }

    fn brace_rest(&mut self) -> PResult<Expr> {
        if self.eat_op("}") {
            return Ok(Expr::Dict(Vec::new()));
        }
        let first_item = if self.eat_op("**") {
            DictItem::Unpack(self.bitor()?)
        } else {
            let first = self.star_named_expression()?;
            if !self.eat_op(":") {
                // set display or set comprehension
                if self.at_kw("for") || self.at_kw("async") {
                    let generators = self.comprehension_clauses()?;
                    self.expect_op("}")?;
                    return Ok(Expr::SetComp { elt: Box::new(first), generators });
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op("}") {
                        break;
                    }
                    items.push(self.star_named_expression()?);
                }
                self.expect_op("}")?;
                return Ok(Expr::Set(items));
            }
            let value = self.expression()?;
            if self.at_kw("for") || self.at_kw("async") {
                let generators = self.comprehension_clauses()?;
                self.expect_op("}")?;
                return Ok(Expr::DictComp {
                    key: Box::new(first),
                    value: Box::new(value),
                    generators,
                });
            }
            DictItem::Pair(first, value)
        };
        let mut items = vec![first_item];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            if self.eat_op("**") {
                items.push(DictItem::Unpack(self.bitor()?));
            } else {
                let k = self.expression()?;
                self.expect_op(":")?;
                let v = self.expression()?;
                items.push(DictItem::Pair(k, v));
            }
        }
        self.expect_op("}")?;
        Ok(Expr::Dict(items))
    }
}

fn check_target(e: &Expr, line: usize) -> PResult<()> {
    match e {
        Expr::Name(_) | Expr::Attribute { .. } | Expr::Subscript { .. } => Ok(()),
        Expr::Tuple(items) | Expr::List(items) => {
            items.iter().try_for_each(|i| check_target(i, line))
        }
        Expr::Starred(inner) => check_target(inner, line),
        _ => Err(ParseError { line, message: "cannot assign to expression".into() }),
    }
}
