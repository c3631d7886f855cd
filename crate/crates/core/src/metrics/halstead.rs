//! Halstead operator and operand counts.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer;
use super::ParsedCell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HalsteadCounts {
    pub operands: u32,
    pub operators: u32,
    pub unique_operands: u32,
    pub unique_operators: u32,
}

/// Counts operands from the token stream and operators from the tree.
pub fn halstead_counts(cell: &ParsedCell) -> HalsteadCounts {
    let mut operands = 0u32;
    let mut distinct = BTreeSet::new();
    for t in cell.tokens.tokens.iter() {
        if t.kind == lexer::TokenKind::Name || lexer::is_literal(t) {
            operands += 1;
            distinct.insert(t.text.as_str());
        }
    }
    let ops = operator_tally(&cell.module);
    HalsteadCounts {
        operands,
        operators: ops.values().sum(),
        unique_operands: distinct.len() as u32,
        unique_operators: ops.len() as u32,
    }
}

/// Operator occurrences keyed by spelling.
pub fn operator_tally(module: &Module) -> BTreeMap<&'static str, u32> {
    let mut v = OperatorCounter::default();
    v.visit_body(&module.body);
    v.counts
}

#[derive(Default)]
struct OperatorCounter {
    counts: BTreeMap<&'static str, u32>,
}

impl OperatorCounter {
    fn add(&mut self, op: &'static str) {
        self.add_n(op, 1);
    }

    fn add_n(&mut self, op: &'static str, n: u32) {
        if n > 0 {
            *self.counts.entry(op).or_insert(0) += n;
        }
    }

    fn if_chain(&mut self, stmt: &Stmt, keyword: &'static str) {
        let Stmt::If { test, body, orelse } = stmt else {
            unreachable!("if_chain on non-if statement");
        };
        self.add(keyword);
        self.visit_expr(test);
        self.visit_body(body);
        match orelse {
            Some(ElseBranch::Elif(inner)) => self.if_chain(inner, "elif"),
            Some(ElseBranch::Else(b)) => {
                self.add("else");
                self.visit_body(b);
            }
            None => {}
        }
    }
}

impl Visitor for OperatorCounter {
    fn visit_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::If { .. } => {
                self.if_chain(stmt, "if");
                return;
            }
            Stmt::Assign { targets, .. } => self.add_n("=", targets.len() as u32),
            Stmt::AugAssign { op, .. } => self.add(op),
            Stmt::AnnAssign { value, .. } => {
                if value.is_some() {
                    self.add("=");
                }
            }
            Stmt::Import { .. } => self.add("import"),
            Stmt::ImportFrom { .. } => {
                self.add("from");
                self.add("import");
            }
            Stmt::Pass => self.add("pass"),
            Stmt::Break => self.add("break"),
            Stmt::Continue => self.add("continue"),
            Stmt::Return(_) => self.add("return"),
            Stmt::Raise { cause, .. } => {
                self.add("raise");
                if cause.is_some() {
                    self.add("from");
                }
            }
            Stmt::Delete(_) => self.add("del"),
            Stmt::Global(_) => self.add("global"),
            Stmt::Nonlocal(_) => self.add("nonlocal"),
            Stmt::Assert { .. } => self.add("assert"),
            Stmt::For { is_async, orelse, .. } => {
                if *is_async {
                    self.add("async");
                }
                self.add("for");
                if !orelse.is_empty() {
                    self.add("else");
                }
            }
            Stmt::While { orelse, .. } => {
                self.add("while");
                if !orelse.is_empty() {
                    self.add("else");
                }
            }
            Stmt::Try { handlers, orelse, finalbody, .. } => {
                self.add("try");
                self.add_n("except", handlers.len() as u32);
                if !orelse.is_empty() {
                    self.add("else");
                }
                if !finalbody.is_empty() {
                    self.add("finally");
                }
            }
            Stmt::With { is_async, .. } => {
                if *is_async {
                    self.add("async");
                }
                self.add("with");
            }
            Stmt::FunctionDef { is_async, .. } => {
                if *is_async {
                    self.add("async");
                }
                self.add("def");
            }
            Stmt::ClassDef { .. } => self.add("class"),
            Stmt::Expr(_) => {}
        }
        walk_stmt(self, stmt);
    }

    fn visit_expr(&mut self, expr: &Expr) {
        match expr {
            Expr::BinOp { op, .. } | Expr::UnaryOp { op, .. } => self.add(op),
            Expr::BoolOp { op, values } => self.add_n(op, values.len() as u32 - 1),
            Expr::Compare { ops, .. } => {
                for op in ops {
                    self.add(op);
                }
            }
            Expr::Call { .. } => self.add("()"),
            Expr::Subscript { .. } => self.add("[]"),
            Expr::NamedExpr { .. } => self.add(":="),
            _ => {}
        }
        walk_expr(self, expr);
    }
}
