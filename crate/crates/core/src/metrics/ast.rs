//! Syntax tree for notebook code cells.
//!
//! Only the structure the metric visitors need is kept: literal values are
//! stored as their source spelling and positions are dropped.

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alias {
    /// Dotted name as written (`matplotlib.pyplot`).
    pub name: String,
    pub asname: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
    pub annotation: Option<Expr>,
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Positional,
    VarPositional,
    KeywordOnly,
    VarKeyword,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceptHandler {
    pub kind: Option<Expr>,
    pub name: Option<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithItem {
    pub context: Expr,
    pub target: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElseBranch {
    Elif(Box<Stmt>),
    Else(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Expr(Expr),
    Assign { targets: Vec<Expr>, value: Expr },
    AugAssign { target: Expr, op: &'static str, value: Expr },
    AnnAssign { target: Expr, annotation: Expr, value: Option<Expr> },
    Import { names: Vec<Alias> },
    ImportFrom { module: Option<String>, level: usize, names: Vec<Alias> },
    Pass,
    Break,
    Continue,
    Return(Option<Expr>),
    Raise { exc: Option<Expr>, cause: Option<Expr> },
    Delete(Vec<Expr>),
    Global(Vec<String>),
    Nonlocal(Vec<String>),
    Assert { test: Expr, msg: Option<Expr> },
    If { test: Expr, body: Vec<Stmt>, orelse: Option<ElseBranch> },
    For { is_async: bool, target: Expr, iter: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    While { test: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    Try {
        body: Vec<Stmt>,
        handlers: Vec<ExceptHandler>,
        orelse: Vec<Stmt>,
        finalbody: Vec<Stmt>,
    },
    With { is_async: bool, items: Vec<WithItem>, body: Vec<Stmt> },
    FunctionDef {
        is_async: bool,
        name: String,
        decorators: Vec<Expr>,
        params: Vec<Param>,
        returns: Option<Expr>,
        body: Vec<Stmt>,
    },
    ClassDef { name: String, decorators: Vec<Expr>, bases: Vec<Arg>, body: Vec<Stmt> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Positional(Expr),
    Keyword { name: String, value: Expr },
    Star(Expr),
    DoubleStar(Expr),
}

impl Arg {
    pub fn value(&self) -> &Expr {
        match self {
            Arg::Positional(e) | Arg::Star(e) | Arg::DoubleStar(e) => e,
            Arg::Keyword { value, .. } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comprehension {
    pub is_async: bool,
    pub target: Expr,
    pub iter: Expr,
    pub ifs: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DictItem {
    Pair(Expr, Expr),
    Unpack(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Name(String),
    /// Literal constant by source spelling; adjacent strings stay separate parts.
    Constant(Vec<String>),
    BinOp { left: Box<Expr>, op: &'static str, right: Box<Expr> },
    UnaryOp { op: &'static str, operand: Box<Expr> },
    BoolOp { op: &'static str, values: Vec<Expr> },
    Compare { left: Box<Expr>, ops: Vec<&'static str>, comparators: Vec<Expr> },
    Call { func: Box<Expr>, args: Vec<Arg> },
    Attribute { value: Box<Expr>, attr: String },
    Subscript { value: Box<Expr>, slice: Box<Expr> },
    Slice { lower: Option<Box<Expr>>, upper: Option<Box<Expr>>, step: Option<Box<Expr>> },
    IfExp { test: Box<Expr>, body: Box<Expr>, orelse: Box<Expr> },
    Lambda { params: Vec<Param>, body: Box<Expr> },
    NamedExpr { target: Box<Expr>, value: Box<Expr> },
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Set(Vec<Expr>),
    Dict(Vec<DictItem>),
    ListComp { elt: Box<Expr>, generators: Vec<Comprehension> },
    SetComp { elt: Box<Expr>, generators: Vec<Comprehension> },
    DictComp { key: Box<Expr>, value: Box<Expr>, generators: Vec<Comprehension> },
    GeneratorExp { elt: Box<Expr>, generators: Vec<Comprehension> },
    Starred(Box<Expr>),
    Yield(Option<Box<Expr>>),
    YieldFrom(Box<Expr>),
    Await(Box<Expr>),
}

/// Read-only traversal over statements and expressions.
///
/// Default methods walk children; overriding a method and not calling the
/// matching `walk_*` function prunes that subtree.
pub trait Visitor {
    fn visit_stmt(&mut self, stmt: &Stmt) {
        walk_stmt(self, stmt);
    }

    fn visit_expr(&mut self, expr: &Expr) {
        walk_expr(self, expr);
    }

    fn visit_body(&mut self, body: &[Stmt]) {
        for s in body {
            self.visit_stmt(s);
        }
    }
}

fn visit_params<V: Visitor + ?Sized>(v: &mut V, params: &[Param]) {
    for p in params {
        if let Some(a) = &p.annotation {
            v.visit_expr(a);
        }
        if let Some(d) = &p.default {
            v.visit_expr(d);
        }
    }
}

fn visit_generators<V: Visitor + ?Sized>(v: &mut V, generators: &[Comprehension]) {
    for g in generators {
        v.visit_expr(&g.target);
        v.visit_expr(&g.iter);
        for cond in &g.ifs {
            v.visit_expr(cond);
        }
    }
}

pub fn walk_stmt<V: Visitor + ?Sized>(v: &mut V, stmt: &Stmt) {
    match stmt {
        Stmt::Expr(e) => v.visit_expr(e),
        Stmt::Assign { targets, value } => {
            for t in targets {
                v.visit_expr(t);
            }
            v.visit_expr(value);
        }
        Stmt::AugAssign { target, value, .. } => {
            v.visit_expr(target);
            v.visit_expr(value);
        }
        Stmt::AnnAssign { target, annotation, value } => {
            v.visit_expr(target);
            v.visit_expr(annotation);
            if let Some(val) = value {
                v.visit_expr(val);
            }
        }
        Stmt::Import { .. }
        | Stmt::ImportFrom { .. }
        | Stmt::Pass
        | Stmt::Break
        | Stmt::Continue
        | Stmt::Global(_)
        | Stmt::Nonlocal(_) => {}
        Stmt::Return(e) => {
            if let Some(e) = e {
                v.visit_expr(e);
            }
        }
        Stmt::Raise { exc, cause } => {
            if let Some(e) = exc {
                v.visit_expr(e);
            }
            if let Some(c) = cause {
                v.visit_expr(c);
            }
        }
        Stmt::Delete(targets) => {
            for t in targets {
                v.visit_expr(t);
            }
        }
        Stmt::Assert { test, msg } => {
            v.visit_expr(test);
            if let Some(m) = msg {
                v.visit_expr(m);
            }
        }
        Stmt::If { test, body, orelse } => {
            v.visit_expr(test);
            v.visit_body(body);
            match orelse {
                Some(ElseBranch::Elif(s)) => v.visit_stmt(s),
                Some(ElseBranch::Else(b)) => v.visit_body(b),
                None => {}
            }
        }
        Stmt::For { target, iter, body, orelse, .. } => {
            v.visit_expr(target);
            v.visit_expr(iter);
            v.visit_body(body);
            v.visit_body(orelse);
        }
        Stmt::While { test, body, orelse } => {
            v.visit_expr(test);
            v.visit_body(body);
            v.visit_body(orelse);
        }
        Stmt::Try { body, handlers, orelse, finalbody } => {
            v.visit_body(body);
            for h in handlers {
                if let Some(k) = &h.kind {
                    v.visit_expr(k);
                }
                v.visit_body(&h.body);
            }
            v.visit_body(orelse);
            v.visit_body(finalbody);
        }
        Stmt::With { items, body, .. } => {
            for item in items {
                v.visit_expr(&item.context);
                if let Some(t) = &item.target {
                    v.visit_expr(t);
                }
            }
            v.visit_body(body);
        }
        Stmt::FunctionDef { decorators, params, returns, body, .. } => {
            for d in decorators {
                v.visit_expr(d);
            }
            visit_params(v, params);
            if let Some(r) = returns {
                v.visit_expr(r);
            }
            v.visit_body(body);
        }
        Stmt::ClassDef { decorators, bases, body, .. } => {
            for d in decorators {
                v.visit_expr(d);
            }
            for b in bases {
                v.visit_expr(b.value());
            }
            v.visit_body(body);
        }
    }
}

pub fn walk_expr<V: Visitor + ?Sized>(v: &mut V, expr: &Expr) {
    match expr {
        Expr::Name(_) | Expr::Constant(_) => {}
        Expr::BinOp { left, right, .. } => {
            v.visit_expr(left);
            v.visit_expr(right);
        }
        Expr::UnaryOp { operand, .. } => v.visit_expr(operand),
        Expr::BoolOp { values, .. } => {
            for e in values {
                v.visit_expr(e);
            }
        }
        Expr::Compare { left, comparators, .. } => {
            v.visit_expr(left);
            for c in comparators {
                v.visit_expr(c);
            }
        }
        Expr::Call { func, args } => {
            v.visit_expr(func);
            for a in args {
                v.visit_expr(a.value());
            }
        }
        Expr::Attribute { value, .. } => v.visit_expr(value),
        Expr::Subscript { value, slice } => {
            v.visit_expr(value);
            v.visit_expr(slice);
        }
        Expr::Slice { lower, upper, step } => {
            for part in [lower, upper, step].into_iter().flatten() {
                v.visit_expr(part);
            }
        }
        Expr::IfExp { test, body, orelse } => {
            v.visit_expr(test);
            v.visit_expr(body);
            v.visit_expr(orelse);
        }
        Expr::Lambda { params, body } => {
            visit_params(v, params);
            v.visit_expr(body);
        }
        Expr::NamedExpr { target, value } => {
            v.visit_expr(target);
            v.visit_expr(value);
        }
        Expr::Tuple(items) | Expr::List(items) | Expr::Set(items) => {
            for e in items {
                v.visit_expr(e);
            }
        }
        Expr::Dict(items) => {
            for item in items {
                match item {
                    DictItem::Pair(k, val) => {
                        v.visit_expr(k);
                        v.visit_expr(val);
                    }
                    DictItem::Unpack(e) => v.visit_expr(e),
                }
            }
        }
        Expr::ListComp { elt, generators }
        | Expr::SetComp { elt, generators }
        | Expr::GeneratorExp { elt, generators } => {
            v.visit_expr(elt);
            visit_generators(v, generators);
        }
        Expr::DictComp { key, value, generators } => {
            v.visit_expr(key);
            v.visit_expr(value);
            visit_generators(v, generators);
        }
        Expr::Starred(e) | Expr::YieldFrom(e) | Expr::Await(e) => v.visit_expr(e),
        Expr::Yield(e) => {
            if let Some(e) = e {
                v.visit_expr(e);
            }
        }
    }
}
