//! Statement, function, nesting and cyclomatic complexity metrics.

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StructureMetrics {
    pub statements: u32,
    pub parameters: u32,
    pub functions: u32,
    pub nesting_depth: u32,
    pub cyclomatic: u32,
}

pub fn structure_metrics(module: &Module) -> StructureMetrics {
    let mut counter = StatementCounter::default();
    counter.visit_body(&module.body);
    StructureMetrics {
        statements: counter.statements,
        parameters: counter.parameters,
        functions: counter.functions,
        nesting_depth: nesting_depth(&module.body, 0),
        cyclomatic: cyclomatic_complexity(module),
    }
}

/// One plus the number of decision points; 0 for a cell without statements.
pub fn cyclomatic_complexity(module: &Module) -> u32 {
    if module.body.is_empty() {
        return 0;
    }
    let mut d = DecisionCounter::default();
    d.visit_body(&module.body);
    1 + d.decisions
}

#[derive(Default)]
struct StatementCounter {
    statements: u32,
    parameters: u32,
    functions: u32,
}

impl Visitor for StatementCounter {
    fn visit_stmt(&mut self, stmt: &Stmt) {
        self.statements += 1;
        if let Stmt::FunctionDef { params, .. } = stmt {
            self.functions += 1;
            self.parameters += params.len() as u32;
        }
        walk_stmt(self, stmt);
    }
}

#[derive(Default)]
struct DecisionCounter {
    decisions: u32,
}

impl Visitor for DecisionCounter {
    fn visit_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            // elif arms arrive here as nested `If` nodes
            Stmt::If { .. } | Stmt::For { .. } | Stmt::While { .. } => self.decisions += 1,
            Stmt::Try { handlers, .. } => self.decisions += handlers.len() as u32,
            _ => {}
        }
        walk_stmt(self, stmt);
    }

    fn visit_expr(&mut self, expr: &Expr) {
        match expr {
            Expr::IfExp { .. } => self.decisions += 1,
            Expr::BoolOp { values, .. } => self.decisions += values.len() as u32 - 1,
            Expr::ListComp { generators, .. }
            | Expr::SetComp { generators, .. }
            | Expr::DictComp { generators, .. }
            | Expr::GeneratorExp { generators, .. } => {
                self.decisions += generators.iter().map(|g| g.ifs.len() as u32).sum::<u32>();
            }
            _ => {}
        }
        walk_expr(self, expr);
    }
}

/// Deepest suite nesting below `depth`. `elif`/`else` suites sit at the same
/// depth as the `if` suite they continue.
fn nesting_depth(body: &[Stmt], depth: u32) -> u32 {
    body.iter().map(|s| stmt_depth(s, depth)).max().unwrap_or(depth)
}

fn stmt_depth(stmt: &Stmt, depth: u32) -> u32 {
    let inner = depth + 1;
    let suites = |bodies: &[&[Stmt]]| {
        bodies
            .iter()
            .map(|b| if b.is_empty() { depth } else { nesting_depth(b, inner) })
            .max()
            .unwrap_or(depth)
    };
    match stmt {
        Stmt::If { body, orelse, .. } => {
            let own = suites(&[body]);
            let rest = match orelse {
                Some(ElseBranch::Elif(s)) => stmt_depth(s, depth),
                Some(ElseBranch::Else(b)) => suites(&[b]),
                None => depth,
            };
            own.max(rest)
        }
        Stmt::For { body, orelse, .. } | Stmt::While { body, orelse, .. } => suites(&[body, orelse]),
        Stmt::Try { body, handlers, orelse, finalbody } => {
            let mut all: Vec<&[Stmt]> = vec![body, orelse, finalbody];
            all.extend(handlers.iter().map(|h| h.body.as_slice()));
            suites(&all)
        }
        Stmt::With { body, .. } | Stmt::FunctionDef { body, .. } | Stmt::ClassDef { body, .. } => {
            suites(&[body])
        }
        _ => depth,
    }
}
