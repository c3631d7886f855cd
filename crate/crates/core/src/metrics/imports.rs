//! Imports, external API popularity and visualization library usage.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ast::*;

/// Imports found in one cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportSummary {
    /// Number of `import` / `from ... import` statements.
    pub statements: u32,
    /// Top-level module of every imported name, one entry per occurrence.
    /// Relative imports are local code and contribute nothing.
    pub modules: Vec<String>,
    /// Local binding -> top-level module it refers to.
    pub bindings: BTreeMap<String, String>,
}

impl ImportSummary {
    pub fn top_level_modules(&self) -> Vec<String> {
        self.modules.clone()
    }
}

fn top_level(dotted: &str) -> &str {
    dotted.split('.').next().unwrap_or(dotted)
}

pub fn collect_imports(module: &Module) -> ImportSummary {
    let mut c = ImportCollector::default();
    c.visit_body(&module.body);
    c.summary
}

/// Top-level modules imported by a cell, per occurrence.
pub fn imported_modules(module: &Module) -> Vec<String> {
    collect_imports(module).modules
}

#[derive(Default)]
struct ImportCollector {
    summary: ImportSummary,
}

impl Visitor for ImportCollector {
    fn visit_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Import { names } => {
                self.summary.statements += 1;
                for alias in names {
                    let root = top_level(&alias.name).to_string();
                    let bound = alias.asname.clone().unwrap_or_else(|| root.clone());
                    self.summary.bindings.insert(bound, root.clone());
                    self.summary.modules.push(root);
                }
            }
            Stmt::ImportFrom { module, level, names } => {
                self.summary.statements += 1;
                if let (Some(m), 0) = (module, level) {
                    let root = top_level(m).to_string();
                    for alias in names {
                        if alias.name != "*" {
                            let bound = alias.asname.clone().unwrap_or_else(|| alias.name.clone());
                            self.summary.bindings.insert(bound, root.clone());
                        }
                    }
                    self.summary.modules.push(root);
                }
            }
            _ => {}
        }
        walk_stmt(self, stmt);
    }
}

/// Corpus-wide frequency of imported top-level modules.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopularityTable {
    pub counts: BTreeMap<String, u64>,
    pub total_imports: u64,
}

impl PopularityTable {
    pub fn count(&self, module: &str) -> u64 {
        self.counts.get(module).copied().unwrap_or(0)
    }
}

/// Counts every import occurrence across the corpus.
pub fn build_popularity_table<S: AsRef<str>>(corpus: &[Vec<S>]) -> PopularityTable {
    let mut table = PopularityTable::default();
    for cell in corpus {
        for m in cell {
            *table.counts.entry(m.as_ref().to_string()).or_insert(0) += 1;
            table.total_imports += 1;
        }
    }
    table
}

/// Sum of `count / total` over the given import occurrences.
pub fn external_api_popularity<S: AsRef<str>>(imports: &[S], popularity: &PopularityTable) -> f64 {
    if popularity.total_imports == 0 {
        return 0.0;
    }
    let hits: u64 = imports.iter().map(|m| popularity.count(m.as_ref())).sum();
    hits as f64 / popularity.total_imports as f64
}

/// Plotting and charting libraries recognised for the NDD metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualizationAllowlist {
    pub version: u32,
    pub modules: BTreeSet<String>,
    /// Conventional aliases (`plt`, `sns`, ...) that refer to a module even
    /// when the import happened in an earlier cell.
    pub aliases: BTreeMap<String, String>,
}

impl Default for VisualizationAllowlist {
    fn default() -> Self {
        let modules = [
            "altair", "bokeh", "folium", "holoviews", "hvplot", "matplotlib", "missingno",
            "plotly", "plotnine", "pygal", "pyecharts", "seaborn", "squarify", "wordcloud",
        ];
        let aliases = [
            ("alt", "altair"),
            ("go", "plotly"),
            ("hv", "holoviews"),
            ("mpl", "matplotlib"),
            ("msno", "missingno"),
            ("plt", "matplotlib"),
            ("px", "plotly"),
            ("sns", "seaborn"),
        ];
        Self {
            version: 1,
            modules: modules.into_iter().map(String::from).collect(),
            aliases: aliases.into_iter().map(|(a, m)| (a.to_string(), m.to_string())).collect(),
        }
    }
}

impl VisualizationAllowlist {
    fn resolve(&self, name: &str, imports: &ImportSummary) -> Option<String> {
        let module = imports
            .bindings
            .get(name)
            .cloned()
            .or_else(|| self.aliases.get(name).cloned())
            .unwrap_or_else(|| name.to_string());
        self.modules.contains(&module).then_some(module)
    }

    /// Distinct allowlisted modules imported or used as an attribute root.
    pub fn count_referenced(&self, module: &Module, imports: &ImportSummary) -> u32 {
        let mut found: BTreeSet<String> =
            imports.modules.iter().filter(|m| self.modules.contains(*m)).cloned().collect();
        let mut roots = AttributeRoots::default();
        roots.visit_body(&module.body);
        for root in roots.names {
            if let Some(m) = self.resolve(&root, imports) {
                found.insert(m);
            }
        }
        found.len() as u32
    }
}

#[derive(Default)]
struct AttributeRoots {
    names: BTreeSet<String>,
}

impl Visitor for AttributeRoots {
    fn visit_expr(&mut self, expr: &Expr) {
        if let Expr::Attribute { value, .. } = expr {
            if let Expr::Name(n) = value.as_ref() {
                self.names.insert(n.clone());
            }
        }
        walk_expr(self, expr);
    }
}
