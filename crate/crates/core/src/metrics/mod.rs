//! Structural code metrics for notebook code cells.
//!
//! Every cell yields a [`MetricVector`] with 21 entries. Counting rules:
//!
//! * Lines: `LOC` counts physical lines (a single trailing newline does not
//!   open a new line). `BLC` counts whitespace-only lines, `LOCom` lines whose
//!   first non-blank character starts a comment. `CW` counts
//!   whitespace-separated words of every comment with the `#` marker removed.
//!   `ALLC` is characters per physical line over all `LOC` lines.
//! * Structure: `S` counts statement nodes (simple statements and compound
//!   headers, `elif` included). `P` is the number of formal parameters over
//!   all `def`s, `UDF` the number of `def`s, `NBD` the deepest nesting of
//!   suite-introducing blocks.
//! * `CyC` is one plus the decision points: `if`/`elif` arms, loop headers,
//!   exception handlers, conditional expressions, each `and`/`or`, each
//!   comprehension filter. A cell without statements scores 0.
//! * Halstead: operands are identifier and literal tokens; operators are
//!   arithmetic, bitwise, unary, boolean and comparison operators, plain,
//!   augmented and walrus assignment, subscripts, calls and statement
//!   keywords. Distinct counts key on spelling.
//! * Identifiers: `ID` counts non-keyword name tokens, `ALID` is their mean
//!   length. Names inside f-string replacement fields are not tokens.
//! * Notebook: `I` counts import statements, `EAP` sums corpus frequencies of
//!   imported top-level modules, `NDD` counts distinct visualization
//!   libraries referenced, `EC` flags executed cells.

pub mod ast;
pub mod halstead;
pub mod imports;
pub mod lexer;
pub mod lines;
pub mod parser;
pub mod structure;

use serde::{Deserialize, Serialize};

use crate::ingest::CellMeta;
use crate::par::Execution;

pub use halstead::{halstead_counts, HalsteadCounts};
pub use imports::{
    build_popularity_table, external_api_popularity, imported_modules, PopularityTable,
    VisualizationAllowlist,
};
pub use lines::klcid;
pub use parser::ParseError;
pub use structure::cyclomatic_complexity;

pub const METRIC_COUNT: usize = 21;

/// Metric abbreviations in table order, as displayed in prompts.
pub const METRIC_ABBREVIATIONS: [&str; METRIC_COUNT] = [
    "LOC", "BLC", "LOCom", "CW", "S", "P", "UDF", "NBD", "CyC", "KLCID", "OPRND", "OPRATOR",
    "UOPRND", "UOPRAT", "ALLC", "ID", "ALID", "I", "EAP", "NDD", "EC",
];

/// Lowercased abbreviations; the CSV column order.
pub const METRIC_COLUMNS: [&str; METRIC_COUNT] = [
    "loc", "blc", "locom", "cw", "s", "p", "udf", "nbd", "cyc", "klcid", "oprnd", "oprator",
    "uoprnd", "uoprat", "allc", "id", "alid", "i", "eap", "ndd", "ec",
];

/// Columns holding real values; every other column is an integer count.
pub const REAL_COLUMNS: [usize; 4] = [9, 14, 16, 18];

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("cell does not parse: {0}")]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricVector {
    pub loc: u32,
    pub blc: u32,
    pub locom: u32,
    pub cw: u32,
    pub s: u32,
    pub p: u32,
    pub udf: u32,
    pub nbd: u32,
    pub cyc: u32,
    pub klcid: f64,
    pub oprnd: u32,
    pub oprator: u32,
    pub uoprnd: u32,
    pub uoprat: u32,
    pub allc: f64,
    pub id: u32,
    pub alid: f64,
    pub i: u32,
    pub eap: f64,
    pub ndd: u32,
    pub ec: u8,
}

impl MetricVector {
    pub fn to_array(&self) -> [f64; METRIC_COUNT] {
        [
            self.loc as f64,
            self.blc as f64,
            self.locom as f64,
            self.cw as f64,
            self.s as f64,
            self.p as f64,
            self.udf as f64,
            self.nbd as f64,
            self.cyc as f64,
            self.klcid,
            self.oprnd as f64,
            self.oprator as f64,
            self.uoprnd as f64,
            self.uoprat as f64,
            self.allc,
            self.id as f64,
            self.alid,
            self.i as f64,
            self.eap,
            self.ndd as f64,
            self.ec as f64,
        ]
    }

    /// Inverse of [`to_array`](Self::to_array). Integer columns are rounded.
    pub fn from_array(a: &[f64; METRIC_COUNT]) -> Self {
        let u = |x: f64| x.round().max(0.0) as u32;
        Self {
            loc: u(a[0]),
            blc: u(a[1]),
            locom: u(a[2]),
            cw: u(a[3]),
            s: u(a[4]),
            p: u(a[5]),
            udf: u(a[6]),
            nbd: u(a[7]),
            cyc: u(a[8]),
            klcid: a[9],
            oprnd: u(a[10]),
            oprator: u(a[11]),
            uoprnd: u(a[12]),
            uoprat: u(a[13]),
            allc: a[14],
            id: u(a[15]),
            alid: a[16],
            i: u(a[17]),
            eap: a[18],
            ndd: u(a[19]),
            ec: u(a[20]).min(1) as u8,
        }
    }

    /// `(abbreviation, formatted value)` pairs in table order. Integers are
    /// printed bare, reals with four decimals.
    pub fn formatted(&self) -> Vec<(&'static str, String)> {
        let values = self.to_array();
        METRIC_ABBREVIATIONS
            .iter()
            .enumerate()
            .map(|(i, abbr)| (*abbr, format_metric(i, values[i])))
            .collect()
    }
}

pub fn format_metric(column: usize, value: f64) -> String {
    if REAL_COLUMNS.contains(&column) {
        format!("{value:.4}")
    } else {
        format!("{}", value as u64)
    }
}

/// A cell that tokenized and parsed.
#[derive(Debug, Clone)]
pub struct ParsedCell {
    pub source: String,
    pub tokens: lexer::TokenStream,
    pub module: ast::Module,
}

pub fn parse_cell(source: &str) -> Result<ParsedCell, MetricsError> {
    let source = normalize_line_endings(source);
    let (tokens, module) = parser::parse(&source)?;
    Ok(ParsedCell { source, tokens, module })
}

fn normalize_line_endings(s: &str) -> String {
    if s.contains('\r') {
        s.replace("\r\n", "\n").replace('\r', "\n")
    } else {
        s.to_string()
    }
}

/// Removes IPython magics (`%`, `%%`) and shell escapes (`!`). Other lines are
/// kept byte for byte.
pub fn sanitize_cell_source(source: &str) -> String {
    source
        .split_inclusive('\n')
        .filter(|line| {
            let t = line.trim_start();
            !(t.starts_with('%') || t.starts_with('!'))
        })
        .collect()
}

/// Metric extraction with a fixed corpus popularity table and visualization
/// allowlist.
#[derive(Debug, Clone, Default)]
pub struct MetricExtractor {
    pub popularity: PopularityTable,
    pub visualization: VisualizationAllowlist,
}

impl MetricExtractor {
    pub fn new(popularity: PopularityTable, visualization: VisualizationAllowlist) -> Self {
        Self { popularity, visualization }
    }

    /// Extracts metrics from an already sanitized source.
    pub fn extract(&self, source: &str, meta: &CellMeta) -> Result<MetricVector, MetricsError> {
        let cell = parse_cell(source)?;
        Ok(self.extract_parsed(&cell, meta))
    }

    /// Sanitizes, then extracts.
    pub fn extract_cell(&self, raw_source: &str, meta: &CellMeta) -> Result<MetricVector, MetricsError> {
        self.extract(&sanitize_cell_source(raw_source), meta)
    }

    /// [`extract_cell`](Self::extract_cell) over many cells, results in input order.
    pub fn extract_many<S: AsRef<str> + Sync>(
        &self,
        cells: &[(S, CellMeta)],
        exec: Execution,
    ) -> Vec<Result<MetricVector, MetricsError>> {
        exec.map(cells, |(code, meta)| self.extract_cell(code.as_ref(), meta))
    }

    pub fn extract_parsed(&self, cell: &ParsedCell, meta: &CellMeta) -> MetricVector {
        let line = lines::line_metrics(&cell.source, &cell.tokens);
        let shape = structure::structure_metrics(&cell.module);
        let hal = halstead_counts(cell);
        let imports = imports::collect_imports(&cell.module);
        let modules = imports.top_level_modules();
        MetricVector {
            loc: line.loc,
            blc: line.blc,
            locom: line.locom,
            cw: line.cw,
            s: shape.statements,
            p: shape.parameters,
            udf: shape.functions,
            nbd: shape.nesting_depth,
            cyc: shape.cyclomatic,
            klcid: line.klcid,
            oprnd: hal.operands,
            oprator: hal.operators,
            uoprnd: hal.unique_operands,
            uoprat: hal.unique_operators,
            allc: line.allc,
            id: line.identifiers,
            alid: line.alid,
            i: imports.statements,
            eap: external_api_popularity(&modules, &self.popularity),
            ndd: self.visualization.count_referenced(&cell.module, &imports),
            ec: u8::from(meta.executed()),
        }
    }
}

/// Extracts with the default visualization allowlist.
pub fn extract_metrics(
    source: &str,
    popularity: &PopularityTable,
    meta: &CellMeta,
) -> Result<MetricVector, MetricsError> {
    MetricExtractor::new(popularity.clone(), VisualizationAllowlist::default()).extract(source, meta)
}
