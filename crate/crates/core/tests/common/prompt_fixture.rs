//! The prompt fixture: the pandas listing as query, the histogram listing
//! first among five described exemplars.

#![allow(dead_code)]

use nbdoc_core::metrics::{MetricExtractor, PopularityTable, VisualizationAllowlist};
use nbdoc_core::prompting::Shot;
use serde_json::Value;

pub const SNAPSHOT_SHOTS: [usize; 3] = [0, 1, 5];

pub const FIXTURE: &str = include_str!("../fixtures/golden_cells.json");

pub fn cell(v: &Value, name: &str) -> String {
    v["cells"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()["code"]
        .as_str()
        .unwrap()
        .to_string()
}

pub struct Setup {
    pub query: String,
    pub shots: Vec<Shot>,
    pub extractor: MetricExtractor,
}

pub fn setup() -> Setup {
    let v: Value = serde_json::from_str(FIXTURE).unwrap();
    let pop: PopularityTable = serde_json::from_value(v["popularity"].clone()).unwrap();
    let described = [
        ("numpy_histogram", "Plot a histogram of randomly generated values."),
        ("scale_function", "Define a helper that rescales a column to the unit range."),
        ("seaborn_plot", "Draw a scatter plot of the two features."),
        ("sklearn_split", "Split the data into training and test sets."),
        ("running_total", "Accumulate a running total over the values."),
    ];
    let shots = described
        .iter()
        .map(|(name, md)| Shot { code: cell(&v, name), metrics: None, markdown: md.to_string() })
        .collect();
    Setup {
        query: cell(&v, "pandas_mean"),
        shots,
        extractor: MetricExtractor::new(pop, VisualizationAllowlist::default()),
    }
}

