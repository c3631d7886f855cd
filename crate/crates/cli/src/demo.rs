//! The motivating example: document a short pandas cell, with a histogram
//! cell as the single exemplar.

use nbdoc_core::ingest::CellMeta;
use nbdoc_core::metrics::{MetricExtractor, MetricVector, MetricsError, METRIC_ABBREVIATIONS};
use nbdoc_core::prompting::{complete, render_prompt, Completer, EchoCompleter, Shot, TemplateId};

use crate::stages::Context;
use crate::CliError;

pub const LISTING_A: &str = "import pandas as pd\ndf = pd.read_csv(\"data.csv\")\nmean_value = df[\"age\"].mean()\nprint(mean_value)\n";
pub const LISTING_A_MARKDOWN: &str = "Calculate and display the average age from the dataset.";
pub const LISTING_B: &str = "import numpy as np\nimport matplotlib.pyplot as plt\n\nvalues = np.random.normal(50, 10, 100)\nplt.hist(values, bins=10)\nplt.show()\n";
pub const LISTING_B_MARKDOWN: &str = "Plot a histogram of randomly generated values.";

fn metric_table(a: &MetricVector, b: &MetricVector) -> String {
    let (fa, fb) = (a.formatted(), b.formatted());
    let mut out = format!("{:<8} {:>10} {:>10}\n", "metric", "listing A", "listing B");
    for (k, abbr) in METRIC_ABBREVIATIONS.iter().enumerate() {
        out.push_str(&format!("{:<8} {:>10} {:>10}\n", abbr, fa[k].1, fb[k].1));
    }
    out
}

/// Builds the demo text; written to stdout and, under a config, to `demo.txt`.
pub fn run(ctx: &Context) -> Result<String, CliError> {
    let f = |cause: String| CliError::StageFailed { stage: "demo", cause };
    let extractor = MetricExtractor::default();
    let metrics = |code: &str| -> Result<MetricVector, MetricsError> { extractor.extract_cell(code, &CellMeta::default()) };
    let a = metrics(LISTING_A).map_err(|e| f(e.to_string()))?;
    let b = metrics(LISTING_B).map_err(|e| f(e.to_string()))?;
    let shot = Shot { code: LISTING_B.into(), metrics: Some(b), markdown: LISTING_B_MARKDOWN.into() };

    let completer: Box<dyn Completer> = if ctx.config.offline {
        Box::new(EchoCompleter::new([(LISTING_A.to_string(), LISTING_A_MARKDOWN.to_string())].into()))
    } else {
        Box::new(crate::stages::chat_client(ctx, &ctx.config.generator))
    };

    let mut out = String::from("== metrics ==\n");
    out.push_str(&metric_table(&a, &b));
    for template in [TemplateId::NoMetric, TemplateId::WithMetric] {
        let spec = render_prompt(LISTING_A, std::slice::from_ref(&shot), template, &metrics)
            .map_err(|e| f(e.to_string()))?;
        let generated = complete(&spec, completer.as_ref()).map_err(|e| f(e.to_string()))?;
        out.push_str(&format!("\n== {} prompt ==\n{}", template.name(), spec.rendered));
        out.push_str(&format!("\n== {} documentation ==\n{generated}\n", template.name()));
    }
    out.push_str(&format!("\n== reference ==\n{LISTING_A_MARKDOWN}\n"));
    Ok(out)
}
