use serde_json::Value;

use super::{CellKind, IngestError, NotebookCell};

/// Cells plus the notebook-level metadata object.
#[derive(Debug, Clone, PartialEq)]
pub struct NotebookDocument {
    pub cells: Vec<NotebookCell>,
    pub metadata: Value,
}

/// Parses a version-4 notebook into cells in document order.
pub fn parse_notebook(bytes: &[u8]) -> Result<Vec<NotebookCell>, IngestError> {
    Ok(parse_notebook_document(bytes)?.cells)
}

pub fn parse_notebook_document(bytes: &[u8]) -> Result<NotebookDocument, IngestError> {
    let malformed = |m: &str| IngestError::MalformedNotebook(m.to_string());
    let doc: Value =
        serde_json::from_slice(bytes).map_err(|e| IngestError::MalformedNotebook(e.to_string()))?;
    let obj = doc.as_object().ok_or_else(|| malformed("top level is not an object"))?;
    let version = obj
        .get("nbformat")
        .and_then(Value::as_i64)
        .ok_or_else(|| malformed("missing integer 'nbformat'"))?;
    if version != 4 {
        return Err(IngestError::UnsupportedFormatVersion(version));
    }
    let raw_cells = obj
        .get("cells")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing 'cells' array"))?;

    let mut cells = Vec::with_capacity(raw_cells.len());
    for (index, raw) in raw_cells.iter().enumerate() {
        let cell = raw
            .as_object()
            .ok_or_else(|| IngestError::MalformedNotebook(format!("cell {index} is not an object")))?;
        let kind = match cell.get("cell_type").and_then(Value::as_str) {
            Some("code") => CellKind::Code,
            Some("markdown") => CellKind::Markdown,
            Some("raw") => CellKind::Raw,
            other => {
                return Err(IngestError::MalformedNotebook(format!(
                    "cell {index} has invalid cell_type {other:?}"
                )))
            }
        };
        let source = match cell.get("source") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Array(parts)) => {
                let mut joined = String::new();
                for p in parts {
                    joined.push_str(p.as_str().ok_or_else(|| {
                        IngestError::MalformedNotebook(format!("cell {index} source fragment is not a string"))
                    })?);
                }
                joined
            }
            _ => {
                return Err(IngestError::MalformedNotebook(format!("cell {index} has no source")))
            }
        };
        let (execution_count, has_outputs) = if kind == CellKind::Code {
            let count = match cell.get("execution_count") {
                None | Some(Value::Null) => None,
                Some(v) => Some(v.as_u64().ok_or_else(|| {
                    IngestError::MalformedNotebook(format!("cell {index} has invalid execution_count"))
                })?),
            };
            let outputs = cell
                .get("outputs")
                .and_then(Value::as_array)
                .is_some_and(|o| !o.is_empty());
            (count, outputs)
        } else {
            (None, false)
        };
        cells.push(NotebookCell { index, kind, source, execution_count, has_outputs });
    }
    let metadata = obj.get("metadata").cloned().unwrap_or(Value::Null);
    Ok(NotebookDocument { cells, metadata })
}
