use super::{normalize_markdown, CellKind, CodeMarkdownPair, NotebookCell, PairId, PairProvenance};

/// Pairs each code cell that sits directly between two markdown cells with
/// the markdown cell preceding it.
///
/// Code cells at the notebook boundary and whitespace-only code cells are
/// never paired. Returned pairs carry `pair_id = 0`; ids are assigned when the
/// corpus is assembled (see [`number_pairs`]).
pub fn pair_cells(cells: &[NotebookCell], provenance: &PairProvenance) -> Vec<CodeMarkdownPair> {
    cells
        .windows(3)
        .filter(|w| {
            w[0].kind == CellKind::Markdown
                && w[1].kind == CellKind::Code
                && w[2].kind == CellKind::Markdown
                && !w[1].source.trim().is_empty()
        })
        .map(|w| CodeMarkdownPair {
            pair_id: 0,
            code: w[1].source.clone(),
            markdown_raw: w[0].source.clone(),
            markdown_normalized: normalize_markdown(&w[0].source),
            provenance: provenance.clone(),
            cell_meta: w[1].meta(),
        })
        .collect()
}

/// Assigns consecutive ids starting at `first`; returns the next free id.
pub fn number_pairs(pairs: &mut [CodeMarkdownPair], first: PairId) -> PairId {
    let mut next = first;
    for p in pairs {
        p.pair_id = next;
        next += 1;
    }
    next
}
