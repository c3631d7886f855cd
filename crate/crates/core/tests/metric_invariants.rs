mod common;

use std::time::Instant;

use nbdoc_core::ingest::CellMeta;
use nbdoc_core::metrics::{extract_metrics, MetricVector, PopularityTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn metrics(code: &str) -> MetricVector {
    extract_metrics(code, &PopularityTable::default(), &CellMeta::default())
        .unwrap_or_else(|e| panic!("{e}\n{code}"))
}

#[test]
fn fuzzed_cells_respect_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let code = common::fuzz::fuzz_cell(&mut rng);
        let m = metrics(&code);
        assert!(m.uoprnd <= m.oprnd, "{code}");
        assert!(m.uoprat <= m.oprator, "{code}");
        assert!(m.blc + m.locom <= m.loc, "{code}");
        assert!(m.cyc >= 1, "{code}");
        assert!(m.s >= 1);

        let mut longer = code.clone();
        longer.push('\n');
        let n = metrics(&longer);
        let (a, b) = (m.to_array(), n.to_array());
        for col in 0..a.len() {
            // loc, blc, allc
            if [0, 1, 14].contains(&col) {
                continue;
            }
            assert_eq!(a[col], b[col], "column {col} changed\n{code}");
        }
        assert_eq!(n.loc, m.loc + 1);
        assert_eq!(n.blc, m.blc + 1);
    }
    assert!(start.elapsed().as_secs() < 30);
}
