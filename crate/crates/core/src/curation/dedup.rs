//! Near-duplicate grouping over code cells.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;

use crate::metrics::sanitize_cell_source;
use crate::par::Execution;

pub const SHINGLE_SIZE: usize = 5;

fn code_tokens(code: &str) -> Vec<&str> {
    static TOKEN: OnceLock<Regex> = OnceLock::new();
    let re = TOKEN.get_or_init(|| Regex::new(r"\w+|[^\w\s]").expect("static pattern"));
    re.find_iter(code).map(|m| m.as_str()).collect()
}

/// Set of 5-token shingles. A sequence shorter than 5 tokens forms a single
/// shingle of the whole sequence; an empty one forms none.
pub fn shingles(code: &str) -> HashSet<Vec<String>> {
    let sanitized = sanitize_cell_source(code);
    let tokens: Vec<String> = code_tokens(&sanitized).into_iter().map(String::from).collect();
    if tokens.is_empty() {
        return HashSet::new();
    }
    if tokens.len() < SHINGLE_SIZE {
        return HashSet::from([tokens]);
    }
    tokens.windows(SHINGLE_SIZE).map(<[String]>::to_vec).collect()
}

/// Jaccard index of two shingle sets; two empty sets are identical.
pub fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

pub fn code_similarity(a: &str, b: &str) -> f64 {
    jaccard(&shingles(a), &shingles(b))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Keeps the smaller index as root so roots are group minima.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Partition of item positions into duplicate groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateGroups {
    /// Each group ascending; groups ordered by their first member.
    pub groups: Vec<Vec<usize>>,
}

impl DuplicateGroups {
    /// Position of the kept member of each group (its smallest position).
    pub fn representatives(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g[0]).collect()
    }

    pub fn removed(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.groups.iter().flat_map(|g| g[1..].iter().copied()).collect();
        r.sort_unstable();
        r
    }
}

/// Joins every pair with `similarity > threshold` transitively.
pub fn group_edges(n: usize, edges: &[(usize, usize)]) -> DuplicateGroups {
    let mut uf = UnionFind::new(n);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = uf.find(i);
        by_root.entry(root).or_default().push(i);
    }
    DuplicateGroups { groups: by_root.into_values().collect() }
}

/// Edges `(i, j)`, `i < j`, whose similarity exceeds `threshold`.
pub fn similarity_edges<F>(n: usize, threshold: f64, exec: Execution, sim: F) -> Vec<(usize, usize)>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    exec.map_range(n, |i| {
        ((i + 1)..n).filter(|&j| sim(i, j) > threshold).map(|j| (i, j)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Groups code cells whose shingle Jaccard similarity exceeds `threshold`.
/// Positions in `corpus` serve as the stable ids.
pub fn near_duplicates<S: AsRef<str> + Sync>(
    corpus: &[S],
    threshold: f64,
    exec: Execution,
) -> DuplicateGroups {
    let sets = exec.map(corpus, |c| shingles(c.as_ref()));
    let edges = similarity_edges(sets.len(), threshold, exec, |i, j| jaccard(&sets[i], &sets[j]));
    group_edges(sets.len(), &edges)
}
