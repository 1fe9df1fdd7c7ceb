//! Construction-free ground truth: a backtracking search for induced
//! embeddings, a direct verifier for vertex maps, and an antichain probe.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{labels_adjacent, DenseGraph, Label, PowerGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("map is not defined on vertex {0}")]
    NotTotal(Label),
    #[error("map is not injective: {0} has two preimages")]
    NotInjective(Label),
    #[error("node limit must be at least 1")]
    ZeroBudget,
    #[error("antichain search supports n <= {max}, got {n}")]
    TooLarge { n: u64, max: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    ConstructedPhi,
    ConstructedLongfactor,
    Oracle,
}

/// Injective map from the labels of one graph to the labels of another.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMap")]
pub struct EmbeddingMap {
    pairs: Vec<(Label, Label)>,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct RawMap {
    pairs: Vec<(Label, Label)>,
    provenance: Provenance,
}

impl TryFrom<RawMap> for EmbeddingMap {
    type Error = OracleError;

    fn try_from(raw: RawMap) -> Result<Self, Self::Error> {
        EmbeddingMap::new(raw.pairs, raw.provenance)
    }
}

impl EmbeddingMap {
    /// Sorts by source label and rejects non-injective input.
    pub fn new(mut pairs: Vec<(Label, Label)>, provenance: Provenance) -> Result<Self, OracleError> {
        pairs.sort_unstable();
        pairs.dedup();
        let mut seen: Vec<Label> = pairs.iter().map(|p| p.1).collect();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(OracleError::NotInjective(w[0]));
        }
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(OracleError::NotInjective(w[0].0));
        }
        Ok(EmbeddingMap { pairs, provenance })
    }

    pub fn identity(g: &PowerGraph, provenance: Provenance) -> Self {
        EmbeddingMap { pairs: g.labels().iter().map(|&l| (l, l)).collect(), provenance }
    }

    pub fn get(&self, from: Label) -> Option<Label> {
        self.pairs.binary_search_by_key(&from, |p| p.0).ok().map(|i| self.pairs[i].1)
    }

    pub fn pairs(&self) -> &[(Label, Label)] {
        &self.pairs
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.iter().all(|(a, b)| a == b)
    }

    /// `other ∘ self`; `None` if some image of `self` is outside `other`'s domain.
    pub fn then(&self, other: &EmbeddingMap) -> Option<EmbeddingMap> {
        let pairs = self
            .pairs
            .iter()
            .map(|&(a, b)| other.get(b).map(|c| (a, c)))
            .collect::<Option<Vec<_>>>()?;
        Some(EmbeddingMap { pairs, provenance: self.provenance })
    }
}

/// True iff `map` is an induced embedding of `g` into `h`: injective, lands in
/// `h`, and preserves both adjacency and non-adjacency.
pub fn verify_embedding(map: &EmbeddingMap, g: &PowerGraph, h: &PowerGraph) -> Result<bool, OracleError> {
    let image = g
        .labels()
        .iter()
        .map(|&l| map.get(l).ok_or(OracleError::NotTotal(l)))
        .collect::<Result<Vec<_>, _>>()?;
    if !image.iter().all(|&l| h.contains(l)) {
        return Ok(false);
    }
    let mut sorted = image.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Ok(false);
    }
    let labels = g.labels();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels_adjacent(labels[i], labels[j]) != labels_adjacent(image[i], image[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Search-tree node limit. Running out yields [`Verdict::Inconclusive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    node_limit: u64,
}

impl SearchBudget {
    pub const DEFAULT_NODES: u64 = 10_000_000;

    pub fn new(node_limit: u64) -> Result<Self, OracleError> {
        if node_limit == 0 {
            return Err(OracleError::ZeroBudget);
        }
        Ok(SearchBudget { node_limit })
    }

    pub fn node_limit(&self) -> u64 {
        self.node_limit
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { node_limit: Self::DEFAULT_NODES }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "map", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict<M> {
    Embeds(M),
    NotEmbeds,
    Inconclusive,
}

impl<M> Verdict<M> {
    pub fn embeds(&self) -> bool {
        matches!(self, Verdict::Embeds(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Embeds(_) => "EMBEDS",
            Verdict::NotEmbeds => "NOT_EMBEDS",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

struct Search<'a> {
    g: &'a DenseGraph,
    h: &'a DenseGraph,
    order: Vec<usize>,
    /// Images of `order[..depth]`.
    mapping: Vec<usize>,
    used: Vec<u64>,
    nodes: u64,
    limit: u64,
    h_deg: Vec<usize>,
    g_deg: Vec<usize>,
}

enum Step {
    Found,
    Exhausted,
    OutOfBudget,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) -> Step {
        if depth == self.order.len() {
            return Step::Found;
        }
        let v = self.order[depth];
        let words = self.h.words();
        let mut cand: Vec<u64> = self.used.iter().map(|u| !u).collect();
        let tail = self.h.order() % 64;
        if tail != 0 || self.h.order() == 0 {
            let last = words - 1;
            cand[last] &= if self.h.order() == 0 { 0 } else { (1u64 << tail) - 1 };
        }
        for (d, &u) in self.order[..depth].iter().enumerate() {
            let image = self.mapping[d];
            let row = self.h.row(image);
            if self.g.has_edge(u, v) {
                cand.iter_mut().zip(row).for_each(|(c, r)| *c &= r);
            } else {
                cand.iter_mut().zip(row).for_each(|(c, r)| *c &= !r);
                cand[image / 64] &= !(1 << (image % 64));
            }
        }
        for (wi, word) in cand.iter().enumerate() {
            let mut bits = *word;
            while bits != 0 {
                let w = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if self.h_deg[w] < self.g_deg[v] {
                    continue;
                }
                self.nodes += 1;
                if self.nodes > self.limit {
                    return Step::OutOfBudget;
                }
                self.mapping.push(w);
                self.used[w / 64] |= 1 << (w % 64);
                match self.run(depth + 1) {
                    Step::Exhausted => {}
                    other => return other,
                }
                self.used[w / 64] &= !(1 << (w % 64));
                self.mapping.pop();
            }
        }
        Step::Exhausted
    }
}

/// Vertices of `g` ordered most-constrained-first: each step takes the vertex
/// with the most already-ordered neighbours, then the highest degree.
fn search_order(g: &DenseGraph) -> Vec<usize> {
    let n = g.order();
    let deg: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut placed = vec![false; n];
    let mut back = vec![0usize; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&i| !placed[i])
            .max_by(|&a, &b| (back[a], deg[a], std::cmp::Reverse(a)).cmp(&(back[b], deg[b], std::cmp::Reverse(b))))
            .unwrap();
        placed[v] = true;
        order.push(v);
        for (u, b) in back.iter_mut().enumerate() {
            if g.has_edge(u, v) {
                *b += 1;
            }
        }
    }
    order
}

/// Searches for an injective `f: V(g) -> V(h)` with `x ~ y <=> f(x) ~ f(y)`.
///
/// `NotEmbeds` is only returned after the search tree is exhausted; hitting
/// the node limit gives `Inconclusive`. The search is deterministic, so a
/// larger budget never changes a resolved answer.
pub fn induced_embeds(g: &DenseGraph, h: &DenseGraph, budget: SearchBudget) -> Verdict<Vec<usize>> {
    let (n, m) = (g.order(), h.order());
    if n > m {
        return Verdict::NotEmbeds;
    }
    let (ge, he) = (g.edge_count(), h.edge_count());
    let pairs = |k: usize| k * k.saturating_sub(1) / 2;
    if ge > he || pairs(n) - ge > pairs(m) - he {
        return Verdict::NotEmbeds;
    }
    let mut search = Search {
        g,
        h,
        order: search_order(g),
        mapping: Vec::with_capacity(n),
        used: vec![0; h.words()],
        nodes: 0,
        limit: budget.node_limit,
        h_deg: (0..m).map(|i| h.degree(i)).collect(),
        g_deg: (0..n).map(|i| g.degree(i)).collect(),
    };
    match search.run(0) {
        Step::Found => {
            let mut f = vec![0; n];
            for (d, &v) in search.order.iter().enumerate() {
                f[v] = search.mapping[d];
            }
            debug_assert!(is_induced_map(g, h, &f));
            Verdict::Embeds(f)
        }
        Step::Exhausted => Verdict::NotEmbeds,
        Step::OutOfBudget => Verdict::Inconclusive,
    }
}

fn is_induced_map(g: &DenseGraph, h: &DenseGraph, f: &[usize]) -> bool {
    let mut seen = f.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == f.len()
        && (0..g.order()).all(|i| (i + 1..g.order()).all(|j| g.has_edge(i, j) == h.has_edge(f[i], f[j])))
}

/// [`induced_embeds`] on label sets, returning a label map.
pub fn induced_embeds_labels(g: &PowerGraph, h: &PowerGraph, budget: SearchBudget) -> Verdict<EmbeddingMap> {
    match induced_embeds(&g.to_dense(), &h.to_dense(), budget) {
        Verdict::Embeds(f) => {
            let pairs = f.iter().enumerate().map(|(i, &w)| (g.labels()[i], h.labels()[w])).collect();
            Verdict::Embeds(EmbeddingMap::new(pairs, Provenance::Oracle).expect("search maps are injective"))
        }
        Verdict::NotEmbeds => Verdict::NotEmbeds,
        Verdict::Inconclusive => Verdict::Inconclusive,
    }
}

pub const ANTICHAIN_MAX_N: u64 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntichainReport {
    pub n: u64,
    /// Label sets of the family, pairwise incomparable.
    pub family: Vec<Vec<Label>>,
    /// Isomorphism classes among the `2^n` induced subgraphs (upper bound if
    /// some dedup comparisons were inconclusive).
    pub classes: usize,
    /// Every pairwise comparison and the clique search ran to completion, so
    /// no larger antichain exists (or `max_size` was reached).
    pub complete: bool,
    /// Pairs checked `NOT_EMBEDS` in both directions; always `C(|family|, 2)`.
    pub certified_pairs: usize,
}

/// Searches for a large family of pairwise incomparable induced subgraphs of
/// `D_n`.
///
/// Subgraphs are first merged into isomorphism classes (equal order plus an
/// oracle embedding), then a branch-and-bound maximum clique runs on the
/// "incomparable" relation between classes. Any inconclusive oracle call
/// counts as comparable, so the returned family is always certified.
pub fn antichain_search(n: u64, max_size: usize, budget: SearchBudget) -> Result<AntichainReport, OracleError> {
    if n > ANTICHAIN_MAX_N {
        return Err(OracleError::TooLarge { n, max: ANTICHAIN_MAX_N });
    }
    let dn = PowerGraph::dn(n.max(1)).expect("n >= 1");
    let base: Vec<Label> = if n == 0 { Vec::new() } else { dn.labels().to_vec() };
    let mut complete = true;

    // Isomorphism classes: bucket by cheap invariants, confirm with the oracle.
    type Key = (usize, usize, Vec<usize>);
    let mut buckets: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    let mut reps: Vec<(PowerGraph, DenseGraph)> = Vec::new();
    for mask in 0u64..1 << base.len() {
        let g = PowerGraph::from_labels((0..base.len()).filter(|i| mask >> i & 1 == 1).map(|i| base[i]))
            .expect("labels from D_n");
        let d = g.to_dense();
        let mut degs: Vec<usize> = (0..d.order()).map(|i| d.degree(i)).collect();
        degs.sort_unstable();
        let bucket = buckets.entry((d.order(), d.edge_count(), degs)).or_default();
        let mut duplicate = false;
        for &r in bucket.iter() {
            match induced_embeds(&d, &reps[r].1, budget) {
                Verdict::Embeds(_) => {
                    duplicate = true;
                    break;
                }
                Verdict::NotEmbeds => {}
                Verdict::Inconclusive => complete = false,
            }
        }
        if !duplicate {
            bucket.push(reps.len());
            reps.push((g, d));
        }
    }

    let k = reps.len();
    let words = k.div_ceil(64).max(1);
    let mut incomparable = vec![0u64; k * words];
    for a in 0..k {
        for b in a + 1..k {
            let ab = induced_embeds(&reps[a].1, &reps[b].1, budget);
            let ba = induced_embeds(&reps[b].1, &reps[a].1, budget);
            if matches!(ab, Verdict::Inconclusive) || matches!(ba, Verdict::Inconclusive) {
                complete = false;
            }
            if ab == Verdict::NotEmbeds && ba == Verdict::NotEmbeds {
                incomparable[a * words + b / 64] |= 1 << (b % 64);
                incomparable[b * words + a / 64] |= 1 << (a % 64);
            }
        }
    }

    let mut clique = CliqueSearch {
        adj: &incomparable,
        words,
        best: Vec::new(),
        target: max_size.max(1),
        nodes: 0,
        limit: budget.node_limit(),
        aborted: false,
    };
    let mut all = vec![0u64; words];
    for v in 0..k {
        all[v / 64] |= 1 << (v % 64);
    }
    clique.expand(&mut Vec::new(), all);
    if clique.aborted {
        complete = false;
    }
    let mut family: Vec<Vec<Label>> = clique.best.iter().map(|&r| reps[r].0.labels().to_vec()).collect();
    family.sort();
    let size = family.len();
    Ok(AntichainReport {
        n,
        family,
        classes: k,
        complete,
        certified_pairs: size * size.saturating_sub(1) / 2,
    })
}

struct CliqueSearch<'a> {
    adj: &'a [u64],
    words: usize,
    best: Vec<usize>,
    target: usize,
    nodes: u64,
    limit: u64,
    aborted: bool,
}

impl CliqueSearch<'_> {
    fn expand(&mut self, current: &mut Vec<usize>, mut cand: Vec<u64>) {
        if current.len() > self.best.len() {
            self.best = current.clone();
        }
        loop {
            if self.best.len() >= self.target || self.aborted {
                return;
            }
            let remaining: usize = cand.iter().map(|w| w.count_ones() as usize).sum();
            if remaining == 0 || current.len() + remaining <= self.best.len() {
                return;
            }
            self.nodes += 1;
            if self.nodes > self.limit {
                self.aborted = true;
                return;
            }
            let wi = cand.iter().position(|&w| w != 0).unwrap();
            let v = wi * 64 + cand[wi].trailing_zeros() as usize;
            cand[v / 64] &= !(1 << (v % 64));
            let row = &self.adj[v * self.words..(v + 1) * self.words];
            let next: Vec<u64> = cand.iter().zip(row).map(|(c, r)| c & r).collect();
            current.push(v);
            self.expand(current, next);
            current.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(order: usize, edges: &[(usize, usize)]) -> DenseGraph {
        DenseGraph::from_edges(order, edges.iter().copied()).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let budget = SearchBudget::default();
        let h = PowerGraph::dn(16).unwrap().to_dense();
        assert_eq!(induced_embeds(&DenseGraph::new(0), &h, budget), Verdict::Embeds(vec![]));
        let d4 = PowerGraph::dn(4).unwrap().to_dense();
        match induced_embeds(&d4, &h, budget) {
            Verdict::Embeds(f) => assert!(is_induced_map(&d4, &h, &f)),
            other => panic!("{other:?}"),
        }
        let triangle = dense(3, &[(0, 1), (1, 2), (0, 2)]);
        let path = dense(3, &[(0, 1), (1, 2)]);
        assert_eq!(induced_embeds(&triangle, &path, budget), Verdict::NotEmbeds);
        // P3 is not an induced subgraph of K4, although it is a subgraph.
        let k4 = dense(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(induced_embeds(&path, &k4, budget), Verdict::NotEmbeds);
        assert!(induced_embeds(&path, &dense(4, &[(0, 1), (1, 2), (2, 3)]), budget).embeds());
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        assert_eq!(SearchBudget::new(0), Err(OracleError::ZeroBudget));
        let g = PowerGraph::dn(10).unwrap().to_dense();
        let h = PowerGraph::dn(40).unwrap().to_dense();
        let tiny = induced_embeds(&g, &h, SearchBudget::new(3).unwrap());
        assert_eq!(tiny, Verdict::Inconclusive);
        assert!(induced_embeds(&g, &h, SearchBudget::default()).embeds());
    }

    #[test]
    fn verify_examples() {
        let g = PowerGraph::from_labels([1, 2, 3]).unwrap();
        let host = PowerGraph::dn(16).unwrap();
        assert!(verify_embedding(&EmbeddingMap::identity(&g, Provenance::Oracle), &g, &g).unwrap());
        let shift = EmbeddingMap::new(vec![(1, 5), (2, 6), (3, 7)], Provenance::ConstructedLongfactor).unwrap();
        assert!(verify_embedding(&shift, &g, &host).unwrap());
        let pair = PowerGraph::from_labels([1, 2]).unwrap();
        // 1 and 3 are both odd, hence adjacent in every host; 3 and 8 are not.
        let host = PowerGraph::from_labels([1, 3, 8]).unwrap();
        let kept = EmbeddingMap::new(vec![(1, 1), (2, 3)], Provenance::Oracle).unwrap();
        let broken = EmbeddingMap::new(vec![(1, 3), (2, 8)], Provenance::Oracle).unwrap();
        assert!(verify_embedding(&kept, &pair, &host).unwrap());
        assert!(!verify_embedding(&broken, &pair, &host).unwrap());
        let host = PowerGraph::dn(16).unwrap();
        let partial = EmbeddingMap::new(vec![(1, 5)], Provenance::Oracle).unwrap();
        assert_eq!(verify_embedding(&partial, &g, &host), Err(OracleError::NotTotal(2)));
        let outside = EmbeddingMap::new(vec![(1, 40)], Provenance::Oracle).unwrap();
        assert!(!verify_embedding(&outside, &pair.induced([1]).unwrap(), &host).unwrap());
        assert!(EmbeddingMap::new(vec![(1, 5), (2, 5)], Provenance::Oracle).is_err());
    }

    #[test]
    fn map_json_shape() {
        let m = EmbeddingMap::new(vec![(9, 1)], Provenance::ConstructedPhi).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"pairs":[[9,1]],"provenance":"CONSTRUCTED_PHI"}"#);
        let back: EmbeddingMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<EmbeddingMap>(r#"{"pairs":[[1,2],[3,2]],"provenance":"ORACLE"}"#).is_err());
    }

    #[test]
    fn antichain_small() {
        let r = antichain_search(1, 10, SearchBudget::default()).unwrap();
        assert_eq!(r.family.len(), 1);
        assert!(r.complete);
        assert_eq!(r.classes, 2);
        assert!(antichain_search(13, 3, SearchBudget::default()).is_err());
        let r = antichain_search(5, 2, SearchBudget::default()).unwrap();
        assert_eq!(r.family.len(), 2);
    }
}
