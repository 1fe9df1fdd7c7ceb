//! The graphs `D_n` and their induced subgraphs.
//!
//! A [`PowerGraph`] is nothing more than a sorted set of positive integer
//! labels. Adjacency is never stored: two distinct labels `a`, `b` are
//! adjacent iff they are consecutive integers (a *path* edge of the body) or
//! they have the same power `q(a) = q(b)` (a *clique* edge). Because
//! consecutive integers always have different powers, every edge has exactly
//! one [`EdgeKind`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{Instance, LemmaReport};

/// Vertex identity inside the body path `1, 2, ..., n`.
pub type Label = u64;

/// Default upper bound on labels accepted by [`PowerGraph`] constructors.
pub const DEFAULT_LABEL_CAP: Label = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("the power q(i) is only defined for i >= 1")]
    ZeroLabel,
    #[error("label {label} exceeds the configured maximum {cap}")]
    LabelOverflow { label: Label, cap: Label },
    #[error("label {0} is not a vertex of this graph")]
    UnknownLabel(Label),
    #[error("D_n requires n >= 1")]
    EmptyDn,
    #[error("invalid interval [{start}, {end}]")]
    BadInterval { start: Label, end: Label },
    #[error("vertex index {index} out of range for a graph of order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("self-loops are not allowed (vertex {0})")]
    SelfLoop(usize),
}

/// Largest power of two dividing `i`.
pub fn power(i: Label) -> Result<Label, GraphError> {
    if i == 0 {
        return Err(GraphError::ZeroLabel);
    }
    Ok(i & i.wrapping_neg())
}

/// Exponent `k` with `q(i) = 2^k`.
pub fn power_exponent(i: Label) -> Result<u32, GraphError> {
    if i == 0 {
        return Err(GraphError::ZeroLabel);
    }
    Ok(i.trailing_zeros())
}

/// Adjacency rule of `D_n` on raw labels (both assumed `>= 1`).
#[inline]
pub fn labels_adjacent(a: Label, b: Label) -> bool {
    a != b && (a.abs_diff(b) == 1 || a.trailing_zeros() == b.trailing_zeros())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeKind {
    Path,
    Clique,
}

/// Kind of the edge between two raw labels, `None` if they are not adjacent.
#[inline]
pub fn edge_kind_of(a: Label, b: Label) -> Option<EdgeKind> {
    if a == b {
        None
    } else if a.abs_diff(b) == 1 {
        Some(EdgeKind::Path)
    } else if a.trailing_zeros() == b.trailing_zeros() {
        Some(EdgeKind::Clique)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub a: Label,
    pub b: Label,
    pub kind: EdgeKind,
}

/// Index-based view of an undirected simple graph.
///
/// Vertices are `0..order()`. For a [`PowerGraph`], index `i` is the `i`-th
/// smallest label.
pub trait Adjacency {
    fn order(&self) -> usize;

    fn is_edge(&self, i: usize, j: usize) -> bool;

    /// External name of vertex `i`, used in reports.
    fn label(&self, i: usize) -> Label {
        i as Label
    }

    fn index_of(&self, label: Label) -> Option<usize> {
        let i = usize::try_from(label).ok()?;
        (i < self.order()).then_some(i)
    }

    /// `Some(n)` when the graph is exactly `D_n` with its natural labels.
    fn full_dn(&self) -> Option<usize> {
        None
    }
}

/// A member of the class: an induced subgraph of some `D_n`, identified by its
/// label set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PowerGraph {
    labels: Vec<Label>,
}

impl PowerGraph {
    pub fn empty() -> Self {
        PowerGraph { labels: Vec::new() }
    }

    /// The full graph `D_n` on labels `1..=n`.
    pub fn dn(n: Label) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyDn);
        }
        if n > DEFAULT_LABEL_CAP {
            return Err(GraphError::LabelOverflow { label: n, cap: DEFAULT_LABEL_CAP });
        }
        Ok(PowerGraph { labels: (1..=n).collect() })
    }

    pub fn from_labels<I: IntoIterator<Item = Label>>(labels: I) -> Result<Self, GraphError> {
        Self::from_labels_with_cap(labels, DEFAULT_LABEL_CAP)
    }

    /// Builds a graph from arbitrary labels; duplicates collapse.
    pub fn from_labels_with_cap<I: IntoIterator<Item = Label>>(
        labels: I,
        cap: Label,
    ) -> Result<Self, GraphError> {
        let mut labels: Vec<Label> = labels.into_iter().collect();
        for &l in &labels {
            if l == 0 {
                return Err(GraphError::ZeroLabel);
            }
            if l > cap {
                return Err(GraphError::LabelOverflow { label: l, cap });
            }
        }
        labels.sort_unstable();
        labels.dedup();
        Ok(PowerGraph { labels })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn max_label(&self) -> Option<Label> {
        self.labels.last().copied()
    }

    pub fn contains(&self, label: Label) -> bool {
        self.labels.binary_search(&label).is_ok()
    }

    pub fn rank(&self, label: Label) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    /// True iff the label set is exactly `{1, ..., n}` for some `n >= 1`.
    pub fn is_full_dn(&self) -> bool {
        self.labels.last().is_some_and(|&m| m == self.labels.len() as Label)
    }

    fn require(&self, label: Label) -> Result<(), GraphError> {
        if self.contains(label) {
            Ok(())
        } else {
            Err(GraphError::UnknownLabel(label))
        }
    }

    pub fn adjacent(&self, a: Label, b: Label) -> Result<bool, GraphError> {
        self.require(a)?;
        self.require(b)?;
        Ok(labels_adjacent(a, b))
    }

    pub fn edge_kind(&self, a: Label, b: Label) -> Result<Option<EdgeKind>, GraphError> {
        self.require(a)?;
        self.require(b)?;
        Ok(edge_kind_of(a, b))
    }

    /// Induced subgraph on `subset`, which must consist of labels of `self`.
    pub fn induced<I: IntoIterator<Item = Label>>(&self, subset: I) -> Result<PowerGraph, GraphError> {
        let mut labels: Vec<Label> = subset.into_iter().collect();
        for &l in &labels {
            self.require(l)?;
        }
        labels.sort_unstable();
        labels.dedup();
        Ok(PowerGraph { labels })
    }

    /// Retained members of each power clique, keyed by the power.
    pub fn power_cliques(&self) -> BTreeMap<Label, Vec<Label>> {
        let mut cliques: BTreeMap<Label, Vec<Label>> = BTreeMap::new();
        for &l in &self.labels {
            cliques.entry(l & l.wrapping_neg()).or_default().push(l);
        }
        cliques
    }

    /// All edges with `a < b`, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        for w in self.labels.windows(2) {
            if w[1] == w[0] + 1 {
                edges.push(Edge { a: w[0], b: w[1], kind: EdgeKind::Path });
            }
        }
        for members in self.power_cliques().values() {
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    edges.push(Edge { a, b, kind: EdgeKind::Clique });
                }
            }
        }
        edges.sort_unstable();
        edges
    }

    pub fn edge_count(&self) -> usize {
        let path = self.labels.windows(2).filter(|w| w[1] == w[0] + 1).count();
        let clique: usize = self
            .power_cliques()
            .values()
            .map(|m| m.len() * m.len().saturating_sub(1) / 2)
            .sum();
        path + clique
    }

    /// Maximal runs of consecutive labels, in increasing order.
    pub fn factor_components(&self) -> Vec<Factor> {
        let mut factors = Vec::new();
        let mut iter = self.labels.iter().copied();
        let Some(first) = iter.next() else {
            return factors;
        };
        let (mut start, mut end) = (first, first);
        for l in iter {
            if l == end + 1 {
                end = l;
            } else {
                factors.push(Factor { start, end });
                start = l;
                end = l;
            }
        }
        factors.push(Factor { start, end });
        factors
    }

    /// Length of the longest factor-component (0 for the empty graph).
    pub fn max_factor_len(&self) -> u64 {
        self.factor_components().iter().map(Factor::len).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> DenseGraph {
        let mut d = DenseGraph::new(self.len());
        for e in self.edges() {
            let (i, j) = (self.rank(e.a).unwrap(), self.rank(e.b).unwrap());
            d.set_edge(i, j);
        }
        d
    }
}

impl Adjacency for PowerGraph {
    fn order(&self) -> usize {
        self.labels.len()
    }

    fn is_edge(&self, i: usize, j: usize) -> bool {
        labels_adjacent(self.labels[i], self.labels[j])
    }

    fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    fn index_of(&self, label: Label) -> Option<usize> {
        self.rank(label)
    }

    fn full_dn(&self) -> Option<usize> {
        self.is_full_dn().then_some(self.labels.len())
    }
}

impl fmt::Display for PowerGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.labels {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
            first = false;
        }
        Ok(())
    }
}

/// The subgraph induced by an interval `[start, end]` of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Factor {
    start: Label,
    end: Label,
}

impl Factor {
    pub fn new(start: Label, end: Label) -> Result<Self, GraphError> {
        if start == 0 || start > end {
            return Err(GraphError::BadInterval { start, end });
        }
        Ok(Factor { start, end })
    }

    /// Smallest label `s(F)`.
    pub fn start(&self) -> Label {
        self.start
    }

    pub fn end(&self) -> Label {
        self.end
    }

    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        self.start..=self.end
    }

    pub fn contains(&self, label: Label) -> bool {
        (self.start..=self.end).contains(&label)
    }

    /// The unique vertex of largest power.
    ///
    /// `start - 1` and `end` agree on every bit above the highest bit in which
    /// they differ, say bit `k`; `end` has bit `k` set. Clearing the bits of
    /// `end` below `k` gives the only multiple of `2^k` in the interval, and no
    /// multiple of `2^(k+1)` lies inside it.
    pub fn maximal_vertex(&self) -> Label {
        let diff = (self.start - 1) ^ self.end;
        let k = 63 - diff.leading_zeros();
        self.end & !((1u64 << k) - 1)
    }

    /// `m(F) - s(F)`.
    pub fn offset(&self) -> u64 {
        self.maximal_vertex() - self.start
    }

    pub fn as_graph(&self) -> PowerGraph {
        PowerGraph { labels: self.labels().collect() }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.start, self.end)
    }
}

/// Label-free graph stored as a bit-matrix, one row of words per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DenseGraph {
    order: usize,
    words: usize,
    bits: Vec<u64>,
}

impl DenseGraph {
    pub fn new(order: usize) -> Self {
        let words = order.div_ceil(64).max(1);
        DenseGraph { order, words, bits: vec![0; words * order] }
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(
        order: usize,
        edges: I,
    ) -> Result<Self, GraphError> {
        let mut g = DenseGraph::new(order);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        for v in [i, j] {
            if v >= self.order {
                return Err(GraphError::IndexOutOfRange { index: v, order: self.order });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        self.set_edge(i, j);
        Ok(())
    }

    fn set_edge(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Neighbourhood of `i` as a bitset over `0..order`.
    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.order).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.order {
            for j in i + 1..self.order {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

impl Adjacency for DenseGraph {
    fn order(&self) -> usize {
        self.order
    }

    fn is_edge(&self, i: usize, j: usize) -> bool {
        self.has_edge(i, j)
    }
}

/// Label intervals `[a, b]` with `1 <= a <= b <= max` and `b - a < max_len`.
fn intervals(max: Label, max_len: u64) -> impl Iterator<Item = (Label, Label)> {
    (1..=max).flat_map(move |a| (a..=max.min(a + max_len - 1)).map(move |b| (a, b)))
}

/// Every interval has exactly one vertex of largest power, and it is the one
/// reported by [`Factor::maximal_vertex`]. Scans the powers directly.
pub fn check_maxone(max: Label, max_len: u64) -> LemmaReport {
    let mut report = LemmaReport::new("maxone");
    for a in 1..=max {
        let mut best = 0u64;
        let mut best_at = a;
        let mut ties = 0u32;
        for b in a..=max.min(a + max_len - 1) {
            let q = b & b.wrapping_neg();
            if q > best {
                best = q;
                best_at = b;
                ties = 1;
            } else if q == best {
                ties += 1;
            }
            let claimed = Factor { start: a, end: b }.maximal_vertex();
            report.record(ties == 1 && claimed == best_at, || Instance {
                witness: vec![a, b],
                observed: ties as f64,
                bound: 1.0,
                note: format!("scan maximum {best_at}, closed form {claimed}"),
            });
        }
    }
    report
}

/// For every factor of length `L` and every non-maximal `v`:
/// `q(v) = q(|m - v|)` and `q(v) < L`.
pub fn check_diffq(max: Label, max_len: u64) -> LemmaReport {
    let mut report = LemmaReport::new("diffq");
    for (a, b) in intervals(max, max_len) {
        let f = Factor { start: a, end: b };
        let m = f.maximal_vertex();
        let len = f.len();
        for v in a..=b {
            if v == m {
                continue;
            }
            let qv = v & v.wrapping_neg();
            let d = m.abs_diff(v);
            let qd = d & d.wrapping_neg();
            report.record(qv == qd && qv < len, || Instance {
                witness: vec![a, b, v],
                observed: qv as f64,
                bound: qd as f64,
                note: format!("q(v)={qv}, q(|m-v|)={qd}, length {len}"),
            });
        }
    }
    report
}

/// In a factor of length `L`, any vertex with `q >= L` is the maximal vertex.
pub fn check_maxpower(max: Label, max_len: u64) -> LemmaReport {
    let mut report = LemmaReport::new("maxpower");
    for (a, b) in intervals(max, max_len) {
        let f = Factor { start: a, end: b };
        let m = f.maximal_vertex();
        for v in a..=b {
            let qv = v & v.wrapping_neg();
            if qv >= f.len() {
                report.record(v == m, || Instance {
                    witness: vec![a, b, v],
                    observed: qv as f64,
                    bound: f.len() as f64,
                    note: format!("q({v})={qv} but maximal vertex is {m}"),
                });
            }
        }
    }
    report
}
