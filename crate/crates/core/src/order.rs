//! Factor classification, factor matrices and the `<=_c` quasi-order, plus the
//! two explicit embedding constructions.
//!
//! Every factor `F` has an *l-index* `i` with `q(m(F)) = 2^i` and a *t-class*
//! `(length, m(F) - s(F))`. For a graph whose factor-components all have
//! length at most `c`, the factor matrix counts components per
//! `(l-index, t-class)` cell. Rows with `i <= ⌊log2 c⌋` are *low* and always
//! kept; other rows are *high* and kept only when nonempty.
//!
//! `G <=_c H` holds when some injective row map fixing every low index sends
//! each row of `G` to a row of `H` that dominates it cell by cell. Whenever it
//! holds, [`build_embedding_phi`] turns the row map into an induced embedding
//! of `G` into `H`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{labels_adjacent, Factor, GraphError, Label, PowerGraph};
use crate::oracle::{
    induced_embeds_labels, verify_embedding, EmbeddingMap, OracleError, Provenance, SearchBudget, Verdict,
};
use crate::report::{Instance, LemmaReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("factor {factor} has length {len}, longer than c = {c}")]
    FactorTooLong { factor: Factor, len: u64, c: u64 },
    #[error("c must be at least 1")]
    BadC,
    #[error("matrices were built for different bounds ({0} vs {1})")]
    CMismatch(u64, u64),
    #[error("row map is not a valid <=_c witness: {0}")]
    InvalidWitness(String),
    #[error("constructed map failed verification: {0}")]
    Verification(String),
    #[error("invalid factor matrix: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// t-equivalence class: factor length and offset of the maximal vertex.
/// Ordered lexicographically on `(length, offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TClassId {
    pub length: u64,
    pub offset: u64,
}

/// l-equivalence class `L_i`: `q(m(F)) = 2^i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LIndex(pub u32);

pub fn classify_factor(f: &Factor) -> (LIndex, TClassId) {
    let m = f.maximal_vertex();
    (LIndex(m.trailing_zeros()), TClassId { length: f.len(), offset: m - f.start() })
}

/// `⌊log2 c⌋`, the largest low row index.
pub fn low_threshold(c: u64) -> Result<u32, OrderError> {
    if c == 0 {
        return Err(OrderError::BadC);
    }
    Ok(63 - c.leading_zeros())
}

/// The `C(c+1, 2)` t-classes of factors with length at most `c`, in order.
pub fn legal_columns(c: u64) -> Vec<TClassId> {
    (1..=c).flat_map(|length| (0..length).map(move |offset| TClassId { length, offset })).collect()
}

type Row = BTreeMap<TClassId, u64>;

/// Counts `|G_{i,j}|` of factor-components per l-index row and t-class column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "MatrixJson", try_from = "MatrixJson")]
pub struct FactorMatrix {
    c: u64,
    rows: BTreeMap<LIndex, Row>,
}

impl FactorMatrix {
    pub fn new(g: &PowerGraph, c: u64) -> Result<Self, OrderError> {
        let threshold = low_threshold(c)?;
        let mut rows: BTreeMap<LIndex, Row> = (0..=threshold).map(|i| (LIndex(i), Row::new())).collect();
        for f in g.factor_components() {
            if f.len() > c {
                return Err(OrderError::FactorTooLong { factor: f, len: f.len(), c });
            }
            let (l, t) = classify_factor(&f);
            *rows.entry(l).or_default().entry(t).or_insert(0) += 1;
        }
        Ok(FactorMatrix { c, rows })
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn low_threshold(&self) -> u32 {
        63 - self.c.leading_zeros()
    }

    pub fn is_low(&self, i: LIndex) -> bool {
        i.0 <= self.low_threshold()
    }

    pub fn count(&self, i: LIndex, t: TClassId) -> u64 {
        self.rows.get(&i).and_then(|r| r.get(&t)).copied().unwrap_or(0)
    }

    /// All retained rows in index order: low rows first, then nonempty high rows.
    pub fn rows(&self) -> impl Iterator<Item = (LIndex, &BTreeMap<TClassId, u64>)> {
        self.rows.iter().map(|(&i, r)| (i, r))
    }

    pub fn low_rows(&self) -> impl Iterator<Item = (LIndex, &BTreeMap<TClassId, u64>)> {
        self.rows().filter(|(i, _)| self.is_low(*i))
    }

    pub fn high_rows(&self) -> impl Iterator<Item = (LIndex, &BTreeMap<TClassId, u64>)> {
        self.rows().filter(|(i, _)| !self.is_low(*i))
    }

    pub fn row_sum(&self, i: LIndex) -> u64 {
        self.rows.get(&i).map_or(0, |r| r.values().sum())
    }

    /// Total number of factor-components counted.
    pub fn total(&self) -> u64 {
        self.rows.values().flat_map(|r| r.values()).sum()
    }
}

/// Row `small` is cell-wise at most row `big`.
fn dominated(small: &Row, big: &Row) -> bool {
    small.iter().all(|(t, &n)| big.get(t).copied().unwrap_or(0) >= n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct MatrixJson {
    c: u64,
    rows: Vec<RowJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RowJson {
    l_index: u32,
    cells: Vec<CellJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CellJson {
    length: u64,
    offset: u64,
    count: u64,
}

impl From<FactorMatrix> for MatrixJson {
    fn from(m: FactorMatrix) -> Self {
        MatrixJson {
            c: m.c,
            rows: m
                .rows
                .iter()
                .map(|(i, r)| RowJson {
                    l_index: i.0,
                    cells: r
                        .iter()
                        .map(|(t, &count)| CellJson { length: t.length, offset: t.offset, count })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MatrixJson> for FactorMatrix {
    type Error = OrderError;

    fn try_from(j: MatrixJson) -> Result<Self, Self::Error> {
        let threshold = low_threshold(j.c)?;
        let mut rows: BTreeMap<LIndex, Row> = (0..=threshold).map(|i| (LIndex(i), Row::new())).collect();
        for r in j.rows {
            let row = rows.entry(LIndex(r.l_index)).or_default();
            for cell in r.cells {
                if cell.length == 0 || cell.length > j.c || cell.offset >= cell.length {
                    return Err(OrderError::InvalidMatrix(format!(
                        "column ({}, {}) is not legal for c = {}",
                        cell.length, cell.offset, j.c
                    )));
                }
                if cell.count == 0 {
                    continue;
                }
                *row.entry(TClassId { length: cell.length, offset: cell.offset }).or_insert(0) += cell.count;
            }
        }
        rows.retain(|i, r| i.0 <= threshold || !r.is_empty());
        Ok(FactorMatrix { c: j.c, rows })
    }
}

/// Injective partial map on row indices that fixes every low index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CPreservingMap {
    c: u64,
    assignments: BTreeMap<LIndex, LIndex>,
}

impl CPreservingMap {
    pub fn new(c: u64, assignments: BTreeMap<LIndex, LIndex>) -> Result<Self, OrderError> {
        let threshold = low_threshold(c)?;
        let mut targets = BTreeSet::new();
        for (&from, &to) in &assignments {
            if from.0 <= threshold && from != to {
                return Err(OrderError::InvalidWitness(format!("low index {} moved to {}", from.0, to.0)));
            }
            if !targets.insert(to) {
                return Err(OrderError::InvalidWitness(format!("index {} hit twice", to.0)));
            }
        }
        for i in 0..=threshold {
            let i = LIndex(i);
            if assignments.get(&i).is_none_or(|&t| t != i) && targets.contains(&i) {
                return Err(OrderError::InvalidWitness(format!("high row mapped onto low index {}", i.0)));
            }
        }
        let mut assignments = assignments;
        for i in 0..=threshold {
            assignments.insert(LIndex(i), LIndex(i));
        }
        Ok(CPreservingMap { c, assignments })
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn image(&self, i: LIndex) -> Option<LIndex> {
        self.assignments.get(&i).copied()
    }

    pub fn assignments(&self) -> &BTreeMap<LIndex, LIndex> {
        &self.assignments
    }

    pub fn is_identity(&self) -> bool {
        self.assignments.iter().all(|(a, b)| a == b)
    }

    /// `other ∘ self`, defined where `other` covers the images of `self`.
    pub fn then(&self, other: &CPreservingMap) -> Option<CPreservingMap> {
        let assignments = self
            .assignments
            .iter()
            .map(|(&a, &b)| other.image(b).map(|c| (a, c)))
            .collect::<Option<BTreeMap<_, _>>>()?;
        CPreservingMap::new(self.c, assignments).ok()
    }

    /// Checks `|G_{i,j}| <= |H_{h(i),j}|` for every retained row of `g`.
    pub fn witnesses(&self, g: &FactorMatrix, h: &FactorMatrix) -> bool {
        g.rows().all(|(i, row)| {
            if row.is_empty() {
                return true;
            }
            match self.image(i) {
                Some(t) => h.rows.get(&t).is_some_and(|hr| dominated(row, hr)),
                None => false,
            }
        })
    }
}

/// Decides `G <=_c H` from the two factor matrices.
///
/// Low rows are compared pointwise under the identity. High rows of `G` are
/// matched to dominating high rows of `H` by augmenting paths; `G`'s rows are
/// tried in decreasing row-sum order and candidates in increasing index order.
pub fn leq_c_matrices(g: &FactorMatrix, h: &FactorMatrix) -> Result<Option<CPreservingMap>, OrderError> {
    if g.c != h.c {
        return Err(OrderError::CMismatch(g.c, h.c));
    }
    for (i, row) in g.low_rows() {
        if !h.rows.get(&i).is_some_and(|hr| dominated(row, hr)) {
            return Ok(None);
        }
    }
    let mut left: Vec<(LIndex, &Row)> = g.high_rows().collect();
    left.sort_by(|a, b| g.row_sum(b.0).cmp(&g.row_sum(a.0)).then(a.0.cmp(&b.0)));
    let right: Vec<(LIndex, &Row)> = h.high_rows().collect();
    if left.len() > right.len() {
        return Ok(None);
    }
    let options: Vec<Vec<usize>> = left
        .iter()
        .map(|(_, row)| (0..right.len()).filter(|&r| dominated(row, right[r].1)).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; right.len()];
    for l in 0..left.len() {
        let mut seen = vec![false; right.len()];
        if !augment(l, &options, &mut owner, &mut seen) {
            return Ok(None);
        }
    }
    let mut assignments = BTreeMap::new();
    for (r, o) in owner.iter().enumerate() {
        if let Some(l) = o {
            assignments.insert(left[*l].0, right[r].0);
        }
    }
    Ok(Some(CPreservingMap::new(g.c, assignments)?))
}

fn augment(l: usize, options: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    if let Some(&r) = options[l].iter().find(|&&r| owner[r].is_none()) {
        owner[r] = Some(l);
        return true;
    }
    for &r in &options[l] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if owner[r].is_none_or(|o| augment(o, options, owner, seen)) {
            owner[r] = Some(l);
            return true;
        }
    }
    false
}

/// `Some(witness)` iff `g <=_c h`. Fails if a factor is longer than `c`.
pub fn leq_c(g: &PowerGraph, h: &PowerGraph, c: u64) -> Result<Option<CPreservingMap>, OrderError> {
    leq_c_matrices(&FactorMatrix::new(g, c)?, &FactorMatrix::new(h, c)?)
}

/// Maps the `k`-th vertex of `from` to the `k`-th vertex of `to`.
pub fn index_aligned(from: &Factor, to: &Factor) -> Option<Vec<(Label, Label)>> {
    (from.len() == to.len()).then(|| from.labels().zip(to.labels()).collect())
}

/// Injective assignment of the factor-components of `g` to t-equivalent
/// components of `h`, cell `(i, j)` going to cell `(h(i), j)`. Within a cell,
/// factors of `g` take the unused targets in increasing label order.
pub fn factor_assignment(
    g: &PowerGraph,
    h: &PowerGraph,
    c: u64,
    witness: &CPreservingMap,
) -> Result<Vec<(Factor, Factor)>, OrderError> {
    let (mg, mh) = (FactorMatrix::new(g, c)?, FactorMatrix::new(h, c)?);
    if witness.c != c || !witness.witnesses(&mg, &mh) {
        return Err(OrderError::InvalidWitness("counts are not dominated".into()));
    }
    let mut targets: BTreeMap<(LIndex, TClassId), Vec<Factor>> = BTreeMap::new();
    for f in h.factor_components() {
        targets.entry(classify_factor(&f)).or_default().push(f);
    }
    let mut next: BTreeMap<(LIndex, TClassId), usize> = BTreeMap::new();
    let mut out = Vec::new();
    for f in g.factor_components() {
        let (i, t) = classify_factor(&f);
        let key = (witness.image(i).expect("witness covers nonempty rows"), t);
        let slot = next.entry(key).or_insert(0);
        let target = targets.get(&key).and_then(|v| v.get(*slot)).copied().ok_or_else(|| {
            OrderError::Verification(format!("cell ({}, {:?}) ran out of targets", key.0 .0, t))
        })?;
        *slot += 1;
        out.push((f, target));
    }
    Ok(out)
}

/// The induced embedding of `g` into `h` obtained from a `<=_c` witness.
///
/// Each factor of `g` is mapped index-aligned onto its assigned t-equivalent
/// factor of `h`. The result is verified before it is returned; a failure is
/// a bug, never an expected outcome.
pub fn build_embedding_phi(
    g: &PowerGraph,
    h: &PowerGraph,
    c: u64,
    witness: &CPreservingMap,
) -> Result<EmbeddingMap, OrderError> {
    let assignment = factor_assignment(g, h, c, witness)?;
    let pairs: Vec<(Label, Label)> = assignment
        .iter()
        .flat_map(|(f, t)| index_aligned(f, t).expect("t-equivalent factors have equal length"))
        .collect();
    let map = EmbeddingMap::new(pairs, Provenance::ConstructedPhi)?;
    if !verify_embedding(&map, g, h)? {
        return Err(OrderError::Verification(format!("phi map for {g} into {h} is not induced")));
    }
    Ok(map)
}

/// Shift embedding of `g` into a long factor of `host`.
///
/// With `n` the largest label of `g` and `2^k` the smallest power of two above
/// `n`, the first factor of `host` with length at least `5n` contains a vertex
/// `y` with `q(y) = 2^k` among its first `4n` vertices, and `z -> y + z`
/// preserves powers (`q(y + z) = q(z)`) for all `1 <= z <= n`. Returns `None`
/// if `host` has no factor that long.
pub fn long_factor_embedding(g: &PowerGraph, host: &PowerGraph) -> Result<Option<EmbeddingMap>, OrderError> {
    let Some(n) = g.max_label() else {
        return Ok(Some(EmbeddingMap::new(Vec::new(), Provenance::ConstructedLongfactor)?));
    };
    let Some(need) = n.checked_mul(5) else {
        return Ok(None);
    };
    let Some(f) = host.factor_components().into_iter().find(|f| f.len() >= need) else {
        return Ok(None);
    };
    let p = (n + 1).next_power_of_two();
    let period = 2 * p;
    let y = f.start() + (p + period - f.start() % period) % period;
    if y - f.start() >= 4 * n || y.trailing_zeros() != p.trailing_zeros() {
        return Err(OrderError::Verification(format!("no vertex of power {p} in the first {} of {f}", 4 * n)));
    }
    let mut pairs = Vec::with_capacity(g.len());
    for &z in g.labels() {
        let image = y + z;
        if image.trailing_zeros() != z.trailing_zeros() || !f.contains(image) {
            return Err(OrderError::Verification(format!("shift by {y} breaks q at {z}")));
        }
        pairs.push((z, image));
    }
    let map = EmbeddingMap::new(pairs, Provenance::ConstructedLongfactor)?;
    if !verify_embedding(&map, g, host)? {
        return Err(OrderError::Verification(format!("shift by {y} is not induced")));
    }
    Ok(Some(map))
}

/// Smallest `n` such that `g` embeds into `D_n`, searched with the oracle.
/// `None` when some smaller `n` could not be decided within `budget`.
pub fn minimal_host_order(g: &PowerGraph, budget: SearchBudget) -> Option<u64> {
    let top = g.max_label()?;
    for n in g.len() as u64..=top {
        let dn = PowerGraph::dn(n.max(1)).ok()?;
        match induced_embeds_labels(g, &dn, budget) {
            Verdict::Embeds(_) => return Some(n),
            Verdict::NotEmbeds => {}
            Verdict::Inconclusive => return None,
        }
    }
    Some(top)
}

/// Why the index-aligned map between two factors fails the isomorphism
/// properties, if it does.
pub fn intiso_failure(f1: &Factor, f2: &Factor) -> Option<String> {
    if classify_factor(f1).1 != classify_factor(f2).1 {
        return Some("factors are not t-equivalent".into());
    }
    let pairs = index_aligned(f1, f2)?;
    let (m1, m2) = (f1.maximal_vertex(), f2.maximal_vertex());
    for (i, &(a, fa)) in pairs.iter().enumerate() {
        if (a == m1) != (fa == m2) {
            return Some(format!("{a} -> {fa} does not respect maximal vertices"));
        }
        if a != m1 && a.trailing_zeros() != fa.trailing_zeros() {
            return Some(format!("q({a}) != q({fa})"));
        }
        for &(b, fb) in &pairs[i + 1..] {
            if labels_adjacent(a, b) != labels_adjacent(fa, fb) {
                return Some(format!("adjacency of {a},{b} not preserved"));
            }
        }
    }
    None
}

/// Every pair of t-equivalent factors inside `[1, max]` with length at most
/// `max_len`: the index-aligned map is an isomorphism, sends maximal to
/// maximal, and preserves `q` off the maximal vertex.
pub fn check_intiso(max: Label, max_len: u64) -> LemmaReport {
    let mut classes: BTreeMap<TClassId, Vec<Factor>> = BTreeMap::new();
    for a in 1..=max {
        for b in a..=max.min(a + max_len - 1) {
            let f = Factor::new(a, b).expect("a <= b");
            classes.entry(classify_factor(&f).1).or_default().push(f);
        }
    }
    let mut report = LemmaReport::new("intiso");
    for members in classes.values() {
        for (i, f1) in members.iter().enumerate() {
            for f2 in &members[i + 1..] {
                let failure = intiso_failure(f1, f2);
                report.record(failure.is_none(), || Instance {
                    witness: vec![f1.start(), f1.end(), f2.start(), f2.end()],
                    observed: 0.0,
                    bound: 0.0,
                    note: failure.clone().unwrap_or_default(),
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    LongFactor,
    LeqC,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparablePair {
    /// Positions in the sequence (0-based), `first < second`.
    pub first: usize,
    pub second: usize,
    pub route: Route,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CPreservingMap>,
    pub map: EmbeddingMap,
}

/// Finds the first pair `i < j` (lexicographic) with the `i`-th graph an
/// induced subgraph of the `j`-th, trying the long-factor shift, then
/// `<=_c`, then (if `fallback` is given) the exponential oracle.
pub fn find_comparable_pair(
    sequence: &[PowerGraph],
    c: u64,
    fallback: Option<SearchBudget>,
) -> Result<Option<ComparablePair>, OrderError> {
    low_threshold(c)?;
    let matrices: Vec<Option<FactorMatrix>> = sequence.iter().map(|g| FactorMatrix::new(g, c).ok()).collect();
    let longest: Vec<u64> = sequence.iter().map(PowerGraph::max_factor_len).collect();
    for (i, g) in sequence.iter().enumerate() {
        let need = g.max_label().unwrap_or(0).saturating_mul(5);
        for j in i + 1..sequence.len() {
            let h = &sequence[j];
            if longest[j] >= need {
                if let Some(map) = long_factor_embedding(g, h)? {
                    return Ok(Some(ComparablePair { first: i, second: j, route: Route::LongFactor, witness: None, map }));
                }
            }
            if let (Some(mg), Some(mh)) = (&matrices[i], &matrices[j]) {
                if let Some(w) = leq_c_matrices(mg, mh)? {
                    let map = build_embedding_phi(g, h, c, &w)?;
                    return Ok(Some(ComparablePair { first: i, second: j, route: Route::LeqC, witness: Some(w), map }));
                }
            }
            if let Some(budget) = fallback {
                if let Verdict::Embeds(map) = induced_embeds_labels(g, h, budget) {
                    if !verify_embedding(&map, g, h)? {
                        return Err(OrderError::Verification("oracle map is not induced".into()));
                    }
                    return Ok(Some(ComparablePair { first: i, second: j, route: Route::Oracle, witness: None, map }));
                }
            }
        }
    }
    Ok(None)
}
