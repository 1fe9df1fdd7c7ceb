//! Similarity classes and the balanced-cut lower bound `mu` on clique-width,
//! together with exhaustive checkers for the counting lemmas on `D_n`.
//!
//! For `U ⊆ V(G)`, two vertices of `U` are similar when they have the same
//! neighbourhood outside `U`; `mu_G(U)` is the number of classes. Minimising
//! over all `U` with `⌈n/3⌉ <= |U| <= ⌊2n/3⌋` gives `mu(G)`, which never
//! exceeds the clique-width of `G`. An [`MuResult`] in [`MuMode::Exact`] is
//! therefore a certified clique-width lower bound.

use std::cmp::Ordering;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Adjacency, Label};
use crate::report::{Instance, LemmaReport};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 26;

/// Hard limit imposed by the 64-bit subset masks of the exhaustive scans.
pub const MASK_LIMIT: usize = 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error(
        "graph has {order} vertices, above the exhaustive cap of {cap}; use sampled mode instead"
    )]
    AboveCap { order: usize, cap: usize },
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(Label),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("c must be at least 1")]
    BadC,
    #[error("an interval of length 2^{exp} does not fit in [1, {max_n}]", exp = .c + 1)]
    WindowTooLong { c: u32, max_n: u64 },
    #[error("threshold for c = {0} overflows 64 bits")]
    Overflow(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// The subset `U`, in vertex order.
    pub u: Vec<Label>,
    /// Classes ordered by their smallest member.
    pub classes: Vec<Vec<Label>>,
}

impl SimilarityReport {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Neighbourhoods as multi-word bitsets, for graphs of any order.
struct BitRows {
    order: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitRows {
    fn new<G: Adjacency>(g: &G) -> Self {
        let order = g.order();
        let words = order.div_ceil(64).max(1);
        let mut bits = vec![0u64; order * words];
        for i in 0..order {
            for j in i + 1..order {
                if g.is_edge(i, j) {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                    bits[j * words + i / 64] |= 1 << (i % 64);
                }
            }
        }
        BitRows { order, words, bits }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Single-word rows; only valid when `order <= 64`.
    fn masks(&self) -> Vec<u64> {
        debug_assert!(self.order <= 64);
        (0..self.order).map(|i| self.bits[i * self.words]).collect()
    }

    /// Class index of every member of `u` (sorted indices).
    fn classify(&self, u: &[usize]) -> Vec<usize> {
        let mut outside = vec![0u64; self.words];
        for i in 0..self.order {
            outside[i / 64] |= 1 << (i % 64);
        }
        for &x in u {
            outside[x / 64] &= !(1 << (x % 64));
        }
        let mut keys: Vec<Vec<u64>> = Vec::new();
        u.iter()
            .map(|&x| {
                let key: Vec<u64> = self.row(x).iter().zip(&outside).map(|(r, o)| r & o).collect();
                match keys.iter().position(|k| *k == key) {
                    Some(p) => p,
                    None => {
                        keys.push(key);
                        keys.len() - 1
                    }
                }
            })
            .collect()
    }

    fn class_count(&self, u: &[usize]) -> usize {
        self.classify(u).into_iter().max().map_or(0, |m| m + 1)
    }
}

/// Number of distinct outside-neighbourhoods among the members of `u`.
/// Stops early once the count exceeds `limit`.
#[inline]
fn classes_in_mask(nb: &[u64], u: u64, full: u64, limit: usize) -> usize {
    let outside = full & !u;
    let mut keys = [0u64; 64];
    let mut k = 0;
    let mut bits = u;
    while bits != 0 {
        let x = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let key = nb[x] & outside;
        if !keys[..k].contains(&key) {
            keys[k] = key;
            k += 1;
            if k > limit {
                return k;
            }
        }
    }
    k
}

/// Lexicographic order of the sorted member lists of two subsets.
fn lex_cmp(a: u64, b: u64) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    let low = (a ^ b).trailing_zeros();
    let (has, other) = if a >> low & 1 == 1 { (a, b) } else { (b, a) };
    // `has` continues with `low`; `other` either stops or continues higher.
    let has_smaller = other >> low != 0;
    match (has == a, has_smaller) {
        (true, true) | (false, false) => Ordering::Less,
        _ => Ordering::Greater,
    }
}

fn mask_members(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut bits = mask;
    while bits != 0 {
        out.push(bits.trailing_zeros() as usize);
        bits &= bits - 1;
    }
    out
}

fn resolve<G: Adjacency>(g: &G, u: &[Label]) -> Result<Vec<usize>, BoundsError> {
    let mut idx = u
        .iter()
        .map(|&l| g.index_of(l).ok_or(BoundsError::UnknownVertex(l)))
        .collect::<Result<Vec<_>, _>>()?;
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

/// Partitions `u` by neighbourhood outside `u`.
pub fn similarity_classes<G: Adjacency>(g: &G, u: &[Label]) -> Result<SimilarityReport, BoundsError> {
    let idx = resolve(g, u)?;
    let rows = BitRows::new(g);
    let class_of = rows.classify(&idx);
    let mut classes: Vec<Vec<Label>> = Vec::new();
    for (&x, &c) in idx.iter().zip(&class_of) {
        if c == classes.len() {
            classes.push(Vec::new());
        }
        classes[c].push(g.label(x));
    }
    Ok(SimilarityReport { u: idx.iter().map(|&i| g.label(i)).collect(), classes })
}

/// `mu_G(U)` alone.
pub fn similarity_count<G: Adjacency>(g: &G, u: &[Label]) -> Result<usize, BoundsError> {
    Ok(similarity_classes(g, u)?.class_count())
}

/// Inclusive admissible range `⌈n/3⌉ ..= ⌊2n/3⌋` of `|U|`; empty for `n = 1`.
pub fn admissible_sizes(n: usize) -> std::ops::RangeInclusive<usize> {
    n.div_ceil(3)..=(2 * n) / 3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuResult {
    pub mode: MuMode,
    pub value: usize,
    pub witness: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub violations: Vec<String>,
}

impl MuResult {
    /// Only exact results are clique-width lower bounds.
    pub fn is_certified(&self) -> bool {
        self.mode == MuMode::Exact
    }
}

/// Exact `mu(G)` by scanning every subset in Gray-code order.
///
/// Ties are broken toward the lexicographically smallest witness, so the
/// result does not depend on how the scan is split across threads.
pub fn mu_exact<G: Adjacency>(g: &G, cap: usize) -> Result<MuResult, BoundsError> {
    let n = g.order();
    if n > cap.min(MASK_LIMIT) {
        return Err(BoundsError::AboveCap { order: n, cap: cap.min(MASK_LIMIT) });
    }
    let sizes = admissible_sizes(n);
    if sizes.is_empty() {
        return Ok(MuResult {
            mode: MuMode::Exact,
            value: 0,
            witness: Vec::new(),
            samples: None,
            seed: None,
            violations: Vec::new(),
        });
    }
    let nb = BitRows::new(g).masks();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let (lo, hi) = (*sizes.start() as u32, *sizes.end() as u32);
    let total: u64 = 1 << n;
    let chunks = 256u64.min(total);
    let per = total.div_ceil(chunks);

    let better = |a: (usize, u64), b: (usize, u64)| match a.0.cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => lex_cmp(a.1, b.1) == Ordering::Less,
    };

    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut best: Option<(usize, u64)> = None;
            for i in c * per..((c + 1) * per).min(total) {
                let mask = i ^ (i >> 1);
                let size = mask.count_ones();
                if size < lo || size > hi {
                    continue;
                }
                let limit = best.map_or(usize::MAX, |b| b.0);
                let k = classes_in_mask(&nb, mask, full, limit);
                let cand = (k, mask);
                if best.is_none_or(|b| better(cand, b)) {
                    best = Some(cand);
                }
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if better(y, x) { y } else { x }),
                (x, None) => x,
                (None, y) => y,
            },
        )
        .expect("admissible range is nonempty");

    Ok(MuResult {
        mode: MuMode::Exact,
        value: best.0,
        witness: mask_members(best.1).into_iter().map(|i| g.label(i)).collect(),
        samples: None,
        seed: None,
        violations: Vec::new(),
    })
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn admissible_count(n: usize) -> u128 {
    admissible_sizes(n).map(|k| binomial(n as u64, k as u64)).fold(0u128, u128::saturating_add)
}

/// Draws a size uniformly from the admissible range, then a uniform subset
/// of that size. Returned indices are sorted.
fn sample_admissible(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let sizes = admissible_sizes(n);
    let k = rng.gen_range(sizes);
    let mut u = index::sample(rng, n, k).into_vec();
    u.sort_unstable();
    u
}

/// Per-subset consequences of the counting lemmas on `D_n`.
struct DnChecks {
    n: usize,
    exps: Vec<u32>,
    clique_sizes: Vec<usize>,
    theorem_c: Option<u64>,
}

impl DnChecks {
    fn new(n: usize) -> Self {
        let exps: Vec<u32> = (1..=n as u64).map(|l| l.trailing_zeros()).collect();
        let mut clique_sizes = vec![0usize; 64];
        for &e in &exps {
            clique_sizes[e as usize] += 1;
        }
        let theorem_c = (1..64u64)
            .take_while(|&c| theorem2_threshold(c).is_ok_and(|t| t <= n as u64))
            .last();
        DnChecks { n, exps, clique_sizes, theorem_c }
    }

    fn components(u: &[usize]) -> usize {
        u.iter().enumerate().filter(|&(i, &x)| i == 0 || u[i - 1] + 1 != x).count()
    }

    fn split_cliques(&self, u: &[usize]) -> usize {
        let mut inside = vec![0usize; 64];
        for &x in u {
            inside[self.exps[x] as usize] += 1;
        }
        (1..64).filter(|&k| inside[k] > 0 && inside[k] < self.clique_sizes[k]).count()
    }

    fn violations(&self, u: &[usize], mu: usize) -> Vec<String> {
        let labels = || u.iter().map(|x| x + 1).collect::<Vec<_>>();
        let mut out = Vec::new();
        let comps = Self::components(u);
        if 2 * mu + 1 < comps {
            out.push(format!("lemma2: U={:?} has {comps} path components but mu={mu}", labels()));
        }
        let split = self.split_cliques(u);
        if mu < split {
            out.push(format!("lemma3: U={:?} splits {split} power cliques but mu={mu}", labels()));
        }
        if let Some(c) = self.theorem_c {
            if (mu as u64) < c {
                out.push(format!("theorem2: D_{} U={:?} has mu={mu} < {c}", self.n, labels()));
            }
        }
        out
    }
}

/// Minimum of `mu_G(U)` over `samples` random admissible subsets.
///
/// The value is neither a certified lower nor upper bound on `mu(G)`. If the
/// sample count covers every admissible subset and the graph is within the
/// cap, the exact scan runs instead. When `g` is a full `D_n`, every sampled
/// subset is also checked against the counting lemmas and failures are listed
/// in `violations`.
pub fn mu_sampled<G: Adjacency>(
    g: &G,
    samples: u64,
    seed: u64,
    cap: usize,
) -> Result<MuResult, BoundsError> {
    if samples == 0 {
        return Err(BoundsError::NoSamples);
    }
    let n = g.order();
    if admissible_sizes(n).is_empty()
        || (n <= cap.min(MASK_LIMIT) && samples as u128 >= admissible_count(n))
    {
        return mu_exact(g, cap.max(n));
    }
    let rows = BitRows::new(g);
    let checks = g.full_dn().map(DnChecks::new);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut violations = Vec::new();
    for _ in 0..samples {
        let u = sample_admissible(&mut rng, n);
        let mu = rows.class_count(&u);
        if let Some(ch) = &checks {
            violations.extend(ch.violations(&u, mu));
        }
        let better = match &best {
            None => true,
            Some((v, w)) => mu < *v || (mu == *v && u < *w),
        };
        if better {
            best = Some((mu, u));
        }
    }
    let (value, witness) = best.expect("at least one sample");
    Ok(MuResult {
        mode: MuMode::Sampled,
        value,
        witness: witness.into_iter().map(|i| g.label(i)).collect(),
        samples: Some(samples),
        seed: Some(seed),
        violations,
    })
}

/// Smallest `n` for which `cwd(D_n) >= c` is certified:
/// `3((2c+1)(2^(c+1)-1)+1)`.
pub fn theorem2_threshold(c: u64) -> Result<u64, BoundsError> {
    if c == 0 {
        return Err(BoundsError::BadC);
    }
    let pow = 1u64.checked_shl((c + 1) as u32).filter(|_| c < 63).ok_or(BoundsError::Overflow(c))?;
    (2 * c + 1)
        .checked_mul(pow - 1)
        .and_then(|x| x.checked_add(1))
        .and_then(|x| x.checked_mul(3))
        .ok_or(BoundsError::Overflow(c))
}

fn dn_masks(n: usize) -> Vec<u64> {
    (1..=n as u64)
        .map(|a| {
            (1..=n as u64)
                .filter(|&b| crate::graph::labels_adjacent(a, b))
                .fold(0u64, |m, b| m | 1 << (b - 1))
        })
        .collect()
}

fn check_dn_size(n: usize, cap: usize) -> Result<(), BoundsError> {
    let limit = cap.min(MASK_LIMIT);
    if n > limit {
        Err(BoundsError::AboveCap { order: n, cap: limit })
    } else {
        Ok(())
    }
}

fn mask_labels(mask: u64) -> Vec<Label> {
    mask_members(mask).into_iter().map(|i| i as Label + 1).collect()
}

/// For every `U ⊆ V(D_n)`: if `P^U` (the body restricted to `U`) has `k + 1`
/// components then `mu_{D_n}(U) >= k/2`.
pub fn check_lemma2(n: usize, cap: usize) -> Result<LemmaReport, BoundsError> {
    check_dn_size(n, cap)?;
    let nb = dn_masks(n);
    let full = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    let mut report = LemmaReport::new(format!("lemma2 n={n}"));
    for u in 0..=full {
        let comps = (u & !(u << 1)).count_ones() as usize;
        let mu = classes_in_mask(&nb, u, full, usize::MAX);
        let bound = comps.saturating_sub(1) as f64 / 2.0;
        let instance = || Instance {
            witness: mask_labels(u),
            observed: mu as f64,
            bound,
            note: format!("{comps} components"),
        };
        report.record(2 * mu + 1 >= comps, instance);
        if comps >= 2 {
            report.offer_tight(mu as f64 - bound, instance);
        }
    }
    Ok(report)
}

/// Power cliques of power `> 1` in `D_n` meeting both `U` and its complement.
fn split_count(n: usize, u: u64) -> usize {
    let mut split = 0;
    for k in 1..64u32 {
        let step = 1u64 << k;
        if step > n as u64 {
            break;
        }
        let (mut inside, mut outside) = (false, false);
        let mut v = step;
        while v <= n as u64 {
            if u >> (v - 1) & 1 == 1 {
                inside = true;
            } else {
                outside = true;
            }
            v += 2 * step;
        }
        if inside && outside {
            split += 1;
        }
    }
    split
}

fn lemma3_instance(report: &mut LemmaReport, nb: &[u64], full: u64, n: usize, u: u64) {
    let split = split_count(n, u);
    let mu = classes_in_mask(nb, u, full, usize::MAX);
    let instance = || Instance {
        witness: mask_labels(u),
        observed: mu as f64,
        bound: split as f64,
        note: format!("{split} split power cliques"),
    };
    report.record(mu >= split, instance);
    if split > 0 {
        report.offer_tight(mu as f64 - split as f64, instance);
    }
}

/// Power cliques of power `> 1` split by `U` lower-bound `mu_{D_n}(U)`.
pub fn check_lemma3(n: usize, u: &[Label]) -> Result<LemmaReport, BoundsError> {
    check_dn_size(n, MASK_LIMIT)?;
    let mut mask = 0u64;
    for &l in u {
        if l == 0 || l > n as Label {
            return Err(BoundsError::UnknownVertex(l));
        }
        mask |= 1 << (l - 1);
    }
    let nb = dn_masks(n);
    let full = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    let mut report = LemmaReport::new(format!("lemma3 n={n}"));
    lemma3_instance(&mut report, &nb, full, n, mask);
    Ok(report)
}

/// [`check_lemma3`] over every subset of `V(D_n)`.
pub fn check_lemma3_exhaustive(n: usize, cap: usize) -> Result<LemmaReport, BoundsError> {
    check_dn_size(n, cap)?;
    let nb = dn_masks(n);
    let full = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    let mut report = LemmaReport::new(format!("lemma3 n={n}"));
    for u in 0..=full {
        lemma3_instance(&mut report, &nb, full, n, u);
    }
    Ok(report)
}

/// Every interval of `2^(c+1)` consecutive labels inside `[1, max_n]` meets the
/// power cliques of `2^1, ..., 2^c`. Longer intervals contain such a window.
pub fn check_lemma4(c: u32, max_n: u64) -> Result<LemmaReport, BoundsError> {
    if c == 0 {
        return Err(BoundsError::BadC);
    }
    let window = 1u64.checked_shl(c + 1).filter(|&w| w <= max_n);
    let Some(window) = window else {
        return Err(BoundsError::WindowTooLong { c, max_n });
    };
    let mut report = LemmaReport::new(format!("lemma4 c={c}"));
    for a in 1..=max_n - window + 1 {
        let mut hits = vec![0u64; c as usize + 1];
        for v in a..a + window {
            let e = v.trailing_zeros();
            if (1..=c).contains(&e) {
                hits[e as usize] += 1;
            }
        }
        for k in 1..=c {
            let count = hits[k as usize];
            let instance = || Instance {
                witness: vec![a, a + window - 1],
                observed: count as f64,
                bound: 1.0,
                note: format!("vertices of power 2^{k}"),
            };
            report.record(count >= 1, instance);
            report.offer_tight(count as f64 - 1.0, instance);
        }
    }
    Ok(report)
}

/// Samples admissible `U ⊆ V(D_n)` at `n = theorem2_threshold(c)` and checks
/// `mu_{D_n}(U) >= c` for each one.
pub fn check_theorem2_sampled(c: u64, samples: u64, seed: u64) -> Result<LemmaReport, BoundsError> {
    let n = theorem2_threshold(c)? as usize;
    let g = crate::graph::PowerGraph::dn(n as Label).expect("n >= 1");
    let rows = BitRows::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LemmaReport::new(format!("theorem2 c={c} n={n}"));
    for _ in 0..samples {
        let u = sample_admissible(&mut rng, n);
        let mu = rows.class_count(&u);
        let instance = || Instance {
            witness: u.iter().map(|&x| x as Label + 1).collect(),
            observed: mu as f64,
            bound: c as f64,
            note: String::new(),
        };
        report.record(mu as u64 >= c, instance);
        report.offer_tight(mu as f64 - c as f64, instance);
    }
    Ok(report)
}
