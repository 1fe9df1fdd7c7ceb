//! Seeded random sequences of `c`-bounded subgraphs of `D_n` and the
//! comparable-pair experiment over them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Label, PowerGraph};
use crate::oracle::{verify_embedding, SearchBudget};
use crate::order::{find_comparable_pair, ComparablePair, OrderError};

/// Per-draw seed derived from the run seed and the draw index (splitmix64).
pub fn draw_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce5_e4b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random induced subgraph of `D_host_n` whose factor-components have length
/// at most `c`. A keep-probability is drawn per graph, so sizes vary widely.
pub fn random_bounded_subgraph(host_n: u64, c: u64, seed: u64) -> PowerGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let density: f64 = rng.gen_range(0.0..1.0);
    let mut kept: Vec<Label> = Vec::new();
    let mut run = 0u64;
    for l in 1..=host_n {
        let extends = kept.last() == Some(&(l - 1));
        if extends && run >= c {
            run = 0;
            continue;
        }
        if rng.gen_bool(density) {
            run = if extends { run + 1 } else { 1 };
            kept.push(l);
        } else {
            run = 0;
        }
    }
    PowerGraph::from_labels(kept).expect("labels within D_host_n")
}

pub fn random_sequence(count: usize, host_n: u64, c: u64, seed: u64) -> Vec<PowerGraph> {
    (0..count as u64).map(|i| random_bounded_subgraph(host_n, c, draw_seed(seed, i))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub count: usize,
    pub host_n: u64,
    pub c: u64,
    pub seed: u64,
    /// First comparable pair in lexicographic order, if any.
    pub pair: Option<ComparablePair>,
    /// Sizes of the two graphs of `pair`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<(usize, usize)>,
    /// The pair's map passed the adjacency verifier.
    pub verified: bool,
}

pub fn run_experiment(
    count: usize,
    host_n: u64,
    c: u64,
    seed: u64,
    fallback: Option<SearchBudget>,
) -> Result<ExperimentReport, OrderError> {
    let seq = random_sequence(count, host_n, c, seed);
    let pair = find_comparable_pair(&seq, c, fallback)?;
    let (sizes, verified) = match &pair {
        Some(p) => (
            Some((seq[p.first].len(), seq[p.second].len())),
            verify_embedding(&p.map, &seq[p.first], &seq[p.second])?,
        ),
        None => (None, false),
    };
    Ok(ExperimentReport { count, host_n, c, seed, pair, sizes, verified })
}
