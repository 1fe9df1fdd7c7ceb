//! Power-of-two graphs `D_n`, neighbourhood-class bounds, and the factor
//! quasi-order used to find embeddings between `c`-bounded induced subgraphs.

pub mod bounds;
pub mod cli;
pub mod experiment;
pub mod format;
pub mod graph;
pub mod oracle;
pub mod order;
pub mod report;

pub use bounds::{mu_exact, mu_sampled, similarity_count, MuMode, MuResult};
pub use graph::{power, Adjacency, DenseGraph, Factor, Label, PowerGraph};
pub use oracle::{induced_embeds, verify_embedding, EmbeddingMap, Provenance, SearchBudget, Verdict};
pub use order::{build_embedding_phi, leq_c, CPreservingMap, FactorMatrix};
pub use report::LemmaReport;
