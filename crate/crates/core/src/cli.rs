//! Command-line front end. Exit codes: 0 success or pass, 1 lemma violation or
//! failed verification, 2 usage, parse or cap errors.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{self, DEFAULT_EXHAUSTIVE_CAP};
use crate::experiment::run_experiment;
use crate::format::{self, ParsedGraph};
use crate::graph::{self, Label, PowerGraph};
use crate::oracle::{self, induced_embeds, induced_embeds_labels, EmbeddingMap, SearchBudget, Verdict};
use crate::order::{self, CPreservingMap, FactorMatrix, OrderError};
use crate::report::LemmaReport;

#[derive(Debug, Parser)]
#[command(name = "wqo-cwlab", version, about = "Power-of-two graphs D_n: bounds, orders and embeddings")]
pub struct Cli {
    /// Largest vertex count for exhaustive subset scans.
    #[arg(long, global = true, env = "WQO_CWLAB_CAP", default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
    pub cap: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Edgelist,
    Labels,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lemma {
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    #[value(name = "4")]
    Four,
    Diffq,
    Maxone,
    Maxpower,
    Intiso,
    Theorem2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print D_n or one of its induced subgraphs.
    Generate {
        n: Label,
        /// Comma-separated labels of the induced subgraph.
        #[arg(long, value_delimiter = ',', conflicts_with = "subset_file")]
        subset: Option<Vec<Label>>,
        /// File holding the subset as a label list.
        #[arg(long)]
        subset_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = GraphFormat::Edgelist)]
        format: GraphFormat,
    },
    /// Compute mu(G) for a graph file (label list or edge list) as JSON.
    Mu {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = MuModeArg::Exact)]
        mode: MuModeArg,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Required in sampled mode.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one of the lemma checkers.
    Verify {
        #[arg(long, value_enum)]
        lemma: Lemma,
        /// Largest D_n for lemmas 2 and 3 (every n' <= n is scanned).
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Bound c for lemma 4 (every c' <= c) and theorem2.
        #[arg(long, default_value_t = 2)]
        c: u64,
        /// Largest label for interval scans.
        #[arg(long, default_value_t = 4096)]
        max: Label,
        /// Longest interval for diffq, maxone, maxpower and intiso.
        #[arg(long, default_value_t = 64)]
        max_len: u64,
        /// Single U for lemma 3 instead of the exhaustive scan.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<Label>>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Required for theorem2.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Decide A <=_c B and build the embedding it certifies.
    Compare {
        #[arg(long)]
        c: u64,
        a: PathBuf,
        b: PathBuf,
        /// Ask the exact oracle when <=_c fails or does not apply.
        #[arg(long)]
        fallback_oracle: bool,
        #[arg(long, default_value_t = SearchBudget::DEFAULT_NODES)]
        budget: u64,
        #[arg(long)]
        json: bool,
    },
    /// Decide by exhaustive search whether A is an induced subgraph of B.
    OracleCheck {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = SearchBudget::DEFAULT_NODES)]
        budget: u64,
    },
    /// Look for a comparable pair in a seeded random sequence.
    Experiment {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        host_n: u64,
        #[arg(long)]
        c: u64,
        #[arg(long)]
        seed: u64,
        /// Also try the oracle, with this node budget, on pairs the
        /// constructions cannot settle.
        #[arg(long)]
        oracle_budget: Option<u64>,
    },
    /// Search for a large antichain among induced subgraphs of D_n.
    Antichain {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = usize::MAX)]
        max_size: usize,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Print the factor matrix of a label-list graph as JSON.
    Matrix {
        #[arg(long)]
        c: u64,
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MuModeArg {
    Exact,
    Sampled,
}

/// Error that aborts a command with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for UsageError {
            fn from(e: $t) -> Self {
                UsageError(e.to_string())
            }
        }
    )*};
}

usage_from!(
    std::io::Error,
    serde_json::Error,
    graph::GraphError,
    format::FormatError,
    bounds::BoundsError,
    oracle::OracleError,
    OrderError
);

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompareReport {
    pub c: u64,
    /// `None` when some factor is longer than `c`.
    pub leq_c: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CPreservingMap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<EmbeddingMap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Verdict<EmbeddingMap>>,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
struct OracleReport {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<(Label, Label)>>,
}

fn read(path: &Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn read_labels(path: &Path) -> Result<PowerGraph, UsageError> {
    match format::parse_graph(&read(path)?)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))?
    {
        ParsedGraph::Labels(g) => Ok(g),
        ParsedGraph::EdgeList(_) => {
            Err(UsageError(format!("{}: this command needs a label list, not an edge list", path.display())))
        }
    }
}

fn budget(nodes: u64) -> Result<SearchBudget, UsageError> {
    Ok(SearchBudget::new(nodes)?)
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), UsageError> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_report(out: &mut dyn Write, report: &LemmaReport, json: bool) -> Result<Outcome, UsageError> {
    if json {
        json_line(out, report)?;
    } else {
        writeln!(out, "{report}")?;
    }
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

/// Runs a parsed command, writing its normal output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, UsageError> {
    let cap = cli.cap;
    match &cli.command {
        Command::Generate { n, subset, subset_file, format } => {
            let dn = PowerGraph::dn(*n)?;
            let g = match (subset, subset_file) {
                (Some(s), _) => dn.induced(s.iter().copied())?,
                (None, Some(p)) => dn.induced(format::parse_labels(&read(p)?)?.labels().iter().copied())?,
                (None, None) => dn,
            };
            let text = match format {
                GraphFormat::Edgelist => format::write_edge_list(&g),
                GraphFormat::Labels => format::write_labels(&g),
                GraphFormat::Dot => format::write_dot(&g, &format!("D{n}")),
            };
            out.write_all(text.as_bytes())?;
            Ok(Outcome::Pass)
        }
        Command::Mu { file, mode, samples, seed } => {
            let parsed = format::parse_graph(&read(file)?)?;
            let result = match (mode, &parsed) {
                (MuModeArg::Exact, ParsedGraph::Labels(g)) => bounds::mu_exact(g, cap)?,
                (MuModeArg::Exact, ParsedGraph::EdgeList(d)) => bounds::mu_exact(d, cap)?,
                (MuModeArg::Sampled, _) => {
                    let seed = seed.ok_or_else(|| UsageError("--seed is required in sampled mode".into()))?;
                    match &parsed {
                        ParsedGraph::Labels(g) => bounds::mu_sampled(g, *samples, seed, cap)?,
                        ParsedGraph::EdgeList(d) => bounds::mu_sampled(d, *samples, seed, cap)?,
                    }
                }
            };
            json_line(out, &result)?;
            Ok(if result.violations.is_empty() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Verify { lemma, n, c, max, max_len, subset, samples, seed, json } => {
            let report = match lemma {
                Lemma::Two => merged("lemma2", (1..=*n).map(|k| bounds::check_lemma2(k, cap)))?,
                Lemma::Three => match subset {
                    Some(u) => bounds::check_lemma3(*n, u)?,
                    None => merged("lemma3", (1..=*n).map(|k| bounds::check_lemma3_exhaustive(k, cap)))?,
                },
                Lemma::Four => {
                    let top = u32::try_from(*c).map_err(|_| UsageError(format!("c = {c} is too large")))?;
                    merged("lemma4", (1..=top).map(|k| bounds::check_lemma4(k, *max)))?
                }
                Lemma::Diffq => graph::check_diffq(*max, *max_len),
                Lemma::Maxone => graph::check_maxone(*max, *max_len),
                Lemma::Maxpower => graph::check_maxpower(*max, *max_len),
                Lemma::Intiso => order::check_intiso(*max, *max_len),
                Lemma::Theorem2 => {
                    let seed = seed.ok_or_else(|| UsageError("--seed is required for theorem2".into()))?;
                    bounds::check_theorem2_sampled(*c, *samples, seed)?
                }
            };
            write_report(out, &report, *json)
        }
        Command::Compare { c, a, b, fallback_oracle, budget: nodes, json } => {
            let (g, h) = (read_labels(a)?, read_labels(b)?);
            let report = compare(&g, &h, *c, fallback_oracle.then_some(budget(*nodes)?))?;
            if *json {
                json_line(out, &report)?;
            } else {
                write_compare_text(out, &report)?;
            }
            let constructed_ok = report.map.is_none() || report.verified;
            Ok(if constructed_ok { Outcome::Pass } else { Outcome::Fail })
        }
        Command::OracleCheck { a, b, budget: nodes } => {
            let (ga, gb) = (format::parse_graph(&read(a)?)?, format::parse_graph(&read(b)?)?);
            let report = match (&ga, &gb) {
                (ParsedGraph::Labels(g), ParsedGraph::Labels(h)) => {
                    let v = induced_embeds_labels(g, h, budget(*nodes)?);
                    if let Verdict::Embeds(m) = &v {
                        if !oracle::verify_embedding(m, g, h)? {
                            return Ok(Outcome::Fail);
                        }
                    }
                    let pairs = match &v {
                        Verdict::Embeds(m) => Some(m.pairs().to_vec()),
                        _ => None,
                    };
                    OracleReport { verdict: v.name(), pairs }
                }
                _ => {
                    let v = induced_embeds(&ga.to_dense(), &gb.to_dense(), budget(*nodes)?);
                    let pairs = match &v {
                        Verdict::Embeds(m) => {
                            Some(m.iter().enumerate().map(|(i, &j)| (i as Label + 1, j as Label + 1)).collect())
                        }
                        _ => None,
                    };
                    OracleReport { verdict: v.name(), pairs }
                }
            };
            json_line(out, &report)?;
            Ok(Outcome::Pass)
        }
        Command::Experiment { count, host_n, c, seed, oracle_budget } => {
            let fallback = oracle_budget.map(budget).transpose()?;
            let report = run_experiment(*count, *host_n, *c, *seed, fallback)?;
            json_line(out, &report)?;
            Ok(if report.pair.is_some() && !report.verified { Outcome::Fail } else { Outcome::Pass })
        }
        Command::Antichain { n, max_size, budget: nodes } => {
            let report = oracle::antichain_search(*n, *max_size, budget(*nodes)?)?;
            json_line(out, &report)?;
            Ok(Outcome::Pass)
        }
        Command::Matrix { c, file } => {
            let m = FactorMatrix::new(&read_labels(file)?, *c)?;
            json_line(out, &m)?;
            Ok(Outcome::Pass)
        }
    }
}

fn merged<E>(name: &str, reports: impl Iterator<Item = Result<LemmaReport, E>>) -> Result<LemmaReport, UsageError>
where
    UsageError: From<E>,
{
    let mut all = LemmaReport::new(name);
    for r in reports {
        all.merge(r?);
    }
    Ok(all)
}

/// Decides `g <=_c h`, building the certified embedding, and optionally asks
/// the oracle. A factor longer than `c` is an error unless `fallback` is set.
pub fn compare(
    g: &PowerGraph,
    h: &PowerGraph,
    c: u64,
    fallback: Option<SearchBudget>,
) -> Result<CompareReport, UsageError> {
    let mut report = CompareReport { c, leq_c: None, witness: None, map: None, oracle: None, verified: false };
    match order::leq_c(g, h, c) {
        Ok(Some(w)) => {
            let map = order::build_embedding_phi(g, h, c, &w)?;
            report.verified = oracle::verify_embedding(&map, g, h)?;
            report.leq_c = Some(true);
            report.witness = Some(w);
            report.map = Some(map);
        }
        Ok(None) => report.leq_c = Some(false),
        Err(OrderError::FactorTooLong { .. }) if fallback.is_some() => {}
        Err(e) => return Err(e.into()),
    }
    if let Some(b) = fallback {
        if report.leq_c != Some(true) {
            report.oracle = Some(induced_embeds_labels(g, h, b));
        }
    }
    Ok(report)
}

fn write_compare_text(out: &mut dyn Write, r: &CompareReport) -> Result<(), UsageError> {
    match (&r.leq_c, &r.map) {
        (Some(true), Some(map)) => {
            writeln!(out, "comparable under leq_c (c = {})", r.c)?;
            let rows: Vec<String> = r
                .witness
                .iter()
                .flat_map(|w| w.assignments().iter().map(|(i, j)| format!("L{} -> L{}", i.0, j.0)))
                .collect();
            writeln!(out, "rows: {}", rows.join(", "))?;
            let pairs: Vec<String> = map.pairs().iter().map(|(a, b)| format!("{a}->{b}")).collect();
            writeln!(out, "map: {}", pairs.join(" "))?;
            writeln!(out, "verified: {}", r.verified)?;
        }
        (Some(false), _) => writeln!(out, "incomparable-under-leq_c")?,
        _ => writeln!(out, "leq_c not applicable: some factor is longer than c = {}", r.c)?,
    }
    if let Some(v) = &r.oracle {
        writeln!(out, "oracle: {}", v.name())?;
        if let Verdict::Embeds(m) = v {
            let pairs: Vec<String> = m.pairs().iter().map(|(a, b)| format!("{a}->{b}")).collect();
            writeln!(out, "oracle map: {}", pairs.join(" "))?;
        }
    }
    Ok(())
}
