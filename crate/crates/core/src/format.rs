//! Line-oriented text formats.
//!
//! * label list: one line of space-separated labels (a [`PowerGraph`]);
//! * edge list: a header `n m`, then `m` lines `a b` with `a < b`, using labels;
//! * DOT, with each power clique drawn as a same-coloured cluster.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{DenseGraph, EdgeKind, GraphError, Label, PowerGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("edge list declares {declared} edges but has {found}")]
    EdgeCount { declared: usize, found: usize },
    #[error("edge list names {found} distinct vertices, more than the declared {declared}")]
    TooManyVertices { declared: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A graph read from a file: either a label set or an anonymous edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedGraph {
    Labels(PowerGraph),
    EdgeList(DenseGraph),
}

impl ParsedGraph {
    pub fn to_dense(&self) -> DenseGraph {
        match self {
            ParsedGraph::Labels(g) => g.to_dense(),
            ParsedGraph::EdgeList(d) => d.clone(),
        }
    }
}

fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, FormatError> {
    tok.parse().map_err(|_| FormatError::Syntax { line, msg: format!("expected a non-negative integer, got {tok:?}") })
}

pub fn parse_labels(text: &str) -> Result<PowerGraph, FormatError> {
    let mut labels = Vec::new();
    for (line, l) in content_lines(text) {
        for tok in l.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            labels.push(parse_num::<Label>(tok, line)?);
        }
    }
    Ok(PowerGraph::from_labels(labels)?)
}

pub fn write_labels(g: &PowerGraph) -> String {
    format!("{g}\n")
}

/// Reads an edge list into a [`DenseGraph`] of order `n`. If every label is
/// at most `n`, label `l` becomes vertex `l - 1`; otherwise the named vertices
/// are ranked by label and the remaining ones are isolated.
pub fn parse_edge_list(text: &str) -> Result<DenseGraph, FormatError> {
    let lines = content_lines(text);
    let Some(&(hline, header)) = lines.first() else {
        return Err(FormatError::Syntax { line: 1, msg: "missing \"n m\" header".into() });
    };
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(FormatError::Syntax { line: hline, msg: "header must be \"n m\"".into() });
    }
    let n: usize = parse_num(toks[0], hline)?;
    let m: usize = parse_num(toks[1], hline)?;
    let mut edges = Vec::with_capacity(m);
    for &(line, l) in &lines[1..] {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 2 {
            return Err(FormatError::Syntax { line, msg: "edge line must be \"a b\"".into() });
        }
        let (a, b): (Label, Label) = (parse_num(t[0], line)?, parse_num(t[1], line)?);
        if a >= b {
            return Err(FormatError::Syntax { line, msg: format!("edge {a} {b} must satisfy a < b") });
        }
        edges.push((a, b));
    }
    if edges.len() != m {
        return Err(FormatError::EdgeCount { declared: m, found: edges.len() });
    }
    let mut names: Vec<Label> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() > n {
        return Err(FormatError::TooManyVertices { declared: n, found: names.len() });
    }
    let direct = names.last().is_none_or(|&l| l as usize <= n) && names.first().is_none_or(|&l| l >= 1);
    let rank = |l: Label| if direct { l as usize - 1 } else { names.binary_search(&l).unwrap() };
    let mut g = DenseGraph::new(n);
    for (a, b) in edges {
        g.add_edge(rank(a), rank(b))?;
    }
    Ok(g)
}

/// `n m` header with `n` the vertex count, then every edge by label.
pub fn write_edge_list(g: &PowerGraph) -> String {
    let edges = g.edges();
    let mut out = format!("{} {}\n", g.len(), edges.len());
    for e in edges {
        let _ = writeln!(out, "{} {}", e.a, e.b);
    }
    out
}

pub fn write_dense_edge_list(g: &DenseGraph) -> String {
    let edges = g.edges();
    let mut out = format!("{} {}\n", g.order(), edges.len());
    for (a, b) in edges {
        let _ = writeln!(out, "{} {}", a + 1, b + 1);
    }
    out
}

/// Detects the format: several content lines, or a single `n 0` line, mean an
/// edge list (labels are never 0); anything else is a label list.
pub fn parse_graph(text: &str) -> Result<ParsedGraph, FormatError> {
    let lines = content_lines(text);
    let single_header = lines.len() == 1 && {
        let t: Vec<&str> = lines[0].1.split_whitespace().collect();
        t.len() == 2 && t[1] == "0"
    };
    if lines.len() > 1 || single_header {
        Ok(ParsedGraph::EdgeList(parse_edge_list(text)?))
    } else {
        Ok(ParsedGraph::Labels(parse_labels(text)?))
    }
}

const PALETTE: [&str; 8] =
    ["#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a6cee3", "#f781bf", "#999999"];

/// DOT rendering. Power cliques become clusters sharing one fill colour; path
/// edges are solid and clique edges dashed.
pub fn write_dot(g: &PowerGraph, name: &str) -> String {
    let mut out = format!("graph {name} {{\n  node [shape=circle, style=filled];\n");
    let cliques: BTreeMap<Label, Vec<Label>> = g.power_cliques();
    for (k, (power, members)) in cliques.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(out, "  subgraph cluster_q{power} {{");
        let _ = writeln!(out, "    label=\"q={power}\";");
        let _ = writeln!(out, "    color=\"{colour}\";");
        let _ = writeln!(out, "    node [fillcolor=\"{colour}\"];");
        for m in members {
            let _ = writeln!(out, "    {m};");
        }
        out.push_str("  }\n");
    }
    for e in g.edges() {
        let style = match e.kind {
            EdgeKind::Path => "",
            EdgeKind::Clique => " [style=dashed]",
        };
        let _ = writeln!(out, "  {} -- {}{style};", e.a, e.b);
    }
    out.push_str("}\n");
    out
}
