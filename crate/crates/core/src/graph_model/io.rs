use std::collections::{HashMap, HashSet};

use super::{Capacities, DegreeSequence, Edge, Graph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoopPolicy {
    #[default]
    Reject,
    Drop,
}

/// A parsed edge-list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    /// Largest vertex label seen.
    pub max_label: usize,
    /// 0-based pairs in file order.
    pub pairs: Vec<(usize, usize)>,
    /// 1-based labels of dropped loops.
    pub dropped_loops: Vec<usize>,
}

impl EdgeList {
    /// Graph on `vertices` vertices (defaults to the largest label).
    pub fn to_graph(&self, vertices: Option<usize>) -> Result<Graph> {
        let n = vertices.unwrap_or(self.max_label);
        Graph::new(n, self.pairs.iter().copied())
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(k) => &line[..k],
        None => line,
    }
}

fn parse_label(token: &str, line: usize) -> Result<usize> {
    let v: usize = token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a vertex label, found {token:?}"),
    })?;
    if v == 0 {
        return Err(Error::Parse {
            line,
            msg: "vertex labels are 1-based".into(),
        });
    }
    Ok(v)
}

/// Parses one `i j` pair per line (1-based, `#` comments). Duplicate pairs
/// are rejected; loops are rejected or dropped per `loops`.
pub fn parse_edge_list(text: &str, loops: LoopPolicy) -> Result<EdgeList> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    let mut dropped_loops = Vec::new();
    let mut max_label = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut tokens = strip_comment(raw).split_whitespace();
        let Some(first) = tokens.next() else { continue };
        let second = tokens.next().ok_or_else(|| Error::Parse {
            line,
            msg: "expected two vertex labels".into(),
        })?;
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line,
                msg: "trailing tokens after edge".into(),
            });
        }
        let (i, j) = (parse_label(first, line)?, parse_label(second, line)?);
        max_label = max_label.max(i).max(j);
        if i == j {
            match loops {
                LoopPolicy::Reject => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("loop at vertex {i}"),
                    })
                }
                LoopPolicy::Drop => {
                    dropped_loops.push(i);
                    continue;
                }
            }
        }
        if !seen.insert(Edge::new(i, j)) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate edge {{{i},{j}}}"),
            });
        }
        pairs.push((i - 1, j - 1));
    }
    Ok(EdgeList {
        max_label,
        pairs,
        dropped_loops,
    })
}

/// Parses a single comma-separated line of degrees.
pub fn parse_degree_sequence(text: &str) -> Result<DegreeSequence> {
    let body: Vec<&str> = text
        .lines()
        .map(strip_comment)
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let [line] = body.as_slice() else {
        return Err(Error::Parse {
            line: 1,
            msg: "expected exactly one comma-separated line".into(),
        });
    };
    let degrees = line
        .split(',')
        .map(|t| {
            t.trim().parse::<u64>().map_err(|_| Error::Parse {
                line: 1,
                msg: format!("expected a degree, found {:?}", t.trim()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DegreeSequence::new(degrees)
}

/// Parses `i j cap` lines into per-edge capacities on `graph`.
pub fn parse_capacities(text: &str, graph: &Graph) -> Result<Capacities> {
    let mut caps = HashMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let tokens: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let [a, b, c] = tokens.as_slice() else {
            return Err(Error::Parse {
                line,
                msg: "expected `i j cap`".into(),
            });
        };
        let (i, j) = (parse_label(a, line)?, parse_label(b, line)?);
        let cap: u32 = c.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected a capacity, found {c:?}"),
        })?;
        let e = Edge::new(i - 1, j - 1);
        if !graph.has_edge(e) {
            return Err(Error::InvalidEdge(i, j));
        }
        caps.insert(e, cap);
    }
    Capacities::per_edge(caps)
}
