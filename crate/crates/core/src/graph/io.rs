//! Edge-list text format.
//!
//! One edge per line as two whitespace-separated decimal ids `src dst`.
//! Lines starting with `#` are comments. A `# nodes N` comment (written by
//! [`write_edge_list`]) declares that ids are already dense in `0..N`, which
//! keeps isolated nodes across a save/load round trip. Without it, the
//! distinct external ids are sorted and remapped to `0..k`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{DirectedGraph, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<u64>,
    internal: HashMap<u64, NodeId>,
}

impl IdMap {
    pub fn identity(n: usize) -> Self {
        Self::from_external((0..n as u64).collect())
    }

    /// `external[i]` is the external id of internal node `i`.
    pub fn from_external(external: Vec<u64>) -> Self {
        let internal = external
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, NodeId(i as u32)))
            .collect();
        IdMap { external, internal }
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn internal(&self, external: u64) -> Option<NodeId> {
        self.internal.get(&external).copied()
    }

    pub fn external(&self, v: NodeId) -> Option<u64> {
        self.external.get(v.index()).copied()
    }
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: DirectedGraph,
    pub id_map: IdMap,
    pub duplicates_dropped: usize,
}

fn parse_id(tok: &str, line: usize) -> Result<u64> {
    tok.parse::<u64>().map_err(|_| {
        Error::parse(
            line,
            format!("expected non-negative integer id, got {tok:?}"),
        )
    })
}

fn declared_nodes(comment: &str) -> Option<&str> {
    let rest = comment.trim_start_matches('#').trim();
    rest.strip_prefix("nodes")
        .map(|r| r.trim_start_matches(':').trim())
}

pub fn load_edge_list<R: BufRead>(reader: R) -> Result<LoadedGraph> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    let mut declared: Option<usize> = None;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if let Some(n) = declared_nodes(trimmed) {
                let n = n
                    .parse::<usize>()
                    .map_err(|_| Error::parse(lineno, format!("bad node count {n:?}")))?;
                declared = Some(n);
            }
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::parse(lineno, "expected exactly two ids \"src dst\""));
        };
        let (u, v) = (parse_id(a, lineno)?, parse_id(b, lineno)?);
        if u == v {
            return Err(Error::SelfLoop {
                line: lineno,
                node: u,
            });
        }
        raw.push((u, v));
    }

    let id_map = match declared {
        Some(n) => {
            if let Some(&(u, v)) = raw.iter().find(|&&(u, v)| u.max(v) >= n as u64) {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) outside declared node count {n}"
                )));
            }
            IdMap::identity(n)
        }
        None => {
            let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
            ids.sort_unstable();
            ids.dedup();
            IdMap::from_external(ids)
        }
    };

    let edges = raw.iter().map(|&(u, v)| {
        // every id was inserted into the map above
        (id_map.internal(u).unwrap().0, id_map.internal(v).unwrap().0)
    });
    let (graph, cleaning) = DirectedGraph::from_edges(id_map.len(), edges)?;
    Ok(LoadedGraph {
        graph,
        id_map,
        duplicates_dropped: cleaning.duplicates_dropped,
    })
}

pub fn write_edge_list<W: Write>(g: &DirectedGraph, mut w: W) -> Result<()> {
    writeln!(w, "# nodes {}", g.node_count())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar format: `external_id internal_id` per line.
pub fn write_id_map<W: Write>(map: &IdMap, mut w: W) -> Result<()> {
    for (i, e) in map.external.iter().enumerate() {
        writeln!(w, "{e} {i}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_id_map<R: BufRead>(reader: R) -> Result<IdMap> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::parse(i + 1, "expected \"external_id internal_id\""));
        };
        pairs.push((parse_id(b, i + 1)? as usize, parse_id(a, i + 1)?));
    }
    pairs.sort_unstable();
    for (expect, &(internal, _)) in pairs.iter().enumerate() {
        if internal != expect {
            return Err(Error::invalid("id map internal ids must be dense 0..n"));
        }
    }
    Ok(IdMap::from_external(
        pairs.into_iter().map(|(_, e)| e).collect(),
    ))
}
