//! Immutable directed graphs over dense node ids.
//!
//! Adjacency is stored twice in compressed-row form (successors and
//! predecessors), each row sorted ascending. Self-loops and parallel edges are
//! never represented.

mod er;
mod io;

pub use er::generate_er;
pub use io::{load_edge_list, read_id_map, write_edge_list, write_id_map, IdMap, LoadedGraph};

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Edges discarded while building a graph from raw input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeCleaning {
    pub duplicates_dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    node_count: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
}

impl DirectedGraph {
    pub fn empty(node_count: usize) -> Self {
        DirectedGraph {
            node_count,
            out_offsets: vec![0; node_count + 1],
            out_targets: Vec::new(),
            in_offsets: vec![0; node_count + 1],
            in_sources: Vec::new(),
        }
    }

    /// Builds a graph from `(src, dst)` pairs. Duplicates are collapsed;
    /// self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<(Self, EdgeCleaning)>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        if node_count > u32::MAX as usize {
            return Err(Error::invalid("node count exceeds u32 id space"));
        }
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x as usize >= node_count {
                    return Err(Error::NodeOutOfRange {
                        node: x as usize,
                        node_count,
                    });
                }
            }
            if u == v {
                return Err(Error::SelfLoop {
                    line: 0,
                    node: u as u64,
                });
            }
            pairs.push((u, v));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        let cleaning = EdgeCleaning {
            duplicates_dropped: before - pairs.len(),
        };
        Ok((Self::from_sorted_unique(node_count, &pairs), cleaning))
    }

    /// `pairs` must be sorted, unique and loop-free.
    pub(crate) fn from_sorted_unique(node_count: usize, pairs: &[(u32, u32)]) -> Self {
        let mut out_offsets = vec![0usize; node_count + 1];
        let mut in_offsets = vec![0usize; node_count + 1];
        for &(u, v) in pairs {
            out_offsets[u as usize + 1] += 1;
            in_offsets[v as usize + 1] += 1;
        }
        for i in 0..node_count {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        // sorted by (u, v) so each out-row is already ascending
        let out_targets: Vec<NodeId> = pairs.iter().map(|&(_, v)| NodeId(v)).collect();

        // scanning sources in ascending order keeps each in-row ascending too
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![NodeId(0); pairs.len()];
        for &(u, v) in pairs {
            let slot = &mut cursor[v as usize];
            in_sources[*slot] = NodeId(u);
            *slot += 1;
        }

        DirectedGraph {
            node_count,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if v.index() < self.node_count {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: v.index(),
                node_count: self.node_count,
            })
        }
    }

    /// Successors of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        let i = v.index();
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// Predecessors of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        let i = v.index();
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    pub fn indegree(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.in_neighbors(v).len())
    }

    pub fn outdegree(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.out_neighbors(v).len())
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u.index() < self.node_count && self.out_neighbors(u).binary_search(&v).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count as u32).map(NodeId)
    }

    /// All edges in ascending `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Copy of this graph with one new source node per entry of `targets`,
    /// appended after the existing ids, each with a single edge to its target.
    pub fn with_appended_sources(&self, targets: &[NodeId]) -> Result<Self> {
        for &t in targets {
            self.check(t)?;
        }
        let base = self.node_count as u32;
        let total = self.node_count + targets.len();
        let mut pairs: Vec<(u32, u32)> = self.edges().map(|(u, v)| (u.0, v.0)).collect();
        pairs.extend(
            targets
                .iter()
                .enumerate()
                .map(|(i, t)| (base + i as u32, t.0)),
        );
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self::from_sorted_unique(total, &pairs))
    }
}
