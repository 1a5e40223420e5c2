//! Within-label edge fractions against their chance level.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

pub const DEFAULT_HOMOPHILY_MARGIN: f64 = 0.05;

/// Homophily when the within-label fraction beats chance by more than
/// `margin`.
pub fn homophily_verdict(x: f64, expected: f64, margin: f64) -> bool {
    x > expected + margin
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelHomophily<L> {
    pub label: L,
    pub nodes: usize,
    /// Share of labeled nodes carrying this label.
    pub node_share: f64,
    pub within_edges: usize,
    /// Within-label edges over edges whose endpoints are both labeled.
    pub x: f64,
    /// Chance level `node_share²`.
    pub expected: f64,
    /// Within-label edges over all edges of the graph.
    pub x_all_edges: f64,
    pub homophilous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomophilyReport<L> {
    pub labels: Vec<LabelHomophily<L>>,
    /// Fraction of labeled edges for every ordered `(source, target)` label
    /// pair that occurs.
    pub pair_fractions: Vec<((L, L), f64)>,
    pub labeled_edges: usize,
    /// Edges with at least one unlabeled endpoint.
    pub excluded_edges: usize,
    pub total_edges: usize,
    pub margin: f64,
}

/// `labels[v]` is `None` for nodes left out of the analysis.
pub fn homophily<L: Ord + Clone>(
    g: &DirectedGraph,
    labels: &[Option<L>],
    margin: f64,
) -> Result<HomophilyReport<L>> {
    if labels.len() != g.node_count() {
        return Err(Error::invalid(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.node_count()
        )));
    }
    let mut nodes: BTreeMap<&L, usize> = BTreeMap::new();
    for l in labels.iter().flatten() {
        *nodes.entry(l).or_default() += 1;
    }
    let labeled_nodes: usize = nodes.values().sum();

    let mut pairs: BTreeMap<(&L, &L), usize> = BTreeMap::new();
    let mut excluded = 0;
    for (u, v) in g.edges() {
        match (&labels[u.index()], &labels[v.index()]) {
            (Some(a), Some(b)) => *pairs.entry((a, b)).or_default() += 1,
            _ => excluded += 1,
        }
    }
    let labeled_edges = g.edge_count() - excluded;
    if labeled_edges == 0 {
        return Err(Error::InsufficientData(
            "no edge has two labeled endpoints".into(),
        ));
    }
    let total = g.edge_count();

    let per_label = nodes
        .iter()
        .map(|(&l, &count)| {
            let within = pairs.get(&(l, l)).copied().unwrap_or(0);
            let share = count as f64 / labeled_nodes as f64;
            let x = within as f64 / labeled_edges as f64;
            let expected = share * share;
            LabelHomophily {
                label: l.clone(),
                nodes: count,
                node_share: share,
                within_edges: within,
                x,
                expected,
                x_all_edges: within as f64 / total as f64,
                homophilous: homophily_verdict(x, expected, margin),
            }
        })
        .collect();
    let pair_fractions = pairs
        .iter()
        .map(|(&(a, b), &c)| ((a.clone(), b.clone()), c as f64 / labeled_edges as f64))
        .collect();
    Ok(HomophilyReport {
        labels: per_label,
        pair_fractions,
        labeled_edges,
        excluded_edges: excluded,
        total_edges: total,
        margin,
    })
}

impl<L: Ord> HomophilyReport<L> {
    pub fn get(&self, label: &L) -> Option<&LabelHomophily<L>> {
        self.labels.iter().find(|r| &r.label == label)
    }
}

impl<L: Display> HomophilyReport<L> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,nodes,within_edges,x,x_expected,x_all_edges,homophily\n");
        for r in &self.labels {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{}",
                r.label, r.nodes, r.within_edges, r.x, r.expected, r.x_all_edges, r.homophilous
            );
        }
        s
    }
}

impl<L: Display> Display for HomophilyReport<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "homophily over {} labeled edges ({} of {} edges excluded), margin {}",
            self.labeled_edges, self.excluded_edges, self.total_edges, self.margin
        )?;
        for r in &self.labels {
            writeln!(
                f,
                "  {:<12} x = {:.6}  x^2 = {:.6}  x(all edges) = {:.6}  {}",
                r.label.to_string(),
                r.x,
                r.expected,
                r.x_all_edges,
                if r.homophilous {
                    "homophily"
                } else {
                    "no homophily"
                }
            )?;
        }
        Ok(())
    }
}
