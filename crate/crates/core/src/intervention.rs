//! Peace-bot deployment.
//!
//! A peace-bot is an extra node with permanent toxicity zero and a single
//! outgoing edge to its target user. Bots are appended after the original
//! node ids, so the augmented graph restricted to users equals the original.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng::{domain, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlacementStrategy {
    /// No bots.
    Baseline,
    /// Targets drawn uniformly without replacement.
    RandomPlacement,
    /// Targets are the users with the smallest indegree, ties by id.
    LowestIndegree,
}

impl PlacementStrategy {
    pub fn short_name(self) -> &'static str {
        match self {
            PlacementStrategy::Baseline => "baseline",
            PlacementStrategy::RandomPlacement => "rp",
            PlacementStrategy::LowestIndegree => "li",
        }
    }
}

impl fmt::Display for PlacementStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for PlacementStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" | "none" => Ok(PlacementStrategy::Baseline),
            "rp" | "random" => Ok(PlacementStrategy::RandomPlacement),
            "li" | "lowest-indegree" | "lowest_indegree" => Ok(PlacementStrategy::LowestIndegree),
            other => Err(Error::invalid(format!(
                "unknown placement strategy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BotDeployment {
    pub strategy: PlacementStrategy,
    pub seed: u64,
    /// Number of original (non-bot) nodes.
    pub user_count: usize,
    pub bots: Vec<NodeId>,
    /// `targets[i]` receives the single edge of `bots[i]`.
    pub targets: Vec<NodeId>,
    pub graph: DirectedGraph,
}

impl BotDeployment {
    pub fn len(&self) -> usize {
        self.bots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bots.is_empty()
    }

    /// Audit manifest: `bot_id,target_id,strategy,seed`.
    pub fn write_manifest<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bot_id,target_id,strategy,seed")?;
        for (b, t) in self.bots.iter().zip(&self.targets) {
            writeln!(w, "{b},{t},{},{}", self.strategy, self.seed)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Chooses `n_bots` distinct targets among the nodes of `g` and returns the
/// augmented graph. Indegrees are measured on `g` before any bot is added.
pub fn deploy_bots(
    g: &DirectedGraph,
    n_bots: usize,
    strategy: PlacementStrategy,
    seed: u64,
) -> Result<BotDeployment> {
    let n = g.node_count();
    if n_bots == 0 {
        return Err(Error::invalid("at least one bot is required"));
    }
    if n_bots > n {
        return Err(Error::invalid(format!(
            "{n_bots} bots exceed the {n} available targets"
        )));
    }
    let targets: Vec<NodeId> = match strategy {
        PlacementStrategy::Baseline => {
            return Err(Error::invalid("baseline deploys no bots"));
        }
        PlacementStrategy::RandomPlacement => {
            let mut rng = StreamRng::new(seed).derive(domain::BOTS);
            rand::seq::index::sample(&mut rng, n, n_bots)
                .into_iter()
                .map(NodeId::from)
                .collect()
        }
        PlacementStrategy::LowestIndegree => {
            let mut order: Vec<NodeId> = g.nodes().collect();
            // stable sort keeps ascending id order among equal indegrees
            order.sort_by_key(|&v| g.in_neighbors(v).len());
            order.truncate(n_bots);
            order
        }
    };
    let graph = g.with_appended_sources(&targets)?;
    let bots = (n..n + n_bots).map(NodeId::from).collect();
    Ok(BotDeployment {
        strategy,
        seed,
        user_count: n,
        bots,
        targets,
        graph,
    })
}

/// `100 * (baseline - intervened) / baseline`; negative when the
/// intervention increases toxicity.
pub fn percentage_reduction(baseline_total: f64, intervened_total: f64) -> Result<f64> {
    if baseline_total.is_nan() || baseline_total <= 0.0 {
        return Err(Error::invalid(format!(
            "baseline total {baseline_total} must be positive"
        )));
    }
    Ok(100.0 * (baseline_total - intervened_total) / baseline_total)
}

/// Average incoming toxicity after one zero-toxicity in-neighbour joins a
/// node whose `indeg` existing in-neighbours average `avg`.
pub fn bot_effect_on_average(avg: f64, indeg: usize) -> f64 {
    avg * indeg as f64 / (indeg as f64 + 1.0)
}
