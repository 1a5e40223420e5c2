//! Hop-by-hop toxicity propagation.
//!
//! Each hop reads an immutable snapshot of the previous state: every user
//! with at least one active in-neighbour receives the mean toxicity of its
//! active in-neighbours, applies a shift sampled for its current category,
//! is clamped to `[0, 1]`, and may then change category. All updates are
//! committed together, so the result does not depend on visiting order.
//!
//! Node ids at or beyond the profile length are peace-bots: always active,
//! toxicity fixed at zero, never updated.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::behavior::{
    step_category, CategoryProfile, ShiftDistribution, TransitionMatrix, UserCategory,
};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng::{domain, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    /// `round(fraction * users)` users chosen uniformly without replacement.
    Fraction(f64),
    Nodes(Vec<NodeId>),
}

/// When changing users draw their next category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoryCadence {
    /// After every hop in which the user was updated.
    PerHop,
    /// At each week boundary, for users updated during that week.
    PerWeek,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Total number of hops.
    pub kiter: usize,
    pub hops_per_week: usize,
    pub seeds: SeedSpec,
    /// Range of the uniform initial toxicity of seeded users; `lo > 0`.
    pub initial_toxicity: (f64, f64),
    pub seed: u64,
    /// Whether a user clamped to zero still counts as active.
    pub zero_stays_active: bool,
    pub cadence: CategoryCadence,
}

impl Default for SimulationConfig {
    /// Eight weeks of four hops, 1% of users seeded.
    fn default() -> Self {
        SimulationConfig {
            kiter: 32,
            hops_per_week: 4,
            seeds: SeedSpec::Fraction(0.01),
            initial_toxicity: (0.5, 1.0),
            seed: 0,
            zero_stays_active: true,
            cadence: CategoryCadence::PerHop,
        }
    }
}

impl SimulationConfig {
    pub fn weeks(&self) -> usize {
        self.kiter.div_ceil(self.hops_per_week)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kiter == 0 {
            return Err(Error::invalid("kiter must be at least 1"));
        }
        if self.hops_per_week == 0 {
            return Err(Error::invalid("hops_per_week must be at least 1"));
        }
        let (lo, hi) = self.initial_toxicity;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid(format!(
                "initial toxicity range [{lo}, {hi}] must satisfy 0 < lo <= hi <= 1"
            )));
        }
        if let SeedSpec::Fraction(f) = self.seeds {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("seed fraction {f} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    tox: Vec<f64>,
    active: Vec<bool>,
    categories: Vec<UserCategory>,
    changing: Vec<bool>,
    users: usize,
    hop: usize,
    stream_keys: Option<Vec<u64>>,
}

impl SimulationState {
    /// Fresh state: users inactive at zero, bots active at zero.
    pub fn new(g: &DirectedGraph, profile: &CategoryProfile) -> Result<Self> {
        let users = profile.len();
        if users > g.node_count() {
            return Err(Error::invalid(format!(
                "profile covers {users} users but graph has {} nodes",
                g.node_count()
            )));
        }
        if profile.changing.len() != users {
            return Err(Error::invalid(
                "profile category and changing lengths differ",
            ));
        }
        let n = g.node_count();
        let mut active = vec![false; n];
        active[users..].fill(true);
        Ok(SimulationState {
            tox: vec![0.0; n],
            active,
            categories: profile.categories.clone(),
            changing: profile.changing.clone(),
            users,
            hop: 0,
            stream_keys: None,
        })
    }

    /// Overrides the per-node labels used to derive random streams (default:
    /// the node id). Relabelling nodes together with their keys reproduces
    /// the same trajectory under the new ids.
    pub fn with_stream_keys(mut self, keys: Vec<u64>) -> Result<Self> {
        if keys.len() != self.tox.len() {
            return Err(Error::invalid("one stream key per node required"));
        }
        self.stream_keys = Some(keys);
        Ok(self)
    }

    #[inline]
    fn key(&self, v: usize) -> u64 {
        self.stream_keys.as_ref().map_or(v as u64, |k| k[v])
    }

    pub fn toxicity(&self) -> &[f64] {
        &self.tox
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn categories(&self) -> &[UserCategory] {
        &self.categories
    }

    pub fn user_count(&self) -> usize {
        self.users
    }

    pub fn is_bot(&self, v: NodeId) -> bool {
        v.index() >= self.users
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Toxicity summed over users (bots excluded).
    pub fn total_toxicity(&self) -> f64 {
        self.tox[..self.users].iter().sum()
    }

    pub fn active_users(&self) -> usize {
        self.active[..self.users].iter().filter(|&&a| a).count()
    }

    /// Gives seeded users a uniform initial toxicity; everyone else stays
    /// inactive at zero.
    pub fn seed_toxicity(&mut self, config: &SimulationConfig) -> Result<Vec<NodeId>> {
        config.validate()?;
        let root = StreamRng::new(config.seed).derive(domain::SEEDING);
        let seeds: Vec<NodeId> = match &config.seeds {
            SeedSpec::Fraction(f) => {
                let k = (self.users as f64 * f).round() as usize;
                let mut picks: Vec<NodeId> =
                    rand::seq::index::sample(&mut root.derive(0), self.users, k.min(self.users))
                        .into_iter()
                        .map(NodeId::from)
                        .collect();
                picks.sort_unstable();
                picks
            }
            SeedSpec::Nodes(list) => {
                let mut list = list.clone();
                list.sort_unstable();
                list.dedup();
                if let Some(bad) = list.iter().find(|v| v.index() >= self.users) {
                    return Err(Error::invalid(format!("seed node {bad} is not a user")));
                }
                list
            }
        };
        if seeds.is_empty() {
            return Err(Error::invalid("seed specification selects no users"));
        }
        let (lo, hi) = config.initial_toxicity;
        for &v in &seeds {
            let mut rng = root.derive(1).derive(self.key(v.index()));
            self.tox[v.index()] = lo + (hi - lo) * rng.unit();
            self.active[v.index()] = true;
        }
        Ok(seeds)
    }
}

/// Mean toxicity over the active in-neighbours of `v`, or `None` when it has
/// none this hop.
pub fn avg_incoming_toxicity(v: NodeId, state: &SimulationState, g: &DirectedGraph) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &u in g.in_neighbors(v) {
        if state.active[u.index()] {
            sum += state.tox[u.index()];
            count += 1;
        }
    }
    (count > 0).then(|| (sum / count as f64).clamp(0.0, 1.0))
}

/// Outcome of one hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopSummary {
    pub hop: usize,
    pub updated: usize,
}

/// Advances the state by one hop; returns which users were updated.
pub fn step_hop(
    state: &mut SimulationState,
    g: &DirectedGraph,
    dists: &ShiftDistribution,
    m: &TransitionMatrix,
    master: &StreamRng,
    cadence: CategoryCadence,
    zero_stays_active: bool,
) -> Result<Vec<bool>> {
    if g.node_count() != state.tox.len() {
        return Err(Error::invalid("state and graph sizes differ"));
    }
    let hop = state.hop + 1;
    let hop_root = master.derive(domain::HOP).derive(hop as u64);
    let snapshot = &*state;

    let updates: Vec<Option<(f64, UserCategory)>> = (0..snapshot.users)
        .into_par_iter()
        .with_min_len(512)
        .map(|v| {
            let Some(avg) = avg_incoming_toxicity(NodeId::from(v), snapshot, g) else {
                return Ok(None);
            };
            let mut rng = hop_root.derive(snapshot.key(v));
            let cat = snapshot.categories[v];
            let shift = dists.sample_shift(cat, avg, &mut rng)?;
            let tox = (avg + shift).clamp(0.0, 1.0);
            let next = match cadence {
                CategoryCadence::PerHop => step_category(cat, snapshot.changing[v], m, &mut rng),
                CategoryCadence::PerWeek => cat,
            };
            Ok(Some((tox, next)))
        })
        .collect::<Result<_>>()?;

    let mut touched = vec![false; state.users];
    for (v, up) in updates.into_iter().enumerate() {
        if let Some((tox, cat)) = up {
            state.tox[v] = tox;
            state.active[v] = zero_stays_active || tox > 0.0;
            state.categories[v] = cat;
            touched[v] = true;
        }
    }
    state.hop = hop;
    Ok(touched)
}

/// Category draw at a week boundary for users updated during the week.
fn step_week_categories(
    state: &mut SimulationState,
    m: &TransitionMatrix,
    master: &StreamRng,
    week: usize,
    touched: &[bool],
) {
    let root = master.derive(domain::WEEK).derive(week as u64);
    for v in (0..state.users).filter(|&v| touched[v]) {
        let mut rng = root.derive(state.key(v));
        state.categories[v] = step_category(state.categories[v], state.changing[v], m, &mut rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeekMetrics {
    pub week: usize,
    pub total_toxicity: f64,
    pub mean_toxicity: f64,
    pub active_nodes: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsSeries {
    pub rows: Vec<WeekMetrics>,
}

impl MetricsSeries {
    pub fn final_total(&self) -> Option<f64> {
        self.rows.last().map(|r| r.total_toxicity)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub const METRICS_HEADER: &str = "run_id,week,total_toxicity,mean_toxicity,active_nodes";

pub fn write_metrics_csv<W: Write>(mut w: W, runs: &[(&str, &MetricsSeries)]) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for (id, series) in runs {
        for r in &series.rows {
            writeln!(
                w,
                "{id},{},{:.6},{:.6},{}",
                r.week, r.total_toxicity, r.mean_toxicity, r.active_nodes
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a metrics CSV back into per-run series, in order of first appearance.
pub fn read_metrics_csv<R: Read>(source: R) -> Result<Vec<(String, MetricsSeries)>> {
    let mut reader = csv::Reader::from_reader(source);
    let mut out: Vec<(String, MetricsSeries)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 5 {
            return Err(Error::parse(line, "expected 5 metrics fields"));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad number {:?}", &rec[k])))
        };
        let row = WeekMetrics {
            week: num(1)? as usize,
            total_toxicity: num(2)?,
            mean_toxicity: num(3)?,
            active_nodes: num(4)? as usize,
        };
        match out.iter_mut().find(|(id, _)| id == &rec[0]) {
            Some((_, s)) => s.rows.push(row),
            None => out.push((rec[0].to_string(), MetricsSeries { rows: vec![row] })),
        }
    }
    Ok(out)
}

/// A seeded simulation that can be advanced hop by hop.
pub struct Simulation<'a> {
    graph: &'a DirectedGraph,
    dists: &'a ShiftDistribution,
    transitions: &'a TransitionMatrix,
    config: SimulationConfig,
    master: StreamRng,
    state: SimulationState,
    week_touched: Vec<bool>,
    metrics: MetricsSeries,
}

impl<'a> Simulation<'a> {
    pub fn new(
        graph: &'a DirectedGraph,
        profile: &CategoryProfile,
        dists: &'a ShiftDistribution,
        transitions: &'a TransitionMatrix,
        config: SimulationConfig,
    ) -> Result<Self> {
        let state = SimulationState::new(graph, profile)?;
        Self::with_state(graph, state, dists, transitions, config)
    }

    /// Starts from a prepared (unseeded) state, e.g. one with custom stream keys.
    pub fn with_state(
        graph: &'a DirectedGraph,
        mut state: SimulationState,
        dists: &'a ShiftDistribution,
        transitions: &'a TransitionMatrix,
        config: SimulationConfig,
    ) -> Result<Self> {
        config.validate()?;
        transitions.validate()?;
        // categories reachable by any user must have a histogram
        let mut reachable = [false; 3];
        for (c, &changing) in state.categories.iter().zip(&state.changing) {
            reachable[c.index()] = true;
            if changing {
                for to in UserCategory::ALL {
                    if transitions.prob(*c, to) > 0.0 {
                        reachable[to.index()] = true;
                    }
                }
            }
        }
        dists.ensure_covers(
            UserCategory::ALL
                .into_iter()
                .filter(|c| reachable[c.index()]),
        )?;
        state.seed_toxicity(&config)?;
        let users = state.users;
        Ok(Simulation {
            graph,
            dists,
            transitions,
            master: StreamRng::new(config.seed),
            config,
            state,
            week_touched: vec![false; users],
            metrics: MetricsSeries::default(),
        })
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    pub fn metrics(&self) -> &MetricsSeries {
        &self.metrics
    }

    pub fn is_finished(&self) -> bool {
        self.state.hop >= self.config.kiter
    }

    /// Runs one hop and records metrics at week boundaries.
    pub fn step(&mut self) -> Result<HopSummary> {
        let touched = step_hop(
            &mut self.state,
            self.graph,
            self.dists,
            self.transitions,
            &self.master,
            self.config.cadence,
            self.config.zero_stays_active,
        )?;
        let updated = touched.iter().filter(|&&t| t).count();
        for (w, t) in self.week_touched.iter_mut().zip(&touched) {
            *w |= *t;
        }
        let hop = self.state.hop;
        let hpw = self.config.hops_per_week;
        if hop.is_multiple_of(hpw) || hop == self.config.kiter {
            let week = hop.div_ceil(hpw);
            if self.config.cadence == CategoryCadence::PerWeek {
                let touched =
                    std::mem::replace(&mut self.week_touched, vec![false; self.state.users]);
                step_week_categories(
                    &mut self.state,
                    self.transitions,
                    &self.master,
                    week,
                    &touched,
                );
            }
            self.record(week);
        }
        Ok(HopSummary { hop, updated })
    }

    fn record(&mut self, week: usize) {
        let total = self.state.total_toxicity();
        let users = self.state.users.max(1);
        self.metrics.rows.push(WeekMetrics {
            week,
            total_toxicity: total,
            mean_toxicity: total / users as f64,
            active_nodes: self.state.active_users(),
        });
    }

    pub fn finish(mut self) -> Result<(MetricsSeries, SimulationState)> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok((self.metrics, self.state))
    }
}

/// Seeds, runs `kiter` hops and returns the weekly metrics.
pub fn run(
    g: &DirectedGraph,
    profile: &CategoryProfile,
    dists: &ShiftDistribution,
    m: &TransitionMatrix,
    config: &SimulationConfig,
) -> Result<MetricsSeries> {
    Ok(Simulation::new(g, profile, dists, m, config.clone())?
        .finish()?
        .0)
}
