//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::behavior::{CategoryFractions, ShiftDistribution, TransitionMatrix};
use crate::engine::{CategoryCadence, SeedSpec, SimulationConfig};
use crate::error::{Error, Result};
use crate::intervention::PlacementStrategy;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Er { n: usize, p: f64 },
    EdgeList(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSource {
    Synthetic { bins: usize },
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionSource {
    Default,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub graph: GraphSource,
    pub fractions: CategoryFractions,
    pub changing_fraction: f64,
    pub transitions: TransitionSource,
    pub shifts: ShiftSource,
    pub weeks: usize,
    pub hops_per_week: usize,
    pub seed_fraction: f64,
    pub initial_toxicity: (f64, f64),
    pub bots: Vec<usize>,
    pub strategies: Vec<PlacementStrategy>,
    pub runs: usize,
    pub seed: u64,
    /// Use one graph for every run instead of one per run.
    pub fixed_graph: bool,
    pub cadence: CategoryCadence,
    pub zero_stays_active: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            graph: GraphSource::Er { n: 5000, p: 0.0005 },
            fractions: CategoryFractions::default(),
            changing_fraction: 0.47,
            transitions: TransitionSource::Default,
            shifts: ShiftSource::Synthetic { bins: 20 },
            weeks: 8,
            hops_per_week: 4,
            seed_fraction: 0.01,
            initial_toxicity: (0.5, 1.0),
            bots: vec![56, 112, 224, 560],
            strategies: vec![
                PlacementStrategy::RandomPlacement,
                PlacementStrategy::LowestIndegree,
            ],
            runs: 5,
            seed: 1,
            fixed_graph: false,
            cadence: CategoryCadence::PerHop,
            zero_stays_active: true,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean {value:?} for {key}"
        ))),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentSpec {
    /// Applies one setting. Keys may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "graph" => {
                self.graph = if value == "er" {
                    match self.graph {
                        GraphSource::Er { .. } => self.graph.clone(),
                        GraphSource::EdgeList(_) => GraphSource::Er { n: 5000, p: 0.0005 },
                    }
                } else {
                    GraphSource::EdgeList(PathBuf::from(value))
                }
            }
            "er_n" | "er_p" => {
                let (mut n, mut p) = match self.graph {
                    GraphSource::Er { n, p } => (n, p),
                    GraphSource::EdgeList(_) => (5000, 0.0005),
                };
                if k == "er_n" {
                    n = parse(k, value)?;
                } else {
                    p = parse(k, value)?;
                }
                self.graph = GraphSource::Er { n, p };
            }
            "fractions" => {
                let v: Vec<f64> = parse_list(k, value)?;
                if v.len() != 3 {
                    return Err(Error::Config(format!(
                        "fractions needs amplifier,attenuator,copycat, got {value:?}"
                    )));
                }
                self.fractions = CategoryFractions::new(v[0], v[1], v[2])?;
            }
            "changing_fraction" => self.changing_fraction = parse(k, value)?,
            "transitions" => {
                self.transitions = if value == "default" {
                    TransitionSource::Default
                } else {
                    TransitionSource::File(PathBuf::from(value))
                }
            }
            "shift_dist" => {
                self.shifts = if value == "synthetic" {
                    match self.shifts {
                        ShiftSource::Synthetic { bins } => ShiftSource::Synthetic { bins },
                        ShiftSource::Csv(_) => ShiftSource::Synthetic { bins: 20 },
                    }
                } else {
                    ShiftSource::Csv(PathBuf::from(value))
                }
            }
            "shift_bins" => {
                self.shifts = ShiftSource::Synthetic {
                    bins: parse(k, value)?,
                }
            }
            "weeks" => self.weeks = parse(k, value)?,
            "hops_per_week" => self.hops_per_week = parse(k, value)?,
            "seed_fraction" => self.seed_fraction = parse(k, value)?,
            "initial_toxicity" => {
                let v: Vec<f64> = parse_list(k, value)?;
                if v.len() != 2 {
                    return Err(Error::Config(format!(
                        "initial_toxicity needs lo,hi, got {value:?}"
                    )));
                }
                self.initial_toxicity = (v[0], v[1]);
            }
            "bots" => self.bots = parse_list(k, value)?,
            "strategy" | "strategies" => {
                self.strategies = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()
                    .map_err(|e| Error::Config(e.to_string()))?
            }
            "runs" => self.runs = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "fixed_graph" => self.fixed_graph = parse_bool(k, value)?,
            "cadence" => {
                self.cadence = match value {
                    "hop" | "per_hop" => CategoryCadence::PerHop,
                    "week" | "per_week" => CategoryCadence::PerWeek,
                    _ => return Err(Error::Config(format!("invalid cadence {value:?}"))),
                }
            }
            "zero_stays_active" => self.zero_stays_active = parse_bool(k, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values. Blank
    /// lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::parse(i + 1, format!("expected key = value, got {line:?}"))
            })?;
            self.set(k, v)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut spec = Self::default();
        spec.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.bots.contains(&0) {
            return bad("bot counts must be positive; the baseline is always run".into());
        }
        if self.strategies.contains(&PlacementStrategy::Baseline) {
            return bad("baseline is implicit and cannot be a strategy".into());
        }
        if self.weeks == 0 || self.hops_per_week == 0 {
            return bad("weeks and hops_per_week must be positive".into());
        }
        if let GraphSource::Er { n, p } = self.graph {
            if n == 0 || !(0.0..=1.0).contains(&p) {
                return bad(format!("invalid ER parameters n = {n}, p = {p}"));
            }
            if let Some(&b) = self.bots.iter().max() {
                if b > n {
                    return bad(format!("{b} bots exceed {n} nodes"));
                }
            }
        }
        if let ShiftSource::Synthetic { bins: 0 } = self.shifts {
            return bad("shift_bins must be positive".into());
        }
        self.fractions.validate()?;
        if !(0.0..=1.0).contains(&self.changing_fraction) {
            return bad(format!(
                "changing_fraction {} outside [0, 1]",
                self.changing_fraction
            ));
        }
        self.simulation_config(0).validate()
    }

    pub fn simulation_config(&self, seed: u64) -> SimulationConfig {
        SimulationConfig {
            kiter: self.weeks * self.hops_per_week,
            hops_per_week: self.hops_per_week,
            seeds: SeedSpec::Fraction(self.seed_fraction),
            initial_toxicity: self.initial_toxicity,
            seed,
            zero_stays_active: self.zero_stays_active,
            cadence: self.cadence,
        }
    }

    pub fn load_shifts(&self) -> Result<ShiftDistribution> {
        match &self.shifts {
            ShiftSource::Synthetic { bins } => ShiftDistribution::synthetic(*bins),
            ShiftSource::Csv(path) => {
                crate::behavior::load_shift_distribution(std::fs::File::open(path)?)
            }
        }
    }

    pub fn load_transitions(&self) -> Result<TransitionMatrix> {
        match &self.transitions {
            TransitionSource::Default => Ok(TransitionMatrix::default()),
            TransitionSource::File(path) => {
                TransitionMatrix::read(std::io::BufReader::new(std::fs::File::open(path)?))
            }
        }
    }

    /// Every setting as `key = value`, readable by [`ExperimentSpec::apply_text`].
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.graph {
            GraphSource::Er { n, p } => {
                kv("graph", "er".into());
                kv("er_n", n.to_string());
                kv("er_p", p.to_string());
            }
            GraphSource::EdgeList(path) => kv("graph", path.display().to_string()),
        }
        kv(
            "fractions",
            join(&[
                self.fractions.amplifier,
                self.fractions.attenuator,
                self.fractions.copycat,
            ]),
        );
        kv("changing_fraction", self.changing_fraction.to_string());
        match &self.transitions {
            TransitionSource::Default => kv("transitions", "default".into()),
            TransitionSource::File(p) => kv("transitions", p.display().to_string()),
        }
        match &self.shifts {
            ShiftSource::Synthetic { bins } => {
                kv("shift_dist", "synthetic".into());
                kv("shift_bins", bins.to_string());
            }
            ShiftSource::Csv(p) => kv("shift_dist", p.display().to_string()),
        }
        kv("weeks", self.weeks.to_string());
        kv("hops_per_week", self.hops_per_week.to_string());
        kv("seed_fraction", self.seed_fraction.to_string());
        kv(
            "initial_toxicity",
            join(&[self.initial_toxicity.0, self.initial_toxicity.1]),
        );
        kv("bots", join(&self.bots));
        kv("strategy", join(&self.strategies));
        kv("runs", self.runs.to_string());
        kv("seed", self.seed.to_string());
        kv("fixed_graph", self.fixed_graph.to_string());
        kv(
            "cadence",
            match self.cadence {
                CategoryCadence::PerHop => "hop",
                CategoryCadence::PerWeek => "week",
            }
            .into(),
        );
        kv("zero_stays_active", self.zero_stays_active.to_string());
        s
    }
}
