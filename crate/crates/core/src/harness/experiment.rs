//! Baseline versus intervention sweeps over several seeded runs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentSpec, GraphSource};
use super::plot::emit_plot;
use crate::behavior::{assign_categories, CategoryProfile, ShiftDistribution, TransitionMatrix};
use crate::engine::{run, write_metrics_csv, MetricsSeries, WeekMetrics};
use crate::error::{Error, Result};
use crate::graph::{generate_er, load_edge_list, DirectedGraph, IdMap, NodeId};
use crate::intervention::{deploy_bots, percentage_reduction, PlacementStrategy};
use crate::rng::{domain, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub strategy: PlacementStrategy,
    pub bots: usize,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{}_{}", self.strategy, self.bots)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub cell: Cell,
    pub bot_seed: u64,
    pub targets: Vec<NodeId>,
    pub metrics: MetricsSeries,
}

/// One seed: the baseline and every cell on the same graph, categories and
/// simulation stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// 1-based.
    pub run: usize,
    pub nodes: usize,
    pub edges: usize,
    pub baseline: MetricsSeries,
    pub cells: Vec<CellRun>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionRow {
    pub nodes: usize,
    /// Mean edge count over runs.
    pub edges: f64,
    pub cell: Cell,
    pub mean: f64,
    /// Sample standard deviation over runs; zero for a single run.
    pub std: f64,
    pub per_run: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeekReductionRow {
    pub cell: Cell,
    pub week: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReductionTable {
    /// Reduction of final-week total toxicity, one row per cell.
    pub rows: Vec<ReductionRow>,
    pub by_week: Vec<WeekReductionRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub runs: Vec<RunRecord>,
    pub table: ReductionTable,
    /// External ids of a loaded edge list.
    pub id_map: Option<IdMap>,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ExperimentSpec {
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &strategy in &self.strategies {
            for &bots in &self.bots {
                cells.push(Cell { strategy, bots });
            }
        }
        cells
    }
}

struct Inputs {
    shared_graph: Option<DirectedGraph>,
    id_map: Option<IdMap>,
    shifts: ShiftDistribution,
    transitions: TransitionMatrix,
}

fn load_inputs(spec: &ExperimentSpec) -> Result<Inputs> {
    let (shared_graph, id_map) = match &spec.graph {
        GraphSource::EdgeList(path) => {
            let loaded = load_edge_list(BufReader::new(File::open(path)?))?;
            (Some(loaded.graph), Some(loaded.id_map))
        }
        GraphSource::Er { n, p } if spec.fixed_graph => {
            let seed = StreamRng::new(spec.seed).derive(domain::GRAPH).key();
            (Some(generate_er(*n, *p, seed)?), None)
        }
        GraphSource::Er { .. } => (None, None),
    };
    Ok(Inputs {
        shared_graph,
        id_map,
        shifts: spec.load_shifts()?,
        transitions: spec.load_transitions()?,
    })
}

fn run_seed(spec: &ExperimentSpec, inputs: &Inputs, cells: &[Cell], k: usize) -> Result<RunRecord> {
    let root = StreamRng::new(spec.seed)
        .derive(domain::RUN)
        .derive(k as u64);
    let owned;
    let g = match &inputs.shared_graph {
        Some(g) => g,
        None => {
            let GraphSource::Er { n, p } = spec.graph else {
                unreachable!()
            };
            owned = generate_er(n, p, root.derive(domain::GRAPH).key())?;
            &owned
        }
    };
    if let Some(&b) = spec.bots.iter().max() {
        if b > g.node_count() {
            return Err(Error::Config(format!(
                "{b} bots exceed {} nodes",
                g.node_count()
            )));
        }
    }
    let profile: CategoryProfile = assign_categories(
        g.node_count(),
        spec.fractions,
        spec.changing_fraction,
        root.derive(domain::CATEGORIES).key(),
    )?;
    let config = spec.simulation_config(root.derive(domain::HOP).key());
    let bot_seed = root.derive(domain::BOTS).key();

    let baseline = run(g, &profile, &inputs.shifts, &inputs.transitions, &config)?;
    let cell_runs = cells
        .par_iter()
        .map(|&cell| {
            let d = deploy_bots(g, cell.bots, cell.strategy, bot_seed)?;
            let metrics = run(
                &d.graph,
                &profile,
                &inputs.shifts,
                &inputs.transitions,
                &config,
            )?;
            Ok(CellRun {
                cell,
                bot_seed,
                targets: d.targets,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunRecord {
        run: k + 1,
        nodes: g.node_count(),
        edges: g.edge_count(),
        baseline,
        cells: cell_runs,
    })
}

fn reductions(runs: &[RunRecord], cells: &[Cell]) -> Result<ReductionTable> {
    let mut table = ReductionTable::default();
    for (i, &cell) in cells.iter().enumerate() {
        let per_run = runs
            .iter()
            .map(|r| {
                let base = r
                    .baseline
                    .final_total()
                    .ok_or_else(|| Error::invalid("empty baseline"))?;
                let with = r.cells[i]
                    .metrics
                    .final_total()
                    .ok_or_else(|| Error::invalid("empty run"))?;
                percentage_reduction(base, with)
            })
            .collect::<Result<Vec<_>>>()?;
        let (mean, std) = mean_std(&per_run);
        table.rows.push(ReductionRow {
            nodes: runs[0].nodes,
            edges: runs.iter().map(|r| r.edges as f64).sum::<f64>() / runs.len() as f64,
            cell,
            mean,
            std,
            per_run,
        });
        let weeks = runs[0].baseline.len();
        for w in 0..weeks {
            let vals: Vec<f64> = runs
                .iter()
                .filter_map(|r| {
                    percentage_reduction(
                        r.baseline.rows[w].total_toxicity,
                        r.cells[i].metrics.rows[w].total_toxicity,
                    )
                    .ok()
                })
                .collect();
            if vals.is_empty() {
                continue;
            }
            let (mean, std) = mean_std(&vals);
            table.by_week.push(WeekReductionRow {
                cell,
                week: runs[0].baseline.rows[w].week,
                mean,
                std,
            });
        }
    }
    Ok(table)
}

/// Runs every seed's baseline and cells. Seeds and cells run in parallel;
/// results do not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let inputs = load_inputs(spec)?;
    let cells = spec.cells();
    let runs = (0..spec.runs)
        .into_par_iter()
        .map(|k| run_seed(spec, &inputs, &cells, k))
        .collect::<Result<Vec<_>>>()?;
    let table = if cells.is_empty() {
        ReductionTable::default()
    } else {
        reductions(&runs, &cells)?
    };
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        runs,
        table,
        id_map: inputs.id_map,
    })
}

impl ReductionTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "nodes,edges,bots,strategy,mean_reduction_pct,std_reduction_pct,runs"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.1},{},{},{:.4},{:.4},{}",
                r.nodes,
                r.edges,
                r.cell.bots,
                r.cell.strategy,
                r.mean,
                r.std,
                r.per_run.len()
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_weekly_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bots,strategy,week,mean_reduction_pct,std_reduction_pct")?;
        for r in &self.by_week {
            writeln!(
                w,
                "{},{},{},{:.4},{:.4}",
                r.cell.bots, r.cell.strategy, r.week, r.mean, r.std
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn get(&self, cell: Cell) -> Option<&ReductionRow> {
        self.rows.iter().find(|r| r.cell == cell)
    }
}

/// Week-by-week average of several series of equal length.
fn average_series(series: &[&MetricsSeries]) -> MetricsSeries {
    let n = series.len() as f64;
    let rows = (0..series[0].len())
        .map(|i| WeekMetrics {
            week: series[0].rows[i].week,
            total_toxicity: series.iter().map(|s| s.rows[i].total_toxicity).sum::<f64>() / n,
            mean_toxicity: series.iter().map(|s| s.rows[i].mean_toxicity).sum::<f64>() / n,
            active_nodes: (series.iter().map(|s| s.rows[i].active_nodes).sum::<usize>() as f64 / n)
                .round() as usize,
        })
        .collect();
    MetricsSeries { rows }
}

impl ExperimentOutcome {
    /// Baseline and every cell averaged over runs, for plotting.
    pub fn averaged_series(&self) -> Vec<(String, MetricsSeries)> {
        let mut out = vec![(
            "baseline".to_string(),
            average_series(&self.runs.iter().map(|r| &r.baseline).collect::<Vec<_>>()),
        )];
        for (i, cell) in self.spec.cells().iter().enumerate() {
            let s: Vec<&MetricsSeries> = self.runs.iter().map(|r| &r.cells[i].metrics).collect();
            out.push((cell.label(), average_series(&s)));
        }
        out
    }

    /// Writes metrics, deployments, tables, the resolved config and the plot
    /// into `dir`, returning the paths written.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut create = |name: String| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            let f = File::create(&path)?;
            written.push(path);
            Ok(BufWriter::new(f))
        };

        for r in &self.runs {
            let mut runs: Vec<(String, &MetricsSeries)> = vec![("baseline".into(), &r.baseline)];
            runs.extend(r.cells.iter().map(|c| (c.cell.label(), &c.metrics)));
            let refs: Vec<(&str, &MetricsSeries)> =
                runs.iter().map(|(l, s)| (l.as_str(), *s)).collect();
            write_metrics_csv(create(format!("metrics_run{}.csv", r.run))?, &refs)?;
        }
        for (i, cell) in self.spec.cells().iter().enumerate() {
            let mut w = create(format!("deployment_{}.csv", cell.label()))?;
            writeln!(w, "run,bot_id,target_id,strategy,seed")?;
            for r in &self.runs {
                let c = &r.cells[i];
                for (j, t) in c.targets.iter().enumerate() {
                    let target = self
                        .id_map
                        .as_ref()
                        .and_then(|m| m.external(*t))
                        .unwrap_or(t.0 as u64);
                    writeln!(
                        w,
                        "{},{},{target},{},{}",
                        r.run,
                        r.nodes + j,
                        cell.strategy,
                        c.bot_seed
                    )?;
                }
            }
            w.flush()?;
        }
        if !self.table.rows.is_empty() {
            self.table
                .write_csv(create("reduction_table.csv".into())?)?;
            self.table
                .write_weekly_csv(create("reduction_by_week.csv".into())?)?;
        }
        let mut w = create("resolved_config.txt".into())?;
        w.write_all(self.spec.resolved().as_bytes())?;
        w.flush()?;
        emit_plot(&self.averaged_series(), create("plot.svg".into())?)?;
        Ok(written)
    }
}
