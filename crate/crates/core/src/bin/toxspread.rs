use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use toxspread_core::analytics::{read_posts, KwObservations, NeighborAveraging, TransitionMethod};
use toxspread_core::engine::read_metrics_csv;
use toxspread_core::graph::{generate_er, load_edge_list, write_edge_list};
use toxspread_core::harness::{
    analyze, emit_plot, run_experiment, AnalysisOptions, ExperimentSpec,
};
use toxspread_core::Result;

#[derive(Parser)]
#[command(
    name = "toxspread",
    version,
    about = "Toxicity spread and peace-bot experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an Erdős–Rényi graph as an edge list.
    Generate {
        #[arg(long)]
        er_n: usize,
        #[arg(long)]
        er_p: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output edge list (default <out-dir>/graph.txt).
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run one seed: the baseline and, with --bots, each strategy.
    Simulate(SpecArgs),
    /// Sweep bot counts and strategies over several runs.
    Experiment(SpecArgs),
    /// Shifts, categories, homophily and transitions from scored posts.
    Analyze {
        #[arg(long)]
        graph: PathBuf,
        /// CSV with header user_id,bucket,toxicity.
        #[arg(long)]
        posts: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        input_bins: usize,
        #[arg(long, default_value_t = 40)]
        shift_bins: usize,
        /// Homophily verdict margin.
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
        #[arg(long, value_enum, default_value_t = Averaging::User)]
        averaging: Averaging,
        /// Rank tests on per-user means instead of per-sample shifts.
        #[arg(long)]
        kw_per_user: bool,
        /// Estimate transitions from changing users only, without the
        /// fixed-user mixture correction.
        #[arg(long)]
        naive_transitions: bool,
    },
    /// Plot mean toxicity from metrics CSV files.
    Plot {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Averaging {
    User,
    Post,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Rp,
    Li,
}

#[derive(Args)]
struct SpecArgs {
    /// key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge list to use instead of an ER graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    er_n: Option<usize>,
    #[arg(long)]
    er_p: Option<f64>,
    #[arg(long)]
    weeks: Option<usize>,
    #[arg(long)]
    hops_per_week: Option<usize>,
    /// Comma-separated bot counts.
    #[arg(long)]
    bots: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',')]
    strategy: Vec<Strategy>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// "synthetic" or a shift-distribution CSV.
    #[arg(long)]
    shift_dist: Option<String>,
    /// Transition file (from,to,prob rows).
    #[arg(long)]
    transitions: Option<PathBuf>,
    /// Reuse one graph for every run.
    #[arg(long)]
    fixed_graph: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl SpecArgs {
    fn resolve(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        let mut set = |k: &str, v: Option<String>| -> Result<()> {
            match v {
                Some(v) => spec.set(k, &v),
                None => Ok(()),
            }
        };
        set(
            "graph",
            self.graph.as_ref().map(|p| p.display().to_string()),
        )?;
        set("er_n", self.er_n.map(|x| x.to_string()))?;
        set("er_p", self.er_p.map(|x| x.to_string()))?;
        set("weeks", self.weeks.map(|x| x.to_string()))?;
        set("hops_per_week", self.hops_per_week.map(|x| x.to_string()))?;
        set("bots", self.bots.clone())?;
        set("runs", self.runs.map(|x| x.to_string()))?;
        set("seed", self.seed.map(|x| x.to_string()))?;
        set("shift_dist", self.shift_dist.clone())?;
        set(
            "transitions",
            self.transitions.as_ref().map(|p| p.display().to_string()),
        )?;
        if !self.strategy.is_empty() {
            let names: Vec<&str> = self
                .strategy
                .iter()
                .map(|s| match s {
                    Strategy::Rp => "rp",
                    Strategy::Li => "li",
                })
                .collect();
            spec.set("strategy", &names.join(","))?;
        }
        if self.fixed_graph {
            spec.fixed_graph = true;
        }
        Ok(spec)
    }
}

fn sweep(args: &SpecArgs, single: bool) -> Result<()> {
    let mut spec = args.resolve()?;
    if single {
        spec.runs = 1;
        if args.bots.is_none() {
            spec.bots.clear();
        }
    }
    let start = Instant::now();
    let out = run_experiment(&spec)?;
    out.write_outputs(&args.out_dir)?;
    for r in &out.runs {
        println!(
            "run {}: {} nodes, {} edges, baseline final total {:.4}",
            r.run,
            r.nodes,
            r.edges,
            r.baseline.final_total().unwrap_or(0.0)
        );
    }
    if !out.table.rows.is_empty() {
        println!(
            "{:>8} {:>8} {:>10} {:>10}",
            "bots", "strategy", "mean %", "std"
        );
        for row in &out.table.rows {
            println!(
                "{:>8} {:>8} {:>10.3} {:>10.3}",
                row.cell.bots, row.cell.strategy, row.mean, row.std
            );
        }
    }
    eprintln!(
        "wrote results to {} in {:.1}s",
        args.out_dir.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn open_graph(path: &Path) -> Result<toxspread_core::graph::LoadedGraph> {
    let loaded = load_edge_list(BufReader::new(File::open(path)?))?;
    if loaded.duplicates_dropped > 0 {
        eprintln!("dropped {} duplicate edges", loaded.duplicates_dropped);
    }
    Ok(loaded)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            er_n,
            er_p,
            seed,
            graph,
            out_dir,
        } => {
            let start = Instant::now();
            let g = generate_er(er_n, er_p, seed)?;
            let path = graph.unwrap_or_else(|| out_dir.join("graph.txt"));
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            write_edge_list(&g, BufWriter::new(File::create(&path)?))?;
            println!(
                "{} nodes, {} edges -> {} ({:.1}s)",
                g.node_count(),
                g.edge_count(),
                path.display(),
                start.elapsed().as_secs_f64()
            );
        }
        Command::Simulate(args) => sweep(&args, true)?,
        Command::Experiment(args) => sweep(&args, false)?,
        Command::Analyze {
            graph,
            posts,
            out_dir,
            input_bins,
            shift_bins,
            margin,
            averaging,
            kw_per_user,
            naive_transitions,
        } => {
            let loaded = open_graph(&graph)?;
            let posts = read_posts(BufReader::new(File::open(&posts)?))?;
            let opts = AnalysisOptions {
                averaging: match averaging {
                    Averaging::User => NeighborAveraging::UserWeighted,
                    Averaging::Post => NeighborAveraging::PostWeighted,
                },
                input_bins,
                shift_bins,
                margin,
                observations: if kw_per_user {
                    KwObservations::PerUser
                } else {
                    KwObservations::PerSample
                },
                transition_method: if naive_transitions {
                    TransitionMethod::ChangingOnly
                } else {
                    TransitionMethod::Mixture
                },
            };
            let out = analyze(&loaded.graph, &loaded.id_map, &posts, &opts)?;
            out.write_outputs(&out_dir, &loaded.id_map)?;
            print!("{}", out.summary());
        }
        Command::Plot { metrics, out_dir } => {
            let mut series = Vec::new();
            for path in &metrics {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                for (id, s) in read_metrics_csv(File::open(path)?)? {
                    let label = if metrics.len() > 1 {
                        format!("{stem}:{id}")
                    } else {
                        id
                    };
                    series.push((label, s));
                }
            }
            std::fs::create_dir_all(&out_dir)?;
            let path = out_dir.join("plot.svg");
            emit_plot(&series, BufWriter::new(File::create(&path)?))?;
            println!("{} series -> {}", series.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
