//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::{Duration, Instant};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use toxspread_core::analytics::{
    category_transitions, homophily, homophily_verdict, kruskal_wallis, TransitionMethod,
    DEFAULT_HOMOPHILY_MARGIN,
};
use toxspread_core::behavior::{
    assign_categories, load_shift_distribution, CategoryFractions, ShiftDistribution,
    TransitionMatrix, UserCategory,
};
use toxspread_core::engine::{SeedSpec, Simulation, SimulationConfig};
use toxspread_core::graph::{generate_er, load_edge_list, DirectedGraph};
use toxspread_core::harness::{
    analyze, run_experiment, AnalysisOptions, Cell, ExperimentOutcome, ExperimentSpec,
};
use toxspread_core::intervention::{bot_effect_on_average, deploy_bots, PlacementStrategy};
use toxspread_core::rng::StreamRng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn er_edge_counts() -> Outcome {
    let targets = [
        (25_000, 312_000.0),
        (50_000, 1_250_000.0),
        (75_000, 2_810_000.0),
        (100_000, 5_000_000.0),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    let mut slowest = Duration::ZERO;
    for (n, target) in targets {
        let start = Instant::now();
        let g = generate_er(n, 0.0005, n as u64).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        if n == 100_000 {
            slowest = took;
        }
        let rel = (g.edge_count() as f64 - target).abs() / target;
        ok &= rel <= 0.02;
        parts.push(format!(
            "{}K: {} ({:+.2}%)",
            n / 1000,
            g.edge_count(),
            100.0 * (g.edge_count() as f64 / target - 1.0)
        ));
    }
    ok &= slowest < Duration::from_secs(60);
    check(
        ok,
        format!(
            "{}; 100K in {:.1}s",
            parts.join(", "),
            slowest.as_secs_f64()
        ),
    )
}

fn desk_spec() -> ExperimentSpec {
    // n = 5000, p = 0.0005, bots 56/112/224/560, RP and LI, 5 runs, synthetic shifts
    let spec = ExperimentSpec::default();
    assert_eq!(spec.bots, vec![56, 112, 224, 560]);
    assert_eq!(spec.runs, 5);
    spec
}

fn cell_means(out: &ExperimentOutcome, strategy: PlacementStrategy) -> Vec<f64> {
    out.spec
        .bots
        .iter()
        .map(|&bots| out.table.get(Cell { strategy, bots }).unwrap().mean)
        .collect()
}

fn fmt(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.2}"))
        .collect::<Vec<_>>()
        .join(" < ")
}

fn monotone_trend(out: &ExperimentOutcome, took: Duration) -> Outcome {
    let mut ok = took < Duration::from_secs(300);
    let mut parts = Vec::new();
    for s in [
        PlacementStrategy::RandomPlacement,
        PlacementStrategy::LowestIndegree,
    ] {
        let m = cell_means(out, s);
        ok &= m.windows(2).all(|w| w[0] < w[1]) && m.iter().all(|&x| x > 0.0);
        parts.push(format!("{s}: {}%", fmt(&m)));
    }
    check(
        ok,
        format!(
            "{}; sweep took {:.1}s",
            parts.join("; "),
            took.as_secs_f64()
        ),
    )
}

fn li_vs_rp(out: &ExperimentOutcome) -> Outcome {
    let rp = cell_means(out, PlacementStrategy::RandomPlacement);
    let li = cell_means(out, PlacementStrategy::LowestIndegree);
    let ok = rp.iter().zip(&li).all(|(r, l)| *l >= r - 1.0) && li.last() > rp.last();
    let gaps: Vec<String> = rp
        .iter()
        .zip(&li)
        .map(|(r, l)| format!("{:+.2}", l - r))
        .collect();
    check(ok, format!("LI - RP per bot count: {}", gaps.join(", ")))
}

fn clamp_and_determinism(out: &ExperimentOutcome, spec: &ExperimentSpec) -> Outcome {
    let mut ok = true;
    for r in &out.runs {
        let series = std::iter::once(&r.baseline).chain(r.cells.iter().map(|c| &c.metrics));
        for s in series {
            for row in &s.rows {
                ok &= (0.0..=1.0).contains(&row.mean_toxicity)
                    && row.total_toxicity >= 0.0
                    && row.total_toxicity <= r.nodes as f64;
            }
        }
    }
    let recorded_ok = ok;

    // node-level check at every hop on a desk-scale graph, baseline and largest LI cell
    let g = generate_er(5000, 0.0005, 77).unwrap();
    let profile = assign_categories(5000, CategoryFractions::default(), 0.47, 78).unwrap();
    let dists = ShiftDistribution::synthetic(20).unwrap();
    let m = TransitionMatrix::default();
    let d = deploy_bots(&g, 560, PlacementStrategy::LowestIndegree, 79).unwrap();
    let config = spec.simulation_config(80);
    let mut hops = 0;
    for graph in [&g, &d.graph] {
        let mut sim = Simulation::new(graph, &profile, &dists, &m, config.clone()).unwrap();
        while !sim.is_finished() {
            sim.step().unwrap();
            hops += 1;
            ok &= sim
                .state()
                .toxicity()
                .iter()
                .all(|t| (0.0..=1.0).contains(t));
        }
    }

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    out.write_outputs(dirs[0].path()).unwrap();
    let again = run_experiment(spec).unwrap();
    let files = again.write_outputs(dirs[1].path()).unwrap();
    let mut identical = 0;
    for f in &files {
        let name = f.file_name().unwrap();
        if std::fs::read(dirs[0].path().join(name)).unwrap() == std::fs::read(f).unwrap() {
            identical += 1;
        }
    }
    ok &= identical == files.len();
    check(
        ok,
        format!(
            "recorded metrics in range: {recorded_ok}; {hops} hops checked node by node; {identical}/{} output files byte-identical on rerun",
            files.len()
        ),
    )
}

fn bot_effect_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut monotone = true;
    for i in 0..=10 {
        let avg = i as f64 / 10.0;
        for indeg in 0..=100usize {
            let direct = avg * indeg as f64 / (indeg as f64 + 1.0);
            worst = worst.max((bot_effect_on_average(avg, indeg) - direct).abs());
            if indeg < 100 {
                let (a, b) = (
                    bot_effect_on_average(avg, indeg),
                    bot_effect_on_average(avg, indeg + 1),
                );
                monotone &= if avg > 0.0 { a < b } else { a == b };
            }
        }
    }
    check(
        worst <= 1e-12 && monotone,
        format!("max deviation {worst:e}; monotone in indegree: {monotone}"),
    )
}

/// Reference H: ranks by counting, tie correction from value multiplicities.
fn reference_h(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let rank = |x: f64| {
        let below = all.iter().filter(|&&y| y < x).count() as f64;
        let equal = all.iter().filter(|&&y| y == x).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = g.iter().map(|&x| rank(x)).sum();
        sum += r * r / g.len() as f64;
    }
    let h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
    let mut mult: BTreeMap<u64, f64> = BTreeMap::new();
    for x in &all {
        *mult.entry(x.to_bits()).or_default() += 1.0;
    }
    let ties: f64 = mult.values().map(|t| t * t * t - t).sum();
    h / (1.0 - ties / (n * n * n - n))
}

fn kruskal_wallis_oracle() -> Outcome {
    let mut rng = StreamRng::new(2024);
    let mut worst_h = 0.0f64;
    let mut worst_p = 0.0f64;
    let mut fixtures: Vec<Vec<Vec<f64>>> = vec![vec![
        vec![1.0, 2.0, 3.0],
        vec![4.0, 5.0, 6.0],
        vec![7.0, 8.0, 9.0],
    ]];
    while fixtures.len() < 101 {
        let k = 2 + (rng.unit() * 4.0) as usize;
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let len = 1 + (rng.unit() * 8.0) as usize;
                // coarse values force ties
                (0..len)
                    .map(|_| (rng.unit() * 12.0).floor() / 4.0)
                    .collect()
            })
            .collect();
        let all: BTreeSet<u64> = groups.iter().flatten().map(|x| x.to_bits()).collect();
        if groups.iter().map(Vec::len).sum::<usize>() >= 3 && all.len() > 1 {
            fixtures.push(groups);
        }
    }
    let mut first_h = 0.0;
    for (i, groups) in fixtures.iter().enumerate() {
        let got = kruskal_wallis(groups).map_err(|e| e.to_string())?;
        let h = reference_h(groups);
        let p = 1.0 - ChiSquared::new((groups.len() - 1) as f64).unwrap().cdf(h);
        worst_h = worst_h.max((got.h - h).abs());
        worst_p = worst_p.max((got.p_value - p).abs());
        if i == 0 {
            first_h = got.h;
        }
    }
    let ok = worst_h <= 1e-9 && worst_p <= 1e-6 && (first_h - 7.2).abs() <= 1e-9;
    check(
        ok,
        format!("{} fixtures; H(1..9 split in three) = {first_h}; max |dH| {worst_h:.1e}, max |dp| {worst_p:.1e}", fixtures.len()),
    )
}

fn homophily_oracle() -> Outcome {
    let mut rng = StreamRng::new(99);
    let mut mismatches = 0;
    for case in 0..50 {
        let n = 2 + (rng.unit() * 199.0) as usize;
        let labels_n = 1 + (rng.unit() * 4.0) as usize;
        let m = (rng.unit() * 4.0 * n as f64) as usize;
        let mut raw = Vec::new();
        for _ in 0..m {
            let u = (rng.unit() * n as f64) as u32;
            let v = (rng.unit() * n as f64) as u32;
            if u != v {
                raw.push((u, v));
            }
        }
        let labels: Vec<Option<usize>> = (0..n)
            .map(|_| {
                if rng.unit() < 0.1 {
                    None
                } else {
                    Some((rng.unit() * labels_n as f64) as usize)
                }
            })
            .collect();
        let g = DirectedGraph::from_edges(n, raw.iter().copied()).unwrap().0;

        // oracle over the deduplicated raw edge list
        let edges: BTreeSet<(u32, u32)> = raw.into_iter().collect();
        let labeled: Vec<(usize, usize)> = edges
            .iter()
            .filter_map(|&(u, v)| Some((labels[u as usize]?, labels[v as usize]?)))
            .collect();
        let got = homophily(&g, &labels, DEFAULT_HOMOPHILY_MARGIN);
        if labeled.is_empty() {
            mismatches += usize::from(got.is_ok());
            continue;
        }
        let got = got.unwrap();
        let labeled_nodes = labels.iter().flatten().count() as f64;
        let present: BTreeSet<usize> = labels.iter().flatten().copied().collect();
        for l in present {
            let within = labeled.iter().filter(|&&(a, b)| a == l && b == l).count();
            let share = labels.iter().filter(|x| **x == Some(l)).count() as f64 / labeled_nodes;
            let x = within as f64 / labeled.len() as f64;
            let row = got.get(&l).unwrap();
            let same = row.x == x
                && row.expected == share * share
                && row.x_all_edges == within as f64 / edges.len() as f64
                && row.homophilous == (x > share * share + DEFAULT_HOMOPHILY_MARGIN);
            if !same {
                mismatches += 1;
                eprintln!("case {case} label {l}: {row:?} vs x {x}");
            }
        }
        mismatches += usize::from(got.labeled_edges != labeled.len());
    }
    let table_q = homophily_verdict(0.869270, 0.822492, DEFAULT_HOMOPHILY_MARGIN);
    let table_p = homophily_verdict(0.012234, 0.008665, DEFAULT_HOMOPHILY_MARGIN);
    check(
        mismatches == 0 && !table_q && !table_p,
        format!("50 graphs, {mismatches} mismatches; not changing (0.869270 vs 0.822492): homophily = {table_q}"),
    )
}

fn transition_round_trip() -> Outcome {
    // change probabilities, rows = from, order copycat, attenuator, amplifier
    let cats = [
        UserCategory::Copycat,
        UserCategory::Attenuator,
        UserCategory::Amplifier,
    ];
    let p = [
        [0.0, 0.1737, 0.2826],
        [0.1874, 0.0, 0.0347],
        [0.2903, 0.0314, 0.0],
    ];
    let mut rng = StreamRng::new(8);
    let users = 100_000;
    let buckets = 10;
    let mut seqs = Vec::with_capacity(users);
    let mut from_counts = [0usize; 3];
    for _ in 0..users {
        let mut c = (rng.unit() * 3.0) as usize;
        let mut seq = vec![cats[c]];
        for _ in 1..buckets {
            from_counts[c] += 1;
            let u = rng.unit();
            let next = if u < p[c][(c + 1) % 3] {
                (c + 1) % 3
            } else if u < p[c][(c + 1) % 3] + p[c][(c + 2) % 3] {
                (c + 2) % 3
            } else {
                c
            };
            c = next;
            seq.push(cats[c]);
        }
        seqs.push(seq);
    }
    let est = category_transitions(&seqs, TransitionMethod::Mixture).map_err(|e| e.to_string())?;
    let mut worst_z = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let sigma = (p[i][j] * (1.0 - p[i][j]) / from_counts[i] as f64).sqrt();
            let z = (est.matrix.prob(cats[i], cats[j]) - p[i][j]).abs() / sigma;
            worst_z = worst_z.max(z);
        }
    }
    check(
        worst_z <= 3.0,
        format!(
            "max |z| = {worst_z:.2} over six entries; estimated changing fraction {:.4} (observed non-constant {:.4})",
            est.changing_fraction, est.observed_changing_fraction
        ),
    )
}

fn pipeline_closure() -> Outcome {
    let start = Instant::now();
    let loaded = load_edge_list(BufReader::new(File::open(fixture("edges.txt")).unwrap()))
        .map_err(|e| e.to_string())?;
    let posts = toxspread_core::analytics::read_posts(File::open(fixture("posts.csv")).unwrap())
        .map_err(|e| e.to_string())?;
    let analysis = analyze(
        &loaded.graph,
        &loaded.id_map,
        &posts,
        &AnalysisOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().unwrap();
    analysis
        .write_outputs(dir.path(), &loaded.id_map)
        .map_err(|e| e.to_string())?;

    let path = dir.path().join("shift_distribution.csv");
    let back = load_shift_distribution(File::open(&path).unwrap()).map_err(|e| e.to_string())?;
    let (a, b) = (analysis.export.distribution.rows(), back.rows());
    let mut worst = if a.len() == b.len() {
        0.0f64
    } else {
        f64::INFINITY
    };
    for (x, y) in a.iter().zip(&b) {
        worst = worst.max((x.density - y.density).abs());
        if x.category != y.category || x.input_lo != y.input_lo || x.shift_lo != y.shift_lo {
            worst = f64::INFINITY;
        }
    }

    let mut spec = ExperimentSpec::default();
    spec.set("graph", fixture("edges.txt").to_str().unwrap())
        .unwrap();
    spec.set("shift_dist", path.to_str().unwrap()).unwrap();
    spec.set(
        "transitions",
        dir.path().join("transitions.csv").to_str().unwrap(),
    )
    .unwrap();
    spec.bots = vec![10, 50];
    spec.runs = 2;
    let out = run_experiment(&spec).map_err(|e| e.to_string())?;
    out.write_outputs(&dir.path().join("sim"))
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(
        worst <= 1e-9 && took < Duration::from_secs(30) && out.table.rows.len() == 4,
        format!(
            "{} distribution rows, max density error {worst:.1e}; analyze + simulate on {} nodes in {:.2}s",
            a.len(),
            loaded.graph.node_count(),
            took.as_secs_f64()
        ),
    )
}

fn zero_shift_fixpoint() -> Outcome {
    let n = 100u32;
    let mut rng = StreamRng::new(5);
    // a directed cycle makes the graph strongly connected
    let mut edges: Vec<(u32, u32)> = (0..n).map(|v| (v, (v + 1) % n)).collect();
    for _ in 0..300 {
        let (u, v) = (
            (rng.unit() * n as f64) as u32,
            (rng.unit() * n as f64) as u32,
        );
        if u != v {
            edges.push((u, v));
        }
    }
    let g = DirectedGraph::from_edges(n as usize, edges).unwrap().0;
    let dists = ShiftDistribution::point_mass(0.0).unwrap();
    let profile = assign_categories(n as usize, CategoryFractions::default(), 0.47, 6).unwrap();
    let config = SimulationConfig {
        kiter: 32,
        seeds: SeedSpec::Fraction(1.0),
        initial_toxicity: (0.8, 0.8),
        ..SimulationConfig::default()
    };
    let metrics = Simulation::new(&g, &profile, &dists, &TransitionMatrix::default(), config)
        .and_then(|s| s.finish())
        .map_err(|e| e.to_string())?
        .0;
    let worst = metrics
        .rows
        .iter()
        .map(|r| (r.total_toxicity - 80.0).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 1e-9 && metrics.len() == 8,
        format!("{} weeks, max |total - 80| = {worst:.1e}", metrics.len()),
    )
}

fn main() {
    let spec = desk_spec();
    let start = Instant::now();
    let sweep = run_experiment(&spec);
    let took = start.elapsed();

    let results: Vec<(&str, Outcome)> = vec![
        ("ER edge counts", er_edge_counts()),
        (
            "monotone intervention trend",
            sweep
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|o| monotone_trend(o, took)),
        ),
        (
            "LI vs RP",
            sweep.as_ref().map_err(|e| e.to_string()).and_then(li_vs_rp),
        ),
        (
            "clamp and determinism",
            sweep
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|o| clamp_and_determinism(o, &spec)),
        ),
        ("bot effect oracle", bot_effect_oracle()),
        ("Kruskal-Wallis oracle", kruskal_wallis_oracle()),
        ("homophily brute force", homophily_oracle()),
        ("transition round trip", transition_round_trip()),
        ("pipeline closure", pipeline_closure()),
        ("zero-shift fixpoint", zero_shift_fixpoint()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
