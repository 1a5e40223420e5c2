//! Writes the 1K-node synthetic fixture used by the integration tests:
//! `edges.txt` and `posts.csv` in the given directory.
//!
//!     cargo run --example make_fixture -- crates/core/tests/fixtures

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use toxspread_core::analytics::{write_posts, PostRecord};
use toxspread_core::behavior::{
    assign_categories, step_category, CategoryFractions, ShiftDistribution, TransitionMatrix,
};
use toxspread_core::graph::{generate_er, write_edge_list, NodeId};
use toxspread_core::rng::StreamRng;

const NODES: usize = 1000;
const BUCKETS: u32 = 8;

fn main() -> toxspread_core::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir)?;
    let g = generate_er(NODES, 0.005, 7)?;
    let mut profile = assign_categories(NODES, CategoryFractions::default(), 0.47, 8)?;
    let shifts = ShiftDistribution::synthetic(20)?;
    let m = TransitionMatrix::default();
    let root = StreamRng::new(9);

    let mut init = root.derive(1);
    let mut level: Vec<f64> = (0..NODES).map(|_| 0.1 + 0.4 * init.unit()).collect();
    let mut posts = Vec::new();
    for b in 0..BUCKETS {
        let mut rng = root.derive(2).derive(b as u64);
        let prev = level.clone();
        for v in g.nodes() {
            let ins = g.in_neighbors(v);
            if !ins.is_empty() {
                let avg = ins.iter().map(|u| prev[u.index()]).sum::<f64>() / ins.len() as f64;
                let s = shifts.sample_shift(profile.categories[v.index()], avg, &mut rng)?;
                level[v.index()] = (avg + s).clamp(0.0, 1.0);
            }
            let count = 1 + (rng.unit() * 4.0) as usize;
            for _ in 0..count {
                let t = (level[v.index()] + 0.05 * (rng.unit() - 0.5)).clamp(0.0, 1.0);
                posts.push(PostRecord {
                    user: v.0 as u64,
                    bucket: b,
                    toxicity: (t * 1e4).round() / 1e4,
                });
            }
        }
        for v in 0..NODES {
            let mut r = rng.derive(NodeId::from(v).0 as u64);
            profile.categories[v] =
                step_category(profile.categories[v], profile.changing[v], &m, &mut r);
        }
    }
    write_edge_list(&g, BufWriter::new(File::create(dir.join("edges.txt"))?))?;
    write_posts(BufWriter::new(File::create(dir.join("posts.csv"))?), &posts)?;
    println!("{} edges, {} posts", g.edge_count(), posts.len());
    Ok(())
}
