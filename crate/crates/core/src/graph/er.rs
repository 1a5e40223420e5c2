use rayon::prelude::*;

use super::DirectedGraph;
use crate::error::{Error, Result};
use crate::rng::{domain, StreamRng};

/// Directed Erdős–Rényi graph: every ordered pair `(u, v)`, `u != v`, is an
/// edge independently with probability `p`.
///
/// Each source row is drawn from its own stream using geometric skips over
/// the `n - 1` candidate targets, so the cost is proportional to the number of
/// edges and rows can be generated in parallel without affecting the result.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(Error::invalid("node count must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("node count exceeds u32 id space"));
    }

    let root = StreamRng::new(seed).derive(domain::GRAPH);
    let candidates = n as u64 - 1;
    let log_q = (1.0 - p).ln();

    let rows: Vec<Vec<u32>> = (0..n as u32)
        .into_par_iter()
        .map(|u| {
            if p == 0.0 || candidates == 0 {
                return Vec::new();
            }
            if p == 1.0 {
                return (0..n as u32).filter(|&v| v != u).collect();
            }
            let mut rng = root.derive(u as u64);
            let mut row = Vec::new();
            // index into the candidate list, which skips u itself
            let mut next: u64 = 0;
            loop {
                let skip = (rng.unit_open_low().ln() / log_q).floor();
                if !skip.is_finite() || skip >= (candidates - next) as f64 {
                    break;
                }
                next += skip as u64;
                let v = if next < u as u64 { next } else { next + 1 };
                row.push(v as u32);
                next += 1;
                if next >= candidates {
                    break;
                }
            }
            row
        })
        .collect();

    let total: usize = rows.iter().map(Vec::len).sum();
    let mut pairs = Vec::with_capacity(total);
    for (u, row) in rows.into_iter().enumerate() {
        pairs.extend(row.into_iter().map(|v| (u as u32, v)));
    }
    Ok(DirectedGraph::from_sorted_unique(n, &pairs))
}
