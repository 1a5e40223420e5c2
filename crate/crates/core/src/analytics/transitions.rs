//! Category transition probabilities from per-bucket category sequences.

use std::collections::BTreeMap;

use crate::behavior::{TransitionMatrix, UserCategory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransitionMethod {
    /// Counts transitions of users whose sequence is not constant. Biased
    /// towards change, since changing users can stay put for every bucket.
    ChangingOnly,
    /// Mixture of changing users (Markov chain) and fixed users (never
    /// change), fit by expectation maximization. A constant sequence counts
    /// as changing with its posterior probability.
    #[default]
    Mixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEstimate {
    pub matrix: TransitionMatrix,
    /// Expected transition counts, `counts[from][to]` by category index.
    pub counts: [[f64; 3]; 3],
    /// Users with at least two buckets.
    pub users: usize,
    /// Users whose sequence is not constant.
    pub observed_changing: usize,
    /// `observed_changing / users`.
    pub observed_changing_fraction: f64,
    /// Estimated share of changing users; equals the observed fraction for
    /// [`TransitionMethod::ChangingOnly`].
    pub changing_fraction: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 200_000;
const TOL: f64 = 1e-13;

fn matrix_from_counts(counts: &[[f64; 3]; 3]) -> Result<TransitionMatrix> {
    let mut entries = Vec::new();
    for from in UserCategory::ALL {
        let total: f64 = counts[from.index()].iter().sum();
        if total <= 0.0 {
            continue;
        }
        for to in UserCategory::ALL {
            if to != from {
                entries.push((from, to, counts[from.index()][to.index()] / total));
            }
        }
    }
    TransitionMatrix::from_entries(entries)
}

pub fn category_transitions(
    sequences: &[Vec<UserCategory>],
    method: TransitionMethod,
) -> Result<TransitionEstimate> {
    let mut moving = [[0.0f64; 3]; 3];
    // (category, length) -> number of constant sequences
    let mut constant: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let (mut users, mut changing) = (0, 0);
    for seq in sequences.iter().filter(|s| s.len() >= 2) {
        users += 1;
        if seq.windows(2).all(|w| w[0] == w[1]) {
            *constant.entry((seq[0].index(), seq.len())).or_default() += 1;
            continue;
        }
        changing += 1;
        for w in seq.windows(2) {
            moving[w[0].index()][w[1].index()] += 1.0;
        }
    }
    if users == 0 {
        return Err(Error::InsufficientData(
            "no user has two or more buckets".into(),
        ));
    }
    let observed = changing as f64 / users as f64;

    if method == TransitionMethod::ChangingOnly || changing == 0 {
        return Ok(TransitionEstimate {
            matrix: matrix_from_counts(&moving)?,
            counts: moving,
            users,
            observed_changing: changing,
            observed_changing_fraction: observed,
            changing_fraction: observed,
            iterations: 0,
        });
    }

    let mut counts = moving;
    let mut phi = observed;
    let mut iterations = 0;
    let mut stay = [0.0; 3];
    let refresh_stay = |counts: &[[f64; 3]; 3], stay: &mut [f64; 3]| {
        for c in 0..3 {
            let total: f64 = counts[c].iter().sum();
            stay[c] = if total > 0.0 {
                counts[c][c] / total
            } else {
                1.0
            };
        }
    };
    // start from the all-changing fit
    for (&(c, len), &k) in &constant {
        counts[c][c] += (k * (len - 1)) as f64;
    }
    refresh_stay(&counts, &mut stay);
    while iterations < MAX_ITER {
        iterations += 1;
        let mut next = moving;
        let mut expected_changing = changing as f64;
        for (&(c, len), &k) in &constant {
            let a = phi * stay[c].powi(len as i32 - 1);
            let r = if a > 0.0 { a / (a + 1.0 - phi) } else { 0.0 };
            expected_changing += r * k as f64;
            next[c][c] += r * (k * (len - 1)) as f64;
        }
        let next_phi = expected_changing / users as f64;
        let delta = (next_phi - phi).abs().max(
            (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| (next[i][j] - counts[i][j]).abs() / users as f64)
                .fold(0.0, f64::max),
        );
        counts = next;
        phi = next_phi;
        refresh_stay(&counts, &mut stay);
        if delta < TOL {
            break;
        }
    }
    Ok(TransitionEstimate {
        matrix: matrix_from_counts(&counts)?,
        counts,
        users,
        observed_changing: changing,
        observed_changing_fraction: observed,
        changing_fraction: phi,
        iterations,
    })
}
