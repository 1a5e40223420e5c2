//! Does the shift depend on the category and on the incoming toxicity?

use std::collections::BTreeMap;
use std::fmt;

use super::iqr::CategoryAssignment;
use super::shifts::ShiftSample;
use super::stats::{kruskal_wallis, KruskalWallis};
use crate::behavior::UserCategory;
use crate::error::{Error, Result};

/// Unit of observation for the rank tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KwObservations {
    /// Every `(user, bucket)` shift.
    #[default]
    PerSample,
    /// One mean shift and one mean input per user.
    PerUser,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceReport {
    pub observations: KwObservations,
    /// Shifts grouped by category.
    pub by_category: KruskalWallis,
    /// Within each category, shifts grouped by input toxicity bin. Categories
    /// with fewer than two non-empty bins are left out.
    pub by_input: Vec<(UserCategory, KruskalWallis)>,
}

fn input_bin(x: f64, bins: usize) -> usize {
    ((x * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

pub fn shift_dependence(
    samples: &[ShiftSample],
    assignment: &CategoryAssignment,
    input_bins: usize,
    observations: KwObservations,
) -> Result<DependenceReport> {
    if input_bins == 0 {
        return Err(Error::invalid("input_bins must be positive"));
    }
    // (category, input, shift)
    let obs: Vec<(UserCategory, f64, f64)> = match observations {
        KwObservations::PerSample => assignment
            .categorized_shifts(samples)
            .into_iter()
            .map(|c| (c.category, c.input, c.shift))
            .collect(),
        KwObservations::PerUser => {
            let mut inputs: BTreeMap<_, (f64, usize)> = BTreeMap::new();
            for s in samples {
                let e = inputs.entry(s.user).or_default();
                e.0 += s.neigh_avg;
                e.1 += 1;
            }
            assignment
                .users
                .iter()
                .filter_map(|u| {
                    inputs
                        .get(&u.user)
                        .map(|&(sum, n)| (u.overall, sum / n as f64, u.mean_shift))
                })
                .collect()
        }
    };

    let mut by_cat: [Vec<f64>; 3] = Default::default();
    let mut by_bin: [BTreeMap<usize, Vec<f64>>; 3] = Default::default();
    for &(c, input, shift) in &obs {
        by_cat[c.index()].push(shift);
        by_bin[c.index()]
            .entry(input_bin(input, input_bins))
            .or_default()
            .push(shift);
    }
    let groups: Vec<&Vec<f64>> = by_cat.iter().filter(|g| !g.is_empty()).collect();
    if groups.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than two categories have shifts".into(),
        ));
    }
    let by_category = kruskal_wallis(&groups)?;
    let mut by_input = Vec::new();
    for c in UserCategory::ALL {
        let bins: Vec<&Vec<f64>> = by_bin[c.index()].values().collect();
        if bins.len() >= 2 {
            if let Ok(kw) = kruskal_wallis(&bins) {
                by_input.push((c, kw));
            }
        }
    }
    Ok(DependenceReport {
        observations,
        by_category,
        by_input,
    })
}

impl fmt::Display for DependenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = &self.by_category;
        writeln!(f, "Kruskal-Wallis ({:?} observations)", self.observations)?;
        writeln!(
            f,
            "  shift by category: H = {:.4}, df = {}, p = {:.3e}, n = {}",
            k.h, k.df, k.p_value, k.n
        )?;
        for (c, k) in &self.by_input {
            writeln!(
                f,
                "  {c} shift by input bin: H = {:.4}, df = {}, p = {:.3e}, n = {}",
                k.h, k.df, k.p_value, k.n
            )?;
        }
        Ok(())
    }
}
