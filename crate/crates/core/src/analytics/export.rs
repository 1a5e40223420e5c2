//! Empirical shift histograms in the simulator's distribution format.

use std::io::Write;

use crate::behavior::{ShiftDistribution, ShiftRow, UserCategory};
use crate::error::{Error, Result};

/// A shift observed at a given input toxicity, labeled with the category of
/// the user in that bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategorizedShift {
    pub category: UserCategory,
    pub input: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftExport {
    pub distribution: ShiftDistribution,
    /// Input bins without samples, given a point mass at shift 0.
    pub filled: Vec<(UserCategory, f64, f64)>,
}

fn bin_index(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let k = ((x - lo) / (hi - lo) * bins as f64).floor();
    (k.max(0.0) as usize).min(bins - 1)
}

fn edge(lo: f64, hi: f64, bins: usize, k: usize) -> f64 {
    if k == bins {
        hi
    } else {
        lo + (hi - lo) * k as f64 / bins as f64
    }
}

/// Bins inputs on `[0, 1]` and shifts on `[-1, 1]`, normalizing each input
/// bin to unit mass. Only non-empty shift bins are emitted.
pub fn export_shift_distribution(
    samples: &[CategorizedShift],
    input_bins: usize,
    shift_bins: usize,
) -> Result<ShiftExport> {
    if input_bins == 0 || shift_bins == 0 {
        return Err(Error::invalid("bin counts must be positive"));
    }
    let mut counts = vec![vec![vec![0usize; shift_bins]; input_bins]; 3];
    for s in samples {
        if !(0.0..=1.0).contains(&s.input) || !(-1.0..=1.0).contains(&s.shift) {
            return Err(Error::invalid(format!(
                "sample (input {}, shift {}) out of range",
                s.input, s.shift
            )));
        }
        let i = bin_index(s.input, 0.0, 1.0, input_bins);
        let j = bin_index(s.shift, -1.0, 1.0, shift_bins);
        counts[s.category.index()][i][j] += 1;
    }

    let mut rows = Vec::new();
    let mut filled = Vec::new();
    for cat in UserCategory::ALL {
        let per_input = &counts[cat.index()];
        if per_input.iter().flatten().all(|&c| c == 0) {
            return Err(Error::InsufficientData(format!(
                "no shift samples for {cat}"
            )));
        }
        for (i, hist) in per_input.iter().enumerate() {
            let (input_lo, input_hi) = (
                edge(0.0, 1.0, input_bins, i),
                edge(0.0, 1.0, input_bins, i + 1),
            );
            let total: usize = hist.iter().sum();
            if total == 0 {
                filled.push((cat, input_lo, input_hi));
                rows.push(ShiftRow {
                    category: cat,
                    input_lo,
                    input_hi,
                    shift_lo: 0.0,
                    shift_hi: 0.0,
                    density: 1.0,
                });
                continue;
            }
            for (j, &c) in hist.iter().enumerate().filter(|(_, &c)| c > 0) {
                rows.push(ShiftRow {
                    category: cat,
                    input_lo,
                    input_hi,
                    shift_lo: edge(-1.0, 1.0, shift_bins, j),
                    shift_hi: edge(-1.0, 1.0, shift_bins, j + 1),
                    density: c as f64 / total as f64,
                });
            }
        }
    }
    Ok(ShiftExport {
        distribution: ShiftDistribution::from_rows(rows)?,
        filled,
    })
}

impl ShiftExport {
    /// Distribution CSV preceded by one `# filled` comment per filled bin.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (cat, lo, hi) in &self.filled {
            writeln!(w, "# filled {cat} {lo} {hi}")?;
        }
        self.distribution.write_csv(w)
    }
}
