use std::io::{BufRead, Write};

use rand::Rng;

use super::UserCategory;
use crate::error::{Error, Result};

/// Off-diagonal category change probabilities. The probability of staying in
/// a category is one minus the row sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    p: [[f64; 3]; 3],
}

impl Default for TransitionMatrix {
    /// Change probabilities measured on Twitter.
    fn default() -> Self {
        use UserCategory::*;
        let mut m = TransitionMatrix { p: [[0.0; 3]; 3] };
        m.p[Copycat.index()][Attenuator.index()] = 0.1737;
        m.p[Copycat.index()][Amplifier.index()] = 0.2826;
        m.p[Attenuator.index()][Copycat.index()] = 0.1874;
        m.p[Attenuator.index()][Amplifier.index()] = 0.0347;
        m.p[Amplifier.index()][Copycat.index()] = 0.2903;
        m.p[Amplifier.index()][Attenuator.index()] = 0.0314;
        m
    }
}

impl TransitionMatrix {
    pub fn zero() -> Self {
        TransitionMatrix { p: [[0.0; 3]; 3] }
    }

    /// Builds a matrix from `(from, to, prob)` entries; unspecified entries
    /// are zero. Diagonal entries are rejected since they are implied.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (UserCategory, UserCategory, f64)>,
    {
        let mut m = Self::zero();
        for (from, to, prob) in entries {
            if from == to {
                return Err(Error::invalid(format!(
                    "stay probability for {from} is implied and cannot be set"
                )));
            }
            m.p[from.index()][to.index()] = prob;
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for from in UserCategory::ALL {
            let mut sum = 0.0;
            for to in UserCategory::ALL {
                if from == to {
                    continue;
                }
                let x = self.p[from.index()][to.index()];
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::invalid(format!(
                        "transition {from}->{to} probability {x} outside [0, 1]"
                    )));
                }
                sum += x;
            }
            if sum > 1.0 + 1e-12 {
                return Err(Error::invalid(format!(
                    "transitions out of {from} sum to {sum} > 1"
                )));
            }
        }
        Ok(())
    }

    /// `P(from -> to)`, including the implied diagonal.
    pub fn prob(&self, from: UserCategory, to: UserCategory) -> f64 {
        if from == to {
            self.stay(from)
        } else {
            self.p[from.index()][to.index()]
        }
    }

    pub fn stay(&self, from: UserCategory) -> f64 {
        let row = &self.p[from.index()];
        1.0 - (row.iter().sum::<f64>() - row[from.index()])
    }

    /// Next category given a uniform draw `u` in `[0, 1)`.
    pub fn next_category(&self, from: UserCategory, u: f64) -> UserCategory {
        let mut acc = 0.0;
        for to in UserCategory::ALL {
            if to == from {
                continue;
            }
            acc += self.p[from.index()][to.index()];
            if u < acc {
                return to;
            }
        }
        from
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = t.split(',').map(str::trim).collect();
            if fields == ["from", "to", "prob"] {
                continue;
            }
            let [from, to, prob] = fields[..] else {
                return Err(Error::parse(i + 1, "expected \"from,to,prob\""));
            };
            let prob: f64 = prob
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad probability {prob:?}")))?;
            entries.push((from.parse()?, to.parse()?, prob));
        }
        Self::from_entries(entries)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "from,to,prob")?;
        for from in UserCategory::ALL {
            for to in UserCategory::ALL {
                if from != to {
                    writeln!(w, "{from},{to},{}", self.p[from.index()][to.index()])?;
                }
            }
        }
        Ok(())
    }
}

/// One category update. Users that are not changing never move.
pub fn step_category<R: Rng + ?Sized>(
    current: UserCategory,
    changing: bool,
    m: &TransitionMatrix,
    rng: &mut R,
) -> UserCategory {
    if !changing {
        return current;
    }
    m.next_category(current, rng.random::<f64>())
}
