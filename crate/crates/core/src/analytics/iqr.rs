//! Box-plot outlier categorization of shifts.

use std::collections::BTreeMap;
use std::io::Write;

use super::export::CategorizedShift;
use super::shifts::ShiftSample;
use crate::behavior::UserCategory;
use crate::error::{Error, Result};
use crate::graph::{IdMap, NodeId};

pub const WHISKER_FACTOR: f64 = 1.5;

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_linear(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqrSplit {
    pub q1: f64,
    pub q3: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IqrSplit {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::with_factor(values, WHISKER_FACTOR)
    }

    pub fn with_factor(values: &[f64], factor: f64) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "IQR categorization needs at least 4 values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("NaN shift value"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q1 = quantile_linear(&sorted, 0.25);
        let q3 = quantile_linear(&sorted, 0.75);
        let iqr = q3 - q1;
        Ok(IqrSplit {
            q1,
            q3,
            lower: q1 - factor * iqr,
            upper: q3 + factor * iqr,
        })
    }

    pub fn classify(&self, x: f64) -> UserCategory {
        if x > self.upper {
            UserCategory::Amplifier
        } else if x < self.lower {
            UserCategory::Attenuator
        } else {
            UserCategory::Copycat
        }
    }
}

/// Upper outliers are amplifiers, lower outliers attenuators, the rest
/// copycats.
pub fn iqr_categorize(values: &[f64]) -> Result<(IqrSplit, Vec<UserCategory>)> {
    let split = IqrSplit::from_values(values)?;
    Ok((split, values.iter().map(|&x| split.classify(x)).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserCategories {
    pub user: NodeId,
    pub mean_shift: f64,
    /// Category of the user's mean shift among all users' mean shifts.
    pub overall: UserCategory,
    /// Category per bucket, from the split of that bucket's shifts.
    pub by_bucket: Vec<(u32, UserCategory)>,
}

impl UserCategories {
    pub fn sequence(&self) -> Vec<UserCategory> {
        self.by_bucket.iter().map(|&(_, c)| c).collect()
    }

    /// Whether the per-bucket category ever changes.
    pub fn changing(&self) -> bool {
        self.by_bucket.windows(2).any(|w| w[0].1 != w[1].1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryAssignment {
    /// Sorted by user.
    pub users: Vec<UserCategories>,
    pub overall_split: IqrSplit,
    pub bucket_splits: Vec<(u32, IqrSplit)>,
}

/// Categorizes each user overall (by mean shift) and per bucket. Buckets with
/// fewer than four samples get no categories.
pub fn categorize_users(samples: &[ShiftSample]) -> Result<CategoryAssignment> {
    let mut per_user: BTreeMap<NodeId, Vec<&ShiftSample>> = BTreeMap::new();
    let mut per_bucket: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for s in samples {
        per_user.entry(s.user).or_default().push(s);
        per_bucket.entry(s.bucket).or_default().push(s.shift);
    }
    let means: Vec<f64> = per_user
        .values()
        .map(|v| v.iter().map(|s| s.shift).sum::<f64>() / v.len() as f64)
        .collect();
    let overall_split = IqrSplit::from_values(&means)?;

    let bucket_splits: Vec<(u32, IqrSplit)> = per_bucket
        .iter()
        .filter_map(|(&b, v)| IqrSplit::from_values(v).ok().map(|s| (b, s)))
        .collect();
    let split_for: BTreeMap<u32, IqrSplit> = bucket_splits.iter().copied().collect();

    let users = per_user
        .into_iter()
        .zip(means)
        .map(|((user, mut rows), mean_shift)| {
            rows.sort_by_key(|s| s.bucket);
            let by_bucket = rows
                .iter()
                .filter_map(|s| {
                    split_for
                        .get(&s.bucket)
                        .map(|sp| (s.bucket, sp.classify(s.shift)))
                })
                .collect();
            UserCategories {
                user,
                mean_shift,
                overall: overall_split.classify(mean_shift),
                by_bucket,
            }
        })
        .collect();
    Ok(CategoryAssignment {
        users,
        overall_split,
        bucket_splits,
    })
}

impl CategoryAssignment {
    pub fn get(&self, user: NodeId) -> Option<&UserCategories> {
        self.users
            .binary_search_by_key(&user, |u| u.user)
            .ok()
            .map(|i| &self.users[i])
    }

    /// Category of `user` in `bucket`, falling back to the overall category.
    pub fn category_at(&self, user: NodeId, bucket: u32) -> Option<UserCategory> {
        let u = self.get(user)?;
        Some(
            u.by_bucket
                .iter()
                .find(|&&(b, _)| b == bucket)
                .map_or(u.overall, |&(_, c)| c),
        )
    }

    pub fn sequences(&self) -> Vec<Vec<UserCategory>> {
        self.users.iter().map(UserCategories::sequence).collect()
    }

    /// Labels every sample with its user's category in that bucket.
    pub fn categorized_shifts(&self, samples: &[ShiftSample]) -> Vec<CategorizedShift> {
        samples
            .iter()
            .filter_map(|s| {
                self.category_at(s.user, s.bucket)
                    .map(|category| CategorizedShift {
                        category,
                        input: s.neigh_avg,
                        shift: s.shift,
                    })
            })
            .collect()
    }

    pub fn count(&self, c: UserCategory) -> usize {
        self.users.iter().filter(|u| u.overall == c).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, ids: &IdMap) -> Result<()> {
        writeln!(w, "user_id,mean_shift,category,changing,sequence")?;
        for u in &self.users {
            let seq: Vec<String> = u
                .by_bucket
                .iter()
                .map(|(b, c)| format!("{b}:{c}"))
                .collect();
            writeln!(
                w,
                "{},{:.6},{},{},{}",
                ids.external(u.user).unwrap_or(u.user.0 as u64),
                u.mean_shift,
                u.overall,
                u.changing(),
                seq.join(" ")
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use UserCategory::*;

    fn repeat(parts: &[(f64, usize)]) -> Vec<f64> {
        parts
            .iter()
            .flat_map(|&(x, n)| std::iter::repeat_n(x, n))
            .collect()
    }

    #[test]
    fn quantile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_linear(&s, 0.0), 1.0);
        assert_eq!(quantile_linear(&s, 1.0), 4.0);
        assert!((quantile_linear(&s, 0.25) - 1.75).abs() < 1e-12);
        assert!((quantile_linear(&s, 0.75) - 3.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_iqr_flags_every_off_centre_value() {
        // {-0.01 x10, 0 x80, 0.01 x9, 0.9 x1}: Q1 = Q3 = 0 so both whiskers
        // sit at 0 and any non-zero value is an outlier
        let v = repeat(&[(-0.01, 10), (0.0, 80), (0.01, 9), (0.9, 1)]);
        let (split, cats) = iqr_categorize(&v).unwrap();
        assert_eq!(
            (split.q1, split.q3, split.lower, split.upper),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(cats.iter().filter(|&&c| c == Attenuator).count(), 10);
        assert_eq!(cats.iter().filter(|&&c| c == Amplifier).count(), 10);
        assert_eq!(cats.iter().filter(|&&c| c == Copycat).count(), 80);
    }

    #[test]
    fn single_high_outlier() {
        // Q1 = -0.01, Q3 = 0.01, whiskers at ±0.04
        let v = repeat(&[(-0.01, 30), (0.0, 40), (0.01, 29), (0.9, 1)]);
        let (split, cats) = iqr_categorize(&v).unwrap();
        assert!((split.q1 + 0.01).abs() < 1e-12, "{split:?}");
        assert!((split.q3 - 0.01).abs() < 1e-12);
        assert!((split.upper - 0.04).abs() < 1e-12);
        assert_eq!(cats[99], Amplifier);
        assert!(cats[..99].iter().all(|&c| c == Copycat));
    }

    #[test]
    fn all_equal_all_copycat() {
        let (split, cats) = iqr_categorize(&[0.2; 10]).unwrap();
        assert_eq!(split.lower, split.upper);
        assert!(cats.iter().all(|&c| c == Copycat));
    }

    #[test]
    fn mirrored_data_swaps_roles() {
        let v: Vec<f64> = (0..40)
            .map(|i| ((i * 37) % 23) as f64 * 0.01)
            .chain([1.5, -0.9])
            .collect();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let (_, a) = iqr_categorize(&v).unwrap();
        let (_, b) = iqr_categorize(&neg).unwrap();
        let swap = |c: UserCategory| match c {
            Amplifier => Attenuator,
            Attenuator => Amplifier,
            Copycat => Copycat,
        };
        assert!(a.iter().any(|&c| c != Copycat));
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(swap(*x), *y);
        }
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(
            iqr_categorize(&[1.0, 2.0, 3.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    fn sample(user: u32, bucket: u32, shift: f64) -> ShiftSample {
        ShiftSample {
            user: NodeId(user),
            bucket,
            self_avg: 0.0,
            neigh_avg: 0.0,
            shift,
        }
    }

    #[test]
    fn per_bucket_sequences() {
        let mut samples = Vec::new();
        for u in 0..20 {
            for b in 0..3 {
                samples.push(sample(u, b, 0.001 * (u % 5) as f64));
            }
        }
        // user 3 amplifies in bucket 2 only
        samples
            .iter_mut()
            .find(|s| s.user == NodeId(3) && s.bucket == 2)
            .unwrap()
            .shift = 0.8;
        let a = categorize_users(&samples).unwrap();
        assert_eq!(a.users.len(), 20);
        let u3 = a.get(NodeId(3)).unwrap();
        assert_eq!(u3.sequence(), vec![Copycat, Copycat, Amplifier]);
        assert!(u3.changing());
        assert!(!a.get(NodeId(4)).unwrap().changing());
        assert_eq!(a.category_at(NodeId(3), 2), Some(Amplifier));
        assert_eq!(a.category_at(NodeId(3), 9), Some(u3.overall));
        assert_eq!(a.category_at(NodeId(99), 0), None);
    }
}
