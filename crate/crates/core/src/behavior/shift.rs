//! Input-conditioned shift distributions.
//!
//! For each category, `[0, 1]` is partitioned into input bins `[lo, hi)` (the
//! last one closed). Each input bin holds a histogram over shift bins: a shift
//! is sampled by picking a shift bin proportionally to its mass and then a
//! uniform point inside it. Zero-width shift bins are point masses.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;

use super::UserCategory;
use crate::error::{Error, Result};

const EDGE_TOL: f64 = 1e-9;

/// One line of the shift-distribution CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftRow {
    pub category: UserCategory,
    pub input_lo: f64,
    pub input_hi: f64,
    pub shift_lo: f64,
    pub shift_hi: f64,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftBin {
    pub lo: f64,
    pub hi: f64,
    /// Probability mass; the masses of an input bin sum to one.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputBin {
    pub lo: f64,
    pub hi: f64,
    shifts: Vec<ShiftBin>,
    cumulative: Vec<f64>,
}

impl InputBin {
    fn new(lo: f64, hi: f64, shifts: Vec<ShiftBin>) -> Self {
        let mut acc = 0.0;
        let cumulative = shifts
            .iter()
            .map(|b| {
                acc += b.mass;
                acc
            })
            .collect();
        InputBin {
            lo,
            hi,
            shifts,
            cumulative,
        }
    }

    pub fn shifts(&self) -> &[ShiftBin] {
        &self.shifts
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn expected_shift(&self) -> f64 {
        self.shifts
            .iter()
            .map(|b| b.mass * 0.5 * (b.lo + b.hi))
            .sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("validated non-empty");
        let u = rng.random::<f64>() * total;
        let i = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.shifts.len() - 1);
        let b = self.shifts[i];
        let t = rng.random::<f64>();
        if b.hi > b.lo {
            (b.lo + (b.hi - b.lo) * t).min(b.hi)
        } else {
            b.lo
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryShifts {
    bins: Vec<InputBin>,
}

impl CategoryShifts {
    pub fn bins(&self) -> &[InputBin] {
        &self.bins
    }

    /// Input bin containing `x`; bins are half-open except the last.
    pub fn locate(&self, x: f64) -> &InputBin {
        let i = self.bins.partition_point(|b| b.hi <= x);
        &self.bins[i.min(self.bins.len() - 1)]
    }

    /// Smallest and largest shift with non-zero mass.
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for b in self.bins.iter().flat_map(|ib| ib.shifts.iter()) {
            if b.mass > 0.0 {
                lo = lo.min(b.lo);
                hi = hi.max(b.hi);
            }
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDistribution {
    by_category: [Option<CategoryShifts>; 3],
}

fn check_input(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::invalid(format!("input toxicity {x} outside [0, 1]")))
    }
}

impl ShiftDistribution {
    /// Parametric stand-in for the empirical Twitter shift data.
    ///
    /// For an input bin with midpoint `I`, shifts are uniform on
    /// `[mu - 0.1, mu + 0.1]` clipped to the category's observed range:
    ///
    /// | category   | mu           | clip          |
    /// |------------|--------------|---------------|
    /// | amplifier  | `0.45(1-I)`  | `[0.0, 0.9]`  |
    /// | attenuator | `-0.5 I`     | `[-0.7, 0.2]` |
    /// | copycat    | `0`, ±0.05   | n/a           |
    ///
    /// `I + E[shift | I]` is non-decreasing in `I` for every category.
    pub fn synthetic(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid(
                "synthetic distribution needs at least one input bin",
            ));
        }
        let width = 1.0 / bins as f64;
        let mut rows = Vec::with_capacity(3 * bins);
        for k in 0..bins {
            let lo = k as f64 * width;
            let hi = if k + 1 == bins {
                1.0
            } else {
                (k + 1) as f64 * width
            };
            let mid = 0.5 * (lo + hi);
            let amp = 0.45 * (1.0 - mid);
            let atn = -0.5 * mid;
            let ranges = [
                (
                    UserCategory::Amplifier,
                    (amp - 0.1).max(0.0),
                    (amp + 0.1).min(0.9),
                ),
                (
                    UserCategory::Attenuator,
                    (atn - 0.1).max(-0.7),
                    (atn + 0.1).min(0.2),
                ),
                (UserCategory::Copycat, -0.05, 0.05),
            ];
            for (category, shift_lo, shift_hi) in ranges {
                rows.push(ShiftRow {
                    category,
                    input_lo: lo,
                    input_hi: hi,
                    shift_lo,
                    shift_hi,
                    density: 1.0,
                });
            }
        }
        Self::from_rows(rows)
    }

    /// Every category applies the constant shift `shift`.
    pub fn point_mass(shift: f64) -> Result<Self> {
        Self::from_rows(UserCategory::ALL.map(|category| ShiftRow {
            category,
            input_lo: 0.0,
            input_hi: 1.0,
            shift_lo: shift,
            shift_hi: shift,
            density: 1.0,
        }))
    }

    /// Validates and assembles rows. Rows sharing a category and input
    /// interval form one histogram; masses are renormalized when they sum
    /// to within 1% of one.
    pub fn from_rows<I: IntoIterator<Item = ShiftRow>>(rows: I) -> Result<Self> {
        // (category, input_lo bits, input_hi bits) -> shift bins
        let mut grouped: [BTreeMap<(u64, u64), Vec<ShiftBin>>; 3] = Default::default();
        for r in rows {
            let vals = [r.input_lo, r.input_hi, r.shift_lo, r.shift_hi, r.density];
            if vals.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(
                    "non-finite value in shift distribution".into(),
                ));
            }
            if r.density < 0.0 {
                return Err(Error::Config(format!(
                    "negative density {} for {} input [{}, {}]",
                    r.density, r.category, r.input_lo, r.input_hi
                )));
            }
            if !(0.0 <= r.input_lo && r.input_lo < r.input_hi && r.input_hi <= 1.0) {
                return Err(Error::Config(format!(
                    "input bin [{}, {}] must satisfy 0 <= lo < hi <= 1",
                    r.input_lo, r.input_hi
                )));
            }
            if !(-1.0 <= r.shift_lo && r.shift_lo <= r.shift_hi && r.shift_hi <= 1.0) {
                return Err(Error::Config(format!(
                    "shift bin [{}, {}] must satisfy -1 <= lo <= hi <= 1",
                    r.shift_lo, r.shift_hi
                )));
            }
            // non-negative floats sort like their bits; `+ 0.0` folds -0.0
            grouped[r.category.index()]
                .entry(((r.input_lo + 0.0).to_bits(), r.input_hi.to_bits()))
                .or_default()
                .push(ShiftBin {
                    lo: r.shift_lo,
                    hi: r.shift_hi,
                    mass: r.density,
                });
        }

        let mut by_category: [Option<CategoryShifts>; 3] = [None, None, None];
        for cat in UserCategory::ALL {
            let groups = std::mem::take(&mut grouped[cat.index()]);
            if groups.is_empty() {
                continue;
            }
            let mut bins = Vec::with_capacity(groups.len());
            for ((lo_bits, hi_bits), mut shifts) in groups {
                let (lo, hi) = (f64::from_bits(lo_bits), f64::from_bits(hi_bits));
                shifts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
                for w in shifts.windows(2) {
                    if w[1].lo < w[0].hi {
                        return Err(Error::Config(format!(
                            "overlapping shift bins [{}, {}] and [{}, {}] for {cat} input [{lo}, {hi}]",
                            w[0].lo, w[0].hi, w[1].lo, w[1].hi
                        )));
                    }
                }
                let sum: f64 = shifts.iter().map(|b| b.mass).sum();
                if !(0.99..=1.01).contains(&sum) {
                    return Err(Error::Config(format!(
                        "densities for {cat} input [{lo}, {hi}] sum to {sum}, expected 1"
                    )));
                }
                for b in &mut shifts {
                    b.mass /= sum;
                }
                bins.push(InputBin::new(lo, hi, shifts));
            }
            if bins[0].lo > EDGE_TOL {
                return Err(Error::Config(format!(
                    "gap in {cat} input coverage: [0, {}] uncovered",
                    bins[0].lo
                )));
            }
            for w in bins.windows(2) {
                if w[1].lo < w[0].hi - EDGE_TOL {
                    return Err(Error::Config(format!(
                        "overlapping input bins [{}, {}] and [{}, {}] for {cat}",
                        w[0].lo, w[0].hi, w[1].lo, w[1].hi
                    )));
                }
                if w[1].lo > w[0].hi + EDGE_TOL {
                    return Err(Error::Config(format!(
                        "gap in {cat} input coverage between {} and {}",
                        w[0].hi, w[1].lo
                    )));
                }
            }
            let last = bins.last().unwrap().hi;
            if last < 1.0 - EDGE_TOL {
                return Err(Error::Config(format!(
                    "gap in {cat} input coverage: [{last}, 1] uncovered"
                )));
            }
            by_category[cat.index()] = Some(CategoryShifts { bins });
        }
        if by_category.iter().all(Option::is_none) {
            return Err(Error::Config("shift distribution has no rows".into()));
        }
        Ok(ShiftDistribution { by_category })
    }

    pub fn category(&self, cat: UserCategory) -> Option<&CategoryShifts> {
        self.by_category[cat.index()].as_ref()
    }

    fn require(&self, cat: UserCategory) -> Result<&CategoryShifts> {
        self.category(cat)
            .ok_or_else(|| Error::Config(format!("no shift histogram for {cat}")))
    }

    /// Checks that every category in `cats` has a histogram.
    pub fn ensure_covers(&self, cats: impl IntoIterator<Item = UserCategory>) -> Result<()> {
        for c in cats {
            self.require(c)?;
        }
        Ok(())
    }

    pub fn sample_shift<R: Rng + ?Sized>(
        &self,
        cat: UserCategory,
        avg_in_tox: f64,
        rng: &mut R,
    ) -> Result<f64> {
        check_input(avg_in_tox)?;
        Ok(self.require(cat)?.locate(avg_in_tox).sample(rng))
    }

    pub fn expected_shift(&self, cat: UserCategory, avg_in_tox: f64) -> Result<f64> {
        check_input(avg_in_tox)?;
        Ok(self.require(cat)?.locate(avg_in_tox).expected_shift())
    }

    pub fn rows(&self) -> Vec<ShiftRow> {
        let mut out = Vec::new();
        for cat in UserCategory::ALL {
            let Some(cs) = self.category(cat) else {
                continue;
            };
            for ib in &cs.bins {
                for b in &ib.shifts {
                    out.push(ShiftRow {
                        category: cat,
                        input_lo: ib.lo,
                        input_hi: ib.hi,
                        shift_lo: b.lo,
                        shift_hi: b.hi,
                        density: b.mass,
                    });
                }
            }
        }
        out
    }

    /// Writes `category,input_lo,input_hi,shift_lo,shift_hi,density` rows
    /// using shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "category,input_lo,input_hi,shift_lo,shift_hi,density")?;
        for r in self.rows() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.category, r.input_lo, r.input_hi, r.shift_lo, r.shift_hi, r.density
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads the shift-distribution CSV. The header line is optional and `#`
/// lines are comments.
pub fn load_shift_distribution<R: Read>(source: R) -> Result<ShiftDistribution> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.get(0) == Some("category") {
            continue;
        }
        if rec.len() != 6 {
            return Err(Error::parse(
                line,
                format!("expected 6 fields, found {}", rec.len()),
            ));
        }
        let category: UserCategory = rec[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("unknown category {:?}", &rec[0])))?;
        let mut nums = [0.0f64; 5];
        for (k, slot) in nums.iter_mut().enumerate() {
            let raw = &rec[k + 1];
            // tolerate a unicode minus sign
            let cleaned = raw.replace('\u{2212}', "-");
            *slot = cleaned
                .parse()
                .map_err(|_| Error::parse(line, format!("bad number {raw:?}")))?;
        }
        rows.push(ShiftRow {
            category,
            input_lo: nums[0],
            input_hi: nums[1],
            shift_lo: nums[2],
            shift_hi: nums[3],
            density: nums[4],
        });
    }
    ShiftDistribution::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use UserCategory::*;

    fn load(s: &str) -> Result<ShiftDistribution> {
        load_shift_distribution(s.as_bytes())
    }

    #[test]
    fn single_copycat_row() {
        let d = load("copycat,0,1,-0.01,0.01,1.0\n").unwrap();
        let mut rng = StreamRng::new(1);
        for _ in 0..1000 {
            let s = d.sample_shift(Copycat, 0.3, &mut rng).unwrap();
            assert!((-0.01..=0.01).contains(&s));
        }
        // categories absent from the file are a configuration error at use
        assert!(matches!(
            d.sample_shift(Amplifier, 0.3, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unicode_minus_and_header_accepted() {
        let d = load("category,input_lo,input_hi,shift_lo,shift_hi,density\ncopycat,0,1,\u{2212}0.01,0.01,1.0\n")
            .unwrap();
        assert_eq!(d.category(Copycat).unwrap().support(), (-0.01, 0.01));
    }

    #[test]
    fn rejects_negative_density() {
        assert!(matches!(
            load("copycat,0,1,-0.1,0,1.1\ncopycat,0,1,0,0.1,-0.1\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rejects_gap() {
        let err = load("copycat,0,0.5,-0.1,0.1,1\n").unwrap_err();
        assert!(err.to_string().contains("gap"), "{err}");
        let err = load("copycat,0,0.4,-0.1,0.1,1\ncopycat,0.5,1,-0.1,0.1,1\n").unwrap_err();
        assert!(err.to_string().contains("gap"), "{err}");
    }

    #[test]
    fn rejects_overlap() {
        let err = load("copycat,0,0.6,-0.1,0.1,1\ncopycat,0.5,1,-0.1,0.1,1\n").unwrap_err();
        assert!(err.to_string().contains("overlapping"), "{err}");
        let err = load("copycat,0,1,-0.1,0.1,0.5\ncopycat,0,1,0.0,0.2,0.5\n").unwrap_err();
        assert!(err.to_string().contains("overlapping"), "{err}");
    }

    #[test]
    fn renormalizes_near_one_and_rejects_far() {
        let d = load("copycat,0,1,-0.1,0,0.5\ncopycat,0,1,0,0.1,0.505\n").unwrap();
        let masses: f64 = d.category(Copycat).unwrap().bins()[0]
            .shifts()
            .iter()
            .map(|b| b.mass)
            .sum();
        assert!((masses - 1.0).abs() < 1e-12);
        assert!(load("copycat,0,1,-0.1,0,0.5\ncopycat,0,1,0,0.1,0.3\n").is_err());
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(load("copycat,0,1,0\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            load("troll,0,1,0,0,1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            load("copycat,0,1,a,0,1\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn point_mass_is_exact() {
        let d = ShiftDistribution::point_mass(0.1).unwrap();
        let mut rng = StreamRng::new(4);
        for c in UserCategory::ALL {
            for x in [0.0, 0.5, 1.0] {
                assert_eq!(d.sample_shift(c, x, &mut rng).unwrap(), 0.1);
            }
        }
    }

    #[test]
    fn input_out_of_range_rejected() {
        let d = ShiftDistribution::synthetic(20).unwrap();
        let mut rng = StreamRng::new(4);
        assert!(d.sample_shift(Copycat, 1.01, &mut rng).is_err());
        assert!(d.sample_shift(Copycat, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn bin_location_is_right_closed_at_one() {
        let d = ShiftDistribution::synthetic(4).unwrap();
        let cs = d.category(Amplifier).unwrap();
        assert_eq!(cs.locate(0.0).lo, 0.0);
        assert_eq!(cs.locate(0.25).lo, 0.25);
        assert_eq!(cs.locate(0.2499).lo, 0.0);
        assert_eq!(cs.locate(1.0).lo, 0.75);
    }

    #[test]
    fn synthetic_supports_within_observed_ranges() {
        for bins in [1, 7, 20, 100] {
            let d = ShiftDistribution::synthetic(bins).unwrap();
            let (lo, hi) = d.category(Amplifier).unwrap().support();
            assert!(lo >= 0.0 && hi <= 0.9, "amp [{lo}, {hi}]");
            let (lo, hi) = d.category(Attenuator).unwrap().support();
            assert!(lo >= -0.7 && hi <= 0.2, "atn [{lo}, {hi}]");
            let (lo, hi) = d.category(Copycat).unwrap().support();
            assert!(lo >= -0.05 && hi <= 0.05 && lo >= -0.2 && hi <= 0.2);
        }
    }

    #[test]
    fn synthetic_expected_output_non_decreasing() {
        let d = ShiftDistribution::synthetic(20).unwrap();
        for c in UserCategory::ALL {
            let mut prev = f64::NEG_INFINITY;
            for b in d.category(c).unwrap().bins() {
                let out = b.midpoint() + b.expected_shift();
                assert!(out >= prev - 1e-12, "{c} at {}", b.midpoint());
                prev = out;
            }
        }
    }

    #[test]
    fn synthetic_closed_form_expectations() {
        // unclipped region: E[O|I] = 0.45 + 0.55 I, 0.5 I, I at bin midpoints
        let d = ShiftDistribution::synthetic(20).unwrap();
        for b in d.category(Amplifier).unwrap().bins() {
            let i = b.midpoint();
            if 0.45 * (1.0 - i) >= 0.1 {
                assert!((i + b.expected_shift() - (0.45 + 0.55 * i)).abs() < 1e-12);
            }
        }
        for b in d.category(Attenuator).unwrap().bins() {
            let i = b.midpoint();
            assert!((i + b.expected_shift() - 0.5 * i).abs() < 1e-12);
        }
        for b in d.category(Copycat).unwrap().bins() {
            assert!(b.expected_shift().abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = ShiftDistribution::synthetic(13).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(load_shift_distribution(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn sampling_follows_masses() {
        let d = load("copycat,0,1,-0.2,-0.1,0.25\ncopycat,0,1,0.1,0.2,0.75\n").unwrap();
        let mut rng = StreamRng::new(8);
        let n = 100_000;
        let mut pos = 0;
        for _ in 0..n {
            let s = d.sample_shift(Copycat, 0.5, &mut rng).unwrap();
            assert!((-0.2..=-0.1).contains(&s) || (0.1..=0.2).contains(&s));
            pos += (s > 0.0) as usize;
        }
        let f = pos as f64 / n as f64;
        assert!((f - 0.75).abs() < 3.0 * (0.75f64 * 0.25 / n as f64).sqrt() + 1e-3);
    }
}
