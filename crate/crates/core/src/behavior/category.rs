use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{domain, StreamRng};

/// How a user transforms incoming toxicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UserCategory {
    Amplifier,
    Attenuator,
    Copycat,
}

impl UserCategory {
    pub const ALL: [UserCategory; 3] = [
        UserCategory::Amplifier,
        UserCategory::Attenuator,
        UserCategory::Copycat,
    ];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            UserCategory::Amplifier => 0,
            UserCategory::Attenuator => 1,
            UserCategory::Copycat => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UserCategory::Amplifier => "amplifier",
            UserCategory::Attenuator => "attenuator",
            UserCategory::Copycat => "copycat",
        }
    }
}

impl fmt::Display for UserCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UserCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "amplifier" | "amp" => Ok(UserCategory::Amplifier),
            "attenuator" | "atn" => Ok(UserCategory::Attenuator),
            "copycat" | "cc" => Ok(UserCategory::Copycat),
            other => Err(Error::invalid(format!("unknown user category {other:?}"))),
        }
    }
}

/// Target population shares for the three categories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryFractions {
    pub amplifier: f64,
    pub attenuator: f64,
    pub copycat: f64,
}

impl Default for CategoryFractions {
    /// Shares observed on Twitter: 5.3% amplifiers, 1.4% attenuators.
    fn default() -> Self {
        CategoryFractions {
            amplifier: 0.053,
            attenuator: 0.014,
            copycat: 0.933,
        }
    }
}

impl CategoryFractions {
    pub fn new(amplifier: f64, attenuator: f64, copycat: f64) -> Result<Self> {
        let f = CategoryFractions {
            amplifier,
            attenuator,
            copycat,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.amplifier, self.attenuator, self.copycat];
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid("category fractions must be non-negative"));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "category fractions sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    /// Per-category counts for `n` users; rounding remainder goes to copycats.
    pub fn counts(&self, n: usize) -> Result<[usize; 3]> {
        self.validate()?;
        let amp = (n as f64 * self.amplifier).round() as usize;
        let atn = (n as f64 * self.attenuator).round() as usize;
        if amp + atn > n {
            return Err(Error::invalid("rounded category counts exceed population"));
        }
        Ok([amp, atn, n - amp - atn])
    }
}

/// Per-user category and changing flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryProfile {
    pub categories: Vec<UserCategory>,
    pub changing: Vec<bool>,
}

impl CategoryProfile {
    pub fn uniform(n: usize, category: UserCategory) -> Self {
        CategoryProfile {
            categories: vec![category; n],
            changing: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn count(&self, c: UserCategory) -> usize {
        self.categories.iter().filter(|&&x| x == c).count()
    }

    pub fn changing_count(&self) -> usize {
        self.changing.iter().filter(|&&x| x).count()
    }
}

/// Randomly assigns exact category counts and, independently, the set of
/// changing users.
pub fn assign_categories(
    node_count: usize,
    fractions: CategoryFractions,
    changing_fraction: f64,
    seed: u64,
) -> Result<CategoryProfile> {
    if !(0.0..=1.0).contains(&changing_fraction) {
        return Err(Error::invalid(format!(
            "changing fraction {changing_fraction} outside [0, 1]"
        )));
    }
    let [amp, atn, _] = fractions.counts(node_count)?;
    let root = StreamRng::new(seed);

    let mut order: Vec<usize> = (0..node_count).collect();
    order.shuffle(&mut root.derive(domain::CATEGORIES));
    let mut categories = vec![UserCategory::Copycat; node_count];
    for &v in &order[..amp] {
        categories[v] = UserCategory::Amplifier;
    }
    for &v in &order[amp..amp + atn] {
        categories[v] = UserCategory::Attenuator;
    }

    let n_changing = (node_count as f64 * changing_fraction).round() as usize;
    let mut changing = vec![false; node_count];
    let picks = rand::seq::index::sample(
        &mut root.derive(domain::CHANGING),
        node_count,
        n_changing.min(node_count),
    );
    for v in picks {
        changing[v] = true;
    }

    Ok(CategoryProfile {
        categories,
        changing,
    })
}
