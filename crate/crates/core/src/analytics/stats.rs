//! Rank statistics and the chi-square tail.

use crate::error::{Error, Result};

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Lower regularized incomplete gamma `P(a, x)` by its power series.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Upper regularized incomplete gamma `Q(a, x)` by continued fraction
/// (modified Lentz).
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (h.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

/// Survival function of the chi-square distribution with `df` degrees of
/// freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    regularized_gamma_q(0.5 * df, 0.5 * x).clamp(0.0, 1.0)
}

/// Mid-ranks (1-based) of `values` plus the size of every tie group.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share the average of ranks i+1..=j
        let rank = 0.5 * ((i + 1) + j) as f64;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KruskalWallis {
    /// Tie-corrected H statistic.
    pub h: f64,
    pub df: usize,
    pub p_value: f64,
    pub n: usize,
}

/// Kruskal–Wallis H test with mid-ranks and the standard tie correction.
/// When every observation is identical the statistic is reported as
/// `H = 0, p = 1`.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(Error::invalid("Kruskal-Wallis needs at least two groups"));
    }
    let mut pooled = Vec::new();
    let mut sizes = Vec::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        if g.is_empty() {
            return Err(Error::invalid(format!("group {i} is empty")));
        }
        if g.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid(format!("group {i} contains NaN")));
        }
        sizes.push(g.len());
        pooled.extend_from_slice(g);
    }
    let n = pooled.len();
    if n < 3 {
        return Err(Error::invalid(
            "Kruskal-Wallis needs at least three observations",
        ));
    }
    let df = groups.len() - 1;
    let (ranks, ties) = midranks(&pooled);

    let nf = n as f64;
    let mut start = 0;
    let mut sum = 0.0;
    for &size in &sizes {
        let r: f64 = ranks[start..start + size].iter().sum();
        sum += r * r / size as f64;
        start += size;
    }
    let h_raw = 12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0);
    let tie_sum: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let correction = 1.0 - tie_sum / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(KruskalWallis {
            h: 0.0,
            df,
            p_value: 1.0,
            n,
        });
    }
    let h = (h_raw / correction).max(0.0);
    Ok(KruskalWallis {
        h,
        df,
        p_value: chi_square_sf(h, df as f64),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn chi_square_two_df_is_exponential() {
        // with two degrees of freedom the survival is exp(-x/2)
        for x in [0.0, 0.1, 1.0, 7.2, 20.0, 60.0] {
            assert!(
                (chi_square_sf(x, 2.0) - (-x / 2.0f64).exp()).abs() < 1e-12,
                "{x}"
            );
        }
        assert!((chi_square_sf(7.2, 2.0) - 0.027_323_722_447_292_56).abs() < 1e-6);
    }

    #[test]
    fn chi_square_one_df_matches_erfc() {
        // one df: sf(x) = erfc(sqrt(x/2)); reference values from tables
        let cases = [
            (1.0, 0.317_310_507_862_914_1),
            (3.841_458_820_694_124, 0.05),
            (6.634_896_601_021_214, 0.01),
        ];
        for (x, p) in cases {
            assert!((chi_square_sf(x, 1.0) - p).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn midranks_with_ties() {
        let (r, t) = midranks(&[3.0, 1.0, 3.0, 2.0, 3.0]);
        assert_eq!(r, vec![4.0, 1.0, 4.0, 2.0, 4.0]);
        assert_eq!(t, vec![3]);
    }

    #[test]
    fn separated_groups() {
        let kw = kruskal_wallis(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]).unwrap();
        assert!((kw.h - 7.2).abs() < 1e-12);
        assert_eq!(kw.df, 2);
        assert!((kw.p_value - (-3.6f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn identical_groups() {
        let kw = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(kw.h.abs() < 1e-12);
        assert!((kw.p_value - 1.0).abs() < 1e-12);
        let all_same = kruskal_wallis(&[vec![0.5; 4], vec![0.5; 3]]).unwrap();
        assert_eq!((all_same.h, all_same.p_value), (0.0, 1.0));
    }

    #[test]
    fn errors() {
        assert!(kruskal_wallis(&[vec![1.0, 2.0]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0, 2.0], vec![]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0], vec![2.0]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0, f64::NAN], vec![2.0]]).is_err());
    }
}
