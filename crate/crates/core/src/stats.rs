//! Shared statistical kernels: Yates-corrected chi-squared for 2x2 tables,
//! distribution tails, and summary statistics.

use crate::error::{Error, Result};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

/// Significance threshold on |Z| corresponding to a one-sided p of 0.001.
pub const Z_THRESHOLD: f64 = 3.09;

/// Rejection level used by every significance test in this crate.
pub const P_REJECT: f64 = 0.001;

/// A 2x2 contingency table of nonnegative counts.
///
/// `o[i][j]` is the number of items falling into category `i` of the first
/// variable and category `j` of the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContingencyTable2x2 {
    pub o: [[u64; 2]; 2],
}

impl ContingencyTable2x2 {
    pub fn new(o: [[u64; 2]; 2]) -> Self {
        Self { o }
    }

    /// Grand total N.
    pub fn n(&self) -> u64 {
        self.o.iter().flatten().sum()
    }

    fn row_sums(&self) -> [u64; 2] {
        [self.o[0][0] + self.o[0][1], self.o[1][0] + self.o[1][1]]
    }

    fn col_sums(&self) -> [u64; 2] {
        [self.o[0][0] + self.o[1][0], self.o[0][1] + self.o[1][1]]
    }
}

/// Result of a Yates-corrected chi-squared independence test.
#[derive(Debug, Clone, Copy)]
pub struct Chi2Result {
    pub chi2: f64,
    pub p: f64,
    pub reject: bool,
}

/// Yates-corrected chi-squared test of independence on a 2x2 table.
///
/// The statistic is `sum (|O_ij - E_ij| - 0.5)^2 / E_ij` with expectations
/// from the marginal products `E_ij = N * p_i * q_j`. The continuity
/// correction is applied unconditionally, so the statistic is positive even
/// when O = E exactly. The p-value is the upper chi-squared tail with one
/// degree of freedom; the null is rejected at p < 0.001.
pub fn yates_chi2(table: &ContingencyTable2x2) -> Result<Chi2Result> {
    let rows = table.row_sums();
    let cols = table.col_sums();
    if rows.contains(&0) || cols.contains(&0) {
        return Err(Error::InvalidInput(
            "chi-squared table has a zero marginal".into(),
        ));
    }
    let n = table.n() as f64;
    let mut chi2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = n * (rows[i] as f64 / n) * (cols[j] as f64 / n);
            let d = (table.o[i][j] as f64 - e).abs() - 0.5;
            chi2 += d * d / e;
        }
    }
    let p = chi2_sf_1df(chi2);
    Ok(Chi2Result { chi2, p, reject: p < P_REJECT })
}

/// Upper tail of the chi-squared distribution with 1 degree of freedom,
/// via the regularized upper incomplete gamma function Q(1/2, x/2).
pub fn chi2_sf_1df(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(0.5, x / 2.0)
    }
}

/// Standard normal upper-tail probability P(Z > z).
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
    2.0 * dist.sf(t.abs())
}

/// Mean plus both standard-deviation conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Divide-by-n convention.
    pub population_std: f64,
    /// Divide-by-(n-1) convention; `None` for fewer than two values.
    pub sample_std: Option<f64>,
}

/// Mean and standard deviation of a sample; errors on empty input.
pub fn mean_std(xs: &[f64]) -> Result<MeanStd> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("mean_std of empty list".into()));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let population_std = (ss / n).sqrt();
    let sample_std = if xs.len() >= 2 { Some((ss / (n - 1.0)).sqrt()) } else { None };
    Ok(MeanStd { mean, population_std, sample_std })
}

/// Two-sample Kolmogorov-Smirnov distance between empirical distributions of
/// nonnegative integer values (e.g. in-degree sequences).
pub fn ks_distance_counts(a: &[u64], b: &[u64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { 1.0 };
    }
    let max = a.iter().chain(b.iter()).copied().max().unwrap_or(0) as usize;
    let mut ha = vec![0u64; max + 1];
    let mut hb = vec![0u64; max + 1];
    for &x in a {
        ha[x as usize] += 1;
    }
    for &x in b {
        hb[x as usize] += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ca, mut cb, mut d) = (0.0, 0.0, 0.0f64);
    for i in 0..=max {
        ca += ha[i] as f64 / na;
        cb += hb[i] as f64 / nb;
        d = d.max((ca - cb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn yates_hand_examples() {
        // O = E: each cell contributes 0.5^2 / 10.
        let r = yates_chi2(&ContingencyTable2x2::new([[10, 10], [10, 10]])).unwrap();
        assert_abs_diff_eq!(r.chi2, 0.1, epsilon = 1e-12);
        // Marginals 30/30, E = 15, |O-E|-0.5 = 4.5 in every cell.
        let r = yates_chi2(&ContingencyTable2x2::new([[20, 10], [10, 20]])).unwrap();
        assert_abs_diff_eq!(r.chi2, 5.4, epsilon = 1e-12);
        assert!(!r.reject, "chi2=5.4 has p ~ 0.02, above the 0.001 level");
    }

    #[test]
    fn yates_extreme_dependence_rejects() {
        let r = yates_chi2(&ContingencyTable2x2::new([[1000, 0], [0, 1000]])).unwrap();
        assert!(r.p < 1e-3);
        assert!(r.reject);
    }

    #[test]
    fn yates_zero_marginal_is_error() {
        assert!(yates_chi2(&ContingencyTable2x2::new([[0, 0], [5, 5]])).is_err());
        assert!(yates_chi2(&ContingencyTable2x2::new([[0, 5], [0, 5]])).is_err());
    }

    #[test]
    fn yates_symmetries() {
        // Invariant under transpose and row/column swaps (all 8 symmetries).
        let o = [[17u64, 5], [8, 30]];
        let base = yates_chi2(&ContingencyTable2x2::new(o)).unwrap().chi2;
        let variants: [[[u64; 2]; 2]; 8] = [
            o,
            [[o[1][0], o[1][1]], [o[0][0], o[0][1]]],
            [[o[0][1], o[0][0]], [o[1][1], o[1][0]]],
            [[o[1][1], o[1][0]], [o[0][1], o[0][0]]],
            [[o[0][0], o[1][0]], [o[0][1], o[1][1]]],
            [[o[0][1], o[1][1]], [o[0][0], o[1][0]]],
            [[o[1][0], o[0][0]], [o[1][1], o[0][1]]],
            [[o[1][1], o[0][1]], [o[1][0], o[0][0]]],
        ];
        for v in variants {
            let c = yates_chi2(&ContingencyTable2x2::new(v)).unwrap().chi2;
            assert_abs_diff_eq!(c, base, epsilon = 1e-12);
        }
    }

    #[test]
    fn normal_sf_reference_values() {
        // Frozen from an independent reference implementation.
        let cases = [
            (0.0, 0.5),
            (0.5, 0.3085375387259869),
            (1.0, 0.15865525393145707),
            (2.0, 0.022750131948179195),
            (3.0, 0.0013498980316300933),
            (3.09, 0.0010007824766140115),
            (4.0, 3.167124183311986e-05),
            (5.0, 2.866515718791933e-07),
            (8.0, 6.22096057427174e-16),
            (-3.09, 0.9989992175233859),
            (-1.5, 0.9331927987311419),
        ];
        for (z, expected) in cases {
            assert_abs_diff_eq!(normal_sf(z), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn normal_sf_complement() {
        for i in 0..=160 {
            let z = -8.0 + i as f64 * 0.1;
            assert_abs_diff_eq!(normal_sf(z) + normal_sf(-z), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn chi2_tail_reference_values() {
        let cases = [
            (0.1, 0.7518296340458492),
            (5.4, 0.02013675155034633),
            (0.5, 0.47950012218695337),
            (2.0, 0.15729920705028105),
            (25.0, 5.733031437583875e-07),
            (10.827566170662733, 0.001),
        ];
        for (x, expected) in cases {
            let got = chi2_sf_1df(x);
            assert!(
                (got - expected).abs() / expected <= 1e-10,
                "chi2_sf_1df({x}) = {got}, want {expected}"
            );
        }
    }

    #[test]
    fn chi2_tail_matches_squared_normal() {
        // Chi-squared with 1 df is the square of a standard normal.
        for i in 1..200 {
            let x = i as f64 * 0.25;
            let via_normal = 2.0 * normal_sf(x.sqrt());
            let got = chi2_sf_1df(x);
            assert!(
                (got - via_normal).abs() <= 1e-12 + 1e-9 * via_normal,
                "x={x}: {got} vs {via_normal}"
            );
        }
    }

    #[test]
    fn t_two_sided_reference_values() {
        assert_abs_diff_eq!(t_two_sided_p(0.0, 99.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t_two_sided_p(1.0, 99.0), 0.3197484741393017, epsilon = 1e-9);
        assert_abs_diff_eq!(t_two_sided_p(2.0, 99.0), 0.04823969337263297, epsilon = 1e-9);
        assert_abs_diff_eq!(t_two_sided_p(3.3915, 99.0), 0.0010000941713455994, epsilon = 1e-9);
        let p20 = t_two_sided_p(20.0, 99.0);
        assert!((p20 - 1.5064448594601706e-36).abs() / 1.5064448594601706e-36 < 1e-6);
        assert_abs_diff_eq!(t_two_sided_p(-20.0, 99.0), p20, epsilon = 1e-40);
    }

    #[test]
    fn mean_std_examples() {
        let r = mean_std(&[5.0]).unwrap();
        assert_eq!(r.mean, 5.0);
        assert_eq!(r.population_std, 0.0);
        assert!(r.sample_std.is_none());

        let r = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(r.mean, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.population_std, (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.sample_std.unwrap(), 1.0, epsilon = 1e-15);

        let r = mean_std(&[4.2, 4.2, 4.2]).unwrap();
        assert_eq!(r.population_std, 0.0);
        assert_eq!(r.sample_std.unwrap(), 0.0);

        assert!(mean_std(&[]).is_err());
    }

    #[test]
    fn yates_matches_bruteforce_on_random_tables() {
        // Direct re-evaluation of the definition on 1000 pseudo-random tables.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let mut checked = 0;
        while checked < 1000 {
            let o = [[next() % 500 + 1, next() % 500 + 1], [next() % 500 + 1, next() % 500 + 1]];
            let table = ContingencyTable2x2::new(o);
            let got = yates_chi2(&table).unwrap().chi2;

            let n = table.n() as f64;
            let p = [(o[0][0] + o[0][1]) as f64 / n, (o[1][0] + o[1][1]) as f64 / n];
            let q = [(o[0][0] + o[1][0]) as f64 / n, (o[0][1] + o[1][1]) as f64 / n];
            let mut brute = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let e = n * p[i] * q[j];
                    brute += ((o[i][j] as f64 - e).abs() - 0.5).powi(2) / e;
                }
            }
            assert!(
                (got - brute).abs() <= 1e-9 * brute.max(1.0),
                "table {o:?}: {got} vs {brute}"
            );
            checked += 1;
        }
    }

    #[test]
    fn ks_distance_basic() {
        assert_eq!(ks_distance_counts(&[0, 1, 2], &[0, 1, 2]), 0.0);
        // Disjoint supports: distance 1.
        assert_abs_diff_eq!(ks_distance_counts(&[0, 0, 0], &[5, 5, 5]), 1.0, epsilon = 1e-15);
        // Half the mass moved from 0 to 1.
        assert_abs_diff_eq!(ks_distance_counts(&[0, 0], &[0, 1]), 0.5, epsilon = 1e-15);
    }
}
