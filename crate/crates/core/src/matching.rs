//! Matched-pair analysis attributing citation imbalance to characteristics
//! of the citing papers: author gender, venue type, author prominence, and
//! the local coauthorship network.
//!
//! Two disjoint paper populations M and M' are compared by repeatedly
//! matching each paper in M with an unused paper in M' that agrees on
//! publication year, country of affiliation, research subfield, and number
//! of citations made. Over/under-citation per gender category is computed
//! for M and for each of the matched control subsets; the test statistic is
//! `t = (mean(deltas') - delta_M) / (std(deltas') / sqrt(n))` against a
//! t-distribution with n-1 degrees of freedom, rejecting at p < 0.001.

use crate::corpus::{AuthorMap, CitationNetwork, Gender, GenderCategory, PaperRecord, VenueType};
use crate::error::{Error, Result};
use crate::imbalance::over_under;
use crate::nullmodels::{run_replicates, Model};
use crate::stats::{mean_std, t_two_sided_p, P_REJECT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Covariates a matched pair must agree on exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchKey {
    pub year: i32,
    pub country: String,
    pub subfield_id: String,
    /// Citations made by the paper; papers making none cannot drive
    /// citing-side imbalance and are excluded from citing-side populations.
    pub out_citations: u32,
}

impl MatchKey {
    /// Key of a paper in the network; `None` when the paper makes no
    /// citations or lacks a country.
    pub fn of(net: &CitationNetwork, idx: usize) -> Option<MatchKey> {
        let out = net.out_degree(idx);
        if out == 0 {
            return None;
        }
        let p = net.paper(idx);
        Some(MatchKey {
            year: p.year,
            country: p.country.clone()?,
            subfield_id: p.subfield_id.clone(),
            out_citations: out,
        })
    }
}

/// Man-author over-representation: the male fraction among gender-assigned
/// members of the union of the first and last authors' coauthor sets
/// (excluding the first and last authors themselves), minus the overall
/// male fraction in the dataset. `None` when no gender-assigned coauthor
/// remains.
pub fn ma_or(
    paper: &PaperRecord,
    authors: &AuthorMap,
    overall_male_fraction: f64,
) -> Option<f64> {
    let mut pool: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    for endpoint in [paper.first_author(), paper.last_author()] {
        if let Some(rec) = authors.get(endpoint) {
            pool.extend(rec.coauthors.iter().map(|s| s.as_str()));
        }
    }
    pool.remove(paper.first_author());
    pool.remove(paper.last_author());
    let genders: Vec<Gender> =
        pool.iter().filter_map(|id| authors.get(*id).and_then(|a| a.gender)).collect();
    if genders.is_empty() {
        return None;
    }
    let male = genders.iter().filter(|g| **g == Gender::Male).count() as f64;
    Some(male / genders.len() as f64 - overall_male_fraction)
}

/// Male share among gender-assigned authors; `None` when no author has a
/// gender.
pub fn overall_male_fraction(authors: &AuthorMap) -> Option<f64> {
    let mut male = 0u64;
    let mut total = 0u64;
    for a in authors.values() {
        match a.gender {
            Some(Gender::Male) => {
                male += 1;
                total += 1;
            }
            Some(Gender::Female) => total += 1,
            None => {}
        }
    }
    if total == 0 {
        None
    } else {
        Some(male as f64 / total as f64)
    }
}

/// Per-gender prominence cutoffs for the top percentile, ties included.
#[derive(Debug, Clone)]
pub struct ProminenceCutoffs {
    female: Option<u64>,
    male: Option<u64>,
}

impl ProminenceCutoffs {
    pub fn compute(authors: &AuthorMap, percentile: f64) -> ProminenceCutoffs {
        let cutoff = |gender: Gender| -> Option<u64> {
            let mut vals: Vec<u64> = authors
                .values()
                .filter(|a| a.gender == Some(gender))
                .map(|a| a.prominence)
                .collect();
            if vals.is_empty() {
                return None;
            }
            vals.sort_unstable_by(|a, b| b.cmp(a));
            let k = ((percentile * vals.len() as f64).ceil() as usize).clamp(1, vals.len());
            Some(vals[k - 1])
        };
        ProminenceCutoffs { female: cutoff(Gender::Female), male: cutoff(Gender::Male) }
    }

    fn is_prominent(&self, author: &crate::corpus::AuthorRecord) -> bool {
        match author.gender {
            Some(Gender::Female) => self.female.is_some_and(|c| author.prominence >= c),
            Some(Gender::Male) => self.male.is_some_and(|c| author.prominence >= c),
            None => false,
        }
    }
}

/// Whether the paper's first or last author sits in the top `percentile` of
/// their own gender's prominence distribution (ties at the cutoff count).
pub fn prominent_flag(paper: &PaperRecord, authors: &AuthorMap, percentile: f64) -> bool {
    let cutoffs = ProminenceCutoffs::compute(authors, percentile);
    prominent_with(paper, authors, &cutoffs)
}

fn prominent_with(paper: &PaperRecord, authors: &AuthorMap, cutoffs: &ProminenceCutoffs) -> bool {
    [paper.first_author(), paper.last_author()]
        .iter()
        .any(|id| authors.get(*id).is_some_and(|a| cutoffs.is_prominent(a)))
}

/// Matched control subsets of M' for a population M.
#[derive(Debug, Clone)]
pub struct MatchedPairReplicates {
    /// The full population M (network indices).
    pub m_set: Vec<u32>,
    /// Per replicate, the matched subset of M' (one entry per matched pair).
    pub replicate_sets: Vec<Vec<u32>>,
    /// Per replicate, the matched (u, v) pairs.
    pub pairs: Vec<Vec<(u32, u32)>>,
    /// Per replicate, how many papers of M found no available partner.
    pub skipped: Vec<u32>,
}

/// Generate matched pairs: per replicate, each paper of M is paired with a
/// uniformly random, previously unused paper of M' with an identical
/// [`MatchKey`]. Papers with no available partner are skipped in that
/// replicate and counted. Replicate r derives its stream from
/// `seed + r`.
pub fn build_matched_pairs(
    net: &CitationNetwork,
    m: &[u32],
    m_prime: &[u32],
    n_replicates: u32,
    seed: u64,
) -> Result<MatchedPairReplicates> {
    let m_sorted = {
        let mut v = m.to_vec();
        v.sort_unstable();
        v
    };
    for &u in m_prime {
        if m_sorted.binary_search(&u).is_ok() {
            return Err(Error::InvalidInput(format!(
                "populations must be disjoint; paper index {u} is in both"
            )));
        }
    }
    let key_of = |i: u32| -> Result<MatchKey> {
        MatchKey::of(net, i as usize).ok_or_else(|| {
            Error::InvalidInput(format!(
                "paper `{}` makes no citations and cannot enter a citing-side population",
                net.paper(i as usize).paper_id
            ))
        })
    };
    let mut groups: HashMap<MatchKey, Vec<u32>> = HashMap::new();
    for &v in m_prime {
        groups.entry(key_of(v)?).or_default().push(v);
    }
    let m_keys: Vec<MatchKey> =
        m_sorted.iter().map(|&u| key_of(u)).collect::<Result<_>>()?;

    let mut out = MatchedPairReplicates {
        m_set: m_sorted.clone(),
        replicate_sets: Vec::with_capacity(n_replicates as usize),
        pairs: Vec::with_capacity(n_replicates as usize),
        skipped: Vec::with_capacity(n_replicates as usize),
    };
    for r in 0..n_replicates as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r));
        let mut remaining = groups.clone();
        let mut pairs = Vec::with_capacity(m_sorted.len());
        let mut skipped = 0u32;
        for (u, key) in m_sorted.iter().zip(&m_keys) {
            match remaining.get_mut(key) {
                Some(cands) if !cands.is_empty() => {
                    let v = cands.swap_remove(rng.gen_range(0..cands.len()));
                    pairs.push((*u, v));
                }
                _ => skipped += 1,
            }
        }
        out.replicate_sets.push(pairs.iter().map(|&(_, v)| v).collect());
        out.pairs.push(pairs);
        out.skipped.push(skipped);
    }
    Ok(out)
}

/// Result of the matched-pair test statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TStat {
    /// Infinite when the replicate spread is zero but the means differ.
    pub t: f64,
    pub p: f64,
    pub reject: bool,
}

/// `t = (mean(deltas') - delta_M) / (std(deltas') / sqrt(n))`, two-sided p
/// from the t-distribution with n-1 degrees of freedom, rejecting at
/// p < 0.001. The standard deviation uses the sample (n-1) convention of
/// the classical one-sample t-test. Zero spread with equal means is the
/// defined limit t = 0; with unequal means the statistic is infinite.
pub fn t_statistic(delta_m: f64, deltas_prime: &[f64]) -> Result<TStat> {
    if deltas_prime.len() < 2 {
        return Err(Error::InvalidInput("t_statistic needs at least 2 replicate values".into()));
    }
    let n = deltas_prime.len() as f64;
    let ms = mean_std(deltas_prime)?;
    let s = ms.sample_std.expect("len >= 2");
    let diff = ms.mean - delta_m;
    let t = if s == 0.0 {
        if diff == 0.0 {
            0.0
        } else if diff > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        diff / (s / n.sqrt())
    };
    let p = if t == 0.0 { 1.0 } else { t_two_sided_p(t, n - 1.0) };
    Ok(TStat { t, p, reject: p < P_REJECT })
}

/// Observed and expected citations per (source paper, target category),
/// with the expectation from a reference-model replicate run. Linearity of
/// the mean lets any population's over/under-citation be assembled by
/// summing rows.
pub struct PerPaperExpectation {
    pub obs: Vec<[u64; 4]>,
    pub mu: Vec<[f64; 4]>,
}

impl PerPaperExpectation {
    /// Over/under-citation of the population `set` toward `category`, as a
    /// percentage; `None` when the expectation is zero.
    pub fn delta_pct(&self, set: &[u32], category: GenderCategory) -> Option<f64> {
        let c = category as usize;
        let n_obs: u64 = set.iter().map(|&i| self.obs[i as usize][c]).sum();
        let mu: f64 = set.iter().map(|&i| self.mu[i as usize][c]).sum();
        over_under(n_obs, mu).map(|f| f * 100.0)
    }
}

/// Tabulate per-paper observed counts and reference-model expectations.
pub fn per_paper_expectation(
    net: &CitationNetwork,
    model: Model,
    n_replicates: u32,
    base_seed: u64,
) -> Result<PerPaperExpectation> {
    let category: Vec<Option<GenderCategory>> =
        net.papers().iter().map(|p| p.gender_category).collect();
    let tally = |edges: &[(u32, u32)]| -> Vec<[u64; 4]> {
        let mut counts = vec![[0u64; 4]; category.len()];
        for &(s, d) in edges {
            if let Some(c) = category[d as usize] {
                counts[s as usize][c as usize] += 1;
            }
        }
        counts
    };
    let obs = tally(net.edges());
    let reps = run_replicates(net, model, n_replicates, base_seed, |rn| tally(&rn.edges))?;
    let mut mu = vec![[0.0f64; 4]; net.n()];
    for rep in &reps {
        for (acc, row) in mu.iter_mut().zip(rep) {
            for c in 0..4 {
                acc[c] += row[c] as f64;
            }
        }
    }
    let scale = 1.0 / n_replicates as f64;
    for row in &mut mu {
        for c in row.iter_mut() {
            *c *= scale;
        }
    }
    Ok(PerPaperExpectation { obs, mu })
}

/// Ways of splitting the citing-paper populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    /// WW papers versus matched MM papers.
    GenderMmVsWw,
    /// Conference versus journal papers, within MM and within WW.
    VenueType,
    /// Papers with a prominent first/last author versus without.
    Prominence,
    /// Top versus bottom half of the man-author over-representation.
    MaOrHalves,
}

impl Split {
    pub const ALL: [Split; 4] =
        [Split::GenderMmVsWw, Split::VenueType, Split::Prominence, Split::MaOrHalves];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::GenderMmVsWw => "gender_MM_vs_WW",
            Split::VenueType => "venue_type",
            Split::Prominence => "prominence",
            Split::MaOrHalves => "ma_or_halves",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        Self::ALL.iter().copied().find(|v| v.as_str().eq_ignore_ascii_case(s))
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One comparison-report row.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub split: String,
    pub population: String,
    pub category: GenderCategory,
    pub outcome: ComparisonOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonOutcome {
    Tested {
        delta_pct: f64,
        delta_ref_pct: f64,
        delta_ref_std: f64,
        t: f64,
        p: f64,
        reject: bool,
    },
    /// Too few matchable pairs, or an undefined over/under-citation.
    InsufficientData,
}

#[derive(Debug, Clone, Copy)]
pub struct CompareOptions {
    pub null_replicates: u32,
    pub match_replicates: u32,
    /// Top-percentile definition of a prominent author.
    pub prominence_percentile: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { null_replicates: 100, match_replicates: 100, prominence_percentile: 0.01 }
    }
}

/// Compare a population M against matched controls from M'.
///
/// Emits one row per gender category. A category is tested only when the
/// population's own over/under-citation is defined, every matching
/// replicate produced at least 2 pairs, and every replicate delta is
/// defined; otherwise the row carries an insufficient-data marker.
pub fn compare_sets(
    net: &CitationNetwork,
    expectation: &PerPaperExpectation,
    m: &[u32],
    m_prime: &[u32],
    split: &str,
    population: &str,
    match_replicates: u32,
    seed: u64,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::with_capacity(4);
    if m.len() < 2 || m_prime.len() < 2 {
        for category in GenderCategory::ALL {
            rows.push(ComparisonRow {
                split: split.into(),
                population: population.into(),
                category,
                outcome: ComparisonOutcome::InsufficientData,
            });
        }
        return Ok(rows);
    }
    let matched = build_matched_pairs(net, m, m_prime, match_replicates, seed)?;
    let enough_pairs = matched.pairs.iter().all(|p| p.len() >= 2);
    for category in GenderCategory::ALL {
        let delta_m = expectation.delta_pct(&matched.m_set, category);
        let deltas_prime: Option<Vec<f64>> = matched
            .replicate_sets
            .iter()
            .map(|set| expectation.delta_pct(set, category))
            .collect();
        let outcome = match (delta_m, deltas_prime, enough_pairs) {
            (Some(dm), Some(dp), true) => {
                let ts = t_statistic(dm, &dp)?;
                let ms = mean_std(&dp)?;
                ComparisonOutcome::Tested {
                    delta_pct: dm,
                    delta_ref_pct: ms.mean,
                    delta_ref_std: ms.sample_std.expect("len >= 2"),
                    t: ts.t,
                    p: ts.p,
                    reject: ts.reject,
                }
            }
            _ => ComparisonOutcome::InsufficientData,
        };
        rows.push(ComparisonRow {
            split: split.into(),
            population: population.into(),
            category,
            outcome,
        });
    }
    Ok(rows)
}

/// Run the full matched-pair comparison for a split under a reference
/// model (the preferential-draws model in the headline analysis).
pub fn compare_populations(
    net: &CitationNetwork,
    authors: &AuthorMap,
    model: Model,
    split: Split,
    base_seed: u64,
    opts: &CompareOptions,
) -> Result<Vec<ComparisonRow>> {
    let expectation = per_paper_expectation(net, model, opts.null_replicates, base_seed)?;
    let citing: Vec<u32> =
        (0..net.n() as u32).filter(|&i| net.out_degree(i as usize) >= 1).collect();
    let of_category = |cat: GenderCategory| -> Vec<u32> {
        citing
            .iter()
            .copied()
            .filter(|&i| net.paper(i as usize).gender_category == Some(cat))
            .collect()
    };
    // Matching seeds derive from the base seed after the null-model block.
    let match_seed = base_seed.wrapping_add(0x9e37_79b9);
    let mut rows = Vec::new();
    match split {
        Split::GenderMmVsWw => {
            let ww = of_category(GenderCategory::WW);
            let mm = of_category(GenderCategory::MM);
            rows.extend(compare_sets(
                net,
                &expectation,
                &ww,
                &mm,
                split.as_str(),
                "WW",
                opts.match_replicates,
                match_seed,
            )?);
        }
        Split::VenueType => {
            for cat in [GenderCategory::MM, GenderCategory::WW] {
                let pop = of_category(cat);
                let (conf, journal): (Vec<u32>, Vec<u32>) = pop.iter().partition(|&&i| {
                    net.paper(i as usize).venue_type == VenueType::Conference
                });
                rows.extend(compare_sets(
                    net,
                    &expectation,
                    &conf,
                    &journal,
                    split.as_str(),
                    cat.as_str(),
                    opts.match_replicates,
                    match_seed,
                )?);
            }
        }
        Split::Prominence => {
            let cutoffs = ProminenceCutoffs::compute(authors, opts.prominence_percentile);
            for cat in [GenderCategory::MM, GenderCategory::WW] {
                let pop = of_category(cat);
                let (with, without): (Vec<u32>, Vec<u32>) = pop.iter().partition(|&&i| {
                    prominent_with(net.paper(i as usize), authors, &cutoffs)
                });
                rows.extend(compare_sets(
                    net,
                    &expectation,
                    &with,
                    &without,
                    split.as_str(),
                    cat.as_str(),
                    opts.match_replicates,
                    match_seed,
                )?);
            }
        }
        Split::MaOrHalves => {
            let overall = overall_male_fraction(authors).ok_or_else(|| {
                Error::UndefinedStatistic("no gender-assigned authors in the corpus".into())
            })?;
            for cat in [GenderCategory::MM, GenderCategory::WW] {
                let pop = of_category(cat);
                let mut valued: Vec<(u32, f64)> = pop
                    .iter()
                    .filter_map(|&i| {
                        ma_or(net.paper(i as usize), authors, overall).map(|v| (i, v))
                    })
                    .collect();
                if valued.len() < 4 {
                    for category in GenderCategory::ALL {
                        rows.push(ComparisonRow {
                            split: split.as_str().into(),
                            population: cat.as_str().into(),
                            category,
                            outcome: ComparisonOutcome::InsufficientData,
                        });
                    }
                    continue;
                }
                valued.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN").then(a.0.cmp(&b.0)));
                let median = valued[(valued.len() - 1) / 2].1;
                // Papers exactly at the median fall in the bottom half.
                let (top, bottom): (Vec<u32>, Vec<u32>) = {
                    let (t, b): (Vec<(u32, f64)>, Vec<(u32, f64)>) =
                        valued.into_iter().partition(|&(_, v)| v > median);
                    (t.into_iter().map(|x| x.0).collect(), b.into_iter().map(|x| x.0).collect())
                };
                rows.extend(compare_sets(
                    net,
                    &expectation,
                    &top,
                    &bottom,
                    split.as_str(),
                    cat.as_str(),
                    opts.match_replicates,
                    match_seed,
                )?);
            }
        }
    }
    Ok(rows)
}
