//! Observed vs expected citation counts by gender category and grouping,
//! with over/under-citation, Z-scores, and significance.
//!
//! Expected counts come from the mean and standard deviation of the
//! citation counts across randomized replicates (population convention: the
//! replicates are the full Monte Carlo population used). Over-citation is
//! significant when Z > 3.09, under-citation when Z < -3.09, matching a
//! one-sided p below 0.001.

use crate::corpus::{CitationNetwork, GenderCategory, PaperRecord, VenueRank, VenueType};
use crate::error::{Error, Result};
use crate::nullmodels::{run_replicates, Model};
use crate::stats::{mean_std, normal_sf, Z_THRESHOLD};
use std::collections::BTreeMap;

/// Predicate over paper records, referencing only record fields.
#[derive(Debug, Clone, PartialEq)]
pub enum PaperFilter {
    All,
    GenderCategory(GenderCategory),
    VenueType(VenueType),
    VenueRank(VenueRank),
    Country(String),
    Subfield(String),
    Topic(String),
    /// Inclusive year range.
    YearRange(i32, i32),
    And(Vec<PaperFilter>),
}

impl PaperFilter {
    pub fn matches(&self, p: &PaperRecord) -> bool {
        match self {
            PaperFilter::All => true,
            PaperFilter::GenderCategory(c) => p.gender_category == Some(*c),
            PaperFilter::VenueType(t) => p.venue_type == *t,
            PaperFilter::VenueRank(r) => p.venue_rank == Some(*r),
            PaperFilter::Country(c) => p.country.as_deref() == Some(c.as_str()),
            PaperFilter::Subfield(s) => &p.subfield_id == s,
            PaperFilter::Topic(t) => &p.topic_id == t,
            PaperFilter::YearRange(lo, hi) => (*lo..=*hi).contains(&p.year),
            PaperFilter::And(fs) => fs.iter().all(|f| f.matches(p)),
        }
    }

    /// Parse descriptors like `all`, `gender_category=MM`,
    /// `venue_type=conference`, `venue_rank=A*`, `country=US`,
    /// `subfield=S1`, `topic=T1`, `year=1995..2000`, or `&`-joined
    /// combinations of these.
    pub fn parse(s: &str) -> Result<PaperFilter> {
        let s = s.trim();
        if s.contains('&') {
            let parts: Result<Vec<PaperFilter>> =
                s.split('&').map(PaperFilter::parse).collect();
            return Ok(PaperFilter::And(parts?));
        }
        if s.eq_ignore_ascii_case("all") {
            return Ok(PaperFilter::All);
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("bad filter `{s}`")))?;
        let bad = || Error::InvalidInput(format!("bad filter value in `{s}`"));
        Ok(match key.trim() {
            "gender_category" => {
                PaperFilter::GenderCategory(GenderCategory::parse(value).ok_or_else(bad)?)
            }
            "venue_type" => PaperFilter::VenueType(match value {
                "conference" => VenueType::Conference,
                "journal" => VenueType::Journal,
                _ => return Err(bad()),
            }),
            "venue_rank" => PaperFilter::VenueRank(VenueRank::parse(value).ok_or_else(bad)?),
            "country" => PaperFilter::Country(value.to_string()),
            "subfield" => PaperFilter::Subfield(value.to_string()),
            "topic" => PaperFilter::Topic(value.to_string()),
            "year" => {
                let (lo, hi) =
                    value.split_once("..").ok_or_else(bad)?;
                PaperFilter::YearRange(
                    lo.parse().map_err(|_| bad())?,
                    hi.parse().map_err(|_| bad())?,
                )
            }
            _ => return Err(Error::InvalidInput(format!("unknown filter key `{key}`"))),
        })
    }
}

impl std::fmt::Display for PaperFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PaperFilter::All => write!(f, "all"),
            PaperFilter::GenderCategory(c) => write!(f, "gender_category={c}"),
            PaperFilter::VenueType(t) => write!(f, "venue_type={t}"),
            PaperFilter::VenueRank(r) => write!(f, "venue_rank={r}"),
            PaperFilter::Country(c) => write!(f, "country={c}"),
            PaperFilter::Subfield(s) => write!(f, "subfield={s}"),
            PaperFilter::Topic(t) => write!(f, "topic={t}"),
            PaperFilter::YearRange(lo, hi) => write!(f, "year={lo}..{hi}"),
            PaperFilter::And(fs) => {
                let parts: Vec<String> = fs.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", parts.join("&"))
            }
        }
    }
}

/// How report rows are partitioned into groups. Target-side attributes
/// partition by the cited paper; the yearly partition assigns a citation to
/// the citing paper's year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    None,
    BySubfield,
    ByTopic,
    ByVenueRank,
    ByVenueType,
    ByYear,
    ByVenue,
}

impl Partition {
    pub fn parse(s: &str) -> Option<Partition> {
        Some(match s.trim() {
            "none" => Partition::None,
            "by_subfield" => Partition::BySubfield,
            "by_topic" => Partition::ByTopic,
            "by_venue_rank" => Partition::ByVenueRank,
            "by_venue_type" => Partition::ByVenueType,
            "by_year" => Partition::ByYear,
            "by_venue" => Partition::ByVenue,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Partition::None => "none",
            Partition::BySubfield => "by_subfield",
            Partition::ByTopic => "by_topic",
            Partition::ByVenueRank => "by_venue_rank",
            Partition::ByVenueType => "by_venue_type",
            Partition::ByYear => "by_year",
            Partition::ByVenue => "by_venue",
        }
    }

    fn label(&self, src: &PaperRecord, dst: &PaperRecord) -> String {
        match self {
            Partition::None => "all".to_string(),
            Partition::BySubfield => dst.subfield_id.clone(),
            Partition::ByTopic => dst.topic_id.clone(),
            Partition::ByVenueRank => {
                dst.venue_rank.map(|r| r.to_string()).unwrap_or_else(|| "unranked".into())
            }
            Partition::ByVenueType => dst.venue_type.to_string(),
            Partition::ByYear => src.year.to_string(),
            Partition::ByVenue => dst.venue_id.clone(),
        }
    }
}

/// Which citations to count and how to partition them.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub from: PaperFilter,
    pub to: PaperFilter,
    pub partition: Partition,
}

impl GroupSpec {
    pub fn all() -> GroupSpec {
        GroupSpec { from: PaperFilter::All, to: PaperFilter::All, partition: Partition::None }
    }
}

/// Counts keyed by (group label, target gender category).
pub type CategoryCounts = BTreeMap<(String, GenderCategory), u64>;

/// Precomputed per-paper predicate and label tables, so tabulating a
/// replicate's edge list costs three array lookups per edge.
pub struct SpecTabulator {
    from_ok: Vec<bool>,
    to_ok: Vec<bool>,
    category: Vec<Option<GenderCategory>>,
    /// Cell label id; indexed by source paper for the yearly partition,
    /// by target paper otherwise.
    cell_of: Vec<u32>,
    cell_on_src: bool,
    labels: Vec<String>,
}

impl SpecTabulator {
    pub fn new(net: &CitationNetwork, spec: &GroupSpec) -> SpecTabulator {
        let papers = net.papers();
        let mut labels: Vec<String> = Vec::new();
        let mut label_ids: BTreeMap<String, u32> = BTreeMap::new();
        let cell_on_src = spec.partition == Partition::ByYear;
        let cell_of: Vec<u32> = papers
            .iter()
            .map(|p| {
                // Src/dst distinction only matters inside `label`; each
                // partition reads exactly one side.
                let label = spec.partition.label(p, p);
                *label_ids.entry(label.clone()).or_insert_with(|| {
                    labels.push(label);
                    (labels.len() - 1) as u32
                })
            })
            .collect();
        SpecTabulator {
            from_ok: papers.iter().map(|p| spec.from.matches(p)).collect(),
            to_ok: papers.iter().map(|p| spec.to.matches(p)).collect(),
            category: papers.iter().map(|p| p.gender_category).collect(),
            cell_of,
            cell_on_src,
            labels,
        }
    }

    /// Tabulate citation counts per (group, category) over an edge list.
    pub fn tabulate(&self, edges: &[(u32, u32)]) -> CategoryCounts {
        let mut dense: Vec<[u64; 4]> = vec![[0; 4]; self.labels.len()];
        for &(s, d) in edges {
            let (s, d) = (s as usize, d as usize);
            if !self.from_ok[s] || !self.to_ok[d] {
                continue;
            }
            let Some(cat) = self.category[d] else { continue };
            let cell = if self.cell_on_src { self.cell_of[s] } else { self.cell_of[d] };
            dense[cell as usize][cat as usize] += 1;
        }
        let mut out = CategoryCounts::new();
        for (cell, counts) in dense.iter().enumerate() {
            for (ci, &n) in counts.iter().enumerate() {
                if n > 0 {
                    out.insert((self.labels[cell].clone(), GenderCategory::ALL[ci]), n);
                }
            }
        }
        out
    }
}

/// Citations made by papers matching `from` to papers matching `to` in each
/// gender category, per partition cell.
pub fn observed_counts(net: &CitationNetwork, spec: &GroupSpec) -> CategoryCounts {
    SpecTabulator::new(net, spec).tabulate(net.edges())
}

/// Signed over/under-citation fraction (observed - expected) / expected;
/// undefined when the expectation is zero.
pub fn over_under(n_obs: u64, mu: f64) -> Option<f64> {
    if mu > 0.0 {
        Some((n_obs as f64 - mu) / mu)
    } else {
        None
    }
}

/// Z-score against the replicate distribution with its one-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZScore {
    pub z: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
}

/// Z = (observed - mean) / std, p = one-sided standard-normal tail of |Z|,
/// significant iff |Z| > 3.09. A zero std leaves the statistic undefined
/// unless the observation equals the mean exactly (then Z = 0).
pub fn z_and_p(n_obs: u64, mu: f64, sigma: f64) -> ZScore {
    let diff = n_obs as f64 - mu;
    if sigma == 0.0 {
        return if diff == 0.0 {
            ZScore { z: Some(0.0), p: Some(0.5), significant: false }
        } else {
            ZScore { z: None, p: None, significant: false }
        };
    }
    let z = diff / sigma;
    ZScore { z: Some(z), p: Some(normal_sf(z.abs())), significant: z.abs() > Z_THRESHOLD }
}

/// One report row: observed and expected citations from a group into a
/// gender category.
#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceStat {
    pub group: String,
    pub category: GenderCategory,
    pub n_obs: u64,
    pub mu: f64,
    pub sigma: f64,
    pub over_under: Option<f64>,
    pub z: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyzeOptions {
    /// Report two-sided p-values instead of the default one-sided tails.
    pub two_sided_p: bool,
}

/// Full analysis: observed counts joined with replicate means and standard
/// deviations (population convention), one row per (group, category).
/// Groups with zero expectation are emitted with undefined markers rather
/// than dropped. Rows are sorted by group, then category.
pub fn analyze(
    net: &CitationNetwork,
    model: Model,
    spec: &GroupSpec,
    n_replicates: u32,
    base_seed: u64,
) -> Result<Vec<ImbalanceStat>> {
    analyze_with(net, model, spec, n_replicates, base_seed, &AnalyzeOptions::default())
}

pub fn analyze_with(
    net: &CitationNetwork,
    model: Model,
    spec: &GroupSpec,
    n_replicates: u32,
    base_seed: u64,
    opts: &AnalyzeOptions,
) -> Result<Vec<ImbalanceStat>> {
    Ok(analyze_detailed(net, model, spec, n_replicates, base_seed, opts)?.0)
}

/// Like [`analyze_with`], additionally reporting the total number of
/// empty-candidate fallbacks across all replicates.
pub fn analyze_detailed(
    net: &CitationNetwork,
    model: Model,
    spec: &GroupSpec,
    n_replicates: u32,
    base_seed: u64,
    opts: &AnalyzeOptions,
) -> Result<(Vec<ImbalanceStat>, u64)> {
    let tab = SpecTabulator::new(net, spec);
    let observed = tab.tabulate(net.edges());
    let detailed = run_replicates(net, model, n_replicates, base_seed, |rn| {
        (tab.tabulate(&rn.edges), rn.fallback_count)
    })?;
    let total_fallbacks: u64 = detailed.iter().map(|(_, f)| f).sum();
    let replicates: Vec<CategoryCounts> = detailed.into_iter().map(|(c, _)| c).collect();

    let mut groups: std::collections::BTreeSet<String> =
        observed.keys().map(|(g, _)| g.clone()).collect();
    for rep in &replicates {
        groups.extend(rep.keys().map(|(g, _)| g.clone()));
    }

    let mut out = Vec::new();
    for group in groups {
        for category in GenderCategory::ALL {
            let key = (group.clone(), category);
            let n_obs = observed.get(&key).copied().unwrap_or(0);
            let values: Vec<f64> = replicates
                .iter()
                .map(|rep| rep.get(&key).copied().unwrap_or(0) as f64)
                .collect();
            let ms = mean_std(&values)?;
            let (mu, sigma) = (ms.mean, ms.population_std);
            let mut zp = z_and_p(n_obs, mu, sigma);
            if opts.two_sided_p {
                zp.p = zp.p.map(|p| (2.0 * p).min(1.0));
            }
            out.push(ImbalanceStat {
                group: group.clone(),
                category,
                n_obs,
                mu,
                sigma,
                over_under: over_under(n_obs, mu),
                z: zp.z,
                p: zp.p,
                significant: zp.significant,
            });
        }
    }
    Ok((out, total_fallbacks))
}

/// Spearman rank correlation: Pearson correlation of ranks, with average
/// ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "spearman length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput("spearman needs at least 2 points".into()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let (mut dx2, mut dy2) = (0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        num += (a - mean) * (b - mean);
        dx2 += (a - mean) * (a - mean);
        dy2 += (b - mean) * (b - mean);
    }
    if dx2 == 0.0 || dy2 == 0.0 {
        return Err(Error::UndefinedStatistic("spearman of a constant sequence".into()));
    }
    Ok(num / (dx2 * dy2).sqrt())
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("no NaN in rank input"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Average the 1-based ranks i+1..=j+1 across the tie run.
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Per-replicate tabulation rows for the replicate-summary interface:
/// citations from each source gender category (and from all papers) into
/// each target category.
pub fn source_category_crosstab(
    net: &CitationNetwork,
    edges: &[(u32, u32)],
) -> Vec<(String, GenderCategory, u64)> {
    let mut by_src: BTreeMap<(GenderCategory, GenderCategory), u64> = BTreeMap::new();
    let mut all: BTreeMap<GenderCategory, u64> = BTreeMap::new();
    for &(s, d) in edges {
        let (Some(sc), Some(dc)) = (
            net.paper(s as usize).gender_category,
            net.paper(d as usize).gender_category,
        ) else {
            continue;
        };
        *by_src.entry((sc, dc)).or_insert(0) += 1;
        *all.entry(dc).or_insert(0) += 1;
    }
    let mut rows = Vec::new();
    for ((sc, dc), n) in by_src {
        rows.push((sc.to_string(), dc, n));
    }
    for (dc, n) in all {
        rows.push(("All".to_string(), dc, n));
    }
    rows
}
