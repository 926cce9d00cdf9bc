//! Synthetic corpora with controllable gender composition, homophily,
//! preferential attachment, and planted citation bias.
//!
//! Gender categories are assigned to papers directly, with synthetic author
//! pools consistent with the category (and with the paper's country), so
//! the statistical machinery can be calibrated independently of the
//! name-inference machinery. Targets are selected among eligible older
//! papers with weight proportional to
//! `homophily factor x (in_degree + 1)^pa_exponent x planted_bias[category]`,
//! where the homophily factor is `1 + homophily_strength` for targets
//! sharing the source's (country, topic, venue rank) key. Bias is injected
//! on the selection weight, not by post-hoc edge deletion, so planted
//! over/under-citation relates analytically to the multiplier.
//!
//! Citations never violate corpus filtering criteria (i), (ii), or (iv) by
//! construction; coauthor-overlap violations (criterion iii) are permitted
//! and serve as filter-test inputs.

use crate::corpus::{
    years_before, AuthorMap, AuthorRecord, Gender, GenderCategory, PaperRecord, VenueRank,
    VenueType,
};
use crate::error::{Error, Result};
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};
use std::path::Path;

/// Out-citation count distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CitationCount {
    Constant(u32),
    Poisson(f64),
}

impl CitationCount {
    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        match self {
            CitationCount::Constant(k) => *k,
            // Knuth's method; our rates are single digits.
            CitationCount::Poisson(lambda) => {
                let limit = (-lambda).exp();
                let mut k = 0u32;
                let mut p = 1.0;
                loop {
                    p *= rng.gen::<f64>();
                    if p <= limit {
                        return k;
                    }
                    k += 1;
                }
            }
        }
    }

    fn mean(&self) -> f64 {
        match self {
            CitationCount::Constant(k) => *k as f64,
            CitationCount::Poisson(lambda) => *lambda,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_papers: usize,
    /// Inclusive year range; starts no earlier than 1990 so generated
    /// citations cannot violate the citing-year filter.
    pub years: (i32, i32),
    /// MM, MW, WM, WW probabilities; must sum to 1.
    pub gender_category_probs: [f64; 4],
    pub n_countries: usize,
    pub n_topics: usize,
    /// Probabilities over the eight venue ranks; must sum to 1.
    pub rank_probs: [f64; 8],
    pub citations_per_paper: CitationCount,
    /// Multiplicative preference for targets sharing the source's
    /// attribute key: weight factor 1 + homophily_strength.
    pub homophily_strength: f64,
    /// Target weight grows as (in_degree + 1)^pa_exponent.
    pub pa_exponent: f64,
    /// Selection-weight multiplier per target gender category.
    pub planted_bias: [f64; 4],
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_papers: 1000,
            years: (1995, 2014),
            gender_category_probs: [0.70, 0.08, 0.12, 0.10],
            n_countries: 5,
            n_topics: 12,
            rank_probs: [0.15, 0.10, 0.10, 0.05, 0.30, 0.15, 0.10, 0.05],
            citations_per_paper: CitationCount::Poisson(3.0),
            homophily_strength: 0.0,
            pa_exponent: 0.0,
            planted_bias: [1.0; 4],
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let check_probs = |name: &str, probs: &[f64]| -> Result<()> {
            if probs.iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidInput(format!("{name} has a negative entry")));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!("{name} sums to {sum}, not 1")));
            }
            Ok(())
        };
        check_probs("gender_category_probs", &self.gender_category_probs)?;
        check_probs("rank_probs", &self.rank_probs)?;
        if self.n_papers == 0 || self.n_countries == 0 || self.n_topics == 0 {
            return Err(Error::InvalidInput("counts must be positive".into()));
        }
        if self.years.0 < 1990 {
            return Err(Error::InvalidInput(
                "years must start at 1990 or later (criterion iv holds by construction)".into(),
            ));
        }
        if self.years.1 < self.years.0 {
            return Err(Error::InvalidInput("empty year range".into()));
        }
        if self.homophily_strength < 0.0 || self.pa_exponent < 0.0 {
            return Err(Error::InvalidInput("homophily and pa exponent must be >= 0".into()));
        }
        if self.planted_bias.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidInput("planted_bias entries must be >= 0".into()));
        }
        Ok(())
    }
}

/// A generated corpus in the exact shape the corpus loaders ingest.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub papers: Vec<PaperRecord>,
    pub citations: Vec<(String, String)>,
    pub authors: AuthorMap,
}

impl SynthCorpus {
    /// Write `papers.jsonl`, `citations.csv`, and `authors.jsonl` into a
    /// directory, in the corpus module's file formats.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        crate::corpus::write_papers(&dir.join("papers.jsonl"), &self.papers)?;
        crate::corpus::write_citations(&dir.join("citations.csv"), &self.citations)?;
        crate::corpus::write_authors(&dir.join("authors.jsonl"), &self.authors)
    }
}

/// Fenwick tree over f64 weights with range sums and inverse-CDF search.
struct Fenwick {
    tree: Vec<f64>,
    n: usize,
}

impl Fenwick {
    fn new(n: usize) -> Fenwick {
        Fenwick { tree: vec![0.0; n + 1], n }
    }

    fn add(&mut self, mut i: usize, delta: f64) {
        i += 1;
        while i <= self.n {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of weights in [0, i).
    fn prefix(&self, mut i: usize) -> f64 {
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Sum of weights in [lo, hi).
    fn range(&self, lo: usize, hi: usize) -> f64 {
        if hi <= lo {
            0.0
        } else {
            self.prefix(hi) - self.prefix(lo)
        }
    }

    /// Smallest index with cumulative weight strictly above `target`.
    fn upper_bound(&self, mut target: f64) -> usize {
        let mut pos = 0usize;
        let mut step = self.n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }

    /// Draw an index in [lo, hi) proportional to weight; `u` uniform in
    /// [0, range(lo, hi)).
    fn sample_in_range(&self, lo: usize, u: f64) -> usize {
        self.upper_bound(self.prefix(lo) + u)
    }
}

/// Zipf-like weights rotated per gender category, so categories concentrate
/// on different attribute values (the synthetic analogue of demographic
/// concentration by topic and country).
fn skewed_pick(rng: &mut ChaCha8Rng, n: usize, category: GenderCategory) -> usize {
    let offset = (category as usize * n) / 4;
    let total: f64 = (0..n).map(|k| 1.0 / (k + 1) as f64).sum();
    let mut u = rng.gen::<f64>() * total;
    for k in 0..n {
        u -= 1.0 / (k + 1) as f64;
        if u <= 0.0 {
            return (k + offset) % n;
        }
    }
    (n - 1 + offset) % n
}

fn pick_weighted(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut u = rng.gen::<f64>();
    for (i, &p) in probs.iter().enumerate() {
        u -= p;
        if u <= 0.0 {
            return i;
        }
    }
    probs.len() - 1
}

struct AuthorPools {
    /// Pool of author ids per (country index, gender).
    pools: HashMap<(usize, Gender), Vec<String>>,
    pool_size: usize,
}

impl AuthorPools {
    fn new(n_papers: usize, n_countries: usize) -> AuthorPools {
        let pool_size = (n_papers / (n_countries * 6)).max(3);
        AuthorPools { pools: HashMap::new(), pool_size }
    }

    /// Draw an author from the (country, gender) pool, creating its record
    /// on first use.
    fn draw(
        &mut self,
        rng: &mut ChaCha8Rng,
        authors: &mut AuthorMap,
        country: usize,
        gender: Gender,
        year: i32,
        exclude: &[String],
    ) -> String {
        let pool = self.pools.entry((country, gender)).or_insert_with(|| {
            let tag = match gender {
                Gender::Male => "m",
                Gender::Female => "f",
            };
            (0..self.pool_size).map(|k| format!("a_c{country:02}_{tag}{k:04}")).collect()
        });
        // Pools are comfortably larger than author lists.
        let id = loop {
            let id = &pool[rng.gen_range(0..pool.len())];
            if !exclude.contains(id) {
                break id.clone();
            }
        };
        authors.entry(id.clone()).or_insert_with(|| {
            AuthorRecord::new(
                id.clone(),
                format!("Auto {id}"),
                Some(format!("C{country:02}")),
                Some(gender),
                year,
            )
        });
        id
    }
}

fn category_genders(cat: GenderCategory) -> (Gender, Gender) {
    match cat {
        GenderCategory::MM => (Gender::Male, Gender::Male),
        GenderCategory::MW => (Gender::Male, Gender::Female),
        GenderCategory::WM => (Gender::Female, Gender::Male),
        GenderCategory::WW => (Gender::Female, Gender::Female),
    }
}

/// Generate a synthetic corpus. Deterministic per seed; the emitted files
/// pass corpus ingestion unchanged, with country and gender category left
/// for the build pipeline to re-derive from the synthetic authors.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Dates first, sorted ascending; ids are assigned in date order.
    let start = NaiveDate::from_ymd_opt(config.years.0, 1, 1).expect("valid start year");
    let end = NaiveDate::from_ymd_opt(config.years.1, 12, 31).expect("valid end year");
    let span = (end - start).num_days() + 1;
    let mut dates: Vec<NaiveDate> =
        (0..config.n_papers).map(|_| start + chrono::Days::new(rng.gen_range(0..span) as u64)).collect();
    dates.sort();

    let n = config.n_papers;
    let mut pools = AuthorPools::new(n, config.n_countries);
    let mut authors = AuthorMap::new();
    let mut papers: Vec<PaperRecord> = Vec::with_capacity(n);
    let mut category: Vec<GenderCategory> = Vec::with_capacity(n);
    let mut key_of: Vec<(usize, usize, usize)> = Vec::with_capacity(n);

    for (i, &date) in dates.iter().enumerate() {
        let cat = GenderCategory::ALL[pick_weighted(&mut rng, &config.gender_category_probs)];
        let country = skewed_pick(&mut rng, config.n_countries, cat);
        let topic = skewed_pick(&mut rng, config.n_topics, cat);
        let rank_ix = pick_weighted(&mut rng, &config.rank_probs);
        let rank = VenueRank::ALL[rank_ix];

        let year = chrono::Datelike::year(&date);
        let (first_gender, last_gender) = category_genders(cat);
        let sole = cat != GenderCategory::MW
            && cat != GenderCategory::WM
            && rng.gen::<f64>() < 0.25;
        let mut author_ids =
            vec![pools.draw(&mut rng, &mut authors, country, first_gender, year, &[])];
        if !sole {
            let n_middle = rng.gen_range(0..3u32);
            for _ in 0..n_middle {
                let g = if rng.gen::<bool>() { Gender::Male } else { Gender::Female };
                let middle = pools.draw(&mut rng, &mut authors, country, g, year, &author_ids);
                author_ids.push(middle);
            }
            let last =
                pools.draw(&mut rng, &mut authors, country, last_gender, year, &author_ids);
            author_ids.push(last);
        }

        papers.push(PaperRecord {
            paper_id: format!("p{i:07}"),
            title: format!("Synthetic paper {i}"),
            pub_date: date,
            year,
            venue_id: format!("V_{}_{}", rank.as_str().replace('*', "s"), i % 3),
            venue_type: if rank.is_conference() { VenueType::Conference } else { VenueType::Journal },
            venue_rank: Some(rank),
            country: None,
            topic_id: format!("T{topic:03}"),
            subfield_id: format!("SF{:02}", topic / 4),
            author_ids,
            gender_category: None,
        });
        category.push(cat);
        key_of.push((country, topic, rank_ix));
    }

    // Bucket papers by attribute key for the homophily term.
    let mut bucket_ids: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut bucket_members: Vec<Vec<usize>> = Vec::new();
    let mut bucket_pos: Vec<usize> = Vec::with_capacity(n);
    let mut bucket_of: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let b = *bucket_ids.entry(key_of[i]).or_insert_with(|| {
            bucket_members.push(Vec::new());
            bucket_members.len() - 1
        });
        bucket_of.push(b);
        bucket_pos.push(bucket_members[b].len());
        bucket_members[b].push(i);
    }

    // Base weight of paper i: (in_degree + 1)^pa * bias[category].
    let base = |in_deg: u64, cat: GenderCategory, cfg: &SynthConfig| -> f64 {
        ((in_deg + 1) as f64).powf(cfg.pa_exponent) * cfg.planted_bias[cat as usize]
    };

    let mut global = Fenwick::new(n);
    let mut per_bucket: Vec<Fenwick> =
        bucket_members.iter().map(|m| Fenwick::new(m.len())).collect();
    let mut weight: Vec<f64> = vec![0.0; n];
    let mut in_deg: Vec<u64> = vec![0; n];
    let set_weight = |i: usize,
                          w: f64,
                          weight: &mut Vec<f64>,
                          global: &mut Fenwick,
                          per_bucket: &mut Vec<Fenwick>| {
        let delta = w - weight[i];
        if delta != 0.0 {
            global.add(i, delta);
            per_bucket[bucket_of[i]].add(bucket_pos[i], delta);
            weight[i] = w;
        }
    };
    for i in 0..n {
        let w = base(0, category[i], config);
        set_weight(i, w, &mut weight, &mut global, &mut per_bucket);
    }

    let author_sets: Vec<HashSet<&str>> =
        papers.iter().map(|p| p.author_ids.iter().map(|s| s.as_str()).collect()).collect();

    let mut citations: Vec<(String, String)> = Vec::new();
    let mut demanded: u64 = 0;
    let h = config.homophily_strength;

    for i in 0..n {
        let wanted = config.citations_per_paper.sample(&mut rng);
        demanded += wanted as u64;
        if wanted == 0 {
            continue;
        }
        // Eligible window: strictly older papers within ten years.
        let cutoff = years_before(dates[i], 10);
        let lo = dates[..i].partition_point(|&d| d < cutoff);
        if lo >= i {
            continue;
        }

        let bucket = bucket_of[i];
        let members = &bucket_members[bucket];
        let b_lo = members.partition_point(|&p| p < lo);
        let b_hi = members.partition_point(|&p| p < i);

        let mut zeroed: Vec<(usize, f64)> = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        for _ in 0..wanted {
            // Rejection loop over shared-author conflicts: the conflicting
            // candidate's weight is zeroed so the next draw stays uniform
            // over the remaining eligible set.
            let target = loop {
                let total_all = global.range(lo, i);
                let total_same = per_bucket[bucket].range(b_lo, b_hi);
                let total = total_all + h * total_same;
                if total <= 0.0 {
                    break None;
                }
                let u = rng.gen::<f64>() * total;
                let t = if u < total_all || total_same <= 0.0 {
                    global
                        .sample_in_range(lo, u.min(total_all * (1.0 - 1e-15)))
                        .min(i - 1)
                } else {
                    let v = (u - total_all) / h;
                    let pos = per_bucket[bucket]
                        .sample_in_range(b_lo, v.min(total_same * (1.0 - 1e-15)))
                        .min(b_hi - 1);
                    members[pos]
                };
                if author_sets[i].is_disjoint(&author_sets[t]) {
                    break Some(t);
                }
                zeroed.push((t, weight[t]));
                set_weight(t, 0.0, &mut weight, &mut global, &mut per_bucket);
            };
            let Some(t) = target else { break };
            chosen.push(t);
            // Exclude from this paper's remaining draws.
            zeroed.push((t, weight[t]));
            set_weight(t, 0.0, &mut weight, &mut global, &mut per_bucket);
        }
        for (t, w) in zeroed {
            set_weight(t, w, &mut weight, &mut global, &mut per_bucket);
        }
        for &t in &chosen {
            citations.push((papers[i].paper_id.clone(), papers[t].paper_id.clone()));
            in_deg[t] += 1;
            let w = base(in_deg[t], category[t], config);
            set_weight(t, w, &mut weight, &mut global, &mut per_bucket);
        }
    }

    if demanded > 0 && (citations.len() as u64) < demanded / 2 {
        return Err(Error::Generation(format!(
            "config demands ~{demanded} citations but only {} could be placed",
            citations.len()
        )));
    }

    // Mark first publication years now that papers exist.
    let mut first_year: HashMap<&str, i32> = HashMap::new();
    for p in &papers {
        for a in &p.author_ids {
            let e = first_year.entry(a.as_str()).or_insert(p.year);
            *e = (*e).min(p.year);
        }
    }
    for (id, year) in first_year {
        if let Some(a) = authors.get_mut(id) {
            a.first_pub_year = year;
        }
    }

    Ok(SynthCorpus { papers, citations, authors })
}

/// Expected mean out-citations under the config, for sizing checks.
pub fn expected_citations(config: &SynthConfig) -> f64 {
    config.n_papers as f64 * config.citations_per_paper.mean()
}
