//! Candidate lookup structures shared by all reference models.

use crate::corpus::{years_before, CitationNetwork, VenueRank};
use crate::error::{Error, Result};
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::OnceLock;

/// Paper attributes preserved by the homophilic and preferential models:
/// country of affiliation, primary research topic, and venue rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeKey {
    pub country: String,
    pub topic_id: String,
    pub venue_rank: VenueRank,
}

impl AttributeKey {
    pub fn of(paper: &crate::corpus::PaperRecord) -> Option<AttributeKey> {
        Some(AttributeKey {
            country: paper.country.clone()?,
            topic_id: paper.topic_id.clone(),
            venue_rank: paper.venue_rank?,
        })
    }
}

/// Networks below this size get their conflict sets precomputed eagerly;
/// larger ones fill them lazily on first use.
const DENSE_PRECOMPUTE_LIMIT: usize = 100_000;

/// Attribute buckets, per-source date windows, and memoized author-conflict
/// sets over an immutable network.
///
/// Paper indices double as date ranks: the network orders papers by
/// (pub_date, paper_id), so a source's eligibility window is a contiguous
/// index range and every bucket list is ascending in publication date.
pub struct CandidateIndex {
    /// Attribute-key id of each paper.
    key_of: Vec<u32>,
    /// Bucket members (ascending paper index) per key id.
    buckets: Vec<Vec<u32>>,
    /// First index whose date is within ten years of the source's date.
    window_lo: Vec<u32>,
    /// One past the last index whose date is <= the source's date.
    window_hi: Vec<u32>,
    /// Papers excluded for each source by author/coauthor overlap, sorted.
    conflicts: Vec<OnceLock<Box<[u32]>>>,
    /// Papers listing each interned author.
    papers_of_author: Vec<Vec<u32>>,
}

impl CandidateIndex {
    pub fn build(net: &CitationNetwork) -> Result<CandidateIndex> {
        let n = net.n();
        let mut key_ids: HashMap<AttributeKey, u32> = HashMap::new();
        let mut key_of = Vec::with_capacity(n);
        let mut buckets: Vec<Vec<u32>> = Vec::new();
        for (i, p) in net.papers().iter().enumerate() {
            let key = AttributeKey::of(p).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "paper `{}` lacks country or venue rank; filter the corpus first",
                    p.paper_id
                ))
            })?;
            let id = *key_ids.entry(key).or_insert_with(|| {
                buckets.push(Vec::new());
                (buckets.len() - 1) as u32
            });
            key_of.push(id);
            buckets[id as usize].push(i as u32);
        }

        let dates: Vec<_> = net.papers().iter().map(|p| p.pub_date).collect();
        let mut window_lo = Vec::with_capacity(n);
        let mut window_hi = Vec::with_capacity(n);
        for p in net.papers() {
            let cutoff = years_before(p.pub_date, super::CITATION_WINDOW_YEARS);
            window_lo.push(dates.partition_point(|&d| d < cutoff) as u32);
            window_hi.push(dates.partition_point(|&d| d <= p.pub_date) as u32);
        }

        let mut papers_of_author: Vec<Vec<u32>> = vec![Vec::new(); net.author_key_count()];
        for i in 0..n {
            for &a in net.paper_author_keys(i) {
                papers_of_author[a as usize].push(i as u32);
            }
        }

        let index = CandidateIndex {
            key_of,
            buckets,
            window_lo,
            window_hi,
            conflicts: (0..n).map(|_| OnceLock::new()).collect(),
            papers_of_author,
        };

        if n < DENSE_PRECOMPUTE_LIMIT {
            (0..n).into_par_iter().for_each(|i| {
                if net.out_degree(i) > 0 {
                    index.conflict_set(net, i as u32);
                }
            });
        }
        Ok(index)
    }

    pub fn key_id(&self, paper: u32) -> u32 {
        self.key_of[paper as usize]
    }

    pub fn window(&self, src: u32) -> (u32, u32) {
        (self.window_lo[src as usize], self.window_hi[src as usize])
    }

    /// Sorted paper indices conflicting with `src` through shared authors or
    /// the coauthors of its first/last author. Always contains `src`.
    pub fn conflict_set(&self, net: &CitationNetwork, src: u32) -> &[u32] {
        self.conflicts[src as usize]
            .get_or_init(|| {
                let mut out: Vec<u32> = net
                    .forbidden_author_keys(src as usize)
                    .iter()
                    .flat_map(|&a| self.papers_of_author[a as usize].iter().copied())
                    .collect();
                out.sort_unstable();
                out.dedup();
                out.into_boxed_slice()
            })
            .as_ref()
    }

    /// Number of random-draws candidates for `src`.
    pub fn rd_count(&self, net: &CitationNetwork, src: u32) -> u32 {
        let (lo, hi) = self.window(src);
        let conflicts = self.conflict_set(net, src);
        let c_lo = conflicts.partition_point(|&c| c < lo);
        let c_hi = conflicts.partition_point(|&c| c < hi);
        (hi - lo) - (c_hi - c_lo) as u32
    }

    /// The `r`-th (0-based) random-draws candidate for `src`, in ascending
    /// paper-index order. Caller guarantees `r < rd_count(src)`.
    pub fn rd_nth(&self, net: &CitationNetwork, src: u32, r: u32) -> u32 {
        let (lo, hi) = self.window(src);
        let conflicts = self.conflict_set(net, src);
        let c_lo = conflicts.partition_point(|&c| c < lo);
        // Smallest x in [lo, hi) with r+1 eligible papers in [lo, x]; such an
        // x is itself eligible (conflicts never increase the count).
        let (mut a, mut b) = (lo, hi - 1);
        while a < b {
            let mid = a + (b - a) / 2;
            let c_mid = conflicts.partition_point(|&c| c <= mid);
            let eligible = (mid - lo + 1) - (c_mid - c_lo) as u32;
            if eligible >= r + 1 {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        a
    }

    /// Materialized random-draws candidate set, ascending.
    pub fn rd_candidates(&self, net: &CitationNetwork, src: u32) -> Vec<u32> {
        let (lo, hi) = self.window(src);
        let conflicts = self.conflict_set(net, src);
        let mut out = Vec::with_capacity((hi - lo) as usize);
        let mut c = conflicts.partition_point(|&c| c < lo);
        for p in lo..hi {
            if c < conflicts.len() && conflicts[c] == p {
                c += 1;
            } else {
                out.push(p);
            }
        }
        out
    }

    /// Homophilic-draws candidates for the citation (src, orig_dst):
    /// random-draws candidates sharing orig_dst's attribute key, with the
    /// original target always included. Ascending order.
    pub fn hd_candidates(&self, net: &CitationNetwork, src: u32, orig_dst: u32) -> Vec<u32> {
        let (lo, hi) = self.window(src);
        let bucket = &self.buckets[self.key_of[orig_dst as usize] as usize];
        let b_lo = bucket.partition_point(|&p| p < lo);
        let b_hi = bucket.partition_point(|&p| p < hi);
        let conflicts = self.conflict_set(net, src);
        let mut out = Vec::with_capacity(b_hi - b_lo + 1);
        for &p in &bucket[b_lo..b_hi] {
            if p != orig_dst && conflicts.binary_search(&p).is_err() {
                out.push(p);
            }
        }
        let pos = out.partition_point(|&p| p < orig_dst);
        out.insert(pos, orig_dst);
        out
    }
}
