//! Citation filtering into the final analysis network.

use super::{AuthorMap, CitationNetwork, PaperRecord};
use crate::error::{Error, Result};
use chrono::{Datelike, NaiveDate};
use std::collections::HashMap;

/// Earliest publication year admitted for citing papers (criterion iv).
pub const MIN_CITING_YEAR: i32 = 1990;

/// Citation window length in calendar years (criterion i).
pub const CITATION_WINDOW_YEARS: i32 = 10;

#[derive(Debug, Clone, Copy)]
pub struct FilterOptions {
    /// Keep papers that neither make nor receive citations after filtering.
    pub keep_isolated: bool,
    /// Keep citations whose endpoints share an author. Such citations are
    /// exempt from the coauthor-overlap rule too, which would otherwise
    /// remove almost all of them; non-self-citations still go through it.
    pub include_self_citations: bool,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions { keep_isolated: false, include_self_citations: false }
    }
}

/// `date` shifted back by `years` calendar years, keeping the month/day
/// anchor. Feb 29 maps to Feb 28 when the target year is not a leap year.
pub fn years_before(date: NaiveDate, years: i32) -> NaiveDate {
    let y = date.year() - years;
    NaiveDate::from_ymd_opt(y, date.month(), date.day())
        .unwrap_or_else(|| NaiveDate::from_ymd_opt(y, 2, 28).expect("feb 28 exists"))
}

fn sorted_intersects(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Build the filtered citation network.
///
/// Only papers with country, gender category, and venue rank all assigned
/// enter the network. A citation (u, v) is removed if any of:
/// (i) v's publication date is more than ten calendar years before u's,
/// (ii) u and v share an author (unless self-citations are included),
/// (iii) the coauthors of u's first or last author overlap v's authors,
/// (iv) u's publication year is before 1990.
/// Papers left with zero degree are then dropped unless `keep_isolated`.
///
/// The rules are conjunctive deletions, so they are applied in a single
/// pass and the whole operation is idempotent.
pub fn filter_citations(
    papers: Vec<PaperRecord>,
    edges: Vec<(String, String)>,
    authors: &AuthorMap,
    opts: &FilterOptions,
) -> Result<CitationNetwork> {
    // Papers with all three attributes, in (pub_date, paper_id) order.
    let mut kept: Vec<PaperRecord> = papers
        .into_iter()
        .filter(|p| p.country.is_some() && p.gender_category.is_some() && p.venue_rank.is_some())
        .collect();
    kept.sort_by(|a, b| (a.pub_date, &a.paper_id).cmp(&(b.pub_date, &b.paper_id)));

    let tmp_index: HashMap<&str, usize> =
        kept.iter().enumerate().map(|(i, p)| (p.paper_id.as_str(), i)).collect();

    // Intern author ids appearing either on kept papers or in the coauthor
    // sets of their first/last authors.
    let mut table: HashMap<String, u32> = HashMap::new();
    let intern = |id: &str, table: &mut HashMap<String, u32>| -> u32 {
        if let Some(&k) = table.get(id) {
            k
        } else {
            let k = table.len() as u32;
            table.insert(id.to_string(), k);
            k
        }
    };
    let mut paper_author_keys: Vec<Vec<u32>> = Vec::with_capacity(kept.len());
    let mut forbidden_keys: Vec<Vec<u32>> = Vec::with_capacity(kept.len());
    for p in &kept {
        let mut own: Vec<u32> = p.author_ids.iter().map(|a| intern(a, &mut table)).collect();
        own.sort_unstable();
        own.dedup();

        let mut forbidden = own.clone();
        for endpoint in [p.first_author(), p.last_author()] {
            let record = authors.get(endpoint).ok_or_else(|| {
                Error::UnknownAuthor(format!(
                    "{endpoint} (first/last author of paper `{}`)",
                    p.paper_id
                ))
            })?;
            for co in &record.coauthors {
                forbidden.push(intern(co, &mut table));
            }
        }
        forbidden.sort_unstable();
        forbidden.dedup();
        paper_author_keys.push(own);
        forbidden_keys.push(forbidden);
    }

    // Single-pass conjunctive edge filtering.
    let mut surviving: Vec<(u32, u32)> = Vec::new();
    for (src_id, dst_id) in &edges {
        let (Some(&u), Some(&v)) = (tmp_index.get(src_id.as_str()), tmp_index.get(dst_id.as_str()))
        else {
            continue; // endpoint lacked attributes and was dropped
        };
        let (pu, pv) = (&kept[u], &kept[v]);
        if pu.year < MIN_CITING_YEAR {
            continue; // (iv)
        }
        if pv.pub_date < years_before(pu.pub_date, CITATION_WINDOW_YEARS) {
            continue; // (i)
        }
        if sorted_intersects(&paper_author_keys[u], &paper_author_keys[v]) {
            // Self-citation. When the flag keeps these, rule (iii) must not
            // re-remove them (full-corpus coauthor sets always overlap a
            // shared author's own papers), so they bypass (iii) entirely.
            if !opts.include_self_citations {
                continue; // (ii)
            }
        } else if sorted_intersects(&forbidden_keys[u], &paper_author_keys[v]) {
            continue; // (iii)
        }
        surviving.push((u as u32, v as u32));
    }

    // Drop papers with zero remaining degree.
    let final_keep: Vec<bool> = if opts.keep_isolated {
        vec![true; kept.len()]
    } else {
        let mut deg = vec![0u32; kept.len()];
        for &(s, d) in &surviving {
            deg[s as usize] += 1;
            deg[d as usize] += 1;
        }
        deg.iter().map(|&d| d > 0).collect()
    };

    let mut remap = vec![u32::MAX; kept.len()];
    let mut final_papers = Vec::new();
    let mut final_author_keys = Vec::new();
    let mut final_forbidden = Vec::new();
    for (i, p) in kept.into_iter().enumerate() {
        if final_keep[i] {
            remap[i] = final_papers.len() as u32;
            final_papers.push(p);
            final_author_keys.push(std::mem::take(&mut paper_author_keys[i]));
            final_forbidden.push(std::mem::take(&mut forbidden_keys[i]));
        }
    }
    let mut final_edges: Vec<(u32, u32)> = surviving
        .into_iter()
        .map(|(s, d)| (remap[s as usize], remap[d as usize]))
        .collect();
    final_edges.sort_unstable();

    Ok(CitationNetwork::from_parts(
        final_papers,
        final_edges,
        final_author_keys,
        final_forbidden,
        table.len(),
    ))
}
