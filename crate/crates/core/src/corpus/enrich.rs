//! Author and paper enrichment: country assignment, prominence and coauthor
//! computation, and paper-level gender categories.

use super::{AuthorMap, Gender, GenderCategory, PaperRecord};
use crate::error::{Error, Result};
use std::collections::HashMap;

/// Most frequent country among an author's publication affiliations, if the
/// maximum is unique. Ties and empty input yield `None`.
pub fn assign_country<S: AsRef<str>>(affiliation_countries: &[S]) -> Option<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for c in affiliation_countries {
        *counts.entry(c.as_ref()).or_insert(0) += 1;
    }
    let best = counts.values().copied().max()?;
    let mut at_best = counts.iter().filter(|(_, &n)| n == best);
    let (country, _) = at_best.next()?;
    if at_best.next().is_some() {
        None
    } else {
        Some((*country).to_string())
    }
}

/// Compute author prominence (total citations received by the author's
/// papers) and coauthor sets on the full linked corpus, before any
/// filtering. Both are static attributes. Author ids appearing in papers but
/// absent from `authors` are left alone; such papers simply fail downstream
/// category assignment.
pub fn compute_prominence_and_coauthors(
    papers: &[PaperRecord],
    edges: &[(String, String)],
    authors: &mut AuthorMap,
) {
    for a in authors.values_mut() {
        a.prominence = 0;
        a.coauthors.clear();
    }
    let mut in_count: HashMap<&str, u64> = HashMap::new();
    for (_, dst) in edges {
        *in_count.entry(dst.as_str()).or_insert(0) += 1;
    }
    for paper in papers {
        let received = in_count.get(paper.paper_id.as_str()).copied().unwrap_or(0);
        for id in &paper.author_ids {
            if let Some(a) = authors.get_mut(id) {
                a.prominence += received;
                for other in &paper.author_ids {
                    if other != id {
                        a.coauthors.insert(other.clone());
                    }
                }
            }
        }
    }
}

/// Gender category of a paper from the genders of its first and last
/// authors.
///
/// Sole-authored papers map directly from the author's gender. Multi-author
/// papers get a category only when the first and last authors both have
/// genders and share the same assigned country; otherwise `None`.
pub fn assign_gender_category(
    paper: &PaperRecord,
    authors: &AuthorMap,
) -> Result<Option<GenderCategory>> {
    let lookup = |id: &str| -> Result<&super::AuthorRecord> {
        authors.get(id).ok_or_else(|| Error::UnknownAuthor(id.to_string()))
    };
    let first = lookup(paper.first_author())?;
    if paper.author_ids.len() == 1 {
        return Ok(first.gender.map(|g| match g {
            Gender::Male => GenderCategory::MM,
            Gender::Female => GenderCategory::WW,
        }));
    }
    let last = lookup(paper.last_author())?;
    let (Some(fg), Some(lg)) = (first.gender, last.gender) else {
        return Ok(None);
    };
    match (&first.country, &last.country) {
        (Some(fc), Some(lc)) if fc == lc => {}
        _ => return Ok(None),
    }
    Ok(Some(match (fg, lg) {
        (Gender::Male, Gender::Male) => GenderCategory::MM,
        (Gender::Male, Gender::Female) => GenderCategory::MW,
        (Gender::Female, Gender::Male) => GenderCategory::WM,
        (Gender::Female, Gender::Female) => GenderCategory::WW,
    }))
}

/// Country of affiliation of a paper: its single author's country, or the
/// shared country of its first and last authors.
pub fn derive_paper_country(paper: &PaperRecord, authors: &AuthorMap) -> Result<Option<String>> {
    let lookup = |id: &str| -> Result<&super::AuthorRecord> {
        authors.get(id).ok_or_else(|| Error::UnknownAuthor(id.to_string()))
    };
    let first = lookup(paper.first_author())?;
    if paper.author_ids.len() == 1 {
        return Ok(first.country.clone());
    }
    let last = lookup(paper.last_author())?;
    Ok(match (&first.country, &last.country) {
        (Some(fc), Some(lc)) if fc == lc => Some(fc.clone()),
        _ => None,
    })
}

/// Derive country and gender category for every paper, overwriting any
/// ingested values. Fails on author ids that do not resolve.
pub fn enrich_papers(papers: &mut [PaperRecord], authors: &AuthorMap) -> Result<()> {
    for paper in papers.iter_mut() {
        paper.country = derive_paper_country(paper, authors)?;
        paper.gender_category = assign_gender_category(paper, authors)?;
    }
    Ok(())
}
