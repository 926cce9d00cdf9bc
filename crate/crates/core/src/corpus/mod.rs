//! Corpus ingestion, enrichment, and filtering into an analysis-ready
//! citation network.
//!
//! The pipeline is: load papers/citations/authors, compute author prominence
//! and coauthor sets on the full linked corpus, derive each paper's country
//! and gender category from its first and last authors, then filter the
//! citations and drop papers that end up isolated. The resulting
//! [`CitationNetwork`] is immutable and safe to share across threads.

mod enrich;
mod filter;
mod load;

pub use enrich::{
    assign_country, assign_gender_category, compute_prominence_and_coauthors,
    derive_paper_country, enrich_papers,
};
pub use filter::{
    filter_citations, years_before, FilterOptions, CITATION_WINDOW_YEARS, MIN_CITING_YEAR,
};
pub use load::{
    load_authors, load_citations, load_papers, write_authors, write_citations, write_papers,
    CitationLoadReport,
};

use crate::error::{Error, Result};
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Gender category of a paper, from the genders of its first and last
/// authors. Sole-authored papers collapse to MM or WW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenderCategory {
    MM,
    MW,
    WM,
    WW,
}

impl GenderCategory {
    pub const ALL: [GenderCategory; 4] =
        [GenderCategory::MM, GenderCategory::MW, GenderCategory::WM, GenderCategory::WW];

    pub fn as_str(&self) -> &'static str {
        match self {
            GenderCategory::MM => "MM",
            GenderCategory::MW => "MW",
            GenderCategory::WM => "WM",
            GenderCategory::WW => "WW",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "MM" => Some(GenderCategory::MM),
            "MW" => Some(GenderCategory::MW),
            "WM" => Some(GenderCategory::WM),
            "WW" => Some(GenderCategory::WW),
            _ => None,
        }
    }
}

impl fmt::Display for GenderCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary gender label assigned to an author by the lookup pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VenueType {
    Conference,
    Journal,
}

impl fmt::Display for VenueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VenueType::Conference => "conference",
            VenueType::Journal => "journal",
        })
    }
}

/// CORE tier for conferences, SJR quartile for journals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VenueRank {
    #[serde(rename = "A*")]
    AStar,
    A,
    B,
    C,
    Q1,
    Q2,
    Q3,
    Q4,
}

impl VenueRank {
    pub const ALL: [VenueRank; 8] = [
        VenueRank::AStar,
        VenueRank::A,
        VenueRank::B,
        VenueRank::C,
        VenueRank::Q1,
        VenueRank::Q2,
        VenueRank::Q3,
        VenueRank::Q4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            VenueRank::AStar => "A*",
            VenueRank::A => "A",
            VenueRank::B => "B",
            VenueRank::C => "C",
            VenueRank::Q1 => "Q1",
            VenueRank::Q2 => "Q2",
            VenueRank::Q3 => "Q3",
            VenueRank::Q4 => "Q4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|r| r.as_str() == s)
    }

    pub fn is_conference(&self) -> bool {
        matches!(self, VenueRank::AStar | VenueRank::A | VenueRank::B | VenueRank::C)
    }
}

impl fmt::Display for VenueRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One publication with its enriched metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    pub pub_date: NaiveDate,
    pub year: i32,
    pub venue_id: String,
    pub venue_type: VenueType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue_rank: Option<VenueRank>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    pub topic_id: String,
    pub subfield_id: String,
    pub author_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender_category: Option<GenderCategory>,
}

impl PaperRecord {
    pub fn first_author(&self) -> &str {
        &self.author_ids[0]
    }

    pub fn last_author(&self) -> &str {
        self.author_ids.last().expect("author_ids non-empty")
    }

    fn validate(&self) -> Result<()> {
        if self.author_ids.is_empty() {
            return Err(Error::InvalidInput(format!(
                "paper `{}` has no authors",
                self.paper_id
            )));
        }
        if self.year != self.pub_date.year() {
            return Err(Error::InvalidInput(format!(
                "paper `{}`: year {} does not match pub_date {}",
                self.paper_id, self.year, self.pub_date
            )));
        }
        Ok(())
    }
}

/// One author with attributes computed on the full linked corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorRecord {
    pub author_id: String,
    pub full_name: String,
    pub country: Option<String>,
    pub gender: Option<Gender>,
    pub first_pub_year: i32,
    /// Total citations received by this author's papers (static attribute).
    pub prominence: u64,
    /// Authors who co-wrote at least one paper with this author; never
    /// contains the author itself.
    pub coauthors: std::collections::BTreeSet<String>,
}

impl AuthorRecord {
    pub fn new(
        author_id: impl Into<String>,
        full_name: impl Into<String>,
        country: Option<String>,
        gender: Option<Gender>,
        first_pub_year: i32,
    ) -> Self {
        AuthorRecord {
            author_id: author_id.into(),
            full_name: full_name.into(),
            country,
            gender,
            first_pub_year,
            prominence: 0,
            coauthors: Default::default(),
        }
    }
}

/// Author records keyed by author id.
pub type AuthorMap = HashMap<String, AuthorRecord>;

/// A directed citation from `src` to `dst`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CitationEdge {
    pub src: String,
    pub dst: String,
}

/// Immutable filtered citation network.
///
/// Papers are interned to dense indices ordered by (pub_date, paper_id),
/// which is exactly the processing order the preferential-draws model needs.
/// Edges hold interned endpoints and are canonically sorted, so downstream
/// randomization does not depend on input file row order.
#[derive(Debug, Clone)]
pub struct CitationNetwork {
    papers: Vec<PaperRecord>,
    index_of: HashMap<String, usize>,
    edges: Vec<(u32, u32)>,
    out_degree: Vec<u32>,
    in_degree: Vec<u32>,
    /// Interned author ids of each paper, sorted.
    paper_authors: Vec<Vec<u32>>,
    /// Per paper: own authors plus the coauthors of its first and last
    /// authors (interned, sorted). A citation (u, v) is a conflict whenever
    /// this set for u intersects v's authors.
    forbidden_authors: Vec<Vec<u32>>,
    author_count: usize,
}

impl CitationNetwork {
    pub(crate) fn from_parts(
        papers: Vec<PaperRecord>,
        edges: Vec<(u32, u32)>,
        paper_authors: Vec<Vec<u32>>,
        forbidden_authors: Vec<Vec<u32>>,
        author_count: usize,
    ) -> Self {
        let index_of =
            papers.iter().enumerate().map(|(i, p)| (p.paper_id.clone(), i)).collect();
        let mut out_degree = vec![0u32; papers.len()];
        let mut in_degree = vec![0u32; papers.len()];
        for &(s, d) in &edges {
            out_degree[s as usize] += 1;
            in_degree[d as usize] += 1;
        }
        CitationNetwork {
            papers,
            index_of,
            edges,
            out_degree,
            in_degree,
            paper_authors,
            forbidden_authors,
            author_count,
        }
    }

    /// Number of papers.
    pub fn n(&self) -> usize {
        self.papers.len()
    }

    /// Number of citations.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Papers in (pub_date, paper_id) order.
    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn paper(&self, idx: usize) -> &PaperRecord {
        &self.papers[idx]
    }

    pub fn index_of(&self, paper_id: &str) -> Option<usize> {
        self.index_of.get(paper_id).copied()
    }

    pub fn paper_by_id(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.index_of(paper_id).map(|i| &self.papers[i])
    }

    /// Canonically ordered citation edges as interned index pairs.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Citation edges as id pairs, in canonical order.
    pub fn edge_ids(&self) -> impl Iterator<Item = CitationEdge> + '_ {
        self.edges.iter().map(|&(s, d)| CitationEdge {
            src: self.papers[s as usize].paper_id.clone(),
            dst: self.papers[d as usize].paper_id.clone(),
        })
    }

    pub fn out_degree(&self, idx: usize) -> u32 {
        self.out_degree[idx]
    }

    pub fn in_degree(&self, idx: usize) -> u32 {
        self.in_degree[idx]
    }

    pub fn out_degree_of(&self, paper_id: &str) -> Result<u32> {
        self.index_of(paper_id)
            .map(|i| self.out_degree[i])
            .ok_or_else(|| Error::UnknownPaper(paper_id.into()))
    }

    pub fn in_degree_of(&self, paper_id: &str) -> Result<u32> {
        self.index_of(paper_id)
            .map(|i| self.in_degree[i])
            .ok_or_else(|| Error::UnknownPaper(paper_id.into()))
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_degree
    }

    /// Interned author ids of a paper, sorted ascending.
    pub fn paper_author_keys(&self, idx: usize) -> &[u32] {
        &self.paper_authors[idx]
    }

    /// Interned ids of the paper's authors plus the coauthors of its first
    /// and last authors, sorted ascending.
    pub fn forbidden_author_keys(&self, idx: usize) -> &[u32] {
        &self.forbidden_authors[idx]
    }

    pub fn author_key_count(&self) -> usize {
        self.author_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn venue_rank_round_trip() {
        for r in VenueRank::ALL {
            assert_eq!(VenueRank::parse(r.as_str()), Some(r));
        }
        let json = serde_json::to_string(&VenueRank::AStar).unwrap();
        assert_eq!(json, "\"A*\"");
        assert_eq!(serde_json::from_str::<VenueRank>("\"Q3\"").unwrap(), VenueRank::Q3);
    }

    #[test]
    fn gender_category_parse() {
        assert_eq!(GenderCategory::parse("WM"), Some(GenderCategory::WM));
        assert_eq!(GenderCategory::parse("XX"), None);
    }
}
