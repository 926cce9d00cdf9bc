//! File formats: papers and authors as JSON Lines, citations as headerless
//! CSV `src_paper_id,dst_paper_id`.

use super::{AuthorMap, AuthorRecord, Gender, PaperRecord};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Load papers from a JSON Lines file, one object per paper.
///
/// Blank lines are permitted. Duplicate `paper_id`s are rejected with the
/// line numbers of both occurrences.
pub fn load_papers(path: &Path) -> Result<Vec<PaperRecord>> {
    let reader = BufReader::new(open(path)?);
    let display = path.display().to_string();
    let mut papers = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let paper: PaperRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&display, lineno, e.to_string()))?;
        paper
            .validate()
            .map_err(|e| Error::parse(&display, lineno, e.to_string()))?;
        if let Some(&first_line) = seen.get(&paper.paper_id) {
            return Err(Error::DuplicatePaper { id: paper.paper_id, first_line, line: lineno });
        }
        seen.insert(paper.paper_id.clone(), lineno);
        papers.push(paper);
    }
    Ok(papers)
}

pub fn write_papers(path: &Path, papers: &[PaperRecord]) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    let display = path.display().to_string();
    for p in papers {
        let line = serde_json::to_string(p)
            .map_err(|e| Error::InvalidInput(format!("serialize paper: {e}")))?;
        writeln!(w, "{line}").map_err(|e| Error::io(&display, e))?;
    }
    w.flush().map_err(|e| Error::io(&display, e))
}

/// Rows dropped while loading a citations file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CitationLoadReport {
    pub kept: u64,
    /// Rows whose src or dst is not in the paper set.
    pub dropped_unknown: u64,
    /// Rows with src equal to dst.
    pub dropped_self_loop: u64,
    /// Exact repetitions of an earlier row.
    pub dropped_duplicate: u64,
}

/// Load citations restricted to a known paper set.
///
/// The file is headerless CSV with two columns. Rows referencing unknown
/// papers, degenerate self-loops, and exact duplicate rows are dropped and
/// counted rather than treated as errors: restricting citations to a paper
/// subset is a normal operation in this pipeline.
pub fn load_citations(
    path: &Path,
    known_ids: &HashSet<String>,
) -> Result<(Vec<(String, String)>, CitationLoadReport)> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .comment(Some(b'#'))
        .from_reader(BufReader::new(open(path)?));
    let mut edges = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut report = CitationLoadReport::default();
    for (i, row) in reader.records().enumerate() {
        let lineno = i as u64 + 1;
        let row = row.map_err(|e| Error::parse(&display, lineno, e.to_string()))?;
        if row.len() != 2 {
            return Err(Error::parse(&display, lineno, format!("expected 2 columns, got {}", row.len())));
        }
        let (src, dst) = (row[0].to_string(), row[1].to_string());
        if src == dst {
            report.dropped_self_loop += 1;
            continue;
        }
        if !known_ids.contains(&src) || !known_ids.contains(&dst) {
            report.dropped_unknown += 1;
            continue;
        }
        if !seen.insert((src.clone(), dst.clone())) {
            report.dropped_duplicate += 1;
            continue;
        }
        report.kept += 1;
        edges.push((src, dst));
    }
    Ok((edges, report))
}

pub fn write_citations(path: &Path, edges: &[(String, String)]) -> Result<()> {
    let display = path.display().to_string();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(create(path)?));
    for (src, dst) in edges {
        w.write_record([src, dst])
            .map_err(|e| Error::parse(&display, 0, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&display, e))
}

/// Scalar author fields as stored on disk. Prominence and coauthor sets are
/// always recomputed from the corpus, never ingested.
#[derive(Debug, Serialize, Deserialize)]
struct AuthorRow {
    author_id: String,
    full_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gender: Option<Gender>,
    first_pub_year: i32,
}

/// Load authors from a JSON Lines file of scalar fields.
pub fn load_authors(path: &Path) -> Result<AuthorMap> {
    let reader = BufReader::new(open(path)?);
    let display = path.display().to_string();
    let mut authors = AuthorMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row: AuthorRow = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&display, lineno, e.to_string()))?;
        let record =
            AuthorRecord::new(row.author_id, row.full_name, row.country, row.gender, row.first_pub_year);
        if authors.insert(record.author_id.clone(), record.clone()).is_some() {
            return Err(Error::parse(
                &display,
                lineno,
                format!("duplicate author id `{}`", record.author_id),
            ));
        }
    }
    Ok(authors)
}

pub fn write_authors(path: &Path, authors: &AuthorMap) -> Result<()> {
    let mut ids: Vec<&String> = authors.keys().collect();
    ids.sort();
    let mut w = BufWriter::new(create(path)?);
    let display = path.display().to_string();
    for id in ids {
        let a = &authors[id];
        let row = AuthorRow {
            author_id: a.author_id.clone(),
            full_name: a.full_name.clone(),
            country: a.country.clone(),
            gender: a.gender,
            first_pub_year: a.first_pub_year,
        };
        let line = serde_json::to_string(&row)
            .map_err(|e| Error::InvalidInput(format!("serialize author: {e}")))?;
        writeln!(w, "{line}").map_err(|e| Error::io(&display, e))?;
    }
    w.flush().map_err(|e| Error::io(&display, e))
}
