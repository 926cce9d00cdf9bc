//! Reference models for citation networks.
//!
//! All three models redraw the target of every citation while keeping its
//! source, so the number of citations made by each paper is preserved
//! exactly. The random-draws model constrains targets only by the
//! eligibility rules (ten-year window, no shared authors, no coauthor
//! overlap with the source's first/last author). The homophilic-draws model
//! additionally requires the replacement to share the original target's
//! country, topic, and venue rank. The preferential-draws model processes
//! papers in publication-date order and further requires the replacement to
//! sit in the same log-bin of citations accrued so far within the
//! randomized process, approximating preferential-attachment dynamics.
//!
//! Draws are uniform over the candidate set, with replacement; randomized
//! networks are multigraphs. Every draw derives deterministically from
//! (seed, edge index), so results do not depend on thread count.

mod index;

pub use index::{AttributeKey, CandidateIndex};

pub use crate::corpus::CITATION_WINDOW_YEARS;
use crate::corpus::CitationNetwork;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

/// Which reference model to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Random-draws: preserves citations made per paper.
    Rd,
    /// Homophilic-draws: additionally preserves citation homophily.
    Hd,
    /// Preferential-draws: additionally tracks accrued citations.
    Pd,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Rd, Model::Hd, Model::Pd];

    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Rd => "RD",
            Model::Hd => "HD",
            Model::Pd => "PD",
        }
    }

    pub fn parse(s: &str) -> Option<Model> {
        match s.to_ascii_lowercase().as_str() {
            "rd" => Some(Model::Rd),
            "hd" => Some(Model::Hd),
            "pd" => Some(Model::Pd),
            _ => None,
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Log-bin of an accrued citation count: floor(ln(c + 1)).
pub fn log_bin(c: u64) -> u32 {
    ((c + 1) as f64).ln().floor() as u32
}

/// Accrued citation counts of the preferential-draws process.
///
/// `counts[p]` is the number of citations paper `p` has received from the
/// papers processed in steps before `step`; placements made during the
/// current step become visible only when the step advances, matching the
/// snapshot the bin test is defined on.
#[derive(Debug, Clone)]
pub struct PdState {
    counts: Vec<u64>,
    step: usize,
}

impl PdState {
    pub fn new(n_papers: usize) -> PdState {
        PdState { counts: vec![0; n_papers], step: 0 }
    }

    /// Reconstruct a state at a given step, e.g. when replaying a trace.
    pub fn from_counts(counts: Vec<u64>, step: usize) -> PdState {
        PdState { counts, step }
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn count(&self, paper: u32) -> u64 {
        self.counts[paper as usize]
    }

    pub fn total_placed(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Advance to `step`, making `placements` drawn during earlier steps
    /// visible to the bin test.
    fn advance(&mut self, step: usize, placements: &mut Vec<u32>) {
        for &p in placements.iter() {
            self.counts[p as usize] += 1;
        }
        placements.clear();
        self.step = step;
    }
}

/// One rewiring decision, recorded when tracing is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawTrace {
    pub src: u32,
    pub orig_dst: u32,
    pub new_dst: u32,
    /// Log-bin of the original target's accrued count at draw time
    /// (always 0 for RD/HD, which carry no accrual state).
    pub bin_orig: u32,
    /// Log-bin of the drawn target's accrued count at draw time.
    pub bin_new: u32,
}

/// A randomized instance. Edges are index pairs aligned with the original
/// network's canonical edge order, so per-source out-degrees are identical
/// by construction. Multi-edges are permitted.
#[derive(Debug, Clone)]
pub struct RandomizedNetwork {
    pub edges: Vec<(u32, u32)>,
    pub model: Model,
    pub seed: u64,
    /// Edges kept unchanged because their candidate set was empty (possible
    /// only under RD, where the set does not force-include the original).
    pub fallback_count: u64,
}

impl RandomizedNetwork {
    /// In-degree sequence of the randomized instance.
    pub fn in_degrees(&self, n_papers: usize) -> Vec<u32> {
        let mut deg = vec![0u32; n_papers];
        for &(_, d) in &self.edges {
            deg[d as usize] += 1;
        }
        deg
    }
}

fn edge_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id reserved for the sequential preferential-draws pass.
const PD_STREAM: u64 = u64::MAX;

/// Generate one randomized network. Deterministic in (net, model, seed).
pub fn randomize(net: &CitationNetwork, model: Model, seed: u64) -> Result<RandomizedNetwork> {
    let idx = CandidateIndex::build(net)?;
    Ok(randomize_with_index(net, &idx, model, seed, None))
}

/// Like [`randomize`] but reusing a prebuilt index and optionally recording
/// a draw trace.
pub fn randomize_with_index(
    net: &CitationNetwork,
    idx: &CandidateIndex,
    model: Model,
    seed: u64,
    mut trace: Option<&mut Vec<DrawTrace>>,
) -> RandomizedNetwork {
    match model {
        Model::Rd | Model::Hd => {
            let fallbacks = AtomicU64::new(0);
            let orig = net.edges();
            let mut edges = vec![(0u32, 0u32); orig.len()];
            let collect_trace = trace.is_some();
            let traces: Vec<Option<DrawTrace>> = if collect_trace {
                let mut t = vec![None; orig.len()];
                rewire_independent(net, idx, model, seed, orig, &mut edges, &fallbacks, Some(&mut t));
                t
            } else {
                rewire_independent(net, idx, model, seed, orig, &mut edges, &fallbacks, None);
                Vec::new()
            };
            if let Some(out) = trace.as_deref_mut() {
                out.extend(traces.into_iter().flatten());
            }
            RandomizedNetwork {
                edges,
                model,
                seed,
                fallback_count: fallbacks.into_inner(),
            }
        }
        Model::Pd => randomize_pd(net, idx, seed, trace),
    }
}

#[allow(clippy::too_many_arguments)]
fn rewire_independent(
    net: &CitationNetwork,
    idx: &CandidateIndex,
    model: Model,
    seed: u64,
    orig: &[(u32, u32)],
    edges: &mut [(u32, u32)],
    fallbacks: &AtomicU64,
    traces: Option<&mut Vec<Option<DrawTrace>>>,
) {
    let draw = |e: usize| -> (u32, u32, u32) {
        let (src, dst) = orig[e];
        let mut rng = edge_rng(seed, e as u64);
        let new_dst = match model {
            Model::Rd => {
                let count = idx.rd_count(net, src);
                if count == 0 {
                    fallbacks.fetch_add(1, Ordering::Relaxed);
                    dst
                } else {
                    idx.rd_nth(net, src, rng.gen_range(0..count))
                }
            }
            Model::Hd => {
                let cands = idx.hd_candidates(net, src, dst);
                cands[rng.gen_range(0..cands.len())]
            }
            Model::Pd => unreachable!("PD is sequential"),
        };
        (src, dst, new_dst)
    };
    match traces {
        None => {
            edges.par_iter_mut().enumerate().for_each(|(e, slot)| {
                let (src, _, new_dst) = draw(e);
                *slot = (src, new_dst);
            });
        }
        Some(traces) => {
            edges
                .par_iter_mut()
                .zip(traces.par_iter_mut())
                .enumerate()
                .for_each(|(e, (slot, t))| {
                    let (src, dst, new_dst) = draw(e);
                    *slot = (src, new_dst);
                    *t = Some(DrawTrace { src, orig_dst: dst, new_dst, bin_orig: 0, bin_new: 0 });
                });
        }
    }
}

fn randomize_pd(
    net: &CitationNetwork,
    idx: &CandidateIndex,
    seed: u64,
    mut trace: Option<&mut Vec<DrawTrace>>,
) -> RandomizedNetwork {
    // The canonical edge order sorts by source index, and source index order
    // is (pub_date, paper_id) order, so a single pass over the edges visits
    // citing papers in ascending publication date.
    let mut rng = edge_rng(seed, PD_STREAM);
    let mut state = PdState::new(net.n());
    let mut pending: Vec<u32> = Vec::new();
    let mut edges = Vec::with_capacity(net.m());
    let mut current_src: Option<u32> = None;
    for &(src, dst) in net.edges() {
        if current_src != Some(src) {
            state.advance(src as usize, &mut pending);
            current_src = Some(src);
        }
        let cands = pd_candidates(net, idx, &state, src, dst);
        let new_dst = cands[rng.gen_range(0..cands.len())];
        if let Some(out) = trace.as_deref_mut() {
            out.push(DrawTrace {
                src,
                orig_dst: dst,
                new_dst,
                bin_orig: log_bin(state.count(dst)),
                bin_new: log_bin(state.count(new_dst)),
            });
        }
        edges.push((src, new_dst));
        pending.push(new_dst);
    }
    RandomizedNetwork { edges, model: Model::Pd, seed, fallback_count: 0 }
}

/// Preferential-draws candidates: homophilic candidates in the same log-bin
/// of accrued citations as the original target. Contains the original
/// target by construction.
fn pd_candidates(
    net: &CitationNetwork,
    idx: &CandidateIndex,
    state: &PdState,
    src: u32,
    orig_dst: u32,
) -> Vec<u32> {
    let target_bin = log_bin(state.count(orig_dst));
    idx.hd_candidates(net, src, orig_dst)
        .into_iter()
        .filter(|&p| log_bin(state.count(p)) == target_bin)
        .collect()
}

fn resolve(net: &CitationNetwork, paper_id: &str) -> Result<u32> {
    net.index_of(paper_id)
        .map(|i| i as u32)
        .ok_or_else(|| Error::UnknownPaper(paper_id.to_string()))
}

fn to_ids(net: &CitationNetwork, papers: impl IntoIterator<Item = u32>) -> BTreeSet<String> {
    papers.into_iter().map(|p| net.paper(p as usize).paper_id.clone()).collect()
}

/// Papers a given paper could cite under the random-draws model: at most
/// ten years older and no older than the source, sharing no author with it,
/// and sharing no author with the coauthors of its first or last author.
pub fn eligible_targets_rd(
    net: &CitationNetwork,
    idx: &CandidateIndex,
    paper_id: &str,
) -> Result<BTreeSet<String>> {
    let src = resolve(net, paper_id)?;
    Ok(to_ids(net, idx.rd_candidates(net, src)))
}

/// Homophilic-draws candidates for an original citation (src, dst).
pub fn eligible_targets_hd(
    net: &CitationNetwork,
    idx: &CandidateIndex,
    src_id: &str,
    dst_id: &str,
) -> Result<BTreeSet<String>> {
    let src = resolve(net, src_id)?;
    let dst = resolve(net, dst_id)?;
    Ok(to_ids(net, idx.hd_candidates(net, src, dst)))
}

/// Preferential-draws candidates for an original citation (src, dst) given
/// the accrued-count state.
pub fn eligible_targets_pd(
    net: &CitationNetwork,
    idx: &CandidateIndex,
    state: &PdState,
    src_id: &str,
    dst_id: &str,
) -> Result<BTreeSet<String>> {
    let src = resolve(net, src_id)?;
    let dst = resolve(net, dst_id)?;
    Ok(to_ids(net, pd_candidates(net, idx, state, src, dst)))
}

/// Run `n_replicates` independent randomizations, summarizing each one.
///
/// Replicate `r` uses seed `base_seed + r`. Replicates are independent and
/// may run in parallel; the returned summaries are in replicate order
/// regardless of worker count.
pub fn run_replicates<T, F>(
    net: &CitationNetwork,
    model: Model,
    n_replicates: u32,
    base_seed: u64,
    summarize: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&RandomizedNetwork) -> T + Sync,
{
    if n_replicates == 0 {
        return Err(Error::InvalidInput("n_replicates must be at least 1".into()));
    }
    let idx = CandidateIndex::build(net)?;
    Ok((0..n_replicates as u64)
        .into_par_iter()
        .map(|r| {
            let rn = randomize_with_index(net, &idx, model, base_seed.wrapping_add(r), None);
            summarize(&rn)
        })
        .collect())
}

#[cfg(test)]
mod tests;
