use crate::config::{config_hash, ConfigFile};
use crate::output::{Header, OutputSet, VERSION};
use crate::{Command, CommonArgs, CorpusArgs};
use anyhow::{bail, Context, Result};
use citegauge_core::corpus::{
    compute_prominence_and_coauthors, enrich_papers, filter_citations, load_authors,
    load_citations, load_papers, write_authors, write_citations, write_papers, AuthorMap,
    CitationNetwork, FilterOptions, GenderCategory,
};
use citegauge_core::harvest::{link_corpora, load_raw_records, write_link_report, Source};
use citegauge_core::imbalance::{
    analyze_detailed, AnalyzeOptions, GroupSpec, PaperFilter, Partition,
};
use citegauge_core::matching::{compare_populations, CompareOptions, ComparisonOutcome, Split};
use citegauge_core::nullmodels::{
    randomize_with_index, run_replicates, CandidateIndex, DrawTrace, Model,
};
use citegauge_core::synthgen::{generate, CitationCount, SynthConfig};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Link { a, b, common } => cmd_link(&a, &b, &common),
        Command::Build { corpus, common } => cmd_build(&corpus, &common),
        Command::Randomize { corpus, common, trace } => cmd_randomize(&corpus, &common, trace),
        Command::Analyze { corpus, common, from, to, partition } => {
            cmd_analyze(&corpus, &common, from, to, partition)
        }
        Command::Matchpairs { corpus, common, split, match_replicates } => {
            cmd_matchpairs(&corpus, &common, split, match_replicates)
        }
        Command::Synth {
            common,
            papers,
            years,
            countries,
            topics,
            citations_mean,
            citations_const,
            homophily,
            pa_exponent,
            bias,
            category_probs,
        } => cmd_synth(
            &common,
            papers,
            years,
            countries,
            topics,
            citations_mean,
            citations_const,
            homophily,
            pa_exponent,
            bias,
            category_probs,
        ),
        Command::Report { files } => cmd_report(&files),
    }
}

/// Shared options after applying precedence: CLI flag > config file >
/// default.
struct Resolved {
    file: ConfigFile,
    seed: u64,
    model: Model,
    replicates: u32,
    out: PathBuf,
    keep_isolated: bool,
    include_self_citations: bool,
    two_sided_p: bool,
}

impl Resolved {
    fn new(common: &CommonArgs) -> Result<Resolved> {
        let file = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        if let Some(workers) = common.workers.or(file.get_parsed("workers")?) {
            rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().ok();
        }
        let model_name = common
            .model
            .clone()
            .or_else(|| file.get("model").map(str::to_string))
            .unwrap_or_else(|| "pd".into());
        let Some(model) = Model::parse(&model_name) else {
            bail!("unknown model `{model_name}` (expected rd, hd, or pd)");
        };
        Ok(Resolved {
            seed: common.seed.or(file.get_parsed("seed")?).unwrap_or(1),
            model,
            replicates: common.replicates.or(file.get_parsed("replicates")?).unwrap_or(100),
            out: common.out.clone().or_else(|| file.get_path("out")).unwrap_or_else(|| "out".into()),
            keep_isolated: common.keep_isolated || file.get_bool("keep_isolated")?,
            include_self_citations: common.include_self_citations
                || file.get_bool("include_self_citations")?,
            two_sided_p: common.two_sided_p || file.get_bool("two_sided_p")?,
            file,
        })
    }

    fn filter_options(&self) -> FilterOptions {
        FilterOptions {
            keep_isolated: self.keep_isolated,
            include_self_citations: self.include_self_citations,
        }
    }

    fn corpus_paths(&self, corpus: &CorpusArgs) -> Result<(PathBuf, PathBuf, PathBuf)> {
        let dir = corpus.corpus_dir.clone().or_else(|| self.file.get_path("corpus_dir"));
        let from_dir = |name: &str| dir.as_ref().map(|d| d.join(name));
        let papers = corpus
            .papers
            .clone()
            .or_else(|| self.file.get_path("papers"))
            .or_else(|| from_dir("papers.jsonl"));
        let citations = corpus
            .citations
            .clone()
            .or_else(|| self.file.get_path("citations"))
            .or_else(|| from_dir("citations.csv"));
        let authors = corpus
            .authors
            .clone()
            .or_else(|| self.file.get_path("authors"))
            .or_else(|| from_dir("authors.jsonl"));
        match (papers, citations, authors) {
            (Some(p), Some(c), Some(a)) => Ok((p, c, a)),
            _ => bail!("corpus inputs missing: pass --corpus-dir or --papers/--citations/--authors"),
        }
    }

    fn header(&self, extra: &[(&str, String)]) -> Header {
        let mut entries: Vec<(&str, String)> = vec![
            ("model", self.model.to_string()),
            ("replicates", self.replicates.to_string()),
            ("seed", self.seed.to_string()),
            ("keep_isolated", self.keep_isolated.to_string()),
            ("include_self_citations", self.include_self_citations.to_string()),
            ("two_sided_p", self.two_sided_p.to_string()),
        ];
        entries.extend(extra.iter().cloned());
        entries.sort_by(|a, b| a.0.cmp(b.0));
        Header {
            config_hash: config_hash(&entries),
            seed: self.seed,
            model: self.model.to_string(),
        }
    }
}

/// Load, enrich, and filter a corpus into the analysis network. Static
/// author attributes come from the full input corpus, before filtering.
fn load_corpus(
    papers_path: &Path,
    citations_path: &Path,
    authors_path: &Path,
    opts: &FilterOptions,
) -> Result<(CitationNetwork, AuthorMap, Vec<citegauge_core::corpus::PaperRecord>, Vec<(String, String)>)>
{
    let mut papers = load_papers(papers_path)?;
    let mut authors = load_authors(authors_path)?;
    let known: HashSet<String> = papers.iter().map(|p| p.paper_id.clone()).collect();
    let (citations, _report) = load_citations(citations_path, &known)?;
    compute_prominence_and_coauthors(&papers, &citations, &mut authors);
    enrich_papers(&mut papers, &authors)?;
    let net = filter_citations(papers.clone(), citations.clone(), &authors, opts)?;
    Ok((net, authors, papers, citations))
}

fn fmt_f(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.6}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_else(|| "undefined".into())
}

fn cmd_link(a_path: &Path, b_path: &Path, common: &CommonArgs) -> Result<()> {
    let resolved = Resolved::new(common)?;
    let list_a = load_raw_records(a_path, Source::A)?;
    let list_b = load_raw_records(b_path, Source::B)?;
    let (_map, report) = link_corpora(&list_a, &list_b);
    let header = resolved.header(&[
        ("command", "link".into()),
        ("a", a_path.display().to_string()),
        ("b", b_path.display().to_string()),
    ]);
    let mut out = OutputSet::new(&resolved.out)?;
    let path = out.write_via("link_report.csv", &header, |p| write_link_report(p, &report))?;
    out.commit();
    println!(
        "linked {} records: {} matched, {} ambiguous, {} unmatched -> {}",
        list_a.len(),
        report.matched,
        report.ambiguous,
        report.unmatched,
        path.display()
    );
    Ok(())
}

fn cmd_build(corpus: &CorpusArgs, common: &CommonArgs) -> Result<()> {
    let resolved = Resolved::new(common)?;
    let (papers_path, citations_path, authors_path) = resolved.corpus_paths(corpus)?;
    let (net, authors, papers, citations) =
        load_corpus(&papers_path, &citations_path, &authors_path, &resolved.filter_options())?;
    let header = resolved.header(&[
        ("command", "build".into()),
        ("papers", papers_path.display().to_string()),
        ("citations", citations_path.display().to_string()),
        ("authors", authors_path.display().to_string()),
    ]);
    let mut out = OutputSet::new(&resolved.out)?;
    out.write_via("papers.jsonl", &header, |p| write_papers(p, &papers))?;
    out.write_via("citations.csv", &header, |p| write_citations(p, &citations))?;
    out.write_via("authors.jsonl", &header, |p| write_authors(p, &authors))?;

    let mut meta = String::new();
    let _ = writeln!(meta, "version: {VERSION}");
    let _ = writeln!(meta, "input_papers: {}", papers.len());
    let _ = writeln!(meta, "input_citations: {}", citations.len());
    let _ = writeln!(meta, "network_papers: {}", net.n());
    let _ = writeln!(meta, "network_citations: {}", net.m());
    for cat in GenderCategory::ALL {
        let count =
            net.papers().iter().filter(|p| p.gender_category == Some(cat)).count();
        let _ = writeln!(meta, "papers_{cat}: {count}");
    }
    out.write("build_meta.txt", &header, &meta)?;
    out.commit();
    println!(
        "built corpus: {} papers, {} citations -> {}",
        net.n(),
        net.m(),
        resolved.out.display()
    );
    Ok(())
}

fn cmd_randomize(corpus: &CorpusArgs, common: &CommonArgs, trace: bool) -> Result<()> {
    let resolved = Resolved::new(common)?;
    let (papers_path, citations_path, authors_path) = resolved.corpus_paths(corpus)?;
    let (net, _, _, _) =
        load_corpus(&papers_path, &citations_path, &authors_path, &resolved.filter_options())?;
    let header = resolved.header(&[
        ("command", "randomize".into()),
        ("papers", papers_path.display().to_string()),
    ]);

    let summaries = run_replicates(&net, resolved.model, resolved.replicates, resolved.seed, |rn| {
        (citegauge_core::imbalance::source_category_crosstab(&net, &rn.edges), rn.fallback_count)
    })?;
    let mut body = String::from("replicate,from_group,to_category,count\n");
    let mut fallbacks = 0u64;
    for (r, (rows, fb)) in summaries.iter().enumerate() {
        fallbacks += fb;
        for (from_group, to_category, count) in rows {
            let _ = writeln!(body, "{r},{from_group},{to_category},{count}");
        }
    }
    let mut out = OutputSet::new(&resolved.out)?;
    out.write("replicate_summary.csv", &header, &body)?;

    if trace {
        let idx = CandidateIndex::build(&net)?;
        let mut draws: Vec<DrawTrace> = Vec::new();
        randomize_with_index(&net, &idx, resolved.model, resolved.seed, Some(&mut draws));
        let mut tbody = String::from("replicate,src,orig_dst,new_dst,bin_orig,bin_new\n");
        for d in &draws {
            let _ = writeln!(
                tbody,
                "0,{},{},{},{},{}",
                net.paper(d.src as usize).paper_id,
                net.paper(d.orig_dst as usize).paper_id,
                net.paper(d.new_dst as usize).paper_id,
                d.bin_orig,
                d.bin_new
            );
        }
        out.write("draw_trace.csv", &header, &tbody)?;
    }

    let mut meta = String::new();
    let _ = writeln!(meta, "version: {VERSION}");
    let _ = writeln!(meta, "model: {}", resolved.model);
    let _ = writeln!(meta, "replicates: {}", resolved.replicates);
    let _ = writeln!(meta, "base_seed: {}", resolved.seed);
    let _ = writeln!(meta, "replicate_seeds: {}..{}", resolved.seed, resolved.seed as u128 + resolved.replicates as u128 - 1);
    let _ = writeln!(meta, "rng: chacha8, stream = edge index (sequential stream for pd)");
    let _ = writeln!(meta, "pd_tie_break: publication date, then paper id");
    let _ = writeln!(meta, "fallback_count: {fallbacks}");
    out.write("randomize_meta.txt", &header, &meta)?;
    out.commit();
    println!(
        "randomized {} replicates under {} ({} fallbacks) -> {}",
        resolved.replicates,
        resolved.model,
        fallbacks,
        resolved.out.display()
    );
    Ok(())
}

fn cmd_analyze(
    corpus: &CorpusArgs,
    common: &CommonArgs,
    from: Option<String>,
    to: Option<String>,
    partition: Option<String>,
) -> Result<()> {
    let resolved = Resolved::new(common)?;
    let (papers_path, citations_path, authors_path) = resolved.corpus_paths(corpus)?;
    let from = from
        .or_else(|| resolved.file.get("from").map(str::to_string))
        .unwrap_or_else(|| "all".into());
    let to = to
        .or_else(|| resolved.file.get("to").map(str::to_string))
        .unwrap_or_else(|| "all".into());
    let partition_name = partition
        .or_else(|| resolved.file.get("partition").map(str::to_string))
        .unwrap_or_else(|| "none".into());
    let Some(partition) = Partition::parse(&partition_name) else {
        bail!("unknown partition `{partition_name}`");
    };
    let spec = GroupSpec {
        from: PaperFilter::parse(&from)?,
        to: PaperFilter::parse(&to)?,
        partition,
    };
    let (net, _, _, _) =
        load_corpus(&papers_path, &citations_path, &authors_path, &resolved.filter_options())?;
    let opts = AnalyzeOptions { two_sided_p: resolved.two_sided_p };
    let (stats, fallbacks) =
        analyze_detailed(&net, resolved.model, &spec, resolved.replicates, resolved.seed, &opts)?;

    let header = resolved.header(&[
        ("command", "analyze".into()),
        ("papers", papers_path.display().to_string()),
        ("from", from.clone()),
        ("to", to.clone()),
        ("partition", partition_name.clone()),
    ]);
    let mut body =
        String::from("group,category,n_obs,mu,sigma,over_under_pct,z,p,significant\n");
    for s in &stats {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{}",
            s.group,
            s.category,
            s.n_obs,
            fmt_f(s.mu),
            fmt_f(s.sigma),
            fmt_opt(s.over_under.map(|v| v * 100.0)),
            fmt_opt(s.z),
            fmt_opt(s.p),
            s.significant
        );
    }
    let mut out = OutputSet::new(&resolved.out)?;
    out.write("imbalance_report.csv", &header, &body)?;

    let mut meta = String::new();
    let _ = writeln!(meta, "version: {VERSION}");
    let _ = writeln!(meta, "model: {}", resolved.model);
    let _ = writeln!(meta, "replicates: {}", resolved.replicates);
    let _ = writeln!(meta, "base_seed: {}", resolved.seed);
    let _ = writeln!(meta, "replicate_seeds: {}..{}", resolved.seed, resolved.seed as u128 + resolved.replicates as u128 - 1);
    let _ = writeln!(meta, "fallback_count: {fallbacks}");
    let _ = writeln!(meta, "from: {from}");
    let _ = writeln!(meta, "to: {to}");
    let _ = writeln!(meta, "partition: {partition_name}");
    let _ = writeln!(meta, "p_values: {}", if resolved.two_sided_p { "two-sided" } else { "one-sided" });
    out.write("analyze_meta.txt", &header, &meta)?;
    out.commit();

    let significant = stats.iter().filter(|s| s.significant).count();
    println!(
        "analyzed {} group-category cells ({} significant) -> {}",
        stats.len(),
        significant,
        resolved.out.display()
    );
    Ok(())
}

fn cmd_matchpairs(
    corpus: &CorpusArgs,
    common: &CommonArgs,
    split: Option<String>,
    match_replicates: Option<u32>,
) -> Result<()> {
    let resolved = Resolved::new(common)?;
    let (papers_path, citations_path, authors_path) = resolved.corpus_paths(corpus)?;
    let split_name = split
        .or_else(|| resolved.file.get("split").map(str::to_string))
        .unwrap_or_else(|| "gender_MM_vs_WW".into());
    let Some(split) = Split::parse(&split_name) else {
        bail!("unknown split `{split_name}`");
    };
    let match_replicates = match_replicates
        .or(resolved.file.get_parsed("match_replicates")?)
        .unwrap_or(resolved.replicates);
    let (net, authors, _, _) =
        load_corpus(&papers_path, &citations_path, &authors_path, &resolved.filter_options())?;
    let opts = CompareOptions {
        null_replicates: resolved.replicates,
        match_replicates,
        prominence_percentile: 0.01,
    };
    let rows = compare_populations(&net, &authors, resolved.model, split, resolved.seed, &opts)?;

    let header = resolved.header(&[
        ("command", "matchpairs".into()),
        ("papers", papers_path.display().to_string()),
        ("split", split.as_str().into()),
        ("match_replicates", match_replicates.to_string()),
    ]);
    let mut body = String::from(
        "split,population,category,delta_pct,delta_ref_pct,delta_ref_std,t,p,reject\n",
    );
    for r in &rows {
        match &r.outcome {
            ComparisonOutcome::Tested { delta_pct, delta_ref_pct, delta_ref_std, t, p, reject } => {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{},{},{},{}",
                    r.split,
                    r.population,
                    r.category,
                    fmt_f(*delta_pct),
                    fmt_f(*delta_ref_pct),
                    fmt_f(*delta_ref_std),
                    fmt_f(*t),
                    fmt_f(*p),
                    reject
                );
            }
            ComparisonOutcome::InsufficientData => {
                let _ = writeln!(
                    body,
                    "{},{},{},,,,,,insufficient_data",
                    r.split, r.population, r.category
                );
            }
        }
    }
    let mut out = OutputSet::new(&resolved.out)?;
    out.write("comparison_report.csv", &header, &body)?;

    let mut meta = String::new();
    let _ = writeln!(meta, "version: {VERSION}");
    let _ = writeln!(meta, "model: {}", resolved.model);
    let _ = writeln!(meta, "null_replicates: {}", resolved.replicates);
    let _ = writeln!(meta, "match_replicates: {match_replicates}");
    let _ = writeln!(meta, "base_seed: {}", resolved.seed);
    let _ = writeln!(meta, "split: {split}");
    out.write("matchpairs_meta.txt", &header, &meta)?;
    out.commit();

    let rejects = rows
        .iter()
        .filter(|r| matches!(r.outcome, ComparisonOutcome::Tested { reject: true, .. }))
        .count();
    println!(
        "matched-pair split {split}: {} rows, {} rejections -> {}",
        rows.len(),
        rejects,
        resolved.out.display()
    );
    Ok(())
}

fn parse_bias(s: &str) -> Result<[f64; 4]> {
    let mut bias = [1.0f64; 4];
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((cat, value)) = part.split_once('=') else {
            bail!("bad bias entry `{part}` (expected CATEGORY=MULTIPLIER)");
        };
        let Some(category) = GenderCategory::parse(cat.trim()) else {
            bail!("bad bias category `{cat}`");
        };
        bias[category as usize] =
            value.trim().parse().with_context(|| format!("bad bias value `{value}`"))?;
    }
    Ok(bias)
}

fn parse_probs(s: &str) -> Result<[f64; 4]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        bail!("expected 4 comma-separated probabilities (MM,MW,WM,WW)");
    }
    let mut out = [0.0f64; 4];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p.parse().with_context(|| format!("bad probability `{p}`"))?;
    }
    Ok(out)
}

fn parse_years(s: &str) -> Result<(i32, i32)> {
    let Some((lo, hi)) = s.split_once("..") else {
        bail!("bad year range `{s}` (expected START..END)");
    };
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    common: &CommonArgs,
    papers: Option<usize>,
    years: Option<String>,
    countries: Option<usize>,
    topics: Option<usize>,
    citations_mean: Option<f64>,
    citations_const: Option<u32>,
    homophily: Option<f64>,
    pa_exponent: Option<f64>,
    bias: Option<String>,
    category_probs: Option<String>,
) -> Result<()> {
    let resolved = Resolved::new(common)?;
    let defaults = SynthConfig::default();
    let config = SynthConfig {
        n_papers: papers.unwrap_or(defaults.n_papers),
        years: years.as_deref().map(parse_years).transpose()?.unwrap_or(defaults.years),
        gender_category_probs: category_probs
            .as_deref()
            .map(parse_probs)
            .transpose()?
            .unwrap_or(defaults.gender_category_probs),
        n_countries: countries.unwrap_or(defaults.n_countries),
        n_topics: topics.unwrap_or(defaults.n_topics),
        rank_probs: defaults.rank_probs,
        citations_per_paper: match (citations_const, citations_mean) {
            (Some(k), _) => CitationCount::Constant(k),
            (None, Some(m)) => CitationCount::Poisson(m),
            (None, None) => defaults.citations_per_paper,
        },
        homophily_strength: homophily.unwrap_or(defaults.homophily_strength),
        pa_exponent: pa_exponent.unwrap_or(defaults.pa_exponent),
        planted_bias: bias.as_deref().map(parse_bias).transpose()?.unwrap_or(defaults.planted_bias),
        seed: resolved.seed,
    };
    let corpus = generate(&config)?;
    let header = resolved.header(&[
        ("command", "synth".into()),
        ("n_papers", config.n_papers.to_string()),
        ("years", format!("{}..{}", config.years.0, config.years.1)),
        ("homophily", config.homophily_strength.to_string()),
        ("pa_exponent", config.pa_exponent.to_string()),
        ("bias", format!("{:?}", config.planted_bias)),
    ]);
    let mut out = OutputSet::new(&resolved.out)?;
    out.write_via("papers.jsonl", &header, |p| write_papers(p, &corpus.papers))?;
    out.write_via("citations.csv", &header, |p| write_citations(p, &corpus.citations))?;
    out.write_via("authors.jsonl", &header, |p| write_authors(p, &corpus.authors))?;
    let mut meta = String::new();
    let _ = writeln!(meta, "version: {VERSION}");
    let _ = writeln!(meta, "papers: {}", corpus.papers.len());
    let _ = writeln!(meta, "citations: {}", corpus.citations.len());
    let _ = writeln!(meta, "authors: {}", corpus.authors.len());
    let _ = writeln!(meta, "seed: {}", config.seed);
    out.write("synth_meta.txt", &header, &meta)?;
    out.commit();
    println!(
        "generated {} papers, {} citations -> {}",
        corpus.papers.len(),
        corpus.citations.len(),
        resolved.out.display()
    );
    Ok(())
}

fn cmd_report(files: &[PathBuf]) -> Result<()> {
    if files.is_empty() {
        bail!("report needs at least one CSV produced by analyze or matchpairs");
    }
    for path in files {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let Some(header) = lines.next() else {
            println!("{}: empty", path.display());
            continue;
        };
        println!("== {}", path.display());
        if header.starts_with("group,") {
            let mut total = 0;
            let mut significant: Vec<(f64, String)> = Vec::new();
            for line in lines {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 9 {
                    continue;
                }
                total += 1;
                if cols[8] == "true" {
                    let z: f64 = cols[6].parse().unwrap_or(0.0);
                    significant.push((
                        z.abs(),
                        format!(
                            "  {}/{}: over/under {}%, z = {}",
                            cols[0], cols[1], cols[5], cols[6]
                        ),
                    ));
                }
            }
            significant.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            println!("{} cells, {} significant at |z| > 3.09", total, significant.len());
            for (_, line) in significant.iter().take(12) {
                println!("{line}");
            }
        } else if header.starts_with("split,") {
            for line in lines {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 9 {
                    continue;
                }
                match cols[8] {
                    "true" => println!(
                        "  {} {} -> {}: delta {}% vs ref {}% (t = {}, rejected)",
                        cols[0], cols[1], cols[2], cols[3], cols[4], cols[6]
                    ),
                    "insufficient_data" => {
                        println!("  {} {} -> {}: insufficient data", cols[0], cols[1], cols[2])
                    }
                    _ => {}
                }
            }
        } else {
            println!("  unrecognized report type");
        }
    }
    Ok(())
}
