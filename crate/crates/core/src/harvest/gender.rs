//! First-name extraction and threshold-based gender assignment over a
//! pluggable lookup provider.

use crate::corpus::Gender;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::BufReader;
use std::path::Path;
use unicode_normalization::UnicodeNormalization;

/// Label returned by a gender lookup provider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Female,
    Male,
    Unknown,
}

/// One provider response for a first-name candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenderLookupResult {
    pub label: Label,
    /// Percentage in [0, 100].
    pub accuracy: f64,
    pub samples: u64,
}

impl GenderLookupResult {
    pub fn unknown() -> Self {
        GenderLookupResult { label: Label::Unknown, accuracy: 0.0, samples: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GenderQuery {
    pub first_name: String,
    pub country: String,
}

/// Synchronous, batched gender lookup.
///
/// Implementations must either tolerate concurrent batched calls or declare
/// themselves serial via [`GenderProvider::is_serial`].
pub trait GenderProvider: Sync {
    fn lookup_batch(&self, queries: &[GenderQuery]) -> Result<Vec<GenderLookupResult>>;

    fn is_serial(&self) -> bool {
        false
    }
}

/// Countries whose naming conventions put the family name last in the
/// romanized form, producing multi-token first-name candidates.
const MULTI_TOKEN_FIRST_NAME_COUNTRIES: [&str; 3] = ["CN", "JP", "KR"];

/// First-name candidates for a full name under the conventions of the
/// author's country of affiliation.
///
/// For China, Japan, and South Korea, a name of k space-separated words
/// `w_1 .. w_k` yields the k-1 candidates `w_1`, `w_1 w_2`, ...,
/// `w_1 .. w_{k-1}`; a single-token name yields none. For every other
/// country, the single candidate is the first word.
pub fn first_name_candidates(full_name: &str, country: &str) -> Vec<String> {
    let tokens: Vec<&str> = full_name.split_whitespace().collect();
    if tokens.is_empty() {
        return Vec::new();
    }
    if MULTI_TOKEN_FIRST_NAME_COUNTRIES.contains(&country) {
        (1..tokens.len()).map(|k| tokens[..k].join(" ")).collect()
    } else {
        vec![tokens[0].to_string()]
    }
}

/// Minimum accuracy and sample size for accepting a provider result, keyed
/// by country group and first-publication-year band.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRule {
    /// `None` matches any country.
    pub countries: Option<Vec<String>>,
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
    pub min_accuracy: f64,
    pub min_samples: u64,
}

impl ThresholdRule {
    fn matches(&self, country: &str, year: i32) -> bool {
        if let Some(cs) = &self.countries {
            if !cs.iter().any(|c| c == country) {
                return false;
            }
        }
        if let Some(lo) = self.year_min {
            if year < lo {
                return false;
            }
        }
        if let Some(hi) = self.year_max {
            if year > hi {
                return false;
            }
        }
        true
    }
}

/// Ordered threshold rules; the first rule matching (country, year) applies.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pub rules: Vec<ThresholdRule>,
}

impl Default for ThresholdTable {
    /// A single global row: accuracy >= 90, samples >= 10.
    fn default() -> Self {
        ThresholdTable {
            rules: vec![ThresholdRule {
                countries: None,
                year_min: None,
                year_max: None,
                min_accuracy: 90.0,
                min_samples: 10,
            }],
        }
    }
}

impl ThresholdTable {
    /// Thresholds applying to an author; falls back to the global default
    /// when no rule matches.
    pub fn resolve(&self, country: &str, first_pub_year: i32) -> (f64, u64) {
        for rule in &self.rules {
            if rule.matches(country, first_pub_year) {
                return (rule.min_accuracy, rule.min_samples);
            }
        }
        (90.0, 10)
    }

    /// Load from CSV `countries,year_min,year_max,min_accuracy,min_samples`
    /// where `countries` is `*` or a `|`-separated list and year bounds may
    /// be empty.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|e| Error::io(&display, e))?;
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(BufReader::new(file));
        let mut rules = Vec::new();
        for (i, row) in r.records().enumerate() {
            let lineno = i as u64 + 2;
            let row = row.map_err(|e| Error::parse(&display, lineno, e.to_string()))?;
            if row.len() != 5 {
                return Err(Error::parse(&display, lineno, "expected 5 columns"));
            }
            let countries = match &row[0] {
                "*" | "" => None,
                list => Some(list.split('|').map(str::to_string).collect()),
            };
            let parse_year = |s: &str| -> Result<Option<i32>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|e| {
                        Error::parse(&display, lineno, format!("bad year `{s}`: {e}"))
                    })
                }
            };
            rules.push(ThresholdRule {
                countries,
                year_min: parse_year(&row[1])?,
                year_max: parse_year(&row[2])?,
                min_accuracy: row[3]
                    .parse()
                    .map_err(|e| Error::parse(&display, lineno, format!("bad accuracy: {e}")))?,
                min_samples: row[4]
                    .parse()
                    .map_err(|e| Error::parse(&display, lineno, format!("bad samples: {e}")))?,
            });
        }
        Ok(ThresholdTable { rules })
    }
}

/// Assign a binary gender from provider results for the candidates.
///
/// Results below the resolved accuracy/sample thresholds are discarded.
/// The highest surviving female-classified accuracy is compared with the
/// highest surviving male-classified one; the higher side wins. Equal
/// maxima, or no surviving result on either side, assign nothing.
pub fn assign_gender(
    candidates: &[String],
    country: &str,
    first_pub_year: i32,
    provider: &dyn GenderProvider,
    thresholds: &ThresholdTable,
) -> Result<Option<Gender>> {
    if candidates.is_empty() {
        return Ok(None);
    }
    let queries: Vec<GenderQuery> = candidates
        .iter()
        .map(|c| GenderQuery { first_name: c.clone(), country: country.to_string() })
        .collect();
    let results = provider.lookup_batch(&queries)?;
    if results.len() != queries.len() {
        return Err(Error::Provider {
            candidate: candidates[0].clone(),
            msg: format!("provider returned {} results for {} queries", results.len(), queries.len()),
        });
    }
    let (min_accuracy, min_samples) = thresholds.resolve(country, first_pub_year);
    let mut best_female: Option<f64> = None;
    let mut best_male: Option<f64> = None;
    for r in &results {
        if r.accuracy < min_accuracy || r.samples < min_samples {
            continue;
        }
        match r.label {
            Label::Female => {
                best_female = Some(best_female.map_or(r.accuracy, |b: f64| b.max(r.accuracy)))
            }
            Label::Male => {
                best_male = Some(best_male.map_or(r.accuracy, |b: f64| b.max(r.accuracy)))
            }
            Label::Unknown => {}
        }
    }
    Ok(match (best_female, best_male) {
        (Some(f), Some(m)) if f > m => Some(Gender::Female),
        (Some(f), Some(m)) if m > f => Some(Gender::Male),
        (Some(_), Some(_)) => None,
        (Some(_), None) => Some(Gender::Female),
        (None, Some(_)) => Some(Gender::Male),
        (None, None) => None,
    })
}

/// Offline gender dictionary backed by a CSV file
/// `first_name,country,label,accuracy,samples` with a case-insensitive name
/// key. A row with country `*` (or empty) answers queries for any country
/// lacking an exact (name, country) row. Missing names answer `unknown`.
#[derive(Debug, Clone, Default)]
pub struct DictProvider {
    exact: HashMap<(String, String), GenderLookupResult>,
    any_country: HashMap<String, GenderLookupResult>,
}

fn name_key(name: &str) -> String {
    name.nfc().flat_map(char::to_lowercase).collect()
}

impl DictProvider {
    pub fn from_csv(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|e| Error::io(&display, e))?;
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(BufReader::new(file));
        let mut provider = DictProvider::default();
        for (i, row) in r.records().enumerate() {
            let lineno = i as u64 + 2;
            let row = row.map_err(|e| Error::parse(&display, lineno, e.to_string()))?;
            if row.len() != 5 {
                return Err(Error::parse(&display, lineno, "expected 5 columns"));
            }
            let label = match &row[2] {
                "female" => Label::Female,
                "male" => Label::Male,
                "unknown" => Label::Unknown,
                other => {
                    return Err(Error::parse(&display, lineno, format!("bad label `{other}`")))
                }
            };
            let accuracy: f64 = row[3]
                .parse()
                .map_err(|e| Error::parse(&display, lineno, format!("bad accuracy: {e}")))?;
            if !(0.0..=100.0).contains(&accuracy) {
                return Err(Error::parse(&display, lineno, "accuracy outside [0, 100]"));
            }
            let samples: u64 = row[4]
                .parse()
                .map_err(|e| Error::parse(&display, lineno, format!("bad samples: {e}")))?;
            let result = GenderLookupResult { label, accuracy, samples };
            let name = name_key(&row[0]);
            match &row[1] {
                "*" | "" => {
                    provider.any_country.insert(name, result);
                }
                country => {
                    provider.exact.insert((name, country.to_string()), result);
                }
            }
        }
        Ok(provider)
    }

    pub fn insert(&mut self, name: &str, country: Option<&str>, result: GenderLookupResult) {
        match country {
            Some(c) => {
                self.exact.insert((name_key(name), c.to_string()), result);
            }
            None => {
                self.any_country.insert(name_key(name), result);
            }
        }
    }

    fn lookup(&self, q: &GenderQuery) -> GenderLookupResult {
        let key = (name_key(&q.first_name), q.country.clone());
        if let Some(&r) = self.exact.get(&key) {
            return r;
        }
        self.any_country.get(&key.0).copied().unwrap_or_else(GenderLookupResult::unknown)
    }
}

impl GenderProvider for DictProvider {
    fn lookup_batch(&self, queries: &[GenderQuery]) -> Result<Vec<GenderLookupResult>> {
        Ok(queries.iter().map(|q| self.lookup(q)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_extraction() {
        assert_eq!(first_name_candidates("Gil Dong Hong", "KR"), vec!["Gil", "Gil Dong"]);
        assert_eq!(first_name_candidates("Alice Smith", "US"), vec!["Alice"]);
        assert_eq!(first_name_candidates("Mononym", "JP"), Vec::<String>::new());
        assert_eq!(first_name_candidates("Mononym", "US"), vec!["Mononym"]);
        assert_eq!(first_name_candidates("", "US"), Vec::<String>::new());
    }

    fn dict() -> DictProvider {
        let mut d = DictProvider::default();
        d.insert("alice", None, GenderLookupResult { label: Label::Female, accuracy: 99.0, samples: 5000 });
        d.insert("gil", Some("KR"), GenderLookupResult { label: Label::Male, accuracy: 93.0, samples: 40 });
        d.insert("gil dong", Some("KR"), GenderLookupResult { label: Label::Male, accuracy: 95.0, samples: 25 });
        d.insert("pat", None, GenderLookupResult { label: Label::Female, accuracy: 92.0, samples: 100 });
        d.insert("pat", Some("US"), GenderLookupResult { label: Label::Male, accuracy: 92.0, samples: 100 });
        d.insert("rare", None, GenderLookupResult { label: Label::Female, accuracy: 99.0, samples: 3 });
        d
    }

    fn assign(cands: &[&str], country: &str) -> Option<Gender> {
        let c: Vec<String> = cands.iter().map(|s| s.to_string()).collect();
        assign_gender(&c, country, 2005, &dict(), &ThresholdTable::default()).unwrap()
    }

    #[test]
    fn single_dominant_result() {
        assert_eq!(assign(&["Alice"], "US"), Some(Gender::Female));
    }

    #[test]
    fn equal_best_scores_assign_nothing() {
        // max female accuracy == max male accuracy -> None
        let mut d = dict();
        d.insert("sam", Some("US"), GenderLookupResult { label: Label::Male, accuracy: 92.0, samples: 50 });
        d.insert("sammy", Some("US"), GenderLookupResult { label: Label::Female, accuracy: 92.0, samples: 50 });
        let c = vec!["Sam".to_string(), "Sammy".to_string()];
        assert_eq!(
            assign_gender(&c, "US", 2005, &d, &ThresholdTable::default()).unwrap(),
            None
        );
    }

    #[test]
    fn max_vs_max_comparison() {
        let mut d = DictProvider::default();
        d.insert("a", None, GenderLookupResult { label: Label::Female, accuracy: 95.0, samples: 50 });
        d.insert("a b", None, GenderLookupResult { label: Label::Male, accuracy: 93.0, samples: 50 });
        let c = vec!["a".to_string(), "a b".to_string()];
        assert_eq!(
            assign_gender(&c, "CN", 2005, &d, &ThresholdTable::default()).unwrap(),
            Some(Gender::Female)
        );
    }

    #[test]
    fn below_threshold_results_are_discarded() {
        // 99% accuracy but 3 samples: below the default sample floor.
        assert_eq!(assign(&["Rare"], "US"), None);
    }

    #[test]
    fn country_specific_row_beats_wildcard() {
        // US row says male; wildcard row says female at same accuracy.
        assert_eq!(assign(&["Pat"], "US"), Some(Gender::Male));
        assert_eq!(assign(&["Pat"], "FR"), Some(Gender::Female));
    }

    #[test]
    fn candidate_order_is_irrelevant() {
        let table = ThresholdTable::default();
        let d = dict();
        let fwd = vec!["Gil".to_string(), "Gil Dong".to_string()];
        let rev = vec!["Gil Dong".to_string(), "Gil".to_string()];
        assert_eq!(
            assign_gender(&fwd, "KR", 2005, &d, &table).unwrap(),
            assign_gender(&rev, "KR", 2005, &d, &table).unwrap()
        );
    }

    #[test]
    fn threshold_rules_resolve_by_country_and_year() {
        let table = ThresholdTable {
            rules: vec![
                ThresholdRule {
                    countries: Some(vec!["KR".into(), "JP".into()]),
                    year_min: Some(2000),
                    year_max: None,
                    min_accuracy: 97.0,
                    min_samples: 30,
                },
                ThresholdRule {
                    countries: None,
                    year_min: None,
                    year_max: None,
                    min_accuracy: 85.0,
                    min_samples: 5,
                },
            ],
        };
        assert_eq!(table.resolve("KR", 2010), (97.0, 30));
        assert_eq!(table.resolve("KR", 1995), (85.0, 5)); // year band misses
        assert_eq!(table.resolve("US", 2010), (85.0, 5));
        // Under the stricter KR rule the 95%-accuracy result fails.
        let c = vec!["Gil".to_string(), "Gil Dong".to_string()];
        assert_eq!(assign_gender(&c, "KR", 2010, &dict(), &table).unwrap(), None);
        assert_eq!(
            assign_gender(&c, "KR", 1995, &dict(), &table).unwrap(),
            Some(Gender::Male)
        );
    }

    struct FailingProvider;
    impl GenderProvider for FailingProvider {
        fn lookup_batch(&self, queries: &[GenderQuery]) -> crate::error::Result<Vec<GenderLookupResult>> {
            Err(Error::Provider {
                candidate: queries[0].first_name.clone(),
                msg: "backend unavailable".into(),
            })
        }
    }

    #[test]
    fn provider_failure_carries_candidate() {
        let c = vec!["Alice".to_string()];
        match assign_gender(&c, "US", 2005, &FailingProvider, &ThresholdTable::default()) {
            Err(Error::Provider { candidate, .. }) => assert_eq!(candidate, "Alice"),
            other => panic!("expected provider error, got {other:?}"),
        }
    }
}
