//! Record linkage between two bibliographic corpora and rule-based gender
//! assignment with a pluggable lookup provider.

mod gender;
mod linkage;

pub use gender::{
    assign_gender, first_name_candidates, DictProvider, GenderLookupResult, GenderProvider,
    GenderQuery, Label, ThresholdRule, ThresholdTable,
};
pub use linkage::{
    last_name, link_corpora, load_raw_records, normalized_levenshtein, read_link_report,
    records_match, write_link_report, LinkOutcome, LinkReport, LinkStatus, RawRecord, Source,
};
