//! Evaluation against human annotations and corpus statistics.

mod accuracy;
mod stats;

pub use accuracy::{
    chord_category, compare_annotations, compare_chord_categories, compare_keys, fmt_pct, issue_tag, AccuracyReport,
    Agreement, AnnotationComparison, CategoryAgreement, ConfusionRow, IssueTag, WorkAccuracy,
};
pub use stats::{
    classify_nonharmonic, doubling_csv, doubling_report, modulation_map, nonharmonic_catalog, progression_map,
    transition_report, Doubling, DoublingRow, ModulationMap, Nonharmonic, NonharmonicCatalog, ProgressionMap,
    TransitionCounts, TransitionStats,
};
