//! Joins tree and model labels per sentence and computes the reported
//! statistics.

mod audit;
mod matrix;
mod render;
mod stats;

pub use audit::{
    duplicate_consistency, term_report, ClassifierCounts, ConsistencyReport, DuplicateGroup, LabelSplit, TermReport,
    TermSample,
};
pub use matrix::{corpus_table, tabulate, AnalyticsError, LabelMatrix, MatrixRow, Scope, TREE};
pub use render::{analyze, fmt_pct, fmt_ratio, render_reports, Analysis, CorpusRow};
pub use stats::{
    agrees, disagreement_ratios, group_rates, pairwise_agreement, AgreementStats, DisagreementRatio, GroupRates,
    LabelCounts, PairAgreement, RateEntry, ScopeAgreement,
};
