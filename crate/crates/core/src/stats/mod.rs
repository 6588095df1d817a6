//! Nonparametric tests and the cross-dyad study report.

mod rank;
mod spearman;
mod study;
mod wilcoxon;

pub use rank::{average_ranks, median, tie_groups};
pub use spearman::{spearman, SpearmanTest};
pub use study::{
    analyze_dyads, analyze_study, analyze_summaries, load_study_inputs, read_study_csv, write_study_csv,
    AnalysisOptions, Comparison, ConditionMedians, Correlation, DyadSummary, LoadedStudy, StudyReport, TestMethod,
    STUDY_CSV_HEADER,
};
pub use wilcoxon::{
    rank_sum, wilcoxon_signed_rank, RankSumTest, SignedRankTest, RANK_SUM_EXACT_MAX_N, SIGNED_RANK_EXACT_MAX_N,
};
