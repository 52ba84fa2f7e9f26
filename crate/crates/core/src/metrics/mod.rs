//! Explanation path metrics, ranking metrics and significance testing.

pub mod path;
pub mod ranking;
pub mod wilcoxon;

pub use path::{
    aggregate, build_ewma_profile, etd, lir, mid, sep, tid_tpd, user_row, EwmaEntry, EwmaProfile, PathMetrics,
    UserExplanations, UserMetricRow, DEFAULT_BETA,
};
pub use ranking::{ranking_metrics, RankingMetrics};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
