//! Rank statistics and agreement metrics.

mod agreement;
mod rank;
mod spearman;
mod student_t;

pub use agreement::{agreement_band, normalized_mae, quadratic_weighted_kappa, CalibrationSample};
pub use rank::{average_ranks, RankSeries};
pub use spearman::{evaluate_subreddit, spearman_p_value, spearman_rho, Evaluation};
pub use student_t::{regularized_incomplete_beta, student_t_sf};
