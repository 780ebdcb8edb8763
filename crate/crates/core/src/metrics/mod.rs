//! Experiment analytics: visitation heatmaps, trajectory logs, score
//! normalisation, interquartile mean, probability of improvement and
//! bootstrap confidence intervals.

pub mod scores;
pub mod trajectory;
pub mod visitation;

pub use scores::{
    bootstrap_ci, capped_normalized_score, iqm, iqm_per_task, iqm_pooled, normalized_score, ppo_normalized_score,
    probability_of_improvement, read_baselines, Baseline, Baselines, Interval, ScoreTable,
};
pub use trajectory::{TrajectoryLog, TrajectoryRecord};
pub use visitation::{coverage_stats, emit_heatmap, Coverage, VisitationGrid};
