//! Experiment engine: synthetic instances, method comparison and reports.

pub mod assets;
mod experiment;
pub mod generate;
mod observe;
mod stats;
mod svg;

pub use assets::{sample_poses, Asset};
pub use experiment::{
    pose_observation, run_experiment, run_trials, trial_rng, ExperimentConfig, ExperimentReport, Method, MethodSummary,
    Noise, PoseSource, TrialRecord, CSV_HEADER,
};
pub use observe::{
    add_noise, add_noise_rng, generate_observations, observe, observed_joints, root_cluster_end, ObservationMode,
};
pub use stats::{quantile, BoxStats, WHISKER_IQR};
pub use svg::{box_plot, Scale, LOG_FLOOR};
