//! Photon-counting simulation, θ estimation and trial campaigns.

mod campaign;
mod estimate;
mod fit;
mod noise;

pub use campaign::{
    run_campaign, scaling_study, scaling_study_with, trial_rng, CampaignConfig, EstimationReport, OperatingPoint,
    ScalingPoint, ScalingReport, TrialResult,
};
pub use estimate::{estimate_theta_point, Calibration};
pub use fit::{fit_fringe, FitFlags, FitReport, SweepPoint};
pub use noise::{noisy_probability, sample_counts, NoiseModel, TrialDraws};
