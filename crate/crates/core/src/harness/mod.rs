//! Experiment orchestration: configuration, seeded campaigns, sweeps,
//! baseline comparison and persistence.

pub mod campaign;
pub mod config;
pub mod output;

pub use campaign::{
    aggregate, oracle_check, run_campaign, run_compare, run_sweep, Aggregate, CampaignResult, Oracle, RunOptions,
    SweepResult, TrialOutcome, TrialRecord,
};
pub use config::{Algorithm, ExperimentConfig, SweepParameter};
