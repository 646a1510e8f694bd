//! Monte Carlo estimators for the growth events and the freeze time.

pub mod ensemble;
pub mod events;
pub mod stats;

pub use ensemble::{
    accumulate, conditional_monotone_frequency, empirical_distribution, run_ensemble,
    CheckpointSummary, ConditionalMonotone, EnsembleAccumulator, EnsembleSpec, EnsembleSummary,
    FreezeSummary, DEFAULT_MAX_WORK,
};
pub use events::{
    event_e1, event_e2, freeze_time, occupation_fraction, occupation_fraction_above, FreezeTime,
};
pub use stats::{ks_two_sample, wilson, Frequency};
