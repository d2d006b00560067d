//! Choice problems, trial records, B-rate aggregation and fold splitting.

mod distribution;
mod ingest;
mod problem;
mod split;
mod synth;

pub use distribution::{
    joint_distribution, prob_b_better, Corr, JointOutcome, Outcome, OutcomeDistribution,
};
pub use ingest::{
    aggregate_b_rates, parse_raw_csv, parse_raw_reader, read_problems_csv, read_rates_csv,
    write_problems_csv, write_raw_csv, write_rates_csv, RatePoint, TrialRecord, RAW_COLUMNS,
};
pub use problem::{ChoiceProblem, LotShape};
pub use split::{split_dataset, Fold, Key, SplitAssignment};
pub use synth::{synth_generate, SynthData, GAMES_PER_SUBJECT};

#[cfg(test)]
pub(crate) use problem::fixtures;
