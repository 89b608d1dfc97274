// SPDX-License-Identifier: Apache-2.0

//! Guessing curves, the partial guessing metric and security bounds.

mod bounds;
mod guessing;
mod histogram;
mod partial;

pub use bounds::{bounds_report, subsample_sizes, BoundsRow, BOUNDS_ORDER};
pub use guessing::{
    account_folds, attack, crossval_guessing, guessing_entropy, power_of_two_checkpoints, AttackOutcome,
    CrossValCurve, GuessingCurve, ModelConfig,
};
pub use histogram::{build_prob_histogram, quantize, Bucket, ProbHistogram, DEFAULT_BUCKET_WIDTH};
pub use partial::{
    effective_bits, partial_guessing, partial_guessing_histogram, partial_guessing_sorted, PartialGuessReport,
    PgmMethod,
};
