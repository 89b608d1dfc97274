// SPDX-License-Identifier: Apache-2.0

//! Security analytics for recognition passwords (gestures, signatures) and
//! matching passwords (3x3 unlock patterns).
//!
//! Traces are discretized into fixed-length symbol words with 2-D SAX
//! ([`sax`]), user choice is modeled with n-gram Markov chains ([`markov`]),
//! and the resulting password distributions are scored with guessing curves
//! and the partial guessing metric ([`metrics`]). [`recognize`] and [`roc`]
//! check that the symbolic representation still separates users, and
//! [`pattern`] provides the unlock-pattern baseline.

pub mod bias;
mod error;
pub mod markov;
pub mod metrics;
pub mod pattern;
pub mod recognize;
pub mod roc;
pub mod sax;
pub mod seed;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use markov::{GuessStream, MarkovModel, Smoothing};
pub use metrics::{GuessingCurve, PartialGuessReport, ProbHistogram};
pub use sax::{Breakpoints, DistTable, SaxParams, SaxWord};
pub use trace::{NormalizedTrace, RawTrace, TraceSet};
