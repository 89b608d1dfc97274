// SPDX-License-Identifier: Apache-2.0

//! Upper and lower security bounds over growing account subsamples.
//!
//! A Good-Turing 3-gram model spreads mass over unseen words and
//! overestimates strength; an unsmoothed 3-gram model only knows observed
//! transitions and underestimates it. Subsamples are nested: one seeded
//! permutation of the accounts, and each fraction takes a prefix of it.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::histogram::build_prob_histogram;
use super::partial::partial_guessing_histogram;
use crate::markov::{MarkovModel, Smoothing};
use crate::sax::{AccountWords, SaxParams, SaxWord};
use crate::seed::rng_for;
use crate::{Error, Result};

pub const BOUNDS_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub fraction: f64,
    pub n_accounts: usize,
    pub smoothing: Smoothing,
    pub alpha: f64,
    pub mu_alpha: f64,
    pub lambda_mu: f64,
    pub g_alpha: f64,
    pub bits: f64,
}

/// Number of accounts kept at each fraction.
pub fn subsample_sizes(n_accounts: usize, fractions: &[f64]) -> Result<Vec<usize>> {
    fractions
        .iter()
        .map(|&f| {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("fraction must lie in (0, 1], got {f}")));
            }
            let n = (f * n_accounts as f64).round() as usize;
            if n < 2 {
                return Err(Error::InsufficientData(format!(
                    "fraction {f} of {n_accounts} accounts leaves fewer than 2"
                )));
            }
            Ok(n)
        })
        .collect()
}

/// For each fraction, trains the two 3-gram models on the template word of
/// each chosen account and reports bits at each alpha via the histogram.
pub fn bounds_report(
    data: &[AccountWords],
    params: SaxParams,
    fractions: &[f64],
    alphas: &[f64],
    bucket_width: f64,
    seed: u64,
) -> Result<Vec<BoundsRow>> {
    let sizes = subsample_sizes(data.len(), fractions)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng_for(seed, "bounds/subsample"));

    let jobs: Vec<(usize, Smoothing)> = (0..fractions.len())
        .flat_map(|i| [(i, Smoothing::GoodTuring), (i, Smoothing::None)])
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, smoothing)| {
            let corpus: Vec<SaxWord> = order[..sizes[i]]
                .iter()
                .filter_map(|&a| data[a].words.first().cloned())
                .collect();
            let model = MarkovModel::train(&corpus, params, BOUNDS_ORDER, smoothing)?;
            let hist = build_prob_histogram(&model, bucket_width)?;
            let reports = partial_guessing_histogram(&hist, alphas)?;
            Ok(reports
                .into_iter()
                .map(|r| BoundsRow {
                    fraction: fractions[i],
                    n_accounts: sizes[i],
                    smoothing,
                    alpha: r.alpha,
                    mu_alpha: r.mu_alpha,
                    lambda_mu: r.lambda_mu,
                    g_alpha: r.g_alpha,
                    bits: r.bits,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}
