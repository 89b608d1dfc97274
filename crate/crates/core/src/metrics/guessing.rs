// SPDX-License-Identifier: Apache-2.0

//! Guessing curves: the fraction of targets cracked after a number of guesses.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::markov::{Guess, MarkovModel, Smoothing, Symbols};
use crate::sax::{AccountWords, SaxParams, SaxWord};
use crate::seed::rng_for;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessingCurve {
    /// `(guess_count, cracked_fraction)`, both non-decreasing.
    pub points: Vec<(u64, f64)>,
}

impl GuessingCurve {
    pub fn fraction_at(&self, guesses: u64) -> Option<f64> {
        self.points.iter().find(|p| p.0 == guesses).map(|p| p.1)
    }
}

/// Powers of two from 1 up to and including the largest one `<= max`.
pub fn power_of_two_checkpoints(max: u64) -> Vec<u64> {
    (0..64).map(|e| 1u64 << e).take_while(|&c| c <= max).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub curve: GuessingCurve,
    pub guesses_made: u64,
    /// True if the guess source ran dry before the last checkpoint; the
    /// curve is flat from there on.
    pub exhausted: bool,
    pub cracked: usize,
    pub targets: usize,
}

/// Replays guesses against targets (compared by exact symbol equality) and
/// samples the cracked fraction at each checkpoint. Checkpoints past the end
/// of the guess source repeat the final fraction.
pub fn guessing_entropy<I>(guesses: I, targets: &[Vec<u16>], checkpoints: &[u64]) -> Result<AttackOutcome>
where
    I: IntoIterator<Item = Guess>,
{
    if targets.is_empty() {
        return Err(Error::InsufficientData("no targets".into()));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 {
        return Err(Error::invalid("checkpoints must be positive and strictly increasing"));
    }
    let mut remaining: HashMap<Symbols, usize> = HashMap::new();
    for t in targets {
        *remaining.entry(t.iter().copied().collect()).or_default() += 1;
    }
    let total = targets.len() as f64;
    let last = *checkpoints.last().expect("non-empty");
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut cracked = 0usize;
    let mut made = 0u64;
    let mut cp = checkpoints.iter().peekable();
    let mut iter = guesses.into_iter();
    let mut exhausted = false;
    while made < last {
        let Some(g) = iter.next() else {
            exhausted = true;
            break;
        };
        made += 1;
        if let Some(n) = remaining.remove(&g.symbols) {
            cracked += n;
        }
        while cp.peek().is_some_and(|&&c| c == made) {
            points.push((made, cracked as f64 / total));
            cp.next();
        }
    }
    if made == 0 {
        return Err(Error::InsufficientData("guess source is empty".into()));
    }
    for &c in cp {
        points.push((c, cracked as f64 / total));
    }
    Ok(AttackOutcome {
        curve: GuessingCurve { points },
        guesses_made: made,
        exhausted,
        cracked,
        targets: targets.len(),
    })
}

/// Attacks SAX-word targets with a model's best-first guesses.
pub fn attack(model: &MarkovModel, targets: &[SaxWord], checkpoints: &[u64]) -> Result<AttackOutcome> {
    let params = model
        .sax_params()
        .ok_or_else(|| Error::ParameterMismatch("model was not trained on SAX words".into()))?;
    let idx = targets
        .iter()
        .map(|w| {
            w.check(&params)?;
            Ok(w.to_indices(params.beta()))
        })
        .collect::<Result<Vec<_>>>()?;
    let limit = checkpoints.last().map(|&c| c as usize);
    guessing_entropy(model.guesses(limit)?, &idx, checkpoints)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub params: SaxParams,
    pub order: usize,
    pub smoothing: Smoothing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValCurve {
    pub checkpoints: Vec<u64>,
    pub mean: Vec<f64>,
    /// Population standard deviation across folds.
    pub std: Vec<f64>,
    pub folds: Vec<AttackOutcome>,
}

/// Splits account indices into `folds` groups after a seeded shuffle.
pub fn account_folds(n_accounts: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    if n_accounts < folds {
        return Err(Error::InsufficientData(format!(
            "{n_accounts} accounts cannot fill {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n_accounts).collect();
    order.shuffle(&mut rng_for(seed, "folds"));
    let mut out = vec![Vec::new(); folds];
    for (i, a) in order.into_iter().enumerate() {
        out[i % folds].push(a);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// K-fold cross-validated attack, split by account. An account's password
/// is its template word (first sample). Each fold trains on the passwords of
/// the other accounts and attacks the held-out ones.
pub fn crossval_guessing(
    data: &[AccountWords],
    folds: usize,
    config: ModelConfig,
    checkpoints: &[u64],
    seed: u64,
) -> Result<CrossValCurve> {
    let split = account_folds(data.len(), folds, seed)?;
    let outcomes = split
        .par_iter()
        .map(|held| {
            let mut is_held = vec![false; data.len()];
            held.iter().for_each(|&a| is_held[a] = true);
            let train: Vec<SaxWord> = data
                .iter()
                .zip(&is_held)
                .filter(|(_, &h)| !h)
                .filter_map(|(a, _)| a.words.first().cloned())
                .collect();
            let targets: Vec<SaxWord> = held
                .iter()
                .filter_map(|&a| data[a].words.first().cloned())
                .collect();
            let model = MarkovModel::train(&train, config.params, config.order, config.smoothing)?;
            attack(&model, &targets, checkpoints)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = outcomes.len() as f64;
    let mut mean = vec![0.0; checkpoints.len()];
    let mut std = vec![0.0; checkpoints.len()];
    for i in 0..checkpoints.len() {
        let vals: Vec<f64> = outcomes.iter().map(|o| o.curve.points[i].1).collect();
        let m = vals.iter().sum::<f64>() / n;
        mean[i] = m;
        std[i] = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    }
    Ok(CrossValCurve {
        checkpoints: checkpoints.to_vec(),
        mean,
        std,
        folds: outcomes,
    })
}
