// SPDX-License-Identifier: Apache-2.0

//! n-gram Markov chains over symbol sequences.
//!
//! A model of order `n` keeps two count tables: one for the first `n - 1`
//! symbols of each sequence (the start prefix) and one for every window of
//! `n` symbols (context of `n - 1` symbols followed by the next symbol).
//! Probabilities are derived from the counts under the configured
//! smoothing and can be re-derived at any time, so a stored model can be
//! reloaded with a different smoothing without retraining.

mod enumerate;
mod persist;
pub mod smoothing;

use serde::{Deserialize, Serialize};

pub use enumerate::{Guess, GuessStream, Symbols};
pub use persist::{read_model, write_model, FORMAT_TAG, FORMAT_VERSION};
pub use smoothing::{
    apply_additive, apply_good_turing, apply_none, CountTable, Smoothing, DEFAULT_ADDITIVE_LAMBDA,
};

use crate::sax::{SaxParams, SaxWord};
use crate::{Error, Result};

/// Largest dense transition table we are willing to allocate.
pub const MAX_TABLE_CELLS: usize = 1 << 23;

/// Expected number of observations of one particular start prefix when `T`
/// passwords are spread evenly over `(beta^2)^(n-1)` prefixes.
pub fn expected_start_observations(total: f64, beta: usize, order: usize) -> f64 {
    let prefixes = ((beta * beta) as f64).powi(order as i32 - 1);
    total / prefixes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub order: usize,
    pub alphabet: usize,
    pub word_length: Option<usize>,
    pub beta: Option<usize>,
    pub corpus_size: u64,
    pub smoothing: Smoothing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    order: usize,
    alphabet: usize,
    word_length: Option<usize>,
    beta: Option<usize>,
    corpus_size: u64,
    start_counts: CountTable,
    transition_counts: CountTable,
    smoothing: Smoothing,
    start_probs: Vec<f64>,
    transition_probs: Vec<f64>,
    notes: Vec<String>,
}

impl MarkovModel {
    /// Trains on SAX words. All words must match `params`.
    pub fn train(corpus: &[SaxWord], params: SaxParams, order: usize, smoothing: Smoothing) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InsufficientData("empty training corpus".into()));
        }
        let seqs = corpus
            .iter()
            .map(|w| {
                w.check(&params)?;
                Ok(w.to_indices(params.beta()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self::fit_sequences(&seqs, params.alphabet_size(), order, smoothing, Some(params.omega()))?;
        model.beta = Some(params.beta());
        Ok(model)
    }

    /// Trains on raw symbol sequences over `0..alphabet`. With `word_length`
    /// set, every sequence must have exactly that length.
    pub fn fit_sequences(
        seqs: &[Vec<u16>],
        alphabet: usize,
        order: usize,
        smoothing: Smoothing,
        word_length: Option<usize>,
    ) -> Result<Self> {
        let mut model = Self::empty(alphabet, order, smoothing, word_length)?;
        if seqs.is_empty() {
            return Err(Error::InsufficientData("empty training corpus".into()));
        }
        for s in seqs {
            model.observe(s)?;
        }
        model.realize()?;
        Ok(model)
    }

    fn empty(alphabet: usize, order: usize, smoothing: Smoothing, word_length: Option<usize>) -> Result<Self> {
        if !(2..=3).contains(&order) {
            return Err(Error::invalid(format!("order must be 2 or 3, got {order}")));
        }
        if alphabet < 1 || alphabet > u16::MAX as usize {
            return Err(Error::invalid(format!("alphabet size {alphabet} out of range")));
        }
        smoothing.validate()?;
        let contexts = alphabet.pow(order as u32 - 1);
        if contexts.saturating_mul(alphabet) > MAX_TABLE_CELLS {
            return Err(Error::invalid(format!(
                "alphabet {alphabet} at order {order} needs more than {MAX_TABLE_CELLS} cells"
            )));
        }
        if let Some(l) = word_length {
            if l < order - 1 {
                return Err(Error::invalid("word length shorter than the start prefix"));
            }
        }
        Ok(MarkovModel {
            order,
            alphabet,
            word_length,
            beta: None,
            corpus_size: 0,
            start_counts: CountTable::zeros(1, contexts),
            transition_counts: CountTable::zeros(contexts, alphabet),
            smoothing,
            start_probs: Vec::new(),
            transition_probs: Vec::new(),
            notes: Vec::new(),
        })
    }

    fn observe(&mut self, seq: &[u16]) -> Result<()> {
        let k = self.order - 1;
        if let Some(l) = self.word_length {
            if seq.len() != l {
                return Err(Error::ParameterMismatch(format!(
                    "sequence of length {} in a length-{l} corpus",
                    seq.len()
                )));
            }
        }
        if seq.len() < k {
            return Err(Error::InsufficientData(format!(
                "sequence shorter than the {k}-symbol start prefix"
            )));
        }
        if let Some(&s) = seq.iter().find(|&&s| s as usize >= self.alphabet) {
            return Err(Error::ParameterMismatch(format!(
                "symbol {s} outside alphabet of {}",
                self.alphabet
            )));
        }
        let start = self.context_index(&seq[..k]);
        self.start_counts.cells[start] += 1;
        for w in seq.windows(self.order) {
            let ctx = self.context_index(&w[..k]);
            self.transition_counts.cells[ctx * self.alphabet + w[k] as usize] += 1;
        }
        self.corpus_size += 1;
        Ok(())
    }

    /// Re-derives probability tables from counts under the current smoothing.
    fn realize(&mut self) -> Result<()> {
        self.notes.clear();
        match self.smoothing {
            Smoothing::None => {
                self.start_probs = apply_none(&self.start_counts);
                self.transition_probs = apply_none(&self.transition_counts);
            }
            Smoothing::Additive { lambda } => {
                self.start_probs = apply_additive(&self.start_counts, lambda)?;
                self.transition_probs = apply_additive(&self.transition_counts, lambda)?;
            }
            Smoothing::GoodTuring => {
                let start = apply_good_turing(&self.start_counts)?;
                if start.fell_back {
                    self.notes
                        .push("start table has no singletons; left unsmoothed".into());
                }
                self.start_probs = start.probs;
                if self.transition_counts.total() == 0 {
                    // words no longer than the prefix: transitions never used
                    self.transition_probs = apply_none(&self.transition_counts);
                } else {
                    let trans = apply_good_turing(&self.transition_counts)?;
                    if trans.fell_back {
                        self.notes
                            .push("transition table has no singletons; left unsmoothed".into());
                    }
                    self.transition_probs = trans.probs;
                }
            }
        }
        Ok(())
    }

    /// Switches smoothing and re-derives probabilities from the stored counts.
    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Result<Self> {
        smoothing.validate()?;
        self.smoothing = smoothing;
        self.realize()?;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn word_length(&self) -> Option<usize> {
        self.word_length
    }

    pub fn beta(&self) -> Option<usize> {
        self.beta
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn start_counts(&self) -> &CountTable {
        &self.start_counts
    }

    pub fn transition_counts(&self) -> &CountTable {
        &self.transition_counts
    }

    /// Warnings produced while realizing probabilities (e.g. a Good-Turing fallback).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn info(&self) -> ModelInfo {
        ModelInfo {
            order: self.order,
            alphabet: self.alphabet,
            word_length: self.word_length,
            beta: self.beta,
            corpus_size: self.corpus_size,
            smoothing: self.smoothing,
        }
    }

    /// True when the model assigns non-zero probability to every sequence.
    pub fn is_complete(&self) -> bool {
        self.start_probs.iter().all(|&p| p > 0.0) && self.transition_probs.iter().all(|&p| p > 0.0)
    }

    pub fn context_count(&self) -> usize {
        self.start_counts.cols
    }

    /// Big-endian base-`alphabet` index of a context; equals lexicographic order.
    #[inline]
    pub fn context_index(&self, ctx: &[u16]) -> usize {
        ctx.iter().fold(0, |acc, &s| acc * self.alphabet + s as usize)
    }

    pub fn decode_context(&self, mut idx: usize) -> Vec<u16> {
        let k = self.order - 1;
        let mut out = vec![0u16; k];
        for slot in out.iter_mut().rev() {
            *slot = (idx % self.alphabet) as u16;
            idx /= self.alphabet;
        }
        out
    }

    /// Context reached from `ctx` after emitting `sym`.
    #[inline]
    pub fn next_context(&self, ctx: usize, sym: u16) -> usize {
        (ctx * self.alphabet + sym as usize) % self.context_count()
    }

    #[inline]
    pub fn start_prob(&self, ctx: usize) -> f64 {
        self.start_probs[ctx]
    }

    #[inline]
    pub fn transition_prob(&self, ctx: usize, sym: u16) -> f64 {
        self.transition_probs[ctx * self.alphabet + sym as usize]
    }

    pub fn start_probs(&self) -> &[f64] {
        &self.start_probs
    }

    pub fn transition_row(&self, ctx: usize) -> &[f64] {
        &self.transition_probs[ctx * self.alphabet..(ctx + 1) * self.alphabet]
    }

    /// Probability of a sequence, multiplied left to right. Any enumeration
    /// of this model computes probabilities in exactly this order.
    pub fn seq_prob(&self, seq: &[u16]) -> f64 {
        let k = self.order - 1;
        if seq.len() < k || seq.iter().any(|&s| s as usize >= self.alphabet) {
            return 0.0;
        }
        let mut ctx = self.context_index(&seq[..k]);
        let mut p = self.start_probs[ctx];
        for &s in &seq[k..] {
            p *= self.transition_prob(ctx, s);
            ctx = self.next_context(ctx, s);
        }
        p
    }

    /// Base-2 log-probability as a sum of per-factor logs, so it stays finite
    /// where the plain product would underflow. `-inf` iff a factor is zero.
    pub fn seq_log2prob(&self, seq: &[u16]) -> f64 {
        let k = self.order - 1;
        if seq.len() < k || seq.iter().any(|&s| s as usize >= self.alphabet) {
            return f64::NEG_INFINITY;
        }
        let mut ctx = self.context_index(&seq[..k]);
        let mut lp = self.start_probs[ctx].log2();
        for &s in &seq[k..] {
            lp += self.transition_prob(ctx, s).log2();
            ctx = self.next_context(ctx, s);
        }
        lp
    }

    fn check_word(&self, word: &SaxWord) -> Result<Vec<u16>> {
        let beta = self
            .beta
            .ok_or_else(|| Error::ParameterMismatch("model was not trained on SAX words".into()))?;
        let omega = self.word_length.unwrap_or(word.omega());
        word.check(&SaxParams::new(omega, beta)?)?;
        Ok(word.to_indices(beta))
    }

    /// Base-2 log-probability of a word; `-inf` flags a zero-probability word.
    pub fn word_logprob(&self, word: &SaxWord) -> Result<f64> {
        Ok(self.seq_log2prob(&self.check_word(word)?))
    }

    pub fn word_prob(&self, word: &SaxWord) -> Result<f64> {
        Ok(self.seq_prob(&self.check_word(word)?))
    }

    pub fn sax_params(&self) -> Option<SaxParams> {
        SaxParams::new(self.word_length?, self.beta?).ok()
    }

    /// Lazily enumerates words in non-increasing probability order.
    pub fn guesses(&self, limit: Option<usize>) -> Result<GuessStream<'_>> {
        GuessStream::new(self, limit)
    }
}

pub fn train(corpus: &[SaxWord], params: SaxParams, order: usize, smoothing: Smoothing) -> Result<MarkovModel> {
    MarkovModel::train(corpus, params, order, smoothing)
}

#[cfg(test)]
mod tests {
    use super::*;

    // alphabet {A=0, B=1}
    fn fit(seqs: &[&[u16]], order: usize, sm: Smoothing) -> MarkovModel {
        let seqs: Vec<Vec<u16>> = seqs.iter().map(|s| s.to_vec()).collect();
        MarkovModel::fit_sequences(&seqs, 2, order, sm, Some(seqs[0].len())).unwrap()
    }

    #[test]
    fn single_observed_path() {
        let m = fit(&[&[0, 1], &[0, 1]], 2, Smoothing::None);
        assert_eq!(m.start_prob(0), 1.0);
        assert_eq!(m.transition_prob(0, 1), 1.0);
        assert_eq!(m.seq_log2prob(&[0, 1]), 0.0);
        assert_eq!(m.seq_log2prob(&[1, 1]), f64::NEG_INFINITY);
    }

    #[test]
    fn relative_frequency() {
        let m = fit(&[&[0, 1], &[0, 0]], 2, Smoothing::None);
        assert_eq!(m.transition_prob(0, 1), 0.5);
        assert_eq!(m.transition_prob(0, 0), 0.5);
    }

    #[test]
    fn chain_rule_for_length_eight() {
        let seqs: Vec<Vec<u16>> = vec![
            vec![0, 1, 2, 3, 0, 1, 2, 3],
            vec![0, 2, 2, 3, 1, 1, 2, 0],
            vec![3, 1, 2, 3, 0, 1, 0, 3],
        ];
        let m = MarkovModel::fit_sequences(&seqs, 4, 2, Smoothing::additive(), Some(8)).unwrap();
        let s = &seqs[1];
        let mut expect = m.start_prob(s[0] as usize);
        for w in s.windows(2) {
            expect *= m.transition_prob(w[0] as usize, w[1]);
        }
        assert_eq!(m.seq_prob(s), expect);
        assert!((m.seq_log2prob(s) - expect.log2()).abs() < 1e-12);
    }

    #[test]
    fn count_conservation() {
        let seqs: Vec<Vec<u16>> = (0..50u16)
            .map(|i| (0..6).map(|j| (i * 7 + j * 3) % 5).collect())
            .collect();
        for order in [2, 3] {
            let m = MarkovModel::fit_sequences(&seqs, 5, order, Smoothing::None, Some(6)).unwrap();
            assert_eq!(m.start_counts().total(), 50);
            assert_eq!(m.transition_counts().total(), 50 * (6 - order as u64 + 1));
        }
    }

    #[test]
    fn training_errors() {
        assert!(MarkovModel::fit_sequences(&[], 2, 2, Smoothing::None, Some(2)).is_err());
        assert!(MarkovModel::fit_sequences(&[vec![0, 1]], 2, 4, Smoothing::None, Some(2)).is_err());
        assert!(MarkovModel::fit_sequences(&[vec![0, 1], vec![0]], 2, 2, Smoothing::None, Some(2)).is_err());
        assert!(MarkovModel::fit_sequences(&[vec![0, 5]], 2, 2, Smoothing::None, Some(2)).is_err());
        let w = [SaxWord::new(vec![(0, 0); 4], 10), SaxWord::new(vec![(0, 0); 5], 10)];
        assert!(MarkovModel::train(&w, SaxParams::new(4, 2).unwrap(), 2, Smoothing::None).is_err());
    }

    #[test]
    fn smoothing_can_be_switched_without_retraining() {
        let m = fit(&[&[0, 1, 1], &[0, 0, 1]], 2, Smoothing::None);
        assert!(!m.is_complete());
        let s = m.clone().with_smoothing(Smoothing::additive()).unwrap();
        assert!(s.is_complete());
        assert_eq!(s.start_counts(), m.start_counts());
        let back = s.with_smoothing(Smoothing::None).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn expected_observations() {
        assert!((expected_start_observations(3245.0, 6, 2) - 90.14).abs() < 0.01);
        assert!((expected_start_observations(5026.0, 6, 3) - 3.88).abs() < 0.01);
        assert_eq!(expected_start_observations(0.0, 6, 2), 0.0);
    }

    #[test]
    fn sax_word_logprob_checks_params() {
        let p = SaxParams::new(3, 2).unwrap();
        let w = SaxWord::new(vec![(0, 1), (1, 1), (1, 0)], 12);
        let m = MarkovModel::train(std::slice::from_ref(&w), p, 2, Smoothing::None).unwrap();
        assert_eq!(m.word_logprob(&w).unwrap(), 0.0);
        let bad = SaxWord::new(vec![(0, 1), (1, 1)], 12);
        assert!(m.word_logprob(&bad).is_err());
        let out_of_range = SaxWord::new(vec![(0, 3), (1, 1), (1, 0)], 12);
        assert!(m.word_logprob(&out_of_range).is_err());
    }
}
