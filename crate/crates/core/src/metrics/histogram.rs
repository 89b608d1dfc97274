// SPDX-License-Identifier: Apache-2.0

//! Word counts per log-probability bucket, without enumerating the word space.
//!
//! Each factor of a word's probability (start prefix, then each transition)
//! is quantized to `round(-log2 p / width)` integer units, and a word's
//! bucket is the sum of its factor units. This keeps buckets additive, so a
//! forward pass over positions with state `(context, bucket)` counts words
//! per bucket exactly. Masses are accumulated alongside, so a bucket also
//! knows the exact total probability of its words.
//!
//! Because each factor is rounded separately, a word's true `-log2 p` is
//! within `factors * width / 2` of its bucket centre.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::markov::MarkovModel;
use crate::{Error, Result};

pub const DEFAULT_BUCKET_WIDTH: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub index: i64,
    /// Number of words; a float because spaces can exceed 2^64.
    pub count: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbHistogram {
    bucket_width: f64,
    /// Number of rounded terms summed into each word's bucket.
    factors: usize,
    buckets: BTreeMap<i64, (f64, f64)>,
}

pub fn quantize(p: f64, width: f64) -> i64 {
    (-p.log2() / width).round() as i64
}

fn check_width(width: f64) -> Result<()> {
    if width > 0.0 && width.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("bucket width must be > 0, got {width}")))
    }
}

impl ProbHistogram {
    /// Empty histogram whose words are built from `factors` rounded terms.
    pub fn new(bucket_width: f64, factors: usize) -> Result<Self> {
        check_width(bucket_width)?;
        Ok(ProbHistogram {
            bucket_width,
            factors,
            buckets: BTreeMap::new(),
        })
    }

    /// Bins a plain probability list (one rounded term per word). Zero
    /// probabilities are skipped.
    pub fn from_probabilities<I: IntoIterator<Item = f64>>(probs: I, bucket_width: f64) -> Result<Self> {
        let mut h = Self::new(bucket_width, 1)?;
        for p in probs {
            if p > 0.0 {
                h.add(quantize(p, bucket_width), 1.0, p);
            }
        }
        Ok(h)
    }

    pub fn add(&mut self, index: i64, count: f64, mass: f64) {
        let e = self.buckets.entry(index).or_insert((0.0, 0.0));
        e.0 += count;
        e.1 += mass;
    }

    pub fn bucket_width(&self) -> f64 {
        self.bucket_width
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    /// Largest distance between a word's true `-log2 p` and its bucket centre.
    pub fn error_bound_bits(&self) -> f64 {
        self.factors as f64 * self.bucket_width / 2.0
    }

    /// Buckets from most to least probable.
    pub fn buckets_by_probability(&self) -> impl Iterator<Item = Bucket> + '_ {
        self.buckets.iter().map(|(&index, &(count, mass))| Bucket { index, count, mass })
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn get(&self, index: i64) -> Option<(f64, f64)> {
        self.buckets.get(&index).copied()
    }

    pub fn total_mass(&self) -> f64 {
        self.buckets.values().map(|b| b.1).sum()
    }

    pub fn total_count(&self) -> f64 {
        self.buckets.values().map(|b| b.0).sum()
    }

    /// Bucket centre in bits.
    pub fn centre_bits(&self, index: i64) -> f64 {
        index as f64 * self.bucket_width
    }
}

// sparse row per context: (bucket, count, mass) sorted by bucket
type Row = Vec<(i64, f64, f64)>;

/// Forward dynamic program over word positions; zero-probability words are
/// left out.
pub fn build_prob_histogram(model: &MarkovModel, bucket_width: f64) -> Result<ProbHistogram> {
    check_width(bucket_width)?;
    let length = model
        .word_length()
        .ok_or_else(|| Error::invalid("histogram needs a fixed word length"))?;
    let k = model.order() - 1;
    let contexts = model.context_count();
    let a = model.alphabet();

    let mut layer: Vec<Row> = (0..contexts)
        .map(|c| {
            let p = model.start_prob(c);
            if p > 0.0 {
                vec![(quantize(p, bucket_width), 1.0, p)]
            } else {
                Vec::new()
            }
        })
        .collect();

    // contexts c with next_context(c, s) = d are d / a + j * (contexts / a)
    let stride = contexts / a;
    for _ in k..length {
        layer = (0..contexts)
            .into_par_iter()
            .map(|d| {
                let s = (d % a) as u16;
                let sources: Vec<(usize, f64, i64)> = (0..a)
                    .map(|j| d / a + j * stride)
                    .filter(|&c| !layer[c].is_empty())
                    .filter_map(|c| {
                        let t = model.transition_prob(c, s);
                        (t > 0.0).then(|| (c, t, quantize(t, bucket_width)))
                    })
                    .collect();
                let Some(lo) = sources.iter().map(|&(c, _, q)| layer[c][0].0 + q).min() else {
                    return Vec::new();
                };
                let hi = sources
                    .iter()
                    .map(|&(c, _, q)| layer[c][layer[c].len() - 1].0 + q)
                    .max()
                    .expect("non-empty");
                let mut acc = vec![(0.0f64, 0.0f64); (hi - lo + 1) as usize];
                for &(c, t, q) in &sources {
                    for &(b, n, m) in &layer[c] {
                        let e = &mut acc[(b + q - lo) as usize];
                        e.0 += n;
                        e.1 += m * t;
                    }
                }
                acc.into_iter()
                    .enumerate()
                    .filter(|(_, e)| e.0 > 0.0)
                    .map(|(i, (n, m))| (lo + i as i64, n, m))
                    .collect()
            })
            .collect();
    }

    let mut h = ProbHistogram::new(bucket_width, 1 + length - k)?;
    for row in &layer {
        for &(b, n, mass) in row {
            h.add(b, n, mass);
        }
    }
    Ok(h)
}
