// SPDX-License-Identifier: Apache-2.0

//! 3x3 unlock patterns: the space of valid patterns, a Markov model over
//! node sequences, and exact guessing metrics on it.
//!
//! Nodes are numbered row by row:
//!
//! ```text
//! 0 1 2
//! 3 4 5
//! 6 7 8
//! ```
//!
//! A pattern visits 4 to 9 distinct nodes, and a stroke may pass over a node
//! only if that node was already visited.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::markov::{MarkovModel, Smoothing};
use crate::metrics::{partial_guessing_sorted, PartialGuessReport};
use crate::seed::rng_for;
use crate::{Error, Result};

pub const NODES: usize = 9;
pub const MIN_LEN: usize = 4;
pub const MAX_LEN: usize = 9;
/// Terminal symbol appended to every sequence for the Markov model.
pub const END: u16 = 9;
pub const PATTERN_ALPHABET: usize = 10;
pub const VALID_PATTERN_COUNT: usize = 389_112;

/// Node strictly between `a` and `b` on a straight stroke, if any.
pub fn midpoint(a: u8, b: u8) -> Option<u8> {
    let (ra, ca) = (a / 3, a % 3);
    let (rb, cb) = (b / 3, b % 3);
    if (ra + rb) % 2 == 0 && (ca + cb) % 2 == 0 {
        let m = (ra + rb) / 2 * 3 + (ca + cb) / 2;
        (m != a && m != b).then_some(m)
    } else {
        None
    }
}

fn can_move(visited: u16, from: u8, to: u8) -> bool {
    visited & (1 << to) == 0 && midpoint(from, to).is_none_or(|m| visited & (1 << m) != 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnlockPattern {
    nodes: Vec<u8>,
}

impl UnlockPattern {
    pub fn new(nodes: Vec<u8>) -> Result<Self> {
        if !(MIN_LEN..=MAX_LEN).contains(&nodes.len()) {
            return Err(Error::invalid(format!(
                "pattern length {} outside {MIN_LEN}..={MAX_LEN}",
                nodes.len()
            )));
        }
        let mut visited = 0u16;
        for (i, &n) in nodes.iter().enumerate() {
            if n as usize >= NODES {
                return Err(Error::invalid(format!("node {n} is not on the grid")));
            }
            if visited & (1 << n) != 0 {
                return Err(Error::invalid(format!("node {n} visited twice")));
            }
            if i > 0 && !can_move(visited, nodes[i - 1], n) {
                return Err(Error::invalid(format!(
                    "stroke {}->{n} jumps over an unvisited node",
                    nodes[i - 1]
                )));
            }
            visited |= 1 << n;
        }
        Ok(UnlockPattern { nodes })
    }

    pub fn nodes(&self) -> &[u8] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node sequence followed by the terminal symbol.
    pub fn to_sequence(&self) -> Vec<u16> {
        self.nodes.iter().map(|&n| n as u16).chain([END]).collect()
    }
}

impl fmt::Display for UnlockPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl FromStr for UnlockPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nodes = s
            .trim()
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::invalid(format!("'{s}' is not a digit string")))?;
        UnlockPattern::new(nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternRejection {
    pub line: usize,
    pub reason: String,
}

/// One pattern per line; blank lines and `#` comments are skipped, invalid
/// patterns are collected rather than aborting the parse.
pub fn parse_patterns(text: &str) -> (Vec<UnlockPattern>, Vec<PatternRejection>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        match l.parse::<UnlockPattern>() {
            Ok(p) => ok.push(p),
            Err(e) => bad.push(PatternRejection {
                line: i + 1,
                reason: e.to_string(),
            }),
        }
    }
    (ok, bad)
}

fn extend(path: &mut Vec<u8>, visited: u16, out: &mut Vec<UnlockPattern>) {
    if path.len() >= MIN_LEN {
        out.push(UnlockPattern { nodes: path.clone() });
    }
    if path.len() == MAX_LEN {
        return;
    }
    let last = *path.last().expect("non-empty path");
    for n in 0..NODES as u8 {
        if can_move(visited, last, n) {
            path.push(n);
            extend(path, visited | 1 << n, out);
            path.pop();
        }
    }
}

/// Every valid pattern by depth-first search, in lexicographic order (a
/// pattern precedes its extensions).
pub fn enumerate_valid_patterns() -> Vec<UnlockPattern> {
    (0..NODES as u8)
        .into_par_iter()
        .map(|start| {
            let mut out = Vec::new();
            extend(&mut vec![start], 1 << start, &mut out);
            out
        })
        .collect::<Vec<_>>()
        .concat()
}

/// 3-gram model over nodes plus terminal symbol, with probabilities
/// renormalized over the valid-pattern space.
pub struct PatternModel {
    model: MarkovModel,
    space: Vec<UnlockPattern>,
    probs: Vec<f64>,
    raw_mass: f64,
}

impl PatternModel {
    pub fn fit(corpus: &[UnlockPattern], order: usize, smoothing: Smoothing) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InsufficientData("empty pattern corpus".into()));
        }
        let seqs: Vec<Vec<u16>> = corpus.iter().map(|p| p.to_sequence()).collect();
        let model = MarkovModel::fit_sequences(&seqs, PATTERN_ALPHABET, order, smoothing, None)?;
        let space = enumerate_valid_patterns();
        let mut probs: Vec<f64> = space.par_iter().map(|p| model.seq_prob(&p.to_sequence())).collect();
        let raw_mass: f64 = probs.iter().sum();
        if raw_mass <= 0.0 {
            return Err(Error::Degenerate("model gives no mass to valid patterns".into()));
        }
        probs.iter_mut().for_each(|p| *p /= raw_mass);
        Ok(PatternModel {
            model,
            space,
            probs,
            raw_mass,
        })
    }

    pub fn markov(&self) -> &MarkovModel {
        &self.model
    }

    /// Mass the unrestricted chain puts on valid patterns before renormalizing.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn space(&self) -> &[UnlockPattern] {
        &self.space
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, p: &UnlockPattern) -> f64 {
        self.space.binary_search(p).map(|i| self.probs[i]).unwrap_or(0.0)
    }

    /// Patterns by descending probability, ties in lexicographic order.
    pub fn ranked(&self) -> Vec<(&UnlockPattern, f64)> {
        let mut v: Vec<(&UnlockPattern, f64)> = self.space.iter().zip(self.probs.iter().copied()).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn partial_guessing(&self, alphas: &[f64]) -> Result<Vec<PartialGuessReport>> {
        partial_guessing_sorted(self.ranked().into_iter().map(|r| r.1), alphas)
    }
}

pub fn pattern_model(corpus: &[UnlockPattern], order: usize, smoothing: Smoothing) -> Result<PatternModel> {
    PatternModel::fit(corpus, order, smoothing)
}

// A few shapes people like to draw.
const FAVOURITES: [&[u8]; 8] = [
    &[0, 3, 6, 7, 8],
    &[0, 1, 2, 4, 6, 7, 8],
    &[0, 1, 2, 5, 8],
    &[0, 4, 8, 5, 2],
    &[0, 3, 4, 5, 8],
    &[2, 1, 0, 3, 6, 7, 8],
    &[0, 1, 2, 5, 4, 3, 6, 7, 8],
    &[6, 3, 0, 4, 2, 5, 8],
];

/// Human-like synthetic patterns: favourite shapes, starts biased to the
/// top-left, short lengths, and short strokes.
pub fn synth_patterns(n: usize, seed: u64) -> Vec<UnlockPattern> {
    let mut rng = rng_for(seed, "synth/patterns");
    let start_w = WeightedIndex::new([8.0, 3.0, 2.0, 3.0, 2.0, 1.0, 2.0, 1.0, 1.0]).expect("static weights");
    let len_w = WeightedIndex::new([5.0, 6.0, 4.0, 3.0, 2.0, 1.0]).expect("static weights");
    let fav_w = WeightedIndex::new([6.0, 5.0, 4.0, 3.0, 3.0, 2.0, 2.0, 1.0]).expect("static weights");
    (0..n)
        .map(|_| {
            if rng.random_bool(0.3) {
                return UnlockPattern::new(FAVOURITES[fav_w.sample(&mut rng)].to_vec()).expect("valid favourite");
            }
            let target = MIN_LEN + len_w.sample(&mut rng);
            loop {
                let start = start_w.sample(&mut rng) as u8;
                let mut nodes = vec![start];
                let mut visited = 1u16 << start;
                while nodes.len() < target {
                    let last = *nodes.last().expect("non-empty");
                    let cands: Vec<u8> = (0..NODES as u8).filter(|&m| can_move(visited, last, m)).collect();
                    if cands.is_empty() {
                        break;
                    }
                    let weights: Vec<f64> = cands
                        .iter()
                        .map(|&m| {
                            let dr = (m / 3) as f64 - (last / 3) as f64;
                            let dc = (m % 3) as f64 - (last % 3) as f64;
                            let d2 = dr * dr + dc * dc;
                            // rightwards and downwards strokes are preferred
                            (1.0 + 0.5 * dc.max(0.0) + 0.3 * dr.max(0.0)) / (d2 * d2)
                        })
                        .collect();
                    let pick = WeightedIndex::new(&weights).expect("positive weights").sample(&mut rng);
                    nodes.push(cands[pick]);
                    visited |= 1 << cands[pick];
                }
                if nodes.len() == target {
                    return UnlockPattern::new(nodes).expect("built from valid moves");
                }
            }
        })
        .collect()
}
