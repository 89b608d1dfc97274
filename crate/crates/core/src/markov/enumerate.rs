// SPDX-License-Identifier: Apache-2.0

//! Best-first enumeration of words in descending probability.
//!
//! The search tree has the start prefix as its first level and one level per
//! transition below it. Every node carries an upper bound on the probability
//! of any word below it: the exact prefix probability times the best
//! achievable completion `B[r][ctx]` over the `r` remaining transitions,
//! computed by a max-product pass. Children of a node are kept in a lazily
//! materialized list sorted by that bound, and a popped node only pushes its
//! next sibling and its first child, so the frontier grows by at most one
//! node per pop.
//!
//! Ties are broken lexicographically on symbol indices.

use std::cell::OnceCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use smallvec::SmallVec;

use super::MarkovModel;
use crate::sax::SaxWord;
use crate::{Error, Result};

pub type Symbols = SmallVec<[u16; 16]>;

// Inflation applied to partial-node bounds so rounding in the product can
// never push a descendant above its ancestor's priority.
const BOUND_SLACK: f64 = 1.0 + 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Guess {
    pub symbols: Symbols,
    pub prob: f64,
}

impl Guess {
    pub fn to_sax_word(&self, beta: usize) -> SaxWord {
        SaxWord::from_indices(&self.symbols, beta, 0)
    }
}

#[derive(Debug)]
struct Node {
    priority: f64,
    complete: bool,
    word: Symbols,
    // exact probability of `word`
    prob: f64,
    // probability of the parent prefix (1 at the start level)
    parent_prob: f64,
    // context of the parent; unused at the start level
    parent_ctx: usize,
    // tree level: 0 = start prefix, i = i-th transition
    level: usize,
    // position in the parent's sorted child list
    rank: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: larger = popped first
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.complete.cmp(&self.complete))
            .then_with(|| other.word.cmp(&self.word))
    }
}

/// Lazily produced guesses in non-increasing probability order.
pub struct GuessStream<'m> {
    model: &'m MarkovModel,
    length: usize,
    transitions: usize,
    // completion[r][ctx]: best probability of r more transitions from ctx
    completion: Vec<Vec<f64>>,
    start_order: Vec<u32>,
    // sorted children per (remaining, ctx), built on first use
    child_order: Vec<OnceCell<Box<[u16]>>>,
    heap: BinaryHeap<Node>,
    limit: Option<usize>,
    emitted: usize,
    exhausted: bool,
}

impl<'m> GuessStream<'m> {
    pub fn new(model: &'m MarkovModel, limit: Option<usize>) -> Result<Self> {
        let length = model
            .word_length()
            .ok_or_else(|| Error::invalid("enumeration needs a fixed word length"))?;
        if limit == Some(0) {
            return Err(Error::invalid("guess limit must be at least 1"));
        }
        let k = model.order() - 1;
        let transitions = length - k;
        let contexts = model.context_count();
        let a = model.alphabet();

        let mut completion = vec![vec![1.0; contexts]];
        for r in 1..=transitions {
            let prev = &completion[r - 1];
            let row: Vec<f64> = (0..contexts)
                .map(|c| {
                    let trans = model.transition_row(c);
                    (0..a)
                        .map(|s| trans[s] * prev[model.next_context(c, s as u16)])
                        .fold(0.0, f64::max)
                })
                .collect();
            completion.push(row);
        }

        let start_key = |c: usize| model.start_prob(c) * completion[transitions][c];
        let mut start_order: Vec<u32> = (0..contexts as u32).filter(|&c| start_key(c as usize) > 0.0).collect();
        start_order.sort_by(|&x, &y| start_key(y as usize).total_cmp(&start_key(x as usize)).then(x.cmp(&y)));

        let mut stream = GuessStream {
            model,
            length,
            transitions,
            completion,
            start_order,
            child_order: (0..transitions * contexts).map(|_| OnceCell::new()).collect(),
            heap: BinaryHeap::new(),
            limit,
            emitted: 0,
            exhausted: false,
        };
        if let Some(node) = stream.start_node(0) {
            stream.heap.push(node);
        }
        Ok(stream)
    }

    /// Number of guesses produced so far.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// True once every non-zero-probability word has been produced.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    /// True if the stream stopped before reaching its limit.
    pub fn ended_early(&self) -> bool {
        self.exhausted && self.limit.is_some_and(|l| self.emitted < l)
    }

    pub fn word_length(&self) -> usize {
        self.length
    }

    fn start_node(&self, rank: usize) -> Option<Node> {
        let ctx = *self.start_order.get(rank)? as usize;
        let prob = self.model.start_prob(ctx);
        let word: Symbols = self.model.decode_context(ctx).into_iter().collect();
        let complete = self.transitions == 0;
        let priority = if complete {
            prob
        } else {
            prob * self.completion[self.transitions][ctx] * BOUND_SLACK
        };
        Some(Node {
            priority,
            complete,
            word,
            prob,
            parent_prob: 1.0,
            parent_ctx: 0,
            level: 0,
            rank,
        })
    }

    fn children(&self, ctx: usize, remaining: usize) -> &[u16] {
        let idx = (remaining - 1) * self.model.context_count() + ctx;
        self.child_order[idx].get_or_init(|| {
            let tail = &self.completion[remaining - 1];
            let key = |s: u16| self.model.transition_prob(ctx, s) * tail[self.model.next_context(ctx, s)];
            let mut syms: Vec<u16> = (0..self.model.alphabet() as u16).filter(|&s| key(s) > 0.0).collect();
            syms.sort_by(|&x, &y| key(y).total_cmp(&key(x)).then(x.cmp(&y)));
            syms.into_boxed_slice()
        })
    }

    // child number `rank` of a prefix with probability `parent_prob` whose
    // last context is `parent_ctx`, at tree level `level` (>= 1)
    fn child_node(&self, parent: &Symbols, parent_prob: f64, parent_ctx: usize, level: usize, rank: usize) -> Option<Node> {
        let remaining = self.transitions - level + 1;
        let sym = *self.children(parent_ctx, remaining).get(rank)?;
        let t = self.model.transition_prob(parent_ctx, sym);
        let prob = parent_prob * t;
        let mut word = parent.clone();
        word.push(sym);
        let complete = remaining == 1;
        let priority = if complete {
            prob
        } else {
            let next = self.model.next_context(parent_ctx, sym);
            parent_prob * (t * self.completion[remaining - 1][next]) * BOUND_SLACK
        };
        Some(Node {
            priority,
            complete,
            word,
            prob,
            parent_prob,
            parent_ctx,
            level,
            rank,
        })
    }

    fn sibling(&self, node: &Node) -> Option<Node> {
        if node.level == 0 {
            return self.start_node(node.rank + 1);
        }
        let mut prefix = node.word.clone();
        prefix.pop();
        self.child_node(&prefix, node.parent_prob, node.parent_ctx, node.level, node.rank + 1)
    }

    fn last_context(&self, word: &[u16]) -> usize {
        let k = self.model.order() - 1;
        self.model.context_index(&word[word.len() - k..])
    }
}

impl Iterator for GuessStream<'_> {
    type Item = Guess;

    fn next(&mut self) -> Option<Guess> {
        if self.limit.is_some_and(|l| self.emitted >= l) {
            return None;
        }
        loop {
            let Some(node) = self.heap.pop() else {
                self.exhausted = true;
                return None;
            };
            if let Some(sib) = self.sibling(&node) {
                self.heap.push(sib);
            }
            if node.complete {
                self.emitted += 1;
                if self.heap.is_empty() {
                    self.exhausted = true;
                }
                return Some(Guess {
                    symbols: node.word,
                    prob: node.prob,
                });
            }
            let ctx = self.last_context(&node.word);
            if let Some(child) = self.child_node(&node.word, node.prob, ctx, node.level + 1, 0) {
                self.heap.push(child);
            }
        }
    }
}
