// SPDX-License-Identifier: Apache-2.0

//! Human-bias statistics: where strokes start and end on screen, and how
//! concentrated symbol n-grams are.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::sax::SaxWord;
use crate::trace::{Bounds, TraceSet};
use crate::{Error, Result};

pub const DEFAULT_GRID: (usize, usize) = (10, 10);

/// Start and end point fractions on a `rows x cols` grid; row 0 is the top
/// (smallest y), column 0 the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub bounds: Bounds,
    /// Row-major fractions of traces whose first point falls in each cell.
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl Heatmap {
    pub fn start_at(&self, row: usize, col: usize) -> f64 {
        self.start[row * self.cols + col]
    }

    pub fn end_at(&self, row: usize, col: usize) -> f64 {
        self.end[row * self.cols + col]
    }

    /// Per-column totals of a row-major matrix.
    pub fn column_marginal(&self, m: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| m[r * self.cols + c]).sum())
            .collect()
    }
}

fn cell(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((v - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)
}

/// Bins every trace's first and last raw point into a grid laid over the
/// bounding box of the whole dataset.
pub fn start_end_heatmap(dataset: &TraceSet, rows: usize, cols: usize) -> Result<Heatmap> {
    if rows < 2 || cols < 2 {
        return Err(Error::invalid(format!("grid must be at least 2x2, got {rows}x{cols}")));
    }
    let bounds = dataset.bounding_box().ok_or(Error::EmptyInput)?;
    let mut start = vec![0.0; rows * cols];
    let mut end = vec![0.0; rows * cols];
    let n = dataset.len() as f64;
    let idx = |x: f64, y: f64| {
        cell(y, bounds.min_y, bounds.max_y, rows) * cols + cell(x, bounds.min_x, bounds.max_x, cols)
    };
    for t in dataset.traces() {
        let (f, l) = (t.points()[0], t.points()[t.len() - 1]);
        start[idx(f.x, f.y)] += 1.0 / n;
        end[idx(l.x, l.y)] += 1.0 / n;
    }
    Ok(Heatmap {
        rows,
        cols,
        bounds,
        start,
        end,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramCoverage {
    pub n: usize,
    pub top_k: usize,
    /// Fraction of all n-gram occurrences covered by the `top_k` most frequent.
    pub coverage: f64,
    pub total: u64,
    pub distinct: usize,
    /// Up to `top_k` n-grams (as symbol indices) with their counts, most
    /// frequent first, ties in lexicographic order.
    pub ranked: Vec<(Vec<u16>, u64)>,
}

/// Ranks the n-grams of symbol sequences by frequency.
pub fn ngram_coverage_seqs(seqs: &[Vec<u16>], n: usize, top_k: usize) -> Result<NgramCoverage> {
    if !(2..=3).contains(&n) {
        return Err(Error::invalid(format!("n must be 2 or 3, got {n}")));
    }
    if top_k == 0 {
        return Err(Error::invalid("top_k must be at least 1"));
    }
    let mut counts: HashMap<&[u16], u64> = HashMap::new();
    for s in seqs {
        for w in s.windows(n) {
            *counts.entry(w).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::InsufficientData(format!("no sequence reaches length {n}")));
    }
    let total: u64 = counts.values().sum();
    let mut ranked: Vec<(Vec<u16>, u64)> = counts.into_iter().map(|(k, v)| (k.to_vec(), v)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let distinct = ranked.len();
    ranked.truncate(top_k);
    let covered: u64 = ranked.iter().map(|r| r.1).sum();
    Ok(NgramCoverage {
        n,
        top_k,
        coverage: covered as f64 / total as f64,
        total,
        distinct,
        ranked,
    })
}

/// N-gram coverage over SAX words, using the `beta^2` symbol alphabet.
pub fn ngram_coverage(corpus: &[SaxWord], beta: usize, n: usize, top_k: usize) -> Result<NgramCoverage> {
    let seqs: Vec<Vec<u16>> = corpus.iter().map(|w| w.to_indices(beta)).collect();
    ngram_coverage_seqs(&seqs, n, top_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Point, RawTrace};

    fn stroke(acct: &str, from: (f64, f64), to: (f64, f64)) -> RawTrace {
        RawTrace::new(acct, "s0", vec![Point::new(0.0, from.0, from.1), Point::new(1.0, to.0, to.1)]).unwrap()
    }

    #[test]
    fn top_left_start() {
        let set = TraceSet::new(
            "t",
            vec![stroke("a", (0.0, 0.0), (50.0, 80.0)), stroke("b", (0.0, 0.0), (100.0, 100.0))],
        );
        let h = start_end_heatmap(&set, 10, 10).unwrap();
        assert_eq!(h.start_at(0, 0), 1.0);
        assert!((h.end.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(h.end_at(9, 9), 0.5);
    }

    #[test]
    fn rescaling_invariance() {
        let traces = vec![
            stroke("a", (3.0, 7.0), (90.0, 20.0)),
            stroke("b", (10.0, 40.0), (60.0, 70.0)),
            stroke("c", (55.0, 5.0), (20.0, 95.0)),
        ];
        let scaled: Vec<RawTrace> = traces
            .iter()
            .map(|t| {
                let p = t.points();
                stroke(&t.account_id, (p[0].x * 4.0, p[0].y * 4.0), (p[1].x * 4.0, p[1].y * 4.0))
            })
            .collect();
        let a = start_end_heatmap(&TraceSet::new("a", traces), 10, 10).unwrap();
        let b = start_end_heatmap(&TraceSet::new("b", scaled), 10, 10).unwrap();
        assert_eq!(a.start, b.start);
        assert_eq!(a.end, b.end);
    }

    #[test]
    fn heatmap_errors() {
        assert!(start_end_heatmap(&TraceSet::new("e", vec![]), 10, 10).is_err());
        let set = TraceSet::new("t", vec![stroke("a", (0.0, 0.0), (1.0, 1.0))]);
        assert!(start_end_heatmap(&set, 1, 10).is_err());
    }

    #[test]
    fn repeated_symbol_full_coverage() {
        let c = ngram_coverage_seqs(&[vec![3; 8], vec![3; 8]], 3, 1).unwrap();
        assert_eq!(c.coverage, 1.0);
        assert_eq!(c.total, 12);
    }

    #[test]
    fn coverage_monotone_and_complete() {
        let seqs: Vec<Vec<u16>> = (0..40u16).map(|i| (0..8).map(|j| (i * 3 + j * j) % 7).collect()).collect();
        let mut prev = 0.0;
        let all = ngram_coverage_seqs(&seqs, 2, 1000).unwrap();
        for k in 1..=all.distinct {
            let c = ngram_coverage_seqs(&seqs, 2, k).unwrap().coverage;
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(ngram_coverage_seqs(&seqs, 2, all.distinct).unwrap().coverage, 1.0);
        assert!(ngram_coverage_seqs(&[vec![1, 2]], 3, 5).is_err());
    }
}
