// SPDX-License-Identifier: Apache-2.0

//! 2-D symbolic aggregate approximation.
//!
//! A normalized trace is cut into `omega` segments per dimension (PAA), each
//! segment mean is binned against the `beta - 1` equiprobable breakpoints of
//! the standard normal, and the x/y symbol strings are zipped into one word of
//! `omega` two-dimensional symbols.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::trace::{znormalize, NormalizedTrace, TraceSet};
use crate::{Error, Result};

pub const MIN_BETA: usize = 2;
pub const MAX_BETA: usize = 26;
pub const MIN_OMEGA: usize = 1;
pub const MAX_OMEGA: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct SaxParams {
    omega: usize,
    beta: usize,
}

impl SaxParams {
    pub fn new(omega: usize, beta: usize) -> Result<Self> {
        if !(MIN_OMEGA..=MAX_OMEGA).contains(&omega) {
            return Err(Error::invalid(format!(
                "omega must be in [{MIN_OMEGA}, {MAX_OMEGA}], got {omega}"
            )));
        }
        if !(MIN_BETA..=MAX_BETA).contains(&beta) {
            return Err(Error::invalid(format!(
                "beta must be in [{MIN_BETA}, {MAX_BETA}], got {beta}"
            )));
        }
        Ok(SaxParams { omega, beta })
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    /// Size of the 2-D symbol alphabet, `beta^2`.
    pub fn alphabet_size(&self) -> usize {
        self.beta * self.beta
    }
}

impl Default for SaxParams {
    fn default() -> Self {
        SaxParams { omega: 8, beta: 6 }
    }
}

/// Boundaries of the `beta` equiprobable regions of the standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints {
    values: Vec<f64>,
}

impl Breakpoints {
    pub fn new(beta: usize) -> Result<Self> {
        if beta < MIN_BETA {
            return Err(Error::invalid(format!("beta must be >= 2, got {beta}")));
        }
        let normal = Normal::standard();
        let m = beta - 1;
        let mut values = vec![0.0; m];
        // Lower half from the inverse CDF, upper half mirrored so the set is
        // exactly symmetric and an even beta puts an exact 0 in the middle.
        for i in 0..m / 2 {
            let v = normal.inverse_cdf((i + 1) as f64 / beta as f64);
            values[i] = v;
            values[m - 1 - i] = -v;
        }
        Ok(Breakpoints { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn beta(&self) -> usize {
        self.values.len() + 1
    }

    /// Symbol for a PAA mean: regions are half-open `(low, high]`.
    pub fn symbol(&self, v: f64) -> u8 {
        self.values.partition_point(|&b| b < v) as u8
    }
}

/// The `dist()` lookup used by MINDIST.
#[derive(Debug, Clone, PartialEq)]
pub struct DistTable {
    beta: usize,
    cells: Vec<f64>,
}

impl DistTable {
    pub fn new(breakpoints: &Breakpoints) -> Self {
        let beta = breakpoints.beta();
        let b = breakpoints.values();
        let mut cells = vec![0.0; beta * beta];
        for i in 0..beta {
            for j in 0..beta {
                let (lo, hi) = (i.min(j), i.max(j));
                if hi - lo > 1 {
                    cells[i * beta + j] = b[hi - 1] - b[lo];
                }
            }
        }
        DistTable { beta, cells }
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    #[inline]
    pub fn get(&self, a: u8, b: u8) -> f64 {
        self.cells[a as usize * self.beta + b as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.cells.chunks(self.beta)
    }
}

/// Piecewise aggregate approximation with fractional weighting.
///
/// Sample `j` covers `[j, j + 1)` on the index axis and segment `i` covers
/// `[i n / omega, (i + 1) n / omega)`; a sample straddling a boundary
/// contributes to both segments in proportion to the overlap. Everything is
/// scaled by `omega` so overlaps are integers.
pub fn paa(series: &[f64], omega: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n == 0 {
        return Err(Error::InsufficientData("PAA of an empty series".into()));
    }
    if omega == 0 {
        return Err(Error::invalid("omega must be >= 1"));
    }
    let mut out = Vec::with_capacity(omega);
    for i in 0..omega {
        let (seg_lo, seg_hi) = (i * n, (i + 1) * n);
        let first = seg_lo / omega;
        let last = (seg_hi - 1) / omega;
        let mut acc = 0.0;
        for (j, &v) in series.iter().enumerate().take(last + 1).skip(first) {
            let lo = seg_lo.max(j * omega);
            let hi = seg_hi.min((j + 1) * omega);
            acc += (hi - lo) as f64 * v;
        }
        out.push(acc / n as f64);
    }
    Ok(out)
}

/// A discretized password: `omega` pairs of (x symbol, y symbol).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SaxWord {
    pub symbols: Vec<(u8, u8)>,
    /// Length of the series the word was computed from.
    pub n_original: usize,
}

impl SaxWord {
    pub fn new(symbols: Vec<(u8, u8)>, n_original: usize) -> Self {
        SaxWord {
            symbols,
            n_original,
        }
    }

    pub fn omega(&self) -> usize {
        self.symbols.len()
    }

    pub fn xs(&self) -> Vec<u8> {
        self.symbols.iter().map(|s| s.0).collect()
    }

    pub fn ys(&self) -> Vec<u8> {
        self.symbols.iter().map(|s| s.1).collect()
    }

    /// Flattens each 2-D symbol into `x * beta + y`.
    pub fn to_indices(&self, beta: usize) -> Vec<u16> {
        self.symbols
            .iter()
            .map(|&(x, y)| (x as usize * beta + y as usize) as u16)
            .collect()
    }

    pub fn from_indices(indices: &[u16], beta: usize, n_original: usize) -> Self {
        let symbols = indices
            .iter()
            .map(|&i| ((i as usize / beta) as u8, (i as usize % beta) as u8))
            .collect();
        SaxWord {
            symbols,
            n_original,
        }
    }

    pub fn check(&self, params: &SaxParams) -> Result<()> {
        if self.omega() != params.omega() {
            return Err(Error::ParameterMismatch(format!(
                "word has omega {}, expected {}",
                self.omega(),
                params.omega()
            )));
        }
        let beta = params.beta() as u8;
        if self.symbols.iter().any(|&(x, y)| x >= beta || y >= beta) {
            return Err(Error::ParameterMismatch(format!(
                "word has a symbol outside [0, {beta})"
            )));
        }
        Ok(())
    }
}

/// Text form `x0y5.x1y4....`; `n_original` travels in a separate field.
impl fmt::Display for SaxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, y)) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "x{x}y{y}")?;
        }
        Ok(())
    }
}

impl FromStr for SaxWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("malformed SAX word '{s}'"));
        let symbols = s
            .split('.')
            .map(|cell| {
                let rest = cell.strip_prefix('x').ok_or_else(bad)?;
                let (x, y) = rest.split_once('y').ok_or_else(bad)?;
                Ok((x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>>>()?;
        if symbols.is_empty() {
            return Err(bad());
        }
        Ok(SaxWord {
            symbols,
            n_original: 0,
        })
    }
}

/// Breakpoints and `dist()` table for one parameter pair, built once and
/// shared by reference.
#[derive(Debug, Clone)]
pub struct SaxEncoder {
    params: SaxParams,
    breakpoints: Breakpoints,
    dist: DistTable,
}

impl SaxEncoder {
    pub fn new(params: SaxParams) -> Self {
        let breakpoints = Breakpoints::new(params.beta()).expect("beta validated by SaxParams");
        let dist = DistTable::new(&breakpoints);
        SaxEncoder {
            params,
            breakpoints,
            dist,
        }
    }

    pub fn params(&self) -> SaxParams {
        self.params
    }

    pub fn breakpoints(&self) -> &Breakpoints {
        &self.breakpoints
    }

    pub fn dist_table(&self) -> &DistTable {
        &self.dist
    }

    pub fn encode_1d(&self, series: &[f64]) -> Result<Vec<u8>> {
        Ok(paa(series, self.params.omega())?
            .into_iter()
            .map(|m| self.breakpoints.symbol(m))
            .collect())
    }

    pub fn encode_2d(&self, trace: &NormalizedTrace) -> Result<SaxWord> {
        if trace.x.len() != trace.y.len() {
            return Err(Error::LengthMismatch {
                left: trace.x.len(),
                right: trace.y.len(),
            });
        }
        let xs = self.encode_1d(&trace.x)?;
        let ys = self.encode_1d(&trace.y)?;
        Ok(SaxWord::new(xs.into_iter().zip(ys).collect(), trace.len()))
    }

    pub fn mindist_1d(&self, q: &[u8], c: &[u8], n: usize) -> Result<f64> {
        if q.len() != c.len() {
            return Err(Error::LengthMismatch {
                left: q.len(),
                right: c.len(),
            });
        }
        let sum: f64 = q
            .iter()
            .zip(c)
            .map(|(&a, &b)| self.dist.get(a, b).powi(2))
            .sum();
        Ok(scale(n, q.len()) * sum.sqrt())
    }

    /// Per position the x and y distances are summed, then the sums are
    /// squared and accumulated as in the 1-D case.
    pub fn mindist_2d(&self, q: &SaxWord, c: &SaxWord) -> Result<f64> {
        if q.omega() != c.omega() {
            return Err(Error::LengthMismatch {
                left: q.omega(),
                right: c.omega(),
            });
        }
        let sum: f64 = q
            .symbols
            .iter()
            .zip(&c.symbols)
            .map(|(&(qx, qy), &(cx, cy))| (self.dist.get(qx, cx) + self.dist.get(qy, cy)).powi(2))
            .sum();
        let n = q.n_original.max(c.n_original);
        Ok(scale(n, q.omega()) * sum.sqrt())
    }
}

fn scale(n: usize, omega: usize) -> f64 {
    if omega == 0 {
        return 0.0;
    }
    (n as f64 / omega as f64).sqrt()
}

pub fn breakpoints(beta: usize) -> Result<Breakpoints> {
    Breakpoints::new(beta)
}

pub fn sax_encode_1d(series: &[f64], params: SaxParams) -> Result<Vec<u8>> {
    SaxEncoder::new(params).encode_1d(series)
}

pub fn sax_encode_2d(trace: &NormalizedTrace, params: SaxParams) -> Result<SaxWord> {
    SaxEncoder::new(params).encode_2d(trace)
}

/// Number of distinct words, `(beta^2)^omega`, as a float (it overflows
/// integers long before it matters).
pub fn word_space_size(params: SaxParams) -> f64 {
    (params.alphabet_size() as f64).powi(params.omega() as i32)
}

/// Encoded samples of one account, in dataset order (template first).
#[derive(Debug, Clone, PartialEq)]
pub struct AccountWords {
    pub account: String,
    pub words: Vec<SaxWord>,
}

/// Encodes every trace of a dataset, grouped by account.
pub fn encode_dataset(dataset: &TraceSet, params: SaxParams) -> Result<Vec<AccountWords>> {
    let enc = SaxEncoder::new(params);
    dataset
        .accounts()
        .into_iter()
        .map(|(id, traces)| {
            let words = traces
                .iter()
                .map(|t| enc.encode_2d(&znormalize(t)))
                .collect::<Result<Vec<_>>>()?;
            Ok(AccountWords {
                account: id.to_string(),
                words,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_are_guarded() {
        assert!(SaxParams::new(0, 6).is_err());
        assert!(SaxParams::new(65, 6).is_err());
        assert!(SaxParams::new(8, 1).is_err());
        assert!(SaxParams::new(8, 27).is_err());
        assert_eq!(SaxParams::default(), SaxParams::new(8, 6).unwrap());
    }

    #[test]
    fn beta_two_is_the_median() {
        assert_eq!(Breakpoints::new(2).unwrap().values(), &[0.0]);
        assert!(Breakpoints::new(1).is_err());
    }

    #[test]
    fn breakpoints_symmetric_and_increasing() {
        for beta in 2..=26 {
            let b = Breakpoints::new(beta).unwrap();
            let v = b.values();
            assert_eq!(v.len(), beta - 1);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            for i in 0..v.len() {
                assert!((v[i] + v[v.len() - 1 - i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn paa_examples() {
        assert_eq!(paa(&[1.0, 1.0, 2.0, 2.0], 2).unwrap(), vec![1.0, 2.0]);
        assert_eq!(paa(&[3.0; 6], 3).unwrap(), vec![3.0; 3]);
        let p = paa(&[0.0, 1.0, 2.0], 2).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 5.0 / 3.0).abs() < 1e-12);
        assert!(paa(&[], 2).is_err());
    }

    #[test]
    fn paa_shorter_than_omega_repeats_samples() {
        assert_eq!(paa(&[1.0, 4.0], 4).unwrap(), vec![1.0, 1.0, 4.0, 4.0]);
    }

    #[test]
    fn tie_rule_and_extremes() {
        let enc = SaxEncoder::new(SaxParams::new(2, 6).unwrap());
        assert_eq!(enc.breakpoints().symbol(0.0), 2);
        assert_eq!(enc.encode_1d(&[-2.0, 2.0]).unwrap(), vec![0, 5]);
        let enc = SaxEncoder::new(SaxParams::new(4, 6).unwrap());
        assert_eq!(enc.encode_1d(&[0.0; 8]).unwrap(), vec![2; 4]);
    }

    #[test]
    fn encode_2d_zips_dimensions() {
        let enc = SaxEncoder::new(SaxParams::default());
        let t = NormalizedTrace::from_normalized(vec![-3.0; 16], vec![3.0; 16]).unwrap();
        let w = enc.encode_2d(&t).unwrap();
        assert_eq!(w.symbols, vec![(0, 5); 8]);
        assert_eq!(w.n_original, 16);
        let bad = NormalizedTrace {
            x: vec![0.0; 3],
            y: vec![0.0; 4],
            degenerate_x: false,
            degenerate_y: false,
        };
        assert!(enc.encode_2d(&bad).is_err());
    }

    #[test]
    fn text_form_round_trips() {
        let w = SaxWord::new(vec![(0, 5), (1, 4), (3, 3)], 0);
        assert_eq!(w.to_string(), "x0y5.x1y4.x3y3");
        assert_eq!(w.to_string().parse::<SaxWord>().unwrap(), w);
        assert!("x0y".parse::<SaxWord>().is_err());
        assert!("".parse::<SaxWord>().is_err());
    }

    #[test]
    fn mindist_examples() {
        let enc = SaxEncoder::new(SaxParams::new(2, 6).unwrap());
        assert_eq!(enc.mindist_1d(&[0, 2], &[0, 2], 16).unwrap(), 0.0);
        let ac = enc.dist_table().get(0, 2);
        let d = enc.mindist_1d(&[0, 2], &[2, 0], 16).unwrap();
        assert!((d - 8f64.sqrt() * (2.0 * ac * ac).sqrt()).abs() < 1e-12);
        assert!((d - 2.16).abs() < 0.02);
        assert!(enc.mindist_1d(&[0], &[0, 1], 4).is_err());
    }

    #[test]
    fn mindist_2d_reduces_to_1d_when_y_matches() {
        let enc = SaxEncoder::new(SaxParams::new(3, 6).unwrap());
        let q = SaxWord::new(vec![(0, 3), (5, 1), (2, 2)], 30);
        let c = SaxWord::new(vec![(4, 3), (1, 1), (2, 2)], 30);
        let d2 = enc.mindist_2d(&q, &c).unwrap();
        let d1 = enc.mindist_1d(&q.xs(), &c.xs(), 30).unwrap();
        assert!((d2 - d1).abs() < 1e-12);
        assert_eq!(enc.mindist_2d(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn indices_round_trip() {
        let w = SaxWord::new(vec![(0, 5), (5, 0), (2, 3)], 7);
        assert_eq!(w.to_indices(6), vec![5, 30, 15]);
        assert_eq!(SaxWord::from_indices(&w.to_indices(6), 6, 7), w);
    }
}
