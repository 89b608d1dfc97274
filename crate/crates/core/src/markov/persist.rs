// SPDX-License-Identifier: Apache-2.0

//! Versioned text format for trained models.
//!
//! ```text
//! recpass-markov 1
//! order 3
//! alphabet 36
//! word_length 8
//! beta 6
//! smoothing good-turing
//! corpus_size 5026
//! start 4.17 12
//! trans 4.17 3 5
//! end
//! ```
//!
//! Only non-zero counts are written. Contexts are dot-separated symbol
//! indices. Probabilities are re-derived on load. Lines starting with `#`
//! are ignored, so artifacts can carry a provenance header.

use std::io::{BufRead, Write};

use super::{MarkovModel, Smoothing};
use crate::{Error, Result};

pub const FORMAT_TAG: &str = "recpass-markov";
pub const FORMAT_VERSION: u32 = 1;

fn fmt_ctx(ctx: &[u16]) -> String {
    ctx.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
}

impl MarkovModel {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{FORMAT_TAG} {FORMAT_VERSION}")?;
        writeln!(out, "order {}", self.order)?;
        writeln!(out, "alphabet {}", self.alphabet)?;
        match self.word_length {
            Some(l) => writeln!(out, "word_length {l}")?,
            None => writeln!(out, "word_length none")?,
        }
        match self.beta {
            Some(b) => writeln!(out, "beta {b}")?,
            None => writeln!(out, "beta none")?,
        }
        writeln!(out, "smoothing {}", self.smoothing)?;
        writeln!(out, "corpus_size {}", self.corpus_size)?;
        for (ctx, &c) in self.start_counts.cells.iter().enumerate() {
            if c > 0 {
                writeln!(out, "start {} {c}", fmt_ctx(&self.decode_context(ctx)))?;
            }
        }
        let a = self.alphabet;
        for (i, &c) in self.transition_counts.cells.iter().enumerate() {
            if c > 0 {
                writeln!(out, "trans {} {} {c}", fmt_ctx(&self.decode_context(i / a)), i % a)?;
            }
        }
        writeln!(out, "end")?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .enumerate()
            .map(|(i, l)| l.map(|l| (i + 1, l)))
            .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty() || l.starts_with('#')));
        let bad = |line: usize, msg: &str| Error::ModelFormat(format!("line {line}: {msg}"));

        let mut next = |want: &str| -> Result<(usize, String)> {
            let (no, l) = lines
                .next()
                .ok_or_else(|| Error::ModelFormat(format!("missing '{want}'")))??;
            let rest = l
                .strip_prefix(want)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| bad(no, &format!("expected '{want}'")))?;
            Ok((no, rest.trim().to_string()))
        };

        let (no, version) = next(FORMAT_TAG)?;
        if version != FORMAT_VERSION.to_string() {
            return Err(bad(no, &format!("unsupported version {version}")));
        }
        let num = |(no, v): (usize, String)| -> Result<usize> { v.parse().map_err(|_| bad(no, "expected an integer")) };
        let opt = |(no, v): (usize, String)| -> Result<Option<usize>> {
            if v == "none" {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad(no, "expected an integer or 'none'"))
            }
        };
        let order = num(next("order")?)?;
        let alphabet = num(next("alphabet")?)?;
        let word_length = opt(next("word_length")?)?;
        let beta = opt(next("beta")?)?;
        let (no, sm) = next("smoothing")?;
        let smoothing: Smoothing = sm.parse().map_err(|e: Error| bad(no, &e.to_string()))?;
        let (no, cs) = next("corpus_size")?;
        let corpus_size: u64 = cs.parse().map_err(|_| bad(no, "expected an integer"))?;

        let mut model = MarkovModel::empty(alphabet, order, smoothing, word_length)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        model.beta = beta;
        if let Some(b) = beta {
            if b * b != alphabet {
                return Err(Error::ModelFormat(format!("beta {b} does not match alphabet {alphabet}")));
            }
        }
        model.corpus_size = corpus_size;

        let k = order - 1;
        let parse_ctx = |no: usize, s: &str| -> Result<usize> {
            let syms: Vec<u16> = s
                .split('.')
                .map(|p| p.parse::<u16>().ok().filter(|&v| (v as usize) < alphabet))
                .collect::<Option<_>>()
                .ok_or_else(|| bad(no, "bad context"))?;
            if syms.len() != k {
                return Err(bad(no, "context has the wrong length"));
            }
            Ok(syms.iter().fold(0, |acc, &v| acc * alphabet + v as usize))
        };
        let mut ended = false;
        for item in lines.by_ref() {
            let (no, line) = item?;
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["start", ctx, c] => {
                    let i = parse_ctx(no, ctx)?;
                    model.start_counts.cells[i] = c.parse().map_err(|_| bad(no, "bad count"))?;
                }
                ["trans", ctx, sym, c] => {
                    let i = parse_ctx(no, ctx)?;
                    let s: usize = sym
                        .parse()
                        .ok()
                        .filter(|&s| s < alphabet)
                        .ok_or_else(|| bad(no, "bad symbol"))?;
                    model.transition_counts.cells[i * alphabet + s] = c.parse().map_err(|_| bad(no, "bad count"))?;
                }
                ["end"] => {
                    ended = true;
                    break;
                }
                _ => return Err(bad(no, "unrecognized record")),
            }
        }
        if !ended {
            return Err(Error::ModelFormat("missing 'end'".into()));
        }
        if model.start_counts.total() != corpus_size {
            return Err(Error::ModelFormat("start counts do not add up to corpus_size".into()));
        }
        model.realize()?;
        Ok(model)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

pub fn write_model<W: Write>(model: &MarkovModel, out: W) -> Result<()> {
    model.write_to(out)
}

pub fn read_model<R: BufRead>(input: R) -> Result<MarkovModel> {
    MarkovModel::read_from(input)
}
