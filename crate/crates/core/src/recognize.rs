// SPDX-License-Identifier: Apache-2.0

//! Similarity scoring between a template and an attempt.
//!
//! Scores are "higher is more similar" and only comparable within one
//! recognizer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sax::{SaxEncoder, SaxParams, SaxWord};
use crate::trace::{znormalize, NormalizedTrace, RawTrace};
use crate::{Error, Result};

pub const PROTRACTOR_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecognizerKind {
    Sax,
    Dtw,
    Protractor,
}

impl RecognizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecognizerKind::Sax => "sax",
            RecognizerKind::Dtw => "dtw",
            RecognizerKind::Protractor => "protractor",
        }
    }
}

impl fmt::Display for RecognizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecognizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sax" => Ok(RecognizerKind::Sax),
            "dtw" => Ok(RecognizerKind::Dtw),
            "protractor" => Ok(RecognizerKind::Protractor),
            other => Err(Error::invalid(format!("unknown recognizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub recognizer: RecognizerKind,
}

/// `-MINDIST` between two words; 0 is the maximum.
pub fn score_sax(encoder: &SaxEncoder, template: &SaxWord, attempt: &SaxWord) -> Result<SimilarityScore> {
    template.check(&encoder.params())?;
    attempt.check(&encoder.params())?;
    Ok(SimilarityScore {
        value: -encoder.mindist_2d(template, attempt)?,
        recognizer: RecognizerKind::Sax,
    })
}

/// DTW alignment cost with Euclidean point distance and no warping window.
pub fn dtw_cost(a: &NormalizedTrace, b: &NormalizedTrace) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("DTW of an empty trace".into()));
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 0..a.len() {
        cur[0] = f64::INFINITY;
        for j in 0..m {
            let d = (a.x[i] - b.x[j]).hypot(a.y[i] - b.y[j]);
            cur[j + 1] = d + prev[j].min(prev[j + 1]).min(cur[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

pub fn score_dtw(template: &NormalizedTrace, attempt: &NormalizedTrace) -> Result<SimilarityScore> {
    Ok(SimilarityScore {
        value: -dtw_cost(template, attempt)?,
        recognizer: RecognizerKind::Dtw,
    })
}

/// A trace resampled, centered and scaled to a unit vector for Protractor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtractorVector(Vec<(f64, f64)>);

impl ProtractorVector {
    pub fn new(trace: &NormalizedTrace) -> Result<Self> {
        let pts: Vec<(f64, f64)> = trace.x.iter().copied().zip(trace.y.iter().copied()).collect();
        let resampled = resample(&pts, PROTRACTOR_POINTS)?;
        let n = resampled.len() as f64;
        let cx = resampled.iter().map(|p| p.0).sum::<f64>() / n;
        let cy = resampled.iter().map(|p| p.1).sum::<f64>() / n;
        let centered: Vec<(f64, f64)> = resampled.iter().map(|p| (p.0 - cx, p.1 - cy)).collect();
        let norm = centered.iter().map(|p| p.0 * p.0 + p.1 * p.1).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate("trace collapses to a single point".into()));
        }
        Ok(ProtractorVector(centered.iter().map(|p| (p.0 / norm, p.1 / norm)).collect()))
    }

    /// Angular distance after the closed-form optimal rotation.
    pub fn angular_distance(&self, other: &ProtractorVector) -> f64 {
        let (mut a, mut b) = (0.0, 0.0);
        for (p, q) in self.0.iter().zip(&other.0) {
            a += p.0 * q.0 + p.1 * q.1;
            b += p.0 * q.1 - p.1 * q.0;
        }
        // max over theta of a cos(theta) + b sin(theta)
        let similarity = a.hypot(b).min(1.0);
        similarity.acos()
    }
}

/// Resamples a polyline into `count` points equally spaced along its length.
fn resample(points: &[(f64, f64)], count: usize) -> Result<Vec<(f64, f64)>> {
    if points.len() < 2 {
        return Err(Error::Degenerate("Protractor needs at least 2 points".into()));
    }
    let path: f64 = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum();
    if path == 0.0 {
        return Err(Error::Degenerate("trace has zero path length".into()));
    }
    let step = path / (count - 1) as f64;
    let mut out = vec![points[0]];
    let mut carried = 0.0;
    let mut prev = points[0];
    let mut i = 1;
    while i < points.len() && out.len() < count - 1 {
        let cur = points[i];
        let d = (cur.0 - prev.0).hypot(cur.1 - prev.1);
        if d > 0.0 && carried + d >= step {
            let f = (step - carried) / d;
            let q = (prev.0 + f * (cur.0 - prev.0), prev.1 + f * (cur.1 - prev.1));
            out.push(q);
            prev = q;
            carried = 0.0;
        } else {
            carried += d;
            prev = cur;
            i += 1;
        }
    }
    out.truncate(count - 1);
    while out.len() < count {
        out.push(*points.last().unwrap());
    }
    Ok(out)
}

/// `-angular distance` after optimal rotation (0 is the maximum). The
/// negated distance orders attempts exactly like Protractor's inverse
/// distance but stays finite for identical inputs.
pub fn score_protractor(template: &NormalizedTrace, attempt: &NormalizedTrace) -> Result<SimilarityScore> {
    let t = ProtractorVector::new(template)?;
    let a = ProtractorVector::new(attempt)?;
    Ok(SimilarityScore {
        value: -t.angular_distance(&a),
        recognizer: RecognizerKind::Protractor,
    })
}

/// A recognizer with its per-trace preprocessing, so pair scoring does not
/// redo the expensive part for every pair.
#[derive(Debug, Clone)]
pub enum Recognizer {
    Sax(SaxEncoder),
    Dtw,
    Protractor,
}

#[derive(Debug, Clone)]
pub enum Prepared {
    Sax(SaxWord),
    Dtw(NormalizedTrace),
    Protractor(ProtractorVector),
}

impl Recognizer {
    pub fn new(kind: RecognizerKind, params: SaxParams) -> Self {
        match kind {
            RecognizerKind::Sax => Recognizer::Sax(SaxEncoder::new(params)),
            RecognizerKind::Dtw => Recognizer::Dtw,
            RecognizerKind::Protractor => Recognizer::Protractor,
        }
    }

    pub fn kind(&self) -> RecognizerKind {
        match self {
            Recognizer::Sax(_) => RecognizerKind::Sax,
            Recognizer::Dtw => RecognizerKind::Dtw,
            Recognizer::Protractor => RecognizerKind::Protractor,
        }
    }

    pub fn prepare(&self, trace: &RawTrace) -> Result<Prepared> {
        let norm = znormalize(trace);
        Ok(match self {
            Recognizer::Sax(enc) => Prepared::Sax(enc.encode_2d(&norm)?),
            Recognizer::Dtw => Prepared::Dtw(norm),
            Recognizer::Protractor => Prepared::Protractor(ProtractorVector::new(&norm)?),
        })
    }

    pub fn score_prepared(&self, template: &Prepared, attempt: &Prepared) -> Result<SimilarityScore> {
        let value = match (self, template, attempt) {
            (Recognizer::Sax(enc), Prepared::Sax(t), Prepared::Sax(a)) => -enc.mindist_2d(t, a)?,
            (Recognizer::Dtw, Prepared::Dtw(t), Prepared::Dtw(a)) => -dtw_cost(t, a)?,
            (Recognizer::Protractor, Prepared::Protractor(t), Prepared::Protractor(a)) => {
                -t.angular_distance(a)
            }
            _ => {
                return Err(Error::ParameterMismatch(
                    "prepared inputs do not match the recognizer".into(),
                ))
            }
        };
        Ok(SimilarityScore {
            value,
            recognizer: self.kind(),
        })
    }

    pub fn score(&self, template: &RawTrace, attempt: &RawTrace) -> Result<SimilarityScore> {
        self.score_prepared(&self.prepare(template)?, &self.prepare(attempt)?)
    }
}
