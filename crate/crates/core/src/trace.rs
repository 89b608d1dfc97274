// SPDX-License-Identifier: Apache-2.0

//! Trace ingestion, serialization and z-normalization.
//!
//! Two on-disk formats are supported:
//!
//! * delimited text: header `account_id,sample_id,t,x,y`, one point per row,
//!   rows of one sample contiguous;
//! * record stream: one JSON object per line,
//!   `{"account_id": .., "sample_id": .., "points": [[t, x, y], ...]}`.
//!
//! Lines starting with `#` are comments in both formats.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DELIMITED_HEADER: [&str; 5] = ["account_id", "sample_id", "t", "x", "y"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    /// Milliseconds.
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Point { t, x, y }
    }
}

/// One password attempt as captured from the touchscreen.
///
/// Multi-stroke input is expected to be concatenated in time order before it
/// reaches this type.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrace {
    pub account_id: String,
    pub sample_id: String,
    points: Vec<Point>,
}

impl RawTrace {
    pub fn new(
        account_id: impl Into<String>,
        sample_id: impl Into<String>,
        points: Vec<Point>,
    ) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "trace needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(k) = first_decreasing(&points) {
            return Err(Error::invalid(format!("timestamp decreases at point {k}")));
        }
        if points
            .iter()
            .any(|p| !(p.t.is_finite() && p.x.is_finite() && p.y.is_finite()))
        {
            return Err(Error::invalid("non-finite coordinate"));
        }
        Ok(RawTrace {
            account_id: account_id.into(),
            sample_id: sample_id.into(),
            points,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }
}

fn first_decreasing(points: &[Point]) -> Option<usize> {
    points.windows(2).position(|w| w[1].t < w[0].t).map(|i| i + 1)
}

/// Per-dimension z-normalized coordinate series on the sample-index axis.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTrace {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Set when the x dimension was constant and mapped to all zeros.
    pub degenerate_x: bool,
    pub degenerate_y: bool,
}

impl NormalizedTrace {
    /// Normalizes two raw coordinate series.
    pub fn from_series(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InsufficientData("empty series".into()));
        }
        let (x, degenerate_x) = znormalize_series(x);
        let (y, degenerate_y) = znormalize_series(y);
        Ok(NormalizedTrace {
            x,
            y,
            degenerate_x,
            degenerate_y,
        })
    }

    /// Wraps series that are already normalized (or deliberately not).
    pub fn from_normalized(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        Ok(NormalizedTrace {
            x,
            y,
            degenerate_x: false,
            degenerate_y: false,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate_x || self.degenerate_y
    }
}

/// Zero mean, unit population standard deviation. Constant series map to
/// all zeros and are flagged.
pub fn znormalize_series(series: &[f64]) -> (Vec<f64>, bool) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    // Relative threshold: a series whose spread is pure rounding noise is constant.
    let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if std <= scale * 1e-12 {
        return (vec![0.0; series.len()], true);
    }
    (series.iter().map(|v| (v - mean) / std).collect(), false)
}

pub fn znormalize(trace: &RawTrace) -> NormalizedTrace {
    let (x, degenerate_x) = znormalize_series(&trace.xs());
    let (y, degenerate_y) = znormalize_series(&trace.ys());
    NormalizedTrace {
        x,
        y,
        degenerate_x,
        degenerate_y,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

/// A dataset of traces grouped by account.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub source: String,
    pub device_bounds: Option<Bounds>,
    traces: Vec<RawTrace>,
}

impl TraceSet {
    /// Groups traces by account in order of first appearance, keeping the
    /// relative order of samples within an account.
    pub fn new(source: impl Into<String>, traces: Vec<RawTrace>) -> Self {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<RawTrace>> = HashMap::new();
        for t in traces {
            if !groups.contains_key(&t.account_id) {
                order.push(t.account_id.clone());
            }
            groups.entry(t.account_id.clone()).or_default().push(t);
        }
        let traces = order
            .iter()
            .flat_map(|a| groups.remove(a).unwrap_or_default())
            .collect();
        TraceSet {
            source: source.into(),
            device_bounds: None,
            traces,
        }
    }

    pub fn traces(&self) -> &[RawTrace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Accounts in order, each with its samples (first sample is the template).
    pub fn accounts(&self) -> Vec<(&str, &[RawTrace])> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.traces.len() {
            if i == self.traces.len() || self.traces[i].account_id != self.traces[start].account_id
            {
                out.push((self.traces[start].account_id.as_str(), &self.traces[start..i]));
                start = i;
            }
        }
        out
    }

    pub fn account_count(&self) -> usize {
        self.accounts().len()
    }

    /// A new set holding only the listed accounts, in the given order.
    pub fn select_accounts(&self, ids: &[&str]) -> TraceSet {
        let groups: HashMap<&str, &[RawTrace]> = self.accounts().into_iter().collect();
        let traces = ids
            .iter()
            .filter_map(|id| groups.get(id))
            .flat_map(|g| g.iter().cloned())
            .collect();
        TraceSet {
            source: self.source.clone(),
            device_bounds: self.device_bounds,
            traces,
        }
    }

    /// Bounding box over every point in the set.
    pub fn bounding_box(&self) -> Option<Bounds> {
        let mut it = self.traces.iter().flat_map(|t| t.points.iter());
        let first = it.next()?;
        let mut b = Bounds {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for p in it {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        Some(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Delimited,
    RecordStream,
}

impl TraceFormat {
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "delimited-text" | "csv" => Ok(TraceFormat::Delimited),
            "record-stream" | "jsonl" => Ok(TraceFormat::RecordStream),
            other => Err(Error::invalid(format!("unknown trace format '{other}'"))),
        }
    }

    /// Guesses the format from a path's extension; anything but `.jsonl`/`.json` is delimited.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => TraceFormat::RecordStream,
            _ => TraceFormat::Delimited,
        }
    }
}

/// A trace dropped during parsing; the rest of the file is still read.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub account_id: String,
    pub sample_id: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ParsedTraces {
    pub set: TraceSet,
    pub rejected: Vec<Rejection>,
}

pub fn parse_trace_file(bytes: &[u8], format: TraceFormat, source: &str) -> Result<ParsedTraces> {
    match format {
        TraceFormat::Delimited => parse_delimited(bytes, source),
        TraceFormat::RecordStream => parse_record_stream(bytes, source),
    }
}

struct Pending {
    account_id: String,
    sample_id: String,
    points: Vec<Point>,
    first_line: usize,
    bad_line: Option<usize>,
}

impl Pending {
    fn finish(self, traces: &mut Vec<RawTrace>, rejected: &mut Vec<Rejection>) {
        let reject = |line, reason: String| Rejection {
            account_id: self.account_id.clone(),
            sample_id: self.sample_id.clone(),
            line,
            reason,
        };
        if let Some(line) = self.bad_line {
            rejected.push(reject(line, format!("timestamp decreases at line {line}")));
        } else if self.points.len() < 2 {
            rejected.push(reject(self.first_line, "fewer than 2 points".into()));
        } else {
            traces.push(RawTrace {
                account_id: self.account_id,
                sample_id: self.sample_id,
                points: self.points,
            });
        }
    }
}

fn parse_field(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<f64> {
    let raw = rec.get(idx).unwrap_or("");
    let v: f64 = raw.trim().parse().map_err(|_| Error::MalformedRow {
        line,
        reason: format!("column '{}' is not a number: '{raw}'", DELIMITED_HEADER[idx]),
    })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow {
            line,
            reason: format!("column '{}' is not finite", DELIMITED_HEADER[idx]),
        });
    }
    Ok(v)
}

fn parse_delimited(bytes: &[u8], source: &str) -> Result<ParsedTraces> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(bytes);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(csv_error(e)),
    };
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::EmptyInput);
    }
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != DELIMITED_HEADER {
        let line = headers.position().map_or(1, |p| p.line() as usize);
        return Err(Error::MalformedRow {
            line,
            reason: format!("expected header {}", DELIMITED_HEADER.join(",")),
        });
    }

    let mut traces = Vec::new();
    let mut rejected = Vec::new();
    let mut finished: HashSet<(String, String)> = HashSet::new();
    let mut current: Option<Pending> = None;
    let mut rows = 0usize;

    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows += 1;
        if rec.len() != 5 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 5 fields, found {}", rec.len()),
            });
        }
        let account = rec[0].trim();
        let sample = rec[1].trim();
        if account.is_empty() || sample.is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty account_id or sample_id".into(),
            });
        }
        let point = Point::new(
            parse_field(&rec, 2, line)?,
            parse_field(&rec, 3, line)?,
            parse_field(&rec, 4, line)?,
        );

        let same = current
            .as_ref()
            .is_some_and(|p| p.account_id == account && p.sample_id == sample);
        if !same {
            if let Some(p) = current.take() {
                finished.insert((p.account_id.clone(), p.sample_id.clone()));
                p.finish(&mut traces, &mut rejected);
            }
            if finished.contains(&(account.to_string(), sample.to_string())) {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("rows of sample {account}/{sample} are not contiguous"),
                });
            }
            current = Some(Pending {
                account_id: account.to_string(),
                sample_id: sample.to_string(),
                points: Vec::new(),
                first_line: line,
                bad_line: None,
            });
        }
        let p = current.as_mut().expect("pending trace");
        if p.bad_line.is_none() && p.points.last().is_some_and(|last| point.t < last.t) {
            p.bad_line = Some(line);
        }
        p.points.push(point);
    }
    if let Some(p) = current.take() {
        p.finish(&mut traces, &mut rejected);
    }
    if rows == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(ParsedTraces {
        set: TraceSet::new(source, traces),
        rejected,
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::MalformedRow {
        line,
        reason: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    account_id: String,
    sample_id: String,
    points: Vec<[f64; 3]>,
}

fn parse_record_stream(bytes: &[u8], source: &str) -> Result<ParsedTraces> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedRow {
        line: 0,
        reason: format!("not UTF-8: {e}"),
    })?;
    let mut traces = Vec::new();
    let mut rejected = Vec::new();
    let mut records = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        records += 1;
        let rec: TraceRecord = serde_json::from_str(trimmed).map_err(|e| Error::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        if rec.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::MalformedRow {
                line,
                reason: "non-finite coordinate".into(),
            });
        }
        let points: Vec<Point> = rec
            .points
            .iter()
            .map(|p| Point::new(p[0], p[1], p[2]))
            .collect();
        Pending {
            account_id: rec.account_id,
            sample_id: rec.sample_id,
            bad_line: first_decreasing(&points).map(|_| line),
            points,
            first_line: line,
        }
        .finish(&mut traces, &mut rejected);
    }
    if records == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(ParsedTraces {
        set: TraceSet::new(source, traces),
        rejected,
    })
}

pub fn write_traces<W: Write>(set: &TraceSet, format: TraceFormat, out: W) -> Result<()> {
    match format {
        TraceFormat::Delimited => write_delimited(set, out),
        TraceFormat::RecordStream => write_record_stream(set, out),
    }
}

pub fn write_delimited<W: Write>(set: &TraceSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DELIMITED_HEADER)?;
    for t in &set.traces {
        for p in &t.points {
            w.write_record([
                t.account_id.as_str(),
                t.sample_id.as_str(),
                &p.t.to_string(),
                &p.x.to_string(),
                &p.y.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_record_stream<W: Write>(set: &TraceSet, mut out: W) -> Result<()> {
    for t in &set.traces {
        let rec = TraceRecord {
            account_id: t.account_id.clone(),
            sample_id: t.sample_id.clone(),
            points: t.points.iter().map(|p| [p.t, p.x, p.y]).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
