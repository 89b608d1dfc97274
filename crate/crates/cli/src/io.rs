// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use recpass::sax::{encode_dataset, AccountWords};
use recpass::trace::{parse_trace_file, TraceFormat};
use recpass::{MarkovModel, SaxParams, SaxWord, TraceSet};
use serde::Serialize;

use crate::CliError;

pub const WORDS_HEADER: [&str; 4] = ["account_id", "sample_id", "n_original", "word"];

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
}

impl Provenance {
    pub fn comment_lines(&self) -> String {
        format!(
            "# tool={}\n# subcommand={}\n# config={}\n# seed={}\n",
            self.tool, self.subcommand, self.config, self.seed
        )
    }
}

/// Where artifacts go; stdout when no path was given.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub provenance: Provenance,
}

impl Sink {
    pub fn to_stdout(&self) -> bool {
        self.out.is_none()
    }

    /// Writes a text artifact with `#` provenance lines in front.
    pub fn write_commented(&self, body: &[u8]) -> Result<(), CliError> {
        let mut bytes = self.provenance.comment_lines().into_bytes();
        bytes.extend_from_slice(body);
        self.write_raw(&bytes)
    }

    pub fn write_raw(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.out {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                }
                fs::write(p, bytes).map_err(|e| io_err(p, e))
            }
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(bytes).and_then(|_| so.flush()).map_err(|e| io_err(Path::new("<stdout>"), e))
            }
        }
    }

    /// Human summary: stdout normally, stderr when stdout carries the artifact.
    pub fn summary(&self, text: &str) {
        if self.to_stdout() {
            eprintln!("{text}");
        } else {
            println!("{text}");
        }
    }
}

pub fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Domain(format!("{}: {e}", path.display()))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| io_err(path, e))
}

/// Parses a trace dataset; the format follows the extension.
pub fn read_traces(path: &Path) -> Result<(TraceSet, usize), CliError> {
    let bytes = read_bytes(path)?;
    let parsed = parse_trace_file(&bytes, TraceFormat::from_path(path), &path.display().to_string())?;
    for r in &parsed.rejected {
        eprintln!(
            "warning: {} {}/{} line {}: {}",
            path.display(),
            r.account_id,
            r.sample_id,
            r.line,
            r.reason
        );
    }
    if parsed.set.is_empty() {
        return Err(CliError::Domain(format!("{}: no usable traces", path.display())));
    }
    Ok((parsed.set, parsed.rejected.len()))
}

fn first_data_line(bytes: &[u8]) -> Option<&str> {
    std::str::from_utf8(bytes)
        .ok()?
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn is_words_csv(bytes: &[u8]) -> bool {
    first_data_line(bytes).is_some_and(|l| l.split(',').map(str::trim).eq(WORDS_HEADER))
}

/// Rows of a words CSV grouped by account in order of first appearance.
pub fn parse_words(bytes: &[u8], path: &Path) -> Result<Vec<AccountWords>, CliError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let mut groups: Vec<AccountWords> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| CliError::Domain(format!("{} line {line}: {what}", path.display()));
        if rec.len() != WORDS_HEADER.len() {
            return Err(bad("expected 4 fields"));
        }
        let n_original: usize = rec[2].trim().parse().map_err(|_| bad("bad n_original"))?;
        let mut word: SaxWord = rec[3].trim().parse().map_err(|e| bad(&format!("{e}")))?;
        word.n_original = n_original;
        let account = rec[0].trim().to_string();
        let slot = *index.entry(account.clone()).or_insert_with(|| {
            groups.push(AccountWords {
                account,
                words: Vec::new(),
            });
            groups.len() - 1
        });
        groups[slot].words.push(word);
    }
    if groups.is_empty() {
        return Err(CliError::Domain(format!("{}: no words", path.display())));
    }
    Ok(groups)
}

/// SAX words per account from either a words CSV or a trace dataset.
pub fn load_words(path: &Path, params: SaxParams) -> Result<Vec<AccountWords>, CliError> {
    let bytes = read_bytes(path)?;
    if is_words_csv(&bytes) {
        let groups = parse_words(&bytes, path)?;
        for w in groups.iter().flat_map(|g| &g.words) {
            w.check(&params)?;
        }
        Ok(groups)
    } else {
        let parsed = parse_trace_file(&bytes, TraceFormat::from_path(path), &path.display().to_string())?;
        if parsed.set.is_empty() {
            return Err(CliError::Domain(format!("{}: no usable traces", path.display())));
        }
        Ok(encode_dataset(&parsed.set, params)?)
    }
}

/// Word length of a words CSV, if the file is one.
pub fn words_omega(path: &Path) -> Result<Option<usize>, CliError> {
    let bytes = read_bytes(path)?;
    if !is_words_csv(&bytes) {
        return Ok(None);
    }
    Ok(parse_words(&bytes, path)?.first().and_then(|g| g.words.first()).map(|w| w.omega()))
}

/// Templates only, or every sample.
pub fn passwords(groups: &[AccountWords], all_samples: bool) -> Vec<SaxWord> {
    if all_samples {
        groups.iter().flat_map(|g| g.words.iter().cloned()).collect()
    } else {
        groups.iter().filter_map(|g| g.words.first().cloned()).collect()
    }
}

pub fn read_model(path: &Path) -> Result<MarkovModel, CliError> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(recpass::markov::read_model(BufReader::new(f))?)
}

/// Comma-separated floats.
pub fn float_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{what}: '{t}' is not a number")))
        })
        .collect()
}

/// `lo..hi` (inclusive), `a,b,c` or a single value.
pub fn usize_range(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{what}: '{t}' is not a non-negative integer")))
    };
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
        if lo > hi {
            return Err(CliError::Usage(format!("{what}: empty range {s}")));
        }
        Ok((lo..=hi).collect())
    } else {
        s.split(',').map(num).collect()
    }
}

/// A guess count: plain integer or `base^exp`.
pub fn guess_budget(s: &str) -> Result<u64, CliError> {
    let bad = || CliError::Usage(format!("max-guesses: cannot read '{s}'"));
    let v = match s.split_once('^') {
        Some((b, e)) => {
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            let e: u32 = e.trim().parse().map_err(|_| bad())?;
            b.checked_pow(e).ok_or_else(bad)?
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if v == 0 {
        return Err(CliError::Usage("max-guesses must be at least 1".into()));
    }
    Ok(v)
}

/// `ROWSxCOLS`.
pub fn grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("grid: expected ROWSxCOLS, got '{s}'"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}
