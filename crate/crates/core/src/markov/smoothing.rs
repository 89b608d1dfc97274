// SPDX-License-Identifier: Apache-2.0

//! Turning count tables into probability tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_ADDITIVE_LAMBDA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Smoothing {
    None,
    Additive { lambda: f64 },
    GoodTuring,
}

impl Smoothing {
    pub fn additive() -> Self {
        Smoothing::Additive {
            lambda: DEFAULT_ADDITIVE_LAMBDA,
        }
    }

    pub fn is_smoothed(&self) -> bool {
        !matches!(self, Smoothing::None)
    }

    pub fn validate(&self) -> Result<()> {
        if let Smoothing::Additive { lambda } = self {
            if !(*lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::invalid(format!("additive lambda must be > 0, got {lambda}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::None => f.write_str("none"),
            Smoothing::Additive { lambda } => write!(f, "additive:{lambda}"),
            Smoothing::GoodTuring => f.write_str("good-turing"),
        }
    }
}

impl FromStr for Smoothing {
    type Err = Error;

    /// `none`, `additive`, `additive:<lambda>` or `good-turing`.
    fn from_str(s: &str) -> Result<Self> {
        let sm = match s {
            "none" => Smoothing::None,
            "additive" => Smoothing::additive(),
            "good-turing" | "goodturing" | "gt" => Smoothing::GoodTuring,
            other => match other.strip_prefix("additive:") {
                Some(l) => Smoothing::Additive {
                    lambda: l
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad additive lambda '{l}'")))?,
                },
                None => return Err(Error::invalid(format!("unknown smoothing '{other}'"))),
            },
        };
        sm.validate()?;
        Ok(sm)
    }
}

/// Dense `rows x cols` table of counts; each row is one conditioning context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<u64>,
}

impl CountTable {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CountTable {
            rows,
            cols,
            cells: vec![0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }
}

/// Relative frequencies per row; rows that were never observed stay all zero.
pub fn apply_none(counts: &CountTable) -> Vec<f64> {
    let mut out = vec![0.0; counts.cells.len()];
    for r in 0..counts.rows {
        let row = counts.row(r);
        let total: u64 = row.iter().sum();
        if total == 0 {
            continue;
        }
        for (o, &c) in out[r * counts.cols..].iter_mut().zip(row) {
            *o = c as f64 / total as f64;
        }
    }
    out
}

/// `(count + lambda) / (total + lambda * cols)` in every row.
pub fn apply_additive(counts: &CountTable, lambda: f64) -> Result<Vec<f64>> {
    Smoothing::Additive { lambda }.validate()?;
    let mut out = vec![0.0; counts.cells.len()];
    for r in 0..counts.rows {
        let row = counts.row(r);
        let total: u64 = row.iter().sum();
        let denom = total as f64 + lambda * counts.cols as f64;
        for (o, &c) in out[r * counts.cols..].iter_mut().zip(row) {
            *o = (c as f64 + lambda) / denom;
        }
    }
    Ok(out)
}

/// Adjusted counts `r*` for every observed count `r`, from the table-wide
/// count-of-counts.
///
/// Follows the Gale-Sampson simple Good-Turing method: the empirical
/// `(r + 1) N_{r+1} / N_r` is used while it differs significantly (1.96
/// standard deviations) from the log-log linear fit, and the fit takes over
/// for good at the first `r` where it does not, or where `N_{r+1} = 0`.
/// Results are capped at `r`, so smoothing only ever discounts, and forced
/// non-decreasing in `r` so frequency order survives smoothing.
pub fn good_turing_adjusted(count_of_counts: &BTreeMap<u64, u64>) -> BTreeMap<u64, f64> {
    let rs: Vec<(u64, u64)> = count_of_counts.iter().map(|(&r, &n)| (r, n)).collect();
    let slope = sgt_slope(&rs);
    let fitted = |r: f64| r * (1.0 + 1.0 / r).powf(slope + 1.0);

    let mut out = BTreeMap::new();
    let mut switched = false;
    let mut floor = 0.0f64;
    for &(r, n_r) in &rs {
        let next = count_of_counts.get(&(r + 1)).copied().unwrap_or(0);
        let y = fitted(r as f64);
        if !switched {
            if next == 0 {
                switched = true;
            } else {
                let (rf, nr, n1) = (r as f64, n_r as f64, next as f64);
                let x = (rf + 1.0) * n1 / nr;
                let sd = ((rf + 1.0).powi(2) * n1 / (nr * nr) * (1.0 + n1 / nr)).sqrt();
                switched = (x - y).abs() <= 1.96 * sd;
            }
        }
        let adjusted = if switched {
            y
        } else {
            (r + 1) as f64 * next as f64 / n_r as f64
        };
        floor = floor.max(adjusted.min(r as f64));
        out.insert(r, floor);
    }
    out
}

/// Slope of `log Z_r` against `log r`, with `Z_r = N_r / (0.5 (t - q))`.
fn sgt_slope(rs: &[(u64, u64)]) -> f64 {
    if rs.len() < 2 {
        return -2.0;
    }
    let mut pts = Vec::with_capacity(rs.len());
    for (j, &(r, n)) in rs.iter().enumerate() {
        let q = if j == 0 { 0.0 } else { rs[j - 1].0 as f64 };
        let t = if j + 1 < rs.len() {
            rs[j + 1].0 as f64
        } else {
            2.0 * r as f64 - q
        };
        let z = n as f64 / (0.5 * (t - q));
        pts.push(((r as f64).ln(), z.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return -2.0;
    }
    // A slope above -1 would make r* exceed r; the method requires b < -1.
    (sxy / sxx).min(-1.0)
}

#[derive(Debug, Clone)]
pub struct GoodTuringOutcome {
    pub probs: Vec<f64>,
    /// Unseen mass `N_1 / N` before per-row renormalization.
    pub unseen_mass: f64,
    /// True when there were no singletons and the table was left unsmoothed.
    pub fell_back: bool,
}

/// Good-Turing smoothing of one table.
///
/// Seen cells get weight `r* / row_total`; the unseen mass `N_1 / N` is
/// split uniformly over the row's unseen cells; then each row is
/// renormalized. Rows with no observations become uniform.
pub fn apply_good_turing(counts: &CountTable) -> Result<GoodTuringOutcome> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::InsufficientData("Good-Turing on an empty count table".into()));
    }
    let mut coc: BTreeMap<u64, u64> = BTreeMap::new();
    for &c in counts.cells.iter().filter(|&&c| c > 0) {
        *coc.entry(c).or_default() += 1;
    }
    let n1 = coc.get(&1).copied().unwrap_or(0);
    if n1 == 0 {
        return Ok(GoodTuringOutcome {
            probs: apply_none(counts),
            unseen_mass: 0.0,
            fell_back: true,
        });
    }
    let unseen_mass = n1 as f64 / total as f64;
    let adjusted = good_turing_adjusted(&coc);

    let cols = counts.cols;
    let mut out = vec![0.0; counts.cells.len()];
    for r in 0..counts.rows {
        let row = counts.row(r);
        let slot = &mut out[r * cols..(r + 1) * cols];
        let row_total: u64 = row.iter().sum();
        if row_total == 0 {
            slot.fill(1.0 / cols as f64);
            continue;
        }
        let unseen = row.iter().filter(|&&c| c == 0).count();
        for (o, &c) in slot.iter_mut().zip(row) {
            *o = if c > 0 {
                adjusted[&c] / row_total as f64
            } else {
                unseen_mass / unseen as f64
            };
        }
        let z: f64 = slot.iter().sum();
        slot.iter_mut().for_each(|v| *v /= z);
    }
    Ok(GoodTuringOutcome {
        probs: out,
        unseen_mass,
        fell_back: false,
    })
}
