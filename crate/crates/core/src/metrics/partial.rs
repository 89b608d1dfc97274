// SPDX-License-Identifier: Apache-2.0

//! Partial guessing metric `G_alpha` and its conversion to bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ProbHistogram;
use crate::{Error, Result};

// Slack when comparing a cumulative sum against alpha, so that e.g. twenty
// additions of 0.01 count as reaching 0.2.
const CUMULATIVE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PgmMethod {
    Exact,
    Histogram,
}

impl fmt::Display for PgmMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PgmMethod::Exact => "exact",
            PgmMethod::Histogram => "histogram",
        })
    }
}

impl std::str::FromStr for PgmMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(PgmMethod::Exact),
            "histogram" => Ok(PgmMethod::Histogram),
            other => Err(Error::invalid(format!("unknown pgm method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialGuessReport {
    pub alpha: f64,
    /// Guesses needed to reach `alpha`; a float because it can exceed 2^64.
    pub mu_alpha: f64,
    pub lambda_mu: f64,
    pub g_alpha: f64,
    pub bits: f64,
    pub method: PgmMethod,
    pub bucket_width: Option<f64>,
    /// Worst-case error of any single word's log2-probability in the
    /// histogram, in bits.
    pub bits_error_bound: Option<f64>,
}

/// Effective key length of `G_alpha`: the size (in bits) of a uniform
/// distribution with the same partial guesswork at the same success rate.
/// Gives `log2 N` for any alpha on a uniform distribution over `N` words.
pub fn effective_bits(g_alpha: f64, lambda_mu: f64) -> f64 {
    (2.0 * g_alpha / lambda_mu - 1.0).log2() + (1.0 / (2.0 - lambda_mu)).log2()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn report(alpha: f64, mu: f64, lambda: f64, weighted: f64, method: PgmMethod) -> PartialGuessReport {
    let g = (1.0 - lambda) * mu + weighted;
    PartialGuessReport {
        alpha,
        mu_alpha: mu,
        lambda_mu: lambda,
        g_alpha: g,
        bits: effective_bits(g, lambda),
        method,
        bucket_width: None,
        bits_error_bound: None,
    }
}

/// Exact metric from probabilities already in guessing order (non-increasing).
/// Handles several alphas in one pass; reports come back in input order.
pub fn partial_guessing_sorted<I>(probs: I, alphas: &[f64]) -> Result<Vec<PartialGuessReport>>
where
    I: IntoIterator<Item = f64>,
{
    for &a in alphas {
        check_alpha(a)?;
    }
    let mut order: Vec<usize> = (0..alphas.len()).collect();
    order.sort_by(|&x, &y| alphas[x].total_cmp(&alphas[y]));
    let mut out: Vec<Option<PartialGuessReport>> = vec![None; alphas.len()];
    let mut next = 0;
    let mut cum = 0.0;
    let mut weighted = 0.0;
    let mut prev = f64::INFINITY;
    for (i, p) in probs.into_iter().enumerate() {
        if next == order.len() {
            break;
        }
        if p > prev {
            return Err(Error::invalid("probabilities are not in non-increasing order"));
        }
        prev = p;
        let j = (i + 1) as f64;
        cum += p;
        weighted += p * j;
        while next < order.len() && cum >= alphas[order[next]] - CUMULATIVE_EPS {
            let a = alphas[order[next]];
            out[order[next]] = Some(report(a, j, cum, weighted, PgmMethod::Exact));
            next += 1;
        }
    }
    if next < order.len() {
        return Err(Error::Unreachable(format!(
            "total probability {cum} never reaches alpha = {}",
            alphas[order[next]]
        )));
    }
    Ok(out.into_iter().map(|r| r.expect("filled")).collect())
}

/// Exact metric from an unordered probability list.
pub fn partial_guessing(probs: &[f64], alphas: &[f64]) -> Result<Vec<PartialGuessReport>> {
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    partial_guessing_sorted(sorted, alphas)
}

/// Metric from a histogram, treating each bucket's words as equiprobable at
/// the bucket's mean probability.
pub fn partial_guessing_histogram(hist: &ProbHistogram, alphas: &[f64]) -> Result<Vec<PartialGuessReport>> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut cum = 0.0;
        let mut before = 0.0; // words guessed in earlier buckets
        let mut weighted = 0.0;
        let mut found = None;
        for b in hist.buckets_by_probability() {
            let q = b.mass / b.count;
            if cum + b.mass >= alpha - CUMULATIVE_EPS {
                let need = ((alpha - CUMULATIVE_EPS - cum) / q).ceil().clamp(1.0, b.count);
                let lambda = cum + need * q;
                weighted += q * (need * before + need * (need + 1.0) / 2.0);
                found = Some(report(alpha, before + need, lambda, weighted, PgmMethod::Histogram));
                break;
            }
            cum += b.mass;
            weighted += q * (b.count * before + b.count * (b.count + 1.0) / 2.0);
            before += b.count;
        }
        let mut r = found.ok_or_else(|| {
            Error::Unreachable(format!(
                "histogram holds total probability {} < alpha = {alpha}",
                hist.total_mass()
            ))
        })?;
        r.bucket_width = Some(hist.bucket_width());
        r.bits_error_bound = Some(hist.error_bound_bits());
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_hundred() {
        let r = &partial_guessing(&[0.01; 100], &[0.2]).unwrap()[0];
        assert_eq!(r.mu_alpha, 20.0);
        assert!((r.lambda_mu - 0.2).abs() < 1e-12);
        // 0.8 * 20 + sum_{i<=20} i / 100
        assert!((r.g_alpha - 18.1).abs() < 1e-12);
        assert!((r.bits - 100f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn three_words() {
        let r = &partial_guessing(&[0.25, 0.5, 0.25], &[0.6]).unwrap()[0];
        assert_eq!(r.mu_alpha, 2.0);
        assert_eq!(r.lambda_mu, 0.75);
        assert_eq!(r.g_alpha, 1.5);
    }

    #[test]
    fn single_word() {
        for a in [0.1, 0.5, 0.99] {
            let r = &partial_guessing(&[1.0], &[a]).unwrap()[0];
            assert_eq!((r.mu_alpha, r.g_alpha, r.bits), (1.0, 1.0, 0.0));
        }
    }

    #[test]
    fn alpha_order_is_preserved() {
        let rs = partial_guessing(&[0.01; 100], &[0.5, 0.1]).unwrap();
        assert_eq!(rs[0].mu_alpha, 50.0);
        assert_eq!(rs[1].mu_alpha, 10.0);
    }

    #[test]
    fn errors() {
        assert!(partial_guessing(&[1.0], &[0.0]).is_err());
        assert!(partial_guessing(&[1.0], &[1.0]).is_err());
        assert!(matches!(partial_guessing(&[0.1, 0.1], &[0.5]), Err(Error::Unreachable(_))));
        assert!(partial_guessing_sorted([0.1, 0.2], &[0.25]).is_err());
    }

    #[test]
    fn uniform_bits_at_every_alpha() {
        let n = 1000;
        let probs = vec![1.0 / n as f64; n];
        for a in [0.05, 0.2, 0.5, 0.9] {
            let r = &partial_guessing(&probs, &[a]).unwrap()[0];
            assert!((r.bits - (n as f64).log2()).abs() < 1e-6, "alpha {a}: {}", r.bits);
            assert!(r.g_alpha <= r.mu_alpha);
        }
    }
}
