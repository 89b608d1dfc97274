// SPDX-License-Identifier: Apache-2.0

//! Genuine/impostor pair construction, ROC curves and AUROC.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::recognize::{Prepared, Recognizer, RecognizerKind};
use crate::sax::SaxParams;
use crate::seed::rng_for;
use crate::trace::TraceSet;
use crate::{Error, Result};

pub const DEFAULT_IMPOSTOR_CAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Impostor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSample {
    pub score: f64,
    pub label: Label,
}

impl ScoreSample {
    pub fn genuine(score: f64) -> Self {
        ScoreSample {
            score,
            label: Label::Genuine,
        }
    }

    pub fn impostor(score: f64) -> Self {
        ScoreSample {
            score,
            label: Label::Impostor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Attempts scoring `>= threshold` are accepted; the first point uses +inf.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }
}

fn class_counts(samples: &[ScoreSample]) -> Result<(usize, usize)> {
    if samples.iter().any(|s| !s.score.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let g = samples.iter().filter(|s| s.label == Label::Genuine).count();
    let i = samples.len() - g;
    if g == 0 || i == 0 {
        return Err(Error::InsufficientData(
            "need at least one genuine and one impostor sample".into(),
        ));
    }
    Ok((g, i))
}

/// Sweeps a threshold over every distinct score, highest first. Tied
/// scores move together, so ties produce one diagonal step.
pub fn roc_curve(samples: &[ScoreSample]) -> Result<RocCurve> {
    let (ng, ni) = class_counts(samples)?;
    let mut sorted: Vec<&ScoreSample> = samples.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].score;
        while i < sorted.len() && sorted[i].score == threshold {
            match sorted[i].label {
                Label::Genuine => tp += 1,
                Label::Impostor => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / ni as f64,
            tpr: tp as f64 / ng as f64,
            threshold,
        });
    }
    Ok(RocCurve { points })
}

/// Mann-Whitney estimate of P(genuine > impostor) + P(tie) / 2, via midranks.
pub fn auroc(samples: &[ScoreSample]) -> Result<f64> {
    let (ng, ni) = class_counts(samples)?;
    let mut sorted: Vec<&ScoreSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            j += 1;
        }
        // ranks i+1..=j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        let genuine = sorted[i..j].iter().filter(|s| s.label == Label::Genuine).count();
        rank_sum += mid * genuine as f64;
        i = j;
    }
    let u = rank_sum - (ng * (ng + 1)) as f64 / 2.0;
    Ok(u / (ng as f64 * ni as f64))
}

/// Which traces get compared; indices point into `TraceSet::traces()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairPlan {
    pub genuine: Vec<(usize, usize)>,
    pub impostor: Vec<(usize, usize)>,
    /// Accounts with a single sample, which cannot form genuine pairs.
    pub skipped: Vec<String>,
}

/// Template = first sample of each account. Genuine pairs compare it with
/// the account's other samples; impostor pairs compare it with the
/// non-template samples of every other account, subsampled to `cap` per
/// template with a seeded draw.
pub fn plan_pairs(dataset: &TraceSet, cap: Option<usize>, seed: u64) -> Result<PairPlan> {
    let accounts = dataset.accounts();
    let mut offsets = Vec::with_capacity(accounts.len());
    let mut off = 0;
    for (_, samples) in &accounts {
        offsets.push(off);
        off += samples.len();
    }
    let mut skipped = Vec::new();
    let mut usable = Vec::new();
    for (a, (id, samples)) in accounts.iter().enumerate() {
        if samples.len() < 2 {
            skipped.push(id.to_string());
        } else {
            usable.push(a);
        }
    }
    if usable.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two accounts with two or more samples".into(),
        ));
    }
    let attempts_of = |a: usize| (offsets[a] + 1)..(offsets[a] + accounts[a].1.len());

    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for &a in &usable {
        let template = offsets[a];
        genuine.extend(attempts_of(a).map(|t| (template, t)));
        let candidates: Vec<usize> = usable
            .iter()
            .filter(|&&b| b != a)
            .flat_map(|&b| attempts_of(b))
            .collect();
        match cap {
            Some(cap) if candidates.len() > cap => {
                let mut rng = rng_for(seed, &format!("pairs/{}", accounts[a].0));
                let mut picked: Vec<usize> = index::sample(&mut rng, candidates.len(), cap).into_vec();
                picked.sort_unstable();
                impostor.extend(picked.into_iter().map(|k| (template, candidates[k])));
            }
            _ => impostor.extend(candidates.into_iter().map(|t| (template, t))),
        }
    }
    Ok(PairPlan {
        genuine,
        impostor,
        skipped,
    })
}

pub fn score_pairs(dataset: &TraceSet, plan: &PairPlan, recognizer: &Recognizer) -> Result<Vec<ScoreSample>> {
    let prepared: Vec<Prepared> = dataset
        .traces()
        .par_iter()
        .map(|t| recognizer.prepare(t))
        .collect::<Result<_>>()?;
    let score = |&(t, a): &(usize, usize)| {
        recognizer
            .score_prepared(&prepared[t], &prepared[a])
            .map(|s| s.value)
    };
    let genuine: Vec<f64> = plan.genuine.par_iter().map(score).collect::<Result<_>>()?;
    let impostor: Vec<f64> = plan.impostor.par_iter().map(score).collect::<Result<_>>()?;
    Ok(genuine
        .into_iter()
        .map(ScoreSample::genuine)
        .chain(impostor.into_iter().map(ScoreSample::impostor))
        .collect())
}

pub fn make_pairs(
    dataset: &TraceSet,
    recognizer: &Recognizer,
    cap: Option<usize>,
    seed: u64,
) -> Result<(Vec<ScoreSample>, PairPlan)> {
    let plan = plan_pairs(dataset, cap, seed)?;
    Ok((score_pairs(dataset, &plan, recognizer)?, plan))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub omega: usize,
    pub beta: usize,
    pub auroc: f64,
    pub n_genuine: usize,
    pub n_impostor: usize,
}

/// AUROC of the SAX recognizer for every `(omega, beta)` on one pair set.
pub fn param_sweep(
    dataset: &TraceSet,
    plan: &PairPlan,
    omegas: &[usize],
    betas: &[usize],
) -> Result<Vec<SweepCell>> {
    if omegas.is_empty() || betas.is_empty() {
        return Err(Error::invalid("parameter ranges must be non-empty"));
    }
    let grid: Vec<SaxParams> = omegas
        .iter()
        .flat_map(|&o| betas.iter().map(move |&b| SaxParams::new(o, b)))
        .collect::<Result<_>>()?;
    let mut cells: Vec<SweepCell> = grid
        .par_iter()
        .map(|&params| {
            let rec = Recognizer::new(RecognizerKind::Sax, params);
            let samples = score_pairs(dataset, plan, &rec)?;
            Ok(SweepCell {
                omega: params.omega(),
                beta: params.beta(),
                auroc: auroc(&samples)?,
                n_genuine: plan.genuine.len(),
                n_impostor: plan.impostor.len(),
            })
        })
        .collect::<Result<_>>()?;
    cells.sort_by_key(|c| (c.omega, c.beta));
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_gestures, SynthSpec};

    fn samples(g: &[f64], i: &[f64]) -> Vec<ScoreSample> {
        g.iter()
            .map(|&s| ScoreSample::genuine(s))
            .chain(i.iter().map(|&s| ScoreSample::impostor(s)))
            .collect()
    }

    #[test]
    fn perfect_separation() {
        let s = samples(&[5.0, 6.0, 7.0], &[1.0, 2.0]);
        assert_eq!(auroc(&s).unwrap(), 1.0);
        let curve = roc_curve(&s).unwrap();
        assert!(curve.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        assert_eq!(curve.area(), 1.0);
    }

    #[test]
    fn all_tied_gives_the_chord() {
        let s = samples(&[1.0, 1.0], &[1.0, 1.0, 1.0]);
        let curve = roc_curve(&s).unwrap();
        let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auroc(&s).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(auroc(&samples(&[1.0], &[])).is_err());
        assert!(roc_curve(&samples(&[], &[1.0])).is_err());
    }

    #[test]
    fn brute_force_recount() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let s: Vec<ScoreSample> = (0..300)
            .map(|_| {
                let score = (rng.random_range(0..40) as f64) / 4.0;
                if rng.random_bool(0.4) {
                    ScoreSample::genuine(score + 1.0)
                } else {
                    ScoreSample::impostor(score)
                }
            })
            .collect();
        let curve = roc_curve(&s).unwrap();
        let ng = s.iter().filter(|x| x.label == Label::Genuine).count() as f64;
        let ni = s.len() as f64 - ng;
        for p in &curve.points[1..] {
            let tp = s.iter().filter(|x| x.label == Label::Genuine && x.score >= p.threshold).count();
            let fp = s.iter().filter(|x| x.label == Label::Impostor && x.score >= p.threshold).count();
            assert_eq!(p.tpr, tp as f64 / ng);
            assert_eq!(p.fpr, fp as f64 / ni);
        }
        assert!(curve.points.windows(2).all(|w| w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr));
        assert!((auroc(&s).unwrap() - curve.area()).abs() < 1e-12);
    }

    #[test]
    fn pair_counts_without_cap() {
        let set = synth_gestures(&SynthSpec::new(2, 2, 0.05), 1).unwrap();
        let plan = plan_pairs(&set, None, 0).unwrap();
        assert_eq!(plan.genuine.len(), 2);
        assert_eq!(plan.impostor.len(), 2);
        assert_eq!(plan, plan_pairs(&set, None, 0).unwrap());
    }

    #[test]
    fn single_sample_accounts_are_skipped() {
        let mut set = synth_gestures(&SynthSpec::new(3, 2, 0.05), 1).unwrap();
        let traces: Vec<_> = set.traces().iter().filter(|t| !(t.account_id == "acct0" && t.sample_id == "s1")).cloned().collect();
        set = TraceSet::new("x", traces);
        let plan = plan_pairs(&set, None, 0).unwrap();
        assert_eq!(plan.skipped, vec!["acct0".to_string()]);
        assert_eq!(plan.genuine.len(), 2);
    }

    #[test]
    fn cap_is_deterministic() {
        let set = synth_gestures(&SynthSpec::new(30, 3, 0.05), 2).unwrap();
        let a = plan_pairs(&set, Some(10), 7).unwrap();
        assert_eq!(a.impostor.len(), 30 * 10);
        assert_eq!(a, plan_pairs(&set, Some(10), 7).unwrap());
        assert_ne!(a, plan_pairs(&set, Some(10), 8).unwrap());
    }

    #[test]
    fn zero_jitter_genuine_scores_are_maximal() {
        let set = synth_gestures(&SynthSpec::new(5, 3, 0.0), 3).unwrap();
        let rec = Recognizer::new(RecognizerKind::Sax, SaxParams::default());
        let (s, _) = make_pairs(&set, &rec, None, 0).unwrap();
        assert!(s.iter().filter(|x| x.label == Label::Genuine).all(|x| x.score == 0.0));
    }

    #[test]
    fn sweep_single_cell_and_order_independence() {
        let set = synth_gestures(&SynthSpec::new(12, 3, 0.05), 4).unwrap();
        let plan = plan_pairs(&set, Some(20), 1).unwrap();
        let one = param_sweep(&set, &plan, &[8], &[6]).unwrap();
        assert_eq!(one.len(), 1);
        let fwd = param_sweep(&set, &plan, &[4, 6, 8], &[3, 6]).unwrap();
        let rev = param_sweep(&set, &plan, &[8, 6, 4], &[6, 3]).unwrap();
        assert_eq!(fwd, rev);
        assert!(param_sweep(&set, &plan, &[], &[6]).is_err());
    }
}
