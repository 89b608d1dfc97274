// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;

use recpass::bias::{ngram_coverage_seqs, start_end_heatmap};
use recpass::markov::Smoothing;
use recpass::metrics::partial_guessing;
use recpass::roc::{auroc, ScoreSample};
use recpass::sax::{SaxEncoder, SaxParams, SaxWord};
use recpass::trace::{
    parse_trace_file, write_traces, znormalize, znormalize_series, Point, RawTrace, TraceFormat, TraceSet,
};
use recpass::MarkovModel;

fn points(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0u32..50, -1e3..1e3f64, -1e3..1e3f64), len).prop_map(|v| {
        let mut t = 0.0;
        v.into_iter()
            .map(|(dt, x, y)| {
                t += dt as f64;
                Point::new(t, x, y)
            })
            .collect()
    })
}

fn trace_set() -> impl Strategy<Value = TraceSet> {
    prop::collection::vec((0usize..4, points(2..12)), 1..8).prop_map(|v| {
        let traces = v
            .into_iter()
            .enumerate()
            .map(|(i, (a, p))| RawTrace::new(format!("acct{a}"), format!("s{i}"), p).unwrap())
            .collect();
        TraceSet::new("prop", traces)
    })
}

fn word(beta: u8, omega: usize) -> impl Strategy<Value = SaxWord> {
    prop::collection::vec((0..beta, 0..beta), omega).prop_map(|s| SaxWord::new(s, 32))
}

fn scores() -> impl Strategy<Value = Vec<ScoreSample>> {
    (
        prop::collection::vec(-50i32..50, 1..40),
        prop::collection::vec(-50i32..50, 1..40),
    )
        .prop_map(|(g, i)| {
            g.into_iter()
                .map(|s| ScoreSample::genuine(s as f64))
                .chain(i.into_iter().map(|s| ScoreSample::impostor(s as f64)))
                .collect()
        })
}

fn transform(samples: &[ScoreSample], f: impl Fn(f64) -> f64) -> Vec<ScoreSample> {
    samples
        .iter()
        .map(|s| ScoreSample {
            score: f(s.score),
            ..*s
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn trace_round_trip(set in trace_set(), record in any::<bool>()) {
        let format = if record { TraceFormat::RecordStream } else { TraceFormat::Delimited };
        let mut buf = Vec::new();
        write_traces(&set, format, &mut buf).unwrap();
        let once = parse_trace_file(&buf, format, "rt").unwrap();
        prop_assert!(once.rejected.is_empty());
        prop_assert_eq!(once.set.traces(), set.traces());
        let mut again = Vec::new();
        write_traces(&once.set, format, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn znormalize_is_idempotent(v in prop::collection::vec(-1e3..1e3f64, 2..64)) {
        let (once, degenerate) = znormalize_series(&v);
        prop_assume!(!degenerate);
        let (twice, _) = znormalize_series(&once);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mindist_symmetric_nonnegative_zero_on_self(
        (q, c) in (2usize..10).prop_flat_map(|o| (word(6, o), word(6, o))),
    ) {
        let enc = SaxEncoder::new(SaxParams::new(q.omega(), 6).unwrap());
        let d1 = enc.mindist_2d(&q, &c).unwrap();
        let d2 = enc.mindist_2d(&c, &q).unwrap();
        prop_assert!(d1 >= 0.0);
        prop_assert_eq!(d1, d2);
        prop_assert_eq!(enc.mindist_2d(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn sax_word_survives_translation_and_scaling(
        pts in points(16..64),
        dx in -200i32..200,
        dy in -200i32..200,
        k in -3i32..=3,
        omega in 2usize..9,
        beta in 3usize..9,
    ) {
        let enc = SaxEncoder::new(SaxParams::new(omega, beta).unwrap());
        let s = 2f64.powi(k);
        let moved: Vec<Point> = pts
            .iter()
            .map(|p| Point::new(p.t, p.x * s + dx as f64, p.y * s + dy as f64))
            .collect();
        let a = enc.encode_2d(&znormalize(&RawTrace::new("a", "0", pts).unwrap())).unwrap();
        let b = enc.encode_2d(&znormalize(&RawTrace::new("a", "0", moved).unwrap())).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn auroc_invariant_under_increasing_transforms(s in scores()) {
        let base = auroc(&s).unwrap();
        let affine = auroc(&transform(&s, |x| 3.0 * x - 7.0)).unwrap();
        let cubic = auroc(&transform(&s, |x| x * x * x + x)).unwrap();
        let squash = auroc(&transform(&s, |x| (x / 10.0).tanh())).unwrap();
        prop_assert_eq!(base, affine);
        prop_assert_eq!(base, cubic);
        prop_assert!((base - squash).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn auroc_unchanged_by_duplication(s in scores()) {
        let doubled: Vec<ScoreSample> = s.iter().chain(s.iter()).copied().collect();
        prop_assert!((auroc(&s).unwrap() - auroc(&doubled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn markov_counts_are_conserved(
        seqs in prop::collection::vec(prop::collection::vec(0u16..4, 5), 1..30),
        order in 2usize..4,
    ) {
        let m = MarkovModel::fit_sequences(&seqs, 4, order, Smoothing::None, Some(5)).unwrap();
        prop_assert_eq!(m.start_counts().total(), seqs.len() as u64);
        prop_assert_eq!(m.transition_counts().total(), (seqs.len() * (5 - order + 1)) as u64);
    }

    #[test]
    fn good_turing_keeps_observed_order(
        seqs in prop::collection::vec(prop::collection::vec(0u16..5, 4), 2..60),
    ) {
        let m = MarkovModel::fit_sequences(&seqs, 5, 2, Smoothing::GoodTuring, Some(4)).unwrap();
        let counts = m.transition_counts();
        for ctx in 0..m.context_count() {
            let row = counts.row(ctx);
            let probs = m.transition_row(ctx);
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for a in 0..5 {
                for b in 0..5 {
                    if row[a] > row[b] && row[b] > 0 {
                        prop_assert!(probs[a] >= probs[b], "ctx {} counts {:?} probs {:?}", ctx, row, probs);
                    }
                }
            }
        }
    }

    #[test]
    fn smoothed_space_sums_to_one(
        seqs in prop::collection::vec(prop::collection::vec(0u16..4, 4), 1..20),
        gt in any::<bool>(),
    ) {
        let sm = if gt { Smoothing::GoodTuring } else { Smoothing::additive() };
        let m = MarkovModel::fit_sequences(&seqs, 4, 2, sm, Some(4)).unwrap();
        if !m.notes().is_empty() {
            // Good-Turing without singletons falls back to relative frequencies
            prop_assert!(gt);
            return Ok(());
        }
        prop_assert!(m.is_complete());
        let mut total = 0.0;
        for i in 0..256u16 {
            let w = [i >> 6 & 3, i >> 4 & 3, i >> 2 & 3, i & 3];
            let lp = m.seq_log2prob(&w);
            prop_assert!(lp.is_finite());
            total += lp.exp2();
        }
        prop_assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn partial_guesswork_below_mu(
        raw in prop::collection::vec(1u32..1000, 1..200),
        alpha in 0.01f64..1.0,
    ) {
        let sum: f64 = raw.iter().map(|&v| v as f64).sum();
        let mut p: Vec<f64> = raw.iter().map(|&v| v as f64 / sum).collect();
        p.sort_by(|a, b| b.total_cmp(a));
        let r = &partial_guessing(&p, &[alpha]).unwrap()[0];
        prop_assert!(r.g_alpha <= r.mu_alpha + 1e-9);
        prop_assert!(r.lambda_mu >= alpha - 1e-9);
        prop_assert!(r.bits >= -1e-9);
    }

    #[test]
    fn full_coverage_is_exactly_one(
        seqs in prop::collection::vec(prop::collection::vec(0u16..6, 3..8), 1..30),
        n in 2usize..4,
    ) {
        let probe = ngram_coverage_seqs(&seqs, n, 1).unwrap();
        let all = ngram_coverage_seqs(&seqs, n, probe.distinct).unwrap();
        prop_assert_eq!(all.coverage, 1.0);
        let mut prev = 0.0;
        for k in 1..=probe.distinct {
            let c = ngram_coverage_seqs(&seqs, n, k).unwrap().coverage;
            prop_assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn heatmap_ignores_uniform_rescaling(set in trace_set(), k in -4i32..=4) {
        prop_assume!(set.bounding_box().is_some_and(|b| b.max_x > b.min_x && b.max_y > b.min_y));
        let s = 2f64.powi(k);
        let scaled = TraceSet::new(
            "scaled",
            set.traces()
                .iter()
                .map(|t| {
                    let p = t.points().iter().map(|p| Point::new(p.t, p.x * s, p.y * s)).collect();
                    RawTrace::new(t.account_id.clone(), t.sample_id.clone(), p).unwrap()
                })
                .collect(),
        );
        let a = start_end_heatmap(&set, 5, 4).unwrap();
        let b = start_end_heatmap(&scaled, 5, 4).unwrap();
        prop_assert_eq!(a.start, b.start);
        prop_assert_eq!(a.end, b.end);
    }
}
