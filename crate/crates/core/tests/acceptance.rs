// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate. Each criterion is its own test and prints one
//! PASS/FAIL line; run with `--nocapture` to see them all.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recpass::markov::{expected_start_observations, MarkovModel, Smoothing};
use recpass::metrics::{
    attack, bounds_report, build_prob_histogram, crossval_guessing, partial_guessing, partial_guessing_histogram,
    power_of_two_checkpoints, quantize, ModelConfig,
};
use recpass::pattern::{enumerate_valid_patterns, pattern_model, synth_patterns, VALID_PATTERN_COUNT};
use recpass::recognize::{Recognizer, RecognizerKind};
use recpass::roc::{auroc, make_pairs, roc_curve, ScoreSample, DEFAULT_IMPOSTOR_CAP};
use recpass::sax::{encode_dataset, word_space_size, AccountWords, Breakpoints, DistTable, SaxParams, SaxWord};
use recpass::synth::{synth_gestures, SynthSpec};
use recpass::trace::{write_delimited, TraceFormat};

fn verdict(id: &str, ok: bool, detail: &str) {
    println!("{} criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} failed: {detail}");
}

fn all_words(alphabet: usize, len: usize) -> Vec<Vec<u16>> {
    let total = alphabet.pow(len as u32);
    (0..total)
        .map(|mut i| {
            let mut w = vec![0u16; len];
            for slot in w.iter_mut().rev() {
                *slot = (i % alphabet) as u16;
                i /= alphabet;
            }
            w
        })
        .collect()
}

fn gesture_words(accounts: usize, samples: usize, seed: u64, params: SaxParams) -> Vec<AccountWords> {
    let ds = synth_gestures(&SynthSpec::new(accounts, samples, 0.05), seed).unwrap();
    encode_dataset(&ds, params).unwrap()
}

fn templates(data: &[AccountWords]) -> Vec<SaxWord> {
    data.iter().map(|a| a.words[0].clone()).collect()
}

fn random_seqs(rng: &mut ChaCha8Rng, n: usize, alphabet: usize, len: usize) -> Vec<Vec<u16>> {
    (0..n)
        .map(|_| (0..len).map(|_| rng.random_range(0..alphabet as u16)).collect())
        .collect()
}

// A small zoo of models over alphabet 4: random corpora and encoded gestures
// at beta = 2, for both orders and every smoothing.
fn small_models(len: usize) -> Vec<(String, MarkovModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(len as u64);
    let params = SaxParams::new(len, 2).unwrap();
    let gestures = templates(&gesture_words(60, 1, 5, params));
    let mut out = Vec::new();
    for order in [2, 3] {
        if len < order - 1 {
            continue;
        }
        for sm in [Smoothing::None, Smoothing::additive(), Smoothing::GoodTuring] {
            let seqs = random_seqs(&mut rng, 25, 4, len);
            out.push((
                format!("random len={len} n={order} {sm}"),
                MarkovModel::fit_sequences(&seqs, 4, order, sm, Some(len)).unwrap(),
            ));
            out.push((
                format!("gesture len={len} n={order} {sm}"),
                MarkovModel::train(&gestures, params, order, sm).unwrap(),
            ));
        }
    }
    out
}

#[test]
fn criterion_01_golden_constants() {
    // from the paper: breakpoints for beta = 6 and its dist() lookup table
    let paper_bp = [-0.97, -0.43, 0.0, 0.43, 0.97];
    let paper_dist = [
        [0.0, 0.0, 0.54, 0.97, 1.4, 1.94],
        [0.0, 0.0, 0.0, 0.43, 0.86, 1.4],
        [0.54, 0.0, 0.0, 0.0, 0.43, 0.97],
        [0.97, 0.43, 0.0, 0.0, 0.0, 0.54],
        [1.4, 0.86, 0.43, 0.0, 0.0, 0.0],
        [1.94, 1.4, 0.97, 0.54, 0.0, 0.0],
    ];
    let bp = Breakpoints::new(6).unwrap();
    let mut problems = Vec::new();
    for (i, (&got, &want)) in bp.values().iter().zip(&paper_bp).enumerate() {
        if (got - want).abs() > 0.005 {
            problems.push(format!("breakpoint {i}: {got:.5} vs {want}"));
        }
    }
    let dist = DistTable::new(&bp);
    for (i, row) in paper_dist.iter().enumerate() {
        for (j, &want) in row.iter().enumerate() {
            let got = dist.get(i as u8, j as u8);
            if (got - want).abs() > 0.005 {
                problems.push(format!("dist({i},{j}) = {got:.5} vs {want}"));
            }
        }
    }
    for (t, beta, n, want) in [
        (3245.0, 6, 2, 90.14),
        (5026.0, 6, 2, 139.6),
        (3245.0, 6, 3, 2.50),
        (5026.0, 6, 3, 3.88),
        (3245.0, 6, 4, 0.07),
        (5026.0, 6, 4, 0.11),
    ] {
        let got = expected_start_observations(t, beta, n);
        if (got - want).abs() > 0.01 {
            problems.push(format!("expected_start_observations({t}, {beta}, {n}) = {got:.4} vs {want}"));
        }
    }
    let space = word_space_size(SaxParams::new(4, 4).unwrap());
    if space != 65536.0 {
        problems.push(format!("(beta^2)^omega = {space}"));
    }
    verdict(
        "1",
        problems.is_empty(),
        &if problems.is_empty() {
            "breakpoints, dist table, expected observations and space size all within tolerance".into()
        } else {
            problems.join("; ")
        },
    );
}

#[test]
fn criterion_02_enumeration_matches_sort() {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for len in 2..=8 {
        for (name, m) in small_models(len) {
            let mut oracle: Vec<(Vec<u16>, f64)> = all_words(4, len)
                .into_iter()
                .map(|w| {
                    let p = m.seq_prob(&w);
                    (w, p)
                })
                .filter(|x| x.1 > 0.0)
                .collect();
            oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let space = 4usize.pow(len as u32);
            let mut stream = m.guesses(Some(space)).unwrap();
            let got: Vec<(Vec<u16>, f64)> = stream.by_ref().map(|g| (g.symbols.to_vec(), g.prob)).collect();
            if got != oracle {
                mismatches.push(name);
            }
            checked += 1;
        }
    }
    verdict(
        "2",
        mismatches.is_empty(),
        &format!("{checked} models up to 4^8 words; mismatches: {mismatches:?}"),
    );
}

#[test]
fn criterion_03_histogram_matches_enumeration() {
    let width = 0.01;
    let mut problems = Vec::new();
    let mut checked = 0;
    let mut worst_bits = 0.0f64;
    for len in [3, 4, 6, 8] {
        for (name, m) in small_models(len) {
            let hist = build_prob_histogram(&m, width).unwrap();
            // oracle: enumerate every word and bin it by its rounded factors
            let k = m.order() - 1;
            let mut bins: std::collections::BTreeMap<i64, (f64, f64)> = Default::default();
            let mut probs = Vec::new();
            for w in all_words(4, len) {
                let p = m.seq_prob(&w);
                if p == 0.0 {
                    continue;
                }
                let mut ctx = m.context_index(&w[..k]);
                let mut b = quantize(m.start_prob(ctx), width);
                for &s in &w[k..] {
                    b += quantize(m.transition_prob(ctx, s), width);
                    ctx = m.next_context(ctx, s);
                }
                let e = bins.entry(b).or_default();
                e.0 += 1.0;
                e.1 += p;
                probs.push(p);
            }
            let got: Vec<(i64, f64, f64)> = hist.buckets_by_probability().map(|b| (b.index, b.count, b.mass)).collect();
            let want: Vec<(i64, f64, f64)> = bins.into_iter().map(|(b, (n, p))| (b, n, p)).collect();
            let same = got.len() == want.len()
                && got
                    .iter()
                    .zip(&want)
                    .all(|(g, w)| g.0 == w.0 && g.1 == w.1 && (g.2 - w.2).abs() <= 1e-12 * w.2.max(1e-300));
            if !same {
                problems.push(format!("{name}: buckets differ"));
            }
            let mass = hist.total_mass();
            let alphas: Vec<f64> = [0.1, 0.2, 0.5].into_iter().filter(|&a| a < mass - 1e-9).collect();
            let exact = partial_guessing(&probs, &alphas).unwrap();
            let approx = partial_guessing_histogram(&hist, &alphas).unwrap();
            for (e, h) in exact.iter().zip(&approx) {
                let d = (e.bits - h.bits).abs();
                worst_bits = worst_bits.max(d);
                if d > width {
                    problems.push(format!("{name} alpha={}: exact {} vs histogram {} bits", e.alpha, e.bits, h.bits));
                }
            }
            checked += 1;
        }
    }
    verdict(
        "3",
        problems.is_empty(),
        &format!(
            "{checked} models; counts exact, masses within 1e-12 relative; worst bits gap {worst_bits:.2e}; problems: {problems:?}"
        ),
    );
}

#[test]
fn criterion_04_partial_guessing_closed_form() {
    let u = &partial_guessing(&[0.01; 100], &[0.2]).unwrap()[0];
    let t = &partial_guessing(&[0.5, 0.25, 0.25], &[0.6]).unwrap()[0];
    let ok = u.mu_alpha == 20.0
        && (u.lambda_mu - 0.2).abs() < 1e-12
        && (u.g_alpha - 18.1).abs() < 1e-12
        && t.mu_alpha == 2.0
        && t.lambda_mu == 0.75
        && t.g_alpha == 1.5;
    verdict(
        "4",
        ok,
        &format!(
            "uniform(100) a=0.2: mu={} lambda={} G={}; {{0.5,0.25,0.25}} a=0.6: mu={} lambda={} G={}",
            u.mu_alpha, u.lambda_mu, u.g_alpha, t.mu_alpha, t.lambda_mu, t.g_alpha
        ),
    );
}

#[test]
fn criterion_05_completeness_dichotomy() {
    let mut problems = Vec::new();

    // exhaustive on small spaces
    for len in [3, 4] {
        for (name, m) in small_models(len) {
            let words = all_words(4, len);
            let total: f64 = words.iter().map(|w| m.seq_log2prob(w).exp2()).sum();
            if m.smoothing().is_smoothed() {
                if words.iter().any(|w| !m.seq_log2prob(w).is_finite()) {
                    problems.push(format!("{name}: smoothed model has a -inf word"));
                }
                if (total - 1.0).abs() > 1e-6 {
                    problems.push(format!("{name}: mass {total}"));
                }
            } else {
                // rebuild the observed prefixes and transitions independently
                let k = m.order() - 1;
                let starts = m.start_counts();
                let trans = m.transition_counts();
                for w in &words {
                    let ctx = m.context_index(&w[..k]);
                    let mut seen = starts.cells[ctx] > 0;
                    for win in w.windows(m.order()) {
                        let c = m.context_index(&win[..k]);
                        seen &= trans.cells[c * m.alphabet() + win[k] as usize] > 0;
                    }
                    if seen == (m.seq_log2prob(w) == f64::NEG_INFINITY) {
                        problems.push(format!("{name}: word {w:?} flagged wrongly"));
                    }
                }
            }
        }
    }

    // random probing at full size
    let params = SaxParams::new(8, 6).unwrap();
    let corpus = templates(&gesture_words(1000, 1, 21, params));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let probes: Vec<Vec<u16>> = random_seqs(&mut rng, 1_000_000, 36, 8);
    for sm in [Smoothing::additive(), Smoothing::GoodTuring] {
        let m = MarkovModel::train(&corpus, params, 3, sm).unwrap();
        let bad = probes.iter().filter(|w| !m.seq_log2prob(w).is_finite()).count();
        if bad > 0 {
            problems.push(format!("{sm}: {bad} of 10^6 probes are -inf"));
        }
    }
    let none = MarkovModel::train(&corpus, params, 3, Smoothing::None).unwrap();
    let observed: HashSet<Vec<u16>> = corpus.iter().map(|w| w.to_indices(6)).collect();
    for w in &probes {
        let lp = none.seq_log2prob(w);
        let k = 2;
        let supported = none.start_counts().cells[none.context_index(&w[..k])] > 0
            && w.windows(3).all(|win| {
                none.transition_counts().cells[none.context_index(&win[..k]) * 36 + win[k] as usize] > 0
            });
        if supported != lp.is_finite() {
            problems.push(format!("unsmoothed probe {w:?} flagged wrongly"));
            break;
        }
    }
    if observed.iter().any(|w| !none.seq_log2prob(w).is_finite()) {
        problems.push("unsmoothed model rejects a training word".into());
    }
    verdict(
        "5",
        problems.is_empty(),
        &format!("exhaustive on 4^3, 4^4; 10^6 probes at beta=6, omega=8; problems: {problems:?}"),
    );
}

#[test]
fn criterion_06_roc_properties() {
    let perfect: Vec<ScoreSample> = (0..50)
        .map(|i| ScoreSample::genuine(10.0 + i as f64))
        .chain((0..50).map(|i| ScoreSample::impostor(-(i as f64))))
        .collect();
    let a_perfect = auroc(&perfect).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let random: Vec<ScoreSample> = (0..10_000)
        .map(|i| {
            let s: f64 = rng.random();
            if i % 2 == 0 {
                ScoreSample::genuine(s)
            } else {
                ScoreSample::impostor(s)
            }
        })
        .collect();
    let a_random = auroc(&random).unwrap();

    // ties on a coarse grid exercise midranks against trapezoids
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<ScoreSample> = (0..400)
            .map(|i| {
                let v = rng.random_range(0..12) as f64 + if i % 3 == 0 { 2.0 } else { 0.0 };
                if i % 3 == 0 {
                    ScoreSample::genuine(v)
                } else {
                    ScoreSample::impostor(v)
                }
            })
            .collect();
        worst = worst.max((auroc(&s).unwrap() - roc_curve(&s).unwrap().area()).abs());
    }
    verdict(
        "6",
        a_perfect == 1.0 && (a_random - 0.5).abs() <= 0.02 && worst <= 1e-9,
        &format!("perfect={a_perfect}, random={a_random:.4}, max |MW - trapezoid|={worst:.1e}"),
    );
}

fn independent_valid(p: &[u8]) -> bool {
    // geometric check: every lattice point strictly inside a stroke must
    // already have been visited
    if p.len() < 4 || p.len() > 9 || p.iter().any(|&n| n > 8) {
        return false;
    }
    let mut seen = [false; 9];
    for (i, &n) in p.iter().enumerate() {
        if seen[n as usize] {
            return false;
        }
        if i > 0 {
            let (r0, c0) = ((p[i - 1] / 3) as i32, (p[i - 1] % 3) as i32);
            let (r1, c1) = ((n / 3) as i32, (n % 3) as i32);
            for r in 0..3 {
                for c in 0..3 {
                    let cross = (r1 - r0) * (c - c0) - (c1 - c0) * (r - r0);
                    let between = (r - r0) * (r - r1) <= 0 && (c - c0) * (c - c1) <= 0;
                    let endpoint = (r, c) == (r0, c0) || (r, c) == (r1, c1);
                    if cross == 0 && between && !endpoint && !seen[(r * 3 + c) as usize] {
                        return false;
                    }
                }
            }
        }
        seen[n as usize] = true;
    }
    true
}

#[test]
fn criterion_07_pattern_space() {
    let all = enumerate_valid_patterns();
    let unique: HashSet<&[u8]> = all.iter().map(|p| p.nodes()).collect();
    let validated = all.iter().all(|p| independent_valid(p.nodes()));
    // count the valid set independently by filtering all sequences
    let mut brute = 0usize;
    fn rec(path: &mut Vec<u8>, count: &mut usize) {
        if path.len() >= 4 && independent_valid(path) {
            *count += 1;
        }
        if path.len() == 9 {
            return;
        }
        for n in 0..9u8 {
            if !path.contains(&n) {
                path.push(n);
                rec(path, count);
                path.pop();
            }
        }
    }
    rec(&mut Vec::new(), &mut brute);
    let corpus = synth_patterns(2000, 3);
    let m = pattern_model(&corpus, 3, Smoothing::additive()).unwrap();
    let total: f64 = m.probabilities().iter().sum();
    verdict(
        "7",
        all.len() == VALID_PATTERN_COUNT && unique.len() == all.len() && validated && brute == all.len() && (total - 1.0).abs() <= 1e-6,
        &format!(
            "enumerated {} ({} unique), independent count {brute}, all validated: {validated}; model mass {total:.9}",
            all.len(),
            unique.len()
        ),
    );
}

#[test]
fn criterion_08a_three_gram_dominates() {
    let params = SaxParams::new(8, 6).unwrap();
    let data = gesture_words(1000, 1, 11, params);
    let cps = power_of_two_checkpoints(1 << 20);
    let curve = |order| {
        crossval_guessing(&data, 10, ModelConfig { params, order, smoothing: Smoothing::GoodTuring }, &cps, 11).unwrap()
    };
    let (two, three) = (curve(2), curve(3));
    let bad: Vec<u64> = cps
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= 1 << 10)
        .filter(|(i, _)| three.mean[*i] < two.mean[*i])
        .map(|(_, &c)| c)
        .collect();
    let last = cps.len() - 1;
    verdict(
        "8a",
        bad.is_empty(),
        &format!(
            "1000 accounts, 10 folds; at 2^20 guesses 3-gram {:.3} vs 2-gram {:.3}; checkpoints where 2-gram leads: {bad:?}",
            three.mean[last], two.mean[last]
        ),
    );
}

#[test]
fn criterion_08b_bounds_trends() {
    let params = SaxParams::new(8, 6).unwrap();
    let data = gesture_words(1000, 1, 11, params);
    let fractions = [0.25, 0.5, 0.75, 1.0];
    let rows = bounds_report(&data, params, &fractions, &[0.2], 0.01, 11).unwrap();
    let series = |sm: Smoothing| -> Vec<f64> { rows.iter().filter(|r| r.smoothing == sm).map(|r| r.bits).collect() };
    let (upper, lower) = (series(Smoothing::GoodTuring), series(Smoothing::None));
    let ok = upper.windows(2).all(|w| w[1] <= w[0])
        && lower.windows(2).all(|w| w[1] >= w[0])
        && upper.iter().zip(&lower).all(|(u, l)| u >= l);
    let fmt = |v: &[f64]| v.iter().map(|b| format!("{b:.2}")).collect::<Vec<_>>().join(", ");
    verdict(
        "8b",
        ok,
        &format!("bits at alpha=0.2 over fractions {fractions:?}: Good-Turing [{}], unsmoothed [{}]", fmt(&upper), fmt(&lower)),
    );
}

#[test]
fn criterion_08c_unsmoothed_plateau() {
    let params = SaxParams::new(8, 6).unwrap();
    let data = gesture_words(400, 1, 13, params);
    let (train, test) = data.split_at(200);
    let model = MarkovModel::train(&templates(train), params, 3, Smoothing::None).unwrap();
    let support = build_prob_histogram(&model, 0.01).unwrap().total_count();
    let cps = power_of_two_checkpoints(1 << 22);
    let out = attack(&model, &templates(test), &cps).unwrap();
    let first_flat = cps.iter().position(|&c| c as f64 >= support).unwrap_or(cps.len());
    let tail: Vec<f64> = out.curve.points[first_flat..].iter().map(|p| p.1).collect();
    let flat = tail.windows(2).all(|w| w[0] == w[1]);
    verdict(
        "8c",
        out.exhausted && out.guesses_made as f64 == support && !tail.is_empty() && flat && tail[0] < 1.0,
        &format!(
            "support {support} words exhausted after {} guesses; cracked fraction stays at {:.3} for {} checkpoints",
            out.guesses_made,
            tail.first().copied().unwrap_or(f64::NAN),
            tail.len()
        ),
    );
}

#[test]
fn criterion_09_sax_recognizer_validity() {
    let ds = synth_gestures(&SynthSpec::new(60, 6, 0.08), 7).unwrap();
    let params = SaxParams::new(8, 6).unwrap();
    let score = |kind| {
        let (s, _) = make_pairs(&ds, &Recognizer::new(kind, params), Some(DEFAULT_IMPOSTOR_CAP), 7).unwrap();
        auroc(&s).unwrap()
    };
    let (sax, dtw, pro) = (score(RecognizerKind::Sax), score(RecognizerKind::Dtw), score(RecognizerKind::Protractor));
    verdict(
        "9",
        (sax - dtw).abs() <= 0.05 && (sax - pro).abs() <= 0.05,
        &format!("AUROC sax={sax:.4} dtw={dtw:.4} protractor={pro:.4}"),
    );
}

fn pipeline(seed: u64) -> Vec<Vec<u8>> {
    let params = SaxParams::new(6, 4).unwrap();
    let ds = synth_gestures(&SynthSpec::new(40, 3, 0.05), seed).unwrap();
    let mut traces = Vec::new();
    write_delimited(&ds, &mut traces).unwrap();
    let reparsed = recpass::trace::parse_trace_file(&traces, TraceFormat::Delimited, "mem").unwrap();
    let data = encode_dataset(&reparsed.set, params).unwrap();
    let words: String = data
        .iter()
        .flat_map(|a| a.words.iter().map(move |w| format!("{},{w}\n", a.account)))
        .collect();
    let model = MarkovModel::train(&templates(&data), params, 3, Smoothing::GoodTuring).unwrap();
    let bounds = bounds_report(&data, params, &[0.5, 1.0], &[0.1, 0.2], 0.01, seed).unwrap();
    let cv = crossval_guessing(
        &data,
        4,
        ModelConfig { params, order: 2, smoothing: Smoothing::GoodTuring },
        &power_of_two_checkpoints(1 << 12),
        seed,
    )
    .unwrap();
    vec![
        traces,
        words.into_bytes(),
        model.to_text().into_bytes(),
        serde_json::to_vec(&bounds).unwrap(),
        serde_json::to_vec(&cv).unwrap(),
    ]
}

#[test]
fn criterion_10_determinism() {
    let (a, b, c) = (pipeline(99), pipeline(99), pipeline(100));
    verdict(
        "10",
        a == b && a != c,
        &format!("{} artifacts byte-identical on rerun with the same seed, different under another seed", a.len()),
    );
}
