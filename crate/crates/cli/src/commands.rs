// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use recpass::bias::{ngram_coverage, start_end_heatmap};
use recpass::markov::write_model;
use recpass::metrics::{
    attack, bounds_report, build_prob_histogram, crossval_guessing, partial_guessing_histogram,
    partial_guessing_sorted, power_of_two_checkpoints, ModelConfig, PgmMethod,
};
use recpass::pattern::{enumerate_valid_patterns, parse_patterns, synth_patterns, PatternModel};
use recpass::recognize::{Recognizer, RecognizerKind};
use recpass::roc::{auroc, make_pairs, param_sweep, plan_pairs, SweepCell};
use recpass::synth::{synth_gestures, SynthSpec};
use recpass::trace::{write_traces, znormalize, TraceFormat};
use recpass::sax::SaxEncoder;
use recpass::{MarkovModel, PartialGuessReport, SaxParams, SaxWord, Smoothing};

use crate::args::*;
use crate::io::*;
use crate::CliError;

fn csv_body<F>(header: &[&str], fill: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).and_then(|_| fill(&mut w)).and_then(|_| w.flush().map_err(Into::into))
            .map_err(|e| CliError::Domain(e.to_string()))?;
    }
    Ok(buf)
}

fn params(sax: &SaxArgs) -> Result<SaxParams, CliError> {
    Ok(SaxParams::new(sax.omega, sax.beta)?)
}

fn smoothing(s: &str) -> Result<Smoothing, CliError> {
    s.parse().map_err(|e: recpass::Error| CliError::Usage(e.to_string()))
}

fn recognizer_kind(s: &str) -> Result<RecognizerKind, CliError> {
    s.parse().map_err(|e: recpass::Error| CliError::Usage(e.to_string()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const PGM_HEADER: [&str; 8] = [
    "alpha",
    "mu_alpha",
    "lambda_mu",
    "g_alpha",
    "bits",
    "method",
    "bucket_width",
    "bits_error_bound",
];

fn pgm_csv(reports: &[PartialGuessReport]) -> Result<Vec<u8>, CliError> {
    csv_body(&PGM_HEADER, |w| {
        for r in reports {
            w.write_record([
                r.alpha.to_string(),
                r.mu_alpha.to_string(),
                r.lambda_mu.to_string(),
                r.g_alpha.to_string(),
                r.bits.to_string(),
                r.method.to_string(),
                opt(r.bucket_width),
                opt(r.bits_error_bound),
            ])?;
        }
        Ok(())
    })
}

fn pgm_summary(reports: &[PartialGuessReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(
            s,
            "alpha={} mu={} lambda={:.6} G={:.6} bits={:.3}",
            r.alpha, r.mu_alpha, r.lambda_mu, r.g_alpha, r.bits
        );
    }
    s.trim_end().to_string()
}

pub fn gen_synth(a: &GenSynthArgs, seed: u64, sink: &Sink) -> Result<(), CliError> {
    let format = match (&a.format, &sink.out) {
        (Some(f), _) => TraceFormat::from_tag(f).map_err(|e| CliError::Usage(e.to_string()))?,
        (None, Some(p)) => TraceFormat::from_path(p),
        (None, None) => TraceFormat::Delimited,
    };
    let spec = SynthSpec::new(a.accounts, a.samples, a.jitter);
    let set = synth_gestures(&spec, seed)?;
    let mut body = Vec::new();
    write_traces(&set, format, &mut body)?;
    sink.write_commented(&body)?;
    sink.summary(&format!(
        "generated {} traces for {} accounts",
        set.len(),
        set.account_count()
    ));
    Ok(())
}

pub fn encode(a: &EncodeArgs, sink: &Sink) -> Result<(), CliError> {
    let p = params(&a.sax)?;
    let (set, rejected) = read_traces(&a.dataset)?;
    let enc = SaxEncoder::new(p);
    let words = set
        .traces()
        .iter()
        .map(|t| enc.encode_2d(&znormalize(t)))
        .collect::<recpass::Result<Vec<SaxWord>>>()?;
    let body = csv_body(&WORDS_HEADER, |w| {
        for (t, word) in set.traces().iter().zip(&words) {
            w.write_record([
                t.account_id.as_str(),
                t.sample_id.as_str(),
                &word.n_original.to_string(),
                &word.to_string(),
            ])?;
        }
        Ok(())
    })?;
    sink.write_commented(&body)?;
    sink.summary(&format!(
        "encoded {} traces (omega={}, beta={}); {rejected} rejected",
        words.len(),
        p.omega(),
        p.beta()
    ));
    Ok(())
}

#[derive(serde::Serialize)]
struct ScoreRecord<'a> {
    provenance: &'a Provenance,
    recognizer: RecognizerKind,
    template: String,
    attempt: String,
    value: f64,
}

fn single_trace(path: &std::path::Path) -> Result<recpass::RawTrace, CliError> {
    let (set, _) = read_traces(path)?;
    if set.len() != 1 {
        return Err(CliError::Domain(format!(
            "{}: expected exactly one trace, found {}",
            path.display(),
            set.len()
        )));
    }
    Ok(set.traces()[0].clone())
}

pub fn score(a: &ScoreArgs, sink: &Sink) -> Result<(), CliError> {
    let kind = recognizer_kind(&a.recognizer)?;
    let rec = Recognizer::new(kind, params(&a.sax)?);
    let t = single_trace(&a.template)?;
    let at = single_trace(&a.attempt)?;
    let s = rec.score(&t, &at)?;
    let record = ScoreRecord {
        provenance: &sink.provenance,
        recognizer: kind,
        template: format!("{}/{}", t.account_id, t.sample_id),
        attempt: format!("{}/{}", at.account_id, at.sample_id),
        value: s.value,
    };
    let mut body = serde_json::to_vec_pretty(&record).map_err(|e| CliError::Domain(e.to_string()))?;
    body.push(b'\n');
    sink.write_raw(&body)?;
    sink.summary(&format!("{kind} score = {}", s.value));
    Ok(())
}

pub fn sweep(a: &SweepArgs, seed: u64, sink: &Sink) -> Result<(), CliError> {
    let omegas = usize_range(&a.omega, "omega")?;
    let betas = usize_range(&a.beta, "beta")?;
    let kind = recognizer_kind(&a.recognizer)?;
    let (set, _) = read_traces(&a.dataset)?;
    let cap = (a.impostor_cap > 0).then_some(a.impostor_cap);
    let plan = plan_pairs(&set, cap, seed)?;
    let cells = if kind == RecognizerKind::Sax {
        param_sweep(&set, &plan, &omegas, &betas)?
    } else {
        // omega and beta do not affect these recognizers
        let params = SaxParams::new(omegas[0], betas[0])?;
        let (samples, _) = make_pairs(&set, &Recognizer::new(kind, params), cap, seed)?;
        let area = auroc(&samples)?;
        omegas
            .iter()
            .flat_map(|&o| betas.iter().map(move |&b| (o, b)))
            .map(|(omega, beta)| {
                SaxParams::new(omega, beta)?;
                Ok(SweepCell {
                    omega,
                    beta,
                    auroc: area,
                    n_genuine: plan.genuine.len(),
                    n_impostor: plan.impostor.len(),
                })
            })
            .collect::<recpass::Result<Vec<_>>>()?
    };
    let body = csv_body(&["omega", "beta", "auroc", "n_genuine", "n_impostor"], |w| {
        for c in &cells {
            w.write_record([
                c.omega.to_string(),
                c.beta.to_string(),
                c.auroc.to_string(),
                c.n_genuine.to_string(),
                c.n_impostor.to_string(),
            ])?;
        }
        Ok(())
    })?;
    sink.write_commented(&body)?;
    let best = cells
        .iter()
        .max_by(|x, y| x.auroc.total_cmp(&y.auroc))
        .expect("non-empty grid");
    sink.summary(&format!(
        "{} cells; best AUROC {:.4} at omega={} beta={} ({} genuine, {} impostor pairs)",
        cells.len(),
        best.auroc,
        best.omega,
        best.beta,
        plan.genuine.len(),
        plan.impostor.len()
    ));
    Ok(())
}

/// For words CSVs the word length comes from the file.
fn dataset_params(path: &std::path::Path, sax: &SaxArgs) -> Result<SaxParams, CliError> {
    let omega = words_omega(path)?.unwrap_or(sax.omega);
    Ok(SaxParams::new(omega, sax.beta)?)
}

pub fn train(a: &TrainArgs, sink: &Sink) -> Result<(), CliError> {
    let sm = smoothing(&a.smoothing)?;
    let p = dataset_params(&a.dataset, &a.sax)?;
    let groups = load_words(&a.dataset, p)?;
    let corpus = passwords(&groups, a.all_samples);
    let model = MarkovModel::train(&corpus, p, a.n, sm)?;
    let mut body = Vec::new();
    write_model(&model, &mut body)?;
    sink.write_commented(&body)?;
    let mut s = format!(
        "trained {}-gram {} model on {} words from {} accounts (omega={}, beta={})",
        a.n,
        model.smoothing(),
        corpus.len(),
        groups.len(),
        p.omega(),
        p.beta()
    );
    for n in model.notes() {
        let _ = write!(s, "\nnote: {n}");
    }
    sink.summary(&s);
    Ok(())
}

pub fn attack_cmd(a: &AttackArgs, seed: u64, sink: &Sink) -> Result<(), CliError> {
    let budget = guess_budget(&a.max_guesses)?;
    let mut checkpoints = power_of_two_checkpoints(budget);
    if checkpoints.last() != Some(&budget) {
        checkpoints.push(budget);
    }
    if let Some(dataset) = &a.dataset {
        let p = dataset_params(dataset, &a.sax)?;
        let groups = load_words(dataset, p)?;
        let config = ModelConfig {
            params: p,
            order: a.n,
            smoothing: smoothing(&a.smoothing)?,
        };
        let cv = crossval_guessing(&groups, a.folds, config, &checkpoints, seed)?;
        let body = csv_body(&["guesses", "mean_cracked_fraction", "std_cracked_fraction"], |w| {
            for i in 0..cv.checkpoints.len() {
                w.write_record([
                    cv.checkpoints[i].to_string(),
                    cv.mean[i].to_string(),
                    cv.std[i].to_string(),
                ])?;
            }
            Ok(())
        })?;
        sink.write_commented(&body)?;
        sink.summary(&format!(
            "{} folds over {} accounts; mean cracked fraction {:.4} at {} guesses",
            a.folds,
            groups.len(),
            cv.mean.last().copied().unwrap_or(0.0),
            budget
        ));
        return Ok(());
    }

    let (model_path, targets_path) = match (&a.model, &a.targets) {
        (Some(m), Some(t)) => (m, t),
        _ => return Err(CliError::Usage("attack needs --model and --targets, or --dataset".into())),
    };
    let model = read_model(model_path)?;
    let p = model
        .sax_params()
        .ok_or_else(|| CliError::Domain("model was not trained on SAX words".into()))?;
    let groups = load_words(targets_path, p)?;
    let targets = passwords(&groups, false);
    let out = attack(&model, &targets, &checkpoints)?;
    let body = csv_body(&["guesses", "cracked_fraction"], |w| {
        for (g, f) in &out.curve.points {
            w.write_record([g.to_string(), f.to_string()])?;
        }
        Ok(())
    })?;
    sink.write_commented(&body)?;
    sink.summary(&format!(
        "cracked {}/{} targets in {} guesses{}",
        out.cracked,
        out.targets,
        out.guesses_made,
        if out.exhausted { " (model support exhausted)" } else { "" }
    ));
    Ok(())
}

pub fn pgm(a: &PgmArgs, sink: &Sink) -> Result<(), CliError> {
    let alphas = float_list(&a.alpha, "alpha")?;
    let method: PgmMethod = a.method.parse().map_err(|e: recpass::Error| CliError::Usage(e.to_string()))?;
    let model = read_model(&a.model)?;
    let reports = match method {
        PgmMethod::Histogram => partial_guessing_histogram(&build_prob_histogram(&model, a.bucket_width)?, &alphas)?,
        PgmMethod::Exact => partial_guessing_sorted(model.guesses(None)?.map(|g| g.prob), &alphas)?,
    };
    sink.write_commented(&pgm_csv(&reports)?)?;
    sink.summary(&pgm_summary(&reports));
    Ok(())
}

pub fn bounds(a: &BoundsArgs, seed: u64, sink: &Sink) -> Result<(), CliError> {
    let fractions = float_list(&a.fractions, "fractions")?;
    let alphas = float_list(&a.alpha, "alpha")?;
    let p = dataset_params(&a.dataset, &a.sax)?;
    let groups = load_words(&a.dataset, p)?;
    let rows = bounds_report(&groups, p, &fractions, &alphas, a.bucket_width, seed)?;
    let header = [
        "fraction",
        "n_accounts",
        "smoothing",
        "alpha",
        "mu_alpha",
        "lambda_mu",
        "g_alpha",
        "bits",
    ];
    let body = csv_body(&header, |w| {
        for r in &rows {
            w.write_record([
                r.fraction.to_string(),
                r.n_accounts.to_string(),
                r.smoothing.to_string(),
                r.alpha.to_string(),
                r.mu_alpha.to_string(),
                r.lambda_mu.to_string(),
                r.g_alpha.to_string(),
                r.bits.to_string(),
            ])?;
        }
        Ok(())
    })?;
    sink.write_commented(&body)?;
    let mut s = String::new();
    for r in &rows {
        let _ = writeln!(
            s,
            "fraction={} accounts={} {} alpha={} bits={:.3}",
            r.fraction, r.n_accounts, r.smoothing, r.alpha, r.bits
        );
    }
    sink.summary(s.trim_end());
    Ok(())
}

pub fn pattern_pgm(a: &PatternPgmArgs, sink: &Sink) -> Result<(), CliError> {
    let alphas = float_list(&a.alpha, "alpha")?;
    let sm = smoothing(&a.smoothing)?;
    let text = String::from_utf8(read_bytes(&a.corpus)?)
        .map_err(|_| CliError::Domain(format!("{}: not UTF-8", a.corpus.display())))?;
    let (corpus, rejected) = parse_patterns(&text);
    for r in &rejected {
        eprintln!("warning: {} line {}: {}", a.corpus.display(), r.line, r.reason);
    }
    let model = PatternModel::fit(&corpus, a.n, sm)?;
    let reports = model.partial_guessing(&alphas)?;
    sink.write_commented(&pgm_csv(&reports)?)?;
    sink.summary(&format!(
        "{} patterns ({} rejected)\n{}",
        corpus.len(),
        rejected.len(),
        pgm_summary(&reports)
    ));
    Ok(())
}

pub fn pattern_enumerate(sink: &Sink) -> Result<(), CliError> {
    let all = enumerate_valid_patterns();
    let mut body = String::with_capacity(all.len() * 8);
    for p in &all {
        let _ = writeln!(body, "{p}");
    }
    sink.write_commented(body.as_bytes())?;
    sink.summary(&format!("{} valid patterns", all.len()));
    Ok(())
}

pub fn pattern_synth(a: &PatternSynthArgs, seed: u64, sink: &Sink) -> Result<(), CliError> {
    let pats = synth_patterns(a.count, seed);
    let mut body = String::new();
    for p in &pats {
        let _ = writeln!(body, "{p}");
    }
    sink.write_commented(body.as_bytes())?;
    sink.summary(&format!("generated {} patterns", pats.len()));
    Ok(())
}

pub fn heatmap(a: &HeatmapArgs, sink: &Sink) -> Result<(), CliError> {
    let (rows, cols) = grid(&a.grid)?;
    let (set, _) = read_traces(&a.dataset)?;
    let h = start_end_heatmap(&set, rows, cols)?;
    let body = csv_body(&["kind", "row", "col", "fraction"], |w| {
        for (kind, m) in [("start", &h.start), ("end", &h.end)] {
            for r in 0..h.rows {
                for c in 0..h.cols {
                    w.write_record([kind.to_string(), r.to_string(), c.to_string(), m[r * h.cols + c].to_string()])?;
                }
            }
        }
        Ok(())
    })?;
    sink.write_commented(&body)?;
    let peak = |m: &[f64]| {
        let i = (0..m.len()).max_by(|&x, &y| m[x].total_cmp(&m[y]).then(y.cmp(&x))).unwrap_or(0);
        (i / h.cols, i % h.cols, m[i])
    };
    let (sr, sc, sv) = peak(&h.start);
    let (er, ec, ev) = peak(&h.end);
    sink.summary(&format!(
        "{} traces on a {rows}x{cols} grid; densest start cell ({sr},{sc}) {sv:.3}, densest end cell ({er},{ec}) {ev:.3}",
        set.len()
    ));
    Ok(())
}

pub fn ngrams(a: &NgramArgs, sink: &Sink) -> Result<(), CliError> {
    let p = dataset_params(&a.dataset, &a.sax)?;
    let groups = load_words(&a.dataset, p)?;
    let corpus = passwords(&groups, a.all_samples);
    let cov = ngram_coverage(&corpus, p.beta(), a.n, a.top)?;
    let beta = p.beta();
    let mut cum = 0u64;
    let body = csv_body(&["rank", "ngram", "count", "cumulative_coverage"], |w| {
        for (i, (gram, n)) in cov.ranked.iter().enumerate() {
            cum += n;
            let text = SaxWord::from_indices(gram, beta, 0).to_string();
            w.write_record([
                (i + 1).to_string(),
                text,
                n.to_string(),
                (cum as f64 / cov.total as f64).to_string(),
            ])?;
        }
        Ok(())
    })?;
    sink.write_commented(&body)?;
    sink.summary(&format!(
        "top {} of {} distinct {}-grams cover {:.2}% of {} occurrences",
        a.top.min(cov.distinct),
        cov.distinct,
        a.n,
        100.0 * cov.coverage,
        cov.total
    ));
    Ok(())
}
