// SPDX-License-Identifier: Apache-2.0

//! Python bindings. Words cross the boundary in their text form
//! (`x0y5.x1y4...`), traces as lists of `(t, x, y)` tuples.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use recpass::bias;
use recpass::markov::{self, expected_start_observations as eso};
use recpass::metrics::{self, PgmMethod};
use recpass::pattern::{self, UnlockPattern};
use recpass::recognize::{Recognizer as CoreRecognizer, RecognizerKind};
use recpass::roc::{self, ScoreSample};
use recpass::sax::{self, SaxEncoder};
use recpass::synth::{synth_gestures, SynthSpec};
use recpass::trace::{self, Point, RawTrace, TraceFormat};
use recpass::{Error, MarkovModel, PartialGuessReport, SaxParams, SaxWord, Smoothing};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn params(omega: usize, beta: usize) -> PyResult<SaxParams> {
    SaxParams::new(omega, beta).map_err(err)
}

fn parse_word(s: &str) -> PyResult<SaxWord> {
    s.parse().map_err(err)
}

type Txy = (f64, f64, f64);
type Grid = Vec<Vec<f64>>;

fn raw_trace(points: Vec<Txy>) -> PyResult<RawTrace> {
    RawTrace::new("py", "0", points.into_iter().map(|(t, x, y)| Point::new(t, x, y)).collect()).map_err(err)
}

fn report_dict<'py>(py: Python<'py>, r: &PartialGuessReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("alpha", r.alpha)?;
    d.set_item("mu_alpha", r.mu_alpha)?;
    d.set_item("lambda_mu", r.lambda_mu)?;
    d.set_item("g_alpha", r.g_alpha)?;
    d.set_item("bits", r.bits)?;
    d.set_item("method", r.method.to_string())?;
    d.set_item("bucket_width", r.bucket_width)?;
    d.set_item("bits_error_bound", r.bits_error_bound)?;
    Ok(d)
}

fn reports<'py>(py: Python<'py>, rs: &[PartialGuessReport]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    rs.iter().map(|r| report_dict(py, r)).collect()
}

/// SAX breakpoints for an alphabet of size `beta`.
#[pyfunction]
fn breakpoints(beta: usize) -> PyResult<Vec<f64>> {
    Ok(sax::breakpoints(beta).map_err(err)?.values().to_vec())
}

/// The beta x beta symbol distance table.
#[pyfunction]
fn dist_table(beta: usize) -> PyResult<Vec<Vec<f64>>> {
    let bp = sax::breakpoints(beta).map_err(err)?;
    Ok(sax::DistTable::new(&bp).rows().map(<[f64]>::to_vec).collect())
}

/// Z-normalizes a 2-D trace and encodes it as a SAX word string.
#[pyfunction]
#[pyo3(signature = (xs, ys, omega = 8, beta = 6))]
fn encode(xs: Vec<f64>, ys: Vec<f64>, omega: usize, beta: usize) -> PyResult<String> {
    let norm = trace::NormalizedTrace::from_series(&xs, &ys).map_err(err)?;
    Ok(sax::sax_encode_2d(&norm, params(omega, beta)?).map_err(err)?.to_string())
}

/// MINDIST between two word strings built from series of length `n`.
#[pyfunction]
#[pyo3(signature = (a, b, beta, n))]
fn mindist(a: &str, b: &str, beta: usize, n: usize) -> PyResult<f64> {
    let (mut a, mut b) = (parse_word(a)?, parse_word(b)?);
    a.n_original = n;
    b.n_original = n;
    SaxEncoder::new(params(a.omega(), beta)?).mindist_2d(&a, &b).map_err(err)
}

/// Expected observations of one start sequence: total / (beta^2)^(order-1).
#[pyfunction]
fn expected_start_observations(total: f64, beta: usize, order: usize) -> f64 {
    eso(total, beta, order)
}

/// Similarity of two traces, each a list of `(t, x, y)`; higher is more alike.
#[pyfunction]
#[pyo3(signature = (recognizer, template, attempt, omega = 8, beta = 6))]
fn score(
    recognizer: &str,
    template: Vec<Txy>,
    attempt: Vec<Txy>,
    omega: usize,
    beta: usize,
) -> PyResult<f64> {
    let kind: RecognizerKind = recognizer.parse().map_err(err)?;
    let rec = CoreRecognizer::new(kind, params(omega, beta)?);
    Ok(rec.score(&raw_trace(template)?, &raw_trace(attempt)?).map_err(err)?.value)
}

/// Mann-Whitney AUROC of genuine against impostor scores.
#[pyfunction]
fn auroc(genuine: Vec<f64>, impostor: Vec<f64>) -> PyResult<f64> {
    let samples: Vec<ScoreSample> = genuine
        .into_iter()
        .map(ScoreSample::genuine)
        .chain(impostor.into_iter().map(ScoreSample::impostor))
        .collect();
    roc::auroc(&samples).map_err(err)
}

/// Partial guessing metric of a probability list (any order).
#[pyfunction]
fn partial_guessing<'py>(py: Python<'py>, probs: Vec<f64>, alphas: Vec<f64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut p = probs;
    p.sort_by(|a, b| b.total_cmp(a));
    reports(py, &metrics::partial_guessing(&p, &alphas).map_err(err)?)
}

/// Fraction of n-gram occurrences covered by the `top_k` most frequent.
#[pyfunction]
fn ngram_coverage(words: Vec<String>, beta: usize, n: usize, top_k: usize) -> PyResult<f64> {
    let corpus = words.iter().map(|w| parse_word(w)).collect::<PyResult<Vec<_>>>()?;
    Ok(bias::ngram_coverage(&corpus, beta, n, top_k).map_err(err)?.coverage)
}

/// Every valid 3x3 unlock pattern as a digit string.
#[pyfunction]
fn enumerate_valid_patterns() -> Vec<String> {
    pattern::enumerate_valid_patterns().iter().map(|p| p.to_string()).collect()
}

/// Synthetic human-biased unlock patterns.
#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn synth_patterns(n: usize, seed: u64) -> Vec<String> {
    pattern::synth_patterns(n, seed).iter().map(|p| p.to_string()).collect()
}

/// Partial guessing metric of a pattern corpus under an n-gram model.
#[pyfunction]
#[pyo3(signature = (corpus, alphas, n = 3, smoothing = "additive"))]
fn pattern_partial_guessing<'py>(
    py: Python<'py>,
    corpus: Vec<String>,
    alphas: Vec<f64>,
    n: usize,
    smoothing: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let pats = corpus
        .iter()
        .map(|s| s.parse::<UnlockPattern>().map_err(err))
        .collect::<PyResult<Vec<_>>>()?;
    let sm: Smoothing = smoothing.parse().map_err(err)?;
    let model = pattern::pattern_model(&pats, n, sm).map_err(err)?;
    reports(py, &model.partial_guessing(&alphas).map_err(err)?)
}

/// A dataset of gesture traces grouped by account.
#[pyclass(module = "recpass", frozen)]
struct TraceSet {
    inner: recpass::TraceSet,
}

#[pymethods]
impl TraceSet {
    /// Reads a delimited (`.csv`) or record-stream (`.jsonl`) file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        let parsed =
            trace::parse_trace_file(&bytes, TraceFormat::from_path(&path), &path.display().to_string()).map_err(err)?;
        Ok(TraceSet { inner: parsed.set })
    }

    #[staticmethod]
    #[pyo3(signature = (accounts, samples = 5, jitter = 0.05, seed = 0))]
    fn synth(accounts: usize, samples: usize, jitter: f64, seed: u64) -> PyResult<Self> {
        let set = synth_gestures(&SynthSpec::new(accounts, samples, jitter), seed).map_err(err)?;
        Ok(TraceSet { inner: set })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        trace::write_traces(&self.inner, TraceFormat::from_path(&path), BufWriter::new(f)).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn account_count(&self) -> usize {
        self.inner.account_count()
    }

    /// `(account_id, sample_id, [(t, x, y), ...])` per trace.
    fn traces(&self) -> Vec<(String, String, Vec<Txy>)> {
        self.inner
            .traces()
            .iter()
            .map(|t| {
                (
                    t.account_id.clone(),
                    t.sample_id.clone(),
                    t.points().iter().map(|p| (p.t, p.x, p.y)).collect(),
                )
            })
            .collect()
    }

    /// `(account_id, [word, ...])` per account, samples in order.
    #[pyo3(signature = (omega = 8, beta = 6))]
    fn encode(&self, omega: usize, beta: usize) -> PyResult<Vec<(String, Vec<String>)>> {
        Ok(sax::encode_dataset(&self.inner, params(omega, beta)?)
            .map_err(err)?
            .into_iter()
            .map(|a| (a.account, a.words.iter().map(|w| w.to_string()).collect()))
            .collect())
    }

    /// AUROC of one recognizer over template/attempt pairs.
    #[pyo3(signature = (recognizer = "sax", omega = 8, beta = 6, impostor_cap = 50, seed = 0))]
    fn auroc(&self, recognizer: &str, omega: usize, beta: usize, impostor_cap: usize, seed: u64) -> PyResult<f64> {
        let kind: RecognizerKind = recognizer.parse().map_err(err)?;
        let rec = CoreRecognizer::new(kind, params(omega, beta)?);
        let cap = (impostor_cap > 0).then_some(impostor_cap);
        let (samples, _) = roc::make_pairs(&self.inner, &rec, cap, seed).map_err(err)?;
        roc::auroc(&samples).map_err(err)
    }

    /// Start and end point fractions, each a `rows x cols` nested list.
    #[pyo3(signature = (rows = 10, cols = 10))]
    fn heatmap(&self, rows: usize, cols: usize) -> PyResult<(Grid, Grid)> {
        let h = bias::start_end_heatmap(&self.inner, rows, cols).map_err(err)?;
        let grid = |m: &[f64]| m.chunks(cols).map(<[f64]>::to_vec).collect();
        Ok((grid(&h.start), grid(&h.end)))
    }
}

/// n-gram Markov model over SAX words.
#[pyclass(module = "recpass", frozen)]
struct Model {
    inner: MarkovModel,
}

impl Model {
    fn word(&self, s: &str) -> PyResult<SaxWord> {
        parse_word(s)
    }
}

#[pymethods]
impl Model {
    /// Trains on word strings; smoothing is `none`, `additive[:lambda]` or `good-turing`.
    #[staticmethod]
    #[pyo3(signature = (words, beta, n = 3, smoothing = "good-turing"))]
    fn train(words: Vec<String>, beta: usize, n: usize, smoothing: &str) -> PyResult<Self> {
        let corpus = words.iter().map(|w| parse_word(w)).collect::<PyResult<Vec<_>>>()?;
        let omega = corpus
            .first()
            .map(SaxWord::omega)
            .ok_or_else(|| PyValueError::new_err("empty corpus"))?;
        let sm: Smoothing = smoothing.parse().map_err(err)?;
        Ok(Model {
            inner: MarkovModel::train(&corpus, params(omega, beta)?, n, sm).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let f = File::open(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Ok(Model {
            inner: markov::read_model(BufReader::new(f)).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        markov::write_model(&self.inner, BufWriter::new(f)).map_err(err)
    }

    /// Same counts under another smoothing.
    fn with_smoothing(&self, smoothing: &str) -> PyResult<Self> {
        let sm: Smoothing = smoothing.parse().map_err(err)?;
        Ok(Model {
            inner: self.inner.clone().with_smoothing(sm).map_err(err)?,
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn smoothing(&self) -> String {
        self.inner.smoothing().to_string()
    }

    #[getter]
    fn corpus_size(&self) -> u64 {
        self.inner.corpus_size()
    }

    #[getter]
    fn notes(&self) -> Vec<String> {
        self.inner.notes().to_vec()
    }

    fn is_complete(&self) -> bool {
        self.inner.is_complete()
    }

    fn word_prob(&self, word: &str) -> PyResult<f64> {
        self.inner.word_prob(&self.word(word)?).map_err(err)
    }

    /// Base-2 log; `-inf` for words the model cannot produce.
    fn word_logprob(&self, word: &str) -> PyResult<f64> {
        self.inner.word_logprob(&self.word(word)?).map_err(err)
    }

    /// The `limit` most probable words, best first.
    fn guesses(&self, limit: usize) -> PyResult<Vec<(String, f64)>> {
        let beta = self
            .inner
            .beta()
            .ok_or_else(|| PyValueError::new_err("model was not trained on SAX words"))?;
        Ok(self
            .inner
            .guesses(Some(limit))
            .map_err(err)?
            .map(|g| (g.to_sax_word(beta).to_string(), g.prob))
            .collect())
    }

    /// Cracked fraction at each power of two up to `max_guesses`.
    fn attack(&self, targets: Vec<String>, max_guesses: u64) -> PyResult<Vec<(u64, f64)>> {
        let words = targets.iter().map(|w| parse_word(w)).collect::<PyResult<Vec<_>>>()?;
        let cps = metrics::power_of_two_checkpoints(max_guesses);
        Ok(metrics::attack(&self.inner, &words, &cps).map_err(err)?.curve.points)
    }

    #[pyo3(signature = (alphas, method = "histogram", bucket_width = 0.01))]
    fn partial_guessing<'py>(
        &self,
        py: Python<'py>,
        alphas: Vec<f64>,
        method: &str,
        bucket_width: f64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let rs = match method.parse::<PgmMethod>().map_err(err)? {
            PgmMethod::Histogram => {
                let h = metrics::build_prob_histogram(&self.inner, bucket_width).map_err(err)?;
                metrics::partial_guessing_histogram(&h, &alphas)
            }
            PgmMethod::Exact => {
                let stream = self.inner.guesses(None).map_err(err)?;
                metrics::partial_guessing_sorted(stream.map(|g| g.prob), &alphas)
            }
        }
        .map_err(err)?;
        reports(py, &rs)
    }

    fn __repr__(&self) -> String {
        let i = self.inner.info();
        format!(
            "Model(order={}, alphabet={}, word_length={:?}, smoothing={}, corpus_size={})",
            i.order, i.alphabet, i.word_length, i.smoothing, i.corpus_size
        )
    }
}

#[pymodule]
#[pyo3(name = "recpass")]
fn recpass_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<TraceSet>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(breakpoints, m)?)?;
    m.add_function(wrap_pyfunction!(dist_table, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(mindist, m)?)?;
    m.add_function(wrap_pyfunction!(expected_start_observations, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(partial_guessing, m)?)?;
    m.add_function(wrap_pyfunction!(ngram_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_valid_patterns, m)?)?;
    m.add_function(wrap_pyfunction!(synth_patterns, m)?)?;
    m.add_function(wrap_pyfunction!(pattern_partial_guessing, m)?)?;
    Ok(())
}
