// SPDX-License-Identifier: Apache-2.0

//! Synthetic gesture datasets.
//!
//! Each account draws one base shape (circle, square, zigzag, letter stroke
//! or a random walk) with account-specific placement and orientation. The
//! shape and orientation choices are skewed toward a few popular options, so
//! the resulting word distribution has a concentrated head like user-chosen
//! passwords do. Every sample of an account is a jittered copy of the base
//! shape; with zero jitter all samples are identical.

use std::f64::consts::{PI, TAU};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::seed::rng_for;
use crate::trace::{Point, RawTrace, TraceSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Circle,
    Square,
    Zigzag,
    LetterStroke,
    RandomWalk,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Circle,
        ShapeKind::Square,
        ShapeKind::Zigzag,
        ShapeKind::LetterStroke,
        ShapeKind::RandomWalk,
    ];
}

/// Non-negative weights over [`ShapeKind::ALL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeMix {
    pub weights: [f64; 5],
}

impl Default for ShapeMix {
    fn default() -> Self {
        ShapeMix {
            weights: [0.2, 0.15, 0.15, 0.3, 0.2],
        }
    }
}

impl ShapeMix {
    pub fn only(kind: ShapeKind) -> Self {
        let mut weights = [0.0; 5];
        weights[ShapeKind::ALL.iter().position(|k| *k == kind).unwrap()] = 1.0;
        ShapeMix { weights }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub accounts: usize,
    pub samples_per_account: usize,
    /// Jitter as a fraction of the shape's scale.
    pub jitter: f64,
    pub shape_mix: ShapeMix,
    /// Screen size in pixels (width, height).
    pub screen: (f64, f64),
    /// Inclusive range of points per trace.
    pub points: (usize, usize),
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            accounts: 100,
            samples_per_account: 5,
            jitter: 0.05,
            shape_mix: ShapeMix::default(),
            screen: (1080.0, 1920.0),
            points: (40, 160),
        }
    }
}

impl SynthSpec {
    pub fn new(accounts: usize, samples_per_account: usize, jitter: f64) -> Self {
        SynthSpec {
            accounts,
            samples_per_account,
            jitter,
            ..SynthSpec::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.accounts == 0 {
            return Err(Error::invalid("account count must be >= 1"));
        }
        if self.samples_per_account == 0 {
            return Err(Error::invalid("samples per account must be >= 1"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::invalid("jitter must be finite and >= 0"));
        }
        let w = &self.shape_mix.weights;
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid("shape mix must have a positive total weight"));
        }
        if self.points.0 < 2 || self.points.1 < self.points.0 {
            return Err(Error::invalid("point range must satisfy 2 <= min <= max"));
        }
        Ok(())
    }
}

// Letter templates in a unit box, y pointing down, first vertex is the pen-down point.
const LETTERS: &[&[(f64, f64)]] = &[
    &[(-0.5, -1.0), (-0.5, 1.0), (0.5, 1.0)],
    &[(-0.6, -0.8), (0.6, -0.8), (-0.6, 0.8), (0.6, 0.8)],
    &[(-0.6, 0.8), (-0.6, -0.8), (0.6, 0.8), (0.6, -0.8)],
    &[(-0.7, -0.8), (0.0, 0.8), (0.7, -0.8)],
    &[(-0.6, -0.8), (-0.6, 0.4), (0.0, 0.9), (0.6, 0.4), (0.6, -0.8)],
    &[(-0.8, 0.8), (-0.8, -0.8), (0.0, 0.3), (0.8, -0.8), (0.8, 0.8)],
    &[(-0.6, -0.8), (0.6, -0.8), (-0.2, 0.9)],
    &[(0.6, -0.7), (0.0, -0.95), (-0.6, -0.5), (-0.65, 0.3), (-0.1, 0.9), (0.6, 0.7)],
    &[(-0.9, -0.8), (-0.45, 0.8), (0.0, -0.2), (0.45, 0.8), (0.9, -0.8)],
    &[(-0.6, -0.5), (-0.2, -0.9), (0.4, -0.8), (0.5, -0.3), (-0.6, 0.8), (0.6, 0.8)],
    &[(0.6, -0.7), (-0.2, -0.9), (-0.6, -0.4), (0.5, 0.3), (0.3, 0.85), (-0.6, 0.7)],
];

/// Base shape of one account as a curve over `u in [0, 1]` in local units.
#[derive(Debug, Clone)]
enum BaseShape {
    Ellipse {
        start: f64,
        sweep: f64,
        aspect: f64,
    },
    Polyline(Vec<(f64, f64)>),
}

impl BaseShape {
    fn at(&self, u: f64) -> (f64, f64) {
        match self {
            BaseShape::Ellipse {
                start,
                sweep,
                aspect,
            } => {
                let a = start + sweep * u;
                (a.cos() * aspect, a.sin())
            }
            BaseShape::Polyline(pts) => polyline_at(pts, u),
        }
    }
}

fn polyline_at(pts: &[(f64, f64)], u: f64) -> (f64, f64) {
    let seg: Vec<f64> = pts
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .collect();
    let total: f64 = seg.iter().sum();
    if total == 0.0 {
        return pts[0];
    }
    let mut target = u.clamp(0.0, 1.0) * total;
    for (i, len) in seg.iter().enumerate() {
        if target <= *len || i == seg.len() - 1 {
            let f = if *len > 0.0 { (target / len).min(1.0) } else { 0.0 };
            let (a, b) = (pts[i], pts[i + 1]);
            return (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f);
        }
        target -= len;
    }
    *pts.last().unwrap()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    WeightedIndex::new(weights).expect("positive weights").sample(rng)
}

fn base_shape(kind: ShapeKind, rng: &mut ChaCha8Rng) -> BaseShape {
    match kind {
        ShapeKind::Circle => {
            // Start mostly at the top, mostly counter-clockwise on screen.
            let starts = [-PI / 2.0, PI, 0.0, PI / 2.0];
            let start = starts[pick(rng, &[0.5, 0.2, 0.2, 0.1])] + 0.25 * normal(rng);
            let dir = if rng.random_bool(0.7) { -1.0 } else { 1.0 };
            BaseShape::Ellipse {
                start,
                sweep: dir * TAU * rng.random_range(0.85..1.1),
                aspect: rng.random_range(0.7..1.3),
            }
        }
        ShapeKind::Square => {
            let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
            let first = pick(rng, &[0.55, 0.2, 0.1, 0.15]);
            let cw = rng.random_bool(0.6);
            let aspect = rng.random_range(0.7..1.3);
            let pts = (0..=4)
                .map(|k| {
                    let idx = if cw { (first + k) % 4 } else { (first + 4 - k % 4) % 4 };
                    let (x, y) = corners[idx];
                    (x * aspect, y)
                })
                .collect();
            BaseShape::Polyline(pts)
        }
        ShapeKind::Zigzag => {
            let teeth = 2 + pick(rng, &[0.35, 0.3, 0.2, 0.15]);
            let amp = rng.random_range(0.3..1.0);
            let vertical = rng.random_bool(0.25);
            let pts = (0..=teeth * 2)
                .map(|k| {
                    let a = -1.0 + 2.0 * k as f64 / (teeth * 2) as f64;
                    let b = if k % 2 == 0 { -amp } else { amp };
                    if vertical {
                        (b, a)
                    } else {
                        (a, b)
                    }
                })
                .collect();
            BaseShape::Polyline(pts)
        }
        ShapeKind::LetterStroke => {
            let weights: Vec<f64> = (0..LETTERS.len()).map(|r| 1.0 / (r as f64 + 1.0)).collect();
            let template = LETTERS[pick(rng, &weights)];
            let pts = template
                .iter()
                .map(|&(x, y)| (x + 0.08 * normal(rng), y + 0.08 * normal(rng)))
                .collect();
            BaseShape::Polyline(pts)
        }
        ShapeKind::RandomWalk => {
            let k = rng.random_range(4..=8);
            let mut pts = vec![(
                rng.random_range(-1.0..0.0),
                rng.random_range(-1.0..0.0),
            )];
            for _ in 1..k {
                pts.push((rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
            BaseShape::Polyline(pts)
        }
    }
}

struct Account {
    shape: BaseShape,
    center: (f64, f64),
    scale: f64,
    rotation: f64,
    points: usize,
    dt: f64,
}

/// Generates a dataset; a pure function of `(spec, seed)`.
pub fn synth_gestures(spec: &SynthSpec, seed: u64) -> Result<TraceSet> {
    spec.validate()?;
    let mut traces = Vec::with_capacity(spec.accounts * spec.samples_per_account);
    let width = (spec.accounts.max(2) - 1).to_string().len();
    for a in 0..spec.accounts {
        let mut rng = rng_for(seed, &format!("synth/account/{a}"));
        let kind = ShapeKind::ALL[pick(&mut rng, &spec.shape_mix.weights)];
        let shape = base_shape(kind, &mut rng);
        let scale: f64 = rng.random_range(120.0..420.0);
        // keep the shape on screen where the screen allows it
        let span = |extent: f64| {
            let lo = (scale * 1.5).min(extent / 2.0);
            lo..(extent - lo).max(lo + 1.0)
        };
        let center = (rng.random_range(span(spec.screen.0)), rng.random_range(span(spec.screen.1)));
        let account = Account {
            shape,
            center,
            scale,
            rotation: 0.15 * normal(&mut rng),
            points: rng.random_range(spec.points.0..=spec.points.1),
            dt: rng.random_range(8.0..20.0),
        };
        let account_id = format!("acct{a:0width$}");
        for s in 0..spec.samples_per_account {
            let mut srng = rng_for(seed, &format!("synth/sample/{a}/{s}"));
            let points = render_sample(&account, spec.jitter, &mut srng);
            traces.push(RawTrace::new(account_id.clone(), format!("s{s}"), points)?);
        }
    }
    let mut set = TraceSet::new(format!("synthetic(seed={seed})"), traces);
    set.device_bounds = Some(crate::trace::Bounds {
        min_x: 0.0,
        min_y: 0.0,
        max_x: spec.screen.0,
        max_y: spec.screen.1,
    });
    Ok(set)
}

fn render_sample(acct: &Account, jitter: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let j = jitter;
    // Per-sample distortions; all vanish when the jitter is zero.
    let rot = acct.rotation + j * normal(rng);
    let (sx, sy) = (1.0 + j * normal(rng), 1.0 + j * normal(rng));
    let warp = j * 0.5 * normal(rng);
    let bend = [j * normal(rng), j * normal(rng)];
    let phase = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
    let n = if j > 0.0 {
        let spread = (acct.points as f64 * j).round() as i64;
        (acct.points as i64 + rng.random_range(-spread..=spread)).max(8) as usize
    } else {
        acct.points
    };
    let (c, s) = (rot.cos(), rot.sin());
    (0..n)
        .map(|i| {
            let u0 = i as f64 / (n - 1) as f64;
            let u = (u0 + warp * (PI * u0).sin() / PI).clamp(0.0, 1.0);
            let (bx, by) = acct.shape.at(u);
            let lx = bx * sx + bend[0] * (PI * u + phase[0]).sin() + j * 0.3 * normal(rng);
            let ly = by * sy + bend[1] * (PI * u + phase[1]).sin() + j * 0.3 * normal(rng);
            let x = acct.center.0 + acct.scale * (lx * c - ly * s);
            let y = acct.center.1 + acct.scale * (lx * s + ly * c);
            Point::new(i as f64 * acct.dt, x, y)
        })
        .collect()
}
