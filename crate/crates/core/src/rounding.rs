//! Rounding by threshold crossings of Gaussian walks.
//!
//! A shared Gaussian vector `r` turns every variable's constellation into a
//! circular sequence `v^k . r`. A variable is placed where its sequence makes
//! its unique extreme sign change, i.e. first climbs to `+alpha` after having
//! been at or below `-alpha`.

use std::io::Write;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constellation::{Constellation, LiftedSolution};
use crate::linalg::dot;
use crate::sdp::{feasibility_report_p, SdpSolutionP};
use crate::{Error, Result};

/// Residual bound a (P) solution must meet before rounding.
pub const ROUNDING_TOLERANCE: f64 = 1e-5;

/// Counter-based normal source: ChaCha8 keyed by `(seed, stream)` feeding
/// Box-Muller pairs.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            rng,
            spare: None,
        }
    }

    /// Stream `trial << 32`; lanes below `2^32` are reserved for sub-streams.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        Self::new(seed, trial << 32)
    }

    /// A fresh sampler on `stream + lane`.
    pub fn substream(&self, lane: u64) -> Self {
        Self::new(self.seed, self.stream.wrapping_add(lane))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }

    pub fn uniform_index(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    pub fn sample<D: Distribution<f64>>(&mut self, dist: &D) -> f64 {
        dist.sample(&mut self.rng)
    }
}

pub fn sample_gaussian(sampler: &mut GaussianSampler, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| sampler.next_gaussian()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    values: Vec<f64>,
}

impl WalkTrace {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty walk".into()));
        }
        Ok(Self { values })
    }

    pub fn s(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchor(&self) -> f64 {
        self.values[0]
    }

    /// `w_k = (a - values[k]) / 2`.
    pub fn mapped(&self) -> Vec<f64> {
        let a = self.anchor();
        self.values.iter().map(|v| 0.5 * (a - v)).collect()
    }

    /// `max_k |values[k + s/2] + values[k]|`.
    pub fn antipodal_residual(&self) -> f64 {
        let half = self.s() / 2;
        (0..half)
            .map(|k| (self.values[k] + self.values[k + half]).abs())
            .fold(0.0, f64::max)
    }
}

/// `values[k] = v^k . r` by direct dot products.
pub fn compute_walk(vectors: &[Vec<f64>], r: &[f64]) -> Result<WalkTrace> {
    let c = Constellation::new(vectors.to_vec())?;
    if c.dim() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: r.len(),
        });
    }
    let residual = crate::constellation::gram_residual(&c);
    if residual > 1e-6 {
        return Err(Error::Infeasible {
            family: "constellation".into(),
            residual,
            tolerance: 1e-6,
        });
    }
    WalkTrace::new(vectors.iter().map(|v| dot(v, r)).collect())
}

/// Walk of the canonical constellation on domain `s`, with `r` of length `s/2`:
/// `values[k] = a - 2 sqrt(2/s) sum_{m<k} r_m` for `k <= s/2`, mirrored beyond.
pub fn canonical_walk(s: usize, r: &[f64]) -> Result<WalkTrace> {
    if s < 2 || s % 2 != 0 {
        return Err(Error::InvalidDomain(s));
    }
    let half = s / 2;
    if r.len() != half {
        return Err(Error::DimensionMismatch {
            expected: half,
            got: r.len(),
        });
    }
    let c = (2.0 / s as f64).sqrt();
    let a = c * r.iter().sum::<f64>();
    let mut values = vec![0.0; s];
    let mut acc = a;
    values[0] = a;
    for k in 1..half {
        acc -= 2.0 * c * r[k - 1];
        values[k] = acc;
    }
    for k in 0..half {
        values[k + half] = -values[k];
    }
    WalkTrace::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrossingEvent {
    /// Last index of the run at or below `-alpha` (at or above for `Down`).
    pub t_minus: usize,
    /// First index of the following run on the opposite side.
    pub t_plus: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CrossingStatus {
    OneCrossing,
    NoCrossing,
    ManyCrossings(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Plus,
    Minus,
}

fn label(v: f64, alpha: f64) -> Option<Label> {
    if v >= alpha {
        Some(Label::Plus)
    } else if v <= -alpha {
        Some(Label::Minus)
    } else {
        None
    }
}

/// Circular runs of equal labels as `(label, first, last)`.
fn circular_runs(trace: &WalkTrace, alpha: f64) -> Vec<(Label, usize, usize)> {
    let mut runs: Vec<(Label, usize, usize)> = Vec::new();
    for (k, &v) in trace.values.iter().enumerate() {
        if let Some(l) = label(v, alpha) {
            match runs.last_mut() {
                Some(run) if run.0 == l => run.2 = k,
                _ => runs.push((l, k, k)),
            }
        }
    }
    if runs.len() > 1 && runs[0].0 == runs[runs.len() - 1].0 {
        let tail = runs.pop().expect("at least two runs");
        runs[0].1 = tail.1;
    }
    runs
}

/// Every sign change, up and down, in circular order starting from index 0.
pub fn detect_sign_changes(trace: &WalkTrace, alpha: f64) -> Vec<CrossingEvent> {
    let runs = circular_runs(trace, alpha);
    if runs.len() < 2 {
        return Vec::new();
    }
    (0..runs.len())
        .map(|t| {
            let (from, to) = (runs[t], runs[(t + 1) % runs.len()]);
            CrossingEvent {
                t_minus: from.2,
                t_plus: to.1,
                direction: if from.0 == Label::Minus {
                    Direction::Up
                } else {
                    Direction::Down
                },
            }
        })
        .collect()
}

/// Up-crossings: a run at or below `-alpha` followed by a run at or above `+alpha`.
pub fn detect_extreme_sign_changes(trace: &WalkTrace, alpha: f64) -> Vec<CrossingEvent> {
    detect_sign_changes(trace, alpha)
        .into_iter()
        .filter(|e| e.direction == Direction::Up)
        .collect()
}

/// Crossing statistics without allocating events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingCount {
    pub up: usize,
    pub labelled: bool,
}

pub fn count_extreme_sign_changes(trace: &WalkTrace, alpha: f64) -> CrossingCount {
    let runs = circular_runs(trace, alpha);
    let up = if runs.len() < 2 {
        0
    } else {
        (0..runs.len())
            .filter(|&t| runs[t].0 == Label::Minus && runs[(t + 1) % runs.len()].0 == Label::Plus)
            .count()
    };
    CrossingCount {
        up,
        labelled: !runs.is_empty(),
    }
}

pub fn assign_position(
    trace: &WalkTrace,
    alpha: f64,
    sampler: &mut GaussianSampler,
) -> Result<(usize, CrossingStatus, Option<CrossingEvent>)> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {alpha} must be positive")));
    }
    let events = detect_extreme_sign_changes(trace, alpha);
    Ok(match events.len() {
        1 => (events[0].t_plus, CrossingStatus::OneCrossing, Some(events[0])),
        0 => (sampler.uniform_index(trace.s()), CrossingStatus::NoCrossing, None),
        k => (sampler.uniform_index(trace.s()), CrossingStatus::ManyCrossings(k), None),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingOutcome {
    pub s: usize,
    pub positions: Vec<usize>,
    pub status: Vec<CrossingStatus>,
    pub crossing: Vec<Option<CrossingEvent>>,
}

/// Anything that yields one circular walk per variable from a shared `r`.
pub trait WalkSource: Sync {
    fn n_vars(&self) -> usize;
    fn s(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn walk(&self, i: usize, r: &[f64]) -> WalkTrace;
}

impl WalkSource for SdpSolutionP {
    fn n_vars(&self) -> usize {
        self.n
    }
    fn s(&self) -> usize {
        self.p
    }
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn walk(&self, i: usize, r: &[f64]) -> WalkTrace {
        WalkTrace {
            values: self.variable(i).iter().map(|v| dot(v, r)).collect(),
        }
    }
}

impl WalkSource for LiftedSolution {
    fn n_vars(&self) -> usize {
        self.base().n
    }
    fn s(&self) -> usize {
        LiftedSolution::s(self)
    }
    fn ambient_dim(&self) -> usize {
        LiftedSolution::ambient_dim(self)
    }
    fn walk(&self, i: usize, r: &[f64]) -> WalkTrace {
        WalkTrace {
            values: self.walk_values(i, r),
        }
    }
}

/// A single variable carrying the canonical constellation on domain `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonicalSource {
    pub s: usize,
}

impl WalkSource for CanonicalSource {
    fn n_vars(&self) -> usize {
        1
    }
    fn s(&self) -> usize {
        self.s
    }
    fn ambient_dim(&self) -> usize {
        self.s / 2
    }
    fn walk(&self, _i: usize, r: &[f64]) -> WalkTrace {
        canonical_walk(self.s, r).expect("source built with even s")
    }
}

/// Rounds without a feasibility audit. `r` comes from `sampler`; variable
/// `i` falls back on sub-stream `1 + i`.
pub fn round_with<W: WalkSource + ?Sized>(
    source: &W,
    alpha: f64,
    sampler: &GaussianSampler,
) -> Result<RoundingOutcome> {
    let mut draw = sampler.clone();
    let r = sample_gaussian(&mut draw, source.ambient_dim());
    let n = source.n_vars();
    let mut out = RoundingOutcome {
        s: source.s(),
        positions: Vec::with_capacity(n),
        status: Vec::with_capacity(n),
        crossing: Vec::with_capacity(n),
    };
    for i in 0..n {
        let trace = source.walk(i, &r);
        let mut fallback = sampler.substream(1 + i as u64);
        let (pos, status, event) = assign_position(&trace, alpha, &mut fallback)?;
        out.positions.push(pos);
        out.status.push(status);
        out.crossing.push(event);
    }
    Ok(out)
}

/// Audits `sol` and rounds it with one shared Gaussian draw.
pub fn round_solution(
    sol: &SdpSolutionP,
    alpha: f64,
    sampler: &GaussianSampler,
) -> Result<RoundingOutcome> {
    let residual = feasibility_report_p(sol).max_residual();
    if residual > ROUNDING_TOLERANCE {
        return Err(Error::Infeasible {
            family: "P".into(),
            residual,
            tolerance: ROUNDING_TOLERANCE,
        });
    }
    round_with(sol, alpha, sampler)
}

/// Writes `variable,k,value,label` rows for external plotting.
pub fn write_walk_csv<W: Write>(out: W, traces: &[WalkTrace], alpha: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "k", "value", "label"])
        .map_err(csv_err)?;
    for (i, trace) in traces.iter().enumerate() {
        for (k, &v) in trace.values.iter().enumerate() {
            let tag = match label(v, alpha) {
                Some(Label::Plus) => "+",
                Some(Label::Minus) => "-",
                None => "",
            };
            w.write_record([i.to_string(), k.to_string(), format!("{v:?}"), tag.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}
