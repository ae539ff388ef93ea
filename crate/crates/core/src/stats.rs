//! Compensated accumulation and deterministic chunked parallel trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Trials per work unit. Chunk boundaries are fixed so reductions do not
/// depend on the thread count.
pub const CHUNK: u64 = 2048;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Count, mean and sample variance of a stream of observations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    count: u64,
    sum: Neumaier,
    squares: Neumaier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.squares.add(x * x);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        self.sum.merge(other.sum);
        self.squares.merge(other.squares);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.mean();
        ((self.squares.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            mean: self.mean(),
            stderr: self.stderr(),
            count: self.count,
        }
    }
}

/// Runs `step(state, trial)` for every trial in `0..trials`, in parallel
/// chunks that are folded back in chunk order.
pub fn run_trials<T, I, S, M>(trials: u64, init: I, step: S, merge: M) -> T
where
    T: Send,
    I: Fn() -> T + Sync,
    S: Fn(&mut T, u64) + Sync,
    M: Fn(&mut T, T),
{
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut state = init();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                step(&mut state, t);
            }
            state
        })
        .collect();
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum() {
        let mut s = Neumaier::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn moments() {
        let mut acc = Accumulator::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            acc.push(x);
        }
        assert_eq!(acc.mean(), 2.5);
        assert!((acc.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert!((acc.stderr() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chunked_matches_sequential_order() {
        let f = |t: u64| ((t * 2654435761) % 1000) as f64 / 7.0;
        let par = run_trials(
            10_000,
            Accumulator::default,
            |acc, t| acc.push(f(t)),
            |a, b| a.merge(&b),
        );
        let again = run_trials(
            10_000,
            Accumulator::default,
            |acc, t| acc.push(f(t)),
            |a, b| a.merge(&b),
        );
        assert_eq!(par, again);
        assert_eq!(par.count(), 10_000);
        let direct: f64 = (0..10_000).map(f).sum::<f64>() / 10_000.0;
        assert!((par.mean() - direct).abs() < 1e-12);
    }
}
