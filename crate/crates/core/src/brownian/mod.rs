//! Hitting times, alternating-barrier probabilities and the discretization
//! margin of the Brownian picture behind the rounding walk.
//!
//! Conditioned on the endpoint `W_1 = a`, the mapped walk `w` is a Brownian
//! bridge from 0 to `a`. Thresholds `+-1` on the raw walk become the barriers
//! `a/2 - 1/2` and `a/2 + 1/2`, widened here by `eta` on each side so that the
//! gap between them is `g = 1 + 2 eta`.

mod quad;

use rand_distr::InverseGaussian;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::rounding::GaussianSampler;
use crate::stats::{run_trials, Accumulator};
use crate::{Error, Result};

pub use quad::adaptive_simpson;

/// Absolute tolerance for every case integral.
pub const QUAD_TOLERANCE: f64 = 1e-8;

/// Endpoints beyond this magnitude are discarded by the discretization check.
pub const ENDPOINT_CUTOFF: f64 = 10.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `(phi(x), Phi(x))` for the standard normal.
pub fn std_normal(x: f64) -> (f64, f64) {
    (normal_pdf(x), normal_cdf(x))
}

pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Density of the first time a standard Brownian motion reaches `b`.
pub fn hitting_time_density(b: f64, t: f64) -> Result<f64> {
    if !(b > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hitting time density needs b > 0 and t > 0, got b={b}, t={t}"
        )));
    }
    Ok(b * INV_SQRT_2PI / t.powf(1.5) * (-b * b / (2.0 * t)).exp())
}

/// `Pr[tau_b <= horizon]` by integrating the density.
pub fn hitting_probability_by_quadrature(b: f64, horizon: f64) -> Result<f64> {
    hitting_time_density(b, horizon)?;
    Ok(adaptive_simpson(
        |t| if t > 0.0 { hitting_time_density(b, t).unwrap_or(0.0) } else { 0.0 },
        0.0,
        horizon,
        1e-12,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// The upper barrier `a/2 + 1/2 + eta` is crossed first.
    Upper,
    /// The lower barrier `a/2 - 1/2 - eta` is crossed first.
    Lower,
}

/// Crossing `m` alternating barriers, starting on `first`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierSequenceSpec {
    pub m: usize,
    pub first: Side,
    pub eta: f64,
}

impl BarrierSequenceSpec {
    pub fn new(m: usize, first: Side, eta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("barrier count must be at least 1".into()));
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta {eta} must be finite and nonnegative")));
        }
        Ok(Self { m, first, eta })
    }

    /// Distance between the two barriers.
    pub fn gap(&self) -> f64 {
        1.0 + 2.0 * self.eta
    }

    /// Endpoint after reflecting the path once per barrier.
    pub fn reflected_endpoint(&self, a: f64) -> f64 {
        let span = self.m as f64 * self.gap();
        match (self.m % 2, self.first) {
            (1, _) => span,
            (_, Side::Upper) => span + a,
            (_, Side::Lower) => span - a,
        }
    }
}

/// `Pr[the bridge to a crosses the barrier sequence before time 1]`.
pub fn conditional_barrier_probability(spec: &BarrierSequenceSpec, a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("endpoint {a} is not finite")));
    }
    if spec.m >= 2 && a.abs() > spec.gap() {
        return Err(Error::InvalidArgument(format!(
            "endpoint {a} lies outside the barrier gap; use the tail terms"
        )));
    }
    let e = spec.reflected_endpoint(a);
    // ratio of densities, computed in log space to survive large |a|
    Ok((0.5 * (a * a - e * e)).exp().min(1.0))
}

fn case_integral(m: usize, first: Side, eta: f64) -> f64 {
    let spec = BarrierSequenceSpec { m, first, eta };
    let g = spec.gap();
    adaptive_simpson(
        |a| conditional_barrier_probability(&spec, a).expect("inside gap") * normal_pdf(a),
        -g,
        g,
        QUAD_TOLERANCE,
    )
}

fn case_pair(m: usize, eta: f64) -> f64 {
    case_integral(m, Side::Upper, eta) + case_integral(m, Side::Lower, eta)
}

/// Terms of the lower bound on `Pr[at least one barrier is crossed]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtLeastOne {
    pub eta: f64,
    /// Endpoint beyond one barrier: `1 - Phi(g)`, once per side.
    pub tail: f64,
    /// `int_{-g}^{g} Pr[H_1^+] phi`.
    pub single: f64,
    /// `int Pr[H_2^+] phi`.
    pub double: f64,
    /// `int Pr[H_3^+] phi`.
    pub triple: f64,
    /// `int (Pr[H_4^+] + Pr[H_4^-]) phi`.
    pub quadruple_pair: f64,
    /// Inclusion-exclusion over endpoints inside the gap.
    pub inside: f64,
    pub total: f64,
}

pub fn at_least_one(eta: f64) -> Result<AtLeastOne> {
    BarrierSequenceSpec::new(1, Side::Upper, eta)?;
    let g = 1.0 + 2.0 * eta;
    let tail = normal_tail(g);
    let single = case_integral(1, Side::Upper, eta);
    let single_pair = single + case_integral(1, Side::Lower, eta);
    let double_pair = case_pair(2, eta);
    let triple = case_integral(3, Side::Upper, eta);
    let triple_pair = triple + case_integral(3, Side::Lower, eta);
    let quadruple_pair = case_pair(4, eta);
    let inside = single_pair - double_pair + triple_pair - quadruple_pair;
    Ok(AtLeastOne {
        eta,
        tail,
        single,
        double: case_integral(2, Side::Upper, eta),
        triple,
        quadruple_pair,
        inside,
        total: 2.0 * tail + inside,
    })
}

pub fn prob_at_least_one(eta: f64) -> Result<f64> {
    Ok(at_least_one(eta)?.total)
}

/// Terms of the upper bound on `Pr[three or more barriers are crossed]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeOrMore {
    /// Endpoint beyond one barrier, two more crossings: `1 - Phi(3g)` per side.
    pub tail: f64,
    pub triple: f64,
    pub triple_pair: f64,
    pub quadruple_pair: f64,
    pub quintuple_pair: f64,
    pub inside: f64,
    pub total: f64,
}

pub fn three_or_more(eta: f64) -> Result<ThreeOrMore> {
    BarrierSequenceSpec::new(1, Side::Upper, eta)?;
    let g = 1.0 + 2.0 * eta;
    let tail = normal_tail(3.0 * g);
    let triple = case_integral(3, Side::Upper, eta);
    let triple_pair = triple + case_integral(3, Side::Lower, eta);
    let quadruple_pair = case_pair(4, eta);
    let quintuple_pair = case_pair(5, eta);
    let inside = triple_pair - quadruple_pair + quintuple_pair;
    Ok(ThreeOrMore {
        tail,
        triple,
        triple_pair,
        quadruple_pair,
        quintuple_pair,
        inside,
        total: 2.0 * tail + inside,
    })
}

pub fn prob_three_or_more(eta: f64) -> Result<f64> {
    Ok(three_or_more(eta)?.total)
}

/// Lower bound on the probability of exactly one extreme sign change.
pub fn exact_one_lower_bound(eta: f64) -> Result<f64> {
    Ok(prob_at_least_one(eta)? - prob_three_or_more(eta)?)
}

/// Law of `W_{T+t}` given `W_T = level` and `W_1 = a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgeIncrementLaw {
    pub big_t: f64,
    pub t: f64,
    pub level: f64,
    pub a: f64,
    pub mean: f64,
    pub variance: f64,
}

pub fn bridge_increment_law(big_t: f64, t: f64, level: f64, a: f64) -> Result<BridgeIncrementLaw> {
    if !(0.0..1.0).contains(&big_t) || !(t > 0.0) || t > 1.0 - big_t {
        return Err(Error::InvalidArgument(format!(
            "bridge increment needs 0 <= T < 1 and 0 < t <= 1 - T, got T={big_t}, t={t}"
        )));
    }
    let rest = 1.0 - big_t;
    Ok(BridgeIncrementLaw {
        big_t,
        t,
        level,
        a,
        mean: level - t * (level - a) / rest,
        variance: (t * (rest - t) / rest).max(0.0),
    })
}

/// Conditional density of the hitting time of `level` given `W_1 = a`,
/// unnormalised: integrating over `(0, 1)` gives `Pr[tau <= 1 | W_1 = a]`.
pub fn conditional_hitting_density(level: f64, a: f64, t: f64) -> Result<f64> {
    if !(t < 1.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be below 1")));
    }
    let rest = (1.0 - t).sqrt();
    Ok(hitting_time_density(level, t)? * normal_pdf((level - a) / rest) / rest / normal_pdf(a))
}

/// `Pr[tau_level <= 1 | W_1 = a]` in closed form.
pub fn bridge_hit_probability(level: f64, a: f64) -> f64 {
    if level <= 0.0 || a >= level {
        1.0
    } else {
        (-2.0 * level * (level - a)).exp()
    }
}

/// Draws the hitting time of `level > 0` for a bridge ending at `a`, given
/// that it happens before time 1. `tau / (1 - tau)` is inverse Gaussian.
pub fn sample_bridge_hitting_time(level: f64, a: f64, sampler: &mut GaussianSampler) -> Result<f64> {
    let gap = (level - a).abs();
    if !(level > 0.0) || gap == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "hitting time needs level > 0 and level != a, got level={level}, a={a}"
        )));
    }
    let law = InverseGaussian::new(level / gap, level * level)
        .map_err(|e| Error::InvalidArgument(format!("inverse gaussian: {e}")))?;
    let u = sampler.sample(&law);
    Ok(u / (1.0 + u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscretizationCheck {
    pub s: u64,
    pub eta: f64,
    pub c: f64,
    pub trials: u64,
    /// Fraction of trials whose first grid value after the hit is at least `b`.
    pub frequency: f64,
    pub stderr: f64,
    /// Fraction of trials with the hit after `1 - c`.
    pub late_fraction: f64,
    /// Smallest step count satisfying `s >= 20 / (c eta^2)`.
    pub required_s: f64,
    pub compliant: bool,
}

/// Monte Carlo estimate of `Pr[w_{ceil(s tau)} >= b | tau <= 1]` where `tau`
/// is the first time the bridge reaches `b + eta`, `b = a/2 + 1/2`.
pub fn discretization_margin_check(
    s: u64,
    eta: f64,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<DiscretizationCheck> {
    if s == 0 || trials == 0 {
        return Err(Error::InvalidArgument("steps and trials must be positive".into()));
    }
    if !(eta > 0.0) || !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("need eta > 0 and 0 < c < 1, got {eta}, {c}")));
    }
    let required_s = 20.0 / (c * eta * eta);
    let sf = s as f64;
    let (hits, late) = run_trials(
        trials,
        || (Accumulator::default(), Accumulator::default()),
        |(hits, late), trial| {
            let mut rng = GaussianSampler::for_trial(seed, trial);
            let (a, tau) = loop {
                let a = rng.next_gaussian();
                if a.abs() > ENDPOINT_CUTOFF {
                    continue;
                }
                let level = 0.5 * a + 0.5 + eta;
                if level <= 0.0 {
                    break (a, 0.0);
                }
                if rng.next_uniform() < bridge_hit_probability(level, a) {
                    let tau = sample_bridge_hitting_time(level, a, &mut rng).expect("level > 0");
                    break (a, tau);
                }
            };
            let level = 0.5 * a + 0.5 + eta;
            let b = level - eta;
            let grid = (sf * tau).ceil().min(sf);
            let t = (grid - sf * tau) / sf;
            let value = if t <= 0.0 {
                level.max(b)
            } else {
                let law = bridge_increment_law(tau, t.min(1.0 - tau), level, a).expect("valid bridge");
                law.mean + law.variance.sqrt() * rng.next_gaussian()
            };
            hits.push(f64::from(u8::from(value >= b)));
            late.push(f64::from(u8::from(tau > 1.0 - c)));
        },
        |(h, l), (h2, l2)| {
            h.merge(&h2);
            l.merge(&l2);
        },
    );
    Ok(DiscretizationCheck {
        s,
        eta,
        c,
        trials,
        frequency: hits.mean(),
        stderr: hits.stderr(),
        late_fraction: late.mean(),
        required_s,
        compliant: sf >= required_s,
    })
}
