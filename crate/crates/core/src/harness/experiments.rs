use std::f64::consts::PI;

use serde::Serialize;

use super::{CorrelatedPair, Cell, ExperimentConfig, Report};
use crate::brownian::{
    discretization_margin_check, exact_one_lower_bound, prob_at_least_one, prob_three_or_more,
};
use crate::constellation::LiftedSolution;
use crate::instance::{brute_force_optimum, evaluate, ratio_to_f64, scale_instance, Assignment, Instance};
use crate::rounding::{
    canonical_walk, count_extreme_sign_changes, round_with, sample_gaussian, CrossingStatus,
    GaussianSampler,
};
use crate::sdp::{convert_to_p, feasibility_report_p, objective_p, solve_p_plus, SolverConfig};
use crate::stats::{run_trials, Accumulator};
use crate::{Error, Result};

/// Stand-in for the vanishing constant in the step bound `s >= 20 / (c eta^2)`.
pub const SURROGATE_C: f64 = 1e-3;

/// The constant as stated, kept for the literal comparison run.
pub const LITERAL_C: f64 = 1e-9;

fn indicator(b: bool) -> f64 {
    f64::from(u8::from(b))
}

/// Frequencies of 0, 1 and 2+ extreme sign changes of the canonical walk at
/// threshold 1, against the barrier-crossing bounds.
pub fn mc_sign_change(s: usize, trials: u64, seed: u64) -> Result<Report> {
    if s < 100 || s % 2 != 0 {
        return Err(Error::InvalidArgument(format!("need an even s >= 100, got {s}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let half = s / 2;
    let [none, one, many] = run_trials(
        trials,
        || [Accumulator::default(); 3],
        |acc, t| {
            let r = sample_gaussian(&mut GaussianSampler::for_trial(seed, t), half);
            let walk = canonical_walk(s, &r).expect("even s");
            let count = count_extreme_sign_changes(&walk, 1.0);
            acc[0].push(indicator(!count.labelled));
            acc[1].push(indicator(count.up == 1));
            acc[2].push(indicator(count.up >= 2));
        },
        |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
    );
    let at_least = prob_at_least_one(0.0)?;
    let exact = exact_one_lower_bound(0.0)?;
    let three = prob_three_or_more(0.0)?;

    let mut rep = Report::new("mc-signchange", seed);
    rep.param("s", s).param("trials", trials).param("alpha", 1.0);
    rep.cells.push(Cell::estimate("no_attainment", none.summary(), Some(1.0 - at_least)));
    rep.cells.push(Cell::estimate("exactly_one", one.summary(), Some(exact)));
    rep.cells.push(Cell::estimate("three_or_more", many.summary(), Some(three)));

    let (p0, p1, p3) = (none.mean(), one.mean(), many.mean());
    rep.check("exactly_one_at_least_96", p1 >= 0.96, format!("{p1:.5} >= .96"));
    rep.check(
        "exactly_one_near_quadrature",
        (p1 - exact).abs() <= 0.005,
        format!("|{p1:.5} - {exact:.5}| <= .005"),
    );
    rep.check(
        "no_attainment_near_quadrature",
        (p0 - (1.0 - at_least)).abs() <= 0.005,
        format!("|{p0:.5} - {:.5}| <= .005", 1.0 - at_least),
    );
    rep.check("three_or_more_bounded", p3 <= 0.0178 + 0.005, format!("{p3:.5} <= .0228"));
    Ok(rep)
}

/// `E|x.r - y.r|` for unit vectors at angle `theta`.
pub fn mc_correlation_gap(theta: f64, trials: u64, seed: u64) -> Result<Report> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::InvalidArgument(format!("angle {theta} outside [0, pi]")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let (sin, cos) = theta.sin_cos();
    let gap = run_trials(
        trials,
        Accumulator::default,
        |acc, t| {
            let mut g = GaussianSampler::for_trial(seed, t);
            let (r0, r1) = (g.next_gaussian(), g.next_gaussian());
            // x = (1, 0), y = (cos, sin)
            acc.push((r0 - (cos * r0 + sin * r1)).abs());
        },
        |a, b| a.merge(&b),
    );
    let closed = 2.0 * 2f64.sqrt() / PI.sqrt() * (theta / 2.0).sin();
    let mut rep = Report::new("mc-correlation", seed);
    rep.param("theta", theta).param("trials", trials);
    rep.cells.push(Cell::estimate("abs_gap", gap.summary(), Some(closed)));
    let m = gap.mean();
    let ok = if closed == 0.0 {
        m == 0.0
    } else {
        ((m - closed) / closed).abs() <= 0.01
    };
    rep.check("within_one_percent", ok, format!("{m:.6} vs {closed:.6}"));
    Ok(rep)
}

fn theta_label(theta: f64) -> String {
    format!("theta={theta:.6}")
}

/// Rounds correlated pairs and records the normalized circular distance of
/// the two positions when both variables have exactly one crossing.
pub fn conjecture_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let s = cfg.s;
    let mut rep = Report::new("conjecture", cfg.seed);
    rep.param("s", s)
        .param("trials", cfg.trials)
        .param("alpha", cfg.alpha)
        .param("thetas", &cfg.thetas)
        .param("normalization", "circular distance / s");
    for (idx, &theta) in cfg.thetas.iter().enumerate() {
        let label = theta_label(theta);
        let pair = CorrelatedPair::new(s, theta)?;
        let residual = pair.audit()?;
        if residual > 1e-9 {
            rep.check(format!("{label}/feasible"), false, format!("residual {residual:e}"));
            continue;
        }
        // separate streams per angle
        let seed = cfg.seed.wrapping_add((idx as u64) << 48);
        let [dist, both, first] = run_trials(
            cfg.trials,
            || [Accumulator::default(); 3],
            |acc, t| {
                let out = round_with(&pair, cfg.alpha, &GaussianSampler::for_trial(seed, t))
                    .expect("valid threshold");
                let one0 = out.status[0] == CrossingStatus::OneCrossing;
                let one1 = out.status[1] == CrossingStatus::OneCrossing;
                acc[1].push(indicator(one0 && one1));
                acc[2].push(indicator(one0));
                if one0 && one1 {
                    let fwd = (out.positions[1] + s - out.positions[0]) % s;
                    acc[0].push(fwd.min(s - fwd) as f64 / s as f64);
                }
            },
            |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
        );
        let bound = theta / (2.0 * PI);
        rep.cells.push(Cell::estimate(format!("{label}/distance"), dist.summary(), Some(bound)));
        rep.cells.push(Cell::estimate(format!("{label}/conditioning"), both.summary(), None));
        rep.cells.push(Cell::estimate(
            format!("{label}/first_one_crossing"),
            first.summary(),
            Some(exact_one_lower_bound(0.0)?),
        ));
        let (m, se) = (dist.mean(), dist.stderr());
        rep.check(
            format!("{label}/below_bound"),
            m <= bound + 3.0 * se,
            format!("{m:.6} <= {bound:.6} + 3 * {se:.2e}"),
        );
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct E2eConfig {
    pub ell: usize,
    pub trials: u64,
    pub seed: u64,
    pub alpha: f64,
    pub solver: SolverConfig,
}

impl Default for E2eConfig {
    fn default() -> Self {
        Self {
            ell: 1,
            trials: 1000,
            seed: 0,
            alpha: 1.0,
            solver: SolverConfig::default(),
        }
    }
}

/// Solve, convert, optionally lift, round; compare with the brute-force optimum.
pub fn end_to_end_ratio(inst: &Instance, cfg: &E2eConfig) -> Result<Report> {
    if cfg.ell == 0 || cfg.trials == 0 {
        return Err(Error::InvalidArgument("lift factor and trials must be positive".into()));
    }
    let (_, opt) = brute_force_optimum(inst)?;
    let opt = ratio_to_f64(opt);
    let (plus, audit) = solve_p_plus(inst, &cfg.solver)?;
    let sol = convert_to_p(&plus)?;
    let sdp = objective_p(&sol, inst)?;
    let residual = audit.max_residual().max(feasibility_report_p(&sol).max_residual());
    let lifted = LiftedSolution::new(&sol, cfg.ell)?;
    let scaled = scale_instance(inst, cfg.ell)?;
    let rounded = run_trials(
        cfg.trials,
        Accumulator::default,
        |acc, t| {
            let out = round_with(&lifted, cfg.alpha, &GaussianSampler::for_trial(cfg.seed, t))
                .expect("valid threshold");
            let value = evaluate(&scaled, &Assignment::new(out.positions)).expect("positions in range");
            acc.push(value.total);
        },
        |a, b| a.merge(&b),
    );

    let mut rep = Report::new("e2e", cfg.seed);
    rep.param("p", inst.p())
        .param("n", inst.n())
        .param("m", inst.m())
        .param("ell", cfg.ell)
        .param("trials", cfg.trials)
        .param("alpha", cfg.alpha)
        .param("solver", &cfg.solver)
        .param("solver_iterations", audit.iterations)
        .param("solver_converged", audit.converged)
        .param("max_residual", residual);
    let mean = rounded.mean();
    rep.cells.push(Cell::exact("sdp", sdp, None));
    rep.cells.push(Cell::exact("opt", opt, None));
    rep.cells.push(Cell::estimate("rounded", rounded.summary(), Some(opt)));
    rep.cells.push(Cell::exact("ratio_opt", mean / opt, None));
    rep.cells.push(Cell::exact("ratio_sdp", mean / sdp, None));
    rep.check(
        "rounded_le_opt",
        mean <= opt + 3.0 * rounded.stderr() + 1e-12,
        format!("{mean:.6} <= {opt:.6} + 3 * {:.2e}", rounded.stderr()),
    );
    rep.check("opt_le_sdp", opt <= sdp + 1e-3, format!("{opt:.6} <= {sdp:.6} + 1e-3"));
    rep.check("solver_feasible", residual <= 1e-6, format!("residual {residual:.2e}"));
    Ok(rep)
}

/// Margin check at the step count the bound requires, for the surrogate
/// constant and for the constant as stated.
pub fn discretization_report(eta: f64, c: f64, trials: u64, seed: u64) -> Result<Report> {
    let required = |c: f64| (20.0 / (c * eta * eta)).ceil() as u64;
    let surrogate = discretization_margin_check(required(c), eta, c, trials, seed)?;
    let literal = discretization_margin_check(required(LITERAL_C), eta, LITERAL_C, trials, seed)?;
    let mut rep = Report::new("discretize", seed);
    rep.param("eta", eta)
        .param("c", c)
        .param("s", surrogate.s)
        .param("literal_c", LITERAL_C)
        .param("literal_s", literal.s)
        .param("trials", trials)
        .param("endpoint_cutoff", crate::brownian::ENDPOINT_CUTOFF);
    for (name, chk) in [("frequency", &surrogate), ("frequency_literal_c", &literal)] {
        rep.cells.push(Cell {
            name: name.into(),
            mean: chk.frequency,
            stderr: chk.stderr,
            count: chk.trials,
            reference: Some(0.997),
        });
    }
    rep.cells.push(Cell::exact("late_fraction", surrogate.late_fraction, None));
    rep.check(
        "frequency_at_least_997",
        surrogate.compliant && surrogate.frequency >= 0.997 - 3.0 * surrogate.stderr,
        format!("{:.5} >= .997 - 3 * {:.2e}", surrogate.frequency, surrogate.stderr),
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_instance;

    #[test]
    fn correlation_endpoints() {
        let rep = mc_correlation_gap(0.0, 1000, 1).unwrap();
        assert_eq!(rep.cells[0].mean, 0.0);
        assert!(rep.passed());
        let rep = mc_correlation_gap(PI / 2.0, 200_000, 1).unwrap();
        assert!((rep.cells[0].reference.unwrap() - 2.0 / PI.sqrt()).abs() < 1e-12);
        assert!(rep.passed());
        assert!(mc_correlation_gap(4.0, 10, 1).is_err());
    }

    #[test]
    fn identical_pair_has_zero_distance() {
        let cfg = ExperimentConfig { s: 200, trials: 3000, thetas: vec![0.0], ..Default::default() };
        let rep = conjecture_experiment(&cfg).unwrap();
        let d = rep.cell("theta=0.000000/distance").unwrap();
        assert!(d.count > 2000);
        assert_eq!(d.mean, 0.0);
        assert_eq!(conjecture_experiment(&cfg).unwrap(), rep);
    }

    #[test]
    fn sign_change_small() {
        let a = mc_sign_change(200, 5000, 4).unwrap();
        let b = mc_sign_change(200, 5000, 4).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        let total: f64 = ["no_attainment", "exactly_one", "three_or_more"]
            .iter()
            .map(|n| a.cell(n).unwrap().mean)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(mc_sign_change(50, 10, 0).is_err());
    }

    #[test]
    fn planted_pipeline() {
        let (inst, _) = generate_instance(3, 4, 3, 5, true).unwrap();
        let rep = end_to_end_ratio(&inst, &E2eConfig { trials: 300, ..Default::default() }).unwrap();
        assert_eq!(rep.cell("opt").unwrap().mean, 3.0);
        assert!(rep.cell("sdp").unwrap().mean >= 3.0 - 1e-3);
        assert!(rep.passed(), "{:?}", rep.checks);
    }
}
