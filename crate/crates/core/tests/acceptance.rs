//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! The process fails only when a criterion cannot be evaluated (an error or
//! panic). Set `RELQ_ACCEPTANCE_STRICT=1` to also fail on any FAIL line.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use relq::brownian::{hitting_probability_by_quadrature, normal_tail};
use relq::constellation::{antipodal_residual, canonical_constellation, difference_audit, gram_residual, lift_solution};
use relq::harness::{
    conjecture_experiment, discretization_report, mc_correlation_gap, mc_sign_change,
    reproduce_constants, ExperimentConfig, SURROGATE_C,
};
use relq::instance::{brute_force_optimum, evaluate, generate_instance, ratio_to_f64, scale_instance, Assignment};
use relq::rounding::{round_solution, GaussianSampler};
use relq::sdp::{
    convert_to_p, feasibility_report_p, feasibility_report_p_plus, integral_embedding, objective_p,
    objective_p_plus, solve_p_plus, SdpSolutionP, SolverConfig,
};

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut antipodal: f64 = 0.0;
    for p in [4, 8, 16, 64] {
        let c = canonical_constellation(p).map_err(err)?;
        worst = worst.max(gram_residual(&c));
        worst = worst.max(difference_audit(&c).map_err(err)?.max());
        antipodal = antipodal.max(antipodal_residual(&c));
    }
    let elapsed = start.elapsed();
    Ok((
        worst <= 1e-12 && antipodal == 0.0 && elapsed < Duration::from_secs(1),
        format!("max residual {worst:.2e}, antipodal {antipodal:e}, {elapsed:.2?}"),
    ))
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let table = reproduce_constants().map_err(err)?;
    let rep = table.to_report();
    let worst = table
        .rows
        .iter()
        .filter(|r| r.tolerance.is_some())
        .map(|r| r.abs_delta)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    Ok((
        rep.passed() && table.exact_one >= 0.96 && elapsed < Duration::from_secs(5),
        format!("worst |delta| {worst:.2e}, exactly one >= {:.6}, {elapsed:.2?}", table.exact_one),
    ))
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let rep = mc_sign_change(2000, 200_000, 20_260_101).map_err(err)?;
    let one = rep.cell("exactly_one").ok_or("missing cell")?.mean;
    let none = rep.cell("no_attainment").ok_or("missing cell")?.mean;
    let elapsed = start.elapsed();
    let ok_one = one >= 0.96 && (one - 0.9679).abs() <= 0.005;
    let ok_none = (none - (1.0 - 0.9856)).abs() <= 0.005;
    Ok((
        ok_one && ok_none && elapsed < Duration::from_secs(120),
        format!(
            "exactly one {one:.5} (vs .9679), no attainment {none:.5} (vs .0144, |delta| {:.5}), {elapsed:.2?}",
            (none - 0.0144).abs()
        ),
    ))
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for theta in [PI / 6.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI] {
        let rep = mc_correlation_gap(theta, 1_000_000, 4).map_err(err)?;
        let cell = &rep.cells[0];
        let reference = cell.reference.ok_or("missing reference")?;
        worst = worst.max(((cell.mean - reference) / reference).abs());
    }
    let elapsed = start.elapsed();
    Ok((
        worst <= 0.01 && elapsed < Duration::from_secs(30),
        format!("worst relative error {worst:.2e}, {elapsed:.2?}"),
    ))
}

// (instance, brute-force optimum, solver objective, worst residual)
type SolverRun = (relq::instance::Instance, f64, f64, f64);

fn solver_outputs() -> Result<Vec<SolverRun>, String> {
    let mut out = Vec::new();
    for (k, (n, p)) in [(3, 4), (4, 4), (5, 4), (3, 8), (4, 8)].into_iter().enumerate() {
        let (inst, _) = generate_instance(n, p, 2 * n, 900 + k as u64, false).map_err(err)?;
        let (_, opt) = brute_force_optimum(&inst).map_err(err)?;
        let (sol, report) = solve_p_plus(&inst, &SolverConfig::default()).map_err(err)?;
        let value = objective_p_plus(&sol, &inst).map_err(err)?;
        let residual = report.max_residual().max(feasibility_report_p_plus(&sol).max_residual());
        out.push((inst, ratio_to_f64(opt), value, residual));
    }
    Ok(out)
}

fn ac5() -> Outcome {
    let mut worst_embed: f64 = 0.0;
    let mut worst_convert: f64 = 0.0;
    for k in 0..100u64 {
        let p = [2, 4, 6, 8, 10][(k % 5) as usize];
        let n = 2 + (k % 4) as usize;
        let (inst, _) = generate_instance(n, p, 1 + (k % 7) as usize, 5000 + k, k % 3 == 0).map_err(err)?;
        let mut rng = GaussianSampler::new(k, 1);
        let asg = Assignment::new((0..n).map(|_| rng.uniform_index(p)).collect());
        let exact = evaluate(&inst, &asg).map_err(err)?.total;
        let plus = integral_embedding(&inst, &asg).map_err(err)?;
        let embedded = objective_p_plus(&plus, &inst).map_err(err)?;
        worst_embed = worst_embed.max((embedded - exact).abs());
        let conv = objective_p(&convert_to_p(&plus).map_err(err)?, &inst).map_err(err)?;
        worst_convert = worst_convert.max((conv - embedded).abs());
    }
    for k in 0..5u64 {
        let (inst, _) = generate_instance(4, 8, 6, 7000 + k, false).map_err(err)?;
        let (sol, _) = solve_p_plus(&inst, &SolverConfig::default()).map_err(err)?;
        let before = objective_p_plus(&sol, &inst).map_err(err)?;
        let after = objective_p(&convert_to_p(&sol).map_err(err)?, &inst).map_err(err)?;
        worst_convert = worst_convert.max((after - before).abs());
    }
    Ok((
        worst_embed <= 1e-9 && worst_convert <= 1e-8,
        format!("embedding {worst_embed:.2e}, conversion {worst_convert:.2e}"),
    ))
}

fn ac6() -> Outcome {
    let start = Instant::now();
    let runs = solver_outputs()?;
    let mut ok = true;
    let mut gap = f64::INFINITY;
    let mut residual: f64 = 0.0;
    for (_, opt, value, res) in &runs {
        ok &= *value >= opt - 1e-3 && *res <= 1e-6;
        gap = gap.min(value - opt);
        residual = residual.max(*res);
    }
    let elapsed = start.elapsed();
    Ok((
        ok && elapsed < Duration::from_secs(300),
        format!("min (sdp - opt) {gap:.4}, max residual {residual:.2e}, {elapsed:.2?}"),
    ))
}

fn ac7() -> Outcome {
    let (inst, _) = generate_instance(3, 4, 4, 31, false).map_err(err)?;
    let (plus, _) = solve_p_plus(&inst, &SolverConfig::default()).map_err(err)?;
    let sol: SdpSolutionP = convert_to_p(&plus).map_err(err)?;
    let base = objective_p(&sol, &inst).map_err(err)?;
    let mut worst_obj: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut in_range = true;
    for ell in [2, 5, 50] {
        let lifted = lift_solution(&sol, ell).map_err(err)?;
        let scaled = scale_instance(&inst, ell).map_err(err)?;
        worst_obj = worst_obj.max((objective_p(&lifted, &scaled).map_err(err)? - base).abs());
        worst_res = worst_res.max(feasibility_report_p(&lifted).max_residual());
        for t in 0..20 {
            let out = round_solution(&lifted, 1.0, &GaussianSampler::for_trial(7, t)).map_err(err)?;
            in_range &= out.positions.iter().all(|&x| x < ell * inst.p());
        }
    }
    Ok((
        worst_obj <= 1e-9 && worst_res <= 1e-9 && in_range,
        format!("objective drift {worst_obj:.2e}, residual {worst_res:.2e}, positions in range: {in_range}"),
    ))
}

fn ac8() -> Outcome {
    let mut worst: f64 = 0.0;
    for b in [0.5, 1.0, 2.0] {
        for horizon in [0.25, 1.0] {
            let quad = hitting_probability_by_quadrature(b, horizon).map_err(err)?;
            worst = worst.max((quad - 2.0 * normal_tail(b / horizon.sqrt())).abs());
        }
    }
    Ok((worst <= 1e-6, format!("worst |delta| {worst:.2e}")))
}

fn ac9() -> Outcome {
    let rep = discretization_report(0.01, SURROGATE_C, 100_000, 9).map_err(err)?;
    let cell = rep.cell("frequency").ok_or("missing cell")?;
    let literal = rep.cell("frequency_literal_c").ok_or("missing cell")?;
    Ok((
        rep.passed(),
        format!(
            "surrogate c={SURROGATE_C:e}, s={}: frequency {:.5} (stderr {:.1e}); literal c=1e-9: {:.5}",
            rep.parameters["s"], cell.mean, cell.stderr, literal.mean
        ),
    ))
}

fn ac10() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for seed in [1u64, 2, 3] {
        let cfg = ExperimentConfig { s: 2000, trials: 100_000, seed, ..Default::default() };
        let rep = conjecture_experiment(&cfg).map_err(err)?;
        ok &= rep.passed();
        let excess: Vec<String> = rep
            .cells
            .iter()
            .filter(|c| c.name.ends_with("/distance"))
            .map(|c| {
                let bound = c.reference.unwrap_or(f64::NAN);
                format!("{:+.1}se", (c.mean - bound) / c.stderr)
            })
            .collect();
        details.push(format!("seed {seed}: {}", excess.join(" ")));
    }
    Ok((ok, format!("mean - bound per angle: {}", details.join("; "))))
}

fn run_cli(bin: &str, args: &[&str]) -> Result<(), String> {
    let status = Command::new(bin).args(args).output().map_err(err)?;
    match status.status.code() {
        Some(0) | Some(2) => Ok(()),
        _ => Err(format!(
            "`relq {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&status.stderr)
        )),
    }
}

fn ac11() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_relq");
    let dir = tempfile::tempdir().map_err(err)?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let inst = path("inst.txt");
    run_cli(bin, &["gen", "--n", "3", "--p", "4", "--m", "4", "--seed", "5", "--out", &inst])?;
    let sol = path("sol.txt");
    run_cli(bin, &["solve", &inst, "--convert", "--out", &sol])?;
    let cases: Vec<Vec<&str>> = vec![
        vec!["gen", "--n", "3", "--p", "4", "--m", "4", "--seed", "5", "--planted", "--json"],
        vec!["brute", &inst],
        vec!["brute", &inst, "--json"],
        vec!["solve", &inst],
        vec!["solve", &inst, "--json"],
        vec!["round", &sol, "--seed", "3", "--ell", "4"],
        vec!["round", &sol, "--seed", "3", "--json"],
        vec!["constants"],
        vec!["constants", "--json"],
        vec!["mc-signchange", "--s", "200", "--trials", "5000", "--seed", "2"],
        vec!["mc-signchange", "--s", "200", "--trials", "5000", "--seed", "2", "--json"],
        vec!["mc-correlation", "--theta", "1.0", "--theta", "2.0", "--trials", "10000", "--seed", "2", "--json"],
        vec!["conjecture", "--theta", "0.5", "--s", "200", "--trials", "3000", "--seed", "2"],
        vec!["conjecture", "--theta", "0.5", "--s", "200", "--trials", "3000", "--seed", "2", "--json"],
        vec!["e2e", &inst, "--trials", "200", "--ell", "2", "--seed", "2", "--json"],
        vec!["discretize", "--trials", "5000", "--seed", "2", "--json"],
    ];
    let mut mismatched = Vec::new();
    for (k, args) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = path(&format!("out-{k}-{rep}"));
            let walk = path(&format!("walk-{k}-{rep}.csv"));
            let mut full: Vec<&str> = args.clone();
            full.extend(["--out", out.as_str()]);
            if args[0] == "round" {
                full.extend(["--emit-walk", walk.as_str()]);
            }
            run_cli(bin, &full)?;
            let mut bytes = std::fs::read(Path::new(&out)).map_err(err)?;
            if args[0] == "round" {
                bytes.extend(std::fs::read(&walk).map_err(err)?);
            }
            outputs.push(bytes);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            mismatched.push(args.join(" "));
        }
    }
    Ok((
        mismatched.is_empty(),
        format!("{} invocations compared; mismatched: {:?}", cases.len(), mismatched),
    ))
}

fn main() {
    let strict = std::env::var("RELQ_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(&str, &str, fn() -> Outcome); 11] = [
        ("AC1", "constellation exactness", ac1),
        ("AC2", "barrier constants", ac2),
        ("AC3", "exactly one sign change by simulation", ac3),
        ("AC4", "projection gap", ac4),
        ("AC5", "objective plumbing", ac5),
        ("AC6", "solver sanity", ac6),
        ("AC7", "domain lifting", ac7),
        ("AC8", "hitting-time identity", ac8),
        ("AC9", "discretization margin", ac9),
        ("AC10", "correlated pair distance bound", ac10),
        ("AC11", "CLI determinism", ac11),
    ];
    let mut failed = 0;
    let mut errored = 0;
    for (id, title, f) in criteria {
        match std::panic::catch_unwind(f) {
            Ok(Ok((true, detail))) => println!("PASS {id} {title}: {detail}"),
            Ok(Ok((false, detail))) => {
                failed += 1;
                println!("FAIL {id} {title}: {detail}");
            }
            Ok(Err(e)) => {
                errored += 1;
                println!("FAIL {id} {title}: error: {e}");
            }
            Err(_) => {
                errored += 1;
                println!("FAIL {id} {title}: panicked");
            }
        }
    }
    println!("acceptance: {} passed, {} failed", 11 - failed - errored, failed + errored);
    if errored > 0 || (strict && failed > 0) {
        std::process::exit(1);
    }
}
