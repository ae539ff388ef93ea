use std::process::Command;

use relq::constellation::LiftedSolution;
use relq::harness::{end_to_end_ratio, E2eConfig};
use relq::instance::{brute_force_optimum, evaluate, generate_instance, ratio_to_f64, Assignment, Equation, Instance};
use relq::rounding::{round_with, CrossingStatus, GaussianSampler};
use relq::sdp::{convert_to_p, feasibility_report_p, objective_p, solve_p_plus, SolutionFile, SolverConfig};

#[test]
fn planted_instance_end_to_end() {
    let (inst, hidden) = generate_instance(4, 8, 6, 12, true).unwrap();
    let hidden = hidden.unwrap();
    assert_eq!(ratio_to_f64(evaluate(&inst, &hidden).unwrap().value), 6.0);
    let (_, opt) = brute_force_optimum(&inst).unwrap();
    assert_eq!(ratio_to_f64(opt), 6.0);

    let (plus, report) = solve_p_plus(&inst, &SolverConfig::default()).unwrap();
    assert!(report.max_residual() <= 1e-6);
    let sol = convert_to_p(&plus).unwrap();
    assert!(objective_p(&sol, &inst).unwrap() >= 6.0 - 1e-3);

    let text = SolutionFile::P(sol.clone()).to_text();
    let SolutionFile::P(back) = SolutionFile::parse(&text).unwrap() else {
        panic!("kind changed");
    };
    assert_eq!(back, sol);

    // an integral optimum rounds back to a satisfying assignment
    let lifted = LiftedSolution::new(&back, 3).unwrap();
    let scaled = relq::instance::scale_instance(&inst, 3).unwrap();
    let mut exact = 0;
    for t in 0..200 {
        let out = round_with(&lifted, 1.0, &GaussianSampler::for_trial(1, t)).unwrap();
        assert!(out.positions.iter().all(|&x| x < 24));
        let all_one = out.status.iter().all(|s| *s == CrossingStatus::OneCrossing);
        let value = evaluate(&scaled, &Assignment::new(out.positions)).unwrap().total;
        if all_one && (value - 6.0).abs() < 1e-12 {
            exact += 1;
        }
    }
    assert!(exact > 150, "{exact}");
    assert!(feasibility_report_p(&sol).max_residual() < 1e-6);
}

#[test]
fn frustrated_triangle_sandwich() {
    let eqs = [(0, 1), (1, 2), (2, 0)].map(|(i, j)| Equation { i, j, d: 2 });
    let inst = Instance::new(4, 3, eqs.to_vec()).unwrap();
    let cfg = E2eConfig { ell: 500, trials: 1000, seed: 3, ..Default::default() };
    let rep = end_to_end_ratio(&inst, &cfg).unwrap();
    assert!(rep.passed(), "{:?}", rep.checks);
    let opt = rep.cell("opt").unwrap().mean;
    let sdp = rep.cell("sdp").unwrap().mean;
    assert!(opt < sdp);
    assert_eq!(rep.parameters["ell"], 500);
}

fn relq(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_relq")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let out = relq(&["constants"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("name,published,computed,abs_delta\n"));
    assert_eq!(relq(&["brute", "/nonexistent/instance.txt"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "relq 1\n4 2 1\n0 1\n").unwrap();
    let out = relq(&["brute", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    // a tiny walk cannot meet the sign-change checks
    let out = relq(&["mc-signchange", "--s", "100", "--trials", "2000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cli_gen_solve_round() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.txt");
    let sol = dir.path().join("s.txt");
    let walk = dir.path().join("w.csv");
    let ok = |args: &[&str]| assert_eq!(relq(args).status.code(), Some(0), "{args:?}");
    ok(&["gen", "--n", "3", "--p", "6", "--m", "5", "--seed", "1", "--out", inst.to_str().unwrap()]);
    ok(&["solve", inst.to_str().unwrap(), "--out", sol.to_str().unwrap()]);
    let out = relq(&["round", sol.to_str().unwrap(), "--ell", "2", "--emit-walk", walk.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = String::from_utf8(out.stdout).unwrap();
    assert_eq!(rows.lines().count(), 4);
    let walk = std::fs::read_to_string(walk).unwrap();
    assert_eq!(walk.lines().count(), 1 + 3 * 12);
}
