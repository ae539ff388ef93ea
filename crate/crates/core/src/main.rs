use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use relq::constellation::LiftedSolution;
use relq::harness::{
    conjecture_experiment, discretization_report, end_to_end_ratio, mc_correlation_gap,
    mc_sign_change, reproduce_constants, E2eConfig, ExperimentConfig, Report, SURROGATE_C,
};
use relq::instance::{brute_force_optimum, generate_instance, ratio_to_f64, Instance};
use relq::rounding::{
    round_with, sample_gaussian, write_walk_csv, GaussianSampler, WalkSource, ROUNDING_TOLERANCE,
};
use relq::sdp::{
    convert_to_p, feasibility_report_p, solve_p_plus, SolutionFile, SolverConfig,
};

#[derive(Parser)]
#[command(name = "relq", version, about = "Relaxed linear equations mod p: relaxations, rounding and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        m: usize,
        /// Derive offsets from a hidden assignment so every equation holds.
        #[arg(long)]
        planted: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Exact optimum by enumeration.
    Brute {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the assignment relaxation.
    Solve {
        instance: PathBuf,
        /// Emit the constellation form instead of the assignment form.
        #[arg(long)]
        convert: bool,
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Round a solution file with one Gaussian draw.
    Round {
        solution: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        /// Also write every walk as `variable,k,value,label` rows.
        #[arg(long)]
        emit_walk: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Barrier-crossing constants by quadrature.
    Constants {
        #[command(flatten)]
        common: Common,
    },
    /// Sign-change frequencies of the canonical walk.
    McSignchange {
        #[arg(long, default_value_t = 2000)]
        s: usize,
        #[arg(long, default_value_t = 200_000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Expected projection gap of two unit vectors.
    McCorrelation {
        /// Angles in radians; repeat for several.
        #[arg(long = "theta", required = true)]
        thetas: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Position distance of correlated constellation pairs.
    Conjecture {
        #[arg(long = "theta")]
        thetas: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        s: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Solve, round and compare with the optimum.
    E2e {
        instance: PathBuf,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Grid overshoot margin after a continuous barrier hit.
    Discretize {
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        #[arg(long, default_value_t = SURROGATE_C)]
        c: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn emit_report(common: &Common, rep: &Report) -> Result<bool> {
    let text = if common.json { rep.to_json()? } else { rep.to_csv()? };
    emit(common, &text)?;
    for c in rep.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} ({})", c.name, c.detail);
    }
    Ok(rep.passed())
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn merge_reports(name: &str, seed: u64, parts: Vec<Report>) -> Report {
    let mut rep = Report::new(name, seed);
    for part in parts {
        let prefix = part
            .parameters
            .get("theta")
            .map(|t| format!("theta={}/", t))
            .unwrap_or_default();
        for (k, v) in part.parameters {
            rep.parameters.entry(k.clone()).or_insert(v);
        }
        for mut c in part.cells {
            c.name = format!("{prefix}{}", c.name);
            rep.cells.push(c);
        }
        for mut c in part.checks {
            c.name = format!("{prefix}{}", c.name);
            rep.checks.push(c);
        }
    }
    rep.parameters.remove("theta");
    rep
}

#[derive(Serialize)]
struct RoundRow {
    variable: usize,
    position: usize,
    status: String,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { n, p, m, planted, common } => {
            let (inst, hidden) = generate_instance(n, p, m, common.seed, planted)?;
            if common.json {
                #[derive(Serialize)]
                struct Gen {
                    instance: String,
                    hidden: Option<Vec<usize>>,
                }
                let hidden = hidden.map(|a| a.positions().to_vec());
                emit(&common, &json(&Gen { instance: inst.to_text(), hidden })?)?;
            } else {
                emit(&common, &inst.to_text())?;
            }
            Ok(true)
        }
        Command::Brute { instance, common } => {
            let inst = read_instance(&instance)?;
            let (asg, value) = brute_force_optimum(&inst)?;
            if common.json {
                #[derive(Serialize)]
                struct Brute {
                    optimum: String,
                    value: f64,
                    assignment: Vec<usize>,
                }
                emit(
                    &common,
                    &json(&Brute {
                        optimum: value.to_string(),
                        value: ratio_to_f64(value),
                        assignment: asg.positions().to_vec(),
                    })?,
                )?;
            } else {
                let mut text = String::from("variable,position\n");
                for (i, x) in asg.positions().iter().enumerate() {
                    text.push_str(&format!("{i},{x}\n"));
                }
                emit(&common, &text)?;
                eprintln!("optimum {value} ({:.10})", ratio_to_f64(value));
            }
            Ok(true)
        }
        Command::Solve { instance, convert, max_iterations, common } => {
            let inst = read_instance(&instance)?;
            let cfg = SolverConfig { max_iterations, seed: common.seed, ..Default::default() };
            let (sol, report) = solve_p_plus(&inst, &cfg)?;
            let file = if convert {
                SolutionFile::P(convert_to_p(&sol)?)
            } else {
                SolutionFile::PPlus(sol)
            };
            if common.json {
                emit(&common, &json(&report)?)?;
            } else {
                emit(&common, &file.to_text())?;
                eprintln!(
                    "objective {:.10}, max residual {:.2e}, {} iterations",
                    report.objective.unwrap_or(f64::NAN),
                    report.max_residual(),
                    report.iterations
                );
            }
            Ok(report.converged)
        }
        Command::Round { solution, alpha, ell, emit_walk, common } => {
            let text = fs::read_to_string(&solution)
                .with_context(|| format!("reading {}", solution.display()))?;
            let sol = match SolutionFile::parse(&text)? {
                SolutionFile::P(s) => s,
                SolutionFile::PPlus(s) => convert_to_p(&s)?,
            };
            let residual = feasibility_report_p(&sol).max_residual();
            anyhow::ensure!(
                residual <= ROUNDING_TOLERANCE,
                "solution residual {residual:e} exceeds {ROUNDING_TOLERANCE:e}"
            );
            let lifted = LiftedSolution::new(&sol, ell)?;
            let sampler = GaussianSampler::for_trial(common.seed, 0);
            let out = round_with(&lifted, alpha, &sampler)?;
            if let Some(path) = emit_walk {
                let r = sample_gaussian(&mut sampler.clone(), lifted.ambient_dim());
                let traces: Vec<_> = (0..lifted.n_vars()).map(|i| lifted.walk(i, &r)).collect();
                let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_walk_csv(std::io::BufWriter::new(file), &traces, alpha)?;
            }
            let rows: Vec<RoundRow> = out
                .positions
                .iter()
                .zip(&out.status)
                .enumerate()
                .map(|(variable, (&position, status))| RoundRow {
                    variable,
                    position,
                    status: format!("{status:?}"),
                })
                .collect();
            if common.json {
                emit(&common, &json(&rows)?)?;
            } else {
                let mut w = csv::Writer::from_writer(Vec::new());
                for row in &rows {
                    w.serialize(row)?;
                }
                emit(&common, &String::from_utf8(w.into_inner()?)?)?;
            }
            Ok(true)
        }
        Command::Constants { common } => {
            let table = reproduce_constants()?;
            let rep = table.to_report();
            if common.json {
                emit_report(&common, &rep)
            } else {
                emit(&common, &table.to_csv())?;
                Ok(rep.passed())
            }
        }
        Command::McSignchange { s, trials, common } => {
            emit_report(&common, &mc_sign_change(s, trials, common.seed)?)
        }
        Command::McCorrelation { thetas, trials, common } => {
            let parts = thetas
                .iter()
                .map(|&t| mc_correlation_gap(t, trials, common.seed))
                .collect::<relq::Result<Vec<_>>>()?;
            let mut rep = merge_reports("mc-correlation", common.seed, parts);
            rep.param("thetas", &thetas);
            emit_report(&common, &rep)
        }
        Command::Conjecture { thetas, s, trials, alpha, common } => {
            let mut cfg = ExperimentConfig { s, trials, seed: common.seed, alpha, ..Default::default() };
            if !thetas.is_empty() {
                cfg.thetas = thetas;
            }
            emit_report(&common, &conjecture_experiment(&cfg)?)
        }
        Command::E2e { instance, ell, trials, alpha, common } => {
            let inst = read_instance(&instance)?;
            let cfg = E2eConfig { ell, trials, seed: common.seed, alpha, ..Default::default() };
            emit_report(&common, &end_to_end_ratio(&inst, &cfg)?)
        }
        Command::Discretize { eta, c, trials, common } => {
            emit_report(&common, &discretization_report(eta, c, trials, common.seed)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
