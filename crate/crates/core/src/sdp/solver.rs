//! Proximal projected-gradient ascent for (P+).
//!
//! A feasible Gram matrix is block-circulant, so it is stored through its
//! first block rows `g_ij[delta] = u_i0 . u_j,delta`. Each outer step moves
//! along the objective and projects back onto the feasible set; the
//! projection itself is an ADMM split between the affine/simplex part and the
//! PSD cone, the latter diagonalised mode by mode after a discrete Fourier
//! transform over `delta`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{feasibility_report_p_plus, objective_p_plus, FeasibilityReport, SdpSolutionPPlus};
use crate::instance::{cyclic_gap, Instance};
use crate::linalg::{factor_gram, jacobi_eigen};
use crate::{Error, Result};

/// Largest `p * n` the dense solver accepts.
pub const MAX_PN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Outer proximal steps.
    pub max_iterations: usize,
    pub inner_max_iterations: usize,
    /// Initial step `tau_0`; the step grows geometrically by `step_growth`.
    pub step_size: f64,
    pub step_growth: f64,
    pub max_step: f64,
    /// Inner penalty is `step * rho_scale * max|C|`.
    pub rho_scale: f64,
    /// Eigenvalues at or below this are dropped when factoring.
    pub psd_tolerance: f64,
    /// Inner primal/dual residual target.
    pub constraint_tolerance: f64,
    /// Outer stop once successive objectives differ by less than this.
    pub objective_tolerance: f64,
    /// 0 starts from the uniform point; other seeds randomise the start.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            inner_max_iterations: 20_000,
            step_size: 0.5,
            step_growth: 1.5,
            max_step: 1e6,
            rho_scale: 2.0,
            psd_tolerance: 1e-12,
            constraint_tolerance: 1e-12,
            objective_tolerance: 1e-11,
            seed: 0,
        }
    }
}

/// Shift-covariant first block rows, indexed `(i * n + j) * p + delta`.
#[derive(Clone)]
struct Blocks {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl Blocks {
    fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, data: vec![0.0; n * n * p] }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        (i * self.n + j) * self.p
    }

    fn inner(&self, other: &Blocks) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    fn max_abs_diff(&self, other: &Blocks) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn combine(&self, a: f64, other: &Blocks, b: f64) -> Blocks {
        Blocks {
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
            ..*self
        }
    }
}

/// Euclidean projection onto `{x >= 0, sum x = z}`.
fn project_simplex(v: &mut [f64], z: f64) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (idx, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - z) / (idx + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Nearest point with fixed diagonal blocks, reflected symmetry and
/// off-diagonal rows on the scaled simplex.
fn project_affine(g: &Blocks) -> Blocks {
    let (n, p) = (g.n, g.p);
    let z = 1.0 / p as f64;
    let mut out = Blocks::zeros(n, p);
    let mut buf = vec![0.0; p];
    for i in 0..n {
        let ii = out.at(i, i);
        out.data[ii] = z;
        for j in i + 1..n {
            let (ij, ji) = (g.at(i, j), g.at(j, i));
            for d in 0..p {
                buf[d] = 0.5 * (g.data[ij + d] + g.data[ji + (p - d) % p]);
            }
            project_simplex(&mut buf, z);
            for d in 0..p {
                out.data[ij + d] = buf[d];
                out.data[ji + (p - d) % p] = buf[d];
            }
        }
    }
    out
}

struct Fourier {
    p: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Fourier {
    fn new(p: usize) -> Self {
        let angle = |t: usize| 2.0 * PI * t as f64 / p as f64;
        Self {
            p,
            cos: (0..p).map(|t| angle(t).cos()).collect(),
            sin: (0..p).map(|t| angle(t).sin()).collect(),
        }
    }

    /// Projects onto the PSD cone: each Fourier mode `Lambda(w)` is Hermitian
    /// and is clipped through its real `2n x 2n` embedding.
    fn project_psd(&self, g: &Blocks) -> Blocks {
        let (n, p) = (g.n, self.p);
        let half = p / 2;
        let m = 2 * n;
        let mut out = Blocks::zeros(n, p);
        let mut emb = vec![0.0; m * m];
        for w in 0..=half {
            for i in 0..n {
                for j in 0..n {
                    let base = g.at(i, j);
                    let (mut a, mut b) = (0.0, 0.0);
                    for d in 0..p {
                        let t = (w * d) % p;
                        a += g.data[base + d] * self.cos[t];
                        b += g.data[base + d] * self.sin[t];
                    }
                    emb[i * m + j] = a;
                    emb[(i + n) * m + j + n] = a;
                    emb[(i + n) * m + j] = b;
                    emb[i * m + j + n] = -b;
                }
            }
            let clipped = jacobi_eigen(&emb, m).reassemble(|l| l.max(0.0));
            let weight = if w == 0 || w == half { 1.0 } else { 2.0 } / p as f64;
            for i in 0..n {
                for j in 0..n {
                    let a = 0.5 * (clipped[i * m + j] + clipped[(i + n) * m + j + n]);
                    let b = 0.5 * (clipped[(i + n) * m + j] - clipped[i * m + j + n]);
                    let base = out.at(i, j);
                    for d in 0..p {
                        let t = (w * d) % p;
                        out.data[base + d] += weight * (a * self.cos[t] + b * self.sin[t]);
                    }
                }
            }
        }
        out
    }
}

fn objective_blocks(inst: &Instance) -> Blocks {
    let (n, p) = (inst.n(), inst.p());
    let mut c = Blocks::zeros(n, p);
    for eq in inst.equations() {
        let ij = c.at(eq.i, eq.j);
        let ji = c.at(eq.j, eq.i);
        for k in 0..p {
            let w = 0.5 * (p - 2 * cyclic_gap(k, eq.d, p)) as f64;
            c.data[ij + k] += w;
            c.data[ji + (p - k) % p] += w;
        }
    }
    c
}

fn start_point(n: usize, p: usize, seed: u64) -> Blocks {
    let mut g = Blocks::zeros(n, p);
    let mut rng = (seed != 0).then(|| ChaCha8Rng::seed_from_u64(seed));
    for i in 0..n {
        for j in 0..n {
            let base = g.at(i, j);
            for d in 0..p {
                g.data[base + d] = match rng.as_mut() {
                    Some(r) => r.random::<f64>(),
                    None => 1.0,
                };
            }
        }
    }
    let fourier = Fourier::new(p);
    fourier.project_psd(&project_affine(&g))
}

struct AdmmState {
    z: Blocks,
    u: Blocks,
    iterations: usize,
}

/// Approximate projection of `y` onto the feasible set, warm-started from `state`.
fn project_feasible(
    y: &Blocks,
    rho: f64,
    fourier: &Fourier,
    state: &mut AdmmState,
    cfg: &SolverConfig,
) {
    for _ in 0..cfg.inner_max_iterations {
        state.iterations += 1;
        let mut target = y.clone();
        for ((t, z), u) in target.data.iter_mut().zip(&state.z.data).zip(&state.u.data) {
            *t = (*t + rho * (z - u)) / (1.0 + rho);
        }
        let x = project_affine(&target);
        let z_next = fourier.project_psd(&x.combine(1.0, &state.u, 1.0));
        let primal = x.max_abs_diff(&z_next);
        let dual = z_next.max_abs_diff(&state.z);
        for ((u, a), b) in state.u.data.iter_mut().zip(&x.data).zip(&z_next.data) {
            *u += a - b;
        }
        state.z = z_next;
        if primal < cfg.constraint_tolerance && dual < cfg.constraint_tolerance {
            break;
        }
    }
}

fn assemble(g: &Blocks) -> Vec<f64> {
    let (n, p) = (g.n, g.p);
    let m = n * p;
    let mut full = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let base = g.at(i, j);
            for h in 0..p {
                for k in 0..p {
                    full[(i * p + h) * m + j * p + k] = g.data[base + (k + p - h) % p];
                }
            }
        }
    }
    full
}

/// Solves (P+) for `inst`. Non-convergence is reported, not raised.
pub fn solve_p_plus(
    inst: &Instance,
    cfg: &SolverConfig,
) -> Result<(SdpSolutionPPlus, FeasibilityReport)> {
    let (n, p) = (inst.n(), inst.p());
    if n * p > MAX_PN {
        return Err(Error::InvalidArgument(format!(
            "p * n = {} exceeds the dense solver limit {MAX_PN}",
            n * p
        )));
    }
    if !(cfg.step_size > 0.0 && cfg.step_growth >= 1.0 && cfg.rho_scale > 0.0) {
        return Err(Error::InvalidArgument("solver step parameters must be positive".into()));
    }
    let c = objective_blocks(inst);
    let c_scale = c.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let fourier = Fourier::new(p);

    let mut x = start_point(n, p, cfg.seed);
    let mut state = AdmmState {
        z: x.clone(),
        u: Blocks::zeros(n, p),
        iterations: 0,
    };
    let mut tau = cfg.step_size;
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut outer = 0;
    while outer < cfg.max_iterations {
        outer += 1;
        let y = x.combine(1.0, &c, tau);
        let rho = tau * cfg.rho_scale * c_scale;
        project_feasible(&y, rho, &fourier, &mut state, cfg);
        x = state.z.clone();
        let value = c.inner(&x);
        let stalled = history
            .last()
            .is_some_and(|&prev| (value - prev).abs() < cfg.objective_tolerance);
        history.push(value);
        if stalled && outer > 4 {
            converged = true;
            break;
        }
        if tau < cfg.max_step {
            let grown = (tau * cfg.step_growth).min(cfg.max_step);
            let ratio = grown / tau;
            for u in state.u.data.iter_mut() {
                *u /= ratio;
            }
            tau = grown;
        }
    }

    let (rows, rank) = factor_gram(&assemble(&x), n * p, cfg.psd_tolerance);
    let sol = SdpSolutionPPlus::new(p, n, rank, rows)?;
    let mut report = feasibility_report_p_plus(&sol);
    report.objective = Some(objective_p_plus(&sol, inst)?);
    report.iterations = outer;
    report.inner_iterations = state.iterations;
    report.converged = converged;
    report.history = history;
    Ok((sol, report))
}
