//! The two vector relaxations: the assignment form (P+) with vectors `u_ih`
//! and the constellation form (P) with vectors `v_i^k`, plus objective
//! evaluation, constraint audits, the u-to-v transform, and a text format.

mod solver;

use std::fmt::Write as _;

use serde::Serialize;

use crate::instance::{content_lines, cyclic_gap, parse_fields, Assignment, Instance};
use crate::linalg::dot;
use crate::{Error, Result};

pub use solver::{solve_p_plus, SolverConfig, MAX_PN};

/// Residual bound a (P+) solution must meet before conversion.
pub const CONVERT_TOLERANCE: f64 = 1e-5;

/// Vectors of a (P+) solution; `u(i, h)` is stored at `i * p + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolutionPPlus {
    pub p: usize,
    pub n: usize,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

/// Vectors of a (P) solution; `v(i, k)` is stored at `i * p + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolutionP {
    pub p: usize,
    pub n: usize,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

fn check_shape(p: usize, n: usize, dim: usize, vectors: &[Vec<f64>]) -> Result<()> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::InvalidDomain(p));
    }
    if vectors.len() != n * p {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: vectors.len(),
        });
    }
    if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    Ok(())
}

impl SdpSolutionPPlus {
    pub fn new(p: usize, n: usize, dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(p, n, dim, &vectors)?;
        Ok(Self { p, n, dim, vectors })
    }

    pub fn u(&self, i: usize, h: usize) -> &[f64] {
        &self.vectors[i * self.p + h]
    }

    /// Relabels `h -> h + a` for every variable.
    pub fn relabeled(&self, a: usize) -> Self {
        let p = self.p;
        let vectors = (0..self.n * p)
            .map(|idx| {
                let (i, h) = (idx / p, idx % p);
                self.vectors[i * p + (h + a) % p].clone()
            })
            .collect();
        Self { vectors, ..*self }
    }

    pub fn gram(&self) -> Vec<f64> {
        full_gram(&self.vectors)
    }
}

impl SdpSolutionP {
    pub fn new(p: usize, n: usize, dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(p, n, dim, &vectors)?;
        Ok(Self { p, n, dim, vectors })
    }

    pub fn v(&self, i: usize, k: usize) -> &[f64] {
        &self.vectors[i * self.p + k]
    }

    pub fn variable(&self, i: usize) -> &[Vec<f64>] {
        &self.vectors[i * self.p..(i + 1) * self.p]
    }

    pub fn relabeled(&self, a: usize) -> Self {
        let p = self.p;
        let vectors = (0..self.n * p)
            .map(|idx| {
                let (i, k) = (idx / p, idx % p);
                self.vectors[i * p + (k + a) % p].clone()
            })
            .collect();
        Self { vectors, ..*self }
    }

    pub fn gram(&self) -> Vec<f64> {
        full_gram(&self.vectors)
    }

    /// Every variable gets a copy of the same constellation, rotated by its position.
    pub fn from_constellation(vectors: &[Vec<f64>], positions: &[usize]) -> Result<Self> {
        let p = vectors.len();
        let dim = vectors.first().map_or(0, Vec::len);
        let n = positions.len();
        let all = positions
            .iter()
            .flat_map(|&x| (0..p).map(move |k| vectors[(k + p - x % p) % p].clone()))
            .collect();
        Self::new(p, n, dim, all)
    }
}

fn full_gram(vectors: &[Vec<f64>]) -> Vec<f64> {
    let m = vectors.len();
    let mut g = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let d = dot(&vectors[a], &vectors[b]);
            g[a * m + b] = d;
            g[b * m + a] = d;
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyResidual {
    pub family: &'static str,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub residuals: Vec<FamilyResidual>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    /// Objective after each outer iteration of the solver.
    pub history: Vec<f64>,
}

impl FeasibilityReport {
    fn audit(residuals: Vec<FamilyResidual>) -> Self {
        Self {
            residuals,
            objective: None,
            iterations: 0,
            inner_iterations: 0,
            converged: true,
            history: Vec::new(),
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.max).fold(0.0, f64::max)
    }

    pub fn residual(&self, family: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.family == family)
            .map(|r| r.max)
    }

    fn worst(&self) -> (&'static str, f64) {
        self.residuals
            .iter()
            .fold(("none", 0.0), |acc, r| if r.max > acc.1 { (r.family, r.max) } else { acc })
    }
}

/// Max deviation of `G[(i,h),(j,k)]` from its mean along the diagonal shift orbit.
fn shift_residual(g: &[f64], n: usize, p: usize) -> f64 {
    let m = n * p;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for delta in 0..p {
                let entry = |h: usize| g[(i * p + h) * m + j * p + (h + delta) % p];
                let mean = (0..p).map(entry).sum::<f64>() / p as f64;
                for h in 0..p {
                    worst = worst.max((entry(h) - mean).abs());
                }
            }
        }
    }
    worst
}

pub fn feasibility_report_p_plus(sol: &SdpSolutionPPlus) -> FeasibilityReport {
    let (n, p) = (sol.n, sol.p);
    let m = n * p;
    let g = sol.gram();
    let inv_p = 1.0 / p as f64;
    let (mut nonneg, mut orth, mut norm) = (0.0f64, 0.0f64, 0.0f64);
    for a in 0..m {
        for b in 0..m {
            let x = g[a * m + b];
            nonneg = nonneg.max(-x);
            if a == b {
                norm = norm.max((x - inv_p).abs());
            } else if a / p == b / p {
                orth = orth.max(x.abs());
            }
        }
    }
    let sums: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut s = vec![0.0; sol.dim];
            for h in 0..p {
                for (acc, x) in s.iter_mut().zip(sol.u(i, h)) {
                    *acc += x;
                }
            }
            s
        })
        .collect();
    let mut sum_vector = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = sums[i].iter().zip(&sums[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            sum_vector = sum_vector.max(d);
        }
    }
    FeasibilityReport::audit(vec![
        FamilyResidual { family: "nonnegativity", max: nonneg.max(0.0) },
        FamilyResidual { family: "orthogonality", max: orth },
        FamilyResidual { family: "shift_covariance", max: shift_residual(&g, n, p) },
        FamilyResidual { family: "norm", max: norm },
        FamilyResidual { family: "sum_vector", max: sum_vector },
    ])
}

pub fn feasibility_report_p(sol: &SdpSolutionP) -> FeasibilityReport {
    let (n, p) = (sol.n, sol.p);
    let m = n * p;
    let g = sol.gram();
    let (mut constellation, mut unit) = (0.0f64, 0.0f64);
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                let x = g[(i * p + a) * m + i * p + b];
                let want = 1.0 - 4.0 * cyclic_gap(a, b, p) as f64 / p as f64;
                constellation = constellation.max((x - want).abs());
                if a == b {
                    unit = unit.max((x - 1.0).abs());
                }
            }
        }
    }
    FeasibilityReport::audit(vec![
        FamilyResidual { family: "constellation", max: constellation },
        FamilyResidual { family: "shift_covariance", max: shift_residual(&g, n, p) },
        FamilyResidual { family: "unit_norm", max: unit },
    ])
}

fn check_instance(p: usize, n: usize, inst: &Instance) -> Result<()> {
    if inst.p() != p {
        return Err(Error::DimensionMismatch { expected: p, got: inst.p() });
    }
    if inst.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: inst.n() });
    }
    Ok(())
}

/// `sum_E sum_k (p - 2 d(k, d_ij)) u_i0 . u_jk`, comparable to `evaluate` without rescaling.
pub fn objective_p_plus(sol: &SdpSolutionPPlus, inst: &Instance) -> Result<f64> {
    check_instance(sol.p, sol.n, inst)?;
    let p = sol.p;
    Ok(inst
        .equations()
        .iter()
        .map(|eq| {
            (0..p)
                .map(|k| (p - 2 * cyclic_gap(k, eq.d, p)) as f64 * dot(sol.u(eq.i, 0), sol.u(eq.j, k)))
                .sum::<f64>()
        })
        .sum())
}

/// `sum_E (1 + v_i^0 . v_j^d) / 2`.
pub fn objective_p(sol: &SdpSolutionP, inst: &Instance) -> Result<f64> {
    check_instance(sol.p, sol.n, inst)?;
    Ok(inst
        .equations()
        .iter()
        .map(|eq| 0.5 * (1.0 + dot(sol.v(eq.i, 0), sol.v(eq.j, eq.d))))
        .sum())
}

/// `u_ih = e_{(x_i - h) mod p} / sqrt(p)`.
pub fn integral_embedding(inst: &Instance, asg: &Assignment) -> Result<SdpSolutionPPlus> {
    asg.check(inst)?;
    let (p, n) = (inst.p(), inst.n());
    let scale = 1.0 / (p as f64).sqrt();
    let vectors = (0..n * p)
        .map(|idx| {
            let (i, h) = (idx / p, idx % p);
            let mut u = vec![0.0; p];
            u[(asg.positions()[i] + p - h) % p] = scale;
            u
        })
        .collect();
    SdpSolutionPPlus::new(p, n, p, vectors)
}

/// `v_i^k = sum_{h=k}^{k+p/2-1} u_ih - sum_{h=k+p/2}^{k+p-1} u_ih`, indices mod p.
pub fn convert_to_p(sol: &SdpSolutionPPlus) -> Result<SdpSolutionP> {
    let report = feasibility_report_p_plus(sol);
    let (family, residual) = report.worst();
    if residual > CONVERT_TOLERANCE {
        return Err(Error::Infeasible {
            family: family.to_string(),
            residual,
            tolerance: CONVERT_TOLERANCE,
        });
    }
    let (p, n, dim) = (sol.p, sol.n, sol.dim);
    let half = p / 2;
    let vectors = (0..n * p)
        .map(|idx| {
            let (i, k) = (idx / p, idx % p);
            let mut v = vec![0.0; dim];
            for off in 0..p {
                let sign = if off < half { 1.0 } else { -1.0 };
                for (acc, x) in v.iter_mut().zip(sol.u(i, (k + off) % p)) {
                    *acc += sign * x;
                }
            }
            v
        })
        .collect();
    SdpSolutionP::new(p, n, dim, vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionFile {
    PPlus(SdpSolutionPPlus),
    P(SdpSolutionP),
}

impl SolutionFile {
    fn parts(&self) -> (usize, usize, usize, &'static str, &[Vec<f64>]) {
        match self {
            SolutionFile::PPlus(s) => (s.p, s.n, s.dim, "pplus", &s.vectors),
            SolutionFile::P(s) => (s.p, s.n, s.dim, "p", &s.vectors),
        }
    }

    /// `relqsol 1` header, `p n dim kind`, then one vector per line.
    pub fn to_text(&self) -> String {
        let (p, n, dim, kind, vectors) = self.parts();
        let mut out = String::new();
        let _ = writeln!(out, "relqsol 1");
        let _ = writeln!(out, "{p} {n} {dim} {kind}");
        for v in vectors {
            let line: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (line_no, header) = lines.next().ok_or_else(|| Error::parse(0, "empty input"))?;
        if header.split_whitespace().collect::<Vec<_>>() != ["relqsol", "1"] {
            return Err(Error::parse(line_no, "expected header `relqsol 1`"));
        }
        let (line_no, dims) = lines
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing `p n dim kind` line"))?;
        let fields: Vec<&str> = dims.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(line_no, "expected `p n dim kind`"));
        }
        let [p, n, dim] = parse_fields::<3>(line_no, &fields[..3].join(" "))?;
        let kind = fields[3];
        if kind != "pplus" && kind != "p" {
            return Err(Error::parse(line_no, format!("unknown kind `{kind}`")));
        }
        let count = n
            .checked_mul(p)
            .ok_or_else(|| Error::parse(line_no, "vector count overflows"))?;
        let mut vectors = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, body) = lines
                .next()
                .ok_or_else(|| Error::parse(line_no, format!("expected {count} vectors")))?;
            let v = body
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(ln, format!("`{t}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if v.len() != dim {
                return Err(Error::parse(ln, format!("expected {dim} entries, found {}", v.len())));
            }
            vectors.push(v);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(ln, "trailing content after vectors"));
        }
        Ok(match kind {
            "pplus" => SolutionFile::PPlus(SdpSolutionPPlus::new(p, n, dim, vectors)?),
            _ => SolutionFile::P(SdpSolutionP::new(p, n, dim, vectors)?),
        })
    }
}
