//! Systems of difference equations `x_j - x_i = d (mod p)` and their objective.
//!
//! Each equation contributes `1 - 2y/p`, where `y` is the circular slack
//! between the realised difference and `d`. Objective values are kept as
//! exact rationals with denominator `p` so that shift invariance and domain
//! scaling can be compared without tolerance.

use std::fmt::Write as _;
use std::str::FromStr;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Maximum number of shifted assignments the brute-force oracle will visit.
pub const BRUTE_FORCE_BUDGET: u128 = 100_000_000;

/// Exact objective value.
pub type Objective = Ratio<u64>;

/// Circular distance between two labels on the `p`-cycle.
pub fn circular_distance(a: usize, b: usize, p: usize) -> Result<usize> {
    if p == 0 {
        return Err(Error::InvalidDomain(p));
    }
    for v in [a, b] {
        if v >= p {
            return Err(Error::OutOfRange { value: v, bound: p });
        }
    }
    Ok(cyclic_gap(a, b, p))
}

/// Unchecked circular distance; callers guarantee `a, b < p`.
#[inline]
pub(crate) fn cyclic_gap(a: usize, b: usize, p: usize) -> usize {
    let fwd = (b + p - a) % p;
    fwd.min(p - fwd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Equation {
    pub i: usize,
    pub j: usize,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    p: usize,
    n: usize,
    equations: Vec<Equation>,
}

impl Instance {
    pub fn new(p: usize, n: usize, equations: Vec<Equation>) -> Result<Self> {
        if p < 2 || p % 2 != 0 {
            return Err(Error::InvalidDomain(p));
        }
        if n == 0 {
            return Err(Error::InvalidInstance("at least one variable required".into()));
        }
        for (idx, eq) in equations.iter().enumerate() {
            if eq.i >= n || eq.j >= n {
                return Err(Error::InvalidInstance(format!(
                    "equation {idx}: variable index out of range for n = {n}"
                )));
            }
            if eq.i == eq.j {
                return Err(Error::InvalidInstance(format!(
                    "equation {idx}: self-loop on variable {}",
                    eq.i
                )));
            }
            if eq.d >= p {
                return Err(Error::InvalidInstance(format!(
                    "equation {idx}: offset {} outside [0, {p})",
                    eq.d
                )));
            }
        }
        Ok(Self { p, n, equations })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn m(&self) -> usize {
        self.equations.len()
    }

    /// Serialises to the line-oriented `relq 1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "relq 1");
        let _ = writeln!(out, "{} {} {}", self.p, self.n, self.equations.len());
        for eq in &self.equations {
            let _ = writeln!(out, "{} {} {}", eq.i, eq.j, eq.d);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(0, "empty input"))?;
        if header.split_whitespace().collect::<Vec<_>>() != ["relq", "1"] {
            return Err(Error::parse(line_no, "expected header `relq 1`"));
        }
        let (line_no, dims) = lines
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing `p n m` line"))?;
        let [p, n, m] = parse_fields::<3>(line_no, dims)?;
        let mut equations = Vec::with_capacity(m);
        for _ in 0..m {
            let (line_no, eq) = lines
                .next()
                .ok_or_else(|| Error::parse(line_no, format!("expected {m} equations")))?;
            let [i, j, d] = parse_fields::<3>(line_no, eq)?;
            equations.push(Equation { i, j, d });
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::parse(line_no, "trailing content after equations"));
        }
        Instance::new(p, n, equations)
    }
}

impl FromStr for Instance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Instance::parse(s)
    }
}

/// Non-empty lines with `#` comments stripped, numbered from 1.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(idx, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((idx + 1, body))
    })
}

pub(crate) fn parse_fields<const N: usize>(line: usize, body: &str) -> Result<[usize; N]> {
    let parts: Vec<&str> = body.split_whitespace().collect();
    if parts.len() != N {
        return Err(Error::parse(
            line,
            format!("expected {N} fields, found {}", parts.len()),
        ));
    }
    let mut out = [0usize; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::parse(line, format!("`{part}` is not a non-negative integer")))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    positions: Vec<usize>,
}

impl Assignment {
    pub fn new(positions: Vec<usize>) -> Self {
        Self { positions }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Adds `c` to every position modulo `p`.
    pub fn shifted(&self, c: usize, p: usize) -> Self {
        Self {
            positions: self.positions.iter().map(|&x| (x + c) % p).collect(),
        }
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.positions.len() != inst.n() {
            return Err(Error::DimensionMismatch {
                expected: inst.n(),
                got: self.positions.len(),
            });
        }
        if let Some(&bad) = self.positions.iter().find(|&&x| x >= inst.p()) {
            return Err(Error::OutOfRange {
                value: bad,
                bound: inst.p(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationTerm {
    pub index: usize,
    /// Circular slack `y` in `[0, p/2]`.
    pub slack: usize,
    /// `1 - 2y/p`.
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalBreakdown {
    pub value: Objective,
    pub total: f64,
    pub per_equation: Vec<EquationTerm>,
}

pub fn evaluate(inst: &Instance, asg: &Assignment) -> Result<EvalBreakdown> {
    asg.check(inst)?;
    Ok(evaluate_unchecked(inst, asg.positions()))
}

fn evaluate_unchecked(inst: &Instance, x: &[usize]) -> EvalBreakdown {
    let p = inst.p;
    let mut numerator = 0u64;
    let per_equation = inst
        .equations
        .iter()
        .enumerate()
        .map(|(index, eq)| {
            let diff = (x[eq.j] + p - x[eq.i]) % p;
            let slack = cyclic_gap(diff, eq.d, p);
            numerator += (p - 2 * slack) as u64;
            EquationTerm {
                index,
                slack,
                term: 1.0 - 2.0 * slack as f64 / p as f64,
            }
        })
        .collect();
    let value = Objective::new(numerator, p as u64);
    EvalBreakdown {
        value,
        total: ratio_to_f64(value),
        per_equation,
    }
}

/// Integer part of the objective numerator over `p`; used by the hot brute-force loop.
fn objective_numerator(inst: &Instance, x: &[usize]) -> u64 {
    let p = inst.p;
    inst.equations
        .iter()
        .map(|eq| {
            let diff = (x[eq.j] + p - x[eq.i]) % p;
            (p - 2 * cyclic_gap(diff, eq.d, p)) as u64
        })
        .sum()
}

pub fn ratio_to_f64(r: Objective) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exhaustive maximiser with `x_0 = 0`.
pub fn brute_force_optimum(inst: &Instance) -> Result<(Assignment, Objective)> {
    let p = inst.p;
    let n = inst.n;
    let budget = (p as u128)
        .checked_pow((n - 1) as u32)
        .unwrap_or(u128::MAX);
    if budget > BRUTE_FORCE_BUDGET {
        return Err(Error::BudgetExceeded(budget));
    }
    let mut x = vec![0usize; n];
    let mut best = x.clone();
    let mut best_num = objective_numerator(inst, &x);
    // odometer over x_1..x_{n-1}
    'outer: loop {
        let mut k = 1;
        loop {
            if k == n {
                break 'outer;
            }
            x[k] += 1;
            if x[k] < p {
                break;
            }
            x[k] = 0;
            k += 1;
        }
        let num = objective_numerator(inst, &x);
        if num > best_num {
            best_num = num;
            best.copy_from_slice(&x);
        }
    }
    Ok((Assignment::new(best), Objective::new(best_num, p as u64)))
}

/// Multiplies the domain and every offset by `ell`.
pub fn scale_instance(inst: &Instance, ell: usize) -> Result<Instance> {
    if ell == 0 {
        return Err(Error::InvalidArgument("scale factor must be positive".into()));
    }
    let s = inst
        .p
        .checked_mul(ell)
        .ok_or(Error::Overflow("scaled domain size"))?;
    let equations = inst
        .equations
        .iter()
        .map(|eq| Equation {
            i: eq.i,
            j: eq.j,
            d: eq.d * ell,
        })
        .collect();
    Instance::new(s, inst.n, equations)
}

/// Random instance; when `planted`, offsets are read off a hidden assignment
/// which is returned alongside and satisfies every equation.
pub fn generate_instance(
    n: usize,
    p: usize,
    m: usize,
    seed: u64,
    planted: bool,
) -> Result<(Instance, Option<Assignment>)> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two variables".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one equation".into()));
    }
    if p < 2 || p % 2 != 0 {
        return Err(Error::InvalidDomain(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden: Option<Vec<usize>> =
        planted.then(|| (0..n).map(|_| rng.random_range(0..p)).collect());
    let mut equations = Vec::with_capacity(m);
    for _ in 0..m {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let d = match &hidden {
            Some(x) => (x[j] + p - x[i]) % p,
            None => rng.random_range(0..p),
        };
        equations.push(Equation { i, j, d });
    }
    let inst = Instance::new(p, n, equations)?;
    Ok((inst, hidden.map(Assignment::new)))
}
