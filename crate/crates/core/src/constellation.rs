//! Constellations: the `p` unit vectors attached to one variable, whose
//! pairwise products follow `1 - 4 d(a, b) / p`.

use crate::instance::cyclic_gap;
use crate::linalg::{dot, norm};
use crate::sdp::{feasibility_report_p, SdpSolutionP};
use crate::{Error, Result};

/// Residual bound for solver-derived inputs.
pub const SOLVER_TOLERANCE: f64 = 1e-9;
/// Residual bound a (P) solution must meet before lifting.
pub const LIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    p: usize,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl Constellation {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let p = vectors.len();
        if p < 2 || p % 2 != 0 {
            return Err(Error::InvalidDomain(p));
        }
        let dim = vectors[0].len();
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(Self { p, dim, vectors })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k]
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.vectors
    }
}

/// The canonical constellation in dimension `p/2`: `v^k` has `-sqrt(2/p)` in
/// its first `k` coordinates and `+sqrt(2/p)` in the rest for `k <= p/2`,
/// and `v^k = -v^{k-p/2}` beyond.
pub fn canonical_constellation(p: usize) -> Result<Constellation> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::InvalidDomain(p));
    }
    let half = p / 2;
    let c = (2.0 / p as f64).sqrt();
    let mut vectors: Vec<Vec<f64>> = (0..=half)
        .map(|k| (0..half).map(|m| if m >= k { c } else { -c }).collect())
        .collect();
    for k in half + 1..p {
        let flipped = vectors[k - half].iter().map(|x| -x).collect();
        vectors.push(flipped);
    }
    Constellation::new(vectors)
}

/// `max_{a,b} |v^a . v^b - (1 - 4 d(a,b)/p)|`.
pub fn gram_residual(c: &Constellation) -> f64 {
    let p = c.p;
    let mut worst = 0.0f64;
    for a in 0..p {
        for b in a..p {
            let want = 1.0 - 4.0 * cyclic_gap(a, b, p) as f64 / p as f64;
            worst = worst.max((dot(&c.vectors[a], &c.vectors[b]) - want).abs());
        }
    }
    worst
}

/// `max_k ||v^{k+p/2} + v^k||_inf`.
pub fn antipodal_residual(c: &Constellation) -> f64 {
    let half = c.p / 2;
    (0..half)
        .flat_map(|k| {
            c.vectors[k]
                .iter()
                .zip(&c.vectors[k + half])
                .map(|(a, b)| (a + b).abs())
        })
        .fold(0.0, f64::max)
}

/// `delta_k = (v^k - v^{k-1}) / 2` for `k = 1..=p/2`.
pub fn difference_vectors(c: &Constellation) -> Result<Vec<Vec<f64>>> {
    let residual = gram_residual(c);
    if residual > SOLVER_TOLERANCE {
        return Err(Error::Infeasible {
            family: "constellation".into(),
            residual,
            tolerance: SOLVER_TOLERANCE,
        });
    }
    Ok((1..=c.p / 2)
        .map(|k| {
            c.vectors[k]
                .iter()
                .zip(&c.vectors[k - 1])
                .map(|(a, b)| 0.5 * (a - b))
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceAudit {
    /// `max_k | ||delta_k|| - sqrt(2/p) |`.
    pub norm: f64,
    /// `max_{j != k} |delta_j . delta_k|`.
    pub orthogonality: f64,
    /// `||sum_k delta_k + v^0||_inf`; the sum telescopes to `(v^{p/2} - v^0) / 2 = -v^0`.
    pub telescoping: f64,
    /// `max_k ||v^{k-1} + 2 delta_k - v^k||_inf`.
    pub reconstruction: f64,
}

impl DifferenceAudit {
    pub fn max(&self) -> f64 {
        self.norm
            .max(self.orthogonality)
            .max(self.telescoping)
            .max(self.reconstruction)
    }
}

pub fn difference_audit(c: &Constellation) -> Result<DifferenceAudit> {
    let deltas = difference_vectors(c)?;
    let target = (2.0 / c.p as f64).sqrt();
    let norm_res = deltas
        .iter()
        .map(|d| (norm(d) - target).abs())
        .fold(0.0, f64::max);
    let mut orth = 0.0f64;
    for a in 0..deltas.len() {
        for b in a + 1..deltas.len() {
            orth = orth.max(dot(&deltas[a], &deltas[b]).abs());
        }
    }
    let telescoping = (0..c.dim)
        .map(|m| (deltas.iter().map(|d| d[m]).sum::<f64>() + c.vectors[0][m]).abs())
        .fold(0.0, f64::max);
    let reconstruction = deltas
        .iter()
        .enumerate()
        .flat_map(|(idx, d)| {
            let k = idx + 1;
            (0..c.dim).map(move |m| (c.vectors[k - 1][m] + 2.0 * d[m] - c.vectors[k][m]).abs())
        })
        .fold(0.0, f64::max);
    Ok(DifferenceAudit {
        norm: norm_res,
        orthogonality: orth,
        telescoping,
        reconstruction,
    })
}

fn check_liftable(sol: &SdpSolutionP, ell: usize) -> Result<usize> {
    if ell == 0 {
        return Err(Error::InvalidArgument("lift factor must be positive".into()));
    }
    let s = sol
        .p
        .checked_mul(ell)
        .ok_or(Error::Overflow("lifted domain size"))?;
    let report = feasibility_report_p(sol);
    let residual = report.max_residual();
    if residual > LIFT_TOLERANCE {
        return Err(Error::Infeasible {
            family: "P".into(),
            residual,
            tolerance: LIFT_TOLERANCE,
        });
    }
    Ok(s)
}

/// Lifts a (P) solution on domain `p` to domain `s = ell * p` in ambient
/// dimension `dim * ell` (coordinate `(d, m)` stored at `d * ell + m`).
/// Each difference direction `delta_k` is split into `ell` orthogonal
/// sub-steps `delta_k (x) e_m / sqrt(ell)`, and the anchor becomes
/// `v^0 (x) 1 / sqrt(ell)`.
pub fn lift_solution(sol: &SdpSolutionP, ell: usize) -> Result<SdpSolutionP> {
    let s = check_liftable(sol, ell)?;
    let (p, n, dim) = (sol.p, sol.n, sol.dim);
    let half_p = p / 2;
    let big = dim * ell;
    let inv = 1.0 / (ell as f64).sqrt();
    let mut vectors = Vec::with_capacity(n * s);
    for i in 0..n {
        let base = sol.variable(i);
        let mut walk: Vec<f64> = (0..big).map(|idx| base[0][idx / ell] * inv).collect();
        let mut first_half = vec![walk.clone()];
        for k in 1..=half_p {
            for m in 0..ell {
                // v'^{K} = v'^{K-1} + 2 * sub-step, touching only slots (d, m)
                for d in 0..dim {
                    let delta = 0.5 * (base[k][d] - base[k - 1][d]);
                    walk[d * ell + m] += 2.0 * delta * inv;
                }
                first_half.push(walk.clone());
            }
        }
        first_half.truncate(s / 2);
        let mirrored: Vec<Vec<f64>> = first_half
            .iter()
            .map(|v| v.iter().map(|x| -x).collect())
            .collect();
        vectors.extend(first_half);
        vectors.extend(mirrored);
    }
    SdpSolutionP::new(s, n, big, vectors)
}

/// Lazy view of `lift_solution` for large `ell`; walks are evaluated through
/// the interpolation form `v'^{k ell + m} = v^k (x) Q_m + v^{k+1} (x) P_m`
/// without materialising the lifted vectors.
#[derive(Debug, Clone)]
pub struct LiftedSolution {
    base: SdpSolutionP,
    ell: usize,
}

impl LiftedSolution {
    pub fn new(sol: &SdpSolutionP, ell: usize) -> Result<Self> {
        check_liftable(sol, ell)?;
        Ok(Self { base: sol.clone(), ell })
    }

    pub fn base(&self) -> &SdpSolutionP {
        &self.base
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn s(&self) -> usize {
        self.base.p * self.ell
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.dim * self.ell
    }

    /// `values[K] = v'^K_i . r` for all `K`, in `O(s * dim)`.
    pub fn walk_values(&self, i: usize, r: &[f64]) -> Vec<f64> {
        let (p, dim, ell) = (self.base.p, self.base.dim, self.ell);
        let inv = 1.0 / (ell as f64).sqrt();
        let vecs = self.base.variable(i);
        // prefix[d][m] = sum_{m' < m} r[d ell + m'] / sqrt(ell)
        let prefix: Vec<Vec<f64>> = (0..dim)
            .map(|d| {
                let mut acc = 0.0;
                let mut out = Vec::with_capacity(ell + 1);
                out.push(0.0);
                for m in 0..ell {
                    acc += r[d * ell + m];
                    out.push(acc * inv);
                }
                out
            })
            .collect();
        let s = p * ell;
        let mut values = Vec::with_capacity(s);
        for k in 0..p {
            let lo = &vecs[k];
            let hi = &vecs[(k + 1) % p];
            for m in 0..ell {
                let mut acc = 0.0;
                for d in 0..dim {
                    let before = prefix[d][m];
                    let after = prefix[d][ell] - before;
                    acc += lo[d] * after + hi[d] * before;
                }
                values.push(acc);
            }
        }
        values
    }

    pub fn materialize(&self) -> Result<SdpSolutionP> {
        lift_solution(&self.base, self.ell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{scale_instance, Assignment, Equation, Instance};
    use crate::sdp::{convert_to_p, integral_embedding, objective_p};
    use proptest::prelude::*;

    #[test]
    fn table_for_eight() {
        let c = canonical_constellation(8).unwrap();
        // columns v^0..v^7 of the published table, row by row
        let rows = [
            [1, -1, -1, -1, -1, 1, 1, 1],
            [1, 1, -1, -1, -1, -1, 1, 1],
            [1, 1, 1, -1, -1, -1, -1, 1],
            [1, 1, 1, 1, -1, -1, -1, -1],
        ];
        for (m, row) in rows.iter().enumerate() {
            for (k, &sign) in row.iter().enumerate() {
                assert_eq!(c.vector(k)[m], 0.5 * sign as f64, "v^{k}[{m}]");
            }
        }
        assert_eq!(dot(c.vector(0), c.vector(1)), 0.5);
        assert_eq!(dot(c.vector(0), c.vector(4)), -1.0);
    }

    #[test]
    fn four_by_hand() {
        let c = canonical_constellation(4).unwrap();
        assert_eq!(c.dim(), 2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let want = [[r, r], [-r, r], [-r, -r], [r, -r]];
        for (k, w) in want.iter().enumerate() {
            for m in 0..2 {
                assert!((c.vector(k)[m] - w[m]).abs() < 1e-15);
            }
        }
        assert!(matches!(canonical_constellation(5), Err(Error::InvalidDomain(5))));
    }

    #[test]
    fn residuals() {
        for p in [2, 4, 8, 16, 64] {
            let c = canonical_constellation(p).unwrap();
            assert!(gram_residual(&c) <= 1e-12, "p={p}");
            assert_eq!(antipodal_residual(&c), 0.0);
        }
        for p in [4, 8, 16] {
            let mut vecs = canonical_constellation(p).unwrap().into_vectors();
            vecs[1] = vecs[1].iter().map(|x| -x).collect();
            let bad = Constellation::new(vecs).unwrap();
            assert!(gram_residual(&bad) >= 8.0 / p as f64 - 1e-12);
            assert!(difference_vectors(&bad).is_err());
        }
    }

    #[test]
    fn differences_for_eight() {
        let c = canonical_constellation(8).unwrap();
        let d = difference_vectors(&c).unwrap();
        assert_eq!(d.len(), 4);
        for v in &d {
            assert!((norm(v) - 0.5).abs() < 1e-12);
        }
        let audit = difference_audit(&c).unwrap();
        assert!(audit.max() <= 1e-12, "{audit:?}");
    }

    fn integral_p(p: usize, positions: Vec<usize>, eqs: Vec<Equation>) -> (Instance, SdpSolutionP) {
        let inst = Instance::new(p, positions.len(), eqs).unwrap();
        let sol = convert_to_p(&integral_embedding(&inst, &Assignment::new(positions)).unwrap()).unwrap();
        (inst, sol)
    }

    #[test]
    fn lift_identity_and_canonical() {
        let (_, sol) = integral_p(4, vec![0, 3], vec![]);
        let same = lift_solution(&sol, 1).unwrap();
        assert_eq!(same.gram(), sol.gram());

        let c = canonical_constellation(4).unwrap();
        let single = SdpSolutionP::from_constellation(c.vectors(), &[0]).unwrap();
        let lifted = lift_solution(&single, 2).unwrap();
        let c8 = Constellation::new(lifted.variable(0).to_vec()).unwrap();
        assert_eq!(c8.p(), 8);
        assert!(gram_residual(&c8) <= 1e-9);
    }

    #[test]
    fn lift_keeps_objective() {
        let (inst, sol) = integral_p(6, vec![1, 4], vec![Equation { i: 0, j: 1, d: 2 }]);
        let before = objective_p(&sol, &inst).unwrap();
        let lifted = lift_solution(&sol, 3).unwrap();
        let after = objective_p(&lifted, &scale_instance(&inst, 3).unwrap()).unwrap();
        assert!((before - after).abs() <= 1e-12);
        assert!((before - 2.0 / 3.0).abs() <= 1e-12);
    }

    /// Oracle for lifted Gram entries: linear interpolation of the base Gram.
    fn interpolated(sol: &SdpSolutionP, ell: usize, a: (usize, usize), b: (usize, usize)) -> f64 {
        let p = sol.p;
        let g = |i: usize, k: usize, j: usize, l: usize| dot(sol.v(i, k % p), sol.v(j, l % p));
        let (ka, ma) = (a.1 / ell, a.1 % ell);
        let (kb, mb) = (b.1 / ell, b.1 % ell);
        // v'^{k ell + m} = v^k (x) Q_m + v^{k+1} (x) P_m
        let ell_f = ell as f64;
        let qq = (ell - ma.max(mb)) as f64 / ell_f;
        let pq = (ma.saturating_sub(mb)) as f64 / ell_f; // P_ma . Q_mb
        let qp = (mb.saturating_sub(ma)) as f64 / ell_f; // Q_ma . P_mb
        let pp2 = ma.min(mb) as f64 / ell_f;
        g(a.0, ka, b.0, kb) * qq
            + g(a.0, ka + 1, b.0, kb) * pq
            + g(a.0, ka, b.0, kb + 1) * qp
            + g(a.0, ka + 1, b.0, kb + 1) * pp2
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn lifted_gram_is_interpolation(x in proptest::collection::vec(0usize..4, 3), ell in 1usize..=4) {
            let (_, sol) = integral_p(4, x, vec![]);
            let lifted = lift_solution(&sol, ell).unwrap();
            prop_assert!(feasibility_report_p(&lifted).max_residual() <= 1e-9);
            let s = lifted.p;
            for a in 0..3 * s {
                for b in 0..3 * s {
                    let want = interpolated(&sol, ell, (a / s, a % s), (b / s, b % s));
                    let got = dot(&lifted.vectors[a], &lifted.vectors[b]);
                    prop_assert!((want - got).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn lift_composes(ell1 in 1usize..=3, ell2 in 1usize..=3, x in 0usize..4) {
            let (_, sol) = integral_p(4, vec![0, x], vec![]);
            let twice = lift_solution(&lift_solution(&sol, ell1).unwrap(), ell2).unwrap();
            let once = lift_solution(&sol, ell1 * ell2).unwrap();
            let (g2, g1) = (twice.gram(), once.gram());
            prop_assert!(g2.iter().zip(&g1).all(|(a, b)| (a - b).abs() <= 1e-9));
        }

        #[test]
        fn lazy_walk_matches(ell in 1usize..=5, r in proptest::collection::vec(-3.0f64..3.0, 40)) {
            let (_, sol) = integral_p(4, vec![2, 1], vec![]);
            let view = LiftedSolution::new(&sol, ell).unwrap();
            let full = view.materialize().unwrap();
            let r = &r[..view.ambient_dim()];
            for i in 0..2 {
                let lazy = view.walk_values(i, r);
                for (k, v) in full.variable(i).iter().enumerate() {
                    prop_assert!((dot(v, r) - lazy[k]).abs() <= 1e-12);
                }
            }
        }
    }
}
