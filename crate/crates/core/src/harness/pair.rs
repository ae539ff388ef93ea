use crate::constellation::canonical_constellation;
use crate::rounding::{canonical_walk, WalkSource, WalkTrace};
use crate::sdp::{feasibility_report_p, SdpSolutionP};
use crate::{Error, Result};

/// Domain used to audit the pair construction with dense vectors.
pub const AUDIT_S: usize = 32;

/// Two canonical constellations at angle `theta`: variable 0 uses the first
/// `s/2` coordinates, variable 1 is `cos(theta)` times that copy plus
/// `sin(theta)` times a copy on the second `s/2` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedPair {
    s: usize,
    theta: f64,
    cos: f64,
    sin: f64,
}

impl CorrelatedPair {
    pub fn new(s: usize, theta: f64) -> Result<Self> {
        if s < 2 || s % 2 != 0 {
            return Err(Error::InvalidDomain(s));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!("angle {theta} outside [0, pi]")));
        }
        let (sin, cos) = theta.sin_cos();
        Ok(Self { s, theta, cos, sin })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Dense (P) solution with `n = 2` and `dim = s`.
    pub fn to_solution(&self) -> Result<SdpSolutionP> {
        let c = canonical_constellation(self.s)?;
        let half = self.s / 2;
        let mut vectors = Vec::with_capacity(2 * self.s);
        for v in c.vectors() {
            let mut w = v.clone();
            w.resize(self.s, 0.0);
            vectors.push(w);
        }
        for v in c.vectors() {
            let mut w: Vec<f64> = v.iter().map(|x| self.cos * x).collect();
            w.extend(v.iter().map(|x| self.sin * x));
            debug_assert_eq!(w.len(), 2 * half);
            vectors.push(w);
        }
        SdpSolutionP::new(self.s, 2, self.s, vectors)
    }

    /// Worst (P) residual of the same construction on [`AUDIT_S`].
    pub fn audit(&self) -> Result<f64> {
        let small = CorrelatedPair::new(AUDIT_S, self.theta)?;
        Ok(feasibility_report_p(&small.to_solution()?).max_residual())
    }
}

impl WalkSource for CorrelatedPair {
    fn n_vars(&self) -> usize {
        2
    }

    fn s(&self) -> usize {
        self.s
    }

    fn ambient_dim(&self) -> usize {
        self.s
    }

    fn walk(&self, i: usize, r: &[f64]) -> WalkTrace {
        let half = self.s / 2;
        let first = canonical_walk(self.s, &r[..half]).expect("even domain");
        if i == 0 {
            return first;
        }
        let second = canonical_walk(self.s, &r[half..]).expect("even domain");
        let values = first
            .values()
            .iter()
            .zip(second.values())
            .map(|(x, y)| self.cos * x + self.sin * y)
            .collect();
        WalkTrace::new(values).expect("nonempty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::rounding::{sample_gaussian, GaussianSampler};

    #[test]
    fn walks_match_dense_vectors() {
        let pair = CorrelatedPair::new(16, 0.7).unwrap();
        let sol = pair.to_solution().unwrap();
        let r = sample_gaussian(&mut GaussianSampler::new(1, 2), 16);
        for i in 0..2 {
            let walk = pair.walk(i, &r);
            for (k, v) in sol.variable(i).iter().enumerate() {
                assert!((walk.values()[k] - dot(v, &r)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn feasible_with_controlled_angle() {
        for theta in [0.0, 0.3, 1.5, std::f64::consts::PI] {
            let pair = CorrelatedPair::new(AUDIT_S, theta).unwrap();
            assert!(pair.audit().unwrap() < 1e-12);
            let sol = pair.to_solution().unwrap();
            for k in 0..AUDIT_S {
                assert!((dot(sol.v(0, k), sol.v(1, k)) - theta.cos()).abs() < 1e-12);
            }
        }
        assert!(CorrelatedPair::new(16, -0.1).is_err());
        assert!(CorrelatedPair::new(15, 0.1).is_err());
    }
}
