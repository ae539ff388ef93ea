//! Small dense helpers: dot products and a cyclic Jacobi eigensolver for
//! symmetric matrices stored row-major.

pub const JACOBI_MAX_SWEEPS: usize = 60;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigen-decomposition `A = V diag(values) V^T`; column `k` of the row-major
/// `vectors` holds the eigenvector of `values[k]`. Eigenvalues are sorted in
/// descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.vectors[r * self.n + k]).collect()
    }

    /// `V diag(f(values)) V^T`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let lam: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for c in r..n {
                let mut acc = 0.0;
                for k in 0..n {
                    if lam[k] != 0.0 {
                        acc += self.vectors[r * n + k] * lam[k] * self.vectors[c * n + k];
                    }
                }
                out[r * n + c] = acc;
                out[c * n + r] = acc;
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[r * n + c] * a[r * n + c];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal mass falls below
/// `1e-14 * ||A||_F` or the sweep limit is hit.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> SymEigen {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    // symmetrise defensively
    for r in 0..n {
        for c in r + 1..n {
            let m = 0.5 * (a[r * n + c] + a[c * n + r]);
            a[r * n + c] = m;
            a[c * n + r] = m;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-14 * frob;
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS && off_diagonal_norm(&a, n) > target {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + dst] = v[r * n + src];
        }
    }
    SymEigen {
        n,
        values,
        vectors,
        sweeps,
    }
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn project_psd(matrix: &[f64], n: usize) -> Vec<f64> {
    jacobi_eigen(matrix, n).reassemble(|l| l.max(0.0))
}

/// Factor a PSD Gram matrix as rows of a `n x rank` matrix, discarding
/// eigenvalues at or below `floor`.
pub fn factor_gram(matrix: &[f64], n: usize, floor: f64) -> (Vec<Vec<f64>>, usize) {
    let eig = jacobi_eigen(matrix, n);
    let keep: Vec<usize> = (0..n).filter(|&k| eig.values[k] > floor).collect();
    let rows = (0..n)
        .map(|r| {
            keep.iter()
                .map(|&k| eig.vectors[r * n + k] * eig.values[k].sqrt())
                .collect()
        })
        .collect();
    (rows, keep.len())
}

pub fn gram_of(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut g = vec![0.0; n * n];
    for r in 0..n {
        for c in r..n {
            let d = dot(&rows[r], &rows[c]);
            g[r * n + c] = d;
            g[c * n + r] = d;
        }
    }
    g
}
