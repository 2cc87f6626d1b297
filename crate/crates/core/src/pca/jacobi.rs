//! Cyclic Jacobi eigensolver for small dense symmetric matrices.
//!
//! Each rotation annihilates one off-diagonal pair `(p, q)`; sweeping over all
//! pairs repeatedly drives the off-diagonal mass to zero. Accumulating the
//! rotations gives the eigenvector matrix.

use super::PcaError;

/// Off-diagonal convergence threshold, relative to the Frobenius norm of the input.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;

/// Maximum number of full sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix.
///
/// `vectors` is row-major `n x n`; column `j` is the eigenvector for `values[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + j]).collect()
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// Diagonalizes the symmetric row-major `n x n` matrix `a`.
///
/// Eigenpairs come back in the solver's natural (unsorted) order; see
/// [`symmetric_eigen_sorted`] for the canonical ordering.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen, PcaError> {
    if a.len() != n * n {
        return Err(PcaError::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(PcaError::NonFinite);
    }

    let mut m = a.to_vec();
    // symmetrize so tiny asymmetries from accumulation do not bias the rotations
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = OFF_DIAGONAL_TOLERANCE * scale;

    let mut converged = off_diagonal_norm(&m, n) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(PcaError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(&m, n) <= threshold;
    }

    Ok(SymmetricEigen {
        n,
        values: (0..n).map(|i| m[i * n + i]).collect(),
        vectors: v,
    })
}

/// Like [`symmetric_eigen`], with eigenpairs sorted by descending eigenvalue
/// (ties keep solver order) and each eigenvector flipped so that its
/// largest-magnitude entry (the first, on ties) is non-negative.
pub fn symmetric_eigen_sorted(a: &[f64], n: usize) -> Result<SymmetricEigen, PcaError> {
    let raw = symmetric_eigen(a, n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw.values[j].total_cmp(&raw.values[i]));

    let mut vectors = vec![0.0; n * n];
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(raw.values[src]);
        let mut pivot = 0;
        for i in 1..n {
            if raw.vectors[i * n + src].abs() > raw.vectors[pivot * n + src].abs() {
                pivot = i;
            }
        }
        let sign = if raw.vectors[pivot * n + src] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[i * n + dst] = sign * raw.vectors[i * n + src];
        }
    }
    Ok(SymmetricEigen { n, values, vectors })
}
