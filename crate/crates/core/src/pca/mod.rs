//! Principal component analysis with a self-contained symmetric eigensolver.
//!
//! A [`PrincipalBasis`] is fitted once from a [`SampleMatrix`] of demonstration
//! states. Truncating it to its `k` leading eigenvectors gives a
//! [`TruncatedBasis`], which maps raw `p`-dimensional observations onto `k`
//! manifold coordinates and back.

mod io;
pub mod jacobi;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

pub use io::{write_loadings_csv, BasisDocument};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcaError {
    #[error("need at least 2 samples to fit, got {0}")]
    TooFewSamples(usize),
    #[error("samples must have at least one feature")]
    NoFeatures,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("retained dimension {k} out of range 1..={p}")]
    DimensionOutOfRange { k: usize, p: usize },
    #[error("eigenvalue spectrum is all zero (degenerate data)")]
    DegenerateSpectrum,
    #[error("malformed basis document: {0}")]
    Malformed(String),
}

/// Dense row-major `rows x cols` matrix of finite samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, PcaError> {
        if data.len() != rows * cols {
            return Err(PcaError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(PcaError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, PcaError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(PcaError::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics; a zero-column matrix has empty data anyway
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Coordinates of one state on the `k`-dimensional manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedState(pub SmallVec<[f64; 9]>);

impl ProjectedState {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A fitted PCA transform.
///
/// `w` is row-major `p x p`; its columns are unit eigenvectors of the
/// preprocessed covariance, sorted by descending eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalBasis {
    pub p: usize,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub standardized: bool,
    pub w: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

impl PrincipalBasis {
    /// Entry of `W` at (feature `i`, component `j`).
    pub fn loading(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.p + j]
    }

    pub fn component(&self, j: usize) -> Vec<f64> {
        (0..self.p).map(|i| self.loading(i, j)).collect()
    }

    /// Largest absolute entry of `WᵀW − I`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.p;
        let mut worst: f64 = 0.0;
        for a in 0..p {
            for b in 0..p {
                let dot: f64 = (0..p).map(|i| self.loading(i, a) * self.loading(i, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn truncate(self: &Arc<Self>, k: usize) -> Result<TruncatedBasis, PcaError> {
        TruncatedBasis::new(Arc::clone(self), k)
    }
}

/// Applies the fitted centering and optional scaling to one sample.
fn preprocess_into(mean: &[f64], scale: &[f64], x: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = (x[i] - mean[i]) / scale[i];
    }
}

/// Fits a PCA basis to `samples`.
///
/// Features are always mean-centered; with `standardize` they are also divided
/// by their sample standard deviation (zero-variance features keep scale 1).
/// The covariance uses the `1/(n-1)` normalization.
pub fn fit_pca(samples: &SampleMatrix, standardize: bool) -> Result<PrincipalBasis, PcaError> {
    let (n, p) = (samples.rows(), samples.cols());
    if n < 2 {
        return Err(PcaError::TooFewSamples(n));
    }
    if p == 0 {
        return Err(PcaError::NoFeatures);
    }
    if samples.data().iter().any(|v| !v.is_finite()) {
        return Err(PcaError::NonFinite);
    }

    let mut mean = vec![0.0; p];
    for row in samples.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let denom = (n - 1) as f64;
    let mut scale = vec![1.0; p];
    if standardize {
        for (j, s) in scale.iter_mut().enumerate() {
            let var = samples
                .iter_rows()
                .map(|r| (r[j] - mean[j]).powi(2))
                .sum::<f64>()
                / denom;
            let sd = var.sqrt();
            if sd > 1e-12 * mean[j].abs().max(1.0) {
                *s = sd;
            }
        }
    }

    let mut cov = vec![0.0; p * p];
    let mut z = vec![0.0; p];
    for row in samples.iter_rows() {
        preprocess_into(&mean, &scale, row, &mut z);
        for a in 0..p {
            for b in a..p {
                cov[a * p + b] += z[a] * z[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[a * p + b] / denom;
            cov[a * p + b] = v;
            cov[b * p + a] = v;
        }
    }

    let mut eig = jacobi::symmetric_eigen_sorted(&cov, p)?;
    // a covariance is positive semi-definite; negatives are round-off
    for v in &mut eig.values {
        *v = v.max(0.0);
    }
    Ok(PrincipalBasis {
        p,
        mean,
        scale,
        standardized: standardize,
        w: eig.vectors,
        eigenvalues: eig.values,
    })
}

/// Sum of the first `k` eigenvalues over the sum of all of them.
pub fn explained_variance_ratio(basis: &PrincipalBasis, k: usize) -> Result<f64, PcaError> {
    if k == 0 || k > basis.p {
        return Err(PcaError::DimensionOutOfRange { k, p: basis.p });
    }
    let total: f64 = basis.eigenvalues.iter().sum();
    // identical rows leave roundoff-level variance behind, relative to the data magnitude
    let magnitude: f64 = basis
        .mean
        .iter()
        .zip(&basis.scale)
        .map(|(m, s)| (m / s).powi(2))
        .sum();
    if total <= 1e-20 * (1.0 + magnitude) {
        return Err(PcaError::DegenerateSpectrum);
    }
    if k == basis.p {
        return Ok(1.0);
    }
    let head: f64 = basis.eigenvalues[..k].iter().sum();
    Ok((head / total).clamp(0.0, 1.0))
}

/// The `k` leading components of a [`PrincipalBasis`].
#[derive(Debug, Clone)]
pub struct TruncatedBasis {
    parent: Arc<PrincipalBasis>,
    k: usize,
    /// row-major `p x k`
    wk: Vec<f64>,
}

impl TruncatedBasis {
    pub fn new(parent: Arc<PrincipalBasis>, k: usize) -> Result<Self, PcaError> {
        let p = parent.p;
        if k == 0 || k > p {
            return Err(PcaError::DimensionOutOfRange { k, p });
        }
        let mut wk = Vec::with_capacity(p * k);
        for i in 0..p {
            wk.extend_from_slice(&parent.w[i * p..i * p + k]);
        }
        Ok(Self { parent, k, wk })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.parent.p
    }

    pub fn parent(&self) -> &Arc<PrincipalBasis> {
        &self.parent
    }

    /// Row-major `p x k` matrix of retained eigenvectors.
    pub fn wk(&self) -> &[f64] {
        &self.wk
    }

    /// Projects `x` into `out` without allocating. `out` must have length `k`.
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), PcaError> {
        let (p, k) = (self.p(), self.k);
        if x.len() != p {
            return Err(PcaError::DimensionMismatch { expected: p, got: x.len() });
        }
        if out.len() != k {
            return Err(PcaError::DimensionMismatch { expected: k, got: out.len() });
        }
        out.fill(0.0);
        for i in 0..p {
            let z = (x[i] - self.parent.mean[i]) / self.parent.scale[i];
            let row = &self.wk[i * k..(i + 1) * k];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * z;
            }
        }
        Ok(())
    }

    /// `Wkᵀ · preprocess(x)`.
    pub fn project(&self, x: &[f64]) -> Result<ProjectedState, PcaError> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(PcaError::NonFinite);
        }
        let mut coords: SmallVec<[f64; 9]> = SmallVec::from_elem(0.0, self.k);
        self.project_into(x, &mut coords)?;
        Ok(ProjectedState(coords))
    }

    /// Projects every row; row `i` of the result equals `project(samples.row(i))`.
    pub fn project_batch(&self, samples: &SampleMatrix) -> Result<SampleMatrix, PcaError> {
        if samples.cols() != self.p() {
            return Err(PcaError::DimensionMismatch {
                expected: self.p(),
                got: samples.cols(),
            });
        }
        let mut data = vec![0.0; samples.rows() * self.k];
        for (row, out) in samples.iter_rows().zip(data.chunks_exact_mut(self.k)) {
            self.project_into(row, out)?;
        }
        SampleMatrix::new(samples.rows(), self.k, data)
    }

    /// Maps manifold coordinates back to raw feature space.
    pub fn reconstruct(&self, xk: &ProjectedState) -> Result<Vec<f64>, PcaError> {
        let (p, k) = (self.p(), self.k);
        if xk.len() != k {
            return Err(PcaError::DimensionMismatch { expected: k, got: xk.len() });
        }
        Ok((0..p)
            .map(|i| {
                let z: f64 = self.wk[i * k..(i + 1) * k]
                    .iter()
                    .zip(xk.coords())
                    .map(|(w, c)| w * c)
                    .sum();
                z * self.parent.scale[i] + self.parent.mean[i]
            })
            .collect())
    }

    /// Mean squared reconstruction error over the rows of `samples`.
    pub fn reconstruction_mse(&self, samples: &SampleMatrix) -> Result<f64, PcaError> {
        let projected = self.project_batch(samples)?;
        let mut total = 0.0;
        for (i, row) in samples.iter_rows().enumerate() {
            let xk = ProjectedState(projected.row(i).iter().copied().collect());
            let back = self.reconstruct(&xk)?;
            total += back.iter().zip(row).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        Ok(total / (samples.rows() * samples.cols()) as f64)
    }
}
