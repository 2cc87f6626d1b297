use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::LearnerError;
use crate::pca::{SampleMatrix, TruncatedBasis};

pub const DEFAULT_BINS: usize = 20;

/// Tabular key: one bin index per manifold coordinate, or the raw integer
/// features when learning without projection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey(pub SmallVec<[u16; 9]>);

impl StateKey {
    pub fn from_slice(bins: &[u16]) -> Self {
        Self(SmallVec::from_slice(bins))
    }

    pub fn bins(&self) -> &[u16] {
        &self.0
    }
}

/// Uniform per-component binning of manifold coordinates.
///
/// Bin `i` of a component covers `[lo + i·w, lo + (i+1)·w)` with
/// `w = (hi − lo) / bins`; values outside `[lo, hi)` clamp to the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    bins: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Discretizer {
    /// Equal bounds are pulled apart by a minimal margin so every component has width.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, bins: usize) -> Result<Self, LearnerError> {
        if lo.len() != hi.len() {
            return Err(LearnerError::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if bins == 0 || bins > usize::from(u16::MAX) {
            return Err(LearnerError::InvalidConfig(format!("bins_per_dim must be in 1..=65535, got {bins}")));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(LearnerError::InvalidConfig("non-finite discretizer bound".into()));
        }
        let mut lo = lo;
        let mut hi = hi;
        for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
            if *l > *h {
                std::mem::swap(l, h);
            }
            if *h - *l <= f64::EPSILON * l.abs().max(1.0) {
                let margin = 1e-9 * l.abs().max(1.0);
                *l -= margin;
                *h += margin;
            }
        }
        Ok(Self { bins, lo, hi })
    }

    /// Bounds from the per-column extrema of projected demonstration states.
    pub fn from_projected(projected: &SampleMatrix, bins: usize) -> Result<Self, LearnerError> {
        let k = projected.cols();
        if projected.rows() == 0 {
            return Err(LearnerError::InvalidConfig("no projected samples to bound".into()));
        }
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        for row in projected.iter_rows() {
            for j in 0..k {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        Self::new(lo, hi, bins)
    }

    pub fn k(&self) -> usize {
        self.lo.len()
    }

    pub fn bins_per_dim(&self) -> usize {
        self.bins
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn bin(&self, j: usize, x: f64) -> u16 {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        let t = (x.clamp(lo, hi) - lo) / (hi - lo) * self.bins as f64;
        (t.floor() as usize).min(self.bins - 1) as u16
    }

    pub fn discretize(&self, coords: &[f64]) -> Result<StateKey, LearnerError> {
        if coords.len() != self.k() {
            return Err(LearnerError::DimensionMismatch { expected: self.k(), got: coords.len() });
        }
        if coords.iter().any(|c| c.is_nan()) {
            return Err(LearnerError::NonFinite);
        }
        Ok(StateKey(coords.iter().enumerate().map(|(j, &x)| self.bin(j, x)).collect()))
    }
}

/// Turns a raw observation vector into a table key.
#[derive(Debug, Clone)]
pub enum StateEncoder {
    /// project onto the manifold, then bin
    Projected { basis: TruncatedBasis, discretizer: Discretizer },
    /// the integer features themselves (full-state baseline)
    Raw,
}

impl StateEncoder {
    pub fn projected(basis: TruncatedBasis, discretizer: Discretizer) -> Result<Self, LearnerError> {
        if basis.k() != discretizer.k() {
            return Err(LearnerError::DimensionMismatch { expected: basis.k(), got: discretizer.k() });
        }
        Ok(StateEncoder::Projected { basis, discretizer })
    }

    pub fn encode(&self, features: &[f64]) -> Result<StateKey, LearnerError> {
        match self {
            StateEncoder::Raw => {
                if features.iter().any(|f| !f.is_finite() || *f < 0.0 || *f > f64::from(u16::MAX)) {
                    return Err(LearnerError::NonFinite);
                }
                Ok(StateKey(features.iter().map(|&f| f.round() as u16).collect()))
            }
            StateEncoder::Projected { basis, discretizer } => {
                let mut coords: SmallVec<[f64; 9]> = SmallVec::from_elem(0.0, basis.k());
                basis.project_into(features, &mut coords)?;
                #[cfg(debug_assertions)]
                {
                    let shadow = basis.project(features)?;
                    debug_assert_eq!(shadow.coords(), &coords[..], "projection drifted");
                }
                discretizer.discretize(&coords)
            }
        }
    }
}
