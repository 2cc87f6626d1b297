use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{PcaError, PrincipalBasis};
use crate::fmt_num;

/// JSON form of a fitted basis. `w` is row-major `p x p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDocument {
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub w: Vec<f64>,
}

impl BasisDocument {
    pub fn from_basis(basis: &PrincipalBasis, k: Option<usize>) -> Self {
        Self {
            p: basis.p,
            k,
            mean: basis.mean.clone(),
            scale: basis.scale.clone(),
            eigenvalues: basis.eigenvalues.clone(),
            w: basis.w.clone(),
        }
    }

    pub fn into_basis(self) -> Result<PrincipalBasis, PcaError> {
        let p = self.p;
        let bad = |what: &str| PcaError::Malformed(format!("{what} has the wrong length"));
        if self.mean.len() != p {
            return Err(bad("mean"));
        }
        if self.scale.len() != p {
            return Err(bad("scale"));
        }
        if self.eigenvalues.len() != p {
            return Err(bad("eigenvalues"));
        }
        if self.w.len() != p * p {
            return Err(bad("w"));
        }
        if let Some(k) = self.k {
            if k == 0 || k > p {
                return Err(PcaError::DimensionOutOfRange { k, p });
            }
        }
        if self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(PcaError::Malformed("scale entries must be positive".into()));
        }
        let standardized = self.scale.iter().any(|s| *s != 1.0);
        Ok(PrincipalBasis {
            p,
            mean: self.mean,
            scale: self.scale,
            standardized,
            w: self.w,
            eigenvalues: self.eigenvalues,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("basis document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PcaError> {
        serde_json::from_str(text).map_err(|e| PcaError::Malformed(e.to_string()))
    }
}

/// Writes `|W|` transposed: a header of feature names, then one row per component.
pub fn write_loadings_csv<W: Write>(
    out: &mut W,
    basis: &PrincipalBasis,
    feature_names: &[&str],
) -> std::io::Result<()> {
    assert_eq!(feature_names.len(), basis.p, "one name per feature");
    writeln!(out, "component,{}", feature_names.join(","))?;
    for j in 0..basis.p {
        let cells: Vec<String> = (0..basis.p)
            .map(|i| fmt_num(basis.loading(i, j).abs()))
            .collect();
        writeln!(out, "{},{}", j + 1, cells.join(","))?;
    }
    Ok(())
}
