use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use super::config::HarnessConfig;
use super::{create_out_dir, render, write_file, HarnessError};
use crate::env::FEATURE_NAMES;
use crate::fmt_num;
use crate::pca::{explained_variance_ratio, write_loadings_csv, PrincipalBasis};
use crate::pipeline::{collect_demonstrations, fit_basis, DemonstrationSet};

/// The fitted basis behind `loadings.csv` and `spectrum.csv`.
#[derive(Debug, Clone)]
pub struct LoadingsReport {
    pub basis: Arc<PrincipalBasis>,
    /// `|loading|` per (component, feature): row `j` is component `j + 1`
    pub abs_loadings: Vec<Vec<f64>>,
    /// cumulative explained variance at k = 1..=p
    pub cumulative: Vec<f64>,
    pub samples: usize,
}

/// `component,eigenvalue,cumulative_explained_variance`, one row per component.
pub fn write_spectrum_csv<W: Write>(out: &mut W, basis: &PrincipalBasis, cumulative: &[f64]) -> std::io::Result<()> {
    writeln!(out, "component,eigenvalue,cumulative_explained_variance")?;
    for (j, (ev, cum)) in basis.eigenvalues.iter().zip(cumulative).enumerate() {
        writeln!(out, "{},{},{}", j + 1, fmt_num(*ev), fmt_num(*cum))?;
    }
    Ok(())
}

pub fn loadings_report(cfg: &HarnessConfig) -> Result<LoadingsReport, HarnessError> {
    cfg.validate()?;
    let p = &cfg.pipeline;
    let demos = collect_demonstrations(p, p.demo_policy, p.demo_episodes)?;
    let basis = fit_basis(&demos, p.standardize)?;
    let abs_loadings = (0..basis.p)
        .map(|j| basis.component(j).iter().map(|v| v.abs()).collect())
        .collect();
    let cumulative = (1..=basis.p)
        .map(|k| explained_variance_ratio(&basis, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LoadingsReport { basis, abs_loadings, cumulative, samples: demos.observations.rows() })
}

/// Collects demonstrations, fits the basis and writes `config.resolved`,
/// `loadings.csv` (feature-name header, one row per component) and `spectrum.csv`.
pub fn cmd_loadings(cfg: &HarnessConfig, out: &Path) -> Result<LoadingsReport, HarnessError> {
    let report = loadings_report(cfg)?;
    create_out_dir(out)?;
    write_file(out, "config.resolved", cfg.to_resolved_toml().as_bytes())?;
    write_file(out, "loadings.csv", &render(|w| write_loadings_csv(w, &report.basis, &FEATURE_NAMES)))?;
    write_file(out, "spectrum.csv", &render(|w| write_spectrum_csv(w, &report.basis, &report.cumulative)))?;
    Ok(report)
}

/// Writes the demonstration set as `demonstrations.csv` (nine named columns).
pub fn cmd_collect(cfg: &HarnessConfig, out: &Path) -> Result<DemonstrationSet, HarnessError> {
    cfg.validate()?;
    let p = &cfg.pipeline;
    let demos = collect_demonstrations(p, p.demo_policy, p.demo_episodes)?;
    create_out_dir(out)?;
    write_file(out, "config.resolved", cfg.to_resolved_toml().as_bytes())?;
    write_file(out, "demonstrations.csv", &render(|w| demos.write_csv(w)))?;
    Ok(demos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::{fit_pca, SampleMatrix};

    #[test]
    fn spectrum_layout() {
        let m = SampleMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0], vec![2.0, 1.0]]).unwrap();
        let b = fit_pca(&m, false).unwrap();
        let cum = vec![explained_variance_ratio(&b, 1).unwrap(), explained_variance_ratio(&b, 2).unwrap()];
        let text = String::from_utf8(render(|w| write_spectrum_csv(w, &b, &cum))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "component,eigenvalue,cumulative_explained_variance");
        // variances 4/3 and 1/3
        assert_eq!(lines[2], "2,3.33333333333333e-1,1.00000000000000e0");
        assert_eq!(lines[1], "1,1.33333333333333e0,8.00000000000000e-1");
    }
}
