//! Policy learning on a low-dimensional PCA manifold of an environment's
//! state space.
//!
//! The crate is organised bottom-up:
//!
//! * [`pca`] fits a principal basis from demonstration states and projects
//!   observations onto its leading components.
//! * [`env`] is a small seeded side-scrolling platformer emitting a 9-feature
//!   integer observation, 12 combined actions and a fixed score schedule.
//! * [`learner`] is tabular Watkins Q(λ) over discretized manifold coordinates.
//! * [`pipeline`] wires demonstrations, basis fitting and training together.
//! * [`harness`] runs the loadings analysis and the dimension sweep and writes
//!   CSV and SVG results.

pub mod env;
pub mod harness;
pub mod learner;
pub mod pca;
pub mod pipeline;
pub mod seed;

/// Formats a real number with 15 significant digits in scientific notation.
///
/// Every CSV written by this crate goes through here so re-runs are
/// byte-identical.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0.00000000000000e0"
        return "0.00000000000000e0".to_string();
    }
    format!("{:.14e}", x)
}
