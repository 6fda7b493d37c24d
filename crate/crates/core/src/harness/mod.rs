//! Synthetic scenes and the Monte-Carlo experiment engine.
//!
//! The engine produces detection-probability-vs-compression-ratio curves:
//! every (grid point, trial) job is an independent end-to-end recognition
//! pass — generate scene, measure with a trial-specific random row subset,
//! optionally add noise, recover one correlation plane per dictionary entry,
//! classify, and score success. All randomness derives from the base seed,
//! so any single trial can be re-run in isolation and whole sweeps are
//! reproducible and resumable.

mod experiment;
mod scene;

pub use experiment::{
    detection_solver_defaults, run_curve, run_curve_logged, run_trial, wilson_interval,
    write_curve_csv, CurvePoint, ExperimentConfig, FilterMode, TrialRecord,
};
pub use scene::{generate_scene, Background, Placements, SceneSpec};

use crate::signal::{Complex64, Signal2D};
use crate::{Error, Result};

/// Default brightness of built-in target silhouettes.
pub const TARGET_BRIGHTNESS: f64 = 180.0;

/// Canvas side of built-in targets.
pub const TARGET_SIDE: usize = 16;

/// Built-in synthetic target classes. Two ship silhouettes of similar size,
/// brightness and orientation, differing in superstructure — a deliberately
/// hard discrimination pair.
pub fn builtin_target(label: &str) -> Result<Signal2D> {
    let mut img = Signal2D::zeros(TARGET_SIDE);
    let mut fill = |r0: usize, r1: usize, c0: usize, c1: usize| {
        for r in r0..=r1 {
            for c in c0..=c1 {
                img.set(r, c, Complex64::new(TARGET_BRIGHTNESS, 0.0));
            }
        }
    };
    match label {
        "ship-a" => {
            fill(9, 9, 2, 13); // deck line
            fill(10, 11, 1, 14); // hull
            fill(12, 12, 2, 13); // keel taper
            fill(5, 8, 5, 10); // midship superstructure
            fill(3, 4, 7, 8); // funnel
        }
        "ship-b" => {
            fill(9, 9, 2, 13);
            fill(10, 11, 1, 14);
            fill(12, 12, 2, 13);
            fill(5, 8, 3, 6); // fore deckhouse
            fill(5, 8, 9, 12); // aft deckhouse
            fill(2, 4, 7, 7); // mast
        }
        other => {
            return Err(Error::Parameter(format!(
                "unknown target class '{other}' (built-in: ship-a, ship-b)"
            )))
        }
    }
    Ok(img)
}

/// Resolve a list of labels into (label, image) pairs of built-in targets.
pub fn builtin_targets(labels: &[String]) -> Result<Vec<(String, Signal2D)>> {
    labels
        .iter()
        .map(|l| Ok((l.clone(), builtin_target(l)?)))
        .collect()
}
