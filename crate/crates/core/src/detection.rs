//! From correlation planes to decisions.
//!
//! The squared modulus of a recovered plane, normalized by the reference
//! energy ‖r_i‖², is the classification score: with several references the
//! per-label score planes are merged and the highest peaks win their
//! locations. Localization is scored on the torus, because the underlying
//! correlation model is circulant — a peak near an edge wraps around.

use crate::filtering::{make_pof, CirculantOperator, DEFAULT_ZERO_TOL};
use crate::signal::Signal2D;
use crate::{Error, Result};

/// Default localization tolerance in pixels.
pub const DEFAULT_MATCH_RADIUS: f64 = 5.0;

/// One reference object: its small image, matched filter and energy.
#[derive(Debug, Clone)]
pub struct DictionaryEntry {
    pub label: String,
    /// Original (small) target image, used for scene composition.
    pub target: Signal2D,
    /// Matched phase-only filter of the target embedded at the scene side.
    pub pof: CirculantOperator,
    /// ‖r_i‖² of the reference image.
    pub energy: f64,
}

/// Labeled set of reference objects sharing one scene side.
#[derive(Debug, Clone)]
pub struct Dictionary {
    side: usize,
    entries: Vec<DictionaryEntry>,
}

impl Dictionary {
    /// Embed every target at `side` and build its matched filter.
    pub fn build(side: usize, targets: &[(String, Signal2D)]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Parameter("empty dictionary".into()));
        }
        let mut entries = Vec::with_capacity(targets.len());
        for (label, target) in targets {
            if entries.iter().any(|e: &DictionaryEntry| &e.label == label) {
                return Err(Error::Parameter(format!("duplicate label '{label}'")));
            }
            let embedded = target.embedded(side)?;
            let energy = embedded.data().iter().map(|z| z.norm_sqr()).sum::<f64>();
            if energy <= 0.0 {
                return Err(Error::Parameter(format!("reference '{label}' has zero energy")));
            }
            let pof = make_pof(&embedded, DEFAULT_ZERO_TOL)?;
            entries.push(DictionaryEntry {
                label: label.clone(),
                target: target.clone(),
                pof,
                energy,
            });
        }
        Ok(Self { side, entries })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    pub fn get(&self, label: &str) -> Option<&DictionaryEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Largest target canvas side; the default peak exclusion radius.
    pub fn max_target_extent(&self) -> usize {
        self.entries.iter().map(|e| e.target.side()).max().unwrap_or(1)
    }
}

/// Real-valued score plane |s|²/‖r‖², row-major like [`Signal2D`].
#[derive(Debug, Clone)]
pub struct ScoreMap {
    side: usize,
    values: Vec<f64>,
}

impl ScoreMap {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.side + col]
    }
}

/// Normalized detection intensity |s|²/reference_energy.
pub fn score_plane(s: &Signal2D, reference_energy: f64) -> Result<ScoreMap> {
    if !reference_energy.is_finite() || reference_energy <= 0.0 {
        return Err(Error::Parameter(format!(
            "reference energy must be positive, got {reference_energy}"
        )));
    }
    Ok(ScoreMap {
        side: s.side(),
        values: s.data().iter().map(|z| z.norm_sqr() / reference_energy).collect(),
    })
}

/// A located score maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub row: usize,
    pub col: usize,
    pub score: f64,
}

/// Squared toroidal Euclidean distance between two pixels.
pub fn toroidal_dist_sq(a: (usize, usize), b: (usize, usize), side: usize) -> f64 {
    let d = |x: usize, y: usize| -> f64 {
        let diff = x.abs_diff(y);
        diff.min(side - diff) as f64
    };
    let dr = d(a.0, b.0);
    let dc = d(a.1, b.1);
    dr * dr + dc * dc
}

/// Greedy non-maximum suppression: repeatedly take the global maximum and
/// suppress the toroidal disc of `exclusion_radius` around it. Stops after
/// `max_peaks` or when the next score drops below `min_score_ratio` times
/// the first. Exact ties resolve in row-major order.
pub fn find_peaks(
    score: &ScoreMap,
    max_peaks: usize,
    exclusion_radius: usize,
    min_score_ratio: f64,
) -> Vec<Peak> {
    let side = score.side;
    let mut work = score.values.clone();
    let mut peaks = Vec::new();
    let mut first_score = None;
    while peaks.len() < max_peaks {
        let mut best = f64::NEG_INFINITY;
        let mut best_at = None;
        for (i, &v) in work.iter().enumerate() {
            if v > best {
                best = v;
                best_at = Some(i);
            }
        }
        let Some(idx) = best_at else { break };
        if !best.is_finite() || best <= 0.0 {
            break;
        }
        let first = *first_score.get_or_insert(best);
        if best < min_score_ratio * first {
            break;
        }
        let (row, col) = (idx / side, idx % side);
        peaks.push(Peak { row, col, score: best });

        let r = exclusion_radius as isize;
        for dr in -r..=r {
            for dc in -r..=r {
                if dr * dr + dc * dc <= r * r {
                    let rr = (row as isize + dr).rem_euclid(side as isize) as usize;
                    let cc = (col as isize + dc).rem_euclid(side as isize) as usize;
                    work[rr * side + cc] = f64::NEG_INFINITY;
                }
            }
        }
    }
    peaks
}

/// One labeled detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub label: String,
    pub row: usize,
    pub col: usize,
    pub score: f64,
    /// Set by [`score_success`]-style evaluation against ground truth.
    pub matched: bool,
}

/// Ground-truth placement of one object.
pub type Truth = (String, usize, usize);

/// Result of classification and localization over a scene.
#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub side: usize,
    /// Scores sorted descending; mutually separated by the exclusion radius.
    pub detections: Vec<Detection>,
    pub ground_truth: Option<Vec<Truth>>,
    pub success: Option<bool>,
}

impl DetectionReport {
    /// CSV serialization: `label,row,col,score,matched` per detection.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,row,col,score,matched\n");
        for d in &self.detections {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                d.label, d.row, d.col, d.score, d.matched
            ));
        }
        out
    }
}

/// Merge per-label planes into a labeled detection list.
///
/// Builds each label's score plane, extracts candidate peaks, then applies
/// cross-label non-maximum suppression (highest score wins a contested
/// location). With `expected_count` known, the top `expected_count`
/// detections are returned; otherwise every candidate scoring at least
/// `min_score_ratio` of the best accepted one.
pub fn classify_and_localize(
    planes: &[(String, Signal2D)],
    dict: &Dictionary,
    expected_count: Option<usize>,
    exclusion_radius: usize,
    min_score_ratio: f64,
) -> Result<DetectionReport> {
    if planes.len() != dict.entries.len() {
        return Err(Error::Parameter(format!(
            "{} planes for {} dictionary entries",
            planes.len(),
            dict.entries.len()
        )));
    }
    let side = dict.side;
    let mut candidates: Vec<Detection> = Vec::new();
    for (label, plane) in planes {
        let entry = dict
            .get(label)
            .ok_or_else(|| Error::Parameter(format!("plane label '{label}' not in dictionary")))?;
        if plane.side() != side {
            return Err(Error::Size(format!(
                "plane side {} does not match dictionary side {side}",
                plane.side()
            )));
        }
        let score = score_plane(plane, entry.energy)?;
        // with a known count any candidate may win after cross-label
        // suppression, so collect without a per-plane score floor
        let (cap, floor) = match expected_count {
            Some(e) => (e + 2, 0.0),
            None => (16, min_score_ratio),
        };
        for p in find_peaks(&score, cap, exclusion_radius, floor) {
            candidates.push(Detection {
                label: label.clone(),
                row: p.row,
                col: p.col,
                score: p.score,
                matched: false,
            });
        }
    }
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| (a.row, a.col, a.label.clone()).cmp(&(b.row, b.col, b.label.clone())))
    });

    let r2 = (exclusion_radius * exclusion_radius) as f64;
    let mut accepted: Vec<Detection> = Vec::new();
    for cand in candidates {
        let contested = accepted
            .iter()
            .any(|a| toroidal_dist_sq((a.row, a.col), (cand.row, cand.col), side) <= r2);
        if !contested {
            accepted.push(cand);
        }
    }
    match expected_count {
        Some(e) => accepted.truncate(e),
        None => {
            if let Some(top) = accepted.first().map(|d| d.score) {
                accepted.retain(|d| d.score >= min_score_ratio * top);
            }
        }
    }
    Ok(DetectionReport {
        side,
        detections: accepted,
        ground_truth: None,
        success: None,
    })
}

/// Bipartite perfect-matching check by backtracking (object counts are tiny).
fn perfect_matching(edges: &[Vec<usize>], n_truth: usize) -> bool {
    fn try_assign(
        det: usize,
        edges: &[Vec<usize>],
        used: &mut [bool],
        assigned: &mut usize,
    ) -> bool {
        if det == edges.len() {
            return *assigned == used.len();
        }
        // every detection must consume a distinct truth entry
        for &t in &edges[det] {
            if !used[t] {
                used[t] = true;
                *assigned += 1;
                if try_assign(det + 1, edges, used, assigned) {
                    return true;
                }
                used[t] = false;
                *assigned -= 1;
            }
        }
        false
    }
    if edges.len() != n_truth {
        return false;
    }
    let mut used = vec![false; n_truth];
    let mut assigned = 0;
    try_assign(0, edges, &mut used, &mut assigned)
}

/// True iff detections and truth admit a one-to-one matching with equal
/// labels and toroidal distance ≤ `radius` — i.e. every object is detected,
/// correctly classified and localized, with no spurious extra detections.
pub fn score_success(report: &DetectionReport, truth: &[Truth], radius: f64) -> bool {
    if truth.is_empty() || report.detections.len() != truth.len() {
        return false;
    }
    let r2 = radius * radius;
    let edges: Vec<Vec<usize>> = report
        .detections
        .iter()
        .map(|d| {
            truth
                .iter()
                .enumerate()
                .filter(|(_, t)| {
                    t.0 == d.label
                        && toroidal_dist_sq((d.row, d.col), (t.1, t.2), report.side) <= r2
                })
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    perfect_matching(&edges, truth.len())
}

/// Evaluate a report in place: sets ground truth, per-detection matched
/// flags (greedy nearest assignment) and the overall success verdict.
pub fn evaluate_report(report: &mut DetectionReport, truth: &[Truth], radius: f64) {
    let ok = score_success(report, truth, radius);
    let r2 = radius * radius;
    let mut taken = vec![false; truth.len()];
    for d in &mut report.detections {
        d.matched = false;
        for (i, t) in truth.iter().enumerate() {
            if !taken[i]
                && t.0 == d.label
                && toroidal_dist_sq((d.row, d.col), (t.1, t.2), report.side) <= r2
            {
                taken[i] = true;
                d.matched = true;
                break;
            }
        }
    }
    report.ground_truth = Some(truth.to_vec());
    report.success = Some(ok);
}
