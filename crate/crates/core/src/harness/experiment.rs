//! Experiment configuration, single trials, and curve sweeps.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::detection::{
    classify_and_localize, evaluate_report, Dictionary, DetectionReport, Truth,
    DEFAULT_MATCH_RADIUS,
};
use crate::harness::{builtin_targets, generate_scene, Background, Placements, SceneSpec};
use crate::seeds::combine;
use crate::sensing::{add_noise, measure, select_rows, SensingOperator};
use crate::signal::Signal2D;
use crate::solver::{solve_lasso, LassoProblem, SolverOptions, TauMode};
use crate::xforms::BasisKind;
use crate::{Error, Result};

/// Correlation flavor: plain matched POF or pure-phase correlation of the
/// whitened scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Pof,
    Ppc,
}

impl std::str::FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pof" => Ok(FilterMode::Pof),
            "ppc" => Ok(FilterMode::Ppc),
            other => Err(Error::Parameter(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FilterMode::Pof => "pof",
            FilterMode::Ppc => "ppc",
        })
    }
}

/// Solver settings tuned for detection sweeps: peak positions stabilize long
/// before the residual reaches library-grade tolerances, so subproblems are
/// cut off earlier than the solver defaults. Calibrated on the default scene
/// family — the loose budgets change measured detection rates by less than
/// one trial in thirty against the full-tolerance solver, at a fifth of the
/// cost.
pub fn detection_solver_defaults() -> SolverOptions {
    SolverOptions {
        tol: 3e-4,
        pg_tol_rel: 2e-3,
        max_iter: 30,
        sigma_tol_rel: 7e-3,
        max_newton: 6,
        ..SolverOptions::default()
    }
}

/// Everything one sweep needs; parsed from a flat key = value config file.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scene: SceneSpec,
    /// Target classes available to the scene generator.
    pub targets: Vec<String>,
    /// Labels the detector searches for (a subset of `targets`).
    pub dictionary: Vec<String>,
    pub basis: BasisKind,
    pub mode: FilterMode,
    pub rho_grid: Vec<f64>,
    pub snr_db: f64,
    pub trials_per_point: usize,
    pub base_seed: u64,
    /// Worker threads for the sweep (0 = all available cores).
    pub workers: usize,
    /// Localization tolerance in pixels.
    pub match_radius: f64,
    /// Peak exclusion radius in pixels (0 = auto: max target extent).
    pub exclusion_radius: usize,
    pub min_score_ratio: f64,
    pub solver: SolverOptions,
}

impl Default for ExperimentConfig {
    /// The desk-scale default family: a 128×128 textured scene holding one
    /// true target and one similar false target, Walsh-Hadamard sampling and
    /// plain POF detection.
    fn default() -> Self {
        Self {
            scene: SceneSpec {
                side: 128,
                background: Background::Textured {
                    seed: 7,
                    correlation_length: 2.0,
                    amplitude: 120.0,
                },
                placements: Placements::OneOfEach { seed: 11 },
                bit_depth: 8,
            },
            targets: vec!["ship-a".into(), "ship-b".into()],
            dictionary: vec!["ship-a".into()],
            basis: BasisKind::WalshHadamard,
            mode: FilterMode::Pof,
            rho_grid: vec![1.0, 4.0, 16.0, 64.0],
            snr_db: f64::INFINITY,
            trials_per_point: 200,
            base_seed: 42,
            workers: 0,
            match_radius: DEFAULT_MATCH_RADIUS,
            exclusion_radius: 0,
            min_score_ratio: 0.5,
            solver: detection_solver_defaults(),
        }
    }
}

impl ExperimentConfig {
    /// Parse the flat key = value run-config format. Unknown keys and
    /// malformed values are rejected with their line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut fixed_placements: Vec<Truth> = Vec::new();
        let mut placements_kind: Option<String> = None;

        let bad = |line: usize, msg: String| Error::ConfigParse { line, msg };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(line_no, format!("expected key = value, got '{line}'")))?;
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = |v: &str| -> Result<f64> {
                if v.eq_ignore_ascii_case("inf") || v.eq_ignore_ascii_case("+inf") {
                    return Ok(f64::INFINITY);
                }
                v.parse::<f64>()
                    .map_err(|e| bad(line_no, format!("bad number '{v}': {e}")))
            };
            let parse_usize = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .map_err(|e| bad(line_no, format!("bad integer '{v}': {e}")))
            };
            let parse_u64 = |v: &str| -> Result<u64> {
                v.parse::<u64>()
                    .map_err(|e| bad(line_no, format!("bad integer '{v}': {e}")))
            };
            match key {
                "side" => cfg.scene.side = parse_usize(value)?,
                "bit_depth" => {
                    cfg.scene.bit_depth = parse_usize(value)? as u8;
                }
                "background" => match value {
                    "flat" => cfg.scene.background = Background::Flat { level: 0.0 },
                    "textured" => {
                        if !matches!(cfg.scene.background, Background::Textured { .. }) {
                            cfg.scene.background = Background::Textured {
                                seed: 7,
                                correlation_length: 2.0,
                                amplitude: 120.0,
                            };
                        }
                    }
                    other => return Err(bad(line_no, format!("unknown background '{other}'"))),
                },
                "background_level" => {
                    let level = parse_f64(value)?;
                    cfg.scene.background = Background::Flat { level };
                }
                "background_seed" | "background_correlation_length" | "background_amplitude" => {
                    let (mut seed, mut corr, mut amp) = match cfg.scene.background {
                        Background::Textured { seed, correlation_length, amplitude } => {
                            (seed, correlation_length, amplitude)
                        }
                        _ => (7, 2.0, 120.0),
                    };
                    match key {
                        "background_seed" => seed = parse_u64(value)?,
                        "background_correlation_length" => corr = parse_f64(value)?,
                        _ => amp = parse_f64(value)?,
                    }
                    cfg.scene.background = Background::Textured {
                        seed,
                        correlation_length: corr,
                        amplitude: amp,
                    };
                }
                "placements" => placements_kind = Some(value.to_string()),
                "placement_seed" => match &mut cfg.scene.placements {
                    Placements::Random { seed, .. } | Placements::OneOfEach { seed } => {
                        *seed = parse_u64(value)?
                    }
                    Placements::Fixed(_) => {
                        cfg.scene.placements = Placements::OneOfEach { seed: parse_u64(value)? }
                    }
                },
                "placement_count_min" | "placement_count_max" => {
                    let v = parse_usize(value)?;
                    let (mut lo, mut hi, seed) = match cfg.scene.placements {
                        Placements::Random { count_min, count_max, seed } => {
                            (count_min, count_max, seed)
                        }
                        Placements::OneOfEach { seed } => (1, 1, seed),
                        Placements::Fixed(_) => (1, 1, 11),
                    };
                    if key == "placement_count_min" {
                        lo = v;
                    } else {
                        hi = v;
                    }
                    cfg.scene.placements = Placements::Random {
                        count_min: lo,
                        count_max: hi,
                        seed,
                    };
                    placements_kind.get_or_insert_with(|| "random".into());
                }
                "placement" => {
                    let mut parts = value.split(':');
                    let label = parts
                        .next()
                        .ok_or_else(|| bad(line_no, "placement needs label:row:col".into()))?;
                    let row = parse_usize(parts.next().ok_or_else(|| {
                        bad(line_no, "placement needs label:row:col".into())
                    })?)?;
                    let col = parse_usize(parts.next().ok_or_else(|| {
                        bad(line_no, "placement needs label:row:col".into())
                    })?)?;
                    fixed_placements.push((label.to_string(), row, col));
                    placements_kind.get_or_insert_with(|| "fixed".into());
                }
                "targets" => {
                    cfg.targets = value.split(',').map(|s| s.trim().to_string()).collect()
                }
                "dictionary" => {
                    cfg.dictionary = value.split(',').map(|s| s.trim().to_string()).collect()
                }
                "basis" => cfg.basis = value.parse()?,
                "mode" => cfg.mode = value.parse()?,
                "rho_grid" => {
                    cfg.rho_grid = value
                        .split(',')
                        .map(|s| parse_f64(s.trim()))
                        .collect::<Result<Vec<_>>>()?
                }
                "snr_db" => cfg.snr_db = parse_f64(value)?,
                "trials" => cfg.trials_per_point = parse_usize(value)?,
                "base_seed" => cfg.base_seed = parse_u64(value)?,
                "workers" => cfg.workers = parse_usize(value)?,
                "radius" => cfg.match_radius = parse_f64(value)?,
                "exclusion_radius" => cfg.exclusion_radius = parse_usize(value)?,
                "min_score_ratio" => cfg.min_score_ratio = parse_f64(value)?,
                "solver_tol" => cfg.solver.tol = parse_f64(value)?,
                "solver_pg_tol" => cfg.solver.pg_tol_rel = parse_f64(value)?,
                "solver_max_iter" => cfg.solver.max_iter = parse_usize(value)?,
                "solver_sigma_tol" => cfg.solver.sigma_tol_rel = parse_f64(value)?,
                "solver_max_newton" => cfg.solver.max_newton = parse_usize(value)?,
                other => return Err(bad(line_no, format!("unknown key '{other}'"))),
            }
        }
        match placements_kind.as_deref() {
            Some("fixed") => cfg.scene.placements = Placements::Fixed(fixed_placements),
            Some("random") => {
                if !matches!(cfg.scene.placements, Placements::Random { .. }) {
                    cfg.scene.placements = Placements::Random {
                        count_min: 1,
                        count_max: 1,
                        seed: 11,
                    };
                }
            }
            Some("one-of-each") => {
                let seed = match cfg.scene.placements {
                    Placements::Random { seed, .. } | Placements::OneOfEach { seed } => seed,
                    Placements::Fixed(_) => 11,
                };
                cfg.scene.placements = Placements::OneOfEach { seed };
            }
            Some(other) => {
                return Err(Error::ConfigParse {
                    line: 0,
                    msg: format!("unknown placements kind '{other}'"),
                })
            }
            None => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scene.side.is_power_of_two() || self.scene.side == 0 {
            return Err(Error::Parameter(format!(
                "side {} is not a power of two",
                self.scene.side
            )));
        }
        if self.rho_grid.is_empty() || self.rho_grid.iter().any(|&r| !r.is_finite() || r < 1.0) {
            return Err(Error::Parameter("rho_grid must be nonempty with values ≥ 1".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Parameter("trials must be ≥ 1".into()));
        }
        if self.dictionary.is_empty() {
            return Err(Error::Parameter("dictionary must not be empty".into()));
        }
        for d in &self.dictionary {
            if !self.targets.contains(d) {
                return Err(Error::Parameter(format!(
                    "dictionary label '{d}' is not in targets"
                )));
            }
        }
        Ok(())
    }

    /// Canonical key = value rendering: the resolved configuration printed
    /// before every run and hashed for resume compatibility checks.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("side = {}\n", self.scene.side));
        s.push_str(&format!("bit_depth = {}\n", self.scene.bit_depth));
        match &self.scene.background {
            Background::Flat { level } => {
                s.push_str("background = flat\n");
                s.push_str(&format!("background_level = {level}\n"));
            }
            Background::Textured { seed, correlation_length, amplitude } => {
                s.push_str("background = textured\n");
                s.push_str(&format!("background_seed = {seed}\n"));
                s.push_str(&format!("background_correlation_length = {correlation_length}\n"));
                s.push_str(&format!("background_amplitude = {amplitude}\n"));
            }
        }
        match &self.scene.placements {
            Placements::Fixed(list) => {
                s.push_str("placements = fixed\n");
                for (l, r, c) in list {
                    s.push_str(&format!("placement = {l}:{r}:{c}\n"));
                }
            }
            Placements::Random { count_min, count_max, seed } => {
                s.push_str("placements = random\n");
                s.push_str(&format!("placement_count_min = {count_min}\n"));
                s.push_str(&format!("placement_count_max = {count_max}\n"));
                s.push_str(&format!("placement_seed = {seed}\n"));
            }
            Placements::OneOfEach { seed } => {
                s.push_str("placements = one-of-each\n");
                s.push_str(&format!("placement_seed = {seed}\n"));
            }
        }
        s.push_str(&format!("targets = {}\n", self.targets.join(",")));
        s.push_str(&format!("dictionary = {}\n", self.dictionary.join(",")));
        s.push_str(&format!("basis = {}\n", self.basis));
        s.push_str(&format!("mode = {}\n", self.mode));
        s.push_str(&format!(
            "rho_grid = {}\n",
            self.rho_grid.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
        ));
        s.push_str(&format!("snr_db = {}\n", self.snr_db));
        s.push_str(&format!("trials = {}\n", self.trials_per_point));
        s.push_str(&format!("base_seed = {}\n", self.base_seed));
        s.push_str(&format!("workers = {}\n", self.workers));
        s.push_str(&format!("radius = {}\n", self.match_radius));
        s.push_str(&format!("exclusion_radius = {}\n", self.exclusion_radius));
        s.push_str(&format!("min_score_ratio = {}\n", self.min_score_ratio));
        s.push_str(&format!("solver_tol = {}\n", self.solver.tol));
        s.push_str(&format!("solver_pg_tol = {}\n", self.solver.pg_tol_rel));
        s.push_str(&format!("solver_max_iter = {}\n", self.solver.max_iter));
        s.push_str(&format!("solver_sigma_tol = {}\n", self.solver.sigma_tol_rel));
        s.push_str(&format!("solver_max_newton = {}\n", self.solver.max_newton));
        s
    }

    /// FNV-1a hash of the canonical rendering; guards resumed trial logs.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// Outcome of one end-to-end recognition trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub rho: f64,
    pub m: usize,
    pub trial_index: usize,
    /// Trial master seed: combine(base_seed, rho bits, trial index).
    pub seed: u64,
    pub success: bool,
    pub all_converged: bool,
    pub solver_iterations: usize,
    pub report: DetectionReport,
}

struct TrialContext {
    targets: Vec<(String, Signal2D)>,
    dict: Dictionary,
}

fn build_context(config: &ExperimentConfig) -> Result<TrialContext> {
    let targets = builtin_targets(&config.targets)?;
    let dict_targets: Vec<(String, Signal2D)> = config
        .dictionary
        .iter()
        .map(|l| {
            targets
                .iter()
                .find(|(tl, _)| tl == l)
                .cloned()
                .ok_or_else(|| Error::Parameter(format!("dictionary label '{l}' not in targets")))
        })
        .collect::<Result<_>>()?;
    let dict = Dictionary::build(config.scene.side, &dict_targets)?;
    Ok(TrialContext { targets, dict })
}

fn run_trial_with(
    config: &ExperimentConfig,
    ctx: &TrialContext,
    rho: f64,
    trial_index: usize,
) -> Result<TrialRecord> {
    let side = config.scene.side;
    let n = side * side;
    let m = ((n as f64 / rho).round() as usize).clamp(1, n);
    let trial_seed = combine(config.base_seed, rho.to_bits(), trial_index as u64);

    let spec = config.scene.for_trial(trial_seed);
    let (scene, truth_all) = generate_scene(&spec, &ctx.targets)?;
    let truth: Vec<Truth> = truth_all
        .into_iter()
        .filter(|(l, _, _)| config.dictionary.contains(l))
        .collect();

    let selection = select_rows(config.basis, n, m, combine(trial_seed, 0x53, 0))?;
    let clean = measure(&scene, &selection, config.mode == FilterMode::Ppc)?;
    let meas = if config.snr_db.is_finite() {
        add_noise(&clean, config.snr_db, combine(trial_seed, 0x4e, 0))
    } else {
        clean
    };
    // target residual: the ℓ2 size of the injected noise, √m·σ
    let sigma = if meas.noise_sigma > 0.0 {
        (m as f64).sqrt() * meas.noise_sigma
    } else {
        0.0
    };

    let mut planes = Vec::with_capacity(ctx.dict.entries().len());
    let mut all_converged = true;
    let mut iterations = 0usize;
    for entry in ctx.dict.entries() {
        let op = SensingOperator::for_matched_pof(selection.clone(), &entry.pof)?;
        let problem = LassoProblem::new(op, meas.samples.clone(), TauMode::Auto { sigma })?;
        let result = solve_lasso(&problem, &config.solver)?;
        all_converged &= result.converged;
        iterations += result.iterations;
        planes.push((entry.label.clone(), result.s_hat));
    }

    let exclusion = if config.exclusion_radius == 0 {
        ctx.dict.max_target_extent()
    } else {
        config.exclusion_radius
    };
    let mut report = classify_and_localize(
        &planes,
        &ctx.dict,
        Some(truth.len()),
        exclusion,
        config.min_score_ratio,
    )?;
    evaluate_report(&mut report, &truth, config.match_radius);
    let success = report.success == Some(true) && all_converged;

    Ok(TrialRecord {
        rho,
        m,
        trial_index,
        seed: trial_seed,
        success,
        all_converged,
        solver_iterations: iterations,
        report,
    })
}

/// Run one fully deterministic recognition trial at compression ratio `rho`.
pub fn run_trial(config: &ExperimentConfig, rho: f64, trial_index: usize) -> Result<TrialRecord> {
    let ctx = build_context(config)?;
    run_trial_with(config, &ctx, rho, trial_index)
}

/// One aggregated grid point of a detection-probability curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub rho: f64,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub probability: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn aggregate(config: &ExperimentConfig, flags: &HashMap<(usize, usize), bool>) -> Vec<CurvePoint> {
    let side = config.scene.side;
    let n = side * side;
    config
        .rho_grid
        .iter()
        .enumerate()
        .map(|(g, &rho)| {
            let m = ((n as f64 / rho).round() as usize).clamp(1, n);
            let mut successes = 0usize;
            let mut trials = 0usize;
            for t in 0..config.trials_per_point {
                if let Some(&ok) = flags.get(&(g, t)) {
                    trials += 1;
                    if ok {
                        successes += 1;
                    }
                }
            }
            let (lo, hi) = wilson_interval(successes, trials);
            CurvePoint {
                rho,
                m,
                trials,
                successes,
                probability: if trials > 0 { successes as f64 / trials as f64 } else { 0.0 },
                wilson_lo: lo,
                wilson_hi: hi,
            }
        })
        .collect()
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        Ok(job())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Parameter(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(job))
    }
}

/// Run the full sweep in memory: `trials_per_point` independent trials per
/// grid point, in parallel, aggregated with Wilson 95% intervals.
pub fn run_curve(config: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let ctx = build_context(config)?;
    let jobs: Vec<(usize, usize)> = (0..config.rho_grid.len())
        .flat_map(|g| (0..config.trials_per_point).map(move |t| (g, t)))
        .collect();
    let records: Result<Vec<((usize, usize), bool)>> = with_pool(config.workers, || {
        jobs.par_iter()
            .map(|&(g, t)| {
                let rec = run_trial_with(config, &ctx, config.rho_grid[g], t)?;
                Ok(((g, t), rec.success))
            })
            .collect()
    })?;
    let flags: HashMap<(usize, usize), bool> = records?.into_iter().collect();
    // recount guard: aggregation must cover every job exactly once
    debug_assert_eq!(flags.len(), jobs.len());
    Ok(aggregate(config, &flags))
}

/// Run the sweep with an on-disk trial log for incremental flushing and
/// resume. Returns the curve and whether a partial previous run was resumed.
pub fn run_curve_logged(
    config: &ExperimentConfig,
    log_path: &Path,
) -> Result<(Vec<CurvePoint>, bool)> {
    config.validate()?;
    let fingerprint = config.fingerprint();
    let mut done: HashMap<(usize, usize), bool> = HashMap::new();

    if log_path.exists() {
        let reader = BufReader::new(std::fs::File::open(log_path)?);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 {
                let expect = format!("# cpof-trials {fingerprint:016x}");
                if line != expect {
                    return Err(Error::Format(format!(
                        "trial log {} belongs to a different configuration",
                        log_path.display()
                    )));
                }
                continue;
            }
            // g,trial,success,converged,iterations,seed — skip torn lines
            let mut parts = line.split(',');
            let (Some(g), Some(t), Some(s)) = (parts.next(), parts.next(), parts.next()) else {
                continue;
            };
            let (Ok(g), Ok(t)) = (g.parse::<usize>(), t.parse::<usize>()) else {
                continue;
            };
            if g < config.rho_grid.len() && t < config.trials_per_point {
                done.insert((g, t), s == "1");
            }
        }
    }

    let total = config.rho_grid.len() * config.trials_per_point;
    let resumed = !done.is_empty() && done.len() < total;

    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(log_path)?;
    if done.is_empty() && file.metadata()?.len() == 0 {
        writeln!(file, "# cpof-trials {fingerprint:016x}")?;
        file.flush()?;
    }
    let sink = Mutex::new(file);

    let ctx = build_context(config)?;
    let jobs: Vec<(usize, usize)> = (0..config.rho_grid.len())
        .flat_map(|g| (0..config.trials_per_point).map(move |t| (g, t)))
        .filter(|key| !done.contains_key(key))
        .collect();

    let fresh: Result<Vec<((usize, usize), bool)>> = with_pool(config.workers, || {
        jobs.par_iter()
            .map(|&(g, t)| {
                let rec = run_trial_with(config, &ctx, config.rho_grid[g], t)?;
                {
                    let mut file = sink.lock().expect("trial log poisoned");
                    writeln!(
                        file,
                        "{g},{t},{},{},{},{}",
                        rec.success as u8, rec.all_converged as u8, rec.solver_iterations, rec.seed
                    )?;
                    file.flush()?;
                }
                Ok(((g, t), rec.success))
            })
            .collect()
    })?;
    let mut flags = done;
    flags.extend(fresh?);
    Ok((aggregate(config, &flags), resumed))
}

/// Write the aggregated curve in the documented CSV layout.
pub fn write_curve_csv(
    path: &Path,
    config: &ExperimentConfig,
    points: &[CurvePoint],
) -> Result<()> {
    let mut out =
        String::from("rho,m,trials,successes,probability,wilson_lo,wilson_hi,snr_db,basis,mode\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            p.rho,
            p.m,
            p.trials,
            p.successes,
            p.probability,
            p.wilson_lo,
            p.wilson_hi,
            config.snr_db,
            config.basis,
            config.mode
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
