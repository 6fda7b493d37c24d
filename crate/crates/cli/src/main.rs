//! cpof — compressive phase-only matched filtering toolkit.
//!
//! Batch-oriented command-line front end: simulate single-pixel compressive
//! measurements of images, recover the matched-filter correlation plane by
//! lasso optimization, extract detections, reconstruct scenes, and run
//! Monte-Carlo detection-probability sweeps. Every command prints its fully
//! resolved configuration (including derived seeds) before executing, and
//! identical invocations produce byte-identical outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cpof_core::detection::{evaluate_report, find_peaks, score_plane, Detection, DetectionReport};
use cpof_core::filtering::{make_pof, CirculantOperator, TransferFunction, DEFAULT_ZERO_TOL};
use cpof_core::harness::{run_curve_logged, write_curve_csv, ExperimentConfig};
use cpof_core::io;
use cpof_core::sensing::{
    add_noise, measure, measure_differential_binary, quantize_samples, select_rows,
    Measurement, SensingOperator,
};
use cpof_core::signal::Signal2D;
use cpof_core::solver::{
    reconstruct_scene, solve_lasso, LassoProblem, ReconstructionMode, SolverOptions, TauMode,
};
use cpof_core::xforms::{transform_2d, BasisKind, Direction};
use cpof_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cpof",
    about = "Compressive phase-only matched filtering toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Wh,
    Noiselet,
    Dft,
}

impl From<BasisArg> for BasisKind {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Wh => BasisKind::WalshHadamard,
            BasisArg::Noiselet => BasisKind::Noiselet,
            BasisArg::Dft => BasisKind::Fourier,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Forward,
    Adjoint,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Conjugate,
    Direct,
}

#[derive(Args)]
struct SolverArgs {
    /// Fixed l1 radius; exclusive with --sigma
    #[arg(long)]
    tau: Option<f64>,
    /// Target residual for automatic radius selection (Pareto root-finding)
    #[arg(long)]
    sigma: Option<f64>,
    /// Relative residual-change tolerance
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Projected-gradient tolerance relative to the initial gradient
    #[arg(long, default_value_t = 1e-6)]
    pg_tol: f64,
    /// Iteration cap per subproblem
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Pareto root tolerance relative to the measurement norm
    #[arg(long, default_value_t = 1e-4)]
    sigma_tol: f64,
    /// Newton iteration cap
    #[arg(long, default_value_t = 20)]
    max_newton: usize,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            pg_tol_rel: self.pg_tol,
            max_iter: self.max_iter,
            sigma_tol_rel: self.sigma_tol,
            max_newton: self.max_newton,
            ..SolverOptions::default()
        }
    }

    /// Radius policy: explicit τ wins, then explicit σ, then the fallback.
    fn tau_mode(&self, fallback_sigma: f64) -> Result<TauMode> {
        match (self.tau, self.sigma) {
            (Some(_), Some(_)) => Err(Error::Parameter(
                "--tau and --sigma are mutually exclusive".into(),
            )),
            (Some(t), None) => Ok(TauMode::Fixed(t)),
            (None, Some(s)) => Ok(TauMode::Auto { sigma: s }),
            (None, None) => Ok(TauMode::Auto { sigma: fallback_sigma }),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Apply a 2D basis transform to an image or complex plane
    Transform {
        /// Input file: .pgm image or PCSP plane
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BasisArg::Wh)]
        basis: BasisArg,
        #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
        direction: DirectionArg,
        /// Output PCSP plane
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a matched phase-only filter from a reference image
    MakePof {
        /// Reference image (.pgm or PCSP), embedded top-left if smaller
        #[arg(long)]
        reference: PathBuf,
        /// Scene side the filter acts on (defaults to the reference side)
        #[arg(long)]
        side: Option<usize>,
        /// Relative spectral threshold for the unit-fill rule
        #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
        zero_tol: f64,
        /// Output PCSP plane holding the transfer function
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a compressive single-pixel measurement of a scene
    Measure {
        /// Scene image (.pgm or PCSP)
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_enum, default_value_t = BasisArg::Wh)]
        basis: BasisArg,
        /// Number of measurements; exclusive with --rho
        #[arg(long)]
        m: Option<usize>,
        /// Compression ratio n/m; exclusive with --m
        #[arg(long)]
        rho: Option<f64>,
        /// Row-selection seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Whiten the scene before measuring (pure-phase correlation mode)
        #[arg(long)]
        ppc: bool,
        /// Additive Gaussian noise level in dB (omit for noiseless)
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        /// Simulate binary {0,1} patterns with differential readout
        #[arg(long)]
        binary_differential: bool,
        /// Detector bias for the differential model
        #[arg(long, default_value_t = 0.0)]
        bias: f64,
        /// Optional uniform quantization of the samples
        #[arg(long)]
        quantize_bits: Option<u32>,
        /// Output PCSM measurement
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the correlation plane from a measurement by lasso
    Solve {
        /// Input PCSM measurement
        #[arg(long)]
        measurement: PathBuf,
        /// Matched-filter transfer function (PCSP from make-pof); omit for A = M
        #[arg(long)]
        pof: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output PCSR solver result
        #[arg(long)]
        out: PathBuf,
        /// Also write the bare recovered plane as PCSP
        #[arg(long)]
        plane_out: Option<PathBuf>,
    },
    /// Extract detection peaks from a recovered plane
    Detect {
        /// Recovered plane (PCSP or PCSR)
        #[arg(long)]
        plane: PathBuf,
        /// Reference image the plane was correlated against
        #[arg(long)]
        reference: PathBuf,
        /// Label recorded for the detections
        #[arg(long, default_value = "target")]
        label: String,
        #[arg(long, default_value_t = 1)]
        max_peaks: usize,
        /// Localization tolerance in pixels for --truth scoring
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
        /// Peak exclusion radius in pixels (0 = reference side)
        #[arg(long, default_value_t = 0)]
        exclusion: usize,
        #[arg(long, default_value_t = 0.1)]
        min_score_ratio: f64,
        /// Ground truth as label:row:col[,label:row:col...]
        #[arg(long)]
        truth: Option<String>,
        /// Output CSV report
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct the input scene from a measurement
    Reconstruct {
        /// Input PCSM measurement
        #[arg(long)]
        measurement: PathBuf,
        /// Matched-filter transfer function used in sensing (PCSP)
        #[arg(long)]
        pof: Option<PathBuf>,
        /// conjugate: apply the conjugate filter to the recovered plane;
        /// direct: re-solve with A = M (pixel-sparsity baseline)
        #[arg(long, value_enum, default_value_t = ModeArg::Conjugate)]
        mode: ModeArg,
        /// Reuse a previous solve (PCSR) instead of solving again
        #[arg(long)]
        result: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output reconstruction (.pgm)
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte-Carlo detection-probability sweep from a config file
    Experiment {
        /// Run-config file (flat key = value lines)
        #[arg(long)]
        config: PathBuf,
        /// Override trials per grid point
        #[arg(long)]
        trials: Option<usize>,
        /// Override worker thread count (0 = all cores)
        #[arg(long)]
        workers: Option<usize>,
        /// Override the base seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output curve CSV (trial log goes to <out>.trials)
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the fast invariant suite and report pass/fail per check
    Selftest,
}

fn load_image(path: &Path) -> Result<Signal2D> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => io::load_pgm(path),
        _ => io::load_plane(path),
    }
}

/// Load a recovered plane from either a PCSP plane or a PCSR result.
fn load_recovered(path: &Path) -> Result<Signal2D> {
    match io::load_plane(path) {
        Ok(plane) => Ok(plane),
        Err(Error::Format(_)) => Ok(io::load_result(path)?.s_hat),
        Err(e) => Err(e),
    }
}

fn print_config(lines: &[(&str, String)]) {
    for (key, value) in lines {
        println!("config: {key} = {value}");
    }
}

fn sigma_fallback(meas: &Measurement) -> f64 {
    if meas.noise_sigma > 0.0 {
        (meas.samples.len() as f64).sqrt() * meas.noise_sigma
    } else {
        0.0
    }
}

fn build_operator(meas: &Measurement, pof_path: Option<&Path>) -> Result<SensingOperator> {
    match pof_path {
        Some(path) => {
            let transfer = TransferFunction::new(io::load_plane(path)?);
            let matched = CirculantOperator::new(transfer);
            SensingOperator::for_matched_pof(meas.selection.clone(), &matched)
        }
        None => SensingOperator::new(meas.selection.clone(), None),
    }
}

fn cmd_transform(input: &Path, basis: BasisKind, direction: Direction, out: &Path) -> Result<()> {
    print_config(&[
        ("input", input.display().to_string()),
        ("basis", basis.to_string()),
        (
            "direction",
            if direction == Direction::Forward { "forward" } else { "adjoint" }.into(),
        ),
        ("out", out.display().to_string()),
    ]);
    let img = load_image(input)?;
    let plane = transform_2d(&img, basis, direction)?;
    io::save_plane(out, &plane)?;
    println!("wrote {} ({}x{})", out.display(), plane.side(), plane.side());
    Ok(())
}

fn cmd_make_pof(reference: &Path, side: Option<usize>, zero_tol: f64, out: &Path) -> Result<()> {
    let reference_img = load_image(reference)?;
    let side = side.unwrap_or(reference_img.side());
    print_config(&[
        ("reference", reference.display().to_string()),
        ("side", side.to_string()),
        ("zero_tol", format!("{zero_tol:e}")),
        ("out", out.display().to_string()),
    ]);
    let embedded = if reference_img.side() == side {
        reference_img
    } else {
        reference_img.embedded(side)?
    };
    let pof = make_pof(&embedded, zero_tol)?;
    io::save_plane(out, pof.transfer().values())?;
    println!("wrote {} (matched POF transfer, side {side})", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_measure(
    scene_path: &Path,
    basis: BasisKind,
    m_arg: Option<usize>,
    rho: Option<f64>,
    seed: u64,
    ppc: bool,
    snr_db: Option<f64>,
    noise_seed: u64,
    binary_differential: bool,
    bias: f64,
    quantize_bits: Option<u32>,
    out: &Path,
) -> Result<()> {
    let scene = load_image(scene_path)?;
    let n = scene.len();
    let m = match (m_arg, rho) {
        (Some(_), Some(_)) => {
            return Err(Error::Parameter("--m and --rho are mutually exclusive".into()))
        }
        (Some(m), None) => m,
        (None, Some(r)) => ((n as f64 / r).round() as usize).clamp(1, n),
        (None, None) => n,
    };
    print_config(&[
        ("scene", scene_path.display().to_string()),
        ("basis", basis.to_string()),
        ("n", n.to_string()),
        ("m", m.to_string()),
        ("rho", format!("{}", n as f64 / m as f64)),
        ("seed", seed.to_string()),
        ("ppc", ppc.to_string()),
        ("snr_db", snr_db.map_or("inf".into(), |v| v.to_string())),
        ("noise_seed", noise_seed.to_string()),
        ("binary_differential", binary_differential.to_string()),
        ("out", out.display().to_string()),
    ]);
    let selection = select_rows(basis, n, m, seed)?;
    let mut meas = if binary_differential {
        if ppc {
            return Err(Error::Unsupported(
                "binary differential patterns require a plain (non-whitened) scene".into(),
            ));
        }
        measure_differential_binary(&scene, &selection, bias, 0.0, noise_seed)?
    } else {
        measure(&scene, &selection, ppc)?
    };
    if let Some(snr) = snr_db {
        meas = add_noise(&meas, snr, noise_seed);
    }
    if let Some(bits) = quantize_bits {
        quantize_samples(&mut meas, bits)?;
    }
    io::save_measurement(out, &meas)?;
    println!("wrote {} ({} samples)", out.display(), meas.samples.len());
    Ok(())
}

fn cmd_solve(
    measurement: &Path,
    pof: Option<&Path>,
    solver: &SolverArgs,
    out: &Path,
    plane_out: Option<&Path>,
) -> Result<()> {
    let meas = io::load_measurement(measurement)?;
    let tau = solver.tau_mode(sigma_fallback(&meas))?;
    print_config(&[
        ("measurement", measurement.display().to_string()),
        ("pof", pof.map_or("none (A = M)".into(), |p| p.display().to_string())),
        ("n", meas.selection.n.to_string()),
        ("m", meas.selection.m().to_string()),
        ("selection_seed", meas.selection.seed.to_string()),
        (
            "tau",
            match tau {
                TauMode::Fixed(t) => format!("fixed {t}"),
                TauMode::Auto { sigma } => format!("auto (sigma = {sigma})"),
            },
        ),
        ("max_iter", solver.max_iter.to_string()),
        ("out", out.display().to_string()),
    ]);
    let op = build_operator(&meas, pof)?;
    let problem = LassoProblem::new(op, meas.samples.clone(), tau)?;
    let result = solve_lasso(&problem, &solver.options())?;
    println!(
        "solved: residual {:.6e}, tau {:.6e}, {} iterations, {} newton steps, converged {}",
        result.residual_norm,
        result.tau_used,
        result.iterations,
        result.newton_steps,
        result.converged
    );
    io::save_result(out, &result)?;
    if let Some(p) = plane_out {
        io::save_plane(p, &result.s_hat)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_detect(
    plane_path: &Path,
    reference: &Path,
    label: &str,
    max_peaks: usize,
    radius: f64,
    exclusion: usize,
    min_score_ratio: f64,
    truth: Option<&str>,
    out: &Path,
) -> Result<()> {
    print_config(&[
        ("plane", plane_path.display().to_string()),
        ("reference", reference.display().to_string()),
        ("label", label.into()),
        ("max_peaks", max_peaks.to_string()),
        ("radius", radius.to_string()),
        ("out", out.display().to_string()),
    ]);
    let plane = load_recovered(plane_path)?;
    let reference_img = load_image(reference)?;
    let energy: f64 = reference_img.data().iter().map(|z| z.norm_sqr()).sum();
    let exclusion = if exclusion == 0 { reference_img.side() } else { exclusion };
    let score = score_plane(&plane, energy)?;
    let peaks = find_peaks(&score, max_peaks, exclusion, min_score_ratio);
    let mut report = DetectionReport {
        side: plane.side(),
        detections: peaks
            .iter()
            .map(|p| Detection {
                label: label.to_string(),
                row: p.row,
                col: p.col,
                score: p.score,
                matched: false,
            })
            .collect(),
        ground_truth: None,
        success: None,
    };
    if let Some(truth_str) = truth {
        let truth = parse_truth(truth_str)?;
        evaluate_report(&mut report, &truth, radius);
        println!("success: {}", report.success == Some(true));
    }
    std::fs::write(out, report.to_csv())?;
    for d in &report.detections {
        println!("detection: {} at ({}, {}) score {:.4e}", d.label, d.row, d.col, d.score);
    }
    Ok(())
}

fn parse_truth(s: &str) -> Result<Vec<(String, usize, usize)>> {
    s.split(',')
        .map(|item| {
            let mut parts = item.trim().split(':');
            let label = parts
                .next()
                .filter(|p| !p.is_empty())
                .ok_or_else(|| Error::Parameter(format!("bad truth item '{item}'")))?;
            let row = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| Error::Parameter(format!("bad truth item '{item}'")))?;
            let col = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| Error::Parameter(format!("bad truth item '{item}'")))?;
            Ok((label.to_string(), row, col))
        })
        .collect()
}

fn cmd_reconstruct(
    measurement: &Path,
    pof: Option<&Path>,
    mode: ModeArg,
    result_path: Option<&Path>,
    solver: &SolverArgs,
    out: &Path,
) -> Result<()> {
    let meas = io::load_measurement(measurement)?;
    let tau = solver.tau_mode(sigma_fallback(&meas))?;
    print_config(&[
        ("measurement", measurement.display().to_string()),
        ("pof", pof.map_or("none".into(), |p| p.display().to_string())),
        (
            "mode",
            if mode == ModeArg::Conjugate { "conjugate" } else { "direct" }.into(),
        ),
        ("out", out.display().to_string()),
    ]);
    let op = build_operator(&meas, pof)?;
    let problem = LassoProblem::new(op, meas.samples.clone(), tau)?;
    let mode = match mode {
        ModeArg::Conjugate => ReconstructionMode::Conjugate,
        ModeArg::Direct => ReconstructionMode::Direct,
    };
    let result = match result_path {
        Some(p) => io::load_result(p)?,
        None => solve_lasso(&problem, &solver.options())?,
    };
    let scene = reconstruct_scene(&problem, &result, mode, &solver.options())?;
    io::save_pgm(out, &scene)?;
    println!("wrote {} ({}x{})", out.display(), scene.side(), scene.side());
    Ok(())
}

fn cmd_experiment(
    config_path: &Path,
    trials: Option<usize>,
    workers: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<bool> {
    let text = std::fs::read_to_string(config_path)?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(t) = trials {
        config.trials_per_point = t;
    }
    if let Some(w) = workers {
        config.workers = w;
    }
    if let Some(s) = seed {
        config.base_seed = s;
    }
    config.validate()?;
    for line in config.canonical_string().lines() {
        println!("config: {line}");
    }
    println!("config: fingerprint = {:016x}", config.fingerprint());

    let log_path = out.with_extension("trials");
    let (points, resumed) = run_curve_logged(&config, &log_path)?;
    write_curve_csv(out, &config, &points)?;
    for p in &points {
        println!(
            "rho {:>8.2}: m {:>7}, {}/{} ok, p = {:.4} [{:.4}, {:.4}]",
            p.rho, p.m, p.successes, p.trials, p.probability, p.wilson_lo, p.wilson_hi
        );
    }
    println!("wrote {}", out.display());
    Ok(resumed)
}

fn cmd_selftest() -> bool {
    let checks = cpof_core::selftest::run_selftest();
    let mut all_ok = true;
    for check in &checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status}  {} — {}", check.name, check.detail);
        all_ok &= check.passed;
    }
    println!("{}/{} checks passed", checks.iter().filter(|c| c.passed).count(), checks.len());
    all_ok
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Transform { input, basis, direction, out } => {
            let dir = match direction {
                DirectionArg::Forward => Direction::Forward,
                DirectionArg::Adjoint => Direction::Adjoint,
            };
            cmd_transform(&input, basis.into(), dir, &out)?;
            Ok(0)
        }
        Command::MakePof { reference, side, zero_tol, out } => {
            cmd_make_pof(&reference, side, zero_tol, &out)?;
            Ok(0)
        }
        Command::Measure {
            scene,
            basis,
            m,
            rho,
            seed,
            ppc,
            snr_db,
            noise_seed,
            binary_differential,
            bias,
            quantize_bits,
            out,
        } => {
            cmd_measure(
                &scene,
                basis.into(),
                m,
                rho,
                seed,
                ppc,
                snr_db,
                noise_seed,
                binary_differential,
                bias,
                quantize_bits,
                &out,
            )?;
            Ok(0)
        }
        Command::Solve { measurement, pof, solver, out, plane_out } => {
            cmd_solve(&measurement, pof.as_deref(), &solver, &out, plane_out.as_deref())?;
            Ok(0)
        }
        Command::Detect {
            plane,
            reference,
            label,
            max_peaks,
            radius,
            exclusion,
            min_score_ratio,
            truth,
            out,
        } => {
            cmd_detect(
                &plane,
                &reference,
                &label,
                max_peaks,
                radius,
                exclusion,
                min_score_ratio,
                truth.as_deref(),
                &out,
            )?;
            Ok(0)
        }
        Command::Reconstruct { measurement, pof, mode, result, solver, out } => {
            cmd_reconstruct(&measurement, pof.as_deref(), mode, result.as_deref(), &solver, &out)?;
            Ok(0)
        }
        Command::Experiment { config, trials, workers, seed, out } => {
            let resumed = cmd_experiment(&config, trials, workers, seed, &out)?;
            Ok(if resumed { 2 } else { 0 })
        }
        Command::Selftest => Ok(if cmd_selftest() { 0 } else { 1 }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
