//! End-to-end runs of the `cpof` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpof_core::io;
use cpof_core::signal::{Complex64, Signal2D};
use cpof_core::xforms::{transform_2d, BasisKind, Direction};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cpof"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_test_scene(dir: &Path, side: usize) -> (PathBuf, Signal2D) {
    // small bright block on a dim ramp
    let scene = Signal2D::from_fn(side, |r, c| {
        let base = ((r * 3 + c * 5) % 23) as f64;
        let block = if (8..12).contains(&r) && (16..20).contains(&c) { 200.0 } else { 0.0 };
        Complex64::new((base + block).min(255.0), 0.0)
    });
    let path = dir.join("scene.pgm");
    io::save_pgm(&path, &scene).unwrap();
    let loaded = io::load_pgm(&path).unwrap();
    (path, loaded)
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn help_lists_defaults_for_every_command() {
    for cmd in [
        "transform", "make-pof", "measure", "solve", "detect", "reconstruct", "experiment",
    ] {
        let out = run(&[cmd, "--help"]);
        assert_ok(&out);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("--out"), "{cmd} help misses --out");
    }
    // commands with defaulted flags state the documented default values
    for (cmd, needle) in [
        ("solve", "default: 500"),
        ("detect", "default: 5"),
        ("measure", "default: 0"),
        ("transform", "default: wh"),
    ] {
        let out = run(&[cmd, "--help"]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains(needle), "{cmd} help misses '{needle}':\n{stdout}");
    }
}

#[test]
fn transform_round_trip_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let (scene_path, scene) = write_test_scene(dir.path(), 32);
    let fwd = dir.path().join("fwd.pcsp");
    let back = dir.path().join("back.pcsp");

    assert_ok(&run(&[
        "transform",
        "--input",
        scene_path.to_str().unwrap(),
        "--basis",
        "noiselet",
        "--out",
        fwd.to_str().unwrap(),
    ]));
    // byte-exact agreement with the library call
    let want = transform_2d(&scene, BasisKind::Noiselet, Direction::Forward).unwrap();
    let got = io::load_plane(&fwd).unwrap();
    for (a, b) in got.data().iter().zip(want.data()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    assert_ok(&run(&[
        "transform",
        "--input",
        fwd.to_str().unwrap(),
        "--basis",
        "noiselet",
        "--direction",
        "adjoint",
        "--out",
        back.to_str().unwrap(),
    ]));
    let recovered = io::load_plane(&back).unwrap();
    let err = recovered
        .data()
        .iter()
        .zip(scene.data())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-10, "round trip error {err}");
}

#[test]
fn wh_transform_of_constant_image_is_single_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let scene = Signal2D::from_fn(16, |_, _| Complex64::new(100.0, 0.0));
    let scene_path = dir.path().join("flat.pgm");
    io::save_pgm(&scene_path, &scene).unwrap();
    let out_path = dir.path().join("flat.pcsp");
    assert_ok(&run(&[
        "transform",
        "--input",
        scene_path.to_str().unwrap(),
        "--basis",
        "wh",
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let plane = io::load_plane(&out_path).unwrap();
    let nonzero = plane.data().iter().filter(|z| z.norm() > 1e-9).count();
    assert_eq!(nonzero, 1);
    assert!((plane.at(0, 0).re - 1600.0).abs() < 1e-9);
}

#[test]
fn measure_solve_detect_pipeline_finds_target() {
    let dir = tempfile::tempdir().unwrap();
    let side = 32;
    // reference = the block target at origin; scene = target at (8, 16)
    let target = Signal2D::from_fn(8, |r, c| {
        Complex64::new(if r < 6 && c < 6 { 200.0 } else { 0.0 }, 0.0)
    });
    let ref_path = dir.path().join("ref.pgm");
    io::save_pgm(&ref_path, &target).unwrap();

    let mut scene = Signal2D::zeros(side);
    for r in 0..8 {
        for c in 0..8 {
            let v = target.at(r, c);
            scene.set(8 + r, 16 + c, v);
        }
    }
    // light background so the plane is not trivially sparse
    let scene = Signal2D::from_fn(side, |r, c| {
        scene.at(r, c) + Complex64::new(((r * 7 + c * 13) % 17) as f64, 0.0)
    });
    let scene_path = dir.path().join("scene.pgm");
    io::save_pgm(&scene_path, &scene).unwrap();

    let pof_path = dir.path().join("pof.pcsp");
    assert_ok(&run(&[
        "make-pof",
        "--reference",
        ref_path.to_str().unwrap(),
        "--side",
        "32",
        "--out",
        pof_path.to_str().unwrap(),
    ]));

    let meas_path = dir.path().join("meas.pcsm");
    assert_ok(&run(&[
        "measure",
        "--scene",
        scene_path.to_str().unwrap(),
        "--basis",
        "wh",
        "--rho",
        "4",
        "--seed",
        "9",
        "--out",
        meas_path.to_str().unwrap(),
    ]));

    let result_path = dir.path().join("result.pcsr");
    let plane_path = dir.path().join("plane.pcsp");
    assert_ok(&run(&[
        "solve",
        "--measurement",
        meas_path.to_str().unwrap(),
        "--pof",
        pof_path.to_str().unwrap(),
        "--out",
        result_path.to_str().unwrap(),
        "--plane-out",
        plane_path.to_str().unwrap(),
    ]));

    let report_path = dir.path().join("detections.csv");
    let out = run(&[
        "detect",
        "--plane",
        result_path.to_str().unwrap(),
        "--reference",
        ref_path.to_str().unwrap(),
        "--label",
        "block",
        "--truth",
        "block:8:16",
        "--radius",
        "5",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("success: true"), "stdout: {stdout}");
    let csv = std::fs::read_to_string(&report_path).unwrap();
    assert!(csv.starts_with("label,row,col,score,matched\n"));
    assert!(csv.contains("block,"), "csv: {csv}");

    // conjugate reconstruction from the stored result reproduces the scene
    let recon_path = dir.path().join("recon.pgm");
    assert_ok(&run(&[
        "reconstruct",
        "--measurement",
        meas_path.to_str().unwrap(),
        "--pof",
        pof_path.to_str().unwrap(),
        "--result",
        result_path.to_str().unwrap(),
        "--out",
        recon_path.to_str().unwrap(),
    ]));
    assert!(recon_path.exists());
}

#[test]
fn measure_differential_scales_by_sqrt_n() {
    let dir = tempfile::tempdir().unwrap();
    let (scene_path, _) = write_test_scene(dir.path(), 32);
    let plain_path = dir.path().join("plain.pcsm");
    let diff_path = dir.path().join("diff.pcsm");
    for (path, extra) in [(&plain_path, None), (&diff_path, Some("--binary-differential"))] {
        let mut args = vec![
            "measure",
            "--scene",
            scene_path.to_str().unwrap(),
            "--m",
            "10",
            "--seed",
            "4",
            "--out",
            path.to_str().unwrap(),
        ];
        if let Some(flag) = extra {
            args.push(flag);
            args.extend_from_slice(&["--bias", "1000000"]);
        }
        assert_ok(&run(&args));
    }
    let plain = io::load_measurement(&plain_path).unwrap();
    let diff = io::load_measurement(&diff_path).unwrap();
    for (d, y) in diff.samples.iter().zip(&plain.samples) {
        assert_eq!(d.re, 32.0 * y.re);
    }
}

#[test]
fn experiment_runs_resumes_and_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.cfg");
    std::fs::write(
        &config_path,
        "side = 32\n\
         background = flat\n\
         background_level = 8\n\
         placements = one-of-each\n\
         placement_seed = 3\n\
         targets = ship-a\n\
         dictionary = ship-a\n\
         basis = wh\n\
         mode = pof\n\
         rho_grid = 1,2\n\
         trials = 2\n\
         base_seed = 5\n",
    )
    .unwrap();
    let curve_path = dir.path().join("curve.csv");

    let out = run(&[
        "experiment",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("config: side = 32"));
    let csv = std::fs::read_to_string(&curve_path).unwrap();
    assert!(csv.starts_with("rho,m,trials,successes,probability,wilson_lo,wilson_hi,snr_db,basis,mode\n"));
    assert_eq!(csv.lines().count(), 3);
    let curve_bytes = std::fs::read(&curve_path).unwrap();

    // idempotent rerun: nothing new, exit 0, identical curve
    let out2 = run(&[
        "experiment",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    assert_eq!(out2.status.code(), Some(0));
    assert_eq!(std::fs::read(&curve_path).unwrap(), curve_bytes);

    // drop the last trial line to simulate an interrupted sweep → resume, exit 2
    let log_path = curve_path.with_extension("trials");
    let log = std::fs::read_to_string(&log_path).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    std::fs::write(&log_path, format!("{}\n", lines[..lines.len() - 1].join("\n"))).unwrap();
    let out3 = run(&[
        "experiment",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    assert_eq!(out3.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out3.stderr));
    assert_eq!(std::fs::read(&curve_path).unwrap(), curve_bytes);

    // trials override shortens the sweep; fingerprint changes, fresh log
    let short_curve = dir.path().join("short.csv");
    let out4 = run(&[
        "experiment",
        "--config",
        config_path.to_str().unwrap(),
        "--trials",
        "1",
        "--out",
        short_curve.to_str().unwrap(),
    ]);
    assert_eq!(out4.status.code(), Some(0));
    let short_csv = std::fs::read_to_string(&short_curve).unwrap();
    assert!(short_csv.lines().skip(1).all(|l| l.split(',').nth(2) == Some("1")));

    // malformed config → exit 1 with a line-numbered message
    std::fs::write(&config_path, "side = 32\nnot_a_key = 1\n").unwrap();
    let out5 = run(&[
        "experiment",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    assert_eq!(out5.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out5.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn solve_rejects_conflicting_radius_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (scene_path, _) = write_test_scene(dir.path(), 32);
    let meas_path = dir.path().join("m.pcsm");
    assert_ok(&run(&[
        "measure",
        "--scene",
        scene_path.to_str().unwrap(),
        "--m",
        "64",
        "--out",
        meas_path.to_str().unwrap(),
    ]));
    let out = bin()
        .args([
            "solve",
            "--measurement",
            meas_path.to_str().unwrap(),
            "--tau",
            "1",
            "--sigma",
            "0",
            "--out",
        ])
        .arg(dir.path().join("r.pcsr"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
