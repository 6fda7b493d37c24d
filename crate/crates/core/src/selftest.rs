//! Fast invariant suite behind the `selftest` CLI command.
//!
//! Each check is self-contained and cheap; the whole battery runs in a few
//! seconds. Dense reference matrices are rebuilt here from the defining
//! recursions so the checks do not share code with the fast paths they
//! exercise.

use crate::filtering::{make_pof, CirculantOperator, TransferFunction, DEFAULT_ZERO_TOL};
use crate::sensing::{measure, measure_differential_binary, select_rows, SensingOperator};
use crate::signal::{max_abs_diff, norm_l2, Complex64, Signal2D};
use crate::solver::{project_l1_ball, solve_lasso, LassoProblem, SolverOptions, TauMode};
use crate::xforms::*;

/// One selftest outcome.
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pseudo(n: usize, seed: u64) -> Vec<Complex64> {
    let mut state = seed;
    (0..n)
        .map(|_| {
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
            };
            c(next(), next())
        })
        .collect()
}

type Dense = Vec<Vec<Complex64>>;

fn dense_doubling(base: Dense, n: usize, combine: impl Fn(Complex64) -> [Complex64; 4]) -> Dense {
    let mut m = base;
    while m.len() < n {
        let k = m.len();
        let mut next = vec![vec![c(0.0, 0.0); 2 * k]; 2 * k];
        for r in 0..k {
            for cc in 0..k {
                let [tl, tr, bl, br] = combine(m[r][cc]);
                next[r][cc] = tl;
                next[r][cc + k] = tr;
                next[r + k][cc] = bl;
                next[r + k][cc + k] = br;
            }
        }
        m = next;
    }
    m
}

fn matvec(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Run every check and collect the outcomes.
pub fn run_selftest() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        checks.push(Check { name, passed, detail });
    };

    // 1. unitarity round trips, 1D and 2D
    {
        let v = pseudo(1024, 3);
        let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut worst = 0.0_f64;
        for basis in [BasisKind::WalshHadamard, BasisKind::Noiselet, BasisKind::Fourier] {
            let fwd = match basis {
                BasisKind::WalshHadamard => wht_1d(&v),
                BasisKind::Noiselet => noiselet_1d(&v),
                BasisKind::Fourier => dft_1d(&v),
            }
            .expect("power-of-two input");
            let back = match basis {
                BasisKind::WalshHadamard => wht_adjoint_1d(&fwd),
                BasisKind::Noiselet => noiselet_adjoint_1d(&fwd),
                BasisKind::Fourier => dft_adjoint_1d(&fwd),
            }
            .expect("power-of-two input");
            worst = worst.max(max_abs_diff(&back, &v));
        }
        let img = Signal2D::from_vec(64, pseudo(64 * 64, 5)).unwrap();
        for basis in [BasisKind::WalshHadamard, BasisKind::Noiselet, BasisKind::Fourier] {
            let fwd = transform_2d(&img, basis, Direction::Forward).unwrap();
            let back = transform_2d(&fwd, basis, Direction::Adjoint).unwrap();
            worst = worst.max(max_abs_diff(back.data(), img.data()));
        }
        push(
            "transform unitarity (1D n=1024, 2D 64x64)",
            worst <= 1e-10 * scale.max(1.0),
            format!("max round-trip error {worst:.3e}"),
        );
    }

    // 2. fast transforms match dense recursions at n = 8
    {
        let n = 8;
        let v = pseudo(n, 7);
        let s = 1.0 / 2.0_f64.sqrt();
        let h = dense_doubling(vec![vec![c(1.0, 0.0)]], n, |x| {
            [x * s, x * s, x * s, -x * s]
        });
        let a = c(0.5, -0.5);
        let b = c(0.5, 0.5);
        let nm = dense_doubling(vec![vec![c(1.0, 0.0)]], n, |x| {
            [a * x, b * x, b * x, a * x]
        });
        let err_h = max_abs_diff(&wht_1d(&v).unwrap(), &matvec(&h, &v));
        let err_n = max_abs_diff(&noiselet_1d(&v).unwrap(), &matvec(&nm, &v));
        // naive DFT by direct summation
        let f: Dense = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        let phi = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                        c(phi.cos(), phi.sin()) / (n as f64).sqrt()
                    })
                    .collect()
            })
            .collect();
        let err_f = max_abs_diff(&dft_1d(&v).unwrap(), &matvec(&f, &v));
        let worst = err_h.max(err_n).max(err_f);
        push(
            "dense-recursion equivalence (n=8)",
            worst <= 1e-10,
            format!("wht {err_h:.2e}, noiselet {err_n:.2e}, dft {err_f:.2e}"),
        );
    }

    // 3. l1 projection: worked example and bisection cross-check
    {
        let p = project_l1_ball(&[c(3.0, 0.0), c(1.0, 0.0)], 2.0).unwrap();
        let example_ok = (p[0] - c(2.0, 0.0)).norm() < 1e-12 && p[1].norm() < 1e-12;
        let v = pseudo(256, 11);
        let tau = 0.3 * v.iter().map(|z| z.norm()).sum::<f64>();
        let fast = project_l1_ball(&v, tau).unwrap();
        // independent bisection on the threshold level
        let (mut lo, mut hi) = (0.0, v.iter().map(|z| z.norm()).fold(0.0, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if v.iter().map(|z| (z.norm() - mid).max(0.0)).sum::<f64>() > tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let level = 0.5 * (lo + hi);
        let slow: Vec<Complex64> = v
            .iter()
            .map(|z| {
                let m = z.norm();
                if m <= level {
                    c(0.0, 0.0)
                } else {
                    z * ((m - level) / m)
                }
            })
            .collect();
        let err = max_abs_diff(&fast, &slow);
        push(
            "l1 projection ([3,1] tau=2 and bisection oracle)",
            example_ok && err <= 1e-10,
            format!("worked example {example_ok}, oracle gap {err:.2e}"),
        );
    }

    // 4. POF unitarity plus the modulus-0.5 negative control
    {
        let reference = Signal2D::from_vec(32, pseudo(1024, 13)).unwrap();
        let op = make_pof(&reference, DEFAULT_ZERO_TOL).unwrap();
        let probe = Signal2D::from_vec(32, pseudo(1024, 17)).unwrap();
        let round = op
            .apply(&op.apply(&probe, Direction::Forward).unwrap(), Direction::Adjoint)
            .unwrap();
        let err_good = max_abs_diff(round.data(), probe.data());

        let bad = CirculantOperator::new(TransferFunction::new(Signal2D::from_fn(
            32,
            |_, _| c(0.5, 0.0),
        )));
        let round_bad = bad
            .apply(&bad.apply(&probe, Direction::Forward).unwrap(), Direction::Adjoint)
            .unwrap();
        let err_bad = max_abs_diff(round_bad.data(), probe.data());
        push(
            "POF unitarity (and modulus-0.5 control must fail)",
            err_good <= 1e-10 && err_bad > 1e-3,
            format!("unit-modulus error {err_good:.2e}, control error {err_bad:.2e}"),
        );
    }

    // 5. semi-unitarity A·A† = I per basis
    {
        let side = 32;
        let n = side * side;
        let reference = Signal2D::from_vec(side, pseudo(n, 19)).unwrap();
        let pof = make_pof(&reference, DEFAULT_ZERO_TOL).unwrap();
        let mut worst = 0.0_f64;
        for basis in [BasisKind::WalshHadamard, BasisKind::Noiselet, BasisKind::Fourier] {
            let sel = select_rows(basis, n, 100, 23).unwrap();
            let op = SensingOperator::for_matched_pof(sel, &pof).unwrap();
            let y = pseudo(100, 29);
            let round = op.apply(&op.apply_adjoint(&y).unwrap()).unwrap();
            worst = worst.max(max_abs_diff(&round, &y));
        }
        push(
            "sensing semi-unitarity A·A† = I",
            worst <= 1e-10,
            format!("max probe error {worst:.3e}"),
        );
    }

    // 6. differential binary measurement identity
    {
        let side = 16;
        let scene = Signal2D::from_fn(side, |r, cc| c(((r * 31 + cc * 7) % 251) as f64, 0.0));
        let sel = select_rows(BasisKind::WalshHadamard, side * side, 12, 31).unwrap();
        let plain = measure(&scene, &sel, false).unwrap();
        let diff = measure_differential_binary(&scene, &sel, 1.0e6, 0.0, 0).unwrap();
        let worst = diff
            .samples
            .iter()
            .zip(&plain.samples)
            .map(|(d, y)| (d.re - side as f64 * y.re).abs())
            .fold(0.0, f64::max);
        push(
            "differential binary measurement = √n × WH sample",
            worst == 0.0,
            format!("max deviation {worst:.3e}"),
        );
    }

    // 7. planted sparse recovery end to end
    {
        let side = 8;
        let n = side * side;
        let pof = make_pof(&Signal2D::from_vec(side, pseudo(n, 37)).unwrap(), DEFAULT_ZERO_TOL)
            .unwrap();
        let sel = select_rows(BasisKind::WalshHadamard, n, 32, 41).unwrap();
        let op = SensingOperator::for_matched_pof(sel, &pof).unwrap();
        let mut s_star = Signal2D::zeros(side);
        s_star.set(1, 3, c(2.0, -1.0));
        s_star.set(5, 6, c(-1.0, 0.5));
        s_star.set(7, 0, c(0.5, 2.0));
        let y = op.apply(&s_star).unwrap();
        let problem = LassoProblem::new(op, y, TauMode::Auto { sigma: 0.0 }).unwrap();
        let result = solve_lasso(&problem, &SolverOptions::default()).unwrap();
        let err = result
            .s_hat
            .data()
            .iter()
            .zip(s_star.data())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / norm_l2(s_star.data());
        push(
            "lasso recovery of a planted sparse plane",
            result.converged && err <= 1e-4,
            format!("relative error {err:.3e} in {} iterations", result.iterations),
        );
    }

    checks
}
