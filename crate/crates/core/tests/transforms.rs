//! Fast transforms against dense matrices built from the defining recursions.

mod common;

use common::*;
use cpof_core::signal::Signal2D;
use cpof_core::xforms::*;

#[test]
fn wht_matches_dense_recursion() {
    // includes the 4-point worked case [1,2,3,4]
    for n in [1usize, 2, 4, 8, 16, 32, 64] {
        let h = dense_wht(n);
        let v = if n == 4 {
            vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]
        } else {
            random_complex(n, 11 + n as u64)
        };
        let want = matvec(&h, &v);
        let got = wht_1d(&v).unwrap();
        assert!(max_diff(&got, &want) < 1e-10, "n={n}");
    }
}

#[test]
fn noiselet_matches_dense_recursion() {
    for n in [1usize, 2, 4, 8, 16, 32, 64] {
        let nm = dense_noiselet(n);
        let v = random_complex(n, 23 + n as u64);
        let want = matvec(&nm, &v);
        let got = noiselet_1d(&v).unwrap();
        assert!(max_diff(&got, &want) < 1e-10, "n={n}");
    }
}

#[test]
fn noiselet_adjoint_matches_dense_conjugate_transpose() {
    let n = 8;
    let na = adjoint(&dense_noiselet(n));
    let v = random_complex(n, 99);
    let want = matvec(&na, &v);
    let got = noiselet_adjoint_1d(&v).unwrap();
    assert!(max_diff(&got, &want) < 1e-10);
}

#[test]
fn dft_matches_naive_summation() {
    // includes the 4-point worked case [1,2,3,4]
    for n in [1usize, 2, 4, 8, 16, 32, 64] {
        let v = if n == 4 {
            vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]
        } else {
            random_complex(n, 37 + n as u64)
        };
        let want = naive_dft(&v, false);
        let got = dft_1d(&v).unwrap();
        assert!(max_diff(&got, &want) < 1e-10, "n={n}");
        let back = dft_adjoint_1d(&got).unwrap();
        assert!(max_diff(&back, &v) < 1e-10, "n={n} inverse");
    }
}

#[test]
fn transform_2d_matches_kronecker_dense() {
    let side = 4;
    let img_data = random_complex(side * side, 7);
    let img = Signal2D::from_vec(side, img_data.clone()).unwrap();
    let builders: [(&str, BasisKind, fn(usize) -> Matrix); 3] = [
        ("wh", BasisKind::WalshHadamard, dense_wht),
        ("noiselet", BasisKind::Noiselet, dense_noiselet),
        ("dft", BasisKind::Fourier, dense_dft),
    ];
    for (name, basis, build) in builders {
        let t1 = build(side);
        let t2 = kron(&t1, &t1);
        let want = matvec(&t2, &img_data);
        let got = transform_2d(&img, basis, Direction::Forward).unwrap();
        assert!(max_diff(got.data(), &want) < 1e-10, "{name} 2d kron");
    }
}

#[test]
fn unitarity_round_trips_up_to_1024() {
    let mut n = 2usize;
    while n <= 1024 {
        let v = random_complex(n, n as u64);
        let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for basis in [BasisKind::WalshHadamard, BasisKind::Noiselet, BasisKind::Fourier] {
            let fwd = match basis {
                BasisKind::WalshHadamard => wht_1d(&v).unwrap(),
                BasisKind::Noiselet => noiselet_1d(&v).unwrap(),
                BasisKind::Fourier => dft_1d(&v).unwrap(),
            };
            let back = match basis {
                BasisKind::WalshHadamard => wht_adjoint_1d(&fwd).unwrap(),
                BasisKind::Noiselet => noiselet_adjoint_1d(&fwd).unwrap(),
                BasisKind::Fourier => dft_adjoint_1d(&fwd).unwrap(),
            };
            let err = max_diff(&back, &v);
            assert!(err <= 1e-10 * vmax, "{basis} n={n}: {err}");
            let rel = (norm2(&fwd) - norm2(&v)).abs() / norm2(&v);
            assert!(rel < 1e-12, "{basis} n={n} parseval: {rel}");
        }
        n *= 2;
    }
}

mod prop {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip_recovers_any_signal(
            exp in 1usize..8,
            seed in any::<u64>(),
        ) {
            let n = 1usize << exp;
            let v = random_complex(n, seed);
            let scale = v.iter().map(|z| z.norm()).fold(1e-300, f64::max);
            for (fwd, back) in [
                (wht_1d(&v).unwrap(), wht_adjoint_1d(&wht_1d(&v).unwrap()).unwrap()),
                (noiselet_1d(&v).unwrap(), noiselet_adjoint_1d(&noiselet_1d(&v).unwrap()).unwrap()),
                (dft_1d(&v).unwrap(), dft_adjoint_1d(&dft_1d(&v).unwrap()).unwrap()),
            ] {
                prop_assert!((norm2(&fwd) - norm2(&v)).abs() <= 1e-11 * norm2(&v).max(1e-30));
                prop_assert!(max_diff(&back, &v) <= 1e-10 * scale);
            }
        }
    }
}
