//! Independent dense oracles shared by the integration and acceptance suites.
//!
//! Everything here is built directly from the defining recursions and naive
//! O(n²) summation — no code path is shared with the fast implementations
//! they are used to check.

#![allow(dead_code)]

use num_complex::Complex64;

pub type Matrix = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense orthonormal Walsh-Hadamard matrix from the recursion
/// H_{2m} = 2^{-1/2}·[[H_m, H_m], [H_m, −H_m]], H_1 = 1.
pub fn dense_wht(n: usize) -> Matrix {
    assert!(n.is_power_of_two());
    let mut h: Matrix = vec![vec![c(1.0, 0.0)]];
    let mut m = 1;
    while m < n {
        let s = 1.0 / 2.0_f64.sqrt();
        let mut next = vec![vec![c(0.0, 0.0); 2 * m]; 2 * m];
        for r in 0..m {
            for col in 0..m {
                let v = h[r][col] * s;
                next[r][col] = v;
                next[r][col + m] = v;
                next[r + m][col] = v;
                next[r + m][col + m] = -v;
            }
        }
        h = next;
        m *= 2;
    }
    h
}

/// Dense unitary noiselet matrix from the recursion
/// N_{2m} = (1/2)·[[(1−i)N_m, (1+i)N_m], [(1+i)N_m, (1−i)N_m]], N_1 = 1.
pub fn dense_noiselet(n: usize) -> Matrix {
    assert!(n.is_power_of_two());
    let mut nm: Matrix = vec![vec![c(1.0, 0.0)]];
    let mut m = 1;
    while m < n {
        let a = c(0.5, -0.5); // (1−i)/2
        let b = c(0.5, 0.5); // (1+i)/2
        let mut next = vec![vec![c(0.0, 0.0); 2 * m]; 2 * m];
        for r in 0..m {
            for col in 0..m {
                let v = nm[r][col];
                next[r][col] = a * v;
                next[r][col + m] = b * v;
                next[r + m][col] = b * v;
                next[r + m][col + m] = a * v;
            }
        }
        nm = next;
        m *= 2;
    }
    nm
}

/// Dense unitary DFT matrix, F_{jk} = n^{-1/2}·exp(−2πi·jk/n).
pub fn dense_dft(n: usize) -> Matrix {
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let phi = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                    c(phi.cos() * s, phi.sin() * s)
                })
                .collect()
        })
        .collect()
}

/// Naive matrix-vector product.
pub fn matvec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Conjugate transpose.
pub fn adjoint(m: &Matrix) -> Matrix {
    let rows = m.len();
    let cols = m[0].len();
    (0..cols)
        .map(|j| (0..rows).map(|i| m[i][j].conj()).collect())
        .collect()
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = (a.len(), a[0].len());
    let (br, bc) = (b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Naive O(n²) unitary DFT by direct summation (independent of any FFT).
pub fn naive_dft(v: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = v.len();
    let sign = if inverse { 2.0 } else { -2.0 };
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let mut acc = c(0.0, 0.0);
            for (j, &x) in v.iter().enumerate() {
                let phi = sign * std::f64::consts::PI * (j * k) as f64 / n as f64;
                acc += x * c(phi.cos(), phi.sin());
            }
            acc * s
        })
        .collect()
}

/// max |a_i − b_i|.
pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Deterministic pseudo-random complex test vectors (splitmix64 driven,
/// independent of the crate's RNG plumbing).
pub fn random_complex(n: usize, seed: u64) -> Vec<Complex64> {
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        // map to [-1, 1)
        (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    };
    (0..n).map(|_| c(next(), next())).collect()
}

/// Exact ℓ1-ball projection of the modulus vector by bisection on the
/// soft-threshold level — an independent route to the sorted-cumulative-sum
/// algorithm used by the solver.
pub fn l1_project_bisection(v: &[Complex64], tau: f64) -> Vec<Complex64> {
    let l1: f64 = v.iter().map(|z| z.norm()).sum();
    if l1 <= tau {
        return v.to_vec();
    }
    if tau == 0.0 {
        return vec![c(0.0, 0.0); v.len()];
    }
    let mut lo = 0.0_f64;
    let mut hi = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = v.iter().map(|z| (z.norm() - mid).max(0.0)).sum();
        if s > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    v.iter()
        .map(|z| {
            let a = z.norm();
            if a <= lambda || a == 0.0 {
                c(0.0, 0.0)
            } else {
                z * ((a - lambda) / a)
            }
        })
        .collect()
}
