//! Fast unitary 1D and 2D transforms: Walsh-Hadamard, noiselet, Fourier.
//!
//! All three bases are defined by two-point recursions, so each factors into
//! log₂ n commuting butterfly stages and runs in O(n log n). In natural
//! (Hadamard) ordering no bit-reversal is needed for the Walsh-Hadamard and
//! noiselet transforms; the radix-2 Fourier transform uses the usual
//! bit-reversal permutation.
//!
//! Normalization is unitary throughout: ‖forward(v)‖₂ = ‖v‖₂, and the
//! adjoint is the exact inverse. The Walsh-Hadamard matrix is real symmetric
//! orthogonal, so its adjoint equals the forward transform. All three
//! matrices are symmetric, which is what makes the separable 2D form
//! (rows, then columns) equal to the Kronecker-product transform.

use crate::signal::{Complex64, Signal2D};
use crate::{Error, Result};

/// Measurement/transform basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    WalshHadamard,
    Noiselet,
    Fourier,
}

impl BasisKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisKind::WalshHadamard => "wh",
            BasisKind::Noiselet => "noiselet",
            BasisKind::Fourier => "dft",
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(BasisKind::WalshHadamard),
            1 => Ok(BasisKind::Noiselet),
            2 => Ok(BasisKind::Fourier),
            other => Err(Error::Format(format!("unknown basis tag {other}"))),
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            BasisKind::WalshHadamard => 0,
            BasisKind::Noiselet => 1,
            BasisKind::Fourier => 2,
        }
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wh" | "walsh-hadamard" | "hadamard" => Ok(BasisKind::WalshHadamard),
            "noiselet" | "noiselets" => Ok(BasisKind::Noiselet),
            "dft" | "fourier" | "fft" => Ok(BasisKind::Fourier),
            other => Err(Error::Parameter(format!("unknown basis '{other}'"))),
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Forward or adjoint (inverse) application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Adjoint,
}

fn check_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Size(format!("length {n} is not a power of two")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Walsh-Hadamard
// ---------------------------------------------------------------------------

/// In-place orthonormal Walsh-Hadamard transform in natural (Hadamard) order.
///
/// Butterfly stages compute unscaled (x+y, x−y) pairs; the 2^{-1/2} factor of
/// every stage is applied once at the end as 1/√n.
pub fn wht_1d_inplace(data: &mut [Complex64]) -> Result<()> {
    let n = data.len();
    check_pow2(n)?;
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let x = data[j];
                let y = data[j + h];
                data[j] = x + y;
                data[j + h] = x - y;
            }
            i += 2 * h;
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
    Ok(())
}

/// Orthonormal Walsh-Hadamard transform, H_n·v.
pub fn wht_1d(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    wht_1d_inplace(&mut out)?;
    Ok(out)
}

/// Adjoint Walsh-Hadamard transform. H is real symmetric orthogonal, so the
/// adjoint equals the forward transform.
pub fn wht_adjoint_1d(v: &[Complex64]) -> Result<Vec<Complex64>> {
    wht_1d(v)
}

// ---------------------------------------------------------------------------
// Noiselet
// ---------------------------------------------------------------------------

/// In-place unitary noiselet transform.
///
/// The stage matrix pairs (x, y) into ((1−i)x + (1+i)y, (1+i)x + (1−i)y)/2,
/// computed as (u ∓ i·d)/2 with u = x+y, d = x−y.
pub fn noiselet_1d_inplace(data: &mut [Complex64]) -> Result<()> {
    noiselet_stages(data, false)
}

/// In-place adjoint (inverse) noiselet transform.
pub fn noiselet_adjoint_1d_inplace(data: &mut [Complex64]) -> Result<()> {
    noiselet_stages(data, true)
}

fn noiselet_stages(data: &mut [Complex64], adjoint: bool) -> Result<()> {
    let n = data.len();
    check_pow2(n)?;
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let x = data[j];
                let y = data[j + h];
                let u = x + y;
                let d = x - y;
                // i·d
                let id = Complex64::new(-d.im, d.re);
                if adjoint {
                    data[j] = (u + id) * 0.5;
                    data[j + h] = (u - id) * 0.5;
                } else {
                    data[j] = (u - id) * 0.5;
                    data[j + h] = (u + id) * 0.5;
                }
            }
            i += 2 * h;
        }
        h *= 2;
    }
    Ok(())
}

/// Unitary noiselet transform, N_n·v.
pub fn noiselet_1d(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    noiselet_1d_inplace(&mut out)?;
    Ok(out)
}

/// Adjoint noiselet transform, N_n†·v (exact inverse).
pub fn noiselet_adjoint_1d(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    noiselet_adjoint_1d_inplace(&mut out)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Fourier
// ---------------------------------------------------------------------------

/// Half-size twiddle table exp(−2πi·k/n), k < n/2, shared by forward and
/// adjoint passes (the adjoint conjugates on the fly).
fn twiddle_table(n: usize) -> Vec<Complex64> {
    let mut tw = Vec::with_capacity(n / 2);
    for k in 0..n / 2 {
        let phi = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
        tw.push(Complex64::new(phi.cos(), phi.sin()));
    }
    tw
}

/// Radix-2 decimation-in-time FFT against a prebuilt twiddle table.
/// `tw.len()` must be `data.len() / 2`. Unitary scaling is NOT applied here.
fn fft_pow2(data: &mut [Complex64], tw: &[Complex64], inverse: bool) {
    let n = data.len();
    debug_assert_eq!(tw.len(), n / 2);
    if n <= 1 {
        return;
    }
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        let mut base = 0;
        while base < n {
            for k in 0..half {
                let mut w = tw[k * step];
                if inverse {
                    w = w.conj();
                }
                let t = w * data[base + half + k];
                let u = data[base + k];
                data[base + k] = u + t;
                data[base + half + k] = u - t;
            }
            base += len;
        }
        len *= 2;
    }
}

/// In-place unitary DFT (1/√n scaling), forward convention e^{−2πi·jk/n}.
pub fn dft_1d_inplace(data: &mut [Complex64]) -> Result<()> {
    let n = data.len();
    check_pow2(n)?;
    let tw = twiddle_table(n);
    fft_pow2(data, &tw, false);
    let scale = 1.0 / (n as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
    Ok(())
}

/// In-place adjoint (inverse) unitary DFT.
pub fn dft_adjoint_1d_inplace(data: &mut [Complex64]) -> Result<()> {
    let n = data.len();
    check_pow2(n)?;
    let tw = twiddle_table(n);
    fft_pow2(data, &tw, true);
    let scale = 1.0 / (n as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
    Ok(())
}

/// Unitary DFT, F_n·v.
pub fn dft_1d(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    dft_1d_inplace(&mut out)?;
    Ok(out)
}

/// Adjoint unitary DFT, F_n†·v (exact inverse).
pub fn dft_adjoint_1d(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    dft_adjoint_1d_inplace(&mut out)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Separable 2D transforms
// ---------------------------------------------------------------------------

/// Apply the chosen 1D transform to every row, then every column, in place.
/// Equals the Kronecker-product 2D transform because all three basis
/// matrices are symmetric; row and column passes commute.
pub fn transform_2d_inplace(
    sig: &mut Signal2D,
    basis: BasisKind,
    direction: Direction,
) -> Result<()> {
    let side = sig.side();
    check_pow2(side)?;
    // Twiddles depend only on the side; build once for the Fourier case.
    let tw = match basis {
        BasisKind::Fourier => twiddle_table(side),
        _ => Vec::new(),
    };
    let scale = 1.0 / (side as f64).sqrt();
    // The Walsh-Hadamard passes run unscaled and pick up one exact 1/side
    // factor at the end: 1/√side per pass is irrational for odd powers of
    // two, while 1/side is a power of two — integer scenes transform
    // without any rounding at all.
    let row_pass = |row: &mut [Complex64]| match (basis, direction) {
        (BasisKind::WalshHadamard, _) => wht_unscaled(row),
        (BasisKind::Noiselet, Direction::Forward) => {
            let _ = noiselet_stages(row, false);
        }
        (BasisKind::Noiselet, Direction::Adjoint) => {
            let _ = noiselet_stages(row, true);
        }
        (BasisKind::Fourier, dir) => {
            fft_pow2(row, &tw, dir == Direction::Adjoint);
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    };

    let data = sig.data_mut();
    for r in 0..side {
        row_pass(&mut data[r * side..(r + 1) * side]);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); side];
    for c in 0..side {
        for r in 0..side {
            col[r] = data[r * side + c];
        }
        row_pass(&mut col);
        for r in 0..side {
            data[r * side + c] = col[r];
        }
    }
    if basis == BasisKind::WalshHadamard {
        let full = 1.0 / side as f64;
        for v in data.iter_mut() {
            *v *= full;
        }
    }
    Ok(())
}

fn wht_unscaled(data: &mut [Complex64]) {
    let n = data.len();
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let x = data[j];
                let y = data[j + h];
                data[j] = x + y;
                data[j + h] = x - y;
            }
            i += 2 * h;
        }
        h *= 2;
    }
}

/// 2D separable transform of a square power-of-two plane.
pub fn transform_2d(img: &Signal2D, basis: BasisKind, direction: Direction) -> Result<Signal2D> {
    let mut out = img.clone();
    transform_2d_inplace(&mut out, basis, direction)?;
    Ok(out)
}
