//! Circulant filter operators and phase-only filters.
//!
//! A circulant operator is applied as diagonal multiplication in the Fourier
//! domain: T = F†·diag(ĥ)·F with F the unitary 2D DFT. Under this convention
//! T·v = n^{-1/2}·(h ⊛ v), so the textbook circular convolution carries an
//! extra √n which [`pof_correlate`] applies for correlation planes.
//!
//! When every |ĥ_k| = 1 the operator is unitary — the property that makes
//! phase-only filters usable as compression matrices. A matched phase-only
//! filter takes the conjugate phase of the target spectrum, so correlating
//! it with a scene containing the target produces a sharp peak at the
//! target position.

use crate::signal::{Complex64, Signal2D};
use crate::xforms::{transform_2d, transform_2d_inplace, BasisKind, Direction};
use crate::{Error, Result};

/// Relative threshold below which a spectral bin counts as zero-modulus.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Complex 2D array in the Fourier domain defining a circulant filter.
/// Frequencies are laid out exactly as produced by the unitary 2D DFT:
/// DC at index (0, 0), negative frequencies wrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    values: Signal2D,
}

impl TransferFunction {
    pub fn new(values: Signal2D) -> Self {
        Self { values }
    }

    /// ĥ ≡ 1, the identity filter.
    pub fn identity(side: usize) -> Self {
        Self {
            values: Signal2D::from_fn(side, |_, _| Complex64::new(1.0, 0.0)),
        }
    }

    pub fn side(&self) -> usize {
        self.values.side()
    }

    pub fn values(&self) -> &Signal2D {
        &self.values
    }

    pub fn into_values(self) -> Signal2D {
        self.values
    }

    /// True when every bin modulus is within `tol` of 1.
    pub fn is_unit_modulus(&self, tol: f64) -> bool {
        self.values
            .data()
            .iter()
            .all(|z| (z.norm() - 1.0).abs() <= tol)
    }
}

/// Circulant operator T = F†·diag(ĥ)·F over square power-of-two planes.
#[derive(Debug, Clone)]
pub struct CirculantOperator {
    transfer: TransferFunction,
}

impl CirculantOperator {
    pub fn new(transfer: TransferFunction) -> Self {
        Self { transfer }
    }

    pub fn identity(side: usize) -> Self {
        Self::new(TransferFunction::identity(side))
    }

    pub fn side(&self) -> usize {
        self.transfer.side()
    }

    pub fn transfer(&self) -> &TransferFunction {
        &self.transfer
    }

    /// Operator with conjugated transfer — the adjoint T† as a standalone
    /// operator. For a matched phase-only filter this is the synthesis
    /// operator that maps a correlation plane back toward the scene.
    pub fn conjugated(&self) -> Self {
        let side = self.side();
        let vals = Signal2D::from_fn(side, |r, c| self.transfer.values.at(r, c).conj());
        Self::new(TransferFunction::new(vals))
    }

    /// Apply T (forward) or T† (adjoint): F†((ĥ or ĥ*) ⊙ F·v).
    pub fn apply(&self, v: &Signal2D, direction: Direction) -> Result<Signal2D> {
        if v.side() != self.side() {
            return Err(Error::Size(format!(
                "operator side {} does not match signal side {}",
                self.side(),
                v.side()
            )));
        }
        let mut spec = transform_2d(v, BasisKind::Fourier, Direction::Forward)?;
        let h = self.transfer.values.data();
        for (s, hk) in spec.data_mut().iter_mut().zip(h) {
            *s *= match direction {
                Direction::Forward => *hk,
                Direction::Adjoint => hk.conj(),
            };
        }
        transform_2d_inplace(&mut spec, BasisKind::Fourier, Direction::Adjoint)?;
        Ok(spec)
    }
}

/// Apply a circulant operator; thin functional wrapper over
/// [`CirculantOperator::apply`].
pub fn apply_circulant(
    op: &CirculantOperator,
    v: &Signal2D,
    direction: Direction,
) -> Result<Signal2D> {
    op.apply(v, direction)
}

/// Build the matched phase-only filter for a reference image.
///
/// The reference must already be embedded (zero-padded, top-left anchored)
/// into the full scene shape. The transfer is ĥ_k = r̂*_k/|r̂_k|; bins whose
/// modulus falls at or below `zero_tol`·max|r̂| are set to 1 so the operator
/// stays unit-modulus (and therefore unitary) everywhere. The unit fill for
/// empty bins is a convention of this crate: any unit-modulus value keeps
/// the operator unitary, and those bins carry no reference information.
pub fn make_pof(reference: &Signal2D, zero_tol: f64) -> Result<CirculantOperator> {
    let spectrum = transform_2d(reference, BasisKind::Fourier, Direction::Forward)?;
    let max_mod = spectrum.max_abs();
    if max_mod == 0.0 {
        return Err(Error::Degenerate("all-zero reference image".into()));
    }
    let threshold = zero_tol.max(0.0) * max_mod;
    let side = reference.side();
    let vals = Signal2D::from_fn(side, |r, c| {
        let z = spectrum.at(r, c);
        let m = z.norm();
        if m > threshold {
            z.conj() / m
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    Ok(CirculantOperator::new(TransferFunction::new(vals)))
}

/// Correlation of a scene with a matched phase-only filter:
/// s = h_POF ∗ x = √n·T_POF·x. The squared modulus of the result carries
/// detection peaks at the positions of recognized targets.
pub fn pof_correlate(op: &CirculantOperator, scene: &Signal2D) -> Result<Signal2D> {
    let mut s = op.apply(scene, Direction::Forward)?;
    s.scale((s.len() as f64).sqrt());
    Ok(s)
}

/// Spectral whitening for pure-phase correlation: x̂′_k = x̂_k/|x̂_k|, with
/// the same unit fill rule for zero-modulus bins as [`make_pof`].
pub fn whiten(scene: &Signal2D, zero_tol: f64) -> Result<Signal2D> {
    let mut spectrum = transform_2d(scene, BasisKind::Fourier, Direction::Forward)?;
    let max_mod = spectrum.max_abs();
    if max_mod == 0.0 {
        return Err(Error::Degenerate("all-zero scene".into()));
    }
    let threshold = zero_tol.max(0.0) * max_mod;
    for z in spectrum.data_mut() {
        let m = z.norm();
        *z = if m > threshold {
            *z / m
        } else {
            Complex64::new(1.0, 0.0)
        };
    }
    transform_2d_inplace(&mut spectrum, BasisKind::Fourier, Direction::Adjoint)?;
    Ok(spectrum)
}

/// Fresnel propagation transfer function over distance `l`:
/// ĥ(ν_x, ν_y) = exp(−2πi·l/λ)·exp(iπλl(ν_x² + ν_y²)),
/// sampled on the wrapped discrete frequency grid ν = k/(side·pixel_pitch).
/// Pure-phase by construction, so propagation is a unitary circulant filter.
pub fn fresnel_transfer(
    side: usize,
    wavelength: f64,
    distance: f64,
    pixel_pitch: f64,
) -> Result<TransferFunction> {
    if !side.is_power_of_two() || side == 0 {
        return Err(Error::Size(format!("side {side} is not a power of two")));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(wavelength) || !positive(pixel_pitch) || !(distance.is_finite() && distance >= 0.0)
    {
        return Err(Error::Parameter(
            "wavelength and pixel_pitch must be positive, distance nonnegative".into(),
        ));
    }
    let freq = |k: usize| -> f64 {
        let w = if k <= side / 2 { k as isize } else { k as isize - side as isize };
        w as f64 / (side as f64 * pixel_pitch)
    };
    let piston = -2.0 * std::f64::consts::PI * distance / wavelength;
    let vals = Signal2D::from_fn(side, |r, c| {
        let (fy, fx) = (freq(r), freq(c));
        let phase = piston + std::f64::consts::PI * wavelength * distance * (fx * fx + fy * fy);
        Complex64::new(phase.cos(), phase.sin())
    });
    Ok(TransferFunction::new(vals))
}
