//! Compressive measurement operators.
//!
//! A measurement takes m randomly selected coefficients of a unitary basis
//! transform of the scene: y = M·x with M the selected rows of the 2D
//! Walsh-Hadamard, noiselet or Fourier matrix. The sensing operator used for
//! recovery composes those rows with a circulant synthesis operator,
//! A = M·T, and is semi-unitary (A·A† = I) whenever T has a unit-modulus
//! transfer — the property that keeps lasso recovery fast and
//! well-conditioned.
//!
//! For matched-filter detection the synthesis operator is the adjoint of
//! the matched phase-only filter, so the sparse plane the solver recovers is
//! the correlation plane itself.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use std::collections::HashMap;

use crate::filtering::{whiten, CirculantOperator, DEFAULT_ZERO_TOL};
use crate::signal::{Complex64, Signal2D};
use crate::xforms::{transform_2d, transform_2d_inplace, BasisKind, Direction};
use crate::{Error, Result};

/// A deterministic uniform sample of m distinct basis row indices in [0, n).
/// Indices are stored sorted ascending; regeneration from (seed, n, m, basis)
/// reproduces them exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSelection {
    pub basis: BasisKind,
    pub n: usize,
    pub seed: u64,
    indices: Vec<usize>,
}

impl RowSelection {
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Compression ratio ρ = n/m (scene pixels per measurement).
    pub fn compression_ratio(&self) -> f64 {
        self.n as f64 / self.m() as f64
    }
}

/// Uniform sample without replacement of m of the n basis rows, by a seeded
/// partial Fisher-Yates shuffle (sparse: O(m) memory via displacement map).
pub fn select_rows(basis: BasisKind, n: usize, m: usize, seed: u64) -> Result<RowSelection> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Size(format!("n = {n} is not a power of two")));
    }
    if m == 0 || m > n {
        return Err(Error::Parameter(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut displaced: HashMap<usize, usize> = HashMap::new();
    let mut indices = Vec::with_capacity(m);
    for i in 0..m {
        let j = rng.gen_range(i..n);
        let value_j = *displaced.get(&j).unwrap_or(&j);
        let value_i = *displaced.get(&i).unwrap_or(&i);
        indices.push(value_j);
        displaced.insert(j, value_i);
    }
    indices.sort_unstable();
    Ok(RowSelection { basis, n, seed, indices })
}

/// One compressive measurement: the selected transform coefficients plus all
/// metadata needed to reproduce it.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub samples: Vec<Complex64>,
    pub selection: RowSelection,
    /// True when the samples were taken of the whitened scene x′ (PPC mode).
    pub whitened: bool,
    /// Signal-to-noise ratio of injected noise; +∞ means noiseless.
    pub snr_db: f64,
    pub noise_seed: u64,
    /// Per-sample noise standard deviation actually injected (0 when clean).
    /// Carried in memory for solvers that target the known residual level;
    /// not part of the serialized format, where it is re-estimated from
    /// `snr_db` on load.
    pub noise_sigma: f64,
}

impl Measurement {
    pub fn compression_ratio(&self) -> f64 {
        self.selection.compression_ratio()
    }
}

/// Measure a scene: full basis transform of the (optionally whitened) scene,
/// then extraction of the selected coefficients. Equivalent to applying the
/// m selected rows at O(n log n) total cost.
pub fn measure(scene: &Signal2D, selection: &RowSelection, whitened: bool) -> Result<Measurement> {
    if scene.len() != selection.n {
        return Err(Error::Size(format!(
            "scene has {} samples but selection expects n = {}",
            scene.len(),
            selection.n
        )));
    }
    let prepared = if whitened {
        whiten(scene, DEFAULT_ZERO_TOL)?
    } else {
        scene.clone()
    };
    let spectrum = transform_2d(&prepared, selection.basis, Direction::Forward)?;
    let samples = selection
        .indices
        .iter()
        .map(|&i| spectrum.data()[i])
        .collect();
    Ok(Measurement {
        samples,
        selection: selection.clone(),
        whitened,
        snr_db: f64::INFINITY,
        noise_seed: 0,
        noise_sigma: 0.0,
    })
}

/// The combined recovery operator A = M·T: circulant synthesis followed by
/// basis transform and row extraction. With no circulant, A = M.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    selection: RowSelection,
    circulant: Option<CirculantOperator>,
}

impl SensingOperator {
    /// Compose the selection with a synthesis circulant (applied forward in
    /// [`SensingOperator::apply`]). Pass `None` for A = M.
    pub fn new(selection: RowSelection, circulant: Option<CirculantOperator>) -> Result<Self> {
        if let Some(ref op) = circulant {
            if op.side() * op.side() != selection.n {
                return Err(Error::Size(format!(
                    "circulant side {} incompatible with n = {}",
                    op.side(),
                    selection.n
                )));
            }
        }
        Ok(Self { selection, circulant })
    }

    /// Sensing operator for matched-filter detection: stores the conjugated
    /// matched filter as the synthesis operator, so that the plane solving
    /// A·s ≈ y is the matched-filter correlation plane of the scene.
    pub fn for_matched_pof(selection: RowSelection, matched: &CirculantOperator) -> Result<Self> {
        Self::new(selection, Some(matched.conjugated()))
    }

    pub fn selection(&self) -> &RowSelection {
        &self.selection
    }

    pub fn circulant(&self) -> Option<&CirculantOperator> {
        self.circulant.as_ref()
    }

    pub fn n(&self) -> usize {
        self.selection.n
    }

    pub fn m(&self) -> usize {
        self.selection.m()
    }

    pub fn side(&self) -> usize {
        (self.selection.n as f64).sqrt() as usize
    }

    /// A·s: circulant forward, basis transform, row extraction.
    pub fn apply(&self, s: &Signal2D) -> Result<Vec<Complex64>> {
        if s.len() != self.selection.n {
            return Err(Error::Size(format!(
                "plane has {} samples, operator expects {}",
                s.len(),
                self.selection.n
            )));
        }
        let mut work = match &self.circulant {
            Some(op) => op.apply(s, Direction::Forward)?,
            None => s.clone(),
        };
        transform_2d_inplace(&mut work, self.selection.basis, Direction::Forward)?;
        Ok(self
            .selection
            .indices
            .iter()
            .map(|&i| work.data()[i])
            .collect())
    }

    /// A†·y: scatter samples into their coefficient slots, inverse basis
    /// transform, adjoint circulant.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<Signal2D> {
        if y.len() != self.selection.m() {
            return Err(Error::Size(format!(
                "measurement has {} samples, operator expects m = {}",
                y.len(),
                self.selection.m()
            )));
        }
        let side = self.side();
        let mut work = Signal2D::zeros(side);
        for (&i, &v) in self.selection.indices.iter().zip(y) {
            work.data_mut()[i] = v;
        }
        transform_2d_inplace(&mut work, self.selection.basis, Direction::Adjoint)?;
        match &self.circulant {
            Some(op) => op.apply(&work, Direction::Adjoint),
            None => Ok(work),
        }
    }
}

/// Functional wrappers mirroring the operator methods.
pub fn apply_a(op: &SensingOperator, s: &Signal2D) -> Result<Vec<Complex64>> {
    op.apply(s)
}

pub fn apply_a_adjoint(op: &SensingOperator, y: &[Complex64]) -> Result<Signal2D> {
    op.apply_adjoint(y)
}

/// Draw standard normal pairs by Box-Muller from a seeded ChaCha stream.
pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // u1 in (0, 1] so the log is finite
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    (r * phi.cos(), r * phi.sin())
}

/// Add zero-mean Gaussian white noise at the given SNR (dB).
///
/// Noise power is referenced to the AC part of the samples (mean removed
/// before power estimation): σ² = P_ac·10^(−snr_db/10). Real-valued sample
/// vectors get real noise; complex ones get independent real/imaginary
/// components of variance σ²/2 each. `snr_db = +∞` returns the measurement
/// unchanged.
pub fn add_noise(meas: &Measurement, snr_db: f64, noise_seed: u64) -> Measurement {
    if snr_db.is_infinite() && snr_db > 0.0 {
        let mut out = meas.clone();
        out.snr_db = f64::INFINITY;
        out.noise_sigma = 0.0;
        return out;
    }
    let m = meas.samples.len();
    let mean: Complex64 = meas.samples.iter().sum::<Complex64>() / m as f64;
    let p_ac: f64 = meas
        .samples
        .iter()
        .map(|z| (z - mean).norm_sqr())
        .sum::<f64>()
        / m as f64;
    let sigma2 = p_ac * 10f64.powf(-snr_db / 10.0);
    let sigma = sigma2.sqrt();

    let max_abs = meas.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let is_real = meas
        .samples
        .iter()
        .all(|z| z.im.abs() <= 1e-9 * max_abs.max(1e-300));

    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut samples = Vec::with_capacity(m);
    for &z in &meas.samples {
        let (g0, g1) = gaussian(&mut rng);
        let noisy = if is_real {
            z + Complex64::new(sigma * g0, 0.0)
        } else {
            let s = sigma / 2f64.sqrt();
            z + Complex64::new(s * g0, s * g1)
        };
        samples.push(noisy);
    }
    Measurement {
        samples,
        selection: meas.selection.clone(),
        whitened: meas.whitened,
        snr_db,
        noise_seed,
        noise_sigma: sigma,
    }
}

/// Simulated single-pixel differential measurement with binary patterns.
///
/// Each selected Walsh-Hadamard row w (entries ±n^{-1/2}) becomes the binary
/// illumination pattern b = (1 + √n·w)/2 ∈ {0, 1}. Two detector readings are
/// simulated — b·x + bias and (1−b)·x + bias, each optionally with Gaussian
/// read noise of deviation `reading_sigma` — and their difference is
/// returned. The unknown bias cancels exactly and the difference equals
/// √n·(w·x).
pub fn measure_differential_binary(
    scene: &Signal2D,
    selection: &RowSelection,
    bias: f64,
    reading_sigma: f64,
    noise_seed: u64,
) -> Result<Measurement> {
    if selection.basis != BasisKind::WalshHadamard {
        return Err(Error::Unsupported(
            "differential binary patterns require the Walsh-Hadamard basis".into(),
        ));
    }
    if scene.len() != selection.n {
        return Err(Error::Size(format!(
            "scene has {} samples but selection expects n = {}",
            scene.len(),
            selection.n
        )));
    }
    let max_re = scene.data().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let ok_real = scene.max_imag_abs() <= 1e-12 * max_re.max(1e-300);
    let ok_nonneg = scene.data().iter().all(|z| z.re >= -1e-12 * max_re);
    if !ok_real || !ok_nonneg {
        return Err(Error::Parameter(
            "differential measurement requires a real nonnegative scene".into(),
        ));
    }

    let side = (selection.n as f64).sqrt() as usize;
    let sqrt_n = side as f64; // √n = side, exact for power-of-two sides
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut samples = Vec::with_capacity(selection.m());
    for &idx in selection.indices() {
        // row of the 2D WH matrix = transform of the unit impulse (H symmetric)
        let mut row = Signal2D::zeros(side);
        row.data_mut()[idx] = Complex64::new(1.0, 0.0);
        transform_2d_inplace(&mut row, BasisKind::WalshHadamard, Direction::Forward)?;

        let mut on = 0.0_f64;
        let mut off = 0.0_f64;
        for (w, x) in row.data().iter().zip(scene.data()) {
            let b = 0.5 * (1.0 + sqrt_n * w.re); // exactly 0.0 or 1.0
            on += b * x.re;
            off += (1.0 - b) * x.re;
        }
        let (g0, g1) = gaussian(&mut rng);
        let reading_on = on + bias + reading_sigma * g0;
        let reading_off = off + bias + reading_sigma * g1;
        samples.push(Complex64::new(reading_on - reading_off, 0.0));
    }
    Ok(Measurement {
        samples,
        selection: selection.clone(),
        whitened: false,
        snr_db: f64::INFINITY,
        noise_seed,
        noise_sigma: reading_sigma,
    })
}

/// Optional post-step: uniform b-bit rounding of the samples (symmetric
/// mid-tread quantizer over ±max|y|). Off by default everywhere.
pub fn quantize_samples(meas: &mut Measurement, bits: u32) -> Result<()> {
    if bits == 0 || bits > 52 {
        return Err(Error::Parameter(format!("bits must be in 1..=52, got {bits}")));
    }
    let max_abs = meas
        .samples
        .iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(0.0, f64::max);
    if max_abs == 0.0 {
        return Ok(());
    }
    let step = max_abs / ((1u64 << (bits - 1)) as f64);
    for z in &mut meas.samples {
        z.re = (z.re / step).round() * step;
        z.im = (z.im / step).round() * step;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtering::make_pof;
    use crate::signal::{dot_re, max_abs_diff, norm_l2};

    fn test_scene(side: usize, seed: u64) -> Signal2D {
        let mut state = seed;
        Signal2D::from_fn(side, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            Complex64::new(((state >> 40) & 0xff) as f64, 0.0)
        })
    }

    #[test]
    fn full_selection_is_identity_permutation() {
        let sel = select_rows(BasisKind::WalshHadamard, 16, 16, 7).unwrap();
        assert_eq!(sel.indices(), (0..16).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn selection_is_deterministic_and_distinct() {
        let a = select_rows(BasisKind::Noiselet, 1 << 12, 200, 99).unwrap();
        let b = select_rows(BasisKind::Noiselet, 1 << 12, 200, 99).unwrap();
        assert_eq!(a, b);
        let mut sorted = a.indices().to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), 200);
        assert!(a.indices().windows(2).all(|w| w[0] < w[1]));
        let c = select_rows(BasisKind::Noiselet, 1 << 12, 200, 100).unwrap();
        assert_ne!(a.indices(), c.indices());
    }

    #[test]
    fn selection_rejects_bad_m() {
        assert!(select_rows(BasisKind::Fourier, 16, 17, 0).is_err());
        assert!(select_rows(BasisKind::Fourier, 16, 0, 0).is_err());
        assert!(select_rows(BasisKind::Fourier, 12, 4, 0).is_err());
    }

    #[test]
    fn complete_wh_measurement_inverts() {
        let scene = test_scene(8, 3);
        let sel = select_rows(BasisKind::WalshHadamard, 64, 64, 1).unwrap();
        let meas = measure(&scene, &sel, false).unwrap();
        let mut plane = Signal2D::from_vec(8, meas.samples.clone()).unwrap();
        transform_2d_inplace(&mut plane, BasisKind::WalshHadamard, Direction::Adjoint).unwrap();
        assert!(max_abs_diff(plane.data(), scene.data()) < 1e-10);
    }

    #[test]
    fn whitened_measurement_is_compositional() {
        let scene = test_scene(8, 5);
        let sel = select_rows(BasisKind::Noiselet, 64, 20, 2).unwrap();
        let direct = measure(&scene, &sel, true).unwrap();
        let pre = whiten(&scene, DEFAULT_ZERO_TOL).unwrap();
        let manual = measure(&pre, &sel, false).unwrap();
        assert!(max_abs_diff(&direct.samples, &manual.samples) < 1e-12);
    }

    #[test]
    fn apply_with_identity_pof_and_full_selection_is_basis_transform() {
        let sel = select_rows(BasisKind::Fourier, 64, 64, 3).unwrap();
        let op = SensingOperator::new(sel, None).unwrap();
        let s = test_scene(8, 7);
        let y = op.apply(&s).unwrap();
        let want = transform_2d(&s, BasisKind::Fourier, Direction::Forward).unwrap();
        assert!(max_abs_diff(&y, want.data()) < 1e-12);
        // adjoint of a full unitary selection is the inverse transform
        let back = op.apply_adjoint(&y).unwrap();
        assert!(max_abs_diff(back.data(), s.data()) < 1e-10);
    }

    #[test]
    fn semi_unitarity_and_adjoint_identity() {
        let side = 16;
        let n = side * side;
        let reference = test_scene(side, 11);
        let pof = make_pof(&reference, DEFAULT_ZERO_TOL).unwrap();
        for basis in [BasisKind::WalshHadamard, BasisKind::Noiselet, BasisKind::Fourier] {
            let sel = select_rows(basis, n, 40, 13).unwrap();
            let op = SensingOperator::for_matched_pof(sel, &pof).unwrap();
            // A·A† = I_m on a random probe
            let y: Vec<Complex64> = (0..40)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.61).cos()))
                .collect();
            let round = op.apply(&op.apply_adjoint(&y).unwrap()).unwrap();
            assert!(max_abs_diff(&round, &y) < 1e-10, "{basis}");
            // ⟨A·s, y⟩ = ⟨s, A†·y⟩
            let s = test_scene(side, 17);
            let as_ = op.apply(&s).unwrap();
            let aty = op.apply_adjoint(&y).unwrap();
            let lhs = dot_re(&as_, &y);
            let rhs = dot_re(s.data(), aty.data());
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0), "{basis}");
            // rows orthonormal → contraction
            assert!(norm_l2(&as_) <= s.norm_l2() * (1.0 + 1e-12), "{basis}");
        }
    }

    #[test]
    fn noise_is_deterministic_and_infinite_snr_is_noop() {
        let scene = test_scene(8, 19);
        let sel = select_rows(BasisKind::WalshHadamard, 64, 32, 5).unwrap();
        let clean = measure(&scene, &sel, false).unwrap();
        let same = add_noise(&clean, f64::INFINITY, 77);
        assert_eq!(
            clean.samples.iter().map(|z| z.re.to_bits()).collect::<Vec<_>>(),
            same.samples.iter().map(|z| z.re.to_bits()).collect::<Vec<_>>()
        );
        let n1 = add_noise(&clean, 0.0, 42);
        let n2 = add_noise(&clean, 0.0, 42);
        assert_eq!(
            n1.samples.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect::<Vec<_>>(),
            n2.samples.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect::<Vec<_>>()
        );
        assert_ne!(
            n1.samples.iter().map(|z| z.re.to_bits()).collect::<Vec<_>>(),
            add_noise(&clean, 0.0, 43).samples.iter().map(|z| z.re.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn zero_db_noise_matches_ac_signal_power() {
        // empirical noise power / AC signal power → 1 within 5% at 10⁴ samples
        let side = 128;
        let scene = test_scene(side, 23);
        let sel = select_rows(BasisKind::WalshHadamard, side * side, 10_000, 29).unwrap();
        let clean = measure(&scene, &sel, false).unwrap();
        let noisy = add_noise(&clean, 0.0, 31);
        let mean: Complex64 =
            clean.samples.iter().sum::<Complex64>() / clean.samples.len() as f64;
        let p_sig: f64 = clean.samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>()
            / clean.samples.len() as f64;
        let p_noise: f64 = clean
            .samples
            .iter()
            .zip(&noisy.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / clean.samples.len() as f64;
        let ratio = p_noise / p_sig;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn differential_equals_scaled_wh_sample_exactly() {
        let side = 16;
        let scene = test_scene(side, 37); // integer-valued pixels
        let sel = select_rows(BasisKind::WalshHadamard, side * side, 24, 41).unwrap();
        let plain = measure(&scene, &sel, false).unwrap();
        for bias in [0.0, 1.0e6] {
            let diff = measure_differential_binary(&scene, &sel, bias, 0.0, 0).unwrap();
            for (d, y) in diff.samples.iter().zip(&plain.samples) {
                // integer pixel sums and power-of-two scales: bitwise exact
                assert_eq!(d.re, side as f64 * y.re);
                assert_eq!(d.im, 0.0);
            }
        }
    }

    #[test]
    fn differential_noise_variance_doubles() {
        let side = 8;
        let scene = test_scene(side, 43);
        let sel = select_rows(BasisKind::WalshHadamard, 64, 16, 47).unwrap();
        let truth = measure_differential_binary(&scene, &sel, 0.0, 0.0, 0).unwrap();
        let sigma = 3.0;
        let mut sq_sum = 0.0;
        let mut count = 0usize;
        for trial in 0..400u64 {
            let noisy = measure_differential_binary(&scene, &sel, 5.0, sigma, 1000 + trial).unwrap();
            for (a, b) in noisy.samples.iter().zip(&truth.samples) {
                sq_sum += (a.re - b.re).powi(2);
                count += 1;
            }
        }
        let var = sq_sum / count as f64;
        let expect = 2.0 * sigma * sigma;
        assert!((var / expect - 1.0).abs() < 0.15, "var {var} vs {expect}");
    }

    #[test]
    fn differential_requires_wh_and_real_scene() {
        let scene = test_scene(8, 53);
        let sel = select_rows(BasisKind::Fourier, 64, 8, 59).unwrap();
        assert!(matches!(
            measure_differential_binary(&scene, &sel, 0.0, 0.0, 0),
            Err(Error::Unsupported(_))
        ));
        let sel_wh = select_rows(BasisKind::WalshHadamard, 64, 8, 59).unwrap();
        let complex_scene = Signal2D::from_fn(8, |r, c| Complex64::new(r as f64, c as f64));
        assert!(measure_differential_binary(&complex_scene, &sel_wh, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn quantization_rounds_to_grid() {
        let scene = test_scene(8, 61);
        let sel = select_rows(BasisKind::WalshHadamard, 64, 16, 67).unwrap();
        let mut meas = measure(&scene, &sel, false).unwrap();
        let orig = meas.samples.clone();
        quantize_samples(&mut meas, 8).unwrap();
        let max_abs = orig.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let step = max_abs / 128.0;
        for (q, o) in meas.samples.iter().zip(&orig) {
            assert!((q.re - o.re).abs() <= step / 2.0 + 1e-12);
        }
        assert!(quantize_samples(&mut meas, 0).is_err());
    }

    #[test]
    fn compression_ratio_bookkeeping() {
        let sel = select_rows(BasisKind::WalshHadamard, 1 << 14, 256, 71).unwrap();
        assert_eq!(sel.compression_ratio(), 64.0);
    }
}
