//! Scene composition: background models and target placement.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use crate::detection::Truth;
use crate::seeds::combine;
use crate::sensing::gaussian;
use crate::signal::{Complex64, Signal2D};
use crate::xforms::{transform_2d_inplace, BasisKind, Direction};
use crate::{Error, Result};

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Scene background model.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    /// Constant level.
    Flat { level: f64 },
    /// Low-pass-filtered seeded white noise; `correlation_length` (pixels)
    /// sets the Gaussian cutoff driving the spatial correlation scale, and
    /// pixel values span roughly [0, amplitude].
    Textured {
        seed: u64,
        correlation_length: f64,
        amplitude: f64,
    },
}

/// Where targets go.
#[derive(Debug, Clone, PartialEq)]
pub enum Placements {
    /// Explicit (label, row, col) list; boxes must be disjoint and inside.
    Fixed(Vec<Truth>),
    /// `count` objects with labels drawn uniformly from the target set and
    /// positions rejection-sampled to be non-overlapping.
    Random {
        count_min: usize,
        count_max: usize,
        seed: u64,
    },
    /// Exactly one object of every target class, randomly positioned.
    OneOfEach { seed: u64 },
}

/// Full description of a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub side: usize,
    pub background: Background,
    pub placements: Placements,
    pub bit_depth: u8,
}

impl SceneSpec {
    /// Per-trial variant: randomized placements (and the textured background
    /// with them) get trial-mixed seeds; fixed placements stay fixed so the
    /// scene is identical across trials and only the measurement varies.
    pub fn for_trial(&self, trial_seed: u64) -> SceneSpec {
        let mut spec = self.clone();
        let randomized = !matches!(spec.placements, Placements::Fixed(_));
        if randomized {
            match &mut spec.placements {
                Placements::Random { seed, .. } | Placements::OneOfEach { seed } => {
                    *seed = combine(*seed, trial_seed, 0x50);
                }
                Placements::Fixed(_) => {}
            }
            if let Background::Textured { seed, .. } = &mut spec.background {
                *seed = combine(*seed, trial_seed, 0x42);
            }
        }
        spec
    }

    pub fn max_value(&self) -> f64 {
        ((1u32 << self.bit_depth) - 1) as f64
    }
}

fn background_plane(spec: &SceneSpec) -> Result<Signal2D> {
    let side = spec.side;
    match spec.background {
        Background::Flat { level } => {
            let v = level.clamp(0.0, spec.max_value());
            Ok(Signal2D::from_fn(side, |_, _| Complex64::new(v, 0.0)))
        }
        Background::Textured {
            seed,
            correlation_length,
            amplitude,
        } => {
            let nonneg = |v: f64| v.is_finite() && v >= 0.0;
            if !nonneg(correlation_length) || !nonneg(amplitude) {
                return Err(Error::Parameter(
                    "correlation_length and amplitude must be nonnegative".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut field = Signal2D::zeros(side);
            for z in field.data_mut() {
                let (g, _) = gaussian(&mut rng);
                *z = Complex64::new(g, 0.0);
            }
            // Gaussian low-pass in the Fourier domain: amplitude mask
            // exp(−(2π‖f‖ℓ)²/4) over wrapped frequencies f in cycles/pixel
            transform_2d_inplace(&mut field, BasisKind::Fourier, Direction::Forward)?;
            let freq = |k: usize| -> f64 {
                let w = if k <= side / 2 { k as f64 } else { k as f64 - side as f64 };
                w / side as f64
            };
            for r in 0..side {
                for c in 0..side {
                    let f2 = freq(r).powi(2) + freq(c).powi(2);
                    let mask =
                        (-(std::f64::consts::TAU.powi(2) * f2 * correlation_length.powi(2)) / 4.0)
                            .exp();
                    let v = field.at(r, c) * mask;
                    field.set(r, c, v);
                }
            }
            transform_2d_inplace(&mut field, BasisKind::Fourier, Direction::Adjoint)?;

            let n = field.len() as f64;
            let mean = field.data().iter().map(|z| z.re).sum::<f64>() / n;
            let var = field.data().iter().map(|z| (z.re - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt().max(1e-12);
            let maxv = spec.max_value();
            Ok(Signal2D::from_fn(side, |r, c| {
                let g = (field.at(r, c).re - mean) / std;
                let v = (amplitude * 0.5 + amplitude / 6.0 * g).clamp(0.0, maxv.min(amplitude));
                Complex64::new(v, 0.0)
            }))
        }
    }
}

fn boxes_disjoint(a: (usize, usize, usize), b: (usize, usize, usize)) -> bool {
    let (ar, ac, asz) = a;
    let (br, bc, bsz) = b;
    ar + asz <= br || br + bsz <= ar || ac + asz <= bc || bc + bsz <= ac
}

/// Composite targets onto the background and return scene plus ground truth.
pub fn generate_scene(
    spec: &SceneSpec,
    targets: &[(String, Signal2D)],
) -> Result<(Signal2D, Vec<Truth>)> {
    if !spec.side.is_power_of_two() || spec.side == 0 {
        return Err(Error::Size(format!("scene side {} is not a power of two", spec.side)));
    }
    if targets.is_empty() {
        return Err(Error::Parameter("no target classes available".into()));
    }
    let target_of = |label: &str| -> Result<&Signal2D> {
        targets
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, img)| img)
            .ok_or_else(|| Error::Parameter(format!("placement references unknown label '{label}'")))
    };

    // resolve placements into (label, row, col)
    let mut placed: Vec<(String, usize, usize, usize)> = Vec::new(); // + box side
    let place_random = |labels: &[String], seed: u64, placed: &mut Vec<(String, usize, usize, usize)>| -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for label in labels {
            let timg = target_of(label)?;
            let tside = timg.side();
            if tside > spec.side {
                return Err(Error::Size(format!(
                    "target '{label}' ({tside}) larger than scene ({})",
                    spec.side
                )));
            }
            let mut ok = false;
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let row = rng.gen_range(0..=spec.side - tside);
                let col = rng.gen_range(0..=spec.side - tside);
                if placed.iter().all(|p| boxes_disjoint((p.1, p.2, p.3), (row, col, tside))) {
                    placed.push((label.clone(), row, col, tside));
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(Error::Congestion(format!(
                    "no room for '{label}' after {MAX_PLACEMENT_ATTEMPTS} attempts"
                )));
            }
        }
        Ok(())
    };

    match &spec.placements {
        Placements::Fixed(list) => {
            for (label, row, col) in list {
                let timg = target_of(label)?;
                let tside = timg.side();
                if row + tside > spec.side || col + tside > spec.side {
                    return Err(Error::Parameter(format!(
                        "placement of '{label}' at ({row},{col}) exceeds the scene"
                    )));
                }
                if !placed.iter().all(|p| boxes_disjoint((p.1, p.2, p.3), (*row, *col, tside))) {
                    return Err(Error::Parameter(format!(
                        "placement of '{label}' at ({row},{col}) overlaps another target"
                    )));
                }
                placed.push((label.clone(), *row, *col, tside));
            }
        }
        Placements::Random {
            count_min,
            count_max,
            seed,
        } => {
            if *count_min == 0 || count_min > count_max {
                return Err(Error::Parameter(format!(
                    "bad count range {count_min}..={count_max}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(combine(*seed, 0x43, 0));
            let count = rng.gen_range(*count_min..=*count_max);
            let labels: Vec<String> = (0..count)
                .map(|_| targets[rng.gen_range(0..targets.len())].0.clone())
                .collect();
            place_random(&labels, *seed, &mut placed)?;
        }
        Placements::OneOfEach { seed } => {
            let labels: Vec<String> = targets.iter().map(|(l, _)| l.clone()).collect();
            place_random(&labels, *seed, &mut placed)?;
        }
    }

    // composite additively, clip to bit depth
    let mut scene = background_plane(spec)?;
    let maxv = spec.max_value();
    for (label, row, col, tside) in &placed {
        let timg = target_of(label)?;
        for r in 0..*tside {
            for c in 0..*tside {
                let v = (scene.at(row + r, col + c).re + timg.at(r, c).re).clamp(0.0, maxv);
                scene.set(row + r, col + c, Complex64::new(v, 0.0));
            }
        }
    }
    let truth = placed.into_iter().map(|(l, r, c, _)| (l, r, c)).collect();
    Ok((scene, truth))
}
