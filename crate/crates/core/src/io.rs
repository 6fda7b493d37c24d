//! File formats: binary PGM images, flat-binary complex planes and
//! measurements, solver results. All binary formats are little-endian and
//! versioned with four-byte magics so other implementations can interoperate.
//!
//! - `PCSP` — complex plane: magic, version u16, side u64, side² (re, im) f64 pairs.
//! - `PCSM` — measurement: magic, version u16, basis u8, whitened u8, n u64,
//!   m u64, seed u64, noise_seed u64, snr_db f64, m (re, im) f64 pairs.
//!   Selected row indices are regenerated from the seed, never stored.
//! - `PCSR` — solver result: magic, version u16, side u64, tau f64,
//!   residual f64, iterations u64, newton u64, converged u8, plane payload.
//! - PGM (P5) — 8-bit scenes and references; stores `# scale <f>` recording
//!   the factor applied to fit real values into [0, 255].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::sensing::{select_rows, Measurement};
use crate::signal::{Complex64, Signal2D};
use crate::solver::SolverResult;
use crate::xforms::BasisKind;
use crate::{Error, Result};

const FORMAT_VERSION: u16 = 1;

fn write_u16(w: &mut impl Write, v: u16) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u16(r: &mut impl Read) -> Result<u16> {
    Ok(u16::from_le_bytes(read_exact::<2>(r)?))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<8>(r)?))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<8>(r)?))
}

fn check_magic(r: &mut impl Read, magic: &[u8; 4], what: &str) -> Result<()> {
    let got = read_exact::<4>(r)?;
    if &got != magic {
        return Err(Error::Format(format!(
            "bad magic for {what}: expected {:?}, got {:?}",
            std::str::from_utf8(magic).unwrap_or("?"),
            got
        )));
    }
    let version = read_u16(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported {what} version {version}")));
    }
    Ok(())
}

fn write_complex_payload(w: &mut impl Write, data: &[Complex64]) -> Result<()> {
    for z in data {
        write_f64(w, z.re)?;
        write_f64(w, z.im)?;
    }
    Ok(())
}

fn read_complex_payload(r: &mut impl Read, count: usize) -> Result<Vec<Complex64>> {
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        data.push(Complex64::new(re, im));
    }
    Ok(data)
}

// ---------------------------------------------------------------------------
// PCSP complex planes
// ---------------------------------------------------------------------------

pub fn save_plane(path: &Path, plane: &Signal2D) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"PCSP")?;
    write_u16(&mut w, FORMAT_VERSION)?;
    write_u64(&mut w, plane.side() as u64)?;
    write_complex_payload(&mut w, plane.data())?;
    w.flush()?;
    Ok(())
}

pub fn load_plane(path: &Path) -> Result<Signal2D> {
    let mut r = BufReader::new(File::open(path)?);
    check_magic(&mut r, b"PCSP", "plane")?;
    let side = read_u64(&mut r)? as usize;
    if side == 0 || !side.is_power_of_two() {
        return Err(Error::Format(format!("plane side {side} is not a power of two")));
    }
    let data = read_complex_payload(&mut r, side * side)?;
    Signal2D::from_vec(side, data)
}

// ---------------------------------------------------------------------------
// PCSM measurements
// ---------------------------------------------------------------------------

pub fn save_measurement(path: &Path, meas: &Measurement) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"PCSM")?;
    write_u16(&mut w, FORMAT_VERSION)?;
    w.write_all(&[meas.selection.basis.tag(), meas.whitened as u8])?;
    write_u64(&mut w, meas.selection.n as u64)?;
    write_u64(&mut w, meas.selection.m() as u64)?;
    write_u64(&mut w, meas.selection.seed)?;
    write_u64(&mut w, meas.noise_seed)?;
    write_f64(&mut w, meas.snr_db)?;
    write_complex_payload(&mut w, &meas.samples)?;
    w.flush()?;
    Ok(())
}

pub fn load_measurement(path: &Path) -> Result<Measurement> {
    let mut r = BufReader::new(File::open(path)?);
    check_magic(&mut r, b"PCSM", "measurement")?;
    let tags = read_exact::<2>(&mut r)?;
    let basis = BasisKind::from_tag(tags[0])?;
    let whitened = match tags[1] {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("bad whitened flag {other}"))),
    };
    let n = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)? as usize;
    let seed = read_u64(&mut r)?;
    let noise_seed = read_u64(&mut r)?;
    let snr_db = read_f64(&mut r)?;
    let samples = read_complex_payload(&mut r, m)?;
    let selection = select_rows(basis, n, m, seed)?;

    // The injected noise level is not stored; estimate it from the noisy AC
    // power and the recorded SNR: P_ac = P_sig·(1 + g) with g = 10^(−snr/10),
    // so σ̂² = P_ac·g/(1 + g).
    let noise_sigma = if snr_db.is_finite() {
        let mean: Complex64 = samples.iter().sum::<Complex64>() / m as f64;
        let p_ac: f64 =
            samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / m as f64;
        let g = 10f64.powf(-snr_db / 10.0);
        (p_ac * g / (1.0 + g)).sqrt()
    } else {
        0.0
    };
    Ok(Measurement {
        samples,
        selection,
        whitened,
        snr_db,
        noise_seed,
        noise_sigma,
    })
}

// ---------------------------------------------------------------------------
// PCSR solver results
// ---------------------------------------------------------------------------

pub fn save_result(path: &Path, result: &SolverResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"PCSR")?;
    write_u16(&mut w, FORMAT_VERSION)?;
    write_u64(&mut w, result.s_hat.side() as u64)?;
    write_f64(&mut w, result.tau_used)?;
    write_f64(&mut w, result.residual_norm)?;
    write_u64(&mut w, result.iterations as u64)?;
    write_u64(&mut w, result.newton_steps as u64)?;
    w.write_all(&[result.converged as u8])?;
    write_complex_payload(&mut w, result.s_hat.data())?;
    w.flush()?;
    Ok(())
}

pub fn load_result(path: &Path) -> Result<SolverResult> {
    let mut r = BufReader::new(File::open(path)?);
    check_magic(&mut r, b"PCSR", "solver result")?;
    let side = read_u64(&mut r)? as usize;
    if side == 0 || !side.is_power_of_two() {
        return Err(Error::Format(format!("result side {side} is not a power of two")));
    }
    let tau_used = read_f64(&mut r)?;
    let residual_norm = read_f64(&mut r)?;
    let iterations = read_u64(&mut r)? as usize;
    let newton_steps = read_u64(&mut r)? as usize;
    let converged = read_exact::<1>(&mut r)?[0] != 0;
    let data = read_complex_payload(&mut r, side * side)?;
    Ok(SolverResult {
        s_hat: Signal2D::from_vec(side, data)?,
        residual_norm,
        tau_used,
        iterations,
        newton_steps,
        converged,
    })
}

// ---------------------------------------------------------------------------
// PGM (P5, 8-bit)
// ---------------------------------------------------------------------------

/// Store the real part of a plane as binary 8-bit PGM. Values already inside
/// [0, 255] are written as-is (rounded); larger ranges are scaled down and
/// the factor recorded in a `# scale` header comment so consumers can undo
/// it. Negative values clamp to zero.
pub fn save_pgm(path: &Path, plane: &Signal2D) -> Result<()> {
    let side = plane.side();
    let max_re = plane.data().iter().map(|z| z.re).fold(0.0, f64::max);
    let scale = if max_re > 255.0 { 255.0 / max_re } else { 1.0 };
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n# scale {scale:e}\n{side} {side}\n255\n")?;
    let bytes: Vec<u8> = plane
        .data()
        .iter()
        .map(|z| (z.re * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Load a binary 8-bit PGM (P5). The image must be square with a
/// power-of-two side. A recorded `# scale` comment is undone on load.
pub fn load_pgm(path: &Path) -> Result<Signal2D> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let mut pos = 0usize;

    let mut scale: f64 = 1.0;
    let mut token = |bytes: &[u8], pos: &mut usize| -> Result<String> {
        // skip whitespace and comments; parse scale comments
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                let start = *pos;
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                let comment = String::from_utf8_lossy(&bytes[start..*pos]);
                if let Some(rest) = comment.strip_prefix("# scale ") {
                    if let Ok(s) = rest.trim().parse::<f64>() {
                        scale = s;
                    }
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = token(&bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::Format(format!("not a binary PGM (magic {magic})")));
    }
    let width: usize = token(&bytes, &mut pos)?
        .parse()
        .map_err(|e| Error::Format(format!("bad width: {e}")))?;
    let height: usize = token(&bytes, &mut pos)?
        .parse()
        .map_err(|e| Error::Format(format!("bad height: {e}")))?;
    let maxval: usize = token(&bytes, &mut pos)?
        .parse()
        .map_err(|e| Error::Format(format!("bad maxval: {e}")))?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    if width != height || !width.is_power_of_two() {
        return Err(Error::Format(format!(
            "expected square power-of-two image, got {width}x{height}"
        )));
    }
    // exactly one whitespace byte separates header from raster
    pos += 1;
    if bytes.len() < pos + width * height {
        return Err(Error::Format("truncated PGM raster".into()));
    }
    let values: Vec<f64> = bytes[pos..pos + width * height]
        .iter()
        .map(|&b| b as f64 / scale)
        .collect();
    Signal2D::from_real(width, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{add_noise, measure};
    use crate::signal::max_abs_diff;
    use crate::solver::SolverResult;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("cpof-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn plane_round_trip_is_bit_exact() {
        let plane = Signal2D::from_fn(8, |r, c| {
            Complex64::new((r as f64).sqrt() * 1.7, -(c as f64) / 3.0)
        });
        let path = tmp("plane.pcsp");
        save_plane(&path, &plane).unwrap();
        let back = load_plane(&path).unwrap();
        assert_eq!(plane.data().len(), back.data().len());
        for (a, b) in plane.data().iter().zip(back.data()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn measurement_round_trip_regenerates_selection() {
        let scene = Signal2D::from_fn(8, |r, c| Complex64::new((r * 8 + c) as f64, 0.0));
        let sel = select_rows(BasisKind::Noiselet, 64, 12, 99).unwrap();
        let meas = add_noise(&measure(&scene, &sel, true).unwrap(), 10.0, 7);
        let path = tmp("meas.pcsm");
        save_measurement(&path, &meas).unwrap();
        let back = load_measurement(&path).unwrap();
        assert_eq!(back.selection.indices(), meas.selection.indices());
        assert!(back.whitened);
        assert_eq!(back.snr_db, 10.0);
        assert_eq!(back.noise_seed, 7);
        for (a, b) in meas.samples.iter().zip(&back.samples) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
        }
        // σ estimate from SNR lands near the actual injected level
        assert!((back.noise_sigma / meas.noise_sigma - 1.0).abs() < 0.25);
    }

    #[test]
    fn infinite_snr_survives_round_trip() {
        let scene = Signal2D::from_fn(4, |r, c| Complex64::new((r + c) as f64, 0.0));
        let sel = select_rows(BasisKind::WalshHadamard, 16, 4, 1).unwrap();
        let meas = measure(&scene, &sel, false).unwrap();
        let path = tmp("meas_inf.pcsm");
        save_measurement(&path, &meas).unwrap();
        let back = load_measurement(&path).unwrap();
        assert!(back.snr_db.is_infinite() && back.snr_db > 0.0);
        assert_eq!(back.noise_sigma, 0.0);
    }

    #[test]
    fn result_round_trip() {
        let result = SolverResult {
            s_hat: Signal2D::from_fn(4, |r, c| Complex64::new(r as f64, c as f64)),
            residual_norm: 0.125,
            tau_used: 9.5,
            iterations: 42,
            newton_steps: 3,
            converged: true,
        };
        let path = tmp("result.pcsr");
        save_result(&path, &result).unwrap();
        let back = load_result(&path).unwrap();
        assert_eq!(back.iterations, 42);
        assert_eq!(back.newton_steps, 3);
        assert!(back.converged);
        assert_eq!(back.tau_used, 9.5);
        assert!(max_abs_diff(back.s_hat.data(), result.s_hat.data()) == 0.0);
    }

    #[test]
    fn pgm_round_trip_lossless_for_8bit() {
        let plane = Signal2D::from_fn(16, |r, c| Complex64::new(((r * 16 + c) % 256) as f64, 0.0));
        let path = tmp("scene.pgm");
        save_pgm(&path, &plane).unwrap();
        let back = load_pgm(&path).unwrap();
        assert!(max_abs_diff(back.data(), plane.data()) == 0.0);
    }

    #[test]
    fn pgm_scales_wide_ranges() {
        let plane = Signal2D::from_fn(8, |r, c| Complex64::new((r * 8 + c) as f64 * 100.0, 0.0));
        let path = tmp("wide.pgm");
        save_pgm(&path, &plane).unwrap();
        let back = load_pgm(&path).unwrap();
        let max_err = plane
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a.re - b.re).abs())
            .fold(0.0, f64::max);
        // 8-bit quantization of a 6300-wide range: step ≈ 24.7
        assert!(max_err <= 6300.0 / 255.0 * 0.5 + 1e-9, "max_err {max_err}");
    }

    #[test]
    fn malformed_pgm_rejected() {
        let path = tmp("bad.pgm");
        std::fs::write(&path, b"P5\n12 12\n255\n").unwrap();
        assert!(matches!(load_pgm(&path), Err(Error::Format(_))));
        std::fs::write(&path, b"P2\n16 16\n255\n").unwrap();
        assert!(matches!(load_pgm(&path), Err(Error::Format(_))));
    }

    #[test]
    fn bad_magic_rejected() {
        let path = tmp("bad.pcsp");
        std::fs::write(&path, b"NOPE\x01\x00").unwrap();
        assert!(matches!(load_plane(&path), Err(Error::Format(_))));
    }
}
