//! Flat row-major complex planes.
//!
//! Scenes, transfer functions and correlation planes all share one storage
//! type: a square, power-of-two-sided complex plane. Real images simply carry
//! zero imaginary parts so that filtering, whitening and recovery run on a
//! single code path.

pub use num_complex::Complex64;

/// Square 2D signal of side `side`, stored flat in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal2D {
    side: usize,
    data: Vec<Complex64>,
}

impl Signal2D {
    /// All-zero plane.
    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            data: vec![Complex64::new(0.0, 0.0); side * side],
        }
    }

    /// Wrap an existing row-major buffer. Length must equal `side * side`.
    pub fn from_vec(side: usize, data: Vec<Complex64>) -> crate::Result<Self> {
        if data.len() != side * side {
            return Err(crate::Error::Size(format!(
                "buffer length {} does not match side {side}",
                data.len()
            )));
        }
        Ok(Self { side, data })
    }

    /// Build a real-valued plane from row-major f64 samples.
    pub fn from_real(side: usize, values: &[f64]) -> crate::Result<Self> {
        if values.len() != side * side {
            return Err(crate::Error::Size(format!(
                "buffer length {} does not match side {side}",
                values.len()
            )));
        }
        Ok(Self {
            side,
            data: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        })
    }

    /// Fill from a function of (row, col).
    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                data.push(f(r, c));
            }
        }
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Total number of samples, n = side².
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.side + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.side + col] = v;
    }

    /// Zero-pad this plane into the top-left corner of a larger `side × side`
    /// plane. With this anchoring, a matched-filter peak lands exactly on the
    /// top-left pixel of the target's position in the scene.
    pub fn embedded(&self, side: usize) -> crate::Result<Self> {
        if side < self.side {
            return Err(crate::Error::Size(format!(
                "cannot embed side {} into smaller side {side}",
                self.side
            )));
        }
        let mut out = Self::zeros(side);
        for r in 0..self.side {
            for c in 0..self.side {
                out.set(r, c, self.at(r, c));
            }
        }
        Ok(out)
    }

    /// Circular shift by (`dr`, `dc`): output[(r+dr) mod s][(c+dc) mod s] = input[r][c].
    pub fn shifted(&self, dr: usize, dc: usize) -> Self {
        let s = self.side;
        Self::from_fn(s, |r, c| {
            self.at((r + s - dr % s) % s, (c + s - dc % s) % s)
        })
    }

    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute imaginary part; used to decide whether a plane is
    /// effectively real.
    pub fn max_imag_abs(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real parts, row-major.
    pub fn real(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }
}

/// max |a_i − b_i| over two complex slices.
pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// ‖a‖₂ of a complex slice.
pub fn norm_l2(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Σ|a_i| of a complex slice.
pub fn norm_l1(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm()).sum()
}

/// max |a_i| of a complex slice.
pub fn norm_linf(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Re⟨a, b⟩ = Re Σ conj(a_i)·b_i.
pub fn dot_re(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}
