//! Periodic-grid fields, discrete Fourier transforms, the half-Laplacian
//! multiplier, and the norms used throughout.
//!
//! A [`GridField`] holds samples of a 1-periodic function at `x_j = j/N` on
//! the unit torus; a [`SpectralField`] holds its Fourier coefficients under
//! the normalization `ĝ(k) = (1/N) Σ_j g_j e^{-2πikj/N}`, so `ĝ(0)` is the
//! mean. Coefficients are stored in natural FFT order and indexed by the
//! signed integer wavenumber `k ∈ {-N/2+1, …, N/2}`. The half-Laplacian is
//! the multiplier `-c|k|` on that index; the physical 2π is absorbed into
//! the elastic coefficient `c`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("conjugate symmetry violated: residue {residue:.3e} exceeds {tol:.3e}")]
    SymmetryViolation { residue: f64, tol: f64 },
}

/// Maximum conjugate-symmetry residue tolerated by [`SpectralField::inverse_transform`],
/// relative to the coefficient scale.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Signed wavenumber of slot `j` in natural FFT order: `k = j` for
/// `j <= N/2`, else `j - N`.
#[inline]
pub fn signed_wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Real samples of the interface height on the uniform periodic grid.
///
/// Immutable after construction; all entries are finite and the length is a
/// power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn from_values(values: Vec<f64>) -> Result<Self, SpectralError> {
        if !values.len().is_power_of_two() {
            return Err(SpectralError::NotPowerOfTwo(values.len()));
        }
        for (j, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SpectralError::NonFinite(j));
            }
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Result<Self, SpectralError> {
        Self::from_values(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Result<Self, SpectralError> {
        Self::from_values(vec![value; n])
    }

    /// Sample `f` at the grid points `x_j = j/N`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, SpectralError> {
        Self::from_values((0..n).map(|j| f(j as f64 / n as f64)).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Arithmetic mean of the samples; equals `ĝ(0)`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `L²(T¹)` norm under the sampling measure: `sqrt((1/N) Σ g_j²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// Forward DFT with the `1/N` normalization.
    pub fn forward_transform(&self) -> SpectralField {
        let n = self.values.len();
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        SpectralField { coeffs: buf }
    }
}

/// Complex Fourier coefficients of a real grid field, natural FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if !coeffs.len().is_power_of_two() {
            return Err(SpectralError::NotPowerOfTwo(coeffs.len()));
        }
        Ok(Self { coeffs })
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `e^{2πikx}` for signed index `k ∈ {-N/2+1, …, N/2}`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.coeffs.len() as i64;
        debug_assert!(k > -n / 2 && k <= n / 2, "wavenumber {k} out of range");
        let j = k.rem_euclid(n) as usize;
        self.coeffs[j]
    }

    /// Largest deviation from conjugate symmetry, `max_k |c(-k) - conj(c(k))|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.coeffs.len();
        let mut worst: f64 = self.coeffs[0].im.abs();
        if n % 2 == 0 {
            worst = worst.max(self.coeffs[n / 2].im.abs());
        }
        for j in 1..n / 2 {
            let d = self.coeffs[n - j] - self.coeffs[j].conj();
            worst = worst.max(d.norm());
        }
        worst
    }

    /// Inverse DFT back to real samples.
    ///
    /// Verifies conjugate symmetry to [`SYMMETRY_TOL`] (scaled by the
    /// coefficient magnitude) before discarding the imaginary residue; a
    /// violation signals corrupted state.
    pub fn inverse_transform(&self) -> Result<GridField, SpectralError> {
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            .max(1.0);
        let residue = self.conjugate_asymmetry();
        if residue > SYMMETRY_TOL * scale {
            return Err(SpectralError::SymmetryViolation {
                residue,
                tol: SYMMETRY_TOL * scale,
            });
        }
        let n = self.coeffs.len();
        let mut buf = self.coeffs.clone();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        GridField::from_values(buf.into_iter().map(|c| c.re).collect())
    }

    /// Apply the elastic operator `-c(-Δ)^{1/2}`: multiply `ĝ(k)` by `-c|k|`.
    pub fn apply_half_laplacian(&self, c: f64) -> SpectralField {
        let n = self.coeffs.len();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &v)| v * (-c * signed_wavenumber(j, n).unsigned_abs() as f64))
            .collect();
        SpectralField { coeffs }
    }

    /// Squared `H^{1/2}` seminorm, `Σ_{k≠0} |k| |ĝ(k)|²` (two-sided sum).
    pub fn h_half_seminorm_sq(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| signed_wavenumber(j, n).unsigned_abs() as f64 * c.norm_sqr())
            .sum()
    }

    /// `Σ_k |ĝ(k)|²`; equals `l2_norm²` by Parseval.
    pub fn power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}
