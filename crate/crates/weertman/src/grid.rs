//! Uniform periodic grid on `[-L, L)` and the discrete Fourier transforms
//! shared by every spectral operation in the crate.
//!
//! Conventions: an even number `N` of points `x_j = -L + j h`, `h = 2L/N`,
//! and wavenumbers `k_j = pi j'/L` with `j'` the signed bin index in
//! `[-N/2, N/2)`. The forward transform is unnormalized
//! (`s_hat_m = sum_j s_j exp(-2 pi i j m / N)`) and the inverse divides by
//! `N`, so a diagonal symbol `sigma(k_j)` applied between the two realizes
//! the corresponding Fourier multiplier exactly on the grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Immutable spectral grid. Cloning is cheap (FFT plans are shared).
#[derive(Clone)]
pub struct Grid {
    half_length: f64,
    n_points: usize,
    spacing: f64,
    points: Arc<Vec<f64>>,
    wavenumbers: Arc<Vec<f64>>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length)
            .field("n_points", &self.n_points)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.half_length == other.half_length && self.n_points == other.n_points
    }
}

impl Grid {
    /// Build a grid over `[-L, L)` with `n_points` samples.
    ///
    /// Rejects `n_points` odd or below 8 and non-positive `half_length`.
    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half-length must be positive, got {half_length}"
            )));
        }
        if n_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "N must be even, got {n_points}"
            )));
        }
        if n_points < 8 {
            return Err(Error::InvalidGrid(format!(
                "N must be at least 8, got {n_points}"
            )));
        }
        let spacing = 2.0 * half_length / n_points as f64;
        let points: Vec<f64> = (0..n_points)
            .map(|j| -half_length + j as f64 * spacing)
            .collect();
        let wavenumbers: Vec<f64> = (0..n_points)
            .map(|j| {
                let signed = if j < n_points / 2 {
                    j as isize
                } else {
                    j as isize - n_points as isize
                };
                PI * signed as f64 / half_length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n_points);
        let fft_inverse = planner.plan_fft_inverse(n_points);
        Ok(Grid {
            half_length,
            n_points,
            spacing,
            points: Arc::new(points),
            wavenumbers: Arc::new(wavenumbers),
            fft_forward,
            fft_inverse,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Sample points `x_j = -L + j h`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Wavenumbers `k_j = pi j'/L` in FFT bin order (signed index `j'`).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(Error::LengthMismatch {
                expected: self.n_points,
                got: len,
            });
        }
        Ok(())
    }

    /// Unnormalized forward transform of real samples.
    pub fn forward(&self, samples: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(samples.len())?;
        let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        self.fft_forward.process(&mut buf);
        Ok(buf)
    }

    /// Inverse transform (divides by `N`), returning the real part.
    ///
    /// Callers are responsible for feeding conjugate-symmetric spectra; all
    /// symbols in this crate preserve that symmetry.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(spectrum.len())?;
        let mut buf = spectrum.to_vec();
        self.fft_inverse.process(&mut buf);
        let scale = 1.0 / self.n_points as f64;
        Ok(buf.into_iter().map(|z| z.re * scale).collect())
    }

    /// Apply a real diagonal Fourier symbol `sym[j] = sigma(k_j)`.
    pub fn apply_real_symbol(&self, samples: &[f64], symbol: &[f64]) -> Result<Vec<f64>> {
        self.check_len(samples.len())?;
        self.check_len(symbol.len())?;
        let mut spectrum = self.forward(samples)?;
        for (z, &s) in spectrum.iter_mut().zip(symbol) {
            *z *= s;
        }
        self.inverse(&spectrum)
    }

    /// Apply a complex diagonal Fourier symbol.
    pub fn apply_complex_symbol(&self, samples: &[f64], symbol: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(samples.len())?;
        self.check_len(symbol.len())?;
        let mut spectrum = self.forward(samples)?;
        for (z, &s) in spectrum.iter_mut().zip(symbol) {
            *z *= s;
        }
        self.inverse(&spectrum)
    }

    /// Spectral derivative with symbol `i k`. The Nyquist bin is zeroed:
    /// the odd symbol has no consistent real value there.
    pub fn spectral_derivative(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let nyquist = self.n_points / 2;
        let symbol: Vec<Complex64> = self
            .wavenumbers
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if j == nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k)
                }
            })
            .collect();
        self.apply_complex_symbol(samples, &symbol)
    }

    /// Band-limited translation: returns samples of `x -> u(x - shift)`.
    ///
    /// The Nyquist bin gets the real multiplier `cos(k_max shift)` so the
    /// output stays real.
    pub fn shift_samples(&self, samples: &[f64], shift: f64) -> Result<Vec<f64>> {
        let nyquist = self.n_points / 2;
        let symbol: Vec<Complex64> = self
            .wavenumbers
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if j == nyquist {
                    Complex64::new((k * shift).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, -k * shift)
                }
            })
            .collect();
        self.apply_complex_symbol(samples, &symbol)
    }
}

/// Precomputed trigonometric interpolant of a periodic sample vector,
/// evaluable at arbitrary points in `O(N)` per call.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    grid: Grid,
    spectrum: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(grid: &Grid, samples: &[f64]) -> Result<Self> {
        let spectrum = grid.forward(samples)?;
        Ok(TrigInterpolant {
            grid: grid.clone(),
            spectrum,
        })
    }

    /// Evaluate the band-limited interpolant at `x` (periodically extended).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.n_points;
        let half = n / 2;
        // Phase measured from the left edge so that integer grid offsets
        // reproduce the samples exactly.
        let theta = x + self.grid.half_length;
        let ks = self.grid.wavenumbers();
        let mut acc = self.spectrum[0].re;
        for m in 1..half {
            let k = ks[m];
            let (s, c) = (k * theta).sin_cos();
            let z = self.spectrum[m];
            acc += 2.0 * (z.re * c - z.im * s);
        }
        let k_nyq = PI * half as f64 / self.grid.half_length;
        acc += self.spectrum[half].re * (k_nyq * theta).cos();
        acc / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_points_and_spacing() {
        let g = Grid::new(10.0, 8).unwrap();
        assert_eq!(g.spacing(), 2.5);
        let expect = [-10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0, 7.5];
        for (p, e) in g.points().iter().zip(expect) {
            assert_abs_diff_eq!(p, &e);
        }
    }

    #[test]
    fn wavenumbers_cover_zero_to_nyquist() {
        let g = Grid::new(1.0, 8).unwrap();
        let ks = g.wavenumbers();
        assert_eq!(ks[0], 0.0);
        let kmax = ks.iter().cloned().fold(0.0f64, |a, k| a.max(k.abs()));
        assert_abs_diff_eq!(kmax, 4.0 * PI, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        let err = Grid::new(10.0, 7).unwrap_err();
        assert!(err.to_string().contains("N must be even"));
        assert!(Grid::new(10.0, 6).is_err());
        assert!(Grid::new(0.0, 8).is_err());
        assert!(Grid::new(-1.0, 8).is_err());
    }

    #[test]
    fn constant_concentrates_at_zero_mode() {
        let g = Grid::new(10.0, 8).unwrap();
        let spec = g.forward(&[3.7; 8]).unwrap();
        assert_abs_diff_eq!(spec[0].re, 8.0 * 3.7, epsilon = 1e-12);
        for z in &spec[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_occupies_two_bins() {
        let g = Grid::new(5.0, 16).unwrap();
        let l = g.half_length();
        let u: Vec<f64> = g.points().iter().map(|&x| (PI * x / l).cos()).collect();
        let spec = g.forward(&u).unwrap();
        for (j, z) in spec.iter().enumerate() {
            if j == 1 || j == 15 {
                assert!(z.norm() > 1.0);
            } else {
                assert!(z.norm() < 1e-10, "bin {j} should be empty: {z}");
            }
        }
    }

    #[test]
    fn roundtrip_and_parseval() {
        let g = Grid::new(7.0, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = g.inverse(&g.forward(&u).unwrap()).unwrap();
        let scale = u.iter().cloned().fold(0.0f64, f64::max).abs().max(1.0);
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
        // Parseval with this normalization: h sum |u|^2 = h^2/(2L) sum |u_hat|^2.
        let h = g.spacing();
        let lhs: f64 = u.iter().map(|s| s * s).sum::<f64>() * h;
        let rhs: f64 = g
            .forward(&u)
            .unwrap()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            * h
            * h
            / (2.0 * g.half_length());
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
    }

    #[test]
    fn shift_by_whole_grid_points_is_rotation() {
        let g = Grid::new(4.0, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shifted = g.shift_samples(&u, 3.0 * g.spacing()).unwrap();
        for j in 0..64 {
            let src = (j + 64 - 3) % 64;
            assert_abs_diff_eq!(shifted[j], u[src], epsilon = 1e-10);
        }
    }

    #[test]
    fn interpolant_matches_samples_and_smooth_values() {
        let g = Grid::new(6.0, 64).unwrap();
        let l = g.half_length();
        let f = |x: f64| (PI * x / l).sin() + 0.3 * (2.0 * PI * x / l).cos();
        let u: Vec<f64> = g.points().iter().map(|&x| f(x)).collect();
        let interp = TrigInterpolant::new(&g, &u).unwrap();
        for (j, &x) in g.points().iter().enumerate() {
            assert_abs_diff_eq!(interp.eval(x), u[j], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(interp.eval(1.2345), f(1.2345), epsilon = 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn roundtrip_is_identity(seed in 0u64..1000) {
            let g = Grid::new(3.0, 64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let back = g.inverse(&g.forward(&u).unwrap()).unwrap();
            for (a, b) in u.iter().zip(&back) {
                proptest::prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
