//! The half-Laplacian `|d/dx|`: fast spectral application on the grid plus
//! a slow quadrature oracle built from the singular-integral form
//!
//! ```text
//! |d/dx| u(x) = -(1/pi) * integral_0^inf (u(x+y) - 2 u(x) + u(x-y)) / y^2 dy,
//! ```
//!
//! which is how the operator acts on bounded C^2 functions. The spectral
//! route multiplies by the Fourier symbol `|k|`; the oracle never touches a
//! transform, so the two are independent checks of each other.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Result of the principal-value quadrature oracle: the integral estimate
/// and a crude bound on the neglected tail `(4/pi) ||u||_inf / cutoff`.
#[derive(Debug, Clone, Copy)]
pub struct PvEstimate {
    pub value: f64,
    pub tail_bound: f64,
}

/// Samples of `|d/dx| u` on a grid. The zero mode of the symbol vanishes,
/// so the result always has zero mean; construction asserts it.
#[derive(Debug, Clone)]
pub struct OperatorSample {
    pub values: Vec<f64>,
}

impl OperatorSample {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: values.len(),
            });
        }
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean.abs() > 1e-10 * scale {
            return Err(Error::InvalidInput(format!(
                "operator output must have zero mean, got {mean}"
            )));
        }
        Ok(OperatorSample { values })
    }
}

/// Apply `|d/dx|` spectrally: symbol `|k_j|`, Nyquist included as-is.
pub fn apply_spectral(grid: &Grid, u: &[f64]) -> Result<Vec<f64>> {
    let symbol: Vec<f64> = grid.wavenumbers().iter().map(|k| k.abs()).collect();
    grid.apply_real_symbol(u, &symbol)
}

/// Hilbert transform with symbol `-i sign(k)`.
pub fn hilbert_transform(grid: &Grid, u: &[f64]) -> Result<Vec<f64>> {
    let symbol: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| Complex64::new(0.0, -k.signum()))
        .collect();
    grid.apply_complex_symbol(u, &symbol)
}

/// The composition `H(u')`, which must agree with [`apply_spectral`] on
/// band-limited inputs (both realize the `|k|` multiplier; they differ only
/// in Nyquist-bin treatment).
pub fn hilbert_of_derivative(grid: &Grid, u: &[f64]) -> Result<Vec<f64>> {
    let du = grid.spectral_derivative(u)?;
    hilbert_transform(grid, &du)
}

/// Quadrature oracle for `|d/dx| u (x)` from the second-difference integral.
///
/// Composite Simpson on `[0, 1]` (the integrand is bounded there, with the
/// `y = 0` value taken from a second central difference) and on a
/// logarithmic substitution over `[1, cutoff]`. When the limits of `u` at
/// minus/plus infinity are supplied, the analytic tail
/// `-(1/pi)(u(-inf) + u(+inf) - 2u(x))/cutoff` is added, which removes the
/// leading `1/cutoff` truncation error.
pub fn oracle_pv(
    u: &dyn Fn(f64) -> f64,
    x: f64,
    cutoff: f64,
    quad_points: usize,
    limits: Option<(f64, f64)>,
) -> Result<PvEstimate> {
    if !(cutoff > 1.0) {
        return Err(Error::InvalidInput(format!(
            "cutoff must exceed 1, got {cutoff}"
        )));
    }
    let n = (quad_points / 2).max(64);
    let ux = u(x);
    if !ux.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite function value at x = {x}"
        )));
    }
    let mut sup = ux.abs();
    let mut second_diff = |y: f64| -> Result<f64> {
        let (a, b) = (u(x + y), u(x - y));
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite function value at distance y = {y}"
            )));
        }
        sup = sup.max(a.abs()).max(b.abs());
        Ok(a - 2.0 * ux + b)
    };

    // Near-zero limit of the integrand from a wider stencil; the direct
    // ratio at tiny y is dominated by rounding.
    let e = 1e-4;
    let phi0 = second_diff(e)? / (e * e);

    // Simpson over [0, 1].
    let n1 = if n % 2 == 0 { n } else { n + 1 };
    let h1 = 1.0 / n1 as f64;
    let mut inner = phi0 + second_diff(1.0)?;
    for i in 1..n1 {
        let y = i as f64 * h1;
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        inner += w * second_diff(y)? / (y * y);
    }
    inner *= h1 / 3.0;

    // Simpson in s = ln y over [1, cutoff] (integrand becomes sd(y)/y).
    let s_max = cutoff.ln();
    let n2 = n1;
    let h2 = s_max / n2 as f64;
    let mut outer = second_diff(1.0)? + second_diff(cutoff)? / cutoff;
    for i in 1..n2 {
        let y = (i as f64 * h2).exp();
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        outer += w * second_diff(y)? / y;
    }
    outer *= h2 / 3.0;

    let mut value = -(inner + outer) / std::f64::consts::PI;
    if let Some((u_minus, u_plus)) = limits {
        value += -(u_plus + u_minus - 2.0 * ux) / (std::f64::consts::PI * cutoff);
    }
    let tail_bound = 4.0 * sup / (std::f64::consts::PI * cutoff);
    Ok(PvEstimate { value, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Poisson kernel of width `a`; `|d/dx|` of it has the closed form
    /// `(a^2 - x^2) / (pi (a^2 + x^2)^2)`.
    fn poisson(a: f64, x: f64) -> f64 {
        a / (PI * (a * a + x * x))
    }

    fn halflap_poisson(a: f64, x: f64) -> f64 {
        (a * a - x * x) / (PI * (a * a + x * x).powi(2))
    }

    #[test]
    fn annihilates_constants() {
        let g = Grid::new(10.0, 64).unwrap();
        let out = apply_spectral(&g, &[3.7; 64]).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let g = Grid::new(8.0, 128).unwrap();
        let l = g.half_length();
        let u: Vec<f64> = g.points().iter().map(|&x| (PI * x / l).cos()).collect();
        let out = apply_spectral(&g, &u).unwrap();
        for (o, ui) in out.iter().zip(&u) {
            assert_abs_diff_eq!(*o, PI / l * ui, epsilon = 1e-10);
        }
    }

    #[test]
    fn poisson_kernel_matches_closed_form_up_to_periodization() {
        let g = Grid::new(200.0, 1 << 14).unwrap();
        let u: Vec<f64> = g.points().iter().map(|&x| poisson(1.0, x)).collect();
        let out = apply_spectral(&g, &u).unwrap();
        let j0 = g.n_points() / 2; // x = 0
        assert_abs_diff_eq!(out[j0], 1.0 / PI, epsilon = 2e-3);
        let sample = OperatorSample::new(&g, out).unwrap();
        assert_eq!(sample.values.len(), g.n_points());
    }

    #[test]
    fn oracle_odd_symmetry_at_arctan_origin() {
        let est = oracle_pv(&|x| x.atan(), 0.0, 1e4, 4000, Some((-PI / 2.0, PI / 2.0))).unwrap();
        assert_abs_diff_eq!(est.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_poisson_kernel_value() {
        let est = oracle_pv(&|x| poisson(1.0, x), 0.0, 1e4, 4000, Some((0.0, 0.0))).unwrap();
        assert_abs_diff_eq!(est.value, 1.0 / PI, epsilon = 1e-6);
        assert!(est.tail_bound > 0.0);
    }

    #[test]
    fn oracle_front_profile_value() {
        // eta_l + (eta_r - eta_l)(1/2 + arctan(x)/pi) has
        // |d/dx| = (eta_r - eta_l) x / (pi (1 + x^2)); at x = 1 this is 1/(2 pi).
        let f = |x: f64| 0.5 + x.atan() / PI;
        let est = oracle_pv(&f, 1.0, 1e4, 4000, Some((0.0, 1.0))).unwrap();
        assert_abs_diff_eq!(est.value, 1.0 / (2.0 * PI), epsilon = 1e-6);
    }

    #[test]
    fn oracle_rejects_non_finite_inputs() {
        let f = |x: f64| if x > 100.0 { f64::NAN } else { 0.0 };
        assert!(oracle_pv(&f, 0.0, 1e4, 1000, None).is_err());
    }

    #[test]
    fn hilbert_of_derivative_on_eigenfunctions() {
        let g = Grid::new(8.0, 128).unwrap();
        let l = g.half_length();
        let u: Vec<f64> = g.points().iter().map(|&x| (PI * x / l).sin()).collect();
        let out = hilbert_of_derivative(&g, &u).unwrap();
        for (o, ui) in out.iter().zip(&u) {
            assert_abs_diff_eq!(*o, PI / l * ui, epsilon = 1e-10);
        }
        let c = hilbert_of_derivative(&g, &[2.0; 128]).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn hilbert_of_derivative_matches_spectral_on_band_limited_input() {
        let g = Grid::new(8.0, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Low-pass random field: keep |j'| <= N/8.
        let raw: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut spec = g.forward(&raw).unwrap();
        for (j, z) in spec.iter_mut().enumerate() {
            let signed = if j < 128 { j as i64 } else { j as i64 - 256 };
            if signed.abs() > 32 {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        let u = g.inverse(&spec).unwrap();
        let a = apply_spectral(&g, &u).unwrap();
        let b = hilbert_of_derivative(&g, &u).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-10);
        }
    }

    #[test]
    fn linearity_symmetry_positivity() {
        let g = Grid::new(5.0, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (0.7, -1.3);
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = apply_spectral(&g, &mix).unwrap();
        let au = apply_spectral(&g, &u).unwrap();
        let av = apply_spectral(&g, &v).unwrap();
        for i in 0..128 {
            assert_abs_diff_eq!(lhs[i], a * au[i] + b * av[i], epsilon = 1e-12);
        }
        let h = g.spacing();
        let quad: f64 = u.iter().zip(&au).map(|(x, y)| x * y).sum::<f64>() * h;
        assert!(quad >= -1e-10);
        let uv: f64 = u.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>();
        let vu: f64 = v.iter().zip(&au).map(|(x, y)| x * y).sum::<f64>();
        assert_abs_diff_eq!(uv * h, vu * h, epsilon = 1e-10);
    }

    #[test]
    fn spectral_agrees_with_oracle_for_concentrated_profiles() {
        let g = Grid::new(100.0, 1 << 12).unwrap();
        let a = 2.0;
        let u: Vec<f64> = g.points().iter().map(|&x| poisson(a, x)).collect();
        let out = apply_spectral(&g, &u).unwrap();
        let worst = g
            .points()
            .iter()
            .zip(&out)
            .filter(|(&x, _)| x.abs() <= 50.0)
            .map(|(&x, &got)| (got - halflap_poisson(a, x)).abs())
            .fold(0.0f64, f64::max);
        assert!(
            worst < 5.0 / g.half_length(),
            "periodization error too large: {worst}"
        );
    }
}
