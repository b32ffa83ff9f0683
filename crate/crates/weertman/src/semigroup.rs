//! The Poisson semigroup generated by `-|d/dx|` and exponential
//! time-differencing steps for the semilinear flow `dv/dt = -|d/dx| v + g(v)`.
//!
//! The semigroup kernel is `K_t(x) = t / (pi (t^2 + x^2))` with Fourier
//! transform `exp(-|k| t)`; on the grid it is applied as a diagonal symbol,
//! which integrates the linear part exactly. The nonlinearity enters through
//! the phi functions `phi1(z) = (e^z - 1)/z` and `phi2(z) = (e^z - 1 - z)/z^2`,
//! the discrete form of the variation-of-constants integral with `g` held
//! constant (first order) or linear (second order) over the step.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Time-integrator order for [`duhamel_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtdOrder {
    First,
    Second,
}

/// Poisson kernel value `K_t(x) = t / (pi (t^2 + x^2))` for `t > 0`.
///
/// `t = 0` is the identity convolution and is handled by callers.
pub fn kernel_value(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "kernel time must be positive, got {t}"
        )));
    }
    Ok(t / (PI * (t * t + x * x)))
}

/// Exact L1 norm of `dK_t/dx`, namely `2 / (pi t)`.
///
/// This pins the constant in the derivative bound `||K_t'||_1 <= C/t` to its
/// sharp value `C = 2/pi`.
pub fn kernel_derivative_l1(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "kernel time must be positive, got {t}"
        )));
    }
    let value = 2.0 / (PI * t);
    debug_assert!(value <= 2.0 / PI / t + 1e-15);
    Ok(value)
}

/// Apply the semigroup: `u -> exp(-|k| t) u` in Fourier space.
pub fn propagate(grid: &Grid, t: f64, u: &[f64]) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!(
            "propagation time must be nonnegative, got {t}"
        )));
    }
    if t == 0.0 {
        if u.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: u.len(),
            });
        }
        return Ok(u.to_vec());
    }
    let symbol: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|k| (-k.abs() * t).exp())
        .collect();
    grid.apply_real_symbol(u, &symbol)
}

/// `phi1(z) = (e^z - 1)/z`, series branch near zero to avoid cancellation.
pub(crate) fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `phi2(z) = (e^z - 1 - z)/z^2`, series branch near zero.
pub(crate) fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// One exponential-time-differencing step for `dv/dt = -|d/dx| v + g(v)`.
///
/// First order: `v+ = E v + dt phi1 g(v)` (in Fourier space, with
/// `E = exp(-|k| dt)`). Second order adds the predictor-corrector update
/// `v+ += dt phi2 (g(v_pred) - g(v))`.
pub fn duhamel_step<G>(grid: &Grid, dt: f64, v: &[f64], rhs: G, order: EtdOrder) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let n = grid.n_points();
    if v.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let decay: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|k| (-k.abs() * dt).exp())
        .collect();
    let w1: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|k| dt * phi1(-k.abs() * dt))
        .collect();

    let g0 = rhs(v);
    check_finite(&g0)?;
    let mut spectrum = grid.forward(v)?;
    let g0_hat = grid.forward(&g0)?;
    for j in 0..n {
        spectrum[j] = spectrum[j] * decay[j] + g0_hat[j] * w1[j];
    }
    let predictor = grid.inverse(&spectrum)?;
    match order {
        EtdOrder::First => Ok(predictor),
        EtdOrder::Second => {
            let g1 = rhs(&predictor);
            check_finite(&g1)?;
            let diff: Vec<f64> = g1.iter().zip(&g0).map(|(a, b)| a - b).collect();
            let diff_hat = grid.forward(&diff)?;
            let w2: Vec<f64> = grid
                .wavenumbers()
                .iter()
                .map(|k| dt * phi2(-k.abs() * dt))
                .collect();
            for j in 0..n {
                spectrum[j] += diff_hat[j] * w2[j];
            }
            grid.inverse(&spectrum)
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: f64::NAN });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_point_values() {
        assert_abs_diff_eq!(kernel_value(1.0, 0.0).unwrap(), 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(
            kernel_value(2.0, 2.0).unwrap(),
            1.0 / (4.0 * PI),
            epsilon = 1e-15
        );
        assert!(kernel_value(0.0, 1.0).is_err());
        assert!(kernel_value(-1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_mass_is_one_on_a_wide_grid() {
        let t = 1.0;
        let g = Grid::new(1000.0 * t, 1 << 15).unwrap();
        let mass: f64 = g
            .points()
            .iter()
            .map(|&x| kernel_value(t, x).unwrap())
            .sum::<f64>()
            * g.spacing();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn derivative_l1_norm_matches_quadrature() {
        // integral of |dK_t/dx| = 2 integral_0^X 2 t x / (pi (t^2+x^2)^2) dx
        // plus the exact tail 2t/(pi (t^2+X^2)).
        for t in [1.0, 2.0] {
            let x_max = 20.0 * t;
            let n = 20_000;
            let h = x_max / n as f64;
            let f = |x: f64| 2.0 * t * x / (PI * (t * t + x * x).powi(2));
            let mut quad = f(0.0) + f(x_max);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                quad += w * f(i as f64 * h);
            }
            quad *= 2.0 * h / 3.0;
            quad += 2.0 * t / (PI * (t * t + x_max * x_max));
            assert_abs_diff_eq!(kernel_derivative_l1(t).unwrap(), quad, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(
            kernel_derivative_l1(1.0).unwrap() * 1.0,
            kernel_derivative_l1(5.0).unwrap() * 5.0,
            epsilon = 1e-15
        );
        assert!(kernel_derivative_l1(0.0).is_err());
    }

    #[test]
    fn propagate_identity_and_eigenmode_decay() {
        let g = Grid::new(8.0, 64).unwrap();
        let l = g.half_length();
        let u: Vec<f64> = g.points().iter().map(|&x| (PI * x / l).cos()).collect();
        let same = propagate(&g, 0.0, &u).unwrap();
        assert_eq!(same, u);
        let out = propagate(&g, 1.0, &u).unwrap();
        let factor = (-PI / l).exp();
        for (o, ui) in out.iter().zip(&u) {
            assert_abs_diff_eq!(*o, factor * ui, epsilon = 1e-12);
        }
        assert!(propagate(&g, -0.1, &u).is_err());
    }

    #[test]
    fn semigroup_composition_mass_and_contraction() {
        let g = Grid::new(10.0, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let two = propagate(&g, 0.7, &propagate(&g, 0.3, &u).unwrap()).unwrap();
        let one = propagate(&g, 1.0, &u).unwrap();
        for (a, b) in two.iter().zip(&one) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert_abs_diff_eq!(mean(&one), mean(&u), epsilon = 1e-13);
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(sup(&one) <= sup(&u) + 1e-12);
    }

    #[test]
    fn propagate_preserves_positivity_when_kernel_is_resolved() {
        // Truncation of the kernel's Fourier series rings at the level of
        // exp(-t k_max); keep t k_max >= 40 so positivity is genuine.
        let g = Grid::new(10.0, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..256).map(|_| rng.gen_range(0.0..1.0)).collect();
        for t in [1.0, 2.0, 5.0] {
            let out = propagate(&g, t, &u).unwrap();
            assert!(out.iter().all(|&v| v >= -1e-12), "t = {t}");
        }
    }

    #[test]
    fn zero_rhs_reduces_to_propagate() {
        let g = Grid::new(6.0, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let stepped = duhamel_step(&g, 0.05, &v, |_| vec![0.0; 128], EtdOrder::First).unwrap();
        let prop = propagate(&g, 0.05, &v).unwrap();
        for (a, b) in stepped.iter().zip(&prop) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-13);
        }
    }

    #[test]
    fn constant_source_from_rest_yields_c_dt() {
        let g = Grid::new(6.0, 128).unwrap();
        let c = 0.37;
        let dt = 0.01;
        let v = vec![0.0; 128];
        let out = duhamel_step(&g, dt, &v, |_| vec![c; 128], EtdOrder::First).unwrap();
        for val in &out {
            assert_abs_diff_eq!(*val, c * dt, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_dt_and_non_finite_rhs() {
        let g = Grid::new(6.0, 128).unwrap();
        let v = vec![0.0; 128];
        assert!(duhamel_step(&g, 0.0, &v, |_| vec![0.0; 128], EtdOrder::First).is_err());
        assert!(duhamel_step(&g, -1.0, &v, |_| vec![0.0; 128], EtdOrder::First).is_err());
        let err =
            duhamel_step(&g, 0.1, &v, |_| vec![f64::NAN; 128], EtdOrder::First).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    /// For the linear right-hand side g(v) = -lambda v the exact solution is
    /// exp(-(|k| + lambda) t) per mode; Richardson halving of dt must show
    /// first- and second-order convergence.
    #[test]
    fn richardson_orders_on_linear_decay() {
        let g = Grid::new(6.0, 128).unwrap();
        let l = g.half_length();
        let lambda = 0.8;
        let u0: Vec<f64> = g
            .points()
            .iter()
            .map(|&x| (PI * x / l).cos() + 0.5 * (3.0 * PI * x / l).sin())
            .collect();
        let t_end = 1.0;
        let exact: Vec<f64> = {
            let symbol: Vec<f64> = g
                .wavenumbers()
                .iter()
                .map(|k| (-(k.abs() + lambda) * t_end).exp())
                .collect();
            g.apply_real_symbol(&u0, &symbol).unwrap()
        };
        let run = |dt: f64, order: EtdOrder| -> f64 {
            let steps = (t_end / dt).round() as usize;
            let mut v = u0.clone();
            for _ in 0..steps {
                v = duhamel_step(
                    &g,
                    dt,
                    &v,
                    |w| w.iter().map(|x| -lambda * x).collect(),
                    order,
                )
                .unwrap();
            }
            v.iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        for (order, min_ratio) in [(EtdOrder::First, 1.7), (EtdOrder::Second, 3.4)] {
            let e1 = run(0.02, order);
            let e2 = run(0.01, order);
            assert!(
                e1 / e2 >= min_ratio,
                "{order:?}: errors {e1}, {e2}, ratio {}",
                e1 / e2
            );
        }
    }

    #[test]
    fn phi_series_branch_is_continuous() {
        for z in [-1.2e-4, -0.9e-4, 0.9e-4, 1.2e-4] {
            assert_abs_diff_eq!(phi1(z), (z.exp() - 1.0) / z, epsilon = 1e-12);
            assert_abs_diff_eq!(phi2(z), (z.exp() - 1.0 - z) / (z * z), epsilon = 1e-8);
        }
        assert_abs_diff_eq!(phi1(0.0), 1.0);
        assert_abs_diff_eq!(phi2(0.0), 0.5);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn mean_is_preserved_for_any_time(seed in 0u64..500, t10 in 1u32..40) {
            let g = Grid::new(5.0, 64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..64).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t = t10 as f64 / 10.0;
            let out = propagate(&g, t, &u).unwrap();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            proptest::prop_assert!((mean(&out) - mean(&u)).abs() < 1e-12);
        }
    }
}
