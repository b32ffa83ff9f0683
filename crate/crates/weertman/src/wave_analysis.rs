//! Extraction of the traveling wave `(eta, c, xi)` from a converged run and
//! quantitative checks of its structure.
//!
//! Velocity is measured three ways: the tracked front slope, the energy
//! identity `c = [F(eta_r) - F(eta_l)] / integral |eta'|^2`, and the
//! truncated integral `c = (eta_r - eta_l)^{-1} lim_R integral_{-R}^{R} F'(eta)`.
//! The integrand of the latter is not absolutely integrable (the profile has
//! matched `1/x` tails, so `F'(eta)` decays like `1/x` on both sides with
//! equal coefficients); symmetric truncation cancels the leading tails and
//! the remainder behaves like `c + b/R`, which is extrapolated by a linear
//! fit in `1/R`.
//!
//! Tails are fitted in log-log coordinates against the predicted asymptote
//! `eta - eta_well ~ (eta_l - eta_r) / (pi F''(eta_well) x)`, and the
//! approach to the wave is fitted as `d(t) ~ K exp(-kappa t)` on the window
//! where the shift-minimized distance lies in `[1e-6, 1e-2]`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{front_position, ReferenceProfile, RunReport, WaveState};
use crate::grid::{Grid, TrigInterpolant};
use crate::halflap;
use crate::potential::BistablePotential;

/// Ordinary least squares of `y` on `x`: slope, intercept and R^2.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = syy - slope * sxy;
    let r2 = if syy > 0.0 {
        1.0 - (ss_res / syy).max(0.0)
    } else if ss_res.abs() < 1e-300 {
        1.0
    } else {
        0.0
    };
    (slope, intercept, r2)
}

/// One fitted power-law tail `|eta - eta_well| ~ prefactor * x^exponent`.
#[derive(Debug, Clone, Copy)]
pub struct TailFit {
    pub prefactor: f64,
    pub exponent: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Fitted exponential decay `d(t) ~ k * exp(-kappa t)`.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub k: f64,
    pub kappa: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    /// Decades of distance spanned by the fitted window.
    pub decades: f64,
}

/// Side selector for tail fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    Left,
    Right,
}

/// A converged traveling wave: profile, velocity, phase and fitted tails.
#[derive(Debug, Clone)]
pub struct TravelingWave {
    pub grid: Grid,
    pub reference: ReferenceProfile,
    pub v: Vec<f64>,
    pub eta: Vec<f64>,
    pub c: f64,
    pub xi: f64,
    pub tail_left: TailFit,
    pub tail_right: TailFit,
    /// Measured endpoint defects `|eta(end) - eta_well| * L`.
    pub end_coeff_left: f64,
    pub end_coeff_right: f64,
    v_interp: TrigInterpolant,
    dv_interp: TrigInterpolant,
    hv_interp: TrigInterpolant,
    v_spectrum: Vec<Complex64>,
}

impl TravelingWave {
    /// Package a converged state with a known velocity.
    ///
    /// The profile must be nondecreasing up to 1e-8.
    pub fn from_state(
        state: &WaveState,
        p: &BistablePotential,
        c: f64,
        tail_window: (f64, f64),
    ) -> Result<Self> {
        let grid = state.grid.clone();
        let eta = state.u();
        let mut defect = 0.0f64;
        for pair in eta.windows(2) {
            defect = defect.min(pair[1] - pair[0]);
        }
        if defect < -1e-8 {
            return Err(Error::InvalidInput(format!(
                "profile is not monotone: worst decrease {defect}"
            )));
        }
        let (crossing, _) = front_position(grid.points(), &eta, p.midpoint());
        let xi = crossing.ok_or_else(|| {
            Error::InvalidInput("profile never crosses the midpoint level".into())
        })?;
        let dv = grid.spectral_derivative(&state.v)?;
        let hv = halflap::apply_spectral(&grid, &state.v)?;
        let n = grid.n_points();
        let l = grid.half_length();
        let end_coeff_left = (eta[0] - p.eta_l()).abs() * l;
        let end_coeff_right = (eta[n - 1] - p.eta_r()).abs() * l;
        let mut wave = TravelingWave {
            v_interp: TrigInterpolant::new(&grid, &state.v)?,
            dv_interp: TrigInterpolant::new(&grid, &dv)?,
            hv_interp: TrigInterpolant::new(&grid, &hv)?,
            v_spectrum: grid.forward(&state.v)?,
            reference: state.reference.clone(),
            v: state.v.clone(),
            eta,
            c,
            xi,
            tail_left: TailFit {
                prefactor: 0.0,
                exponent: 0.0,
                r_squared: 0.0,
                window: tail_window,
            },
            tail_right: TailFit {
                prefactor: 0.0,
                exponent: 0.0,
                r_squared: 0.0,
                window: tail_window,
            },
            end_coeff_left,
            end_coeff_right,
            grid,
        };
        wave.tail_left = fit_tail(&wave, p, TailSide::Left, tail_window)?;
        wave.tail_right = fit_tail(&wave, p, TailSide::Right, tail_window)?;
        Ok(wave)
    }

    /// Value of the wave at an arbitrary point. Inside `|x - center| <= 0.9 L`
    /// the band-limited interpolant of `v` is used; beyond, the fitted tail
    /// asymptotes extend the profile off the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let z = x - self.reference.center();
        if z.abs() <= 0.9 * self.grid.half_length() {
            self.reference.value(x) + self.v_interp.eval(x)
        } else if x > self.xi {
            let r = x - self.xi;
            self.reference.eta_r() - self.tail_right.prefactor * r.powf(self.tail_right.exponent)
        } else {
            let r = self.xi - x;
            self.reference.eta_l() + self.tail_left.prefactor * r.powf(self.tail_left.exponent)
        }
    }

    /// Spatial derivative, with the differentiated tail law off the grid.
    pub fn derivative_at(&self, x: f64) -> f64 {
        let z = x - self.reference.center();
        if z.abs() <= 0.9 * self.grid.half_length() {
            self.reference.derivative(x) + self.dv_interp.eval(x)
        } else if x > self.xi {
            let r = x - self.xi;
            -self.tail_right.prefactor
                * self.tail_right.exponent
                * r.powf(self.tail_right.exponent - 1.0)
        } else {
            let r = self.xi - x;
            -self.tail_left.prefactor
                * self.tail_left.exponent
                * r.powf(self.tail_left.exponent - 1.0)
        }
    }

    /// `|d/dx| eta` at an arbitrary point; off the grid the universal
    /// `(eta_r - eta_l) / (pi (x - xi))` asymptote applies.
    pub fn halflap_at(&self, x: f64) -> f64 {
        let z = x - self.reference.center();
        if z.abs() <= 0.9 * self.grid.half_length() {
            self.reference.halflap(x) + self.hv_interp.eval(x)
        } else {
            self.reference.amplitude() / (std::f64::consts::PI * (x - self.xi))
        }
    }

    /// Samples of `eta(x - shift)` on the grid (reference part shifted in
    /// closed form, `v` part by spectral translation).
    pub fn shifted_samples(&self, shift: f64) -> Vec<f64> {
        let grid = &self.grid;
        let n = grid.n_points();
        let nyquist = n / 2;
        let mut spec = self.v_spectrum.clone();
        for (j, z) in spec.iter_mut().enumerate() {
            let k = grid.wavenumbers()[j];
            if j == nyquist {
                *z *= (k * shift).cos();
            } else {
                *z *= Complex64::from_polar(1.0, -k * shift);
            }
        }
        let v_shifted = grid.inverse(&spec).expect("spectrum length matches grid");
        let shifted_ref = self.reference.recentered(self.reference.center() + shift);
        grid.points()
            .iter()
            .zip(&v_shifted)
            .map(|(&x, &v)| shifted_ref.value(x) + v)
            .collect()
    }
}

/// Least-squares front velocity over the second half of the recorded run.
pub fn measure_velocity_tracking(report: &RunReport) -> Result<f64> {
    let t_end = report
        .records
        .last()
        .ok_or_else(|| Error::InvalidInput("empty run report".into()))?
        .t;
    let t_start = report.records.first().unwrap().t;
    let t_mid = 0.5 * (t_start + t_end);
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for r in &report.records {
        if r.t >= t_mid && r.front.is_finite() {
            ts.push(r.t);
            xs.push(r.front);
        }
    }
    if ts.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "need at least 10 front samples after the transient, got {}",
            ts.len()
        )));
    }
    let (slope, _, _) = linear_fit(&ts, &xs);
    Ok(slope)
}

/// Velocity from the energy identity
/// `c = [F(eta_r) - F(eta_l)] / integral |eta'|^2`.
pub fn velocity_identity_energy(w: &TravelingWave, p: &BistablePotential) -> Result<f64> {
    let grid = &w.grid;
    let dv = grid.spectral_derivative(&w.v)?;
    let h = grid.spacing();
    let denom: f64 = grid
        .points()
        .iter()
        .zip(&dv)
        .map(|(&x, &d)| {
            let e = w.reference.derivative(x) + d;
            e * e
        })
        .sum::<f64>()
        * h;
    if denom < 1e-14 {
        return Err(Error::InvalidInput(
            "vanishing kinetic denominator in the energy identity".into(),
        ));
    }
    Ok(p.well_imbalance() / denom)
}

/// Trapezoid integral of grid `values` over `|x - center| <= radius`, with
/// the partial cells at the window edges handled by linear interpolation.
pub fn truncated_symmetric_integral(
    grid: &Grid,
    values: &[f64],
    center: f64,
    radius: f64,
) -> f64 {
    let h = grid.spacing();
    let points = grid.points();
    let n = points.len();
    let a = (center - radius).max(points[0]);
    let b = (center + radius).min(points[n - 1]);
    if b <= a {
        return 0.0;
    }
    let at = |x: f64| -> (usize, f64) {
        let idx = ((x - points[0]) / h).floor().clamp(0.0, (n - 2) as f64) as usize;
        let frac = (x - points[idx]) / h;
        (idx, frac)
    };
    let value_at = |x: f64| -> f64 {
        let (idx, frac) = at(x);
        values[idx] * (1.0 - frac) + values[idx + 1] * frac
    };
    let (ja, _) = at(a);
    let (jb, _) = at(b);
    if ja == jb {
        return 0.5 * (value_at(a) + value_at(b)) * (b - a);
    }
    let mut acc = 0.5 * (value_at(a) + values[ja + 1]) * (points[ja + 1] - a);
    for j in ja + 1..jb {
        acc += 0.5 * h * (values[j] + values[j + 1]);
    }
    acc += 0.5 * (values[jb] + value_at(b)) * (b - points[jb]);
    acc
}

/// Linear fit of `vals ~ c + b / r`: returns `(c, b)`.
pub fn extrapolate_reciprocal(radii: &[f64], vals: &[f64]) -> (f64, f64) {
    let inv: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    let (b, c, _) = linear_fit(&inv, vals);
    (c, b)
}

/// Velocity from the truncated-integral identity, extrapolated in `1/R`.
pub fn velocity_identity_integral(
    w: &TravelingWave,
    p: &BistablePotential,
    radii: &[f64],
) -> Result<f64> {
    if radii.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two truncation radii".into(),
        ));
    }
    if radii.windows(2).any(|r| r[1] <= r[0]) {
        return Err(Error::InvalidInput(
            "truncation radii must be increasing".into(),
        ));
    }
    let half = w.grid.half_length() / 2.0;
    if radii.iter().any(|&r| r > half + 1e-9) {
        return Err(Error::InvalidInput(format!(
            "truncation radii must stay within the interior (<= {half})"
        )));
    }
    let amplitude = w.reference.amplitude();
    let integrand: Vec<f64> = w.eta.iter().map(|&e| p.f1(e) / amplitude).collect();
    let vals: Vec<f64> = radii
        .iter()
        .map(|&r| truncated_symmetric_integral(&w.grid, &integrand, w.xi, r))
        .collect();
    let (c, _) = extrapolate_reciprocal(radii, &vals);
    Ok(c)
}

/// Log-log fit of one tail of the profile against distance from the phase.
pub fn fit_tail(
    w: &TravelingWave,
    p: &BistablePotential,
    side: TailSide,
    window: (f64, f64),
) -> Result<TailFit> {
    let (x_lo, x_hi) = window;
    if !(x_lo >= 10.0) {
        return Err(Error::InvalidInput(format!(
            "tail window must start at x >= 10, got {x_lo}"
        )));
    }
    if !(x_hi > x_lo) || x_hi > w.grid.half_length() / 2.0 {
        return Err(Error::InvalidInput(format!(
            "tail window ({x_lo}, {x_hi}) must be increasing and inside the interior"
        )));
    }
    let mut logs_x = Vec::new();
    let mut logs_v = Vec::new();
    let mut max_val = 0.0f64;
    for (j, &x) in w.grid.points().iter().enumerate() {
        let z = match side {
            TailSide::Right => x - w.xi,
            TailSide::Left => w.xi - x,
        };
        if z >= x_lo && z <= x_hi {
            let val = match side {
                TailSide::Right => p.eta_r() - w.eta[j],
                TailSide::Left => w.eta[j] - p.eta_l(),
            };
            max_val = max_val.max(val.abs());
            if val > 1e-300 {
                logs_x.push(z.ln());
                logs_v.push(val.ln());
            }
        }
    }
    if max_val < 1e-12 {
        return Err(Error::WindowTooFar);
    }
    if logs_x.len() < 10 {
        return Err(Error::InvalidInput(
            "tail window contains fewer than 10 usable samples".into(),
        ));
    }
    let (slope, intercept, r2) = linear_fit(&logs_x, &logs_v);
    Ok(TailFit {
        prefactor: intercept.exp(),
        exponent: slope,
        r_squared: r2,
        window,
    })
}

/// Predicted tail prefactor magnitude `|eta_l - eta_r| / (pi F''(well))`.
pub fn predicted_tail_prefactor(p: &BistablePotential, side: TailSide) -> f64 {
    let well = match side {
        TailSide::Left => p.eta_l(),
        TailSide::Right => p.eta_r(),
    };
    (p.eta_r() - p.eta_l()) / (std::f64::consts::PI * p.f2(well))
}

/// Fit `log d` against `t` on the largest contiguous window with
/// `d` in `[1e-6, 1e-2]`.
pub fn fit_convergence_rate(series: &[(f64, f64)]) -> Result<RateFit> {
    let in_window = |d: f64| (1e-6..=1e-2).contains(&d);
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &(_, d)) in series.iter().enumerate() {
        if in_window(d) {
            if start.is_none() {
                start = Some(i);
            }
            let s = start.unwrap();
            if best.map_or(true, |(bs, be)| i - s > be - bs) {
                best = Some((s, i));
            }
        } else {
            start = None;
        }
    }
    let (s, e) = best.ok_or(Error::NoExponentialRegime)?;
    if e - s + 1 < 10 {
        return Err(Error::NoExponentialRegime);
    }
    let ts: Vec<f64> = series[s..=e].iter().map(|&(t, _)| t).collect();
    let logs: Vec<f64> = series[s..=e].iter().map(|&(_, d)| d.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&ts, &logs);
    let d_max = series[s..=e].iter().map(|&(_, d)| d).fold(0.0, f64::max);
    let d_min = series[s..=e]
        .iter()
        .map(|&(_, d)| d)
        .fold(f64::INFINITY, f64::min);
    Ok(RateFit {
        k: intercept.exp(),
        kappa: -slope,
        r_squared: r2,
        window: (ts[0], *ts.last().unwrap()),
        decades: (d_max / d_min).log10(),
    })
}

/// Sup-norm distance on the interior after optimizing a continuous shift
/// of the wave; returns `(xi_best, distance)`.
///
/// A coarse scan around `guess` brackets the minimum, then golden-section
/// refines it; the shifted wave is evaluated by spectral translation.
pub fn shift_minimized_distance(w: &TravelingWave, u: &[f64], guess: f64) -> (f64, f64) {
    let grid = &w.grid;
    let half = grid.half_length() / 2.0;
    let interior: Vec<usize> = grid
        .points()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x.abs() <= half)
        .map(|(j, _)| j)
        .collect();
    let distance = |shift: f64| -> f64 {
        let eta = w.shifted_samples(shift);
        interior
            .iter()
            .map(|&j| (u[j] - eta[j]).abs())
            .fold(0.0, f64::max)
    };
    let mut best_shift = guess;
    let mut best_val = f64::INFINITY;
    for i in 0..=16 {
        let s = guess - 2.0 + 4.0 * i as f64 / 16.0;
        let d = distance(s);
        if d < best_val {
            best_val = d;
            best_shift = s;
        }
    }
    // Golden-section on the bracketing interval.
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (best_shift - 0.3, best_shift + 0.3);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (distance(c), distance(d));
    for _ in 0..48 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = distance(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = distance(d);
        }
    }
    let shift = 0.5 * (a + b);
    let val = distance(shift);
    if val < best_val {
        (shift, val)
    } else {
        (best_shift, best_val)
    }
}

/// Shift-minimized distance of every recorded snapshot to the wave.
pub fn distance_series(w: &TravelingWave, grid: &Grid, report: &RunReport) -> Vec<(f64, f64)> {
    report
        .snapshots
        .iter()
        .enumerate()
        .map(|(i, snap)| {
            let u = report.snapshot_u(grid, i);
            let guess = if report.records[i].front.is_finite() {
                report.records[i].front - w.xi
            } else {
                0.0
            };
            let (_, d) = shift_minimized_distance(w, &u, guess);
            (snap.t, d)
        })
        .collect()
}

/// Extract the converged wave from a finished run: velocity from front
/// tracking, phase from the final midpoint crossing, tails fitted in the
/// given window.
pub fn extract_wave(
    report: &RunReport,
    final_state: &WaveState,
    p: &BistablePotential,
    tail_window: (f64, f64),
) -> Result<TravelingWave> {
    let c = measure_velocity_tracking(report)?;
    TravelingWave::from_state(final_state, p, c, tail_window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{make_initial, InitialKind};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn exact_wave(amplitude: f64) -> (BistablePotential, TravelingWave) {
        let grid = Grid::new(200.0, 1 << 12).unwrap();
        let p = BistablePotential::sinusoidal(amplitude).unwrap();
        let state = make_initial(&grid, &p, InitialKind::SmoothedStep { width: amplitude })
            .unwrap();
        let w = TravelingWave::from_state(&state, &p, 0.0, (20.0, 80.0)).unwrap();
        (p, w)
    }

    #[test]
    fn synthetic_linear_front_velocity() {
        let grid = Grid::new(100.0, 1 << 10).unwrap();
        let p = BistablePotential::sinusoidal(1.0).unwrap();
        let state = make_initial(&grid, &p, InitialKind::Step).unwrap();
        let mut report = RunReport {
            records: Vec::new(),
            snapshots: Vec::new(),
            base_reference: state.reference.clone(),
            recenters: 0,
            endpoint_tail_coeff: 0.0,
        };
        for i in 0..=40 {
            let t = i as f64;
            report.records.push(crate::evolution::RunRecord {
                t,
                front: 0.3 * t,
                residual: 0.0,
                u_min: 0.0,
                u_max: 1.0,
            });
        }
        let c = measure_velocity_tracking(&report).unwrap();
        assert_abs_diff_eq!(c, 0.3, epsilon = 1e-12);
        report.records.truncate(5);
        assert!(measure_velocity_tracking(&report).is_err());
    }

    #[test]
    fn energy_identity_denominator_matches_quadrature() {
        let (p, w) = exact_wave(1.0);
        // integral |eta'|^2 = A / (2 pi) for the arctan profile of width A.
        let c = velocity_identity_energy(&w, &p).unwrap();
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
        let grid = &w.grid;
        let dv = grid.spectral_derivative(&w.v).unwrap();
        let denom: f64 = grid
            .points()
            .iter()
            .zip(&dv)
            .map(|(&x, &d)| {
                let e = w.reference.derivative(x) + d;
                e * e
            })
            .sum::<f64>()
            * grid.spacing();
        assert_abs_diff_eq!(denom, 1.0 / (2.0 * PI), epsilon = 1e-5);
    }

    #[test]
    fn reciprocal_extrapolation_recovers_arctan_limit() {
        // Trapezoid integrals of 1/(1+x^2) over |x| <= R equal 2 arctan R up
        // to grid error; the 1/R extrapolation must recover pi.
        let grid = Grid::new(200.0, 1 << 12).unwrap();
        let vals: Vec<f64> = grid.points().iter().map(|&x| 1.0 / (1.0 + x * x)).collect();
        let radii = [20.0, 40.0, 60.0, 80.0, 100.0];
        let integrals: Vec<f64> = radii
            .iter()
            .map(|&r| truncated_symmetric_integral(&grid, &vals, 0.0, r))
            .collect();
        for (r, i) in radii.iter().zip(&integrals) {
            assert_abs_diff_eq!(*i, 2.0 * r.atan(), epsilon = 1e-4);
        }
        let (c, b) = extrapolate_reciprocal(&radii, &integrals);
        assert_abs_diff_eq!(c, PI, epsilon = 5e-4);
        assert!(b < 0.0);
    }

    #[test]
    fn integral_identity_vanishes_on_the_balanced_wave() {
        let (p, w) = exact_wave(1.0);
        let c = velocity_identity_integral(&w, &p, &[30.0, 50.0, 70.0, 90.0]).unwrap();
        assert!(c.abs() <= 1e-4, "extrapolated velocity {c}");
        assert!(velocity_identity_integral(&w, &p, &[50.0, 30.0]).is_err());
        assert!(velocity_identity_integral(&w, &p, &[30.0, 150.0]).is_err());
    }

    #[test]
    fn tail_fit_recovers_arctan_asymptote() {
        let (p, w) = exact_wave(1.0);
        for side in [TailSide::Left, TailSide::Right] {
            let fit = fit_tail(&w, &p, side, (20.0, 80.0)).unwrap();
            assert!(
                (fit.exponent + 1.0).abs() <= 0.05,
                "{side:?} exponent {}",
                fit.exponent
            );
            let predicted = predicted_tail_prefactor(&p, side).abs();
            assert_abs_diff_eq!(predicted, 1.0 / PI, epsilon = 1e-12);
            assert!(
                (fit.prefactor - predicted).abs() / predicted <= 0.10,
                "{side:?} prefactor {}",
                fit.prefactor
            );
        }
        assert!(fit_tail(&w, &p, TailSide::Right, (5.0, 80.0)).is_err());
    }

    #[test]
    fn derivative_bounds_on_the_exact_profile() {
        // eta'(x) = 1/(pi (1 + x^2)) sits between 0.9/(pi x^2) and
        // 1.1/(pi x^2) over [10, 80].
        let (_, w) = exact_wave(1.0);
        for &x in w.grid.points() {
            if (10.0..=80.0).contains(&x) {
                let d = w.derivative_at(x);
                assert!(d >= 0.9 / (PI * x * x), "x = {x}, eta' = {d}");
                assert!(d <= 1.1 / (PI * x * x), "x = {x}, eta' = {d}");
            }
        }
    }

    #[test]
    fn underflowing_tail_window_is_rejected() {
        let grid = Grid::new(200.0, 1 << 12).unwrap();
        let p = BistablePotential::sinusoidal(1.0).unwrap();
        // Profile pinned exactly at eta_r beyond x = 40.
        let u: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| {
                if x >= 40.0 {
                    1.0
                } else if x <= -40.0 {
                    0.0
                } else {
                    0.5 + (PI * x / 80.0).sin() / 2.0
                }
            })
            .collect();
        let reference = ReferenceProfile::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let state = WaveState::from_u_samples(&grid, reference, &u).unwrap();
        let err = TravelingWave::from_state(&state, &p, 0.0, (50.0, 80.0)).unwrap_err();
        assert!(matches!(err, Error::WindowTooFar), "got {err}");
    }

    #[test]
    fn rate_fit_on_exact_exponential() {
        let series: Vec<(f64, f64)> = (0..=80)
            .map(|i| {
                let t = 0.5 * i as f64;
                (t, 3.0 * (-0.5 * t).exp())
            })
            .collect();
        let fit = fit_convergence_rate(&series).unwrap();
        assert_abs_diff_eq!(fit.kappa, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.k, 3.0, epsilon = 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-10);
        assert!(fit.decades >= 3.0);
    }

    #[test]
    fn rate_fit_rejects_flat_series() {
        let series: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, 0.5)).collect();
        assert!(matches!(
            fit_convergence_rate(&series),
            Err(Error::NoExponentialRegime)
        ));
    }

    #[test]
    fn shift_minimization_finds_a_planted_shift() {
        let (_, w) = exact_wave(1.0);
        let planted = 0.731;
        let u = w.shifted_samples(planted);
        let (xi, d) = shift_minimized_distance(&w, &u, 0.5);
        assert_abs_diff_eq!(xi, planted, epsilon = 1e-6);
        assert!(d <= 1e-9, "residual distance {d}");
    }

    #[test]
    fn eval_matches_closed_form_inside_and_tails_outside() {
        let (_, w) = exact_wave(1.0);
        let f = |x: f64| 0.5 + x.atan() / PI;
        for x in [-60.0, -10.0, 0.0, 15.5, 99.0] {
            assert_abs_diff_eq!(w.eval(x), f(x), epsilon = 1e-6);
        }
        // Beyond the interpolation region the fitted tail takes over.
        let far = w.eval(195.0);
        assert!((far - f(195.0)).abs() < 2e-4, "far value {far}");
    }
}
