//! Comparison-principle and sub/super-solution checks.
//!
//! Around a traveling wave `(eta, c)` the functions
//!
//! ```text
//! w_i(t,x) = eta(zeta_i(t,x)) + i delta e^{-beta t},
//! zeta_i(t,x) = x - c t + i l + i sigma delta (1 - e^{-beta t}),   i = -1, +1,
//! ```
//!
//! are a sub-solution (`i = -1`) and a super-solution (`i = +1`) of the
//! evolution equation, provided `beta` is the well-curvature floor and
//! `sigma` is large enough that `sigma beta eta'(zeta) - beta + F''(theta) >= 0`
//! also holds between the wells where `F'' < 0`. The module computes those
//! constants from a converged wave, evaluates the signed residual
//! `i [ (d/dt + |d/dx|) w_i + F'(w_i) ]` at sample points, and checks the
//! discrete comparison principle on evolved ordered pairs.

use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolveConfig, ReferenceProfile, WaveState};
use crate::grid::Grid;
use crate::potential::BistablePotential;
use crate::wave_analysis::TravelingWave;

/// Constants of the sub/super-solution construction.
///
/// `sigma` is the value actually used in `zeta_i`. The printed formula
/// `beta^{-1} (inf_{|y|<R0} eta'(y))^{-1} (||F''|| + beta)` exceeds 1 for any
/// realistic profile; capping it at 1 (stored as `sigma_capped`) breaks the
/// residual sign between the wells, so the uncapped value is used and both
/// are reported.
#[derive(Debug, Clone, Copy)]
pub struct SqueezeParams {
    pub beta: f64,
    pub sigma: f64,
    pub sigma_capped: f64,
    pub r0: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub delta: f64,
    pub l: f64,
}

impl SqueezeParams {
    /// Replace the vertical offset `delta` (must stay in `(0, delta1)`).
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < self.delta1) {
            return Err(Error::InvalidInput(format!(
                "delta must lie in (0, {}), got {delta}",
                self.delta1
            )));
        }
        self.delta = delta;
        Ok(self)
    }

    /// Replace the horizontal offset `l`.
    pub fn with_l(mut self, l: f64) -> Self {
        self.l = l;
        self
    }
}

/// Sub- or super-solution selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionSide {
    Sub,
    Super,
}

impl SolutionSide {
    pub fn sign(self) -> f64 {
        match self {
            SolutionSide::Sub => -1.0,
            SolutionSide::Super => 1.0,
        }
    }
}

/// Compute `beta`, the transition radius `R0` and the shift constant
/// `sigma` for a converged wave, with `delta1 < delta0`.
///
/// Defaults: `delta = delta1 / 2`, `l = 0`.
pub fn compute_squeeze_params(
    p: &BistablePotential,
    w: &TravelingWave,
    delta1: f64,
) -> Result<SqueezeParams> {
    let delta0 = p.delta0();
    if !(delta1 > 0.0 && delta1 < delta0) {
        return Err(Error::InvalidInput(format!(
            "delta1 must lie in (0, delta0 = {delta0}), got {delta1}"
        )));
    }
    let beta = p.validate()?.beta;
    let gap = 0.5 * (delta0 - delta1);

    // Transition radius: beyond R0 the profile is within gap of its limits.
    let l_max = 0.9 * w.grid.half_length();
    let solve = |target: f64, right: bool| -> f64 {
        let f = |r: f64| {
            if right {
                p.eta_r() - w.eval(w.xi + r) - target
            } else {
                w.eval(w.xi - r) - p.eta_l() - target
            }
        };
        let (mut lo, mut hi) = (0.0, l_max);
        if f(lo) <= 0.0 {
            return 0.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let r0 = solve(gap, true).max(solve(gap, false));

    let mut inf_slope = f64::INFINITY;
    for &x in w.grid.points() {
        if (x - w.xi).abs() <= r0 {
            inf_slope = inf_slope.min(w.derivative_at(x));
        }
    }
    if !(inf_slope > 0.0) {
        return Err(Error::InvalidInput(format!(
            "profile slope must be positive on the transition region, got {inf_slope}"
        )));
    }
    let sigma_raw = (p.max_f2_abs() + beta) / (beta * inf_slope);
    Ok(SqueezeParams {
        beta,
        sigma: sigma_raw,
        sigma_capped: sigma_raw.min(1.0),
        r0,
        delta0,
        delta1,
        delta: 0.5 * delta1,
        l: 0.0,
    })
}

/// Argument of the wave inside `w_i`.
pub fn zeta(w: &TravelingWave, sp: &SqueezeParams, side: SolutionSide, t: f64, x: f64) -> f64 {
    let i = side.sign();
    x - w.c * t + i * sp.l + i * sp.sigma * sp.delta * (1.0 - (-sp.beta * t).exp())
}

/// Value of the sub/super-solution `w_i(t, x)`.
pub fn build_subsuper(
    w: &TravelingWave,
    sp: &SqueezeParams,
    side: SolutionSide,
    t: f64,
    x: f64,
) -> f64 {
    let i = side.sign();
    w.eval(zeta(w, sp, side, t, x)) + i * sp.delta * (-sp.beta * t).exp()
}

/// One evaluated violation: side sign, time, position, signed residual.
pub type ResidualViolation = (f64, f64, f64, f64);

/// Outcome of [`verify_subsuper_residual`].
#[derive(Debug, Clone)]
pub struct SubsuperReport {
    pub min_signed_residual: f64,
    pub tolerance: f64,
    pub violations: Vec<ResidualViolation>,
    pub passed: bool,
}

/// Evaluate `i [ (d/dt + |d/dx|) w_i + F'(w_i) ]` on the sample lattice and
/// require it nonnegative up to `10x` the wave's steady-equation residual.
///
/// The time derivative is analytic; the half-Laplacian of the shifted
/// profile is the shifted half-Laplacian of the profile.
pub fn verify_subsuper_residual(
    p: &BistablePotential,
    w: &TravelingWave,
    sp: &SqueezeParams,
    sample_times: &[f64],
    sample_points: &[f64],
) -> Result<SubsuperReport> {
    let wres = crate::evolution::weertman_residual(&w.grid, &w.reference, &w.v, w.c, p)?;
    let tolerance = (10.0 * wres.sup).max(1e-9);
    let mut min_signed = f64::INFINITY;
    let mut violations = Vec::new();
    for side in [SolutionSide::Sub, SolutionSide::Super] {
        let i = side.sign();
        for &t in sample_times {
            let decay = (-sp.beta * t).exp();
            let dzeta_dt = -w.c + i * sp.sigma * sp.delta * sp.beta * decay;
            for &x in sample_points {
                let z = zeta(w, sp, side, t, x);
                let wi = w.eval(z) + i * sp.delta * decay;
                let dt_wi = w.derivative_at(z) * dzeta_dt - i * sp.delta * sp.beta * decay;
                let signed = i * (dt_wi + w.halflap_at(z) + p.f1(wi));
                if signed < min_signed {
                    min_signed = signed;
                }
                if signed < -tolerance {
                    violations.push((i, t, x, signed));
                }
            }
        }
    }
    Ok(SubsuperReport {
        min_signed_residual: min_signed,
        tolerance,
        passed: violations.is_empty(),
        violations,
    })
}

/// Outcome of [`verify_comparison`].
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// Smallest gap `u_high - u_low` seen over all sampled times.
    pub worst_gap: f64,
    pub worst_time: f64,
    pub worst_x: f64,
    /// True when ordering held to `1e-9` at every sampled time.
    pub ordered: bool,
    /// Integral of the initial gap over `x` in `[0, 1]`.
    pub initial_gap_integral: f64,
    /// Smallest gap at `t = 1`, when that time was sampled.
    pub strict_gap_at_1: Option<f64>,
}

const ORDERING_TOL: f64 = 1e-9;

/// Evolve an ordered pair of initial conditions and check that ordering is
/// preserved at the sampled times, with a strict gap at `t = 1` whenever the
/// initial gap has positive integral over `[0, 1]`.
///
/// Both states share one reference profile so they see the identical
/// discrete flow map.
pub fn verify_comparison(
    p: &BistablePotential,
    grid: &Grid,
    u0_low: &[f64],
    u0_high: &[f64],
    cfg: &EvolveConfig,
    times: &[f64],
) -> Result<ComparisonReport> {
    if u0_low.len() != grid.n_points() || u0_high.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_points(),
            got: u0_low.len().min(u0_high.len()),
        });
    }
    let (lo, hi) = (p.eta_l() - p.delta0(), p.eta_r() + p.delta0());
    for (a, b) in u0_low.iter().zip(u0_high) {
        if a > b {
            return Err(Error::InvalidInput(format!(
                "initial data must be ordered: {a} > {b}"
            )));
        }
        for v in [a, b] {
            if !(lo - 1e-12 <= *v && *v <= hi + 1e-12) {
                return Err(Error::InvalidInitialData(format!(
                    "initial range violation: {v} outside [{lo}, {hi}]"
                )));
            }
        }
    }

    let reference = shared_reference(p, grid, u0_low, u0_high)?;
    let s_low = WaveState::from_u_samples(grid, reference.clone(), u0_low)?;
    let s_high = WaveState::from_u_samples(grid, reference, u0_high)?;
    let (rep_low, _) = evolve(&s_low, p, cfg)?;
    let (rep_high, _) = evolve(&s_high, p, cfg)?;

    let h = grid.spacing();
    let initial_gap_integral: f64 = grid
        .points()
        .iter()
        .zip(u0_high.iter().zip(u0_low))
        .filter(|(&x, _)| (0.0..=1.0).contains(&x))
        .map(|(_, (b, a))| (b - a) * h)
        .sum();

    let snapshot_at = |report: &crate::evolution::RunReport, t: f64| -> Option<usize> {
        report
            .snapshots
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap()
            })
            .filter(|(_, s)| (s.t - t).abs() <= cfg.record_every)
            .map(|(i, _)| i)
    };

    let mut worst = (f64::INFINITY, f64::NAN, f64::NAN);
    let mut strict_gap_at_1 = None;
    for &t in times {
        let (il, ih) = match (snapshot_at(&rep_low, t), snapshot_at(&rep_high, t)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "no recorded snapshot near t = {t}"
                )))
            }
        };
        let ul = rep_low.snapshot_u(grid, il);
        let uh = rep_high.snapshot_u(grid, ih);
        let mut min_gap = f64::INFINITY;
        let mut min_x = f64::NAN;
        for (j, &x) in grid.points().iter().enumerate() {
            let gap = uh[j] - ul[j];
            if gap < min_gap {
                min_gap = gap;
                min_x = x;
            }
        }
        if min_gap < worst.0 {
            worst = (min_gap, t, min_x);
        }
        if (t - 1.0).abs() < 1e-9 {
            strict_gap_at_1 = Some(min_gap);
        }
    }

    Ok(ComparisonReport {
        worst_gap: worst.0,
        worst_time: worst.1,
        worst_x: worst.2,
        ordered: worst.0 >= -ORDERING_TOL,
        initial_gap_integral,
        strict_gap_at_1,
    })
}

/// Pick one reference for both members of an ordered pair: an arctan front
/// when both profiles are front-like, a flat level otherwise.
fn shared_reference(
    p: &BistablePotential,
    grid: &Grid,
    u0_low: &[f64],
    u0_high: &[f64],
) -> Result<ReferenceProfile> {
    let n = grid.n_points();
    let d0 = p.delta0();
    let front_like = |u: &[f64]| {
        (u[0] - p.eta_l()).abs() <= d0 + 1e-9 && (u[n - 1] - p.eta_r()).abs() <= d0 + 1e-9
    };
    if front_like(u0_low) && front_like(u0_high) {
        let avg: Vec<f64> = u0_low
            .iter()
            .zip(u0_high)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let (crossing, _) = crate::evolution::front_position(grid.points(), &avg, p.midpoint());
        if let Some(center) = crossing {
            let width = 0.5 * (p.f2(p.eta_l()) + p.f2(p.eta_r()));
            return ReferenceProfile::new(p.eta_l(), p.eta_r(), center, width);
        }
    }
    Ok(ReferenceProfile::flat(p.midpoint()))
}
