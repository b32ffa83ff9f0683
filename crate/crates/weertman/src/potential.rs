//! Bistable potentials `F` with wells at `eta_l < eta_r`, their first three
//! derivatives, and validation of the structural hypotheses the solver
//! relies on: `F'` vanishes at both wells, `F'' > 0` on a margin
//! `Delta_0` around each well, and the analytic derivatives are consistent
//! with finite differences.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Number of samples used when minimizing `F''` over a well margin.
const CURVATURE_SAMPLES: usize = 10_000;

/// The supported potential families.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialFamily {
    /// `F(u) = (A / 4 pi^2) (1 - cos 2 pi u)`, wells at 0 and 1.
    Sinusoidal { amplitude: f64 },
    /// Sinusoidal minus `drive * u`; wells relocate and the two well
    /// energies split, which forces a nonzero front velocity.
    TiltedSinusoidal { amplitude: f64, drive: f64 },
    /// `F(u) = (1 - u^2)^2 / 4`, wells at -1 and 1.
    Quartic,
    /// Quartic plus a Gaussian dip at the origin, creating a shallow
    /// intermediate well between two humps. The dip parameters are fixed
    /// implementation constants (depth 0.05, width 0.15); the outer wells
    /// stay at -1 and 1 to well below validation tolerance.
    CamelHump,
}

const CAMEL_DEPTH: f64 = -0.05;
const CAMEL_WIDTH: f64 = 0.15;

/// A validated-by-construction bistable potential with margin `Delta_0`.
#[derive(Debug, Clone)]
pub struct BistablePotential {
    family: PotentialFamily,
    eta_l: f64,
    eta_r: f64,
    delta0: f64,
}

/// Curvature floor `beta = inf F''` over the two `Delta_0`-neighborhoods.
#[derive(Debug, Clone, Copy)]
pub struct WellCurvature {
    pub beta: f64,
}

impl BistablePotential {
    /// Sinusoidal potential with wells at 0 and 1 and default margin 0.1.
    pub fn sinusoidal(amplitude: f64) -> Result<Self> {
        if !(amplitude > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        Ok(BistablePotential {
            family: PotentialFamily::Sinusoidal { amplitude },
            eta_l: 0.0,
            eta_r: 1.0,
            delta0: 0.1,
        })
    }

    /// Tilted sinusoidal potential. The wells are relocated to the roots of
    /// `F'` near 0 and 1, found by bisection; if the tilt removes either
    /// root the construction fails with "drive too large".
    pub fn tilted_sinusoidal(amplitude: f64, drive: f64) -> Result<Self> {
        if !(amplitude > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        let f1 = |u: f64| (amplitude / (2.0 * PI)) * (2.0 * PI * u).sin() - drive;
        // F'' > 0 exactly on (well - 1/4, well + 1/4) for the untilted wells,
        // so a sign change inside that window is the persistence criterion.
        let eta_l = bisect_root(&f1, -0.249, 0.249)
            .ok_or_else(|| Error::InvalidPotential("drive too large".into()))?;
        let eta_r = bisect_root(&f1, 0.751, 1.249)
            .ok_or_else(|| Error::InvalidPotential("drive too large".into()))?;
        Ok(BistablePotential {
            family: PotentialFamily::TiltedSinusoidal { amplitude, drive },
            eta_l,
            eta_r,
            delta0: 0.1,
        })
    }

    /// Quartic double well `(1 - u^2)^2 / 4` with margin 0.2.
    pub fn quartic() -> Result<Self> {
        Ok(BistablePotential {
            family: PotentialFamily::Quartic,
            eta_l: -1.0,
            eta_r: 1.0,
            delta0: 0.2,
        })
    }

    /// Camel-hump variant of the quartic well; see [`PotentialFamily`].
    pub fn camel_hump() -> Result<Self> {
        let f1 = |u: f64| {
            u * u * u - u + CAMEL_DEPTH * (-2.0 * u / (CAMEL_WIDTH * CAMEL_WIDTH))
                * (-u * u / (CAMEL_WIDTH * CAMEL_WIDTH)).exp()
        };
        let eta_l = bisect_root(&f1, -1.2, -0.8)
            .ok_or_else(|| Error::InvalidPotential("camel-hump well lost".into()))?;
        let eta_r = bisect_root(&f1, 0.8, 1.2)
            .ok_or_else(|| Error::InvalidPotential("camel-hump well lost".into()))?;
        Ok(BistablePotential {
            family: PotentialFamily::CamelHump,
            eta_l,
            eta_r,
            delta0: 0.2,
        })
    }

    /// Replace the well margin; the new value is checked by `validate`.
    pub fn with_delta0(mut self, delta0: f64) -> Result<Self> {
        if !(delta0 > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "delta0 must be positive, got {delta0}"
            )));
        }
        self.delta0 = delta0;
        Ok(self)
    }

    pub fn family(&self) -> &PotentialFamily {
        &self.family
    }

    pub fn eta_l(&self) -> f64 {
        self.eta_l
    }

    pub fn eta_r(&self) -> f64 {
        self.eta_r
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// Midpoint level between the two wells, used for front tracking.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.eta_l + self.eta_r)
    }

    /// `F(eta_r) - F(eta_l)`; its sign is the sign of the wave velocity.
    pub fn well_imbalance(&self) -> f64 {
        self.f(self.eta_r) - self.f(self.eta_l)
    }

    pub fn f(&self, u: f64) -> f64 {
        match self.family {
            PotentialFamily::Sinusoidal { amplitude } => {
                amplitude / (4.0 * PI * PI) * (1.0 - (2.0 * PI * u).cos())
            }
            PotentialFamily::TiltedSinusoidal { amplitude, drive } => {
                amplitude / (4.0 * PI * PI) * (1.0 - (2.0 * PI * u).cos()) - drive * u
            }
            PotentialFamily::Quartic => {
                let w = 1.0 - u * u;
                0.25 * w * w
            }
            PotentialFamily::CamelHump => {
                let w = 1.0 - u * u;
                0.25 * w * w + CAMEL_DEPTH * (-u * u / (CAMEL_WIDTH * CAMEL_WIDTH)).exp()
            }
        }
    }

    pub fn f1(&self, u: f64) -> f64 {
        match self.family {
            PotentialFamily::Sinusoidal { amplitude } => {
                amplitude / (2.0 * PI) * (2.0 * PI * u).sin()
            }
            PotentialFamily::TiltedSinusoidal { amplitude, drive } => {
                amplitude / (2.0 * PI) * (2.0 * PI * u).sin() - drive
            }
            PotentialFamily::Quartic => u * u * u - u,
            PotentialFamily::CamelHump => {
                let w2 = CAMEL_WIDTH * CAMEL_WIDTH;
                u * u * u - u + CAMEL_DEPTH * (-2.0 * u / w2) * (-u * u / w2).exp()
            }
        }
    }

    pub fn f2(&self, u: f64) -> f64 {
        match self.family {
            PotentialFamily::Sinusoidal { amplitude }
            | PotentialFamily::TiltedSinusoidal { amplitude, .. } => {
                amplitude * (2.0 * PI * u).cos()
            }
            PotentialFamily::Quartic => 3.0 * u * u - 1.0,
            PotentialFamily::CamelHump => {
                let w2 = CAMEL_WIDTH * CAMEL_WIDTH;
                let g = (-u * u / w2).exp();
                3.0 * u * u - 1.0 + CAMEL_DEPTH * g * (4.0 * u * u / (w2 * w2) - 2.0 / w2)
            }
        }
    }

    pub fn f3(&self, u: f64) -> f64 {
        match self.family {
            PotentialFamily::Sinusoidal { amplitude }
            | PotentialFamily::TiltedSinusoidal { amplitude, .. } => {
                -2.0 * PI * amplitude * (2.0 * PI * u).sin()
            }
            PotentialFamily::Quartic => 6.0 * u,
            PotentialFamily::CamelHump => {
                let w2 = CAMEL_WIDTH * CAMEL_WIDTH;
                let g = (-u * u / w2).exp();
                6.0 * u
                    + CAMEL_DEPTH
                        * g
                        * (12.0 * u / (w2 * w2) - 8.0 * u * u * u / (w2 * w2 * w2))
            }
        }
    }

    /// Largest `|F''|` over the invariant range `[eta_l - D0, eta_r + D0]`,
    /// by dense sampling. Used for the time-step guard and the
    /// sub/super-solution shift constant.
    pub fn max_f2_abs(&self) -> f64 {
        let lo = self.eta_l - self.delta0;
        let hi = self.eta_r + self.delta0;
        let n = CURVATURE_SAMPLES;
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .map(|u| self.f2(u).abs())
            .fold(0.0, f64::max)
    }

    /// Check every structural hypothesis and return the curvature floor.
    ///
    /// Failures name the violated hypothesis.
    pub fn validate(&self) -> Result<WellCurvature> {
        if !(self.eta_l < self.eta_r) {
            return Err(Error::InvalidPotential(format!(
                "wells must be ordered: eta_l = {} vs eta_r = {}",
                self.eta_l, self.eta_r
            )));
        }
        for (name, eta) in [("eta_l", self.eta_l), ("eta_r", self.eta_r)] {
            let g = self.f1(eta);
            if g.abs() > 1e-10 {
                return Err(Error::InvalidPotential(format!(
                    "F' must vanish at the wells: F'({name} = {eta}) = {g}"
                )));
            }
        }
        let mut beta = f64::INFINITY;
        for well in [self.eta_l, self.eta_r] {
            let (b, u_min) = min_f2_on(self, well - self.delta0, well + self.delta0);
            if b <= 0.0 {
                return Err(Error::InvalidPotential(format!(
                    "F'' must be positive on the delta0-neighborhood of the wells: \
                     F''({u_min}) = {b} near well {well}"
                )));
            }
            beta = beta.min(b);
        }
        self.check_derivative_consistency()?;
        Ok(WellCurvature { beta })
    }

    /// Central finite differences of `F`, `F'`, `F''` must reproduce
    /// `F'`, `F''`, `F'''` at 101 probes across the well interval.
    fn check_derivative_consistency(&self) -> Result<()> {
        let lo = self.eta_l - self.delta0;
        let hi = self.eta_r + self.delta0;
        let step = 1e-5;
        for i in 0..=100 {
            let u = lo + (hi - lo) * i as f64 / 100.0;
            let checks = [
                ("F'", (self.f(u + step) - self.f(u - step)) / (2.0 * step), self.f1(u)),
                ("F''", (self.f1(u + step) - self.f1(u - step)) / (2.0 * step), self.f2(u)),
                ("F'''", (self.f2(u + step) - self.f2(u - step)) / (2.0 * step), self.f3(u)),
            ];
            for (name, fd, exact) in checks {
                if (fd - exact).abs() > 1e-6 * (1.0 + exact.abs()) {
                    return Err(Error::InvalidPotential(format!(
                        "derivative consistency failed for {name} at u = {u}: \
                         finite difference {fd} vs analytic {exact}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Minimum of `F''` over `[lo, hi]` by dense sampling; returns (min, argmin).
fn min_f2_on(p: &BistablePotential, lo: f64, hi: f64) -> (f64, f64) {
    let n = CURVATURE_SAMPLES;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=n {
        let u = lo + (hi - lo) * i as f64 / n as f64;
        let v = p.f2(u);
        if v < best.0 {
            best = (v, u);
        }
    }
    best
}

fn bisect_root(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo * fhi > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < 1e-15 {
            return Some(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sinusoidal_basic_values() {
        let p = BistablePotential::sinusoidal(1.0).unwrap();
        assert_abs_diff_eq!(p.f2(0.0), 1.0);
        assert_abs_diff_eq!(p.f2(1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.f(0.0), p.f(1.0), epsilon = 1e-15);
        let p2 = BistablePotential::sinusoidal(2.0).unwrap();
        assert_abs_diff_eq!(p2.f1(0.5), 0.0, epsilon = 1e-12);
        assert!(BistablePotential::sinusoidal(0.0).is_err());
        assert!(BistablePotential::sinusoidal(-1.0).is_err());
    }

    #[test]
    fn sinusoidal_curvature_floor_matches_dense_minimization() {
        let p = BistablePotential::sinusoidal(1.0).unwrap();
        let beta = p.validate().unwrap().beta;
        // Independent oracle: golden-section refinement of a coarse scan
        // over both margin intervals.
        let oracle = |lo: f64, hi: f64| {
            let mut best = f64::INFINITY;
            for i in 0..=20_000 {
                let u = lo + (hi - lo) * i as f64 / 20_000.0;
                best = best.min(p.f2(u));
            }
            best
        };
        let expect = oracle(-0.1, 0.1).min(oracle(0.9, 1.1));
        assert_abs_diff_eq!(beta, expect, epsilon = 1e-8);
        assert_abs_diff_eq!(beta, (0.2 * PI).cos(), epsilon = 1e-6);
    }

    #[test]
    fn tilted_reduces_to_sinusoidal_at_zero_drive() {
        let p = BistablePotential::tilted_sinusoidal(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(p.eta_l(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.eta_r(), 1.0, epsilon = 1e-12);
        let q = BistablePotential::sinusoidal(1.0).unwrap();
        for u in [-0.3, 0.1, 0.5, 0.9, 1.2] {
            assert_abs_diff_eq!(p.f(u), q.f(u), epsilon = 1e-14);
        }
    }

    #[test]
    fn tilted_unbalances_wells_with_velocity_sign() {
        let p = BistablePotential::tilted_sinusoidal(1.0, 0.01).unwrap();
        p.validate().unwrap();
        // Wells one period apart, so the imbalance is exactly -drive.
        assert_abs_diff_eq!(p.well_imbalance(), -0.01, epsilon = 1e-12);
        assert!(p.well_imbalance() < 0.0);
    }

    #[test]
    fn tilted_rejects_large_drive() {
        let err = BistablePotential::tilted_sinusoidal(1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("drive too large"));
    }

    #[test]
    fn validate_rejects_margin_crossing_inflection() {
        let p = BistablePotential::sinusoidal(1.0)
            .unwrap()
            .with_delta0(0.3)
            .unwrap();
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("F'' must be positive"));
    }

    #[test]
    fn quartic_curvature_floor() {
        let p = BistablePotential::quartic().unwrap();
        let beta = p.validate().unwrap().beta;
        // F'' = 3u^2 - 1 is minimized at the inner margin edge u = 0.8.
        assert_abs_diff_eq!(beta, 0.92, epsilon = 1e-6);
    }

    #[test]
    fn camel_hump_validates_with_interior_structure() {
        let p = BistablePotential::camel_hump().unwrap();
        let beta = p.validate().unwrap().beta;
        assert!(beta > 0.0);
        // The dip makes the origin a local minimum between two humps,
        // sitting above the outer wells.
        assert!(p.f2(0.0) > 0.0);
        assert!(p.f(0.0) > p.f(p.eta_l()));
        assert!(p.f1(p.eta_l()).abs() < 1e-10);
        assert!(p.f1(p.eta_r()).abs() < 1e-10);
    }
}
