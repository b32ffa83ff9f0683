//! The acceptance suite: one function per criterion, each returning a
//! pass/fail outcome with the measured numbers, plus [`run_all`] which
//! shares the heavyweight runs between criteria.
//!
//! Desk-scale defaults: `L = 200`, `N = 8192`, `dt = 0.01`. Every tolerance
//! is pinned here in code.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolution::{evolve, make_initial, InitialKind};
use crate::grid::Grid;
use crate::halflap;
use crate::pipeline::{run_pipeline, PipelineArtifacts};
use crate::semigroup;
use crate::squeeze::{build_subsuper, compute_squeeze_params, SolutionSide};
use crate::wave_analysis::{fit_convergence_rate, predicted_tail_prefactor, RateFit, TailSide};

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:2} [{}] {} - {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

fn outcome(id: u32, name: &'static str, passed: bool, details: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        passed,
        details,
    }
}

/// The balanced sinusoidal configuration every run-based criterion uses.
pub fn acceptance_config() -> RunConfig {
    RunConfig::default()
}

/// Shared heavyweight artifacts.
pub struct Context {
    pub scratch: PathBuf,
    pub base: PipelineArtifacts,
    pub base_dir: PathBuf,
    pub half: PipelineArtifacts,
    pub tilted: PipelineArtifacts,
    pub quartic: PipelineArtifacts,
}

impl Context {
    pub fn build(scratch: &Path) -> Result<Self> {
        let base_cfg = acceptance_config();
        let base_dir = scratch.join("base");
        eprintln!("[acceptance] base run (balanced sinusoidal, step data) ...");
        let base = run_pipeline(&base_cfg, &base_dir)?;

        eprintln!("[acceptance] half-dt run ...");
        let half_cfg = RunConfig::load(None, &["evolve.dt=0.005".into(), "squeeze.enabled=false".into()])?;
        let half = run_pipeline(&half_cfg, &scratch.join("half"))?;

        eprintln!("[acceptance] tilted run (drive 0.01) ...");
        let tilted_cfg = RunConfig::load(
            None,
            &[
                "potential.family=\"tilted-sinusoidal\"".into(),
                "potential.drive=0.01".into(),
                "analysis.require_rate_fit=false".into(),
                "squeeze.enabled=false".into(),
            ],
        )?;
        let tilted = run_pipeline(&tilted_cfg, &scratch.join("tilted"))?;

        eprintln!("[acceptance] quartic run ...");
        let quartic_cfg = RunConfig::load(
            None,
            &[
                "potential.family=\"quartic\"".into(),
                "potential.delta0=0.2".into(),
                "evolve.initial=\"smoothed-step\"".into(),
                "evolve.initial_width=2.0".into(),
                "analysis.require_rate_fit=false".into(),
                "squeeze.enabled=false".into(),
            ],
        )?;
        let quartic = run_pipeline(&quartic_cfg, &scratch.join("quartic"))?;

        Ok(Context {
            scratch: scratch.to_path_buf(),
            base,
            base_dir,
            half,
            tilted,
            quartic,
        })
    }
}

/// Criterion 1: the spectral half-Laplacian matches the quadrature oracle
/// on concentrated profiles at interior points, within `max(1e-6, 5/L)`.
pub fn criterion_operator_oracle() -> Result<CriterionOutcome> {
    let grid = Grid::new(200.0, 8192)?;
    let l = grid.half_length();
    let tol = 1e-6_f64.max(5.0 / l);
    let mut max_err = 0.0f64;
    let profiles: [(Box<dyn Fn(f64) -> f64>, (f64, f64)); 2] = [
        (Box::new(|x: f64| 1.0 / (PI * (1.0 + x * x))), (0.0, 0.0)),
        (Box::new(|x: f64| 0.5 + (0.7 * x).atan() / PI), (0.0, 1.0)),
    ];
    for (f, limits) in &profiles {
        let samples: Vec<f64> = grid.points().iter().map(|&x| f(x)).collect();
        let spectral = halflap::apply_spectral(&grid, &samples)?;
        for i in 0..17 {
            let x_target = -l / 2.0 + l * i as f64 / 16.0;
            let j = ((x_target + l) / grid.spacing()).round() as usize % grid.n_points();
            let oracle = halflap::oracle_pv(f, grid.points()[j], 1e4, 4000, Some(*limits))?;
            max_err = max_err.max((spectral[j] - oracle.value).abs());
        }
    }
    Ok(outcome(
        1,
        "operator oracle equivalence",
        max_err <= tol,
        format!("max abs err {max_err:.3e} (tol {tol:.3e})"),
    ))
}

/// Criterion 2: the converged profile matches the analytic front
/// `1/2 + arctan(x - xi)/pi` after phase optimization, and its
/// steady-equation residual is small.
pub fn criterion_analytic_front(ctx: &Context) -> Result<CriterionOutcome> {
    let grid = &ctx.base.grid;
    let u = ctx.base.final_state.u();
    let half = grid.half_length() / 2.0;
    let distance = |xi: f64| -> f64 {
        grid.points()
            .iter()
            .zip(&u)
            .filter(|(&x, _)| x.abs() <= half)
            .map(|(&x, &ui)| (ui - (0.5 + (x - xi).atan() / PI)).abs())
            .fold(0.0, f64::max)
    };
    // Golden-section around the analysis phase.
    let xi0 = ctx
        .base
        .analysis
        .as_ref()
        .map(|a| a.xi)
        .unwrap_or(0.0);
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (xi0 - 1.0, xi0 + 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (distance(c), distance(d));
    for _ in 0..60 {
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
    let dist = distance(0.5 * (a + b));
    let residual = ctx
        .base
        .analysis
        .as_ref()
        .map(|r| r.residual)
        .unwrap_or(f64::INFINITY);
    let passed = dist <= 2e-3 && residual <= 5e-4;
    Ok(outcome(
        2,
        "analytic front regression",
        passed,
        format!("sup distance {dist:.3e} (tol 2e-3), residual {residual:.3e} (tol 5e-4)"),
    ))
}

/// Criterion 3: the three velocity estimators vanish on the balanced case
/// and agree within 2% with the right sign on the tilted case.
pub fn criterion_velocity_identities(ctx: &Context) -> Result<CriterionOutcome> {
    let b = ctx.base.analysis.as_ref().unwrap();
    let balanced_ok =
        b.c_tracking.abs() <= 1e-3 && b.c_idc1.abs() <= 1e-3 && b.c_idc2.abs() <= 1e-3;

    let t = ctx.tilted.analysis.as_ref().unwrap();
    let imbalance = ctx.tilted.potential.well_imbalance();
    let cs = [t.c_tracking, t.c_idc1, t.c_idc2];
    let c_scale = cs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut max_rel = 0.0f64;
    for i in 0..3 {
        for j in i + 1..3 {
            max_rel = max_rel.max((cs[i] - cs[j]).abs() / c_scale);
        }
    }
    let signs_ok = cs.iter().all(|c| c.signum() == imbalance.signum());
    let passed = balanced_ok && max_rel <= 0.02 && signs_ok;
    Ok(outcome(
        3,
        "velocity identities",
        passed,
        format!(
            "balanced |c| <= {:.1e}; tilted c = ({:+.4e}, {:+.4e}, {:+.4e}), spread {:.2}%, sign of imbalance {:+}",
            b.c_tracking.abs().max(b.c_idc1.abs()).max(b.c_idc2.abs()),
            cs[0],
            cs[1],
            cs[2],
            100.0 * max_rel,
            imbalance.signum() as i32
        ),
    ))
}

/// Criterion 4: fitted tail exponents and prefactors.
pub fn criterion_tail_asymptotics(ctx: &Context) -> Result<CriterionOutcome> {
    let b = ctx.base.analysis.as_ref().unwrap();
    let p_sin = &ctx.base.potential;
    let pred_l = predicted_tail_prefactor(p_sin, TailSide::Left).abs();
    let pred_r = predicted_tail_prefactor(p_sin, TailSide::Right).abs();
    let sin_ok = (b.tail_left_exponent + 1.0).abs() <= 0.05
        && (b.tail_right_exponent + 1.0).abs() <= 0.05
        && (b.tail_left_prefactor - pred_l).abs() / pred_l <= 0.10
        && (b.tail_right_prefactor - pred_r).abs() / pred_r <= 0.10;

    let q = ctx.quartic.analysis.as_ref().unwrap();
    let quartic_ok =
        (q.tail_left_exponent + 1.0).abs() <= 0.1 && (q.tail_right_exponent + 1.0).abs() <= 0.1;

    Ok(outcome(
        4,
        "tail asymptotics",
        sin_ok && quartic_ok,
        format!(
            "sinusoidal exponents ({:+.3}, {:+.3}), prefactors ({:.4}, {:.4}) vs {:.4}; quartic exponents ({:+.3}, {:+.3})",
            b.tail_left_exponent,
            b.tail_right_exponent,
            b.tail_left_prefactor,
            b.tail_right_prefactor,
            pred_r,
            q.tail_left_exponent,
            q.tail_right_exponent
        ),
    ))
}

/// Criterion 5: exponential convergence rate with a clean fit over at least
/// three decades, stable within 10% under halving of dt.
pub fn criterion_convergence_rate(ctx: &Context) -> Result<CriterionOutcome> {
    let fit: RateFit = fit_convergence_rate(&ctx.base.distances)?;
    let fit_half: RateFit = fit_convergence_rate(&ctx.half.distances)?;
    let rel = (fit_half.kappa - fit.kappa).abs() / fit.kappa;
    let passed =
        fit.kappa > 0.0 && fit.r_squared >= 0.99 && fit.decades >= 3.0 && rel <= 0.10;
    Ok(outcome(
        5,
        "exponential convergence",
        passed,
        format!(
            "kappa {:.4} (dt/2: {:.4}, drift {:.2}%), R^2 {:.5}, {:.2} decades over t in [{:.1}, {:.1}]",
            fit.kappa,
            fit_half.kappa,
            100.0 * rel,
            fit.r_squared,
            fit.decades,
            fit.window.0,
            fit.window.1
        ),
    ))
}

/// Criterion 6: comparison principle on 10 random ordered pairs.
pub fn criterion_comparison_principle() -> Result<CriterionOutcome> {
    let cfg = RunConfig::load(
        None,
        &[
            "evolve.t_end=20.0".into(),
            "evolve.record_every=0.5".into(),
        ],
    )?;
    let p = cfg.build_potential()?;
    let grid = cfg.build_grid()?;
    let evolve_cfg = cfg.evolve_config()?;
    let times = [0.5, 1.0, 5.0, 20.0];
    let mut worst_gap = f64::INFINITY;
    let mut worst_strict = f64::INFINITY;
    for k in 0..10 {
        let low = make_initial(
            &grid,
            &p,
            InitialKind::PerturbedWave {
                amplitude: 0.05,
                seed: 1000 + k,
            },
        )?
        .u();
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + k);
        let center = rng.gen_range(-5.0..5.0);
        let width = rng.gen_range(3.0..8.0);
        let high: Vec<f64> = grid
            .points()
            .iter()
            .zip(&low)
            .map(|(&x, &u)| {
                let z = (x - center) / width;
                u + 0.008 * (-z * z).exp()
            })
            .collect();
        let report = crate::squeeze::verify_comparison(&p, &grid, &low, &high, &evolve_cfg, &times)?;
        worst_gap = worst_gap.min(report.worst_gap);
        if !report.ordered {
            return Ok(outcome(
                6,
                "comparison principle",
                false,
                format!(
                    "pair {k}: ordering violated by {:.3e} at t = {}, x = {}",
                    report.worst_gap, report.worst_time, report.worst_x
                ),
            ));
        }
        let strict = report.strict_gap_at_1.unwrap_or(f64::NEG_INFINITY);
        worst_strict = worst_strict.min(strict);
        if report.initial_gap_integral > 0.0 && strict <= 0.0 {
            return Ok(outcome(
                6,
                "comparison principle",
                false,
                format!("pair {k}: strict gap at t=1 is {strict:.3e}"),
            ));
        }
    }
    Ok(outcome(
        6,
        "comparison principle",
        true,
        format!(
            "10 pairs ordered (worst gap {worst_gap:.3e} >= -1e-9), strict gap at t=1 >= {worst_strict:.3e}"
        ),
    ))
}

/// Criterion 7: 20 random valid initial conditions stay in the invariant
/// range up to t = 50.
pub fn criterion_range_preservation() -> Result<CriterionOutcome> {
    let cfg = RunConfig::load(None, &["evolve.t_end=50.0".into(), "evolve.record_every=0.5".into()])?;
    let p = cfg.build_potential()?;
    let grid = cfg.build_grid()?;
    let evolve_cfg = cfg.evolve_config()?;
    let (lo, hi) = (p.eta_l() - p.delta0() - 1e-8, p.eta_r() + p.delta0() + 1e-8);
    let mut global_min = f64::INFINITY;
    let mut global_max = f64::NEG_INFINITY;
    for seed in 0..20 {
        let s0 = make_initial(
            &grid,
            &p,
            InitialKind::PerturbedWave {
                amplitude: 0.08,
                seed,
            },
        )?;
        match evolve(&s0, &p, &evolve_cfg) {
            Ok((report, _)) => {
                for r in &report.records {
                    global_min = global_min.min(r.u_min);
                    global_max = global_max.max(r.u_max);
                }
            }
            Err(e) => {
                return Ok(outcome(
                    7,
                    "range preservation",
                    false,
                    format!("seed {seed}: {e}"),
                ))
            }
        }
    }
    let passed = global_min >= lo && global_max <= hi;
    Ok(outcome(
        7,
        "range preservation",
        passed,
        format!("u in [{global_min:.6}, {global_max:.6}] vs [{lo:.6}, {hi:.6}] over 20 runs, t <= 50"),
    ))
}

/// Criterion 8: sub/super-solution residual sign on the sample lattice and
/// the evolved sandwich containment.
pub fn criterion_subsupersolutions(ctx: &Context) -> Result<CriterionOutcome> {
    let summary = ctx
        .base
        .squeeze
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("base run lacks a squeeze summary".into()))?;
    let residual_ok = summary.passed && summary.min_signed_residual >= -5e-3;

    // Sandwich: start between w_-1(0) and w_+1(0) and stay there.
    let p = &ctx.base.potential;
    let grid = &ctx.base.grid;
    let wave = ctx.base.wave.as_ref().unwrap();
    let sp = compute_squeeze_params(p, wave, 0.05)?
        .with_delta(0.02)?
        .with_l(1.0);
    let u0: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            0.5 * (build_subsuper(wave, &sp, SolutionSide::Sub, 0.0, x)
                + build_subsuper(wave, &sp, SolutionSide::Super, 0.0, x))
        })
        .collect();
    let s0 = make_initial(grid, p, InitialKind::Custom(u0))?;
    let cfg = RunConfig::load(None, &["evolve.t_end=20.0".into(), "evolve.record_every=0.5".into()])?;
    let (report, _) = evolve(&s0, p, &cfg.evolve_config()?)?;
    let mut worst_margin = f64::INFINITY;
    let half = grid.half_length() / 2.0;
    for &t in &[0.5, 1.0, 5.0, 20.0] {
        let idx = report
            .snapshots
            .iter()
            .position(|s| (s.t - t).abs() < 1e-9)
            .ok_or_else(|| Error::InvalidInput(format!("no snapshot at t = {t}")))?;
        let u = report.snapshot_u(grid, idx);
        for (j, &x) in grid.points().iter().enumerate() {
            if x.abs() > half {
                continue;
            }
            let lo = build_subsuper(wave, &sp, SolutionSide::Sub, t, x);
            let hi = build_subsuper(wave, &sp, SolutionSide::Super, t, x);
            worst_margin = worst_margin.min(u[j] - lo).min(hi - u[j]);
        }
    }
    let sandwich_ok = worst_margin >= -1e-9;
    Ok(outcome(
        8,
        "sub/super-solution residuals",
        residual_ok && sandwich_ok,
        format!(
            "min signed residual {:+.3e} (tol -5e-3), sandwich margin {:+.3e} (tol -1e-9)",
            summary.min_signed_residual, worst_margin
        ),
    ))
}

/// Criterion 9: kernel facts: unit mass, semigroup composition, sharp
/// derivative L1 norm.
pub fn criterion_kernel_facts() -> Result<CriterionOutcome> {
    // Mass on an L = 1000 t grid.
    let t_mass = 1.0;
    let wide = Grid::new(1000.0 * t_mass, 1 << 15)?;
    let mass: f64 = wide
        .points()
        .iter()
        .map(|&x| semigroup::kernel_value(t_mass, x).unwrap())
        .sum::<f64>()
        * wide.spacing();
    let mass_ok = (mass - 1.0).abs() <= 1e-3;

    // Semigroup composition on a random field.
    let grid = Grid::new(200.0, 4096)?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let u: Vec<f64> = (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let two = semigroup::propagate(&grid, 0.7, &semigroup::propagate(&grid, 0.3, &u)?)?;
    let one = semigroup::propagate(&grid, 1.0, &u)?;
    let comp_err = two
        .iter()
        .zip(&one)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let comp_ok = comp_err <= 1e-12;

    // Derivative L1 norm against quadrature.
    let mut deriv_err = 0.0f64;
    for t in [1.0, 2.0] {
        let x_max = 50.0 * t;
        let n = 40_000;
        let h = x_max / n as f64;
        let f = |x: f64| 2.0 * t * x / (PI * (t * t + x * x).powi(2));
        let mut quad = f(0.0) + f(x_max);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            quad += w * f(i as f64 * h);
        }
        quad *= 2.0 * h / 3.0;
        quad += 2.0 * t / (PI * (t * t + x_max * x_max));
        deriv_err = deriv_err.max((semigroup::kernel_derivative_l1(t)? - quad).abs());
    }
    let deriv_ok = deriv_err <= 1e-6;

    Ok(outcome(
        9,
        "kernel facts",
        mass_ok && comp_ok && deriv_ok,
        format!(
            "mass defect {:.2e} (tol 1e-3), composition {:.2e} (tol 1e-12), L1 norm defect {:.2e} (tol 1e-6)",
            (mass - 1.0).abs(),
            comp_err,
            deriv_err
        ),
    ))
}

/// Criterion 10: rerunning the acceptance configuration produces
/// byte-identical outputs.
pub fn criterion_determinism(ctx: &Context) -> Result<CriterionOutcome> {
    let rerun_dir = ctx.scratch.join("determinism");
    eprintln!("[acceptance] determinism rerun ...");
    run_pipeline(&acceptance_config(), &rerun_dir)?;
    let files = [
        "manifest.json",
        "timeseries.csv",
        "profiles.csv",
        "run_meta.json",
        "distances.csv",
        "report.json",
        "squeeze.json",
    ];
    let mut mismatched = Vec::new();
    for f in files {
        let a = std::fs::read(ctx.base_dir.join(f))?;
        let b = std::fs::read(rerun_dir.join(f))?;
        if a != b {
            mismatched.push(f);
        }
    }
    Ok(outcome(
        10,
        "determinism",
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!("{} files byte-identical across reruns", files.len())
        } else {
            format!("mismatched files: {mismatched:?}")
        },
    ))
}

/// Run all criteria, sharing the heavyweight runs.
pub fn run_all(scratch: &Path) -> Result<Vec<CriterionOutcome>> {
    let ctx = Context::build(scratch)?;
    let mut out = Vec::new();
    eprintln!("[acceptance] criterion 1 ...");
    out.push(criterion_operator_oracle()?);
    eprintln!("[acceptance] criterion 2 ...");
    out.push(criterion_analytic_front(&ctx)?);
    eprintln!("[acceptance] criterion 3 ...");
    out.push(criterion_velocity_identities(&ctx)?);
    eprintln!("[acceptance] criterion 4 ...");
    out.push(criterion_tail_asymptotics(&ctx)?);
    eprintln!("[acceptance] criterion 5 ...");
    out.push(criterion_convergence_rate(&ctx)?);
    eprintln!("[acceptance] criterion 6 (10 evolved pairs) ...");
    out.push(criterion_comparison_principle()?);
    eprintln!("[acceptance] criterion 7 (20 evolved runs to t = 50) ...");
    out.push(criterion_range_preservation()?);
    eprintln!("[acceptance] criterion 8 ...");
    out.push(criterion_subsupersolutions(&ctx)?);
    eprintln!("[acceptance] criterion 9 ...");
    out.push(criterion_kernel_facts()?);
    eprintln!("[acceptance] criterion 10 ...");
    out.push(criterion_determinism(&ctx)?);
    Ok(out)
}
