//! Pipeline orchestration and deterministic file output.
//!
//! A run writes, into its output directory:
//!
//! * `manifest.json`  - every effective configuration value;
//! * `timeseries.csv` - `t,front,residual,u_min,u_max`;
//! * `profiles.csv`   - final profile, `x,u,v,psi`;
//! * `run_meta.json`  - reference parameters and run counters;
//! * `distances.csv`  - `t,distance` (shift-minimized, analyze stage);
//! * `report.json`    - velocities, tails and the convergence-rate fit;
//! * `squeeze.json`   - sub/super-solution residual summary;
//! * `snapshots/`     - optional per-record profiles for offline analysis.
//!
//! CSV numbers are printed with 16 significant digits and files are written
//! atomically (temp file, then rename), so identical configurations produce
//! byte-identical outputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolution::{
    evolve, make_initial, weertman_residual, ReferenceProfile, RunRecord, RunReport, Snapshot,
    WaveState,
};
use crate::grid::Grid;
use crate::potential::BistablePotential;
use crate::squeeze::{compute_squeeze_params, verify_subsuper_residual};
use crate::wave_analysis::{
    distance_series, fit_convergence_rate, measure_velocity_tracking, velocity_identity_energy,
    velocity_identity_integral, TravelingWave,
};

/// Flat numeric analysis report (the `report.json` payload).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub c_tracking: f64,
    pub c_idc1: f64,
    pub c_idc2: f64,
    pub tail_left_prefactor: f64,
    pub tail_left_exponent: f64,
    pub tail_right_prefactor: f64,
    pub tail_right_exponent: f64,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    pub residual: f64,
    pub xi: f64,
}

/// Sub/super-solution summary (the `squeeze.json` payload).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqueezeSummary {
    pub beta: f64,
    pub sigma: f64,
    pub sigma_capped: f64,
    pub r0: f64,
    pub min_signed_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Reference bookkeeping persisted next to the CSVs (`run_meta.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub reference_center: f64,
    pub reference_width: f64,
    pub eta_l: f64,
    pub eta_r: f64,
    pub recenters: usize,
    pub endpoint_tail_coeff: f64,
    pub final_t: f64,
}

/// Everything a pipeline run produced, kept in memory for callers.
pub struct PipelineArtifacts {
    pub config: RunConfig,
    pub grid: Grid,
    pub potential: BistablePotential,
    pub report: RunReport,
    pub final_state: WaveState,
    pub wave: Option<TravelingWave>,
    pub distances: Vec<(f64, f64)>,
    pub analysis: Option<AnalysisReport>,
    pub squeeze: Option<SqueezeSummary>,
}

fn fmt(x: f64) -> String {
    format!("{x:.15e}")
}

/// Write a file atomically (temp then rename) so reruns are byte-stable.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Parse a CSV of f64 columns written by this module.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty file", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?);
    }
    Ok((header, rows))
}

fn timeseries_csv(report: &RunReport) -> String {
    let mut out = String::from("t,front,residual,u_min,u_max\n");
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(r.t),
            fmt(r.front),
            fmt(r.residual),
            fmt(r.u_min),
            fmt(r.u_max)
        ));
    }
    out
}

fn profile_csv(grid: &Grid, reference: &ReferenceProfile, v: &[f64]) -> String {
    let mut out = String::from("x,u,v,psi\n");
    for (j, &x) in grid.points().iter().enumerate() {
        let psi = reference.value(x);
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(x),
            fmt(psi + v[j]),
            fmt(v[j]),
            fmt(psi)
        ));
    }
    out
}

fn distances_csv(distances: &[(f64, f64)]) -> String {
    let mut out = String::from("t,distance\n");
    for &(t, d) in distances {
        out.push_str(&format!("{},{}\n", fmt(t), fmt(d)));
    }
    out
}

/// Run evolve -> analyze -> squeeze-test as configured, writing outputs.
pub fn run_pipeline(cfg: &RunConfig, out_dir: &Path) -> Result<PipelineArtifacts> {
    let stage_evolve = || -> Result<(Grid, BistablePotential, RunReport, WaveState)> {
        let potential = cfg.build_potential()?;
        potential.validate()?;
        let grid = cfg.build_grid()?;
        let evolve_cfg = cfg.evolve_config()?;
        let initial = make_initial(&grid, &potential, cfg.initial_kind()?)?;
        let (report, final_state) = evolve(&initial, &potential, &evolve_cfg)?;
        Ok((grid, potential, report, final_state))
    };
    let (grid, potential, report, final_state) =
        stage_evolve().map_err(|e| e.in_stage("evolve"))?;

    write_json(&out_dir.join("manifest.json"), cfg).map_err(|e| e.in_stage("evolve"))?;
    write_atomic(&out_dir.join("timeseries.csv"), &timeseries_csv(&report))
        .map_err(|e| e.in_stage("evolve"))?;
    write_atomic(
        &out_dir.join("profiles.csv"),
        &profile_csv(&grid, &final_state.reference, &final_state.v),
    )
    .map_err(|e| e.in_stage("evolve"))?;
    let meta = RunMeta {
        reference_center: final_state.reference.center(),
        reference_width: final_state.reference.width(),
        eta_l: potential.eta_l(),
        eta_r: potential.eta_r(),
        recenters: report.recenters,
        endpoint_tail_coeff: report.endpoint_tail_coeff,
        final_t: final_state.t,
    };
    write_json(&out_dir.join("run_meta.json"), &meta).map_err(|e| e.in_stage("evolve"))?;
    if cfg.output.write_snapshots {
        write_snapshots(out_dir, &grid, &report).map_err(|e| e.in_stage("evolve"))?;
    }

    let mut artifacts = PipelineArtifacts {
        config: cfg.clone(),
        grid,
        potential,
        report,
        final_state,
        wave: None,
        distances: Vec::new(),
        analysis: None,
        squeeze: None,
    };

    if cfg.analysis.enabled {
        analyze_stage(cfg, out_dir, &mut artifacts).map_err(|e| e.in_stage("analyze"))?;
    }
    if cfg.squeeze.enabled {
        squeeze_stage(cfg, out_dir, &mut artifacts).map_err(|e| e.in_stage("squeeze-test"))?;
    }
    Ok(artifacts)
}

fn analyze_stage(cfg: &RunConfig, out_dir: &Path, art: &mut PipelineArtifacts) -> Result<()> {
    let wave = TravelingWave::from_state(
        &art.final_state,
        &art.potential,
        measure_velocity_tracking(&art.report)?,
        cfg.tail_window(),
    )?;
    let distances = distance_series(&wave, &art.grid, &art.report);
    write_atomic(&out_dir.join("distances.csv"), &distances_csv(&distances))?;
    let rate = match fit_convergence_rate(&distances) {
        Ok(fit) => Some(fit),
        Err(Error::NoExponentialRegime) if !cfg.analysis.require_rate_fit => None,
        Err(e) => return Err(e),
    };
    let residual = weertman_residual(
        &art.grid,
        &wave.reference,
        &wave.v,
        wave.c,
        &art.potential,
    )?
    .sup;
    let report = AnalysisReport {
        c_tracking: wave.c,
        c_idc1: velocity_identity_energy(&wave, &art.potential)?,
        c_idc2: velocity_identity_integral(&wave, &art.potential, &cfg.analysis.idc2_radii)?,
        tail_left_prefactor: wave.tail_left.prefactor,
        tail_left_exponent: wave.tail_left.exponent,
        tail_right_prefactor: wave.tail_right.prefactor,
        tail_right_exponent: wave.tail_right.exponent,
        k: rate.map(|r| r.k),
        kappa: rate.map(|r| r.kappa),
        r2: rate.map(|r| r.r_squared),
        residual,
        xi: wave.xi,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    art.wave = Some(wave);
    art.distances = distances;
    art.analysis = Some(report);
    Ok(())
}

fn squeeze_stage(cfg: &RunConfig, out_dir: &Path, art: &mut PipelineArtifacts) -> Result<()> {
    let wave = match &art.wave {
        Some(w) => w,
        None => {
            return Err(Error::InvalidInput(
                "squeeze-test needs the analyze stage (enable analysis)".into(),
            ))
        }
    };
    let summary = run_squeeze_check(cfg, &art.potential, wave)?;
    write_json(&out_dir.join("squeeze.json"), &summary)?;
    art.squeeze = Some(summary);
    Ok(())
}

/// Sub/super-solution residual check on a sampling lattice from the config.
pub fn run_squeeze_check(
    cfg: &RunConfig,
    p: &BistablePotential,
    wave: &TravelingWave,
) -> Result<SqueezeSummary> {
    let s = &cfg.squeeze;
    let params = compute_squeeze_params(p, wave, s.delta1)?
        .with_delta(s.delta)?
        .with_l(s.l);
    let times: Vec<f64> = (0..s.n_times)
        .map(|i| s.t_max * i as f64 / (s.n_times.max(2) - 1) as f64)
        .collect();
    let half = 0.48 * wave.grid.half_length();
    let points: Vec<f64> = (0..s.n_points)
        .map(|i| -half + 2.0 * half * i as f64 / (s.n_points.max(2) - 1) as f64)
        .collect();
    let report = verify_subsuper_residual(p, wave, &params, &times, &points)?;
    Ok(SqueezeSummary {
        beta: params.beta,
        sigma: params.sigma,
        sigma_capped: params.sigma_capped,
        r0: params.r0,
        min_signed_residual: report.min_signed_residual,
        tolerance: report.tolerance,
        passed: report.passed,
    })
}

fn write_snapshots(out_dir: &Path, grid: &Grid, report: &RunReport) -> Result<()> {
    let dir = out_dir.join("snapshots");
    let mut index = String::from("i,t,center,file\n");
    for (i, snap) in report.snapshots.iter().enumerate() {
        let name = format!("snap_{i:05}.csv");
        let reference = report.base_reference.recentered(snap.center);
        write_atomic(&dir.join(&name), &profile_csv(grid, &reference, &snap.v))?;
        index.push_str(&format!("{i},{},{},{name}\n", fmt(snap.t), fmt(snap.center)));
    }
    write_atomic(&dir.join("index.csv"), &index)
}

/// Rebuild run artifacts from a directory written by [`run_pipeline`].
pub fn load_run(out_dir: &Path) -> Result<(RunConfig, Grid, BistablePotential, RunReport, WaveState)> {
    let cfg: RunConfig = {
        let value: serde_json::Value = read_json(&out_dir.join("manifest.json"))?;
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?
    };
    let potential = cfg.build_potential()?;
    let grid = cfg.build_grid()?;
    let meta: RunMeta = read_json(&out_dir.join("run_meta.json"))?;
    let base_reference = if meta.eta_r > meta.eta_l {
        ReferenceProfile::new(meta.eta_l, meta.eta_r, meta.reference_center, meta.reference_width)?
    } else {
        ReferenceProfile::flat(meta.eta_l)
    };

    let (header, rows) = read_csv(&out_dir.join("timeseries.csv"))?;
    if header != ["t", "front", "residual", "u_min", "u_max"] {
        return Err(Error::Config("timeseries.csv: unexpected header".into()));
    }
    let records: Vec<RunRecord> = rows
        .iter()
        .map(|r| RunRecord {
            t: r[0],
            front: r[1],
            residual: r[2],
            u_min: r[3],
            u_max: r[4],
        })
        .collect();

    let (pheader, prows) = read_csv(&out_dir.join("profiles.csv"))?;
    if pheader != ["x", "u", "v", "psi"] {
        return Err(Error::Config("profiles.csv: unexpected header".into()));
    }
    if prows.len() != grid.n_points() {
        return Err(Error::Config(format!(
            "profiles.csv: {} rows for an N = {} grid",
            prows.len(),
            grid.n_points()
        )));
    }
    let v: Vec<f64> = prows.iter().map(|r| r[2]).collect();

    let mut snapshots = Vec::new();
    let index_path = out_dir.join("snapshots").join("index.csv");
    if index_path.exists() {
        let text = fs::read_to_string(&index_path)?;
        for line in text.lines().skip(1) {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let t: f64 = parts[1].parse().map_err(|_| {
                Error::Config(format!("snapshots/index.csv: bad time '{}'", parts[1]))
            })?;
            let center: f64 = parts[2].parse().map_err(|_| {
                Error::Config(format!("snapshots/index.csv: bad center '{}'", parts[2]))
            })?;
            let (_, srows) = read_csv(&out_dir.join("snapshots").join(parts[3]))?;
            snapshots.push(Snapshot {
                t,
                center,
                v: srows.iter().map(|r| r[2]).collect(),
            });
        }
    }

    let report = RunReport {
        records,
        snapshots,
        base_reference: base_reference.clone(),
        recenters: meta.recenters,
        endpoint_tail_coeff: meta.endpoint_tail_coeff,
    };
    let final_state = WaveState {
        t: meta.final_t,
        grid: grid.clone(),
        reference: base_reference.recentered(meta.reference_center),
        v,
    };
    Ok((cfg, grid, potential, report, final_state))
}

/// Standalone analyze over a previously written run directory.
pub fn analyze_directory(out_dir: &Path, sets: &[String]) -> Result<AnalysisReport> {
    let (mut cfg, grid, potential, report, final_state) = load_run(out_dir)?;
    if !sets.is_empty() {
        let mut value =
            toml::Value::try_from(&cfg).map_err(|e| Error::Config(e.to_string()))?;
        for set in sets {
            crate::config::apply_set(&mut value, set)?;
        }
        cfg = value.try_into().map_err(|e| Error::Config(e.to_string()))?;
    }
    if report.snapshots.is_empty() {
        return Err(Error::Config(
            "no snapshots found; run evolve with output.write_snapshots=true".into(),
        ));
    }
    let mut art = PipelineArtifacts {
        config: cfg.clone(),
        grid,
        potential,
        report,
        final_state,
        wave: None,
        distances: Vec::new(),
        analysis: None,
        squeeze: None,
    };
    analyze_stage(&cfg, out_dir, &mut art).map_err(|e| e.in_stage("analyze"))?;
    Ok(art.analysis.unwrap())
}

/// Standalone squeeze check over a previously written run directory.
pub fn squeeze_directory(out_dir: &Path, sets: &[String]) -> Result<SqueezeSummary> {
    let (mut cfg, _grid, potential, report, final_state) = load_run(out_dir)?;
    if !sets.is_empty() {
        let mut value =
            toml::Value::try_from(&cfg).map_err(|e| Error::Config(e.to_string()))?;
        for set in sets {
            crate::config::apply_set(&mut value, set)?;
        }
        cfg = value.try_into().map_err(|e| Error::Config(e.to_string()))?;
    }
    let c = read_json::<AnalysisReport>(&out_dir.join("report.json"))
        .map(|r| r.c_tracking)
        .or_else(|_| measure_velocity_tracking(&report))?;
    let wave = TravelingWave::from_state(&final_state, &potential, c, cfg.tail_window())?;
    let summary =
        run_squeeze_check(&cfg, &potential, &wave).map_err(|e| e.in_stage("squeeze-test"))?;
    write_json(&out_dir.join("squeeze.json"), &summary)?;
    Ok(summary)
}
