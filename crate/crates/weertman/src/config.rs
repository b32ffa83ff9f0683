//! Run configuration: TOML file plus `--set key=value` overrides, with
//! unknown keys rejected and every effective value echoed to a manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{EvolveConfig, InitialKind};
use crate::grid::Grid;
use crate::potential::BistablePotential;
use crate::semigroup::EtdOrder;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialSection,
    pub grid: GridSection,
    pub evolve: EvolveSection,
    pub analysis: AnalysisSection,
    pub squeeze: SqueezeSection,
    pub output: OutputSection,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            potential: PotentialSection::default(),
            grid: GridSection::default(),
            evolve: EvolveSection::default(),
            analysis: AnalysisSection::default(),
            squeeze: SqueezeSection::default(),
            output: OutputSection::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    /// One of `sinusoidal`, `tilted-sinusoidal`, `quartic`, `camel-hump`.
    pub family: String,
    pub amplitude: f64,
    pub drive: f64,
    pub delta0: f64,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection {
            family: "sinusoidal".into(),
            amplitude: 1.0,
            drive: 0.0,
            delta0: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_length: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            half_length: 200.0,
            n_points: 8192,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub dt: f64,
    pub t_end: f64,
    /// Integrator order, 1 or 2.
    pub order: u8,
    pub recenter_every: f64,
    pub record_every: f64,
    pub range_check: bool,
    /// One of `step`, `smoothed-step`, `perturbed-wave`.
    pub initial: String,
    pub initial_width: f64,
    pub initial_amplitude: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            dt: 0.01,
            t_end: 100.0,
            order: 2,
            recenter_every: 0.0,
            record_every: 0.25,
            range_check: true,
            initial: "step".into(),
            initial_width: 1.0,
            initial_amplitude: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub enabled: bool,
    pub tail_window: [f64; 2],
    pub idc2_radii: Vec<f64>,
    /// Fail the pipeline when no exponential regime can be fitted.
    pub require_rate_fit: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            enabled: true,
            tail_window: [20.0, 80.0],
            idc2_radii: vec![30.0, 50.0, 70.0, 90.0],
            require_rate_fit: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqueezeSection {
    pub enabled: bool,
    pub delta1: f64,
    pub delta: f64,
    pub l: f64,
    pub n_times: usize,
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for SqueezeSection {
    fn default() -> Self {
        SqueezeSection {
            enabled: true,
            delta1: 0.05,
            delta: 0.02,
            l: 0.0,
            n_times: 25,
            t_max: 12.0,
            n_points: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    /// Write per-record profile snapshots (needed for standalone `analyze`).
    pub write_snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: "out".into(),
            write_snapshots: false,
        }
    }
}

impl RunConfig {
    /// Load from an optional TOML file and apply `key.path=value` overrides.
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self> {
        let mut value: toml::Value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Value::try_from(RunConfig::default())
                .map_err(|e| Error::Config(e.to_string()))?,
        };
        for set in sets {
            apply_set(&mut value, set)?;
        }
        value
            .try_into()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build_potential(&self) -> Result<BistablePotential> {
        let s = &self.potential;
        let p = match s.family.as_str() {
            "sinusoidal" => BistablePotential::sinusoidal(s.amplitude)?,
            "tilted-sinusoidal" => BistablePotential::tilted_sinusoidal(s.amplitude, s.drive)?,
            "quartic" => BistablePotential::quartic()?,
            "camel-hump" => BistablePotential::camel_hump()?,
            other => {
                return Err(Error::Config(format!(
                    "potential.family: unknown family '{other}'"
                )))
            }
        };
        p.with_delta0(s.delta0)
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(self.grid.half_length, self.grid.n_points)
            .map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn evolve_config(&self) -> Result<EvolveConfig> {
        let e = &self.evolve;
        if !(e.dt > 0.0) {
            return Err(Error::Config("evolve.dt: dt must be positive".into()));
        }
        let order = match e.order {
            1 => EtdOrder::First,
            2 => EtdOrder::Second,
            other => {
                return Err(Error::Config(format!(
                    "evolve.order: must be 1 or 2, got {other}"
                )))
            }
        };
        Ok(EvolveConfig {
            dt: e.dt,
            t_end: e.t_end,
            order,
            recenter_every: e.recenter_every,
            record_every: e.record_every,
            range_check: e.range_check,
        })
    }

    pub fn initial_kind(&self) -> Result<InitialKind> {
        match self.evolve.initial.as_str() {
            "step" => Ok(InitialKind::Step),
            "smoothed-step" => Ok(InitialKind::SmoothedStep {
                width: self.evolve.initial_width,
            }),
            "perturbed-wave" => Ok(InitialKind::PerturbedWave {
                amplitude: self.evolve.initial_amplitude,
                seed: self.seed,
            }),
            other => Err(Error::Config(format!(
                "evolve.initial: unknown kind '{other}'"
            ))),
        }
    }

    pub fn tail_window(&self) -> (f64, f64) {
        (self.analysis.tail_window[0], self.analysis.tail_window[1])
    }
}

/// Apply one `key.path=value` override to a TOML tree.
pub fn apply_set(root: &mut toml::Value, set: &str) -> Result<()> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{set}'")))?;
    // Parse the value as a TOML fragment so numbers, booleans and arrays
    // come out typed; fall back to a bare string.
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .map(|mut t| t.remove("v").unwrap())
        .unwrap_or_else(|_| toml::Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("key '{key}' does not address a table")))?;
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("key '{key}' does not address a table")))?;
        node = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_and_builds() {
        let cfg = RunConfig::load(None, &[]).unwrap();
        assert_eq!(cfg.potential.family, "sinusoidal");
        cfg.build_potential().unwrap();
        cfg.build_grid().unwrap();
        cfg.evolve_config().unwrap();
    }

    #[test]
    fn non_power_of_two_even_n_is_accepted() {
        let cfg = RunConfig::load(None, &["grid.n_points=1000".into()]).unwrap();
        let g = cfg.build_grid().unwrap();
        assert_eq!(g.n_points(), 1000);
    }

    #[test]
    fn zero_dt_is_rejected_by_name() {
        let cfg = RunConfig::load(None, &["evolve.dt=0.0".into()]).unwrap();
        let err = cfg.evolve_config().unwrap_err();
        assert!(err.to_string().contains("dt must be positive"));
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = RunConfig::load(None, &["evolve.dx=0.1".into()]).unwrap_err();
        assert!(err.to_string().contains("dx"), "got {err}");
        let err = RunConfig::load(None, &["typo_section.x=1".into()]).unwrap_err();
        assert!(err.to_string().contains("typo_section"), "got {err}");
    }

    #[test]
    fn overrides_reach_nested_values_with_types() {
        let cfg = RunConfig::load(
            None,
            &[
                "potential.family=\"quartic\"".into(),
                "evolve.range_check=false".into(),
                "analysis.tail_window=[15.0, 60.0]".into(),
                "seed=7".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.potential.family, "quartic");
        assert!(!cfg.evolve.range_check);
        assert_eq!(cfg.tail_window(), (15.0, 60.0));
        assert_eq!(cfg.seed, 7);
    }
}
