//! Scenario configuration: a versioned JSON document with unknown keys rejected.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use nls_virial::integrator::{MonitorSet, StepperConfig};
use nls_virial::{initial, EquationParams, Field, Geometry, Grid};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub equation: EquationConfig,
    pub grid: GridConfig,
    pub initial: InitialData,
    pub stepper: StepperConfig,
    #[serde(default)]
    pub probes: ProbeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub dim: usize,
    pub p: u32,
    #[serde(default = "cartesian")]
    pub geometry: Geometry,
}

fn cartesian() -> Geometry {
    Geometry::Cartesian
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    ModulatedGaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 3],
        /// Integer multiples of `π/L` per axis.
        modes: Vec<i64>,
    },
    Soliton {
        #[serde(default)]
        center: f64,
    },
    ScaledGroundState {
        amplitude: f64,
    },
    /// Seeded smooth random field; draws from the top-level `seed`.
    RandomSmooth {
        width: f64,
        max_mode: i64,
    },
    /// Two columns `re,im`, one row per grid sample in storage order.
    FromFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub virial_radii: Vec<f64>,
    /// Adds the `φ = r²` weight as profile `quadratic`.
    #[serde(default)]
    pub pure_quadratic: bool,
    #[serde(default)]
    pub exterior_radii: Vec<f64>,
    #[serde(default)]
    pub lq: Vec<f64>,
    #[serde(default)]
    pub hs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("config does not parse")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_json(&text)?;
        // Relative data paths resolve against the config's directory.
        if let InitialData::FromFile { path: data } = &mut cfg.initial {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    /// Field-level checks beyond what the schema enforces.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("version: expected {CONFIG_VERSION}, got {}", self.version);
        }
        self.params().context("equation")?;
        self.grid().context("grid")?;
        self.stepper.validate().context("stepper")?;
        let l = self.grid.half_width;
        let radii = self.probes.virial_radii.iter().chain(&self.probes.exterior_radii);
        for &r in radii {
            if !(r > 0.0 && 2.0 * r < l) {
                bail!("probes: radius {r} must satisfy 0 < 2R < L = {l}");
            }
        }
        if self.probes.lq.iter().any(|&q| !(q >= 1.0)) {
            bail!("probes.lq: exponents must be >= 1");
        }
        if self.probes.hs.iter().any(|&s| !(s >= 0.0)) {
            bail!("probes.hs: orders must be >= 0");
        }
        match &self.initial {
            InitialData::Gaussian { amplitude, width, .. }
            | InitialData::ModulatedGaussian { amplitude, width, .. } => {
                if !(amplitude.is_finite() && *width > 0.0) {
                    bail!("initial: need finite amplitude and width > 0");
                }
            }
            InitialData::FromFile { .. } => {}
            InitialData::RandomSmooth { width, max_mode } => {
                if !(*width > 0.0 && *max_mode >= 0) {
                    bail!("initial: random_smooth needs width > 0 and max_mode >= 0");
                }
            }
            InitialData::Soliton { .. } => {
                if self.equation.dim != 1 {
                    bail!("initial.family: soliton data exists only for dim = 1");
                }
            }
            InitialData::ScaledGroundState { amplitude } => {
                if !amplitude.is_finite() {
                    bail!("initial.amplitude must be finite");
                }
            }
        }
        if let InitialData::ModulatedGaussian { modes, .. } = &self.initial {
            if modes.len() != self.equation.dim {
                bail!("initial.modes: need {} entries, got {}", self.equation.dim, modes.len());
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<EquationParams> {
        Ok(EquationParams::new(self.equation.dim, self.equation.p)?)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Grid::make(
            self.equation.dim,
            self.grid.n,
            self.grid.half_width,
            self.equation.geometry,
        )?)
    }

    pub fn monitors(&self) -> MonitorSet {
        MonitorSet {
            lq: self.probes.lq.clone(),
            hs: self.probes.hs.clone(),
        }
    }

    /// Initial data for every family except `scaled_ground_state`, which
    /// needs the solved profile and is built by the runner.
    pub fn build_initial(&self, grid: Arc<Grid>) -> Result<Option<Field>> {
        Ok(Some(match &self.initial {
            InitialData::Gaussian { amplitude, width, center } => {
                initial::gaussian(grid, *amplitude, *width, *center)
            }
            InitialData::ModulatedGaussian { amplitude, width, center, modes } => {
                initial::modulated_gaussian(grid, *amplitude, *width, *center, modes)?
            }
            InitialData::Soliton { center } => initial::soliton(grid, self.equation.p, *center)?,
            InitialData::ScaledGroundState { .. } => return Ok(None),
            InitialData::FromFile { path } => read_field(grid, path)?,
            InitialData::RandomSmooth { width, max_mode } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                initial::random_smooth(grid, &mut rng, *width, *max_mode)
            }
        }))
    }
}

pub fn read_field(grid: Arc<Grid>, path: &Path) -> Result<Field> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::with_capacity(grid.len());
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (line_no == 0 && line.starts_with("re")) {
            continue;
        }
        let mut cols = line.split(',');
        let mut next = || -> Result<f64> {
            let s = cols.next().ok_or_else(|| anyhow!("line {}: expected re,im", line_no + 1))?;
            s.trim()
                .parse()
                .with_context(|| format!("line {}: bad number {s:?}", line_no + 1))
        };
        let re = next()?;
        let im = next()?;
        values.push(Complex64::new(re, im));
    }
    Ok(Field::new(grid, values)?)
}

pub fn write_field_csv(field: &Field) -> String {
    let mut out = String::from("re,im\n");
    for v in field.values() {
        out.push_str(&format!("{:.16e},{:.16e}\n", v.re, v.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLITON: &str = r#"{
        "version": 1,
        "equation": {"dim": 1, "p": 3},
        "grid": {"n": 512, "half_width": 20.0},
        "initial": {"family": "soliton"},
        "stepper": {"dt0": 1e-3, "c_cfl": 1e300, "dt_min": 1e-9, "snapshot_stride": 100, "t_end": 1.0}
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ScenarioConfig::from_json(SOLITON).unwrap();
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
        assert_eq!(cfg.stepper.boundary_threshold, 1e-8);
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        let bad = SOLITON.replace("\"version\": 1", "\"version\": 1, \"colour\": 3");
        assert!(ScenarioConfig::from_json(&bad).is_err());
        let bad = SOLITON.replace("\"version\": 1", "\"version\": 2");
        let err = ScenarioConfig::from_json(&bad).unwrap_err();
        assert!(format!("{err:#}").contains("version"));
    }

    #[test]
    fn random_family_follows_seed() {
        let body = |seed: u64| {
            SOLITON
                .replace("{\"family\": \"soliton\"}", "{\"family\": \"random_smooth\", \"width\": 2.0, \"max_mode\": 2}")
                .replace("\"version\": 1,", &format!("\"version\": 1, \"seed\": {seed},"))
        };
        let build = |seed| {
            let cfg = ScenarioConfig::from_json(&body(seed)).unwrap();
            cfg.build_initial(cfg.grid().unwrap()).unwrap().unwrap()
        };
        assert_eq!(build(7).values(), build(7).values());
        assert_ne!(build(7).values(), build(8).values());
    }

    #[test]
    fn radii_must_fit_twice_in_the_box() {
        let bad = SOLITON.replace(
            "\"stepper\"",
            "\"probes\": {\"virial_radii\": [10.0]}, \"stepper\"",
        );
        let err = ScenarioConfig::from_json(&bad).unwrap_err();
        assert!(format!("{err:#}").contains("2R < L"));
    }
}
