//! JSON configuration for sweeps and single runs.
//!
//! Keys mirror the Rust field names. Unknown keys are rejected so that typos
//! in sweep scripts fail loudly. Overrides use dotted paths
//! (`scenario.snr_db=20`) applied to the parsed JSON before deserialization.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::array::ArrayConfig;
use crate::channel::{derive_geometry, wavelength};
use crate::spreading::default_rows;
use crate::synthesis::{AmbientModel, Scenario};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub n_antennas: usize,
    pub spacing_wavelengths: f64,
    pub d0_m: f64,
    pub d1_m: f64,
    pub aoa_direct_deg: f64,
    pub aoa_scattered_deg: f64,
    /// Used when `lambda_m` is absent.
    pub carrier_hz: f64,
    pub lambda_m: Option<f64>,
    pub snr_db: f64,
    pub code_order: u32,
    /// `[row_plus, row_minus]`; defaults to rows 1 and 2.
    pub code_rows: Option<[usize; 2]>,
    pub ambient_model: AmbientModel,
    pub noiseless: bool,
    pub grid_step_deg: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_antennas: 8,
            spacing_wavelengths: 0.5,
            d0_m: 1000.0,
            d1_m: 2.0,
            aoa_direct_deg: 60.0,
            aoa_scattered_deg: 90.0,
            carrier_hz: 500e6,
            lambda_m: None,
            snr_db: 13.0,
            code_order: 10,
            code_rows: None,
            ambient_model: AmbientModel::ComplexGaussian,
            noiseless: false,
            grid_step_deg: crate::aoa::DEFAULT_GRID_STEP_DEG,
        }
    }
}

impl ScenarioConfig {
    pub fn lambda(&self) -> Result<f64> {
        match self.lambda_m {
            Some(l) if l > 0.0 && l.is_finite() => Ok(l),
            Some(l) => Err(Error::config(
                "scenario.lambda_m",
                format!("must be positive, got {l}"),
            )),
            None => wavelength(self.carrier_hz)
                .map_err(|_| Error::config("scenario.carrier_hz", "must be positive")),
        }
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let array = ArrayConfig::new(self.n_antennas, self.spacing_wavelengths)?;
        let geometry = derive_geometry(
            self.d0_m,
            self.d1_m,
            self.aoa_direct_deg,
            self.aoa_scattered_deg,
        )?;
        let code_rows = match self.code_rows {
            Some([p, m]) => (p, m),
            None => default_rows(self.code_order),
        };
        let scenario = Scenario {
            array,
            geometry,
            lambda_m: self.lambda()?,
            snr_db: self.snr_db,
            code_order: self.code_order,
            code_rows,
            ambient_model: self.ambient_model,
            noiseless: self.noiseless,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    D1M,
    CodeOrder,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::D1M => "d1_m",
            SweepAxis::CodeOrder => "code_order",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut s = base.clone();
        match self {
            SweepAxis::SnrDb => s.snr_db = value,
            SweepAxis::D1M => s.d1_m = value,
            SweepAxis::CodeOrder => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::config(
                        "values",
                        format!("code order {value} is not a non-negative integer"),
                    ));
                }
                s.code_order = value as u32;
            }
        }
        Ok(s)
    }
}

/// When the direct-path angle is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoaMode {
    /// Once per sweep point from a calibration codeword.
    #[default]
    PerRun,
    PerCodeword,
}

/// When the second-stage weights are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamformerMode {
    #[default]
    PerCodeword,
    /// Trained once per sweep point and reused.
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub scenario: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials_per_point: u64,
    pub max_errors: Option<u64>,
    pub master_seed: u64,
    pub aoa_mode: AoaMode,
    pub beamformer_mode: BeamformerMode,
    pub rank_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            axis: SweepAxis::SnrDb,
            values: vec![13.0],
            trials_per_point: 200_000,
            max_errors: Some(200),
            master_seed: 0,
            aoa_mode: AoaMode::PerRun,
            beamformer_mode: BeamformerMode::PerCodeword,
            rank_tol: crate::beamformer::DEFAULT_RANK_TOL,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config(
                "values",
                "sweep needs at least one axis value",
            ));
        }
        if self.trials_per_point == 0 {
            return Err(Error::config("trials_per_point", "must be at least 1"));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::config("rank_tol", "must be in (0, 1)"));
        }
        if !(self.scenario.grid_step_deg > 0.0 && self.scenario.grid_step_deg <= 180.0) {
            return Err(Error::config(
                "scenario.grid_step_deg",
                "must be in (0, 180]",
            ));
        }
        Ok(())
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_value(value)
            .map_err(|e| Error::config(offending_key(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json_with_overrides(text, &[])
    }

    /// Parse `text`, apply `key=value` overrides in order, then validate.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| Error::config("<file>", e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_with_overrides(&text, overrides).map_err(|e| match e {
            Error::Config { key, message } => Error::Config {
                key,
                message: format!("{message} (in {})", path.display()),
            },
            other => other,
        })
    }
}

/// Set `a.b.c=value` on a JSON object. The value is parsed as JSON when
/// possible (numbers, booleans, arrays, null) and taken as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like key=value"))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::config(assignment, "empty override key"));
    }
    let parsed =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            Error::config(path, format!("`{}` is not an object", parts[..i].join(".")))
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one part")
}

fn offending_key(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<config>".into())
}
