//! Scenario file schema (JSON) and conversion into the core data model.
//!
//! A scenario carries a system block, an optional gains block, optional
//! simulation settings (horizon, runs, seed, noise shape, initial
//! conditions or presets) and optional synthesis settings.

use posobs::linalg::Matrix;
use posobs::model::{GainSet, PositiveSystem};
use posobs::sim::InitialSpec;
use posobs::synthesis::{SynthesisMode, SynthesisRequest};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gains: Option<GainsBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<Vec<f64>>>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub positivization_mode: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsBlock {
    #[serde(rename = "L_upper")]
    pub l_upper: Vec<Vec<f64>>,
    #[serde(rename = "L_lower")]
    pub l_lower: Vec<Vec<f64>>,
    #[serde(rename = "K_upper")]
    pub k_upper: Vec<Vec<f64>>,
    #[serde(rename = "K_lower")]
    pub k_lower: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<InitJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xbar0: Option<InitJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xlow0: Option<InitJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitJson {
    Preset(String),
    Vector(Vec<f64>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_noise_conditions: Option<bool>,
}

/// Input-level failure; the CLI maps it to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for InputError {}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, InputError> {
    serde_json::from_str(text).map_err(|e| InputError(format!("scenario parse error: {e}")))
}

pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioFile, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<Matrix, InputError> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(InputError(format!("{name}: ragged rows")));
    }
    Ok(Matrix::from_rows(rows.to_vec()))
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl SystemBlock {
    pub fn to_model(&self) -> Result<PositiveSystem, InputError> {
        let a = matrix_from_rows("A", &self.a)?;
        let b = matrix_from_rows("B", &self.b)?;
        let c = matrix_from_rows("C", &self.c)?;
        let mut sys = PositiveSystem::new(a, b, c)
            .map_err(|e| InputError(format!("system block: {e}")))?
            .with_positivization(self.positivization_mode);
        match (&self.e, &self.f) {
            (Some(e), Some(f)) => {
                sys = sys
                    .with_noise(matrix_from_rows("E", e)?, matrix_from_rows("F", f)?)
                    .map_err(|e| InputError(format!("noise block: {e}")))?;
            }
            (None, None) => {}
            _ => {
                return Err(InputError(
                    "system block: E and F must be given together".into(),
                ))
            }
        }
        Ok(sys)
    }
}

impl GainsBlock {
    pub fn to_model(&self, sys: &PositiveSystem) -> Result<GainSet, InputError> {
        let g = GainSet::new(
            matrix_from_rows("L_upper", &self.l_upper)?,
            matrix_from_rows("L_lower", &self.l_lower)?,
            matrix_from_rows("K_upper", &self.k_upper)?,
            matrix_from_rows("K_lower", &self.k_lower)?,
        );
        g.validate_for(sys)
            .map_err(|e| InputError(format!("gains block: {e}")))?;
        Ok(g)
    }

    pub fn from_model(g: &GainSet) -> Self {
        Self {
            l_upper: matrix_to_rows(&g.l_upper),
            l_lower: matrix_to_rows(&g.l_lower),
            k_upper: matrix_to_rows(&g.k_upper),
            k_lower: matrix_to_rows(&g.k_lower),
        }
    }
}

impl InitJson {
    pub fn to_spec(&self, which: &str) -> Result<InitialSpec, InputError> {
        match self {
            InitJson::Vector(v) => Ok(InitialSpec::Values(v.clone())),
            InitJson::Preset(s) => match s.as_str() {
                "uniform01" => Ok(InitialSpec::Uniform01),
                "ones" => Ok(InitialSpec::Ones),
                "zeros" => Ok(InitialSpec::Zeros),
                other => Err(InputError(format!(
                    "{which}: unknown preset '{other}' (expected uniform01, ones or zeros)"
                ))),
            },
        }
    }
}

/// Simulation settings with scenario values overridden by CLI flags.
#[derive(Clone, Debug)]
pub struct SimSettings {
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub shape: f64,
    pub x0: InitialSpec,
    pub xbar0: InitialSpec,
    pub xlow0: InitialSpec,
}

impl SimSettings {
    pub fn resolve(
        block: Option<&SimulationBlock>,
        horizon: Option<usize>,
        runs: Option<usize>,
        seed: Option<u64>,
    ) -> Result<Self, InputError> {
        let b = block.cloned().unwrap_or_default();
        let spec_of = |init: &Option<InitJson>, which: &str, default: InitialSpec| match init {
            Some(j) => j.to_spec(which),
            None => Ok(default),
        };
        Ok(Self {
            horizon: horizon.or(b.horizon).unwrap_or(50),
            runs: runs.or(b.runs).unwrap_or(1),
            seed: seed.or(b.seed).unwrap_or(0),
            shape: b.shape.unwrap_or(1.0),
            x0: spec_of(&b.x0, "x0", InitialSpec::Uniform01)?,
            xbar0: spec_of(&b.xbar0, "xbar0", InitialSpec::Ones)?,
            xlow0: spec_of(&b.xlow0, "xlow0", InitialSpec::Zeros)?,
        })
    }
}

/// Synthesis settings with scenario values overridden by CLI flags.
pub fn resolve_synthesis(
    block: Option<&SynthesisBlock>,
    mode: Option<&str>,
    noise: bool,
    eps: Option<f64>,
) -> Result<SynthesisRequest, InputError> {
    let b = block.cloned().unwrap_or_default();
    let mode_str = mode
        .map(str::to_owned)
        .or(b.mode)
        .unwrap_or_else(|| "coupled".into());
    let mode = match mode_str.as_str() {
        "thm1" => SynthesisMode::Thm1,
        "coupled" => SynthesisMode::Coupled,
        other => {
            return Err(InputError(format!(
                "unknown synthesis mode '{other}' (expected thm1 or coupled)"
            )))
        }
    };
    let req = SynthesisRequest {
        mode,
        include_noise_conditions: noise || b.include_noise_conditions.unwrap_or(false),
        margin_floor: eps.or(b.eps).unwrap_or(1e-6),
        scaling_bound: b.d.unwrap_or(1e4),
        ..Default::default()
    };
    if req.margin_floor <= 0.0 {
        return Err(InputError("eps must be positive".into()));
    }
    if req.scaling_bound < 1.0 {
        return Err(InputError("D must be at least 1".into()));
    }
    Ok(req)
}
