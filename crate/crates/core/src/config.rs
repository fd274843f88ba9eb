//! Scenario configuration: a flat key-value text format covering the cost,
//! demand, capacity, and simulation parameters, plus the model selector and
//! an optional parameter sweep.
//!
//! The format is one `key = value` pair per line, `#` comments, blank lines
//! ignored. Values are written with Rust's shortest round-trip float
//! formatting, so `parse(emit(config)) == config` for every valid config.

use std::fmt::Write as _;

use crate::cost::{CapacitySpec, CostParams};
use crate::demand::{DemandParams, JumpSpec};
use crate::error::{ModelError, Result};
use crate::mc::SimConfig;

/// Which solver a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Deterministic,
    Stochastic,
}

impl Model {
    fn as_str(self) -> &'static str {
        match self {
            Model::Deterministic => "deterministic",
            Model::Stochastic => "stochastic",
        }
    }
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    K0,
    Eta,
    Sigma,
    Lambda,
    JumpSize,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::K0 => "K0",
            SweepParam::Eta => "eta",
            SweepParam::Sigma => "sigma",
            SweepParam::Lambda => "lambda",
            SweepParam::JumpSize => "jump_size",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K0" => Ok(SweepParam::K0),
            "eta" => Ok(SweepParam::Eta),
            "sigma" => Ok(SweepParam::Sigma),
            "lambda" => Ok(SweepParam::Lambda),
            "jump_size" => Ok(SweepParam::JumpSize),
            other => Err(ModelError::Config(format!(
                "unknown sweep parameter `{other}`; expected one of \
                 K0, eta, sigma, lambda, jump_size"
            ))),
        }
    }
}

/// A one-parameter sensitivity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Everything one scenario run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub cost: CostParams,
    pub demand: DemandParams,
    pub capacity: CapacitySpec,
    pub sim: SimConfig,
    pub model: Model,
    pub sweep: Option<SweepSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            cost: CostParams::default(),
            demand: DemandParams::default(),
            capacity: CapacitySpec::default(),
            sim: SimConfig::default(),
            model: Model::Stochastic,
            sweep: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        self.demand.validate()?;
        self.capacity.validate()?;
        self.sim.validate()?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(ModelError::Config("sweep has no values".into()));
            }
            for &v in &sweep.values {
                if !v.is_finite() {
                    return Err(ModelError::Config(format!(
                        "sweep value {v} for `{}` is not finite",
                        sweep.param.as_str()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serializes to the flat key-value format.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let jump_size = match &self.demand.jump {
            JumpSpec::Constant(z) => *z,
            // the text format carries a single magnitude; collapse to the mean
            JumpSpec::Discrete(_) => self.demand.jump.mean_jump(),
        };
        let pairs: [(&str, f64); 21] = [
            ("c", self.cost.c),
            ("c_h", self.cost.c_h),
            ("A", self.cost.a),
            ("alpha", self.cost.alpha),
            ("beta", self.cost.beta),
            ("mu", self.cost.mu),
            ("f", self.cost.f),
            ("v", self.cost.v),
            ("N_p", self.cost.n_p),
            ("rho", self.cost.rho),
            ("eta", self.demand.eta),
            ("sigma", self.demand.sigma),
            ("lambda", self.demand.lambda),
            ("jump_size", jump_size),
            ("K0", self.capacity.k0),
            ("runway_unit", self.capacity.runway_unit),
            ("max_runways", f64::from(self.capacity.max_runways_added)),
            ("mc.dt", self.sim.dt),
            ("mc.horizon", self.sim.horizon),
            ("mc.paths", self.sim.n_paths as f64),
            ("mc.seed", self.sim.seed as f64),
        ];
        writeln!(s, "model = {}", self.model.as_str()).unwrap();
        for (key, value) in &pairs {
            writeln!(s, "{key} = {value}").unwrap();
        }
        if let Some(sweep) = &self.sweep {
            writeln!(s, "sweep.param = {}", sweep.param.as_str()).unwrap();
            let values: Vec<String> = sweep.values.iter().map(|v| v.to_string()).collect();
            writeln!(s, "sweep.values = {}", values.join(",")).unwrap();
        }
        s
    }

    /// Parses the flat key-value format. Unknown or duplicated keys are
    /// errors, named in the message.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: Vec<String> = Vec::new();
        let mut sweep_param: Option<SweepParam> = None;
        let mut sweep_values: Option<Vec<f64>> = None;
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ModelError::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    line_no + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(ModelError::Config(format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| {
                    ModelError::Config(format!("key `{key}`: `{value}` is not a number"))
                })
            };
            match key {
                "model" => {
                    cfg.model = match value {
                        "deterministic" => Model::Deterministic,
                        "stochastic" => Model::Stochastic,
                        other => {
                            return Err(ModelError::Config(format!(
                                "key `model`: expected `deterministic` or \
                                 `stochastic`, got `{other}`"
                            )))
                        }
                    }
                }
                "c" => cfg.cost.c = num()?,
                "c_h" => cfg.cost.c_h = num()?,
                "A" => cfg.cost.a = num()?,
                "alpha" => cfg.cost.alpha = num()?,
                "beta" => cfg.cost.beta = num()?,
                "mu" => cfg.cost.mu = num()?,
                "f" => cfg.cost.f = num()?,
                "v" => cfg.cost.v = num()?,
                "N_p" => cfg.cost.n_p = num()?,
                "rho" => cfg.cost.rho = num()?,
                "eta" => cfg.demand.eta = num()?,
                "sigma" => cfg.demand.sigma = num()?,
                "lambda" => cfg.demand.lambda = num()?,
                "jump_size" => cfg.demand.jump = JumpSpec::Constant(num()?),
                "K0" => cfg.capacity.k0 = num()?,
                "runway_unit" => cfg.capacity.runway_unit = num()?,
                "max_runways" => {
                    let v = num()?;
                    if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
                        return Err(ModelError::Config(format!(
                            "key `max_runways`: expected a non-negative integer, got {v}"
                        )));
                    }
                    cfg.capacity.max_runways_added = v as u32;
                }
                "mc.dt" => cfg.sim.dt = num()?,
                "mc.horizon" => cfg.sim.horizon = num()?,
                "mc.paths" => {
                    let v = num()?;
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(ModelError::Config(format!(
                            "key `mc.paths`: expected a non-negative integer, got {v}"
                        )));
                    }
                    cfg.sim.n_paths = v as u64;
                }
                "mc.seed" => {
                    let v = num()?;
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(ModelError::Config(format!(
                            "key `mc.seed`: expected a non-negative integer, got {v}"
                        )));
                    }
                    cfg.sim.seed = v as u64;
                }
                "sweep.param" => sweep_param = Some(value.parse::<SweepParam>()?),
                "sweep.values" => {
                    let vals = value
                        .split(',')
                        .map(|s| {
                            s.trim().parse::<f64>().map_err(|_| {
                                ModelError::Config(format!(
                                    "key `sweep.values`: `{s}` is not a number"
                                ))
                            })
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    sweep_values = Some(vals);
                }
                other => {
                    return Err(ModelError::Config(format!("unknown key `{other}`")));
                }
            }
        }
        cfg.sweep = match (sweep_param, sweep_values) {
            (Some(param), Some(values)) => Some(SweepSpec { param, values }),
            (None, None) => None,
            _ => {
                return Err(ModelError::Config(
                    "sweep.param and sweep.values must be given together".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
