//! JSON run configuration. Every block and field is optional; command-line
//! flags override whatever the file sets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use theftsentry::correlate::MicParams;
use theftsentry::densepeaks::{DcStrategy, Kernel, DEFAULT_DC_FRACTION};
use theftsentry::evaluate::{ExperimentConfig, DEFAULT_MAP_N};
use theftsentry::fdi::{FdiMix, ScenarioConfig};
use theftsentry::meterdata::GeneratorConfig;
use theftsentry::pipeline::{CombineMode, DetectConfig, Method, ZetaScope};

use crate::ConfigError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub generator: GeneratorConfig,
    pub scenario: ScenarioBlock,
    pub detect: DetectBlock,
    pub evaluate: EvaluateBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Recorded consumer readings (wide CSV).
    pub consumers: Option<PathBuf>,
    /// Observer CSV, a directory of per-area observer CSVs, or `derive`.
    pub observer: Option<String>,
    /// Ground-truth consumer readings; required when `observer` is `derive`.
    pub ground_truth: Option<PathBuf>,
    /// Scenario JSON written by `tamper`; gives area membership and labels.
    pub scenario: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            consumers: None,
            observer: None,
            ground_truth: None,
            scenario: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioBlock {
    pub areas: usize,
    pub thieves_per_area: usize,
    pub fdi_mix: FdiMix,
    pub tampered_day_fraction: f64,
    pub seed: u64,
}

impl Default for ScenarioBlock {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        ScenarioBlock {
            areas: s.areas,
            thieves_per_area: s.thieves_per_area,
            fdi_mix: s.fdi_mix,
            tampered_day_fraction: s.tampered_day_fraction,
            seed: 1,
        }
    }
}

impl ScenarioBlock {
    pub fn to_core(&self) -> ScenarioConfig {
        ScenarioConfig {
            areas: self.areas,
            thieves_per_area: self.thieves_per_area,
            fdi_mix: self.fdi_mix.clone(),
            tampered_day_fraction: self.tampered_day_fraction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectBlock {
    /// Any of `mic`, `cfsfdp`, `arith`, `geo`, `pcc`, or `combined` for the
    /// configured combine mode.
    pub methods: Vec<String>,
    pub kernel: Kernel,
    pub dc_fraction: f64,
    /// Pairs sampled for the cut-off distance when exact selection is too
    /// large; `null` lets the library decide.
    pub dc_sample_pairs: Option<usize>,
    pub mic_bound_exponent: f64,
    pub combine: CombineMode,
    pub scope: ZetaScope,
}

impl Default for DetectBlock {
    fn default() -> Self {
        DetectBlock {
            methods: vec!["mic".into(), "cfsfdp".into(), "arith".into(), "geo".into()],
            kernel: Kernel::Cutoff,
            dc_fraction: DEFAULT_DC_FRACTION,
            dc_sample_pairs: None,
            mic_bound_exponent: 0.6,
            combine: CombineMode::Arith,
            scope: ZetaScope::Global,
        }
    }
}

impl DetectBlock {
    pub fn methods(&self) -> Result<Vec<Method>, ConfigError> {
        let mut out = Vec::new();
        for name in &self.methods {
            let m = if name.trim().eq_ignore_ascii_case("combined") {
                match self.combine {
                    CombineMode::Arith => Method::Arith,
                    CombineMode::Geo => Method::Geo,
                }
            } else {
                name.parse().map_err(|e| ConfigError(format!("{e}")))?
            };
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(ConfigError("no detection method selected".into()));
        }
        Ok(out)
    }

    pub fn to_core(&self) -> Result<DetectConfig, ConfigError> {
        if !(self.dc_fraction > 0.0 && self.dc_fraction < 1.0) {
            return Err(ConfigError(format!("dc_fraction must lie in (0, 1), got {}", self.dc_fraction)));
        }
        if !(self.mic_bound_exponent > 0.0 && self.mic_bound_exponent <= 1.0) {
            return Err(ConfigError(format!(
                "mic_bound_exponent must lie in (0, 1], got {}",
                self.mic_bound_exponent
            )));
        }
        Ok(DetectConfig {
            methods: self.methods()?,
            kernel: self.kernel,
            dc_fraction: self.dc_fraction,
            dc_strategy: match self.dc_sample_pairs {
                None => DcStrategy::Auto,
                Some(pairs) => DcStrategy::Sampled {
                    pairs,
                    seed: theftsentry::densepeaks::DEFAULT_DC_SEED,
                },
            },
            mic: MicParams {
                bound_exponent: self.mic_bound_exponent,
                ..MicParams::default()
            },
            scope: self.scope,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateBlock {
    pub map_n: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Table rows: `FDI1`..`FDI6` or `MIX`.
    pub fdi_rows: Vec<String>,
}

impl Default for EvaluateBlock {
    fn default() -> Self {
        EvaluateBlock {
            map_n: DEFAULT_MAP_N,
            trials: 100,
            master_seed: 2018,
            fdi_rows: vec!["MIX".into()],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        let fdi_rows = self
            .evaluate
            .fdi_rows
            .iter()
            .map(|r| FdiMix::parse(r).map_err(|e| ConfigError(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExperimentConfig {
            generator: self.generator.clone(),
            scenario: self.scenario.to_core(),
            fdi_rows,
            detect: self.detect.to_core()?,
            trials: self.evaluate.trials,
            master_seed: self.evaluate.master_seed,
            map_n: self.evaluate.map_n,
        })
    }
}
