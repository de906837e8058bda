use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{auc, map_at_n, mean_std, DEFAULT_MAP_N};
use crate::error::{Error, Result};
use crate::fdi::{build_scenario, FdiMix, ScenarioConfig};
use crate::meterdata::GeneratorConfig;
use crate::pipeline::{detect, DetectConfig, Method};
use crate::rng::{self, tag};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    /// Area layout and tampering; its `fdi_mix` is replaced by each entry
    /// of `fdi_rows` in turn.
    pub scenario: ScenarioConfig,
    pub fdi_rows: Vec<FdiMix>,
    pub detect: DetectConfig,
    pub trials: usize,
    pub master_seed: u64,
    pub map_n: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            generator: GeneratorConfig::default(),
            scenario: ScenarioConfig::default(),
            fdi_rows: vec![FdiMix::uniform()],
            detect: DetectConfig {
                methods: Method::ALL.to_vec(),
                ..DetectConfig::default()
            },
            trials: 100,
            master_seed: 2018,
            map_n: DEFAULT_MAP_N,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.scenario.validate(self.generator.n_consumers)?;
        if self.trials == 0 {
            return Err(Error::Parameter("an experiment needs at least one trial".into()));
        }
        if self.fdi_rows.is_empty() {
            return Err(Error::Parameter("an experiment needs at least one FDI row".into()));
        }
        if self.detect.methods.is_empty() {
            return Err(Error::Parameter("no detection method selected".into()));
        }
        if self.map_n == 0 {
            return Err(Error::Parameter("MAP@N needs N >= 1".into()));
        }
        Ok(())
    }

    /// Scenario seed of trial `t`; rows share it so they differ only in
    /// attack types and parameters.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        rng::derive_seed(self.master_seed, &[tag::TRIAL, trial as u64])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub fdi: String,
    pub trial: usize,
    pub method: Method,
    pub auc: f64,
    pub map: f64,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub fdi: String,
    pub method: Method,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub map_mean: f64,
    pub map_std: f64,
    pub trials: usize,
    #[serde(skip)]
    pub seconds_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub master_seed: u64,
    pub trials: usize,
    pub map_n: usize,
    pub fdi_rows: Vec<String>,
    pub methods: Vec<Method>,
    pub summaries: Vec<MethodSummary>,
    #[serde(skip)]
    pub per_trial: Vec<TrialResult>,
}

impl ExperimentReport {
    pub fn summary(&self, fdi: &str, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.fdi == fdi && s.method == method)
    }

    /// Per-trial values for one row and method, in trial order.
    pub fn trials_of(&self, fdi: &str, method: Method) -> Vec<&TrialResult> {
        self.per_trial
            .iter()
            .filter(|r| r.fdi == fdi && r.method == method)
            .collect()
    }
}

fn run_trial(
    config: &ExperimentConfig,
    ground_truth: &[crate::meterdata::ConsumerSeries],
    mix: &FdiMix,
    trial: usize,
) -> Result<Vec<TrialResult>> {
    let scenario_config = ScenarioConfig {
        fdi_mix: mix.clone(),
        ..config.scenario.clone()
    };
    let (mut areas, scenario) = build_scenario(
        ground_truth,
        &scenario_config,
        config.trial_seed(trial),
        config.generator.noise_sigma,
    )?;
    let detection = detect(&mut areas, &config.detect)?;
    let labels = scenario.labels(detection.consumer_ids.iter().map(String::as_str));
    config
        .detect
        .methods
        .iter()
        .map(|&method| {
            let ranking = detection
                .ranking(method)
                .ok_or_else(|| Error::Parameter(format!("method {method} produced no ranking")))?;
            let seconds = detection
                .seconds
                .iter()
                .find(|(m, _)| *m == method)
                .map_or(0.0, |(_, s)| *s);
            Ok(TrialResult {
                fdi: mix.label(),
                trial,
                method,
                auc: auc(&ranking.ranks, &labels)?,
                map: map_at_n(&ranking.ranks, &labels, config.map_n)?,
                seconds,
            })
        })
        .collect()
}

/// Generates ground truth once, then for every FDI row and trial builds a
/// fresh scenario, runs detection and scores every method.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let ground_truth = config.generator.generate()?;
    let rows: Vec<String> = config.fdi_rows.iter().map(FdiMix::label).collect();
    let mut per_trial = Vec::new();
    for mix in &config.fdi_rows {
        let results: Vec<Vec<TrialResult>> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let r = run_trial(config, &ground_truth, mix, t).map_err(|e| Error::Trial {
                    index: t,
                    source: Box::new(e),
                });
                if let Ok(r) = &r {
                    log::debug!("{} trial {t}: {:?}", mix.label(), r.iter().map(|x| x.auc).collect::<Vec<_>>());
                }
                r
            })
            .collect::<Result<_>>()?;
        per_trial.extend(results.into_iter().flatten());
    }

    let mut summaries = Vec::new();
    for fdi in &rows {
        for &method in &config.detect.methods {
            let picked: Vec<&TrialResult> = per_trial
                .iter()
                .filter(|r| &r.fdi == fdi && r.method == method)
                .collect();
            let aucs: Vec<f64> = picked.iter().map(|r| r.auc).collect();
            let maps: Vec<f64> = picked.iter().map(|r| r.map).collect();
            let secs: Vec<f64> = picked.iter().map(|r| r.seconds).collect();
            let (auc_mean, auc_std) = mean_std(&aucs);
            let (map_mean, map_std) = mean_std(&maps);
            summaries.push(MethodSummary {
                fdi: fdi.clone(),
                method,
                auc_mean,
                auc_std,
                map_mean,
                map_std,
                trials: picked.len(),
                seconds_mean: mean_std(&secs).0,
            });
        }
    }
    Ok(ExperimentReport {
        master_seed: config.master_seed,
        trials: config.trials,
        map_n: config.map_n,
        fdi_rows: rows,
        methods: config.detect.methods.clone(),
        summaries,
        per_trial,
    })
}

pub fn write_report_json(path: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, report)?;
    writeln!(f)?;
    Ok(())
}

/// One row per FDI row; per method the mean and σ of AUC and MAP@N.
pub fn write_report_csv(path: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["fdi".to_string()];
    for m in &report.methods {
        for stat in ["auc", "auc_std", &format!("map@{}", report.map_n), &format!("map@{}_std", report.map_n)] {
            header.push(format!("{m}_{stat}"));
        }
    }
    w.write_record(&header)?;
    for fdi in &report.fdi_rows {
        let mut row = vec![fdi.clone()];
        for &m in &report.methods {
            let s = report
                .summary(fdi, m)
                .ok_or_else(|| Error::Metric(format!("no summary for {fdi}/{m}")))?;
            row.extend([s.auc_mean, s.auc_std, s.map_mean, s.map_std].iter().map(|v| format!("{v:.6}")));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves_csv(path: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fdi", "trial", "method", "auc", "map"])?;
    for r in &report.per_trial {
        w.write_record([
            r.fdi.clone(),
            r.trial.to_string(),
            r.method.to_string(),
            r.auc.to_string(),
            r.map.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean wall-clock seconds per row and method. Kept apart from the report,
/// which is deterministic.
pub fn write_timing_json(path: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    let rows: Vec<serde_json::Value> = report
        .summaries
        .iter()
        .map(|s| {
            serde_json::json!({
                "fdi": s.fdi,
                "method": s.method,
                "seconds_mean": s.seconds_mean,
            })
        })
        .collect();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, &rows)?;
    writeln!(f)?;
    Ok(())
}
