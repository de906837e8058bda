use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use theftsentry::correlate::{mic_with, MicParams, PairSample};
use theftsentry::evaluate::{
    auc, map_at_n, run_experiment, write_curves_csv, write_report_csv, write_report_json, write_timing_json,
};
use theftsentry::fdi::{build_scenario, TamperScenario};
use theftsentry::meterdata::{
    load_consumers_csv, load_observer_csv, write_consumers_csv, write_observer_csv, AreaDataset, ColumnSpec,
    ConsumerSeries, SeriesKind,
};
use theftsentry::pipeline::{combine_ranks, detect as run_detect, CombineMode, Detection, SuspicionRanking};

use crate::{ConfigError, RunConfig};

fn out_dir(config: &RunConfig) -> anyhow::Result<&Path> {
    let dir = config.paths.out_dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, ConfigError> {
    value
        .as_deref()
        .ok_or_else(|| ConfigError(format!("no {what} path given (flag or config paths block)")))
}

/// Ground truth from a file, or freshly generated when no file is set.
fn ground_truth(config: &RunConfig) -> anyhow::Result<Vec<ConsumerSeries>> {
    match &config.paths.ground_truth {
        Some(path) => {
            let loaded = load_consumers_csv(path, ColumnSpec::Wide)
                .with_context(|| format!("reading ground truth {}", path.display()))?;
            Ok(loaded
                .into_iter()
                .map(|c| ConsumerSeries::untampered(c.consumer_id.clone(), c.days().to_vec()))
                .collect::<Result<_, _>>()?)
        }
        None => Ok(config.generator.generate()?),
    }
}

pub fn synth(config: &RunConfig) -> anyhow::Result<()> {
    let consumers = config.generator.generate()?;
    let path = out_dir(config)?.join("ground_truth.csv");
    write_consumers_csv(&path, &consumers, SeriesKind::GroundTruth)?;
    log::info!("wrote {} consumers to {}", consumers.len(), path.display());
    Ok(())
}

pub fn tamper(config: &RunConfig) -> anyhow::Result<()> {
    let truth = ground_truth(config)?;
    let (areas, scenario) = build_scenario(
        &truth,
        &config.scenario.to_core(),
        config.scenario.seed,
        config.generator.noise_sigma,
    )?;
    let dir = out_dir(config)?;
    let consumers: Vec<ConsumerSeries> = areas.iter().flat_map(|a| a.consumers().iter().cloned()).collect();
    write_consumers_csv(dir.join("consumers.csv"), &consumers, SeriesKind::Recorded)?;
    write_consumers_csv(dir.join("ground_truth.csv"), &consumers, SeriesKind::GroundTruth)?;
    let obs_dir = dir.join("observer");
    fs::create_dir_all(&obs_dir)?;
    for (assignment, area) in scenario.areas.iter().zip(&areas) {
        write_observer_csv(obs_dir.join(format!("area_{:02}.csv", assignment.id)), area.observer())?;
    }
    let f = fs::File::create(dir.join("scenario.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &scenario)?;
    log::info!(
        "tampered {} of {} consumers in {} areas",
        scenario.fraud_ids.len(),
        consumers.len(),
        areas.len()
    );
    Ok(())
}

fn load_scenario(path: &Path) -> anyhow::Result<TamperScenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))
}

/// Consumer ids per area: from the scenario file, or one area holding all.
fn area_members(config: &RunConfig, consumers: &[ConsumerSeries]) -> anyhow::Result<Vec<(usize, Vec<String>)>> {
    match &config.paths.scenario {
        Some(path) => Ok(load_scenario(path)?
            .areas
            .into_iter()
            .map(|a| (a.id, a.consumers))
            .collect()),
        None => Ok(vec![(0, consumers.iter().map(|c| c.consumer_id.clone()).collect())]),
    }
}

fn build_areas(config: &RunConfig) -> anyhow::Result<Vec<AreaDataset>> {
    let consumers_path = required(&config.paths.consumers, "consumers")?;
    let observer = config
        .paths
        .observer
        .as_deref()
        .ok_or_else(|| ConfigError("no observer given: a CSV file, a directory, or \"derive\"".into()))?;
    let derive = observer == "derive";
    if derive && config.paths.ground_truth.is_none() {
        return Err(ConfigError("observer \"derive\" needs a ground-truth file".into()).into());
    }

    let mut consumers = load_consumers_csv(consumers_path, ColumnSpec::Wide)
        .with_context(|| format!("reading consumers {}", consumers_path.display()))?;
    if derive {
        let truth = ground_truth(config)?;
        let mut by_id: HashMap<String, ConsumerSeries> =
            truth.into_iter().map(|c| (c.consumer_id.clone(), c)).collect();
        consumers = consumers
            .into_iter()
            .map(|c| {
                let gt = by_id.remove(&c.consumer_id).ok_or_else(|| {
                    theftsentry::Error::Shape(format!("consumer {} has no ground truth", c.consumer_id))
                })?;
                c.with_ground_truth(gt.days().to_vec())
            })
            .collect::<Result<_, _>>()?;
    }

    let members = area_members(config, &consumers)?;
    let mut pool: HashMap<String, ConsumerSeries> =
        consumers.into_iter().map(|c| (c.consumer_id.clone(), c)).collect();
    let observer_path = Path::new(observer);
    if !derive && !observer_path.is_dir() && members.len() > 1 {
        return Err(ConfigError(format!(
            "{} areas need a directory of observer files, got {observer}",
            members.len()
        ))
        .into());
    }

    let mut areas = Vec::with_capacity(members.len());
    for (id, ids) in members {
        let series = ids
            .iter()
            .map(|i| {
                pool.remove(i)
                    .ok_or_else(|| theftsentry::Error::Shape(format!("consumer {i} missing from the consumer file")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let area = if derive {
            AreaDataset::from_ground_truth(series)?
        } else {
            let file = if observer_path.is_dir() {
                observer_path.join(format!("area_{id:02}.csv"))
            } else {
                observer_path.to_path_buf()
            };
            let days =
                load_observer_csv(&file).with_context(|| format!("reading observer {}", file.display()))?;
            AreaDataset::new(series, days)?
        };
        areas.push(area);
    }
    if !pool.is_empty() {
        let mut left: Vec<&String> = pool.keys().collect();
        left.sort();
        log::warn!("{} consumers belong to no area and are skipped, e.g. {}", left.len(), left[0]);
    }
    Ok(areas)
}

fn rank_column(header: &mut Vec<String>, cols: &mut Vec<Vec<String>>, name: &str, values: &[f64]) {
    header.push(name.to_string());
    cols.push(values.iter().map(|v| v.to_string()).collect());
}

fn write_ranking(path: &Path, detection: &Detection) -> anyhow::Result<()> {
    let mut header = vec!["consumer_id".to_string()];
    let mut cols: Vec<Vec<String>> = Vec::new();
    if let Some((_, r)) = &detection.mic {
        rank_column(&mut header, &mut cols, "mic_degree", &r.degrees);
        rank_column(&mut header, &mut cols, "mic_rank", &r.ranks);
    }
    if let Some((_, r)) = &detection.zeta {
        rank_column(&mut header, &mut cols, "zeta_degree", &r.degrees);
        rank_column(&mut header, &mut cols, "zeta_rank", &r.ranks);
    }
    if let (Some((_, m)), Some((_, z))) = (&detection.mic, &detection.zeta) {
        let combined = |mode, have: &Option<SuspicionRanking>| -> anyhow::Result<SuspicionRanking> {
            Ok(match have {
                Some(r) => r.clone(),
                None => combine_ranks(m, z, mode)?,
            })
        };
        let arith = combined(CombineMode::Arith, &detection.arith)?;
        let geo = combined(CombineMode::Geo, &detection.geo)?;
        rank_column(&mut header, &mut cols, "combined_arith", &arith.ranks);
        rank_column(&mut header, &mut cols, "combined_geo", &geo.ranks);
    }
    if let Some((_, r)) = &detection.pcc {
        rank_column(&mut header, &mut cols, "pcc_degree", &r.degrees);
        rank_column(&mut header, &mut cols, "pcc_rank", &r.ranks);
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for (i, id) in detection.consumer_ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(cols.iter().map(|c| c[i].clone()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn detect(config: &RunConfig) -> anyhow::Result<()> {
    let detect_config = config.detect.to_core()?;
    let mut areas = build_areas(config)?;
    let detection = run_detect(&mut areas, &detect_config)?;
    let path = out_dir(config)?.join("ranking.csv");
    write_ranking(&path, &detection)?;
    for (method, secs) in &detection.seconds {
        log::info!("{method}: {secs:.2} s");
    }
    log::info!("ranked {} consumers into {}", detection.consumer_ids.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct ColumnMetrics {
    column: String,
    auc: f64,
    map: f64,
}

#[derive(Serialize)]
struct Metrics {
    consumers: usize,
    fraud: usize,
    map_n: usize,
    columns: Vec<ColumnMetrics>,
}

fn is_rank_column(name: &str) -> bool {
    name.ends_with("_rank") || name.starts_with("combined_")
}

pub fn evaluate(config: &RunConfig, ranking: Option<PathBuf>) -> anyhow::Result<()> {
    let dir = out_dir(config)?;
    let ranking = ranking.unwrap_or_else(|| dir.join("ranking.csv"));
    let scenario = load_scenario(required(&config.paths.scenario, "scenario")?)?;

    let mut rdr = csv::Reader::from_path(&ranking).with_context(|| format!("reading {}", ranking.display()))?;
    let header = rdr.headers()?.clone();
    let picked: Vec<usize> = (0..header.len()).filter(|&i| is_rank_column(&header[i])).collect();
    if header.get(0) != Some("consumer_id") || picked.is_empty() {
        return Err(theftsentry::Error::Shape(format!(
            "{}: expected consumer_id and at least one rank column",
            ranking.display()
        ))
        .into());
    }
    let mut ids = Vec::new();
    let mut ranks: Vec<Vec<f64>> = vec![Vec::new(); picked.len()];
    for record in rdr.records() {
        let record = record?;
        ids.push(record[0].to_string());
        for (k, &i) in picked.iter().enumerate() {
            let v: f64 = record[i].trim().parse().map_err(|_| {
                theftsentry::Error::Shape(format!("{}: bad rank {:?} for {}", ranking.display(), &record[i], &record[0]))
            })?;
            ranks[k].push(v);
        }
    }
    let labels = scenario.labels(ids.iter().map(String::as_str));
    let n = config.evaluate.map_n;
    let columns = picked
        .iter()
        .zip(&ranks)
        .map(|(&i, r)| {
            Ok(ColumnMetrics {
                column: header[i].to_string(),
                auc: auc(r, &labels)?,
                map: map_at_n(r, &labels, n)?,
            })
        })
        .collect::<Result<Vec<_>, theftsentry::Error>>()?;
    for c in &columns {
        println!("{:<16} AUC {:.4}  MAP@{n} {:.4}", c.column, c.auc, c.map);
    }
    let metrics = Metrics {
        consumers: ids.len(),
        fraud: labels.iter().filter(|&&l| l).count(),
        map_n: n,
        columns,
    };
    let f = fs::File::create(dir.join("metrics.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &metrics)?;
    Ok(())
}

pub fn experiment(config: &RunConfig) -> anyhow::Result<()> {
    let exp = config.experiment()?;
    let report = run_experiment(&exp)?;
    let dir = out_dir(config)?;
    write_report_json(dir.join("report.json"), &report)?;
    write_report_csv(dir.join("report.csv"), &report)?;
    write_curves_csv(dir.join("curves.csv"), &report)?;
    write_timing_json(dir.join("timing.json"), &report)?;
    for s in &report.summaries {
        println!(
            "{:<5} {:<7} AUC {:.4} ± {:.4}  MAP@{} {:.4} ± {:.4}",
            s.fdi, s.method, s.auc_mean, s.auc_std, report.map_n, s.map_mean, s.map_std
        );
    }
    Ok(())
}

pub fn mic(config: &RunConfig, input: &Path) -> anyhow::Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(input)
        .with_context(|| format!("reading {}", input.display()))?;
    let mut pairs = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(theftsentry::Error::Shape(format!(
                "{}: row {} has {} fields, expected 2",
                input.display(),
                row + 1,
                record.len()
            ))
            .into());
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => pairs.push((x, y)),
            _ if row == 0 => continue,
            _ => {
                return Err(theftsentry::Error::Parse {
                    path: input.to_path_buf(),
                    line: row as u64 + 1,
                    message: "expected two numbers".into(),
                }
                .into())
            }
        }
    }
    let sample = PairSample::from_pairs(&pairs)?;
    let params = MicParams {
        bound_exponent: config.detect.mic_bound_exponent,
        ..MicParams::default()
    };
    let r = mic_with(&sample, &params);
    if r.degenerate {
        log::warn!("one variable is constant; MIC is 0");
    }
    println!("{}", r.value);
    Ok(())
}
