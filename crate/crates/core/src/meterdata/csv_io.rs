//! Wide and long CSV formats for consumer and observer readings.
//!
//! Wide consumer rows are `consumer_id,day,v1,...,vT`, observer rows
//! `day,v1,...,vT`. The long consumer layout is `consumer_id,day,t,value`
//! with 1-based `t`. Missing cells are rejected, never imputed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{AreaDataset, ConsumerSeries, DayProfile};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ColumnSpec {
    /// One row per consumer-day: `consumer_id,day,v1,...,vT`.
    #[default]
    Wide,
    /// One row per reading: `consumer_id,day,t,value`.
    Long,
}

/// Which series of a consumer to write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Recorded,
    GroundTruth,
}

type Cells = BTreeMap<u32, Vec<Option<f64>>>;

struct Table {
    path: PathBuf,
    order: Vec<String>,
    cells: HashMap<String, Cells>,
    intervals: usize,
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, csv::Position::line)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?)
}

fn parse_value(path: &Path, line: u64, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line, format!("{what}: cannot parse {field:?} as a number")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Domain(format!(
            "{}:{line}: {what}: reading {v} must be finite and nonnegative",
            path.display()
        )));
    }
    Ok(v)
}

fn parse_day(path: &Path, line: u64, field: &str) -> Result<u32> {
    field
        .parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse day index {field:?}")))
}

fn read_wide(path: &Path) -> Result<Table> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let mut table = Table {
        path: path.to_path_buf(),
        order: Vec::new(),
        cells: HashMap::new(),
        intervals: header.len().saturating_sub(2),
    };
    if header.is_empty() {
        return Ok(table);
    }
    if header.len() < 4 {
        return Err(Error::Shape(format!(
            "{}: wide header needs consumer_id, day and at least two value columns",
            path.display()
        )));
    }
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != header.len() {
            return Err(Error::Shape(format!(
                "{}:{line}: row has {} fields, header has {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        let id = record[0].to_string();
        let day = parse_day(path, line, &record[1])?;
        let mut row = Vec::with_capacity(table.intervals);
        for (t, field) in record.iter().skip(2).enumerate() {
            if field.is_empty() {
                return Err(Error::Shape(format!(
                    "{}:{line}: consumer {id} day {day} is missing interval {}",
                    path.display(),
                    t + 1
                )));
            }
            let what = format!("consumer {id} day {day} interval {}", t + 1);
            row.push(Some(parse_value(path, line, field, &what)?));
        }
        table.insert_day(line, id, day, row)?;
    }
    Ok(table)
}

fn read_long(path: &Path) -> Result<Table> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let mut table = Table {
        path: path.to_path_buf(),
        order: Vec::new(),
        cells: HashMap::new(),
        intervals: 0,
    };
    if header.is_empty() {
        return Ok(table);
    }
    if header.len() != 4 {
        return Err(Error::Shape(format!(
            "{}: long header must be consumer_id,day,t,value",
            path.display()
        )));
    }
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, got {}", record.len())));
        }
        let id = record[0].to_string();
        let day = parse_day(path, line, &record[1])?;
        let t: usize = record[2]
            .parse()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| parse_err(path, line, format!("bad interval index {:?}", &record[2])))?;
        let what = format!("consumer {id} day {day} interval {t}");
        let value = parse_value(path, line, &record[3], &what)?;
        if !table.cells.contains_key(&id) {
            table.order.push(id.clone());
        }
        let row = table.cells.entry(id).or_default().entry(day).or_default();
        if row.len() < t {
            row.resize(t, None);
        }
        if row[t - 1].replace(value).is_some() {
            return Err(parse_err(path, line, format!("duplicate cell for {what}")));
        }
        table.intervals = table.intervals.max(t);
    }
    Ok(table)
}

impl Table {
    fn insert_day(&mut self, line: u64, id: String, day: u32, row: Vec<Option<f64>>) -> Result<()> {
        if !self.cells.contains_key(&id) {
            self.order.push(id.clone());
        }
        if self.cells.entry(id.clone()).or_default().insert(day, row).is_some() {
            return Err(parse_err(
                &self.path,
                line,
                format!("duplicate row for consumer {id} day {day}"),
            ));
        }
        Ok(())
    }

    /// Groups cells into consumers, checking every (consumer, day, t) is present.
    fn into_consumers(mut self) -> Result<(Vec<u32>, Vec<ConsumerSeries>)> {
        let labels: BTreeSet<u32> = self.cells.values().flat_map(|c| c.keys().copied()).collect();
        let labels: Vec<u32> = labels.into_iter().collect();
        let mut consumers = Vec::with_capacity(self.order.len());
        for id in &self.order {
            let mut cells = self.cells.remove(id).unwrap_or_default();
            let mut days = Vec::with_capacity(labels.len());
            for &day in &labels {
                let row = cells.remove(&day).ok_or_else(|| {
                    Error::Shape(format!(
                        "{}: consumer {id} has no readings for day {day}",
                        self.path.display()
                    ))
                })?;
                let mut readings = Vec::with_capacity(self.intervals);
                for t in 0..self.intervals {
                    match row.get(t).copied().flatten() {
                        Some(v) => readings.push(v),
                        None => {
                            return Err(Error::Shape(format!(
                                "{}: consumer {id} day {day} is missing interval {}",
                                self.path.display(),
                                t + 1
                            )))
                        }
                    }
                }
                days.push(DayProfile::new(readings)?);
            }
            consumers.push(ConsumerSeries::new(id.clone(), days)?);
        }
        Ok((labels, consumers))
    }
}

pub(crate) fn read_consumers(path: &Path, schema: ColumnSpec) -> Result<(Vec<u32>, Vec<ConsumerSeries>)> {
    let table = match schema {
        ColumnSpec::Wide => read_wide(path)?,
        ColumnSpec::Long => read_long(path)?,
    };
    if table.order.is_empty() {
        log::warn!("{}: no consumer rows found", path.display());
    }
    table.into_consumers()
}

/// Reads consumers grouped by id (in first-appearance order) with days in
/// ascending day-index order.
pub fn load_consumers_csv(path: impl AsRef<Path>, schema: ColumnSpec) -> Result<Vec<ConsumerSeries>> {
    read_consumers(path.as_ref(), schema).map(|(_, c)| c)
}

pub(crate) fn read_observer(path: &Path) -> Result<(Vec<u32>, Vec<DayProfile>)> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 3 {
        return Err(Error::Shape(format!(
            "{}: observer header must be day,v1,...,vT with T >= 2",
            path.display()
        )));
    }
    let mut days: BTreeMap<u32, DayProfile> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != header.len() {
            return Err(Error::Shape(format!(
                "{}:{line}: row has {} fields, header has {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        let day = parse_day(path, line, &record[0])?;
        let mut readings = Vec::with_capacity(header.len() - 1);
        for (t, field) in record.iter().skip(1).enumerate() {
            if field.is_empty() {
                return Err(Error::Shape(format!(
                    "{}:{line}: observer day {day} is missing interval {}",
                    path.display(),
                    t + 1
                )));
            }
            readings.push(parse_value(path, line, field, &format!("observer day {day}"))?);
        }
        if days.insert(day, DayProfile::new(readings)?).is_some() {
            return Err(parse_err(path, line, format!("duplicate observer day {day}")));
        }
    }
    Ok(days.into_iter().unzip())
}

/// Reads observer totals, ordered by day index.
pub fn load_observer_csv(path: impl AsRef<Path>) -> Result<Vec<DayProfile>> {
    read_observer(path.as_ref()).map(|(_, d)| d)
}

/// Loads one area from a consumer file and its observer file, checking
/// that both cover the same day indices.
pub fn load_area_csvs(
    consumers: impl AsRef<Path>,
    observer: impl AsRef<Path>,
    schema: ColumnSpec,
) -> Result<AreaDataset> {
    let (labels, consumers) = read_consumers(consumers.as_ref(), schema)?;
    let (obs_labels, observer) = read_observer(observer.as_ref())?;
    if labels != obs_labels {
        return Err(Error::Shape(format!(
            "observer covers {} days, consumers cover {}; day indices must match",
            obs_labels.len(),
            labels.len()
        )));
    }
    AreaDataset::new(consumers, observer)
}

fn write_header(out: &mut impl Write, leading: &[&str], intervals: usize) -> std::io::Result<()> {
    let mut cols: Vec<String> = leading.iter().map(|s| s.to_string()).collect();
    cols.extend((1..=intervals).map(|t| format!("v{t}")));
    writeln!(out, "{}", cols.join(","))
}

fn write_readings(out: &mut impl Write, readings: &[f64]) -> std::io::Result<()> {
    for v in readings {
        write!(out, ",{v}")?;
    }
    writeln!(out)
}

/// Writes consumers in wide layout with day indices 0..m. `{}` formatting of
/// f64 round-trips exactly, so reloading reproduces the data bit for bit.
pub fn write_consumers_csv(path: impl AsRef<Path>, consumers: &[ConsumerSeries], kind: SeriesKind) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let t = consumers.first().map_or(0, ConsumerSeries::intervals);
    write_header(&mut out, &["consumer_id", "day"], t)?;
    for c in consumers {
        let days = match kind {
            SeriesKind::Recorded => c.days(),
            SeriesKind::GroundTruth => c.ground_truth().ok_or_else(|| {
                Error::Parameter(format!("consumer {} has no ground truth", c.consumer_id))
            })?,
        };
        for (j, d) in days.iter().enumerate() {
            write!(out, "{},{j}", c.consumer_id)?;
            write_readings(&mut out, d.readings())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_observer_csv(path: impl AsRef<Path>, days: &[DayProfile]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    write_header(&mut out, &["day"], days.first().map_or(0, DayProfile::intervals))?;
    for (j, d) in days.iter().enumerate() {
        write!(out, "{j}")?;
        write_readings(&mut out, d.readings())?;
    }
    out.flush()?;
    Ok(())
}
