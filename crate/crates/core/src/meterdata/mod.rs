//! Load-profile data model: per-day readings, consumers, areas with an
//! observer meter, non-technical loss and profile normalization.

mod csv_io;
mod synth;

pub use csv_io::{
    load_area_csvs, load_consumers_csv, load_observer_csv, write_consumers_csv,
    write_observer_csv, ColumnSpec, SeriesKind,
};
pub use synth::{synth_ground_truth, GeneratorConfig};

use crate::error::{Error, Result};

/// Default number of intervals per day (half-hour resolution).
pub const DEFAULT_INTERVALS: usize = 48;

/// Absolute tolerance below which an NTL reading counts as zero, scaled by
/// the largest observer reading of the day when that exceeds one.
pub const NTL_ZERO_TOLERANCE: f64 = 1e-9;

/// One day of nonnegative interval readings.
#[derive(Clone, Debug, PartialEq)]
pub struct DayProfile {
    readings: Vec<f64>,
}

impl DayProfile {
    pub fn new(readings: Vec<f64>) -> Result<Self> {
        if readings.len() < 2 {
            return Err(Error::Shape(format!(
                "a day needs at least 2 intervals, got {}",
                readings.len()
            )));
        }
        if let Some((t, v)) = readings
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Domain(format!(
                "reading {v} at interval {t} is not a finite nonnegative value"
            )));
        }
        Ok(DayProfile { readings })
    }

    pub fn readings(&self) -> &[f64] {
        &self.readings
    }

    pub fn intervals(&self) -> usize {
        self.readings.len()
    }

    pub fn max(&self) -> f64 {
        self.readings.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.readings.iter().sum::<f64>() / self.readings.len() as f64
    }

    pub fn total(&self) -> f64 {
        self.readings.iter().sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.readings.iter().all(|&v| v == 0.0)
    }

    pub fn into_readings(self) -> Vec<f64> {
        self.readings
    }
}

/// A consumer's recorded days and, when known, the untampered ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsumerSeries {
    pub consumer_id: String,
    days: Vec<DayProfile>,
    ground_truth: Option<Vec<DayProfile>>,
}

impl ConsumerSeries {
    pub fn new(consumer_id: impl Into<String>, days: Vec<DayProfile>) -> Result<Self> {
        let consumer_id = consumer_id.into();
        check_uniform(&consumer_id, &days)?;
        Ok(ConsumerSeries {
            consumer_id,
            days,
            ground_truth: None,
        })
    }

    /// A consumer whose recorded data is the ground truth itself.
    pub fn untampered(consumer_id: impl Into<String>, days: Vec<DayProfile>) -> Result<Self> {
        let mut series = Self::new(consumer_id, days)?;
        series.ground_truth = Some(series.days.clone());
        Ok(series)
    }

    pub fn with_ground_truth(mut self, truth: Vec<DayProfile>) -> Result<Self> {
        if truth.len() != self.days.len()
            || truth
                .iter()
                .zip(&self.days)
                .any(|(a, b)| a.intervals() != b.intervals())
        {
            return Err(Error::Shape(format!(
                "ground truth of consumer {} does not match its recorded shape",
                self.consumer_id
            )));
        }
        self.ground_truth = Some(truth);
        Ok(self)
    }

    pub fn days(&self) -> &[DayProfile] {
        &self.days
    }

    pub fn ground_truth(&self) -> Option<&[DayProfile]> {
        self.ground_truth.as_deref()
    }

    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    /// Interval count shared by all days (0 for a consumer without days).
    pub fn intervals(&self) -> usize {
        self.days.first().map_or(0, DayProfile::intervals)
    }

    /// Replaces the recorded profile of one day, keeping ground truth intact.
    pub fn set_recorded(&mut self, day: usize, profile: DayProfile) -> Result<()> {
        let t = self.intervals();
        let slot = self.days.get_mut(day).ok_or_else(|| {
            Error::Shape(format!("day {day} out of range for {}", self.consumer_id))
        })?;
        if profile.intervals() != t {
            return Err(Error::Shape(format!(
                "profile has {} intervals, consumer {} has {t}",
                profile.intervals(),
                self.consumer_id
            )));
        }
        *slot = profile;
        Ok(())
    }
}

fn check_uniform(id: &str, days: &[DayProfile]) -> Result<()> {
    if let Some(first) = days.first() {
        if let Some((j, d)) = days
            .iter()
            .enumerate()
            .find(|(_, d)| d.intervals() != first.intervals())
        {
            return Err(Error::Shape(format!(
                "consumer {id} day {j} has {} intervals, expected {}",
                d.intervals(),
                first.intervals()
            )));
        }
    }
    Ok(())
}

/// Consumers behind one observer meter.
#[derive(Clone, Debug)]
pub struct AreaDataset {
    consumers: Vec<ConsumerSeries>,
    observer: Vec<DayProfile>,
    ntl: Option<Vec<Vec<f64>>>,
}

impl AreaDataset {
    pub fn new(consumers: Vec<ConsumerSeries>, observer: Vec<DayProfile>) -> Result<Self> {
        let m = observer.len();
        let t = observer.first().map_or(0, DayProfile::intervals);
        if observer.iter().any(|d| d.intervals() != t) {
            return Err(Error::Shape("observer days differ in interval count".into()));
        }
        for c in &consumers {
            if c.n_days() != m || (m > 0 && c.intervals() != t) {
                return Err(Error::Shape(format!(
                    "consumer {} has shape {}x{}, observer has {m}x{t}",
                    c.consumer_id,
                    c.n_days(),
                    c.intervals()
                )));
            }
        }
        Ok(AreaDataset {
            consumers,
            observer,
            ntl: None,
        })
    }

    /// Builds an area whose observer reads the exact sum of ground truth.
    pub fn from_ground_truth(consumers: Vec<ConsumerSeries>) -> Result<Self> {
        let observer = observer_from_ground_truth(&consumers)?;
        Self::new(consumers, observer)
    }

    pub fn consumers(&self) -> &[ConsumerSeries] {
        &self.consumers
    }

    pub fn observer(&self) -> &[DayProfile] {
        &self.observer
    }

    pub fn n_days(&self) -> usize {
        self.observer.len()
    }

    pub fn intervals(&self) -> usize {
        self.observer.first().map_or(0, DayProfile::intervals)
    }

    /// NTL per day, if [`compute_ntl`] has run.
    pub fn ntl(&self) -> Option<&[Vec<f64>]> {
        self.ntl.as_deref()
    }

    /// Computes the NTL on first use and returns it.
    pub fn ntl_or_compute(&mut self) -> Result<&[Vec<f64>]> {
        if self.ntl.is_none() {
            compute_ntl(self)?;
        }
        Ok(self.ntl.as_deref().unwrap_or_default())
    }

    /// True when day `j` carries no loss: every |e_t| is within tolerance.
    pub fn ntl_is_zero(&self, day: usize) -> bool {
        let Some(ntl) = &self.ntl else { return false };
        let scale = self.observer[day].max().max(1.0);
        ntl[day]
            .iter()
            .all(|e| e.abs() <= NTL_ZERO_TOLERANCE * scale)
    }
}

/// Sums ground truth per interval, in consumer order.
pub fn observer_from_ground_truth(consumers: &[ConsumerSeries]) -> Result<Vec<DayProfile>> {
    let first = consumers
        .first()
        .ok_or_else(|| Error::Parameter("an area needs at least one consumer".into()))?;
    let (m, t) = (first.n_days(), first.intervals());
    let mut totals = vec![vec![0.0; t]; m];
    for c in consumers {
        let truth = c.ground_truth().ok_or_else(|| {
            Error::Parameter(format!("consumer {} has no ground truth", c.consumer_id))
        })?;
        if truth.len() != m || c.intervals() != t {
            return Err(Error::Shape(format!(
                "consumer {} does not share the area shape {m}x{t}",
                c.consumer_id
            )));
        }
        for (acc, day) in totals.iter_mut().zip(truth) {
            for (a, v) in acc.iter_mut().zip(day.readings()) {
                *a += v;
            }
        }
    }
    totals.into_iter().map(DayProfile::new).collect()
}

/// e_t = E_t − Σ_i x̃_{i,t} for every interval of every day. The result is
/// signed and is also stored on the area.
pub fn compute_ntl(area: &mut AreaDataset) -> Result<&[Vec<f64>]> {
    let m = area.observer.len();
    let t = area.intervals();
    let mut ntl: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (j, observed) in area.observer.iter().enumerate() {
        let mut billed = vec![0.0; t];
        for c in &area.consumers {
            let day = c.days.get(j).filter(|d| d.intervals() == t).ok_or_else(|| {
                Error::Shape(format!(
                    "consumer {} is not aligned with the observer at day {j}",
                    c.consumer_id
                ))
            })?;
            for (b, v) in billed.iter_mut().zip(day.readings()) {
                *b += v;
            }
        }
        ntl.push(
            observed
                .readings()
                .iter()
                .zip(&billed)
                .map(|(e, b)| e - b)
                .collect(),
        );
    }
    area.ntl = Some(ntl);
    Ok(area.ntl.as_deref().unwrap_or_default())
}

/// A day scaled by its own maximum. All-zero days stay zero and are flagged.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedProfile {
    pub values: Vec<f64>,
    pub consumer: usize,
    pub day: usize,
    pub degenerate: bool,
}

pub fn normalize_profile(day: &DayProfile, consumer: usize, day_index: usize) -> NormalizedProfile {
    let (values, degenerate) = normalize_readings(day.readings());
    NormalizedProfile {
        values,
        consumer,
        day: day_index,
        degenerate,
    }
}

pub(crate) fn normalize_readings(readings: &[f64]) -> (Vec<f64>, bool) {
    let max = readings.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        (readings.iter().map(|v| v / max).collect(), false)
    } else {
        (vec![0.0; readings.len()], true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(v: &[f64]) -> DayProfile {
        DayProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn day_profile_validation() {
        assert!(matches!(DayProfile::new(vec![1.0]), Err(Error::Shape(_))));
        assert!(matches!(DayProfile::new(vec![1.0, -0.5]), Err(Error::Domain(_))));
        assert!(matches!(DayProfile::new(vec![1.0, f64::NAN]), Err(Error::Domain(_))));
        assert!(DayProfile::new(vec![0.0, 0.0]).is_ok());
    }

    #[test]
    fn consumer_days_share_interval_count() {
        let err = ConsumerSeries::new("a", vec![day(&[1.0, 2.0]), day(&[1.0, 2.0, 3.0])]);
        assert!(matches!(err, Err(Error::Shape(_))));
        let ok = ConsumerSeries::new("a", vec![day(&[1.0, 2.0])]).unwrap();
        assert!(ok.clone().with_ground_truth(vec![day(&[1.0, 2.0, 3.0])]).is_err());
    }

    #[test]
    fn ntl_of_benign_area_is_zero() {
        let consumers = vec![
            ConsumerSeries::new("a", vec![day(&[4.0, 4.0])]).unwrap(),
            ConsumerSeries::new("b", vec![day(&[6.0, 6.0])]).unwrap(),
        ];
        let mut area = AreaDataset::new(consumers, vec![day(&[10.0, 10.0])]).unwrap();
        assert_eq!(compute_ntl(&mut area).unwrap(), &[vec![0.0, 0.0]]);
        assert!(area.ntl_is_zero(0));
    }

    #[test]
    fn ntl_subtracts_recorded_consumption() {
        let consumers = vec![
            ConsumerSeries::new("a", vec![day(&[4.0, 4.0])]).unwrap(),
            ConsumerSeries::new("b", vec![day(&[3.0, 3.0])]).unwrap(),
        ];
        let mut area = AreaDataset::new(consumers, vec![day(&[10.0, 10.0])]).unwrap();
        assert_eq!(compute_ntl(&mut area).unwrap(), &[vec![3.0, 3.0]]);
        assert!(!area.ntl_is_zero(0));
    }

    #[test]
    fn area_rejects_misaligned_consumers() {
        let consumers = vec![ConsumerSeries::new("a", vec![day(&[4.0, 4.0, 1.0])]).unwrap()];
        assert!(matches!(
            AreaDataset::new(consumers, vec![day(&[10.0, 10.0])]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn synthetic_area_without_tampering_has_zero_ntl() {
        let consumers = synth_ground_truth(12, 3, 48, 11).unwrap();
        let mut area = AreaDataset::from_ground_truth(consumers).unwrap();
        for row in compute_ntl(&mut area).unwrap() {
            assert!(row.iter().all(|e| e.abs() <= 1e-9));
        }
        assert!((0..3).all(|j| area.ntl_is_zero(j)));
    }

    #[test]
    fn normalization_examples() {
        let u = normalize_profile(&day(&[2.0, 4.0, 8.0, 4.0]), 0, 0);
        assert_eq!(u.values, vec![0.25, 0.5, 1.0, 0.5]);
        assert!(!u.degenerate);
        let z = normalize_profile(&day(&[0.0; 4]), 3, 1);
        assert_eq!(z.values, vec![0.0; 4]);
        assert!(z.degenerate);
        assert_eq!((z.consumer, z.day), (3, 1));
    }

    proptest! {
        #[test]
        fn normalization_is_scale_invariant_and_idempotent(
            v in prop::collection::vec(0.0f64..100.0, 2..60),
            c in prop::sample::select(vec![0.5f64, 2.0, 4.0, 0.25, 8.0]),
        ) {
            let (a, deg) = normalize_readings(&v);
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let (b, _) = normalize_readings(&scaled);
            // powers of two keep the division exact
            prop_assert_eq!(&a, &b);
            let (again, _) = normalize_readings(&a);
            prop_assert_eq!(&a, &again);
            if !deg {
                prop_assert_eq!(a.iter().copied().fold(0.0, f64::max), 1.0);
            }
        }

        #[test]
        fn normalization_scale_invariance_within_rounding(
            v in prop::collection::vec(0.01f64..100.0, 2..60),
            c in 0.01f64..100.0,
        ) {
            let (a, _) = normalize_readings(&v);
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let (b, _) = normalize_readings(&scaled);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
