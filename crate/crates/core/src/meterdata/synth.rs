//! Synthetic ground-truth load profiles.
//!
//! Each consumer gets a daily shape built from a base load plus a morning
//! and an evening peak (Gaussian bumps with consumer-specific centre, width
//! and weight) and a consumer-specific scale. Days vary by a lognormal day
//! factor and per-interval lognormal noise, so every reading is positive.

use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use super::{ConsumerSeries, DayProfile, DEFAULT_INTERVALS};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_consumers: usize,
    pub m_days: usize,
    pub intervals: usize,
    pub seed: u64,
    /// Std-dev of zero-mean Gaussian noise added to each observer reading.
    pub noise_sigma: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_consumers: 391,
            m_days: 30,
            intervals: DEFAULT_INTERVALS,
            seed: 2018,
            noise_sigma: 0.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_consumers == 0 || self.m_days == 0 {
            return Err(Error::Parameter(
                "n_consumers and m_days must be at least 1".into(),
            ));
        }
        if self.intervals < 2 {
            return Err(Error::Parameter("intervals must be at least 2".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Parameter("noise_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Vec<ConsumerSeries>> {
        self.validate()?;
        synth_ground_truth(self.n_consumers, self.m_days, self.intervals, self.seed)
    }
}

struct Bump {
    centre: f64,
    width: f64,
    weight: f64,
}

impl Bump {
    fn at(&self, hour: f64) -> f64 {
        let z = (hour - self.centre) / self.width;
        self.weight * (-0.5 * z * z).exp()
    }
}

struct Habit {
    scale: f64,
    base: f64,
    morning: Bump,
    evening: Bump,
    /// Overnight load (storage heating, night tariffs); weight 0 for most.
    night: Bump,
    noise: f64,
    /// Mean number of appliance bursts per day.
    bursts: f64,
}

/// A stretch of the day during which consumption is multiplied up.
struct Burst {
    start: f64,
    end: f64,
    gain: f64,
}

impl Burst {
    fn draw(rng: &mut rng::Rng) -> Self {
        let start = rng.random_range(BURST_START.0..BURST_START.1);
        let len = rng.random_range(BURST_HOURS.0..BURST_HOURS.1);
        Burst {
            start,
            end: start + len,
            gain: rng.random_range(BURST_GAIN.0..BURST_GAIN.1),
        }
    }
}

const BURST_START: (f64, f64) = (0.0, 24.0);
const NIGHT_LOAD_SHARE: f64 = 0.3;
const BURST_HOURS: (f64, f64) = (0.5, 3.0);
const BURST_GAIN: (f64, f64) = (0.5, 3.0);
const BURSTS_PER_DAY: (f64, f64) = (0.5, 3.0);

const DAY_FACTOR_SIGMA: f64 = 0.1;

impl Habit {
    fn draw(rng: &mut rng::Rng) -> Self {
        let scale = LogNormal::new(0.0, 0.6).expect("valid lognormal").sample(rng);
        Habit {
            scale,
            base: rng.random_range(0.1..0.4),
            morning: Bump {
                centre: rng.random_range(5.5..11.0),
                width: rng.random_range(1.0..2.5),
                weight: rng.random_range(0.2..1.0),
            },
            evening: Bump {
                centre: rng.random_range(16.0..22.5),
                width: rng.random_range(1.0..3.0),
                weight: rng.random_range(0.2..1.0),
            },
            night: Bump {
                centre: rng.random_range(0.0..5.0),
                width: rng.random_range(1.0..3.0),
                weight: if rng.random_bool(NIGHT_LOAD_SHARE) { rng.random_range(0.2..1.2) } else { 0.0 },
            },
            noise: rng.random_range(0.08..0.2),
            bursts: rng.random_range(BURSTS_PER_DAY.0..BURSTS_PER_DAY.1),
        }
    }

    fn shape(&self, hour: f64) -> f64 {
        self.base + self.morning.at(hour) + self.evening.at(hour) + self.night.at(hour) + self.night.at(hour - 24.0)
    }
}

/// Generates `n_consumers` untampered consumers with `m_days` days of
/// `intervals` readings. Output depends only on the arguments.
pub fn synth_ground_truth(
    n_consumers: usize,
    m_days: usize,
    intervals: usize,
    seed: u64,
) -> Result<Vec<ConsumerSeries>> {
    if n_consumers == 0 || m_days == 0 {
        return Err(Error::Parameter(
            "need at least one consumer and one day".into(),
        ));
    }
    if intervals < 2 {
        return Err(Error::Parameter("need at least 2 intervals per day".into()));
    }
    let hours: Vec<f64> = (0..intervals)
        .map(|t| (t as f64 + 0.5) * 24.0 / intervals as f64)
        .collect();
    let day_factor = LogNormal::new(0.0, DAY_FACTOR_SIGMA).expect("valid lognormal");
    (0..n_consumers)
        .map(|i| {
            let mut rng = rng::stream(seed, &[tag::SYNTH, i as u64]);
            let habit = Habit::draw(&mut rng);
            let noise = LogNormal::new(0.0, habit.noise).expect("valid lognormal");
            let days = (0..m_days)
                .map(|_| {
                    let level = habit.scale * day_factor.sample(&mut rng);
                    let count = Poisson::new(habit.bursts).expect("valid poisson").sample(&mut rng) as usize;
                    let bursts: Vec<Burst> = (0..count).map(|_| Burst::draw(&mut rng)).collect();
                    let readings = hours
                        .iter()
                        .map(|&h| {
                            let lift: f64 = bursts
                                .iter()
                                .filter(|b| b.start <= h && h < b.end)
                                .map(|b| 1.0 + b.gain)
                                .product();
                            level * habit.shape(h) * lift * noise.sample(&mut rng)
                        })
                        .collect();
                    DayProfile::new(readings)
                })
                .collect::<Result<Vec<_>>>()?;
            ConsumerSeries::untampered(format!("C{i:04}"), days)
        })
        .collect()
}
