//! False-data-injection attacks on recorded load profiles.
//!
//! | type | recorded value |
//! |------|----------------|
//! | FDI1 | `α·x_t`, α ∈ (0.2, 0.8) |
//! | FDI2 | `min(x_t, γ)`, γ < max x |
//! | FDI3 | `max(x_t − γ, 0)`, γ < max x |
//! | FDI4 | `0` inside a window longer than 4 h, `x_t` elsewhere |
//! | FDI5 | `α_t·x_t`, α_t ∈ (0.2, 0.8) per interval |
//! | FDI6 | `α_t·x̄`, x̄ the mean of the true day |

mod scenario;

pub use scenario::{
    build_scenario, AreaAssignment, DayTamper, FdiMix, ScenarioConfig, TamperRecord,
    TamperScenario,
};

use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meterdata::DayProfile;
use crate::rng::Rng;

pub const ALPHA_LOW: f64 = 0.2;
pub const ALPHA_HIGH: f64 = 0.8;
/// FDI4 windows must be strictly longer than this many hours.
pub const MIN_WINDOW_HOURS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FdiType {
    #[serde(rename = "FDI1")]
    Fdi1,
    #[serde(rename = "FDI2")]
    Fdi2,
    #[serde(rename = "FDI3")]
    Fdi3,
    #[serde(rename = "FDI4")]
    Fdi4,
    #[serde(rename = "FDI5")]
    Fdi5,
    #[serde(rename = "FDI6")]
    Fdi6,
}

impl FdiType {
    pub const ALL: [FdiType; 6] = [
        FdiType::Fdi1,
        FdiType::Fdi2,
        FdiType::Fdi3,
        FdiType::Fdi4,
        FdiType::Fdi5,
        FdiType::Fdi6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["FDI1", "FDI2", "FDI3", "FDI4", "FDI5", "FDI6"][self.index()]
    }

    pub fn from_name(name: &str) -> Option<Self> {
        FdiType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for FdiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of one tampered day; each variant carries only what its
/// attack uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum FdiParams {
    #[serde(rename = "FDI1")]
    Fdi1 { alpha: f64 },
    #[serde(rename = "FDI2")]
    Fdi2 { gamma: f64 },
    #[serde(rename = "FDI3")]
    Fdi3 { gamma: f64 },
    /// Zeroes intervals `t1..t2` (half-open), i.e. the slots strictly
    /// between boundaries `t1 − 1` and `t2`.
    #[serde(rename = "FDI4")]
    Fdi4 { t1: usize, t2: usize },
    #[serde(rename = "FDI5")]
    Fdi5 { alpha_t: Vec<f64> },
    #[serde(rename = "FDI6")]
    Fdi6 { alpha_t: Vec<f64>, day_mean: f64 },
}

impl FdiParams {
    pub fn fdi_type(&self) -> FdiType {
        match self {
            FdiParams::Fdi1 { .. } => FdiType::Fdi1,
            FdiParams::Fdi2 { .. } => FdiType::Fdi2,
            FdiParams::Fdi3 { .. } => FdiType::Fdi3,
            FdiParams::Fdi4 { .. } => FdiType::Fdi4,
            FdiParams::Fdi5 { .. } => FdiType::Fdi5,
            FdiParams::Fdi6 { .. } => FdiType::Fdi6,
        }
    }

    /// Checks the parameters against the day they will be applied to.
    pub fn validate(&self, day: &DayProfile) -> Result<()> {
        let t = day.intervals();
        let in_band = |a: f64| a > ALPHA_LOW && a < ALPHA_HIGH;
        match self {
            FdiParams::Fdi1 { alpha } if !in_band(*alpha) => {
                Err(Error::Parameter(format!("FDI1 alpha {alpha} outside (0.2, 0.8)")))
            }
            FdiParams::Fdi2 { gamma } | FdiParams::Fdi3 { gamma } => {
                if !(*gamma >= 0.0 && *gamma < day.max()) {
                    Err(Error::Parameter(format!(
                        "cut-off {gamma} must lie in [0, max of day = {})",
                        day.max()
                    )))
                } else {
                    Ok(())
                }
            }
            FdiParams::Fdi4 { t1, t2 } => {
                if t1 >= t2 || *t2 > t {
                    Err(Error::Parameter(format!(
                        "FDI4 window {t1}..{t2} is empty or exceeds {t} intervals"
                    )))
                } else if !window_long_enough(t2 - t1, t) {
                    Err(Error::Parameter(format!(
                        "FDI4 window of {} intervals is not longer than {MIN_WINDOW_HOURS} h at {t} intervals/day",
                        t2 - t1
                    )))
                } else {
                    Ok(())
                }
            }
            FdiParams::Fdi5 { alpha_t } | FdiParams::Fdi6 { alpha_t, .. } => {
                if alpha_t.len() != t {
                    return Err(Error::Parameter(format!(
                        "alpha_t has {} entries for a {t}-interval day",
                        alpha_t.len()
                    )));
                }
                if let Some(a) = alpha_t.iter().find(|a| !in_band(**a)) {
                    return Err(Error::Parameter(format!("alpha_t entry {a} outside (0.2, 0.8)")));
                }
                match self {
                    FdiParams::Fdi6 { day_mean, .. } if !(*day_mean >= 0.0 && day_mean.is_finite()) => {
                        Err(Error::Parameter(format!("FDI6 day mean {day_mean} invalid")))
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// A window of `len` intervals covers `len · 24 / T` hours.
fn window_long_enough(len: usize, intervals: usize) -> bool {
    len * 24 > MIN_WINDOW_HOURS * intervals
}

/// Smallest FDI4 window length (in intervals) for a day of `intervals`.
pub fn min_window_len(intervals: usize) -> usize {
    MIN_WINDOW_HOURS * intervals / 24 + 1
}

/// Returns the recorded (tampered) version of a ground-truth day.
pub fn apply_fdi(day: &DayProfile, params: &FdiParams) -> Result<DayProfile> {
    params.validate(day)?;
    let x = day.readings();
    let tampered: Vec<f64> = match params {
        FdiParams::Fdi1 { alpha } => x.iter().map(|v| alpha * v).collect(),
        FdiParams::Fdi2 { gamma } => x.iter().map(|v| v.min(*gamma)).collect(),
        FdiParams::Fdi3 { gamma } => x.iter().map(|v| (v - gamma).max(0.0)).collect(),
        FdiParams::Fdi4 { t1, t2 } => x
            .iter()
            .enumerate()
            .map(|(t, v)| if (*t1..*t2).contains(&t) { 0.0 } else { *v })
            .collect(),
        FdiParams::Fdi5 { alpha_t } => x.iter().zip(alpha_t).map(|(v, a)| a * v).collect(),
        FdiParams::Fdi6 { alpha_t, day_mean } => alpha_t.iter().map(|a| a * day_mean).collect(),
    };
    DayProfile::new(tampered)
}

pub(crate) fn draw_alpha(rng: &mut Rng) -> f64 {
    loop {
        let a = rng.random_range(ALPHA_LOW..ALPHA_HIGH);
        if a > ALPHA_LOW {
            return a;
        }
    }
}

/// γ ~ Uniform(0.2·bound, 0.8·bound).
pub(crate) fn draw_gamma(bound: f64, rng: &mut Rng) -> f64 {
    draw_alpha(rng) * bound
}

fn draw_window(intervals: usize, rng: &mut Rng) -> (usize, usize) {
    let min_len = min_window_len(intervals);
    let max_len = intervals.saturating_sub(1).max(min_len);
    let count: usize = (min_len..=max_len).map(|l| intervals + 1 - l).sum();
    let mut pick = rng.random_range(0..count);
    for len in min_len..=max_len {
        let starts = intervals + 1 - len;
        if pick < starts {
            return (pick, pick + len);
        }
        pick -= starts;
    }
    unreachable!("window index within count")
}

/// Draws fresh parameters of the given type for one day.
pub fn sample_params(fdi_type: FdiType, day: &DayProfile, rng: &mut Rng) -> Result<FdiParams> {
    let max = day.max();
    if max <= 0.0 {
        return Err(Error::Parameter("cannot tamper an all-zero day".into()));
    }
    let t = day.intervals();
    Ok(match fdi_type {
        FdiType::Fdi1 => FdiParams::Fdi1 { alpha: draw_alpha(rng) },
        FdiType::Fdi2 => FdiParams::Fdi2 { gamma: draw_gamma(max, rng) },
        FdiType::Fdi3 => FdiParams::Fdi3 { gamma: draw_gamma(max, rng) },
        FdiType::Fdi4 => {
            let (t1, t2) = draw_window(t, rng);
            FdiParams::Fdi4 { t1, t2 }
        }
        FdiType::Fdi5 => FdiParams::Fdi5 {
            alpha_t: (0..t).map(|_| draw_alpha(rng)).collect(),
        },
        FdiType::Fdi6 => FdiParams::Fdi6 {
            alpha_t: (0..t).map(|_| draw_alpha(rng)).collect(),
            day_mean: day.mean(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meterdata::synth_ground_truth;
    use crate::rng::stream;

    fn day(v: &[f64]) -> DayProfile {
        DayProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn fdi1_scales() {
        let out = apply_fdi(&day(&[1.0, 2.0, 4.0]), &FdiParams::Fdi1 { alpha: 0.5 }).unwrap();
        assert_eq!(out.readings(), &[0.5, 1.0, 2.0]);
    }

    #[test]
    fn fdi2_clips() {
        let out = apply_fdi(&day(&[1.0, 3.0, 5.0]), &FdiParams::Fdi2 { gamma: 2.0 }).unwrap();
        assert_eq!(out.readings(), &[1.0, 2.0, 2.0]);
    }

    #[test]
    fn fdi3_subtracts() {
        let out = apply_fdi(&day(&[1.0, 3.0, 5.0]), &FdiParams::Fdi3 { gamma: 2.0 }).unwrap();
        assert_eq!(out.readings(), &[0.0, 1.0, 3.0]);
    }

    #[test]
    fn fdi4_masks_window() {
        let out = apply_fdi(&day(&[5.0; 4]), &FdiParams::Fdi4 { t1: 1, t2: 3 }).unwrap();
        assert_eq!(out.readings(), &[5.0, 0.0, 0.0, 5.0]);
    }

    #[test]
    fn fdi6_replaces_with_scaled_mean() {
        let p = FdiParams::Fdi6 {
            alpha_t: vec![0.5, 0.25],
            day_mean: 3.0,
        };
        assert_eq!(apply_fdi(&day(&[2.0, 4.0]), &p).unwrap().readings(), &[1.5, 0.75]);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let d = day(&[1.0, 3.0, 5.0]);
        assert!(matches!(apply_fdi(&d, &FdiParams::Fdi2 { gamma: 5.0 }), Err(Error::Parameter(_))));
        assert!(matches!(apply_fdi(&d, &FdiParams::Fdi3 { gamma: 7.0 }), Err(Error::Parameter(_))));
        assert!(matches!(apply_fdi(&d, &FdiParams::Fdi4 { t1: 2, t2: 2 }), Err(Error::Parameter(_))));
        assert!(matches!(apply_fdi(&d, &FdiParams::Fdi4 { t1: 1, t2: 4 }), Err(Error::Parameter(_))));
        assert!(matches!(apply_fdi(&d, &FdiParams::Fdi1 { alpha: 0.9 }), Err(Error::Parameter(_))));
        let half_hour = DayProfile::new(vec![1.0; 48]).unwrap();
        // 8 half-hours is exactly 4 h: not longer than 4 h
        assert!(apply_fdi(&half_hour, &FdiParams::Fdi4 { t1: 10, t2: 18 }).is_err());
        assert!(apply_fdi(&half_hour, &FdiParams::Fdi4 { t1: 10, t2: 19 }).is_ok());
        let p5 = FdiParams::Fdi5 { alpha_t: vec![0.5; 2] };
        assert!(apply_fdi(&d, &p5).is_err());
    }

    #[test]
    fn input_day_is_untouched() {
        let d = day(&[1.0, 2.0, 3.0]);
        let copy = d.clone();
        let _ = apply_fdi(&d, &FdiParams::Fdi1 { alpha: 0.3 }).unwrap();
        assert_eq!(d, copy);
    }

    #[test]
    fn alpha_sampler_band_and_mean() {
        let d = day(&[1.0, 2.0]);
        let mut rng = stream(99, &[]);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| match sample_params(FdiType::Fdi1, &d, &mut rng).unwrap() {
                FdiParams::Fdi1 { alpha } => alpha,
                other => panic!("{other:?}"),
            })
            .collect();
        assert!(draws.iter().all(|&a| a > 0.2 && a < 0.8));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        // sd of the mean is 0.6/sqrt(12)/100 ≈ 0.0017
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn window_sampler_respects_length() {
        assert_eq!(min_window_len(48), 9);
        assert_eq!(min_window_len(24), 5);
        let d = DayProfile::new(vec![1.0; 48]).unwrap();
        let mut rng = stream(5, &[]);
        for _ in 0..2000 {
            match sample_params(FdiType::Fdi4, &d, &mut rng).unwrap() {
                FdiParams::Fdi4 { t1, t2 } => {
                    assert!(t2 - t1 >= 9 && t2 <= 48 && t2 - t1 < 48);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn gamma_sampler_range() {
        let d = day(&[1.0, 10.0, 4.0]);
        let mut rng = stream(6, &[]);
        for _ in 0..2000 {
            for ty in [FdiType::Fdi2, FdiType::Fdi3] {
                match sample_params(ty, &d, &mut rng).unwrap() {
                    FdiParams::Fdi2 { gamma } | FdiParams::Fdi3 { gamma } => {
                        assert!(gamma > 2.0 && gamma < 8.0)
                    }
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn fdi6_uses_mean_of_true_day() {
        let d = day(&[2.0, 4.0, 6.0]);
        let mut rng = stream(1, &[]);
        match sample_params(FdiType::Fdi6, &d, &mut rng).unwrap() {
            FdiParams::Fdi6 { day_mean, alpha_t } => {
                assert_eq!(day_mean, 4.0);
                assert_eq!(alpha_t.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_zero_day_cannot_be_sampled() {
        let mut rng = stream(1, &[]);
        assert!(matches!(
            sample_params(FdiType::Fdi1, &day(&[0.0, 0.0]), &mut rng),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn theft_reduces_consumption() {
        let consumers = synth_ground_truth(50, 20, 48, 17).unwrap();
        let mut rng = stream(23, &[]);
        let mut reduced = [0usize; 6];
        let mut total = 0;
        for c in &consumers {
            for d in c.days() {
                total += 1;
                for ty in FdiType::ALL {
                    let p = sample_params(ty, d, &mut rng).unwrap();
                    let out = apply_fdi(d, &p).unwrap();
                    assert!(out.readings().iter().all(|&v| v >= 0.0));
                    if ty.index() < 4 {
                        for (a, b) in out.readings().iter().zip(d.readings()) {
                            assert!(a <= b);
                        }
                    }
                    if out.mean() < d.mean() {
                        reduced[ty.index()] += 1;
                    }
                }
            }
        }
        assert_eq!(total, 1000);
        for (ty, n) in FdiType::ALL.iter().zip(reduced) {
            assert!(n * 100 >= total * 99, "{ty}: {n}/{total}");
        }
    }

    #[test]
    fn params_serde_round_trip() {
        let p = FdiParams::Fdi4 { t1: 3, t2: 14 };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"type":"FDI4","t1":3,"t2":14}"#);
        assert_eq!(serde_json::from_str::<FdiParams>(&s).unwrap(), p);
    }
}
