//! Labeled tamper scenarios: consumers split into areas, thieves drawn per
//! area, each thief tampering a random half of its days with one FDI type.

use std::collections::{BTreeMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{apply_fdi, draw_alpha, draw_gamma, sample_params, FdiParams, FdiType};
use crate::error::{Error, Result};
use crate::meterdata::{observer_from_ground_truth, AreaDataset, ConsumerSeries, DayProfile};
use crate::rng::{self, tag};

/// Probability weights over FDI1..FDI6.
#[derive(Clone, Debug, PartialEq)]
pub struct FdiMix {
    weights: [f64; 6],
}

impl FdiMix {
    pub fn new(weights: [f64; 6]) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Parameter(
                "FDI mix weights must be nonnegative and sum to a positive value".into(),
            ));
        }
        Ok(FdiMix { weights })
    }

    /// Every thief picks one of the six types uniformly.
    pub fn uniform() -> Self {
        FdiMix { weights: [1.0; 6] }
    }

    pub fn single(ty: FdiType) -> Self {
        let mut weights = [0.0; 6];
        weights[ty.index()] = 1.0;
        FdiMix { weights }
    }

    pub fn weights(&self) -> &[f64; 6] {
        &self.weights
    }

    /// `FDIk` for a single type, `MIX` for uniform weights, else `CUSTOM`.
    pub fn label(&self) -> String {
        let nonzero: Vec<usize> = (0..6).filter(|&k| self.weights[k] > 0.0).collect();
        if let [k] = nonzero[..] {
            FdiType::ALL[k].name().to_string()
        } else if self.weights.iter().all(|&w| w == self.weights[0]) {
            "MIX".to_string()
        } else {
            "CUSTOM".to_string()
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        if name.trim().eq_ignore_ascii_case("mix") {
            return Ok(Self::uniform());
        }
        FdiType::from_name(name)
            .map(Self::single)
            .ok_or_else(|| Error::Parameter(format!("unknown FDI type {name:?}")))
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> FdiType {
        let total: f64 = self.weights.iter().sum();
        let mut u = rng.random_range(0.0..total);
        for ty in FdiType::ALL {
            let w = self.weights[ty.index()];
            if u < w {
                return ty;
            }
            u -= w;
        }
        // rounding at the top end: last type with positive weight
        *FdiType::ALL
            .iter()
            .rev()
            .find(|t| self.weights[t.index()] > 0.0)
            .expect("positive total weight")
    }
}

impl Default for FdiMix {
    fn default() -> Self {
        Self::uniform()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MixRepr {
    Name(String),
    Weights(BTreeMap<String, f64>),
}

impl TryFrom<MixRepr> for FdiMix {
    type Error = Error;

    fn try_from(repr: MixRepr) -> Result<Self> {
        match repr {
            MixRepr::Name(name) => FdiMix::parse(&name),
            MixRepr::Weights(map) => {
                let mut weights = [0.0; 6];
                for (name, w) in map {
                    let ty = FdiType::from_name(&name)
                        .ok_or_else(|| Error::Parameter(format!("unknown FDI type {name:?}")))?;
                    weights[ty.index()] = w;
                }
                FdiMix::new(weights)
            }
        }
    }
}

impl From<FdiMix> for MixRepr {
    fn from(mix: FdiMix) -> Self {
        match mix.label().as_str() {
            "CUSTOM" => MixRepr::Weights(
                FdiType::ALL
                    .iter()
                    .map(|t| (t.name().to_string(), mix.weights[t.index()]))
                    .collect(),
            ),
            label => MixRepr::Name(label.to_string()),
        }
    }
}

impl Serialize for FdiMix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MixRepr::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FdiMix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FdiMix::try_from(MixRepr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub areas: usize,
    pub thieves_per_area: usize,
    pub fdi_mix: FdiMix,
    pub tampered_day_fraction: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            areas: 10,
            thieves_per_area: 5,
            fdi_mix: FdiMix::uniform(),
            tampered_day_fraction: 0.5,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self, n_consumers: usize) -> Result<()> {
        if self.areas == 0 || self.areas > n_consumers {
            return Err(Error::Parameter(format!(
                "cannot split {n_consumers} consumers into {} areas",
                self.areas
            )));
        }
        let smallest = n_consumers / self.areas;
        if self.thieves_per_area >= smallest {
            return Err(Error::Parameter(format!(
                "{} thieves per area needs more than {smallest} consumers per area",
                self.thieves_per_area
            )));
        }
        if !(self.tampered_day_fraction > 0.0 && self.tampered_day_fraction <= 1.0) {
            return Err(Error::Parameter("tampered_day_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn tampered_days(&self, m_days: usize) -> usize {
        ((m_days as f64 * self.tampered_day_fraction).floor() as usize).min(m_days)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaAssignment {
    pub id: usize,
    pub consumers: Vec<String>,
    pub fraud: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayTamper {
    pub day: usize,
    pub params: FdiParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TamperRecord {
    pub consumer_id: String,
    pub area: usize,
    pub fdi_type: FdiType,
    pub days: Vec<DayTamper>,
}

/// Ground-truth labels of one generated scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TamperScenario {
    pub seed: u64,
    pub fdi_mix: FdiMix,
    pub m_days: usize,
    pub intervals: usize,
    pub areas: Vec<AreaAssignment>,
    pub fraud_ids: Vec<String>,
    pub tampers: Vec<TamperRecord>,
}

impl TamperScenario {
    pub fn fraud_set(&self) -> HashSet<&str> {
        self.fraud_ids.iter().map(String::as_str).collect()
    }

    /// Fraud label per consumer id, in the order given.
    pub fn labels<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Vec<bool> {
        let fraud = self.fraud_set();
        ids.into_iter().map(|id| fraud.contains(id)).collect()
    }
}

/// Splits `n` indices into `areas` shuffled groups whose sizes differ by at
/// most one; each group is returned in ascending index order.
fn partition(n: usize, areas: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[tag::AREAS]));
    let (base, extra) = (n / areas, n % areas);
    let mut groups = Vec::with_capacity(areas);
    let mut start = 0;
    for k in 0..areas {
        let len = base + usize::from(k < extra);
        let mut g = order[start..start + len].to_vec();
        g.sort_unstable();
        groups.push(g);
        start += len;
    }
    groups
}

/// Tampers one thief's recorded days in place and returns the record.
fn tamper_consumer(
    consumer: &mut ConsumerSeries,
    global_index: usize,
    area: usize,
    config: &ScenarioConfig,
    seed: u64,
) -> Result<TamperRecord> {
    let i = global_index as u64;
    let fdi_type = config.fdi_mix.sample(&mut rng::stream(seed, &[tag::FDI_TYPE, i]));
    let m = consumer.n_days();
    let mut days: Vec<usize> = index::sample(
        &mut rng::stream(seed, &[tag::DAYS, i]),
        m,
        config.tampered_days(m),
    )
    .into_vec();
    days.sort_unstable();

    let truth: Vec<DayProfile> = consumer
        .ground_truth()
        .ok_or_else(|| Error::Parameter(format!("consumer {} has no ground truth", consumer.consumer_id)))?
        .to_vec();
    if days.iter().any(|&j| truth[j].max() <= 0.0) {
        return Err(Error::Parameter(format!(
            "consumer {} has an all-zero day selected for tampering",
            consumer.consumer_id
        )));
    }

    // α (FDI1) and γ (FDI2/3) are drawn once per thief; γ stays below the
    // smallest daily maximum it will meet.
    let mut fixed = rng::stream(seed, &[tag::CONSUMER_PARAMS, i]);
    let persistent = match fdi_type {
        FdiType::Fdi1 => Some(FdiParams::Fdi1 { alpha: draw_alpha(&mut fixed) }),
        FdiType::Fdi2 | FdiType::Fdi3 => {
            let bound = days.iter().map(|&j| truth[j].max()).fold(f64::INFINITY, f64::min);
            let gamma = draw_gamma(bound, &mut fixed);
            Some(if fdi_type == FdiType::Fdi2 {
                FdiParams::Fdi2 { gamma }
            } else {
                FdiParams::Fdi3 { gamma }
            })
        }
        _ => None,
    };

    let mut records = Vec::with_capacity(days.len());
    for &j in &days {
        let params = match &persistent {
            Some(p) => p.clone(),
            None => sample_params(
                fdi_type,
                &truth[j],
                &mut rng::stream(seed, &[tag::DAY_PARAMS, i, j as u64]),
            )?,
        };
        consumer.set_recorded(j, apply_fdi(&truth[j], &params)?)?;
        records.push(DayTamper { day: j, params });
    }
    Ok(TamperRecord {
        consumer_id: consumer.consumer_id.clone(),
        area,
        fdi_type,
        days: records,
    })
}

/// Builds tampered areas from untampered consumers. Observer meters read the
/// sum of ground truth, plus N(0, `observer_noise_sigma`) per reading when
/// the sigma is positive (clamped at zero).
pub fn build_scenario(
    ground_truth: &[ConsumerSeries],
    config: &ScenarioConfig,
    seed: u64,
    observer_noise_sigma: f64,
) -> Result<(Vec<AreaDataset>, TamperScenario)> {
    config.validate(ground_truth.len())?;
    let m = ground_truth[0].n_days();
    let t = ground_truth[0].intervals();
    if ground_truth.iter().any(|c| c.n_days() != m || c.intervals() != t) {
        return Err(Error::Shape("consumers do not share one (days, intervals) shape".into()));
    }
    if !(observer_noise_sigma >= 0.0 && observer_noise_sigma.is_finite()) {
        return Err(Error::Parameter("observer noise sigma must be finite and >= 0".into()));
    }

    let groups = partition(ground_truth.len(), config.areas, seed);
    let mut areas = Vec::with_capacity(groups.len());
    let mut assignments = Vec::with_capacity(groups.len());
    let mut tampers = Vec::new();

    for (k, members) in groups.iter().enumerate() {
        let mut thieves: Vec<usize> = index::sample(
            &mut rng::stream(seed, &[tag::THIEVES, k as u64]),
            members.len(),
            config.thieves_per_area,
        )
        .into_iter()
        .map(|pos| members[pos])
        .collect();
        thieves.sort_unstable();

        let mut consumers: Vec<ConsumerSeries> =
            members.iter().map(|&i| ground_truth[i].clone()).collect();
        for (slot, &i) in members.iter().enumerate() {
            if thieves.binary_search(&i).is_ok() {
                tampers.push(tamper_consumer(&mut consumers[slot], i, k, config, seed)?);
            }
        }

        let mut observer = observer_from_ground_truth(&consumers)?;
        if observer_noise_sigma > 0.0 {
            let noise = Normal::new(0.0, observer_noise_sigma)
                .map_err(|e| Error::Parameter(e.to_string()))?;
            let mut rng = rng::stream(seed, &[tag::OBSERVER_NOISE, k as u64]);
            observer = observer
                .into_iter()
                .map(|d| {
                    DayProfile::new(
                        d.readings()
                            .iter()
                            .map(|v| (v + noise.sample(&mut rng)).max(0.0))
                            .collect(),
                    )
                })
                .collect::<Result<_>>()?;
        }

        assignments.push(AreaAssignment {
            id: k,
            consumers: consumers.iter().map(|c| c.consumer_id.clone()).collect(),
            fraud: thieves.iter().map(|&i| ground_truth[i].consumer_id.clone()).collect(),
        });
        areas.push(AreaDataset::new(consumers, observer)?);
    }

    let fraud_ids = assignments.iter().flat_map(|a| a.fraud.iter().cloned()).collect();
    Ok((
        areas,
        TamperScenario {
            seed,
            fdi_mix: config.fdi_mix.clone(),
            m_days: m,
            intervals: t,
            areas: assignments,
            fraud_ids,
            tampers,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meterdata::{compute_ntl, synth_ground_truth};

    fn truth() -> Vec<ConsumerSeries> {
        synth_ground_truth(391, 30, 48, 4).unwrap()
    }

    #[test]
    fn areas_are_balanced() {
        let gt = truth();
        let (areas, sc) = build_scenario(&gt, &ScenarioConfig::default(), 1, 0.0).unwrap();
        let sizes: Vec<usize> = areas.iter().map(|a| a.consumers().len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 391);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(sizes.iter().all(|&s| s == 39 || s == 40));
        assert_eq!(sc.fraud_ids.len(), 50);
        let ratio = sc.fraud_ids.len() as f64 / 391.0;
        assert!((ratio - 0.128).abs() < 0.001);
        // every consumer appears in exactly one area
        let mut all: Vec<&String> = sc.areas.iter().flat_map(|a| &a.consumers).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 391);
        for a in &sc.areas {
            assert!(a.fraud.iter().all(|f| a.consumers.contains(f)));
        }
    }

    #[test]
    fn half_the_days_are_tampered_with_one_type() {
        let gt = truth();
        let (_, sc) = build_scenario(&gt, &ScenarioConfig::default(), 2, 0.0).unwrap();
        for rec in &sc.tampers {
            assert_eq!(rec.days.len(), 15);
            assert!(rec.days.iter().all(|d| d.params.fdi_type() == rec.fdi_type));
            let mut seen: Vec<usize> = rec.days.iter().map(|d| d.day).collect();
            seen.dedup();
            assert_eq!(seen.len(), 15);
            match rec.fdi_type {
                FdiType::Fdi1 | FdiType::Fdi2 | FdiType::Fdi3 => {
                    assert!(rec.days.iter().all(|d| d.params == rec.days[0].params))
                }
                _ => {}
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let gt = truth();
        let cfg = ScenarioConfig::default();
        let (_, a) = build_scenario(&gt, &cfg, 9, 0.0).unwrap();
        let (_, b) = build_scenario(&gt, &cfg, 9, 0.0).unwrap();
        assert_eq!(a, b);
        let (_, c) = build_scenario(&gt, &cfg, 10, 0.0).unwrap();
        assert_ne!(a.fraud_ids, c.fraud_ids);
    }

    #[test]
    fn single_type_mix() {
        let gt = truth();
        let cfg = ScenarioConfig {
            fdi_mix: FdiMix::single(FdiType::Fdi1),
            ..ScenarioConfig::default()
        };
        let (_, sc) = build_scenario(&gt, &cfg, 3, 0.0).unwrap();
        assert!(sc.tampers.iter().all(|t| t.fdi_type == FdiType::Fdi1));
    }

    #[test]
    fn ntl_equals_stolen_energy() {
        let gt = truth();
        let (mut areas, sc) = build_scenario(&gt, &ScenarioConfig::default(), 5, 0.0).unwrap();
        let fraud = sc.fraud_set();
        for area in &mut areas {
            let consumers = area.consumers().to_vec();
            let ntl = compute_ntl(area).unwrap().to_vec();
            for (j, row) in ntl.iter().enumerate() {
                for (t, e) in row.iter().enumerate() {
                    let stolen: f64 = consumers
                        .iter()
                        .filter(|c| fraud.contains(c.consumer_id.as_str()))
                        .map(|c| c.ground_truth().unwrap()[j].readings()[t] - c.days()[j].readings()[t])
                        .sum();
                    assert!((e - stolen).abs() < 1e-9, "area day {j} t {t}: {e} vs {stolen}");
                }
            }
        }
    }

    #[test]
    fn single_fdi1_thief_leaves_half_its_load() {
        let gt = synth_ground_truth(6, 4, 48, 8).unwrap();
        let mut consumers = gt.clone();
        let truth = gt[2].days()[1].clone();
        consumers[2]
            .set_recorded(1, apply_fdi(&truth, &FdiParams::Fdi1 { alpha: 0.5 }).unwrap())
            .unwrap();
        let mut area = AreaDataset::new(consumers, observer_from_ground_truth(&gt).unwrap()).unwrap();
        let ntl = compute_ntl(&mut area).unwrap();
        for (e, x) in ntl[1].iter().zip(truth.readings()) {
            assert!((e - 0.5 * x).abs() < 1e-12);
        }
        assert!(area.ntl_is_zero(0));
    }

    #[test]
    fn ntl_is_additive_over_thieves() {
        let gt = synth_ground_truth(8, 2, 24, 12).unwrap();
        let observer = observer_from_ground_truth(&gt).unwrap();
        let tamper = |who: &[usize]| {
            let mut c = gt.clone();
            for &i in who {
                let d = apply_fdi(&gt[i].days()[0], &FdiParams::Fdi1 { alpha: 0.3 + 0.1 * i as f64 / 8.0 }).unwrap();
                c[i].set_recorded(0, d).unwrap();
            }
            let mut area = AreaDataset::new(c, observer.clone()).unwrap();
            compute_ntl(&mut area).unwrap()[0].clone()
        };
        let joint = tamper(&[1, 4, 6]);
        let parts: Vec<Vec<f64>> = [1, 4, 6].iter().map(|&i| tamper(&[i])).collect();
        for t in 0..24 {
            let sum: f64 = parts.iter().map(|p| p[t]).sum();
            assert!((joint[t] - sum).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_partitions() {
        let gt = synth_ground_truth(20, 4, 12, 1).unwrap();
        let bad = |areas, thieves| ScenarioConfig {
            areas,
            thieves_per_area: thieves,
            ..ScenarioConfig::default()
        };
        assert!(matches!(build_scenario(&gt, &bad(0, 0), 0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(build_scenario(&gt, &bad(21, 0), 0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(build_scenario(&gt, &bad(4, 5), 0, 0.0), Err(Error::Parameter(_))));
        assert!(build_scenario(&gt, &bad(4, 4), 0, 0.0).is_ok());
    }

    #[test]
    fn observer_noise_is_seeded() {
        let gt = synth_ground_truth(20, 3, 12, 1).unwrap();
        let cfg = ScenarioConfig { areas: 2, thieves_per_area: 1, ..ScenarioConfig::default() };
        let (a, _) = build_scenario(&gt, &cfg, 4, 0.05).unwrap();
        let (b, _) = build_scenario(&gt, &cfg, 4, 0.05).unwrap();
        let (c, _) = build_scenario(&gt, &cfg, 4, 0.0).unwrap();
        assert_eq!(a[0].observer(), b[0].observer());
        assert_ne!(a[0].observer(), c[0].observer());
    }

    #[test]
    fn mix_serde_forms() {
        assert_eq!(serde_json::from_str::<FdiMix>("\"MIX\"").unwrap(), FdiMix::uniform());
        assert_eq!(
            serde_json::from_str::<FdiMix>("\"fdi3\"").unwrap(),
            FdiMix::single(FdiType::Fdi3)
        );
        let custom: FdiMix = serde_json::from_str(r#"{"FDI1": 2.0, "FDI6": 1.0}"#).unwrap();
        assert_eq!(custom.weights(), &[2.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(custom.label(), "CUSTOM");
        let back: FdiMix = serde_json::from_str(&serde_json::to_string(&custom).unwrap()).unwrap();
        assert_eq!(back, custom);
        assert!(serde_json::from_str::<FdiMix>(r#"{"FDI1": -1.0}"#).is_err());
        assert!(serde_json::from_str::<FdiMix>("\"FDI9\"").is_err());
    }

    #[test]
    fn mix_sampling_follows_weights() {
        let mix = FdiMix::new([0.0, 3.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let mut rng = rng::stream(1, &[]);
        let mut counts = [0usize; 6];
        for _ in 0..8000 {
            counts[mix.sample(&mut rng).index()] += 1;
        }
        assert_eq!(counts[0] + counts[2] + counts[4] + counts[5], 0);
        let frac = counts[1] as f64 / 8000.0;
        assert!((frac - 0.75).abs() < 0.02);
    }
}
