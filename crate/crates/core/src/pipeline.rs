//! Detection framework: per-(consumer, day) score matrices, the two-group
//! split of each consumer's days, suspicion degrees, ranks and their
//! combination.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::{self, MicParams, PairSample};
use crate::densepeaks::{self, DcStrategy, DensityConfig, Kernel};
use crate::error::{Error, Result};
use crate::meterdata::{normalize_profile, AreaDataset, ConsumerSeries, NormalizedProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Mic,
    Zeta,
    Pcc,
}

/// n × m per-day scores with a mask of days that carried no usable signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    pub kind: ScoreKind,
    pub consumer_ids: Vec<String>,
    pub days: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
    pub degenerate: Vec<Vec<bool>>,
}

impl ScoreMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.scores.len(), self.days.len())
    }

    /// Stacks the rows of several matrices of the same kind and day set.
    pub fn concat(parts: Vec<ScoreMatrix>) -> Result<ScoreMatrix> {
        let mut iter = parts.into_iter();
        let mut out = iter
            .next()
            .ok_or_else(|| Error::Parameter("nothing to concatenate".into()))?;
        for p in iter {
            if p.kind != out.kind || p.days != out.days {
                return Err(Error::Shape("score matrices differ in kind or days".into()));
            }
            out.consumer_ids.extend(p.consumer_ids);
            out.scores.extend(p.scores);
            out.degenerate.extend(p.degenerate);
        }
        Ok(out)
    }

    /// Suspicion degree of every row.
    pub fn degrees(&self) -> Vec<f64> {
        self.scores
            .iter()
            .zip(&self.degenerate)
            .map(|(s, m)| suspicion_degree(s, m))
            .collect()
    }
}

fn ntl_of(area: &AreaDataset) -> Result<&[Vec<f64>]> {
    area.ntl()
        .ok_or_else(|| Error::Parameter("the area's NTL has not been computed".into()))
}

fn score_against_ntl(
    area: &AreaDataset,
    kind: ScoreKind,
    score: impl Fn(&PairSample) -> (f64, bool) + Sync,
) -> Result<ScoreMatrix> {
    let ntl = ntl_of(area)?;
    let m = area.n_days();
    let zero_day: Vec<bool> = (0..m).map(|j| area.ntl_is_zero(j)).collect();
    let rows: Vec<(Vec<f64>, Vec<bool>)> = area
        .consumers()
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut scores = vec![0.0; m];
            let mut mask = vec![true; m];
            for (j, day) in c.days().iter().enumerate() {
                let u = normalize_profile(day, i, j);
                if zero_day[j] || u.degenerate {
                    continue;
                }
                let sample = PairSample::new(u.values, ntl[j].clone())?;
                let (v, degenerate) = score(&sample);
                scores[j] = v;
                mask[j] = degenerate;
            }
            Ok((scores, mask))
        })
        .collect::<Result<_>>()?;
    let (scores, degenerate) = rows.into_iter().unzip();
    Ok(ScoreMatrix {
        kind,
        consumer_ids: area.consumers().iter().map(|c| c.consumer_id.clone()).collect(),
        days: (0..m).collect(),
        scores,
        degenerate,
    })
}

/// MIC between each normalized recorded day and the same day's NTL. Days
/// without loss, all-zero days and constant pairs score 0 and are masked.
pub fn score_mic(area: &AreaDataset, params: &MicParams) -> Result<ScoreMatrix> {
    score_against_ntl(area, ScoreKind::Mic, |s| {
        let r = correlate::mic_with(s, params);
        (r.value, r.degenerate)
    })
}

/// Pearson correlation counterpart of [`score_mic`].
pub fn score_pcc(area: &AreaDataset) -> Result<ScoreMatrix> {
    score_against_ntl(area, ScoreKind::Pcc, |s| {
        let r = correlate::pcc(s);
        (r.value, r.degenerate)
    })
}

/// Density-peak abnormality of every recorded day, pooled over `consumers`.
pub fn score_zeta(consumers: &[&ConsumerSeries], config: &DensityConfig) -> Result<ScoreMatrix> {
    let m = consumers.first().map_or(0, |c| c.n_days());
    if consumers.iter().any(|c| c.n_days() != m) {
        return Err(Error::Shape("consumers differ in day count".into()));
    }
    let profiles: Vec<NormalizedProfile> = consumers
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            c.days()
                .iter()
                .enumerate()
                .map(move |(j, d)| normalize_profile(d, i, j))
        })
        .collect();
    let peaks = densepeaks::score_profiles(&profiles, config)?;
    let mut scores = vec![vec![0.0; m]; consumers.len()];
    let mut degenerate = vec![vec![false; m]; consumers.len()];
    for (p, r) in profiles.iter().zip(&peaks.records) {
        scores[p.consumer][p.day] = r.zeta;
        degenerate[p.consumer][p.day] = r.excluded;
    }
    Ok(ScoreMatrix {
        kind: ScoreKind::Zeta,
        consumer_ids: consumers.iter().map(|c| c.consumer_id.clone()).collect(),
        days: (0..m).collect(),
        scores,
        degenerate,
    })
}

/// Indices of the two groups of a one-dimensional two-means split.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoGroups {
    pub suspicious: Vec<usize>,
    pub normal: Vec<usize>,
}

/// Exact one-dimensional two-means: the cut between consecutive distinct
/// sorted values with the least within-group sum of squares (the lowest
/// such cut on ties). The upper group is the suspicious one; if all values
/// are equal every index is suspicious.
pub fn split_two_groups(values: &[f64]) -> TwoGroups {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    let mean = sorted.iter().sum::<f64>() / m.max(1) as f64;
    let centered: Vec<f64> = sorted.iter().map(|v| v - mean).collect();
    let total: f64 = centered.iter().sum();
    let total_sq: f64 = centered.iter().map(|v| v * v).sum();

    // SSEs this close are ties; the prefix-sum form rounds differently per cut
    let tie = 1e-12 * total_sq;
    let mut best: Option<(f64, usize)> = None;
    let (mut s, mut sq) = (0.0, 0.0);
    for k in 1..m {
        s += centered[k - 1];
        sq += centered[k - 1] * centered[k - 1];
        if sorted[k - 1] == sorted[k] {
            continue;
        }
        let upper = (m - k) as f64;
        let sse = (sq - s * s / k as f64) + ((total_sq - sq) - (total - s) * (total - s) / upper);
        if best.is_none_or(|(b, _)| sse < b - tie) {
            best = Some((sse, k));
        }
    }
    let cut = best.map_or(0, |(_, k)| k);
    let mut suspicious = order[cut..].to_vec();
    let mut normal = order[..cut].to_vec();
    suspicious.sort_unstable();
    normal.sort_unstable();
    TwoGroups { suspicious, normal }
}

/// Mean of the suspicious group among the unmasked scores; 0 if every
/// score is masked.
pub fn suspicion_degree(scores: &[f64], masked: &[bool]) -> f64 {
    let kept: Vec<f64> = scores
        .iter()
        .zip(masked.iter().chain(std::iter::repeat(&false)))
        .filter(|(_, &m)| !m)
        .map(|(s, _)| *s)
        .collect();
    if kept.is_empty() {
        return 0.0;
    }
    let groups = split_two_groups(&kept);
    groups.suspicious.iter().map(|&i| kept[i]).sum::<f64>() / groups.suspicious.len() as f64
}

/// Average ranks, 1 for the smallest value and n for the largest.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Consumers with a suspicion score and its rank; a higher rank is more
/// suspicious.
#[derive(Clone, Debug, PartialEq)]
pub struct SuspicionRanking {
    pub consumer_ids: Vec<String>,
    pub degrees: Vec<f64>,
    pub ranks: Vec<f64>,
}

impl SuspicionRanking {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

pub fn rank_consumers(consumer_ids: Vec<String>, degrees: Vec<f64>) -> Result<SuspicionRanking> {
    if consumer_ids.len() != degrees.len() {
        return Err(Error::Shape(format!(
            "{} consumers but {} degrees",
            consumer_ids.len(),
            degrees.len()
        )));
    }
    let ranks = average_ranks(&degrees);
    Ok(SuspicionRanking {
        consumer_ids,
        degrees,
        ranks,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    #[default]
    Arith,
    Geo,
}

/// Merges two rankings of the same consumers by the arithmetic or
/// geometric mean of their ranks, then ranks the means.
pub fn combine_ranks(r1: &SuspicionRanking, r2: &SuspicionRanking, mode: CombineMode) -> Result<SuspicionRanking> {
    if r1.consumer_ids != r2.consumer_ids {
        return Err(Error::Shape("rankings cover different consumers".into()));
    }
    let combined: Vec<f64> = r1
        .ranks
        .iter()
        .zip(&r2.ranks)
        .map(|(a, b)| match mode {
            CombineMode::Arith => (a + b) / 2.0,
            CombineMode::Geo => (a * b).sqrt(),
        })
        .collect();
    rank_consumers(r1.consumer_ids.clone(), combined)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mic,
    Cfsfdp,
    Arith,
    Geo,
    Pcc,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Mic, Method::Cfsfdp, Method::Arith, Method::Geo, Method::Pcc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mic => "mic",
            Method::Cfsfdp => "cfsfdp",
            Method::Arith => "arith",
            Method::Geo => "geo",
            Method::Pcc => "pcc",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .or_else(|| s.trim().eq_ignore_ascii_case("zeta").then_some(Method::Cfsfdp))
            .ok_or_else(|| Error::Parameter(format!("unknown method {s:?}")))
    }
}

/// Parses a comma-separated method list, keeping the first occurrence order.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Method = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Parameter("no detection method selected".into()));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaScope {
    /// One density computation over every profile of every area.
    #[default]
    Global,
    PerArea,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectConfig {
    pub methods: Vec<Method>,
    pub kernel: Kernel,
    pub dc_fraction: f64,
    pub dc_strategy: DcStrategy,
    pub mic: MicParams,
    pub scope: ZetaScope,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            methods: vec![Method::Mic, Method::Cfsfdp, Method::Arith],
            kernel: Kernel::Cutoff,
            dc_fraction: densepeaks::DEFAULT_DC_FRACTION,
            dc_strategy: DcStrategy::Auto,
            mic: MicParams::default(),
            scope: ZetaScope::Global,
        }
    }
}

impl DetectConfig {
    fn needs(&self, m: Method) -> bool {
        self.methods.iter().any(|&x| {
            x == m || (matches!(x, Method::Arith | Method::Geo) && matches!(m, Method::Mic | Method::Cfsfdp))
        })
    }

    fn density(&self) -> DensityConfig {
        DensityConfig {
            kernel: self.kernel,
            dc_fraction: self.dc_fraction,
            dc_strategy: self.dc_strategy,
        }
    }
}

/// Everything one detection run produced. Consumers appear area by area,
/// in input order.
#[derive(Clone, Debug, Default)]
pub struct Detection {
    pub consumer_ids: Vec<String>,
    pub mic: Option<(ScoreMatrix, SuspicionRanking)>,
    pub zeta: Option<(ScoreMatrix, SuspicionRanking)>,
    pub pcc: Option<(ScoreMatrix, SuspicionRanking)>,
    pub arith: Option<SuspicionRanking>,
    pub geo: Option<SuspicionRanking>,
    /// Wall-clock seconds per selected method; combined methods include
    /// the time of both inputs.
    pub seconds: Vec<(Method, f64)>,
}

impl Detection {
    pub fn ranking(&self, method: Method) -> Option<&SuspicionRanking> {
        match method {
            Method::Mic => self.mic.as_ref().map(|x| &x.1),
            Method::Cfsfdp => self.zeta.as_ref().map(|x| &x.1),
            Method::Pcc => self.pcc.as_ref().map(|x| &x.1),
            Method::Arith => self.arith.as_ref(),
            Method::Geo => self.geo.as_ref(),
        }
    }
}

fn ranked(matrix: ScoreMatrix) -> Result<(ScoreMatrix, SuspicionRanking)> {
    let ranking = rank_consumers(matrix.consumer_ids.clone(), matrix.degrees())?;
    Ok((matrix, ranking))
}

/// Scores and ranks every consumer of every area with the selected methods.
/// Rankings are global across areas.
pub fn detect(areas: &mut [AreaDataset], config: &DetectConfig) -> Result<Detection> {
    if areas.is_empty() || areas.iter().all(|a| a.consumers().is_empty()) {
        return Err(Error::Parameter("detection needs at least one consumer".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::Parameter("no detection method selected".into()));
    }
    for a in areas.iter_mut() {
        a.ntl_or_compute()?;
    }
    let areas: &[AreaDataset] = areas;
    let consumer_ids: Vec<String> = areas
        .iter()
        .flat_map(|a| a.consumers().iter().map(|c| c.consumer_id.clone()))
        .collect();

    let mut out = Detection {
        consumer_ids,
        ..Detection::default()
    };
    let mut mic_s = 0.0;
    let mut zeta_s = 0.0;
    if config.needs(Method::Mic) {
        let start = Instant::now();
        let parts = areas.iter().map(|a| score_mic(a, &config.mic)).collect::<Result<_>>()?;
        out.mic = Some(ranked(ScoreMatrix::concat(parts)?)?);
        mic_s = start.elapsed().as_secs_f64();
    }
    if config.needs(Method::Pcc) {
        let start = Instant::now();
        let parts = areas.iter().map(score_pcc).collect::<Result<_>>()?;
        out.pcc = Some(ranked(ScoreMatrix::concat(parts)?)?);
        out.seconds.push((Method::Pcc, start.elapsed().as_secs_f64()));
    }
    if config.needs(Method::Cfsfdp) {
        let start = Instant::now();
        let density = config.density();
        let matrix = match config.scope {
            ZetaScope::Global => {
                let all: Vec<&ConsumerSeries> = areas.iter().flat_map(|a| a.consumers()).collect();
                score_zeta(&all, &density)?
            }
            ZetaScope::PerArea => {
                let parts = areas
                    .iter()
                    .map(|a| score_zeta(&a.consumers().iter().collect::<Vec<_>>(), &density))
                    .collect::<Result<_>>()?;
                ScoreMatrix::concat(parts)?
            }
        };
        out.zeta = Some(ranked(matrix)?);
        zeta_s = start.elapsed().as_secs_f64();
    }
    if let (Some((_, r1)), Some((_, r2))) = (&out.mic, &out.zeta) {
        for (method, mode) in [(Method::Arith, CombineMode::Arith), (Method::Geo, CombineMode::Geo)] {
            if config.methods.contains(&method) {
                let start = Instant::now();
                let combined = combine_ranks(r1, r2, mode)?;
                out.seconds.push((method, mic_s + zeta_s + start.elapsed().as_secs_f64()));
                match mode {
                    CombineMode::Arith => out.arith = Some(combined),
                    CombineMode::Geo => out.geo = Some(combined),
                }
            }
        }
    }
    if config.methods.contains(&Method::Mic) {
        out.seconds.push((Method::Mic, mic_s));
    }
    if config.methods.contains(&Method::Cfsfdp) {
        out.seconds.push((Method::Cfsfdp, zeta_s));
    }
    out.seconds.sort_by_key(|(m, _)| *m);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meterdata::DayProfile;
    use proptest::prelude::*;

    fn brute_split(values: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let sse = |idx: &[usize]| {
            let m = idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (values[i] - m).powi(2)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0);
        for k in 1..values.len() {
            if values[order[k - 1]] == values[order[k]] {
                continue;
            }
            let s = sse(&order[..k]) + sse(&order[k..]);
            if s < best.0 - 1e-12 {
                best = (s, k);
            }
        }
        let mut up = order[best.1..].to_vec();
        up.sort_unstable();
        up
    }

    #[test]
    fn split_examples() {
        let g = split_two_groups(&[0.1, 0.12, 0.11, 0.9, 0.85]);
        assert_eq!(g.suspicious, vec![3, 4]);
        assert_eq!(g.normal, vec![0, 1, 2]);
        assert_eq!(split_two_groups(&[5.0; 4]).suspicious, vec![0, 1, 2, 3]);
        assert_eq!(split_two_groups(&[1.0, 2.0]).suspicious, vec![1]);
        assert_eq!(split_two_groups(&[3.0]).suspicious, vec![0]);
    }

    #[test]
    fn degree_examples() {
        assert_eq!(suspicion_degree(&[0.1, 0.1, 0.9, 0.9], &[false; 4]), 0.9);
        assert_eq!(suspicion_degree(&[0.4, 0.7], &[true, true]), 0.0);
        assert_eq!(suspicion_degree(&[0.1, 0.9, 0.95], &[false, true, false]), 0.95);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(average_ranks(&[0.2, 0.9, 0.5]), vec![1.0, 3.0, 2.0]);
        assert_eq!(average_ranks(&[0.5, 0.5]), vec![1.5, 1.5]);
    }

    fn ranking(ranks: Vec<f64>) -> SuspicionRanking {
        let ids = (0..ranks.len()).map(|i| format!("C{i}")).collect();
        SuspicionRanking {
            consumer_ids: ids,
            degrees: ranks.clone(),
            ranks,
        }
    }

    #[test]
    fn combination() {
        let a = ranking(vec![2.0, 1.0, 3.0]);
        let b = ranking(vec![8.0, 1.0, 3.0]);
        let arith = combine_ranks(&a, &b, CombineMode::Arith).unwrap();
        let geo = combine_ranks(&a, &b, CombineMode::Geo).unwrap();
        assert_eq!(arith.degrees[0], 5.0);
        assert_eq!(geo.degrees[0], 4.0);
        assert_eq!(combine_ranks(&a, &a, CombineMode::Geo).unwrap().ranks, a.ranks);
        let mut other = b.clone();
        other.consumer_ids[0] = "X".into();
        assert!(combine_ranks(&a, &other, CombineMode::Arith).is_err());
    }

    #[test]
    fn method_parsing() {
        assert_eq!(
            parse_methods("mic, cfsfdp,arith,mic").unwrap(),
            vec![Method::Mic, Method::Cfsfdp, Method::Arith]
        );
        assert!(parse_methods("mic,lof").is_err());
        assert!(parse_methods("").is_err());
    }

    fn series(id: &str, days: &[&[f64]]) -> ConsumerSeries {
        ConsumerSeries::untampered(id, days.iter().map(|d| DayProfile::new(d.to_vec()).unwrap()).collect()).unwrap()
    }

    #[test]
    fn clean_area_scores_are_masked_zeros() {
        let day: Vec<f64> = (0..12).map(|t| 1.0 + (t % 5) as f64).collect();
        let other: Vec<f64> = (0..12).map(|t| 2.0 + (t % 3) as f64).collect();
        let a = series("A", &[&day, &other, &day]);
        let b = series("B", &[&other, &day, &other]);
        let mut area = AreaDataset::from_ground_truth(vec![a, b]).unwrap();
        area.ntl_or_compute().unwrap();
        let mic = score_mic(&area, &MicParams::default()).unwrap();
        assert_eq!(mic.shape(), (2, 3));
        assert!(mic.scores.iter().flatten().all(|&v| v == 0.0));
        assert!(mic.degenerate.iter().flatten().all(|&m| m));
        assert_eq!(mic.degrees(), vec![0.0, 0.0]);
    }

    #[test]
    fn missing_ntl_is_an_error() {
        let day: Vec<f64> = (0..8).map(|t| 1.0 + t as f64).collect();
        let area = AreaDataset::from_ground_truth(vec![series("A", &[&day])]).unwrap();
        assert!(score_mic(&area, &MicParams::default()).is_err());
    }

    #[test]
    fn odd_profile_gets_the_largest_zeta() {
        let peaked: Vec<f64> = (0..24).map(|t| 1.0 + (-(t as f64 - 18.0).powi(2) / 8.0).exp() * 4.0).collect();
        let flat = vec![1.0; 24];
        let mut consumers: Vec<ConsumerSeries> = (0..20).map(|i| series(&format!("C{i}"), &[&peaked])).collect();
        consumers.push(series("odd", &[&flat]));
        let refs: Vec<&ConsumerSeries> = consumers.iter().collect();
        let z = score_zeta(&refs, &DensityConfig::default()).unwrap();
        assert_eq!(z.shape(), (21, 1));
        let top = z.scores[20][0];
        assert!(z.scores[..20].iter().all(|r| r[0] < top));
    }

    proptest! {
        #[test]
        fn split_matches_enumeration(v in prop::collection::vec(0u8..20, 2..30)) {
            let values: Vec<f64> = v.iter().map(|&x| x as f64 / 7.0).collect();
            let got = split_two_groups(&values).suspicious;
            if values.iter().all(|&x| x == values[0]) {
                prop_assert_eq!(got.len(), values.len());
            } else {
                prop_assert_eq!(got, brute_split(&values));
            }
        }

        #[test]
        fn raising_a_suspicious_value_never_lowers_the_degree(
            v in prop::collection::vec(0.0f64..1.0, 2..30),
            pick in any::<prop::sample::Index>(),
            bump in 0.0f64..1.0,
        ) {
            let mask = vec![false; v.len()];
            let before = suspicion_degree(&v, &mask);
            let groups = split_two_groups(&v);
            let i = groups.suspicious[pick.index(groups.suspicious.len())];
            let mut raised = v.clone();
            raised[i] += bump;
            prop_assert!(suspicion_degree(&raised, &mask) >= before - 1e-12);
        }

        #[test]
        fn ranks_sum_and_transform_invariance(v in prop::collection::vec(-5.0f64..5.0, 1..60)) {
            let r = average_ranks(&v);
            let n = v.len() as f64;
            prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
            let t: Vec<f64> = v.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(average_ranks(&t), r);
        }

        #[test]
        fn geometric_never_exceeds_arithmetic(a in prop::collection::vec(0.0f64..1.0, 2..40), seed in any::<u64>()) {
            let mut shuffled = a.clone();
            shuffled.rotate_left((seed % a.len() as u64) as usize);
            let r1 = ranking(average_ranks(&a));
            let r2 = ranking(average_ranks(&shuffled));
            let arith = combine_ranks(&r1, &r2, CombineMode::Arith).unwrap();
            let geo = combine_ranks(&r1, &r2, CombineMode::Geo).unwrap();
            for i in 0..a.len() {
                prop_assert!(geo.degrees[i] <= arith.degrees[i] + 1e-12);
                prop_assert_eq!((geo.degrees[i] - arith.degrees[i]).abs() < 1e-12, r1.ranks[i] == r2.ranks[i]);
            }
        }
    }
}
