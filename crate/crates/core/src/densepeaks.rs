//! Density-peak outlier scoring: local density ρ, separation δ and
//! abnormality ζ = δ / (ρ + 1) over a set of equal-length profiles.
//!
//! Distances are recomputed on every pass; nothing quadratic is stored.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meterdata::NormalizedProfile;

/// Above this many pairs the cut-off distance is estimated from a sample.
pub const EXACT_DC_MAX_PAIRS: usize = 10_000_000;
pub const DC_SAMPLE_PAIRS: usize = 1_000_000;
pub const DEFAULT_DC_FRACTION: f64 = 0.02;
pub const DEFAULT_DC_SEED: u64 = 0x6463;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Cutoff,
    Gaussian,
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cutoff" | "cut-off" => Ok(Kernel::Cutoff),
            "gaussian" => Ok(Kernel::Gaussian),
            other => Err(Error::Parameter(format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum DcStrategy {
    /// Exact up to [`EXACT_DC_MAX_PAIRS`] pairs, sampled beyond.
    #[default]
    Auto,
    Exact,
    Sampled { pairs: usize, seed: u64 },
}

/// `n` points of dimension `dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not form points of dimension {dim}",
                data.len()
            )));
        }
        Ok(PointSet { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return Err(Error::Shape(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    r.as_ref().len()
                )));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(dim.max(1), data)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, p: usize) -> &[f64] {
        &self.data[p * self.dim..(p + 1) * self.dim]
    }

    #[inline]
    pub fn distance(&self, p: usize, q: usize) -> f64 {
        euclidean(self.point(p), self.point(q))
    }
}

/// Euclidean distance; bit-symmetric in its arguments.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    euclidean_within(a, b, f64::INFINITY).unwrap_or(f64::INFINITY)
}

/// `Some(euclidean(a, b))` unless the distance certainly exceeds `limit`,
/// in which case the sum may be abandoned early and `None` returned.
#[inline]
fn euclidean_within(a: &[f64], b: &[f64], limit: f64) -> Option<f64> {
    // partial sums only grow, so passing the squared limit (with slack for
    // rounding in the final square root) settles the comparison
    let bail = limit * limit * (1.0 + 1e-9);
    let mut acc = [0.0f64; 8];
    let total = |acc: &[f64; 8]| ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    let mut ca = a.chunks_exact(16);
    let mut cb = b.chunks_exact(16);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
        for k in 0..8 {
            let d = x[k + 8] - y[k + 8];
            acc[k] += d * d;
        }
        if total(&acc) > bail {
            return None;
        }
    }
    for (k, (x, y)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        let d = x - y;
        acc[k % 8] += d * d;
    }
    Some(total(&acc).sqrt())
}

pub fn profile_distance(u: &NormalizedProfile, v: &NormalizedProfile) -> Result<f64> {
    if u.values.len() != v.values.len() {
        return Err(Error::Shape(format!(
            "profiles have {} and {} intervals",
            u.values.len(),
            v.values.len()
        )));
    }
    Ok(euclidean(&u.values, &v.values))
}

fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Value at 1-based position `⌈fraction · len⌉` of the sorted distances,
/// moving up to the next positive distance if that value is 0.
fn quantile_positive(mut dists: Vec<f64>, fraction: f64) -> Result<f64> {
    let pos = ((fraction * dists.len() as f64).ceil() as usize).clamp(1, dists.len()) - 1;
    let (_, &mut v, upper) = dists.select_nth_unstable_by(pos, f64::total_cmp);
    if v > 0.0 {
        return Ok(v);
    }
    upper
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Degenerate("all pairwise distances are zero".into()))
}

/// Cut-off distance: the `fraction` quantile of pairwise distances, so that a
/// point has on average about `fraction · N` neighbours within it.
pub fn select_dc(points: &PointSet, fraction: f64, strategy: DcStrategy) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Parameter(format!("cut-off distance needs at least 2 points, got {n}")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter(format!("cut-off fraction must lie in (0, 1), got {fraction}")));
    }
    let pairs = pair_count(n);
    let strategy = match strategy {
        DcStrategy::Auto if pairs > EXACT_DC_MAX_PAIRS => DcStrategy::Sampled {
            pairs: DC_SAMPLE_PAIRS,
            seed: DEFAULT_DC_SEED,
        },
        DcStrategy::Auto => DcStrategy::Exact,
        s => s,
    };
    let dists = match strategy {
        DcStrategy::Sampled { pairs: k, seed } => {
            if k == 0 {
                return Err(Error::Parameter("cut-off sampling needs at least one pair".into()));
            }
            let mut rng = crate::rng::stream(seed, &[n as u64]);
            let pairs: Vec<(usize, usize)> = (0..k)
                .map(|_| {
                    let p = rng.random_range(0..n);
                    let mut q = rng.random_range(0..n - 1);
                    if q >= p {
                        q += 1;
                    }
                    (p, q)
                })
                .collect();
            pairs.par_iter().map(|&(p, q)| points.distance(p, q)).collect()
        }
        _ => (0..n)
            .into_par_iter()
            .flat_map_iter(|p| ((p + 1)..n).map(move |q| points.distance(p, q)))
            .collect(),
    };
    quantile_positive(dists, fraction)
}

/// ρ per point: neighbours closer than `dc` (cut-off kernel) or the sum of
/// `exp(−(d/dc)²)` over all other points (Gaussian kernel).
pub fn local_density(points: &PointSet, dc: f64, kernel: Kernel) -> Result<Vec<f64>> {
    if !(dc > 0.0 && dc.is_finite()) {
        return Err(Error::Parameter(format!("cut-off distance must be positive, got {dc}")));
    }
    let n = points.len();
    Ok(match kernel {
        Kernel::Cutoff => {
            let counts = (0..n)
                .into_par_iter()
                .fold(
                    || vec![0u32; n],
                    |mut acc, p| {
                        let a = points.point(p);
                        for q in (p + 1)..n {
                            if euclidean_within(a, points.point(q), dc).is_some_and(|d| d < dc) {
                                acc[p] += 1;
                                acc[q] += 1;
                            }
                        }
                        acc
                    },
                )
                .reduce(
                    || vec![0u32; n],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                );
            counts.into_iter().map(f64::from).collect()
        }
        Kernel::Gaussian => (0..n)
            .into_par_iter()
            .map(|p| {
                let mut s = 0.0;
                for q in (0..n).filter(|&q| q != p) {
                    let r = points.distance(p, q) / dc;
                    s += (-r * r).exp();
                }
                s
            })
            .collect(),
    })
}

/// Density order: higher ρ first, lower index first among equal ρ.
pub fn density_order(rho: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));
    order
}

/// δ per point and its nearest denser neighbour. The densest point gets its
/// largest distance to any other point and no neighbour.
pub fn separation(points: &PointSet, rho: &[f64]) -> Result<(Vec<f64>, Vec<Option<usize>>)> {
    separation_with_radius(points, rho, None)
}

fn closer(d: f64, q: usize, best: (f64, usize)) -> bool {
    d < best.0 || (d == best.0 && q < best.1)
}

/// Same as [`separation`]. With a `radius`, one pass over all pairs closer
/// than it finds the nearest denser point of every point that has one that
/// close; only the rest are searched against all denser points.
fn separation_with_radius(
    points: &PointSet,
    rho: &[f64],
    radius: Option<f64>,
) -> Result<(Vec<f64>, Vec<Option<usize>>)> {
    let n = points.len();
    if rho.len() != n {
        return Err(Error::Shape(format!("{} densities for {n} points", rho.len())));
    }
    let order = density_order(rho);
    let mut position = vec![0usize; n];
    for (k, &p) in order.iter().enumerate() {
        position[p] = k;
    }
    const NONE: (f64, usize) = (f64::INFINITY, usize::MAX);
    let near: Vec<(f64, usize)> = match radius {
        None => vec![NONE; n],
        Some(r) => (0..n)
            .into_par_iter()
            .fold(
                || vec![NONE; n],
                |mut acc, p| {
                    let a = points.point(p);
                    for q in (p + 1)..n {
                        if let Some(d) = euclidean_within(a, points.point(q), r).filter(|&d| d < r) {
                            let (lo, hi) = if position[p] < position[q] { (q, p) } else { (p, q) };
                            if closer(d, hi, acc[lo]) {
                                acc[lo] = (d, hi);
                            }
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![NONE; n],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        if closer(y.0, y.1, *x) {
                            *x = y;
                        }
                    }
                    a
                },
            ),
    };

    let found: Vec<(f64, Option<usize>)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let p = order[k];
            if k == 0 {
                let far = (0..n)
                    .filter(|&q| q != p)
                    .map(|q| points.distance(p, q))
                    .fold(0.0, f64::max);
                return (far, None);
            }
            if near[p].1 != usize::MAX {
                return (near[p].0, Some(near[p].1));
            }
            let a = points.point(p);
            let mut best = NONE;
            for &q in &order[..k] {
                let Some(d) = euclidean_within(a, points.point(q), best.0) else { continue };
                if closer(d, q, best) {
                    best = (d, q);
                }
            }
            (best.0, Some(best.1))
        })
        .collect();
    let mut delta = vec![0.0; n];
    let mut nearest = vec![None; n];
    for (k, (d, q)) in found.into_iter().enumerate() {
        delta[order[k]] = d;
        nearest[order[k]] = q;
    }
    Ok((delta, nearest))
}

pub fn abnormality(rho: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
    if rho.len() != delta.len() {
        return Err(Error::Shape(format!("{} densities but {} separations", rho.len(), delta.len())));
    }
    Ok(rho.iter().zip(delta).map(|(r, d)| d / (r + 1.0)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityConfig {
    pub kernel: Kernel,
    pub dc_fraction: f64,
    pub dc_strategy: DcStrategy,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            kernel: Kernel::Cutoff,
            dc_fraction: DEFAULT_DC_FRACTION,
            dc_strategy: DcStrategy::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRecord {
    pub index: usize,
    pub rho: f64,
    pub delta: f64,
    pub nearest_denser: Option<usize>,
    pub zeta: f64,
    /// Left out of the density computation (all-zero source day); ζ is 0.
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityPeaks {
    pub dc: f64,
    pub records: Vec<DensityRecord>,
}

impl DensityPeaks {
    pub fn zeta(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.zeta).collect()
    }
}

/// Runs ρ, δ and ζ over all points.
pub fn density_peaks(points: &PointSet, config: &DensityConfig) -> Result<DensityPeaks> {
    let dc = select_dc(points, config.dc_fraction, config.dc_strategy)?;
    let rho = local_density(points, dc, config.kernel)?;
    let (delta, nearest) = separation_with_radius(points, &rho, Some(dc))?;
    let zeta = abnormality(&rho, &delta)?;
    let records = (0..points.len())
        .map(|p| DensityRecord {
            index: p,
            rho: rho[p],
            delta: delta[p],
            nearest_denser: nearest[p],
            zeta: zeta[p],
            excluded: false,
        })
        .collect();
    Ok(DensityPeaks { dc, records })
}

/// Scores normalized profiles, leaving degenerate ones out with ζ = 0.
/// Record `index` refers to the position in `profiles`.
pub fn score_profiles(profiles: &[NormalizedProfile], config: &DensityConfig) -> Result<DensityPeaks> {
    let kept: Vec<usize> = (0..profiles.len()).filter(|&p| !profiles[p].degenerate).collect();
    if kept.len() < 2 {
        return Err(Error::Degenerate(format!(
            "density scoring needs 2 non-degenerate profiles, got {}",
            kept.len()
        )));
    }
    let rows: Vec<&[f64]> = kept.iter().map(|&p| profiles[p].values.as_slice()).collect();
    let points = PointSet::from_rows(&rows)?;
    let inner = density_peaks(&points, config)?;
    let mut records: Vec<DensityRecord> = (0..profiles.len())
        .map(|p| DensityRecord {
            index: p,
            rho: 0.0,
            delta: 0.0,
            nearest_denser: None,
            zeta: 0.0,
            excluded: true,
        })
        .collect();
    for r in inner.records {
        let p = kept[r.index];
        records[p] = DensityRecord {
            index: p,
            nearest_denser: r.nearest_denser.map(|q| kept[q]),
            ..r
        };
    }
    Ok(DensityPeaks { dc: inner.dc, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_points(n: usize, dim: usize, seed: u64) -> PointSet {
        let mut rng = crate::rng::stream(seed, &[]);
        PointSet::new(dim, (0..n * dim).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn distance_basics() {
        let a = [1.0, 0.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(euclidean(&a, &a), 0.0);
        assert!((euclidean(&a, &b) - 2f64.sqrt()).abs() < 1e-15);
        let pts = random_points(30, 7, 1);
        for p in 0..30 {
            for q in 0..30 {
                assert_eq!(pts.distance(p, q), pts.distance(q, p));
            }
        }
        let u = crate::meterdata::NormalizedProfile {
            values: vec![0.0, 1.0],
            consumer: 0,
            day: 0,
            degenerate: false,
        };
        let v = crate::meterdata::NormalizedProfile {
            values: vec![0.0, 1.0, 0.5],
            ..u.clone()
        };
        assert!(profile_distance(&u, &v).is_err());
    }

    #[test]
    fn equidistant_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let pts = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let d01 = pts.distance(0, 1);
        let rho = local_density(&pts, 2.0, Kernel::Cutoff).unwrap();
        assert_eq!(rho, vec![2.0, 2.0, 2.0]);
        assert_eq!(local_density(&pts, 0.5, Kernel::Cutoff).unwrap(), vec![0.0; 3]);
        assert!(local_density(&pts, 0.0, Kernel::Cutoff).is_err());
        assert!((d01 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_points() {
        let pts = PointSet::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(select_dc(&pts, 0.02, DcStrategy::Auto).unwrap(), 5.0);
        let rho = local_density(&pts, 5.0, Kernel::Cutoff).unwrap();
        let (delta, nearest) = separation(&pts, &rho).unwrap();
        assert_eq!(delta, vec![5.0, 5.0]);
        assert_eq!(nearest, vec![None, Some(0)]);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = PointSet::from_rows(&[[1.0, 2.0]; 5]).unwrap();
        assert!(matches!(select_dc(&pts, 0.1, DcStrategy::Exact), Err(Error::Degenerate(_))));
        assert!(select_dc(&pts, 1.5, DcStrategy::Exact).is_err());
    }

    #[test]
    fn zero_quantile_moves_to_next_positive() {
        let pts = PointSet::from_rows(&[[0.0], [0.0], [0.0], [1.0], [3.0]]).unwrap();
        // distances: three zeros, then 1,1,1,2,3,3,3
        assert_eq!(select_dc(&pts, 0.1, DcStrategy::Exact).unwrap(), 1.0);
    }

    #[test]
    fn formula_examples() {
        assert_eq!(abnormality(&[0.0, 9.0], &[3.0, 1.0]).unwrap(), vec![3.0, 0.1]);
    }

    #[test]
    fn sampled_quantile_tracks_exact() {
        let pts = random_points(2000, 48, 2);
        let exact = select_dc(&pts, 0.02, DcStrategy::Exact).unwrap();
        let sampled = select_dc(&pts, 0.02, DcStrategy::Sampled { pairs: DC_SAMPLE_PAIRS, seed: 9 }).unwrap();
        assert!(((sampled - exact) / exact).abs() < 0.05, "{sampled} vs {exact}");
    }

    #[test]
    fn cutoff_densities_are_even_integers_in_range() {
        let pts = random_points(150, 6, 3);
        let dc = select_dc(&pts, 0.05, DcStrategy::Exact).unwrap();
        let rho = local_density(&pts, dc, Kernel::Cutoff).unwrap();
        assert!(rho.iter().all(|r| r.fract() == 0.0 && *r >= 0.0 && *r <= 149.0));
        assert_eq!(rho.iter().sum::<f64>() as u64 % 2, 0);
    }

    #[test]
    fn densest_point_separation_is_its_farthest_distance() {
        let pts = random_points(120, 5, 4);
        let out = density_peaks(&pts, &DensityConfig::default()).unwrap();
        let top = out.records.iter().filter(|r| r.nearest_denser.is_none()).collect::<Vec<_>>();
        assert_eq!(top.len(), 1);
        let p = top[0].index;
        let far = (0..120).filter(|&q| q != p).map(|q| pts.distance(p, q)).fold(0.0, f64::max);
        assert_eq!(top[0].delta, far);
    }

    #[test]
    fn scaling_scales_delta_and_zeta() {
        let pts = random_points(100, 8, 5);
        let scaled = PointSet::new(8, pts.data.iter().map(|v| v * 4.0).collect()).unwrap();
        let dc = select_dc(&pts, 0.02, DcStrategy::Exact).unwrap();
        let a_rho = local_density(&pts, dc, Kernel::Cutoff).unwrap();
        let b_rho = local_density(&scaled, dc * 4.0, Kernel::Cutoff).unwrap();
        assert_eq!(a_rho, b_rho);
        let (a_delta, _) = separation(&pts, &a_rho).unwrap();
        let (b_delta, _) = separation(&scaled, &b_rho).unwrap();
        let a_zeta = abnormality(&a_rho, &a_delta).unwrap();
        let b_zeta = abnormality(&b_rho, &b_delta).unwrap();
        for (a, b) in a_zeta.iter().zip(&b_zeta) {
            assert_eq!(a * 4.0, *b);
        }
        assert_eq!(density_order(&a_zeta), density_order(&b_zeta));
    }

    #[test]
    fn degenerate_profiles_are_excluded() {
        let mk = |values: Vec<f64>, degenerate| crate::meterdata::NormalizedProfile {
            values,
            consumer: 0,
            day: 0,
            degenerate,
        };
        let profiles = vec![
            mk(vec![1.0, 0.2, 0.1], false),
            mk(vec![0.0, 0.0, 0.0], true),
            mk(vec![0.9, 1.0, 0.1], false),
            mk(vec![0.1, 0.3, 1.0], false),
        ];
        let out = score_profiles(&profiles, &DensityConfig::default()).unwrap();
        assert!(out.records[1].excluded);
        assert_eq!(out.records[1].zeta, 0.0);
        assert!(out.records.iter().all(|r| r.nearest_denser != Some(1)));
        assert!(score_profiles(&profiles[..2], &DensityConfig::default()).is_err());
    }
}
