//! Maximal information coefficient.
//!
//! For every admissible grid shape `a × b` (`a, b ≥ 2`, `a·b < n^0.6`) the
//! best grid mutual information `I*(a, b)` is approximated by fixing one
//! axis to a rank equipartition and optimizing the other axis exactly with a
//! dynamic program over clump boundaries, then repeating with the axes
//! swapped. For very small samples every partition of one axis is
//! enumerated instead, which makes `I*` exact.

use super::grid::{canonical_mi, Axis, XLogX};
use super::PairSample;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MicParams {
    /// Grids must satisfy `a·b < n^bound_exponent`.
    pub bound_exponent: f64,
    /// At most `clump_factor · a` candidate column boundaries per axis.
    pub clump_factor: usize,
    /// Samples with at most this many points are searched exhaustively.
    pub exact_max_points: usize,
}

impl Default for MicParams {
    fn default() -> Self {
        MicParams {
            bound_exponent: 0.6,
            clump_factor: 15,
            exact_max_points: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MicResult {
    pub value: f64,
    /// An axis was constant; `value` is 0.
    pub degenerate: bool,
    /// No grid met the size bound, so only 2×2 was evaluated.
    pub small_sample: bool,
}

/// `M(a, b) = I*(a, b) / log2 min(a, b)` over the admissible shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicMatrix {
    pub entries: Vec<((usize, usize), f64)>,
    pub bound: f64,
    pub small_sample: bool,
}

impl CharacteristicMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|(shape, _)| *shape == (a, b))
            .map(|(_, v)| *v)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// All `(a, b)` with `a, b ≥ 2` and `a·b < n^exponent`.
pub fn admissible_shapes(n: usize, exponent: f64) -> Vec<(usize, usize)> {
    let bound = (n as f64).powf(exponent);
    let mut shapes = Vec::new();
    let mut a = 2;
    while ((2 * a) as f64) < bound {
        let mut b = 2;
        while ((a * b) as f64) < bound {
            shapes.push((a, b));
            b += 1;
        }
        a += 1;
    }
    shapes
}

/// Candidate column boundaries along one axis: runs of consecutive tie
/// groups that all sit in the same row are merged, since an optimal
/// partition never cuts inside such a run.
struct Clumps {
    /// Cumulative row counts at each boundary, `(k + 1) × rows`, row-major.
    cum: Vec<usize>,
    /// Points before each boundary.
    ends: Vec<usize>,
    rows: usize,
}

impl Clumps {
    fn build(axis: &Axis, row_of: &[usize], rows: usize) -> Self {
        const MIXED: usize = usize::MAX;
        let mut ends = vec![0];
        let mut current = None::<usize>;
        let mut counted = 0;
        for g in 0..axis.n_groups() {
            let members = axis.group(g);
            let first = row_of[members[0]];
            let label = if members.iter().all(|&i| row_of[i] == first) { first } else { MIXED };
            match current {
                Some(r) if r == label && label != MIXED => {}
                Some(_) => ends.push(counted),
                None => {}
            }
            current = Some(label);
            counted += members.len();
        }
        ends.push(counted);
        if ends.len() == 2 && counted == 0 {
            ends.pop();
        }

        let k = ends.len() - 1;
        let mut cum = vec![0usize; (k + 1) * rows];
        for c in 0..k {
            let (done, next) = cum.split_at_mut((c + 1) * rows);
            next[..rows].copy_from_slice(&done[c * rows..]);
            for &i in &axis.order[ends[c]..ends[c + 1]] {
                next[row_of[i]] += 1;
            }
        }
        Clumps { cum, ends, rows }
    }

    fn len(&self) -> usize {
        self.ends.len() - 1
    }

    /// Keeps roughly `target` boundaries spaced evenly by point count.
    fn coarsen(self, target: usize) -> Self {
        let k = self.len();
        if k <= target {
            return self;
        }
        let n = self.ends[k];
        let mut keep = vec![0usize];
        for s in 1..target {
            let goal = (s * n) as f64 / target as f64;
            let lo = *keep.last().unwrap_or(&0);
            // nearest boundary to the goal, strictly after the last kept one
            let mut best = lo + 1;
            for c in (lo + 1)..k {
                if (self.ends[c] as f64 - goal).abs() < (self.ends[best] as f64 - goal).abs() {
                    best = c;
                }
                if self.ends[c] as f64 > goal {
                    break;
                }
            }
            if best < k {
                keep.push(best);
            }
        }
        keep.push(k);
        keep.dedup();
        let rows = self.rows;
        let mut cum = Vec::with_capacity(keep.len() * rows);
        for &c in &keep {
            cum.extend_from_slice(&self.cum[c * rows..(c + 1) * rows]);
        }
        Clumps {
            cum,
            ends: keep.iter().map(|&c| self.ends[c]).collect(),
            rows,
        }
    }
}

/// Best mutual information achievable by splitting `axis` into at most `c`
/// columns against the fixed row assignment, for every `c` in `0..=max_cols`.
pub(crate) fn optimize_axis(
    axis: &Axis,
    row_of: &[usize],
    rows: usize,
    max_cols: usize,
    clump_factor: usize,
    xl: &XLogX,
) -> Vec<f64> {
    let n = axis.len();
    let mut best = vec![0.0; max_cols + 1];
    if n == 0 || rows < 2 || max_cols < 2 {
        return best;
    }
    let clumps = Clumps::build(axis, row_of, rows).coarsen(clump_factor.saturating_mul(max_cols).max(2));
    let k = clumps.len();
    let r = clumps.rows;
    let totals = &clumps.cum[k * r..(k + 1) * r];

    // weight[s][l]: n·(share of points in clumps s..l)·H(rows | those clumps)
    let mut weight = vec![0.0; (k + 1) * (k + 1)];
    for s in 0..k {
        let lo = &clumps.cum[s * r..(s + 1) * r];
        for l in (s + 1)..=k {
            let hi = &clumps.cum[l * r..(l + 1) * r];
            let size = clumps.ends[l] - clumps.ends[s];
            let inner: f64 = hi.iter().zip(lo).map(|(h, o)| xl.get(h - o)).sum();
            weight[s * (k + 1) + l] = xl.get(size) - inner;
        }
    }

    let mut prev: Vec<f64> = (0..=k).map(|l| weight[l]).collect();
    let mut cur = vec![f64::INFINITY; k + 1];
    // arg[c][l]: start of the last column in the best c-column split of 0..l
    let top = max_cols.min(k);
    let mut arg = vec![0usize; (top + 1) * (k + 1)];
    for c in 2..=top {
        for l in c..=k {
            let mut m = f64::INFINITY;
            let mut at = c - 1;
            for s in (c - 1)..l {
                let v = prev[s] + weight[s * (k + 1) + l];
                if v < m {
                    m = v;
                    at = s;
                }
            }
            cur[l] = m;
            arg[c * (k + 1) + l] = at;
        }
        std::mem::swap(&mut prev, &mut cur);
        cur.iter_mut().for_each(|v| *v = f64::INFINITY);

        let mut bounds = vec![k];
        let mut l = k;
        for cc in (2..=c).rev() {
            l = arg[cc * (k + 1) + l];
            bounds.push(l);
        }
        bounds.push(0);
        bounds.reverse();
        let mut cells = Vec::with_capacity(c * r);
        let mut sizes = Vec::with_capacity(c);
        for w in bounds.windows(2) {
            let lo = &clumps.cum[w[0] * r..(w[0] + 1) * r];
            let hi = &clumps.cum[w[1] * r..(w[1] + 1) * r];
            cells.extend(hi.iter().zip(lo).map(|(h, o)| h - o));
            sizes.push(clumps.ends[w[1]] - clumps.ends[w[0]]);
        }
        best[c] = canonical_mi(cells, sizes, totals.to_vec(), n, xl);
    }
    for c in 2..=max_cols {
        best[c] = best[c].max(best[c - 1]);
    }
    best
}

/// Iterates `choose` increasing positions from `1..limit`.
fn for_each_combination(limit: usize, choose: usize, mut f: impl FnMut(&[usize])) {
    if choose == 0 {
        f(&[]);
        return;
    }
    if choose >= limit {
        return;
    }
    let mut idx: Vec<usize> = (1..=choose).collect();
    loop {
        f(&idx);
        let mut i = choose;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < limit - (choose - i) {
                idx[i] += 1;
                for j in (i + 1)..choose {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

struct Prepared {
    x: Axis,
    y: Axis,
    xl: XLogX,
}

impl Prepared {
    fn new(sample: &PairSample) -> Self {
        Prepared {
            x: Axis::new(sample.x()),
            y: Axis::new(sample.y()),
            xl: XLogX::new(sample.len()),
        }
    }

    fn degenerate(&self) -> bool {
        self.x.n_groups() < 2 || self.y.n_groups() < 2
    }

    /// Exact `I*(a, b)`: every row partition, exact column optimization.
    fn exact(&self, a: usize, b: usize) -> f64 {
        let groups = self.y.n_groups();
        let rows = b.min(groups);
        let mut best = 0.0_f64;
        for_each_combination(groups, rows - 1, |inner| {
            let mut cuts = Vec::with_capacity(rows + 1);
            cuts.push(0);
            cuts.extend_from_slice(inner);
            cuts.push(groups);
            let row_of = self.y.assign_by_group_cuts(&cuts);
            let v = optimize_axis(&self.x, &row_of, rows, a, usize::MAX, &self.xl)[a];
            best = best.max(v);
        });
        best
    }

    /// Equipartition `fixed` into `bins`, optimize `free` for up to `max_cols`.
    fn pass(&self, fixed: &Axis, free: &Axis, bins: usize, max_cols: usize, params: &MicParams) -> Vec<f64> {
        let cuts = fixed.equipartition_cuts(bins);
        let row_of = fixed.assign_by_group_cuts(&cuts);
        optimize_axis(free, &row_of, cuts.len() - 1, max_cols, params.clump_factor, &self.xl)
    }

    /// `I*` estimate for every requested shape.
    fn estimates(&self, shapes: &[(usize, usize)], n: usize, params: &MicParams) -> Vec<f64> {
        if n <= params.exact_max_points {
            return shapes.iter().map(|&(a, b)| self.exact(a, b)).collect();
        }
        let mut out = vec![0.0_f64; shapes.len()];
        let max_b = shapes.iter().map(|s| s.1).max().unwrap_or(0);
        let max_a = shapes.iter().map(|s| s.0).max().unwrap_or(0);
        for b in 2..=max_b {
            let cols = shapes.iter().filter(|s| s.1 == b).map(|s| s.0).max();
            if let Some(cols) = cols {
                let best = self.pass(&self.y, &self.x, b, cols, params);
                for (slot, &(a, bb)) in out.iter_mut().zip(shapes) {
                    if bb == b {
                        *slot = slot.max(best[a]);
                    }
                }
            }
        }
        for a in 2..=max_a {
            let rows = shapes.iter().filter(|s| s.0 == a).map(|s| s.1).max();
            if let Some(rows) = rows {
                let best = self.pass(&self.x, &self.y, a, rows, params);
                for (slot, &(aa, b)) in out.iter_mut().zip(shapes) {
                    if aa == a {
                        *slot = slot.max(best[b]);
                    }
                }
            }
        }
        out
    }
}

/// Approximate `I*(a, b)`: the larger of the two one-axis-equipartitioned
/// passes (exact for samples of at most `exact_max_points`). A constant
/// axis gives 0.
pub fn max_mi(sample: &PairSample, a: usize, b: usize) -> Result<f64> {
    max_mi_with(sample, a, b, &MicParams::default())
}

pub fn max_mi_with(sample: &PairSample, a: usize, b: usize, params: &MicParams) -> Result<f64> {
    if a < 2 || b < 2 {
        return Err(Error::Parameter(format!("grid {a}x{b} needs at least 2 bins per axis")));
    }
    let prep = Prepared::new(sample);
    if prep.degenerate() {
        return Ok(0.0);
    }
    Ok(prep.estimates(&[(a, b)], sample.len(), params)[0])
}

pub fn characteristic_matrix(sample: &PairSample, params: &MicParams) -> CharacteristicMatrix {
    let n = sample.len();
    let bound = (n as f64).powf(params.bound_exponent);
    let mut shapes = admissible_shapes(n, params.bound_exponent);
    let small_sample = shapes.is_empty();
    if small_sample {
        shapes.push((2, 2));
    }
    let prep = Prepared::new(sample);
    let values = if prep.degenerate() {
        vec![0.0; shapes.len()]
    } else {
        prep.estimates(&shapes, n, params)
    };
    let entries = shapes
        .into_iter()
        .zip(values)
        .map(|((a, b), i)| ((a, b), (i / (a.min(b) as f64).log2()).clamp(0.0, 1.0)))
        .collect();
    CharacteristicMatrix {
        entries,
        bound,
        small_sample,
    }
}

pub fn mic(sample: &PairSample) -> MicResult {
    mic_with(sample, &MicParams::default())
}

pub fn mic_with(sample: &PairSample, params: &MicParams) -> MicResult {
    let m = characteristic_matrix(sample, params);
    if m.small_sample {
        log::warn!(
            "MIC on {} points: no grid satisfies a*b < {:.2}, using 2x2 only",
            sample.len(),
            m.bound
        );
    }
    let degenerate = {
        let x = Axis::new(sample.x());
        let y = Axis::new(sample.y());
        x.n_groups() < 2 || y.n_groups() < 2
    };
    MicResult {
        value: if degenerate { 0.0 } else { m.max() },
        degenerate,
        small_sample: m.small_sample,
    }
}
