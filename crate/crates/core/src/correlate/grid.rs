//! Rank structure of one axis, equipartitions, and grid mutual information.

use crate::error::{Error, Result};

/// Values of one axis in ascending order, with runs of equal values
/// collected into tie groups.
#[derive(Clone, Debug)]
pub(crate) struct Axis {
    /// Original indices sorted by value, ties by index.
    pub order: Vec<usize>,
    /// `group_start[g]..group_start[g + 1]` are the sorted positions of tie group `g`.
    pub group_start: Vec<usize>,
}

impl Axis {
    pub fn new(values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let mut group_start = Vec::with_capacity(values.len() + 1);
        for (pos, &i) in order.iter().enumerate() {
            if pos == 0 || values[i] != values[order[pos - 1]] {
                group_start.push(pos);
            }
        }
        group_start.push(values.len());
        Axis { order, group_start }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn n_groups(&self) -> usize {
        self.group_start.len() - 1
    }

    pub fn group(&self, g: usize) -> &[usize] {
        &self.order[self.group_start[g]..self.group_start[g + 1]]
    }

    /// Bin of each original index when tie groups `cuts[i]..cuts[i+1]` form
    /// bin `i`. `cuts` starts at 0 and ends at `n_groups()`.
    pub fn assign_by_group_cuts(&self, cuts: &[usize]) -> Vec<usize> {
        let mut bins = vec![0; self.len()];
        for (b, w) in cuts.windows(2).enumerate() {
            for g in w[0]..w[1] {
                for &i in self.group(g) {
                    bins[i] = b;
                }
            }
        }
        bins
    }

    /// Rank-based partition into at most `k` bins of near-equal size,
    /// keeping equal values together. Returns the group cut positions.
    pub fn equipartition_cuts(&self, k: usize) -> Vec<usize> {
        let n = self.len();
        let groups = self.n_groups();
        let mut cuts = vec![0];
        let mut bin = 0;
        let mut filled = 0.0_f64;
        let mut consumed = 0usize;
        let mut target = n as f64 / k as f64;
        for g in 0..groups {
            let size = (self.group_start[g + 1] - self.group_start[g]) as f64;
            if filled > 0.0 && bin + 1 < k {
                let must_open = groups - g <= k - 1 - bin;
                let overshoot = (filled + size - target).abs() >= (filled - target).abs();
                if must_open || overshoot {
                    cuts.push(g);
                    bin += 1;
                    filled = 0.0;
                    target = (n - consumed) as f64 / (k - bin) as f64;
                }
            }
            filled += size;
            consumed += size as usize;
        }
        cuts.push(groups);
        cuts
    }
}

/// Result of [`equipartition`].
#[derive(Clone, Debug, PartialEq)]
pub struct Equipartition {
    /// Bin of each input value, in input order.
    pub assignment: Vec<usize>,
    pub bins: usize,
    /// Largest value of every bin but the last; a value `v` falls in bin
    /// `#{edges < v}`.
    pub edges: Vec<f64>,
}

impl Equipartition {
    pub fn bin_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.bins];
        for &b in &self.assignment {
            sizes[b] += 1;
        }
        sizes
    }
}

/// Splits `values` by rank into `k` bins whose sizes differ by at most one
/// when all values are distinct. Equal values always share a bin.
pub fn equipartition(values: &[f64], k: usize) -> Result<Equipartition> {
    if k < 2 || k > values.len() {
        return Err(Error::Parameter(format!(
            "cannot equipartition {} values into {k} bins",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("equipartition needs finite values".into()));
    }
    let axis = Axis::new(values);
    if axis.n_groups() < k {
        return Err(Error::Degenerate(format!(
            "{} distinct values cannot fill {k} bins",
            axis.n_groups()
        )));
    }
    let cuts = axis.equipartition_cuts(k);
    let edges = cuts[1..cuts.len() - 1]
        .iter()
        .map(|&g| values[axis.order[axis.group_start[g] - 1]])
        .collect();
    Ok(Equipartition {
        assignment: axis.assign_by_group_cuts(&cuts),
        bins: cuts.len() - 1,
        edges,
    })
}

/// `c·log2(c)` for integer counts, with `0·log 0 = 0`.
pub(crate) struct XLogX(Vec<f64>);

impl XLogX {
    pub fn new(n: usize) -> Self {
        XLogX(
            (0..=n)
                .map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).log2() })
                .collect(),
        )
    }

    #[inline]
    pub fn get(&self, c: usize) -> f64 {
        self.0[c]
    }

    /// Entropy in bits of a count vector summing to `total`.
    pub fn entropy(&self, counts: impl IntoIterator<Item = usize>, total: usize) -> f64 {
        if total == 0 {
            return 0.0;
        }
        let s: f64 = counts.into_iter().map(|c| self.get(c)).sum();
        (self.get(total) - s) / total as f64
    }
}

/// Mutual information from cell counts and both marginals. Counts are
/// summed in sorted order, so a table and its transpose give identical bits.
pub(crate) fn canonical_mi(
    mut cells: Vec<usize>,
    mut row_sums: Vec<usize>,
    mut col_sums: Vec<usize>,
    n: usize,
    xl: &XLogX,
) -> f64 {
    if n == 0 {
        return 0.0;
    }
    cells.sort_unstable();
    row_sums.sort_unstable();
    col_sums.sort_unstable();
    let h_rows = xl.entropy(row_sums, n);
    let h_cols = xl.entropy(col_sums, n);
    let h_joint = xl.entropy(cells, n);
    (h_rows + h_cols - h_joint).max(0.0)
}

/// Mutual information (bits) of a contingency table of counts.
pub(crate) fn mutual_information_counts(table: &[Vec<usize>]) -> f64 {
    let n: usize = table.iter().flatten().sum();
    let cols = table.first().map_or(0, Vec::len);
    let row_sums = table.iter().map(|r| r.iter().sum::<usize>()).collect();
    let col_sums = (0..cols).map(|j| table.iter().map(|r| r[j]).sum::<usize>()).collect();
    canonical_mi(table.iter().flatten().copied().collect(), row_sums, col_sums, n, &XLogX::new(n))
}

fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

/// Mutual information (bits) of the sample's distribution over the grid
/// whose interior boundaries are `x_edges` × `y_edges`.
pub fn grid_mutual_information(sample: &super::PairSample, x_edges: &[f64], y_edges: &[f64]) -> f64 {
    let mut table = vec![vec![0usize; y_edges.len() + 1]; x_edges.len() + 1];
    for (&x, &y) in sample.x().iter().zip(sample.y()) {
        table[bin_of(x_edges, x)][bin_of(y_edges, y)] += 1;
    }
    mutual_information_counts(&table)
}
