//! Equal-frequency feature binning for histogram split search.

use serde::{Deserialize, Serialize};

use super::column::ColumnView;

/// Upper bin boundaries of one feature. Bin `b` holds values in
/// `(bounds[b-1], bounds[b]]`; the last bin is unbounded above. Missing
/// values go to an extra bin with index `n_bins()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    bounds: Vec<f64>,
}

#[inline]
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

impl BinMapper {
    /// Builds boundaries from (value, count) pairs of distinct present
    /// values. With at most `max_bins` distinct values every value gets its
    /// own bin and boundaries are midpoints between neighbours.
    pub fn from_distinct(distinct: &[(f64, usize)], max_bins: usize) -> Self {
        let max_bins = max_bins.max(1);
        if distinct.len() <= max_bins {
            let bounds = distinct
                .windows(2)
                .map(|w| midpoint(w[0].0, w[1].0))
                .collect();
            return Self { bounds };
        }
        let total: usize = distinct.iter().map(|d| d.1).sum();
        let mut bounds = Vec::with_capacity(max_bins - 1);
        let mut cum = 0usize;
        for (i, &(value, count)) in distinct.iter().enumerate() {
            cum += count;
            if i + 1 == distinct.len() || bounds.len() + 1 >= max_bins {
                break;
            }
            // Cut once the cumulative count reaches the next quantile target.
            let target = (total * (bounds.len() + 1)) as f64 / max_bins as f64;
            if cum as f64 >= target {
                bounds.push(midpoint(value, distinct[i + 1].0));
            }
        }
        Self { bounds }
    }

    pub fn n_bins(&self) -> usize {
        self.bounds.len() + 1
    }

    pub fn missing_bin(&self) -> u32 {
        self.bounds.len() as u32 + 1
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    #[inline]
    pub fn bin(&self, value: f64) -> u32 {
        self.bounds.partition_point(|&b| b < value) as u32
    }
}

/// Sorted distinct present values of a column with their counts.
fn distinct_values(column: &ColumnView<'_>, n_rows: usize) -> Vec<(f64, usize)> {
    let mut values: Vec<f64> = (0..n_rows).filter_map(|r| column.value(r)).collect();
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match distinct.last_mut() {
            Some(last) if last.0 == v => last.1 += 1,
            _ => distinct.push((v, 1)),
        }
    }
    distinct
}

/// A column mapped to bin indices for every row of the training fold.
#[derive(Debug, Clone)]
pub struct BinnedColumn {
    pub mapper: BinMapper,
    pub bins: Vec<u32>,
    /// The value held by each bin when every distinct value has its own
    /// bin; empty otherwise.
    pub levels: Vec<f64>,
}

impl BinnedColumn {
    pub(crate) fn new(column: &ColumnView<'_>, n_rows: usize, max_bins: usize) -> Self {
        let distinct = distinct_values(column, n_rows);
        let mapper = BinMapper::from_distinct(&distinct, max_bins);
        let levels = if distinct.len() <= max_bins.max(1) {
            distinct.iter().map(|d| d.0).collect()
        } else {
            Vec::new()
        };
        let missing = mapper.missing_bin();
        let bins = (0..n_rows)
            .map(|r| column.value(r).map_or(missing, |v| mapper.bin(v)))
            .collect();
        Self {
            mapper,
            bins,
            levels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn few_distinct_values_get_own_bins() {
        let m = BinMapper::from_distinct(&[(1.0, 3), (2.0, 1), (4.0, 2)], 8);
        assert_eq!(m.bounds(), &[1.5, 3.0]);
        assert_eq!(m.bin(1.0), 0);
        assert_eq!(m.bin(1.5), 0);
        assert_eq!(m.bin(2.0), 1);
        assert_eq!(m.bin(4.0), 2);
        assert_eq!(m.bin(100.0), 2);
        assert_eq!(m.missing_bin(), 3);
    }

    #[test]
    fn quantile_bins_cap_the_boundary_count() {
        let distinct: Vec<(f64, usize)> = (0..1000).map(|i| (i as f64, 1)).collect();
        let m = BinMapper::from_distinct(&distinct, 4);
        assert_eq!(m.n_bins(), 4);
        assert_eq!(m.bounds(), &[249.5, 499.5, 749.5]);
    }

    #[test]
    fn skewed_counts_do_not_create_empty_bins() {
        let distinct = vec![(0.0, 900), (1.0, 50), (2.0, 30), (3.0, 20)];
        let m = BinMapper::from_distinct(&distinct, 3);
        assert!(m.n_bins() <= 3);
        let mut seen = vec![0usize; m.n_bins()];
        for &(v, c) in &distinct {
            seen[m.bin(v) as usize] += c;
        }
        assert!(seen.iter().all(|&c| c > 0));
    }

    #[test]
    fn adjacent_floats_midpoint_stays_below_upper() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(m < b && m >= a);
    }
}
