use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered bin boundaries over a bounded metric domain.
///
/// Bin `i` covers `(edges[i], edges[i + 1]]`; the first bin is also closed on
/// the left so every value in `[edges[0], edges[K]]` lands in exactly one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BinSpec {
    edges: Vec<f64>,
}

impl BinSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::InvalidBins(format!(
                "need at least 2 bins (3 edges), got {} edges",
                edges.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidBins("edges must be finite".into()));
        }
        if let Some(i) = edges.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBins(format!(
                "edges not strictly increasing at position {}",
                i + 1
            )));
        }
        Ok(Self { edges })
    }

    /// `bins` equal-width bins on `[lower, upper]`.
    pub fn equal_width(bins: usize, lower: f64, upper: f64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidBins(format!("bin count {bins} < 2")));
        }
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(Error::InvalidBins(format!(
                "bounds [{lower}, {upper}] are not a finite non-empty interval"
            )));
        }
        let width = (upper - lower) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|i| lower + i as f64 * width).collect();
        edges[bins] = upper;
        Self::new(edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn midpoint(&self, bin: usize) -> f64 {
        0.5 * (self.edges[bin] + self.edges[bin + 1])
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower() && value <= self.upper()
    }

    /// Bin index of an in-range value.
    pub fn locate(&self, value: f64) -> Option<usize> {
        if !self.contains(value) {
            return None;
        }
        let first_ge = self.edges.partition_point(|&e| e < value);
        Some(first_ge.saturating_sub(1).min(self.len() - 1))
    }
}

impl TryFrom<Vec<f64>> for BinSpec {
    type Error = Error;

    fn try_from(edges: Vec<f64>) -> Result<Self> {
        Self::new(edges)
    }
}

impl From<BinSpec> for Vec<f64> {
    fn from(spec: BinSpec) -> Self {
        spec.edges
    }
}

/// Per-bin observation counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCounts {
    counts: Vec<u64>,
    total: u64,
}

impl BinCounts {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn zeros(bins: usize) -> Self {
        Self::new(vec![0; bins])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Component-wise sum of two count vectors.
    pub fn merge(&self, other: &BinCounts) -> Result<BinCounts> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(BinCounts::new(
            self.counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }
}

/// What to do with observations outside `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfRange {
    #[default]
    Reject,
    /// Assign to the nearest extreme bin and count it.
    Clamp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClampTally {
    pub below: u64,
    pub above: u64,
}

impl ClampTally {
    pub fn total(&self) -> u64 {
        self.below + self.above
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binned {
    pub counts: BinCounts,
    pub clamped: ClampTally,
}

fn out_of_bounds(bins: &BinSpec, value: f64, index: usize) -> Error {
    Error::OutOfBounds {
        value,
        index,
        lower: bins.lower(),
        upper: bins.upper(),
    }
}

/// Clamps out-of-range data onto the extreme edges (or rejects it), returning
/// data that is guaranteed binnable. NaN is never clampable.
pub fn clamp_to_bins(
    data: &[f64],
    bins: &BinSpec,
    policy: OutOfRange,
) -> Result<(Vec<f64>, ClampTally)> {
    let mut tally = ClampTally::default();
    let mut out = Vec::with_capacity(data.len());
    for (i, &d) in data.iter().enumerate() {
        if bins.contains(d) {
            out.push(d);
            continue;
        }
        match policy {
            OutOfRange::Clamp if d < bins.lower() => {
                tally.below += 1;
                out.push(bins.lower());
            }
            OutOfRange::Clamp if d > bins.upper() => {
                tally.above += 1;
                out.push(bins.upper());
            }
            _ => return Err(out_of_bounds(bins, d, i)),
        }
    }
    Ok((out, tally))
}

/// Counts observations per bin.
pub fn bin_observations(data: &[f64], bins: &BinSpec, policy: OutOfRange) -> Result<Binned> {
    let mut counts = vec![0u64; bins.len()];
    let mut clamped = ClampTally::default();
    for (i, &d) in data.iter().enumerate() {
        let bin = match bins.locate(d) {
            Some(b) => b,
            None => match policy {
                OutOfRange::Clamp if d < bins.lower() => {
                    clamped.below += 1;
                    0
                }
                OutOfRange::Clamp if d > bins.upper() => {
                    clamped.above += 1;
                    bins.len() - 1
                }
                _ => return Err(out_of_bounds(bins, d, i)),
            },
        };
        counts[bin] += 1;
    }
    Ok(Binned {
        counts: BinCounts::new(counts),
        clamped,
    })
}

/// Representative metric value per bin, non-decreasing low to high.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ValueMap {
    values: Vec<f64>,
}

impl ValueMap {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("bin values must be finite".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::MonotonicityViolation { index: i + 1 });
        }
        Ok(Self { values })
    }

    /// Bin midpoints.
    pub fn midpoints(bins: &BinSpec) -> Self {
        Self {
            values: (0..bins.len()).map(|i| bins.midpoint(i)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Translates every value by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + offset).collect(),
        }
    }

    /// Checks that each value lies inside its bin.
    pub fn check_within(&self, bins: &BinSpec) -> Result<()> {
        if self.len() != bins.len() {
            return Err(Error::DimensionMismatch {
                expected: bins.len(),
                found: self.len(),
            });
        }
        let e = bins.edges();
        for (i, &v) in self.values.iter().enumerate() {
            if v < e[i] || v > e[i + 1] {
                return Err(Error::ValueOutsideBin {
                    index: i,
                    value: v,
                    lower: e[i],
                    upper: e[i + 1],
                });
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for ValueMap {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ValueMap> for Vec<f64> {
    fn from(map: ValueMap) -> Self {
        map.values
    }
}

/// Median of the data in each bin, falling back to the bin midpoint for
/// empty bins.
pub fn build_value_map(data: &[f64], bins: &BinSpec) -> Result<ValueMap> {
    let mut sorted = Vec::with_capacity(data.len());
    for (i, &d) in data.iter().enumerate() {
        if !bins.contains(d) {
            return Err(out_of_bounds(bins, d, i));
        }
        sorted.push(d);
    }
    sorted.sort_unstable_by(f64::total_cmp);

    let mut values = Vec::with_capacity(bins.len());
    let mut start = 0;
    for bin in 0..bins.len() {
        let upper = bins.edges()[bin + 1];
        let end = if bin + 1 == bins.len() {
            sorted.len()
        } else {
            start + sorted[start..].partition_point(|&d| d <= upper)
        };
        let run = &sorted[start..end];
        values.push(match run.len() {
            0 => bins.midpoint(bin),
            n if n % 2 == 1 => run[n / 2],
            n => 0.5 * (run[n / 2 - 1] + run[n / 2]),
        });
        start = end;
    }
    let map = ValueMap::new(values)?;
    map.check_within(bins)?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(k: usize) -> BinSpec {
        BinSpec::equal_width(k, 0.0, 1.0).unwrap()
    }

    #[test]
    fn one_datum_per_bin() {
        let b = bin_observations(&[0.1, 0.5, 0.9], &unit(3), OutOfRange::Reject).unwrap();
        assert_eq!(b.counts.counts(), &[1, 1, 1]);
        assert_eq!(b.counts.total(), 3);
    }

    #[test]
    fn empty_input_gives_zero_counts() {
        let b = bin_observations(&[], &unit(4), OutOfRange::Reject).unwrap();
        assert_eq!(b.counts.counts(), &[0, 0, 0, 0]);
        assert_eq!(b.counts.total(), 0);
    }

    #[test]
    fn edges_follow_half_open_convention() {
        let bins = unit(2);
        // Lower extreme closes the first bin, interior edge belongs to the left bin.
        assert_eq!(bins.locate(0.0), Some(0));
        assert_eq!(bins.locate(0.5), Some(0));
        assert_eq!(bins.locate(0.500_000_1), Some(1));
        assert_eq!(bins.locate(1.0), Some(1));
        assert_eq!(bins.locate(1.1), None);
        assert_eq!(bins.locate(f64::NAN), None);
    }

    #[test]
    fn out_of_range_rejected_or_clamped() {
        let bins = unit(3);
        let err = bin_observations(&[0.2, 1.5], &bins, OutOfRange::Reject).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { index: 1, value, .. } if value == 1.5));

        let b = bin_observations(&[-0.3, 0.2, 1.5, 2.0], &bins, OutOfRange::Clamp).unwrap();
        assert_eq!(b.counts.counts(), &[2, 0, 2]);
        assert_eq!(b.clamped, ClampTally { below: 1, above: 2 });

        assert!(bin_observations(&[f64::NAN], &bins, OutOfRange::Clamp).is_err());
    }

    #[test]
    fn bin_spec_validation() {
        assert!(BinSpec::new(vec![0.0, 1.0]).is_err());
        assert!(BinSpec::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(BinSpec::equal_width(1, 0.0, 1.0).is_err());
        assert!(BinSpec::equal_width(4, 1.0, 0.0).is_err());
        let b = BinSpec::equal_width(10, 0.0, 1.0).unwrap();
        assert_eq!(b.len(), 10);
        assert_eq!(b.upper(), 1.0);
    }

    #[test]
    fn value_map_all_midpoints_when_empty() {
        let v = build_value_map(&[], &unit(2)).unwrap();
        assert_eq!(v.values(), &[0.25, 0.75]);
    }

    #[test]
    fn value_map_uses_in_bin_median() {
        let v = build_value_map(&[0.1, 0.2, 0.9], &unit(2)).unwrap();
        assert!((v.values()[0] - 0.15).abs() < 1e-15);
        assert_eq!(v.values()[1], 0.9);

        let v = build_value_map(&[0.6], &unit(3)).unwrap();
        assert!((v.values()[0] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(v.values()[1], 0.6);
        assert!((v.values()[2] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn value_map_rejects_decreasing_values() {
        assert!(matches!(
            ValueMap::new(vec![0.1, 0.3, 0.2]),
            Err(Error::MonotonicityViolation { index: 2 })
        ));
    }

    #[test]
    fn value_map_edge_data_stays_in_bin() {
        // 0.5 is the interior edge and must count toward the left bin.
        let v = build_value_map(&[0.0, 0.5, 0.5, 1.0], &unit(2)).unwrap();
        assert_eq!(v.values(), &[0.5, 1.0]);
    }
}
